#include "gtan/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <random>

#include "gtan/error.hpp"
#include "gtan/rng.hpp"

namespace gtan::model {

namespace {

constexpr std::array<bool AblationConfig::*, 8> kFlagOrder = {
    &AblationConfig::no_graph,
    &AblationConfig::no_type_matrices,
    &AblationConfig::no_question,
    &AblationConfig::no_respondent,
    &AblationConfig::no_tri_attention,
    &AblationConfig::no_question_attention,
    &AblationConfig::no_respondent_in_answer_attention,
    &AblationConfig::no_respondent_gate,
};

struct FlagName {
  std::string_view long_name;
  bool AblationConfig::*flag;
};

constexpr std::array<FlagName, 8> kLongNames = {{
    {"no_graph", &AblationConfig::no_graph},
    {"no_type_matrices", &AblationConfig::no_type_matrices},
    {"no_question", &AblationConfig::no_question},
    {"no_respondent", &AblationConfig::no_respondent},
    {"no_tri_attention", &AblationConfig::no_tri_attention},
    {"no_question_attention", &AblationConfig::no_question_attention},
    {"no_respondent_in_answer_attention", &AblationConfig::no_respondent_in_answer_attention},
    {"no_respondent_gate", &AblationConfig::no_respondent_gate},
}};

void xavier(Tensor& t, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : t.values()) v = dist(rng);
}

void gaussian(Tensor& t, Rng& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.values()) v = dist(rng);
}

std::vector<double> to_vector(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

std::vector<std::size_t> canonical_order(const graph::QuestionGraph& g,
                                         const corpus::Question& question) {
  std::vector<std::size_t> order(g.num_nodes());
  std::iota(order.begin(), order.end(), 0);
  auto answer_key = [&](std::size_t node) {
    const corpus::Answer& a = question.answers[g.nodes[node].payload];
    return std::tie(a.id, a.tokens, a.respondent, a.votes);
  };
  std::sort(order.begin() + 1, order.begin() + static_cast<std::ptrdiff_t>(g.first_word_node()),
            [&](std::size_t x, std::size_t y) { return answer_key(x) < answer_key(y); });
  std::sort(order.begin() + static_cast<std::ptrdiff_t>(g.first_word_node()), order.end(),
            [&](std::size_t x, std::size_t y) { return g.nodes[x].payload < g.nodes[y].payload; });
  return order;
}

}  // namespace

bool AblationConfig::any() const { return bits() != 0; }

std::uint32_t AblationConfig::bits() const {
  std::uint32_t out = 0;
  for (std::size_t k = 0; k < kFlagOrder.size(); ++k) {
    if (this->*kFlagOrder[k]) out |= 1u << k;
  }
  return out;
}

AblationConfig AblationConfig::from_bits(std::uint32_t bits) {
  AblationConfig config;
  for (std::size_t k = 0; k < kFlagOrder.size(); ++k) config.*kFlagOrder[k] = (bits >> k) & 1u;
  return config;
}

const std::vector<AblationInfo>& ablation_variants() {
  static const std::vector<AblationInfo> variants = {
      {"no_graph", "w/o Graph", &AblationConfig::no_graph},
      {"no_tmat", "w/o T-MAT", &AblationConfig::no_type_matrices},
      {"no_que", "w/o Que", &AblationConfig::no_question},
      {"no_res", "w/o Res", &AblationConfig::no_respondent},
      {"no_tri_att", "w/o Tri-Att", &AblationConfig::no_tri_attention},
      {"no_que_att", "w/o Que-Att", &AblationConfig::no_question_attention},
      {"no_res_att", "w/o Res-Att", &AblationConfig::no_respondent_in_answer_attention},
      {"no_res_gate", "w/o Res-Gate", &AblationConfig::no_respondent_gate},
  };
  return variants;
}

void enable_ablation(AblationConfig& config, std::string_view name) {
  for (const AblationInfo& info : ablation_variants()) {
    if (info.name == name) {
      config.*info.flag = true;
      return;
    }
  }
  for (const FlagName& f : kLongNames) {
    if (f.long_name == name) {
      config.*f.flag = true;
      return;
    }
  }
  fail(ErrorKind::Config, "unknown ablation '" + std::string(name) + "'");
}

std::string describe(const AblationConfig& config) {
  std::string out;
  for (const AblationInfo& info : ablation_variants()) {
    if (config.*info.flag) {
      if (!out.empty()) out += ",";
      out += info.name;
    }
  }
  return out.empty() ? "full" : out;
}

std::vector<ModelParams::Entry> ModelParams::entries() {
  std::vector<Entry> out;
  for (std::size_t t = 0; t < type_weights.size(); ++t) {
    const std::string prefix = "gnn.layer" + std::to_string(t + 1) + ".";
    out.push_back({prefix + "question", &type_weights[t][0]});
    out.push_back({prefix + "answer", &type_weights[t][1]});
    out.push_back({prefix + "word", &type_weights[t][2]});
  }
  out.push_back({"gnn.gate.weight", &gate_weight});
  out.push_back({"gnn.gate.bias", &gate_bias});
  out.push_back({"respondent.gate.weight", &respondent_gate_weight});
  out.push_back({"respondent.gate.bias", &respondent_gate_bias});
  out.push_back({"respondent.table", &respondent_table});
  out.push_back({"question_attention.score", &question_score});
  out.push_back({"question_attention.weight", &question_weight});
  out.push_back({"question_attention.bias", &question_bias});
  out.push_back({"answer_attention.score", &answer_score});
  out.push_back({"answer_attention.weight", &answer_weight});
  out.push_back({"answer_attention.bias", &answer_bias});
  for (std::size_t k = 0; k < fc_weights.size(); ++k) {
    const std::string prefix = "fc" + std::to_string(k + 1) + ".";
    out.push_back({prefix + "weight", &fc_weights[k]});
    out.push_back({prefix + "bias", &fc_biases[k]});
  }
  return out;
}

std::vector<const Tensor*> ModelParams::tensors() const {
  std::vector<const Tensor*> out;
  for (const Entry& e : const_cast<ModelParams*>(this)->entries()) out.push_back(e.tensor);
  return out;
}

Model::Model(ModelConfig config, std::size_t vocab_size, std::vector<std::string> respondents)
    : config_(config), respondents_(std::move(respondents)) {
  if (config_.dim == 0 || config_.att_dim == 0 || config_.fc_layers == 0 ||
      (config_.fc_layers > 1 && config_.hidden == 0)) {
    fail(ErrorKind::Config, "model dimensions and fc_layers must be positive");
  }
  if (vocab_size == 0) fail(ErrorKind::Config, "model needs a nonempty vocabulary");
  for (std::size_t i = 0; i < respondents_.size(); ++i) {
    if (!respondent_rows_.emplace(respondents_[i], i).second) {
      fail(ErrorKind::Config, "duplicate respondent id '" + respondents_[i] + "'");
    }
  }
  words_ = Tensor(vocab_size, config_.dim);
  allocate();
}

void Model::allocate() {
  const std::size_t d = config_.dim;
  const std::size_t att = config_.att_dim;
  params_.type_weights.assign(config_.layers, {Tensor(d, 3 * d), Tensor(d, 3 * d), Tensor(d, 3 * d)});
  params_.gate_weight = Tensor(d, 2 * d);
  params_.gate_bias = Tensor(1, d);
  params_.respondent_gate_weight = Tensor(d, 2 * d);
  params_.respondent_gate_bias = Tensor(1, d);
  params_.respondent_table = Tensor(respondents_.size() + 1, d);
  params_.question_score = Tensor(1, att);
  params_.question_weight = Tensor(att, 2 * d);
  params_.question_bias = Tensor(1, att);
  params_.answer_score = Tensor(1, att);
  params_.answer_weight = Tensor(att, 4 * d);
  params_.answer_bias = Tensor(1, att);
  params_.fc_weights.clear();
  params_.fc_biases.clear();
  std::size_t in = 5 * d;
  for (std::size_t k = 0; k < config_.fc_layers; ++k) {
    const std::size_t out = k + 1 == config_.fc_layers ? 1 : config_.hidden;
    params_.fc_weights.emplace_back(out, in);
    params_.fc_biases.emplace_back(1, out);
    in = out;
  }
}

void Model::initialize(std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::Init);
  for (const ModelParams::Entry& e : params_.entries()) {
    Tensor& t = *e.tensor;
    if (e.name == "respondent.table") {
      gaussian(t, rng, 0.1);
    } else if (e.name.ends_with(".bias")) {
      t.fill(0.0);
    } else {
      xavier(t, rng);
    }
  }
  Rng word_rng = make_rng(seed, Stream::WordEmbeddings);
  gaussian(words_, word_rng, 0.1);
}

std::size_t Model::respondent_row(std::string_view id) const {
  auto it = respondent_rows_.find(std::string(id));
  return it == respondent_rows_.end() ? respondents_.size() : it->second;
}

bool Model::knows_respondent(std::string_view id) const {
  return respondent_rows_.contains(std::string(id));
}

std::vector<const Tensor*> Model::slots() const {
  std::vector<const Tensor*> out = params_.tensors();
  out.push_back(&words_);
  return out;
}

std::vector<Tensor*> Model::mutable_slots() {
  std::vector<Tensor*> out;
  for (const ModelParams::Entry& e : params_.entries()) out.push_back(e.tensor);
  out.push_back(&words_);
  return out;
}

std::size_t Model::word_table_slot() const { return params_.tensors().size(); }

std::vector<std::string> Model::slot_names() const {
  std::vector<std::string> out;
  for (const ModelParams::Entry& e : const_cast<ModelParams&>(params_).entries()) {
    out.push_back(e.name);
  }
  out.emplace_back("word_embeddings");
  return out;
}

PreparedQuestion prepare_question(const corpus::Question& question,
                                  const corpus::TfidfIndex& tfidf, const Model& model) {
  PreparedQuestion p;
  p.question = &question;
  p.graph = graph::normalize_adjacency(graph::build_graph(question, tfidf),
                                       model.config().normalization);
  p.adjacency = p.graph.dense_adjacency();
  if (model.config().ablation.no_question) {
    const std::size_t q = graph::QuestionGraph::question_node;
    for (std::size_t j = 0; j < p.adjacency.cols(); ++j) {
      if (j == q) continue;
      p.adjacency(q, j) = 0.0;
      p.adjacency(j, q) = 0.0;
    }
  }
  for (const corpus::Answer& a : question.answers) {
    p.respondent_rows.push_back(model.respondent_row(a.respondent));
  }
  p.canonical_order = canonical_order(p.graph, question);
  const std::size_t n = p.adjacency.rows();
  p.canonical_adjacency = Tensor(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      p.canonical_adjacency(i, j) = p.adjacency(p.canonical_order[i], p.canonical_order[j]);
    }
  }
  return p;
}

ParamVars record_params(ad::Tape& tape, const Model& model) {
  const ModelParams& p = model.params();
  ParamVars v;
  std::size_t slot = 0;
  auto param = [&](const Tensor& t) { return tape.parameter(t, slot++); };
  for (const auto& layer : p.type_weights) {
    v.type_weights.push_back({param(layer[0]), param(layer[1]), param(layer[2])});
  }
  v.gate_weight = param(p.gate_weight);
  v.gate_bias = param(p.gate_bias);
  v.respondent_gate_weight = param(p.respondent_gate_weight);
  v.respondent_gate_bias = param(p.respondent_gate_bias);
  v.respondent_table = param(p.respondent_table);
  v.question_score = param(p.question_score);
  v.question_weight = param(p.question_weight);
  v.question_bias = param(p.question_bias);
  v.answer_score = param(p.answer_score);
  v.answer_weight = param(p.answer_weight);
  v.answer_bias = param(p.answer_bias);
  for (std::size_t k = 0; k < p.fc_weights.size(); ++k) {
    v.fc_weights.push_back(param(p.fc_weights[k]));
    v.fc_biases.push_back(param(p.fc_biases[k]));
  }
  v.word_embeddings = model.config().train_word_embeddings
                          ? tape.parameter(model.word_embeddings(), slot)
                          : tape.constant_ref(model.word_embeddings());
  return v;
}

ad::Var init_inputs(const graph::QuestionGraph& graph, ad::Var word_table) {
  auto vocab_ids = [&](const std::vector<std::size_t>& positions) {
    std::vector<std::size_t> ids;
    ids.reserve(positions.size());
    for (std::size_t node : positions) ids.push_back(graph.nodes[node].payload);
    return ids;
  };
  auto pooled = [&](const std::vector<std::size_t>& positions, const char* what) {
    if (positions.empty()) fail(ErrorKind::Contract, std::string(what) + " text is empty");
    return ad::mean_rows(ad::lookup(word_table, vocab_ids(positions)));
  };
  std::vector<ad::Var> rows;
  rows.reserve(1 + graph.num_answers() + 1);
  rows.push_back(pooled(graph.question_positions, "question"));
  for (const auto& positions : graph.answer_positions) rows.push_back(pooled(positions, "answer"));
  std::vector<std::size_t> words;
  words.reserve(graph.num_words());
  for (std::size_t node = graph.first_word_node(); node < graph.num_nodes(); ++node) {
    words.push_back(graph.nodes[node].payload);
  }
  if (!words.empty()) rows.push_back(ad::lookup(word_table, words));
  return ad::stack_rows(rows);
}

ad::Var gnn_layer(ad::Var nodes, ad::Var adjacency, const graph::QuestionGraph& graph,
                  const GnnLayerVars& layer, bool share_type_weights, ad::Var* gate_out,
                  std::span<const std::size_t> order) {
  if (nodes.rows() != graph.num_nodes() || adjacency.rows() != graph.num_nodes() ||
      adjacency.cols() != graph.num_nodes()) {
    fail(ErrorKind::Dimension, "gnn_layer: " + std::to_string(graph.num_nodes()) +
                                   "-node graph given node matrix " + nodes.value().shape_string() +
                                   " and adjacency " + adjacency.value().shape_string());
  }
  ad::Var neighbors;
  if (order.empty()) {
    neighbors = ad::matmul(adjacency, nodes);
  } else {
    if (order.size() != graph.num_nodes()) {
      fail(ErrorKind::Dimension, "gnn_layer: node order has " + std::to_string(order.size()) +
                                     " entries for a " + std::to_string(graph.num_nodes()) +
                                     "-node graph");
    }
    std::vector<std::size_t> inverse(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) inverse[order[k]] = k;
    neighbors = ad::lookup(ad::matmul(adjacency, ad::lookup(nodes, order)), inverse);
  }
  const ad::Var features = ad::concat({nodes, neighbors, ad::mul(nodes, neighbors)});
  const std::array<std::pair<std::size_t, std::size_t>, kTypeCount> blocks = {{
      {0, 1},
      {1, graph.first_word_node()},
      {graph.first_word_node(), graph.num_nodes()},
  }};
  std::vector<ad::Var> parts;
  for (std::size_t type = 0; type < kTypeCount; ++type) {
    const auto [begin, end] = blocks[type];
    if (begin == end) continue;
    const ad::Var w = layer.type_weights[share_type_weights ? 0 : type];
    parts.push_back(ad::relu(ad::linear(ad::slice_rows(features, begin, end), w)));
  }
  const ad::Var updated = ad::stack_rows(parts);
  const ad::Var gate =
      ad::sigmoid(ad::linear(ad::concat({updated, nodes}), layer.gate_weight, layer.gate_bias));
  if (gate_out != nullptr) *gate_out = gate;
  return ad::add(nodes, ad::mul(gate, ad::sub(updated, nodes)));
}

ad::Var respondent_gate(ad::Var question, ad::Var answer, ad::Var respondent, ad::Var weight,
                        ad::Var bias, ad::Var* gate_out) {
  const ad::Var gate = ad::sigmoid(ad::linear(ad::concat({question, answer}), weight, bias));
  if (gate_out != nullptr) *gate_out = gate;
  return ad::mul(gate, respondent);
}

AttentionResult additive_attention(ad::Var query, ad::Var words, ad::Var score, ad::Var weight,
                                   ad::Var bias) {
  if (words.rows() == 0) fail(ErrorKind::Contract, "attention over an empty word sequence");
  // W [query, word_j] split into its query and word column blocks, so the
  // query projection is computed once instead of once per word.
  const std::size_t q = query.cols();
  if (weight.cols() != q + words.cols()) {
    fail(ErrorKind::Dimension, "attention: weight " + weight.value().shape_string() +
                                   " does not fit query " + query.value().shape_string() +
                                   " and words " + words.value().shape_string());
  }
  const ad::Var query_part = ad::linear(query, ad::slice_cols(weight, 0, q), bias);
  const ad::Var word_part = ad::linear(words, ad::slice_cols(weight, q, weight.cols()));
  const ad::Var hidden = ad::tanh(ad::add(word_part, ad::repeat_rows(query_part, words.rows())));
  const ad::Var logits = ad::transpose(ad::linear(hidden, score));
  const ad::Var weights = ad::softmax(logits);
  return {ad::matmul(weights, words), weights};
}

ad::Var score_head(ad::Var z, std::span<const ad::Var> weights, std::span<const ad::Var> biases) {
  if (weights.empty() || weights.size() != biases.size()) {
    fail(ErrorKind::Contract, "score head needs matching weight and bias lists");
  }
  if (z.cols() != weights.front().cols()) {
    fail(ErrorKind::Dimension, "score head: input " + z.value().shape_string() +
                                   " does not match first layer " +
                                   weights.front().value().shape_string());
  }
  ad::Var h = z;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    h = ad::linear(h, weights[k], biases[k]);
    if (k + 1 < weights.size()) h = ad::relu(h);
  }
  return h;
}

ad::Var score_answers(ad::Tape& tape, const ParamVars& vars, const Model& model,
                      const PreparedQuestion& prepared, ForwardOutput* trace) {
  const ModelConfig& cfg = model.config();
  const AblationConfig& ab = cfg.ablation;
  const graph::QuestionGraph& g = prepared.graph;
  const std::size_t n = g.num_answers();
  const std::size_t d = cfg.dim;
  if (n == 0) fail(ErrorKind::Contract, "question has no answers");

  ad::Var nodes = init_inputs(g, vars.word_embeddings);
  if (!ab.no_graph && cfg.layers > 0) {
    const ad::Var adjacency = tape.constant_ref(prepared.canonical_adjacency);
    for (std::size_t t = 0; t < cfg.layers; ++t) {
      ad::Var gate;
      nodes = gnn_layer(nodes, adjacency, g,
                        {vars.type_weights[t], vars.gate_weight, vars.gate_bias},
                        ab.no_type_matrices, trace != nullptr ? &gate : nullptr,
                        prepared.canonical_order);
      if (trace != nullptr) {
        const auto values = gate.value().values();
        trace->propagation_gates.insert(trace->propagation_gates.end(), values.begin(),
                                        values.end());
      }
    }
  }

  const ad::Var zero = tape.constant(Tensor(1, d));
  const ad::Var question = ab.no_question ? zero : ad::slice_rows(nodes, 0, 1);
  ad::Var question_words;
  if (!ab.no_question && !ab.no_tri_attention) question_words = ad::lookup(nodes, g.question_positions);
  if (trace != nullptr) {
    trace->question_attention.assign(n, {});
    trace->answer_attention.assign(n, {});
    trace->respondent_gates.assign(n, {});
  }

  std::vector<ad::Var> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t node = g.answer_nodes[i];
    const ad::Var answer = ad::slice_rows(nodes, node, node + 1);
    const std::size_t row = prepared.respondent_rows.at(i);
    const ad::Var respondent =
        ab.no_respondent ? zero : ad::lookup(vars.respondent_table, std::span(&row, 1));

    if (ab.no_tri_attention) {
      rows.push_back(ad::concat({zero, question, zero, answer, respondent}));
      continue;
    }

    ad::Var target_respondent = respondent;
    if (!ab.no_respondent && !ab.no_respondent_gate) {
      ad::Var gate;
      target_respondent = respondent_gate(question, answer, respondent, vars.respondent_gate_weight,
                                          vars.respondent_gate_bias, &gate);
      if (trace != nullptr) trace->respondent_gates[i] = to_vector(gate.value());
    }

    ad::Var question_context;
    if (ab.no_question) {
      question_context = ad::concat({zero, zero});
    } else {
      ad::Var specific;
      if (ab.no_question_attention) {
        specific = ad::mean_rows(question_words);
        if (trace != nullptr) {
          trace->question_attention[i].assign(question_words.rows(),
                                              1.0 / static_cast<double>(question_words.rows()));
        }
      } else {
        const AttentionResult att = additive_attention(answer, question_words, vars.question_score,
                                                       vars.question_weight, vars.question_bias);
        specific = att.summary;
        if (trace != nullptr) trace->question_attention[i] = to_vector(att.weights.value());
      }
      question_context = ad::concat({specific, question});
    }

    const ad::Var respondent_query = ab.no_respondent_in_answer_attention ? zero : target_respondent;
    const ad::Var answer_words = ad::lookup(nodes, g.answer_positions[i]);
    const AttentionResult att =
        additive_attention(ad::concat({question_context, respondent_query}), answer_words,
                           vars.answer_score, vars.answer_weight, vars.answer_bias);
    if (trace != nullptr) trace->answer_attention[i] = to_vector(att.weights.value());
    const ad::Var answer_context = ad::concat({att.summary, answer});
    rows.push_back(ad::concat({question_context, answer_context, target_respondent}));
  }

  const ad::Var scores = score_head(ad::stack_rows(rows), vars.fc_weights, vars.fc_biases);
  if (trace != nullptr) trace->scores = to_vector(scores.value());
  return scores;
}

ForwardOutput forward(const Model& model, const PreparedQuestion& prepared) {
  ad::Tape tape;
  const ParamVars vars = record_params(tape, model);
  ForwardOutput out;
  score_answers(tape, vars, model, prepared, &out);
  return out;
}

}  // namespace gtan::model
