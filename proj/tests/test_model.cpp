#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gtan/gradcheck.hpp"
#include "gtan/model.hpp"
#include "support.hpp"

using namespace gtan;
using namespace gtan::model;
using corpus::Question;
using gtan::test::answer;
using gtan::test::random_tensor;

namespace {

constexpr std::size_t kVocab = 30;

const std::vector<std::string> kRespondents = {"u0", "u1", "u2", "u3", "u4"};

Question random_question(std::mt19937_64& rng, const std::string& id) {
  std::uniform_int_distribution<std::size_t> token(0, kVocab - 1);
  std::uniform_int_distribution<std::size_t> length(1, 6);
  std::uniform_int_distribution<std::size_t> count(1, 5);
  std::uniform_int_distribution<std::size_t> who(0, kRespondents.size());
  Question q{id, {}, std::nullopt, {}};
  for (std::size_t i = length(rng); i > 0; --i) q.tokens.push_back(token(rng));
  for (std::size_t a = count(rng); a > 0; --a) {
    std::vector<std::size_t> t;
    for (std::size_t i = length(rng); i > 0; --i) t.push_back(token(rng));
    const std::size_t r = who(rng);
    q.answers.push_back(answer(id + "a" + std::to_string(a), t,
                               r < kRespondents.size() ? kRespondents[r] : "stranger",
                               static_cast<std::int64_t>(a)));
  }
  return q;
}

corpus::Corpus random_corpus(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  corpus::Corpus out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(random_question(rng, "q" + std::to_string(k)));
  return out;
}

ModelConfig small_config(AblationConfig ablation = {}) {
  ModelConfig c;
  c.dim = 6;
  c.att_dim = 5;
  c.hidden = 4;
  c.ablation = ablation;
  return c;
}

Model make_model(const ModelConfig& config, std::uint64_t seed = 3) {
  Model m(config, kVocab, kRespondents);
  m.initialize(seed);
  // Nonzero biases so no bias gradient or contribution is trivially absent.
  std::mt19937_64 rng(seed + 100);
  for (const ModelParams::Entry& e : m.params().entries()) {
    if (e.name.ends_with(".bias")) *e.tensor = random_tensor(rng, e.tensor->rows(), e.tensor->cols(), -0.3, 0.3);
  }
  return m;
}

std::vector<double> scores_of(const Model& m, const Question& q, const corpus::TfidfIndex& idx) {
  return forward(m, prepare_question(q, idx, m)).scores;
}

Tensor& param(Model& m, const std::string& name) {
  for (const ModelParams::Entry& e : m.params().entries()) {
    if (e.name == name) return *e.tensor;
  }
  throw std::runtime_error("no parameter " + name);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Plain-loop propagation layer used as an independent reference.
Tensor dense_layer(const Tensor& e, const Tensor& a, const std::vector<std::size_t>& type_of,
                   const std::array<Tensor, 3>& w, const Tensor& gw, const Tensor& gb) {
  const std::size_t n = e.rows(), d = e.cols();
  Tensor h(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < d; ++c) h(i, c) += a(i, j) * e(j, c);
  Tensor out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> f(3 * d), u(d);
    for (std::size_t c = 0; c < d; ++c) {
      f[c] = e(i, c);
      f[d + c] = h(i, c);
      f[2 * d + c] = e(i, c) * h(i, c);
    }
    const Tensor& wt = w[type_of[i]];
    for (std::size_t r = 0; r < d; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < 3 * d; ++c) s += wt(r, c) * f[c];
      u[r] = std::max(0.0, s);
    }
    for (std::size_t r = 0; r < d; ++r) {
      double s = gb(0, r);
      for (std::size_t c = 0; c < d; ++c) s += gw(r, c) * u[c] + gw(r, d + c) * e(i, c);
      const double g = sigmoid(s);
      out(i, r) = g * u[r] + (1 - g) * e(i, r);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("input rows are pooled word embeddings") {
  std::mt19937_64 rng(1);
  const Tensor table = random_tensor(rng, 6, 4);
  const Question q{"q", {1, 2}, std::nullopt, {answer("a", {2, 3}, "u", 1), answer("b", {3, 3, 4}, "v", 0)}};
  const auto idx = corpus::compute_tfidf(std::span(&q, 1), 6);
  const graph::QuestionGraph g = graph::build_graph(q, idx);
  ad::Tape tape;
  const Tensor e = init_inputs(g, tape.constant(table)).value();
  REQUIRE(e.rows() == 7);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(e(0, c) == doctest::Approx((table(1, c) + table(2, c)) / 2).epsilon(1e-15));
    CHECK(e(1, c) == doctest::Approx((table(2, c) + table(3, c)) / 2).epsilon(1e-15));
    CHECK(e(2, c) == doctest::Approx((2 * table(3, c) + table(4, c)) / 3).epsilon(1e-15));
    for (std::size_t w = 1; w <= 4; ++w) CHECK(e(2 + w, c) == table(w, c));
  }
}

TEST_CASE("propagation layer") {
  std::mt19937_64 rng(5);
  const corpus::Corpus qs = random_corpus(11, 20);
  const auto idx = corpus::compute_tfidf(qs, kVocab);
  constexpr std::size_t d = 5;

  SUBCASE("zero weights halve the input") {
    const graph::QuestionGraph g = graph::build_graph(qs[0], idx);
    ad::Tape tape;
    const Tensor e = random_tensor(rng, g.num_nodes(), d);
    const ad::Var z = tape.constant(Tensor(d, 3 * d));
    const GnnLayerVars layer{{z, z, z}, tape.constant(Tensor(d, 2 * d)), tape.constant(Tensor(1, d))};
    const Tensor out =
        gnn_layer(tape.constant(e), tape.constant(g.dense_adjacency()), g, layer, false).value();
    for (std::size_t k = 0; k < e.size(); ++k) CHECK(out[k] == 0.5 * e[k]);
  }

  SUBCASE("matches a dense reference, including isolated nodes and shared weights") {
    for (const Question& q : qs) {
      const graph::QuestionGraph g = graph::build_graph(q, idx);
      const std::size_t n = g.num_nodes();
      Tensor a = g.dense_adjacency();
      // Cut the last node loose so only its self-loop remains.
      for (std::size_t j = 0; j < n; ++j) {
        if (j != n - 1) a(n - 1, j) = a(j, n - 1) = 0.0;
      }
      const Tensor e = random_tensor(rng, n, d);
      const std::array<Tensor, 3> w = {random_tensor(rng, d, 3 * d), random_tensor(rng, d, 3 * d),
                                       random_tensor(rng, d, 3 * d)};
      const Tensor gw = random_tensor(rng, d, 2 * d), gb = random_tensor(rng, 1, d);
      std::vector<std::size_t> type_of(n, 2);
      type_of[0] = 0;
      for (std::size_t i : g.answer_nodes) type_of[i] = 1;

      for (bool shared : {false, true}) {
        ad::Tape tape;
        const GnnLayerVars layer{{tape.constant(w[0]), tape.constant(w[1]), tape.constant(w[2])},
                                 tape.constant(gw), tape.constant(gb)};
        const Tensor got = gnn_layer(tape.constant(e), tape.constant(a), g, layer, shared).value();
        const Tensor want = dense_layer(e, a, shared ? std::vector<std::size_t>(n, 0) : type_of,
                                        shared ? std::array<Tensor, 3>{w[0], w[0], w[0]} : w, gw, gb);
        for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-12));

        // Same layer with the neighbor sum run in a shuffled node order.
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        Tensor permuted(n, n);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) permuted(i, j) = a(order[i], order[j]);
        const Tensor reordered =
            gnn_layer(tape.constant(e), tape.constant(permuted), g, layer, shared, nullptr, order).value();
        for (std::size_t k = 0; k < got.size(); ++k) CHECK(reordered[k] == doctest::Approx(got[k]).epsilon(1e-12));
      }
    }
  }

  SUBCASE("shape mismatch") {
    const graph::QuestionGraph g = graph::build_graph(qs[0], idx);
    ad::Tape tape;
    const ad::Var z = tape.constant(Tensor(d, 3 * d));
    const GnnLayerVars layer{{z, z, z}, tape.constant(Tensor(d, 2 * d)), tape.constant(Tensor(1, d))};
    CHECK_THROWS_AS(gnn_layer(tape.constant(Tensor(g.num_nodes() + 1, d)),
                              tape.constant(g.dense_adjacency()), g, layer, false),
                    Error);
  }
}

TEST_CASE("respondent gate") {
  std::mt19937_64 rng(9);
  constexpr std::size_t d = 4;
  ad::Tape tape;
  const Tensor r = random_tensor(rng, 1, d);
  const ad::Var q = tape.constant(random_tensor(rng, 1, d));
  const ad::Var a = tape.constant(random_tensor(rng, 1, d));

  const Tensor half =
      respondent_gate(q, a, tape.constant(r), tape.constant(Tensor(d, 2 * d)), tape.constant(Tensor(1, d))).value();
  for (std::size_t k = 0; k < d; ++k) CHECK(half[k] == 0.5 * r[k]);

  Tensor open(1, d), closed(1, d);
  open.fill(50.0);
  closed.fill(-50.0);
  const Tensor through =
      respondent_gate(q, a, tape.constant(r), tape.constant(Tensor(d, 2 * d)), tape.constant(open)).value();
  const Tensor blocked =
      respondent_gate(q, a, tape.constant(r), tape.constant(Tensor(d, 2 * d)), tape.constant(closed)).value();
  for (std::size_t k = 0; k < d; ++k) {
    CHECK(through[k] == doctest::Approx(r[k]).epsilon(1e-15));
    CHECK(std::abs(blocked[k]) < 1e-20);
  }

  bool bounded = true;
  for (int draw = 0; draw < 1000; ++draw) {
    const Tensor rr = random_tensor(rng, 1, d, -3, 3);
    ad::Var gate;
    const Tensor out = respondent_gate(tape.constant(random_tensor(rng, 1, d, -3, 3)),
                                       tape.constant(random_tensor(rng, 1, d, -3, 3)), tape.constant(rr),
                                       tape.constant(random_tensor(rng, d, 2 * d)),
                                       tape.constant(random_tensor(rng, 1, d)), &gate)
                           .value();
    for (std::size_t k = 0; k < d; ++k) {
      bounded = bounded && std::abs(out[k]) <= std::abs(rr[k]);
      bounded = bounded && gate.value()[k] > 0.0 && gate.value()[k] < 1.0;
    }
  }
  CHECK(bounded);
}

TEST_CASE("additive attention") {
  std::mt19937_64 rng(13);
  constexpr std::size_t d = 4, att = 3;
  ad::Tape tape;
  const ad::Var score = tape.constant(random_tensor(rng, 1, att));
  const ad::Var weight = tape.constant(random_tensor(rng, att, 2 * d));
  const ad::Var bias = tape.constant(random_tensor(rng, 1, att));
  const ad::Var query = tape.constant(random_tensor(rng, 1, d));

  SUBCASE("single word") {
    const Tensor word = random_tensor(rng, 1, d);
    const AttentionResult r = additive_attention(query, tape.constant(word), score, weight, bias);
    CHECK(r.weights.value()[0] == 1.0);
    for (std::size_t k = 0; k < d; ++k) CHECK(r.summary.value()[k] == word[k]);
  }
  SUBCASE("identical words get uniform weight") {
    const Tensor word = random_tensor(rng, 1, d);
    Tensor words(5, d);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t k = 0; k < d; ++k) words(i, k) = word[k];
    const AttentionResult r = additive_attention(query, tape.constant(words), score, weight, bias);
    for (std::size_t i = 0; i < 5; ++i) CHECK(r.weights.value()[i] == doctest::Approx(0.2).epsilon(1e-15));
  }
  SUBCASE("weights depend on the query") {
    const ad::Var words = tape.constant(random_tensor(rng, 6, d));
    const AttentionResult r1 = additive_attention(query, words, score, weight, bias);
    const AttentionResult r2 =
        additive_attention(tape.constant(random_tensor(rng, 1, d)), words, score, weight, bias);
    double s1 = 0, s2 = 0, diff = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      s1 += r1.weights.value()[i];
      s2 += r2.weights.value()[i];
      diff += std::abs(r1.weights.value()[i] - r2.weights.value()[i]);
    }
    CHECK(s1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(diff > 1e-3);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(additive_attention(query, tape.constant(Tensor(0, d)), score, weight, bias), Error);
    CHECK_THROWS_AS(additive_attention(query, tape.constant(Tensor(2, d + 1)), score, weight, bias), Error);
  }
}

TEST_CASE("score head") {
  std::mt19937_64 rng(17);
  ad::Tape tape;
  const ad::Var z = tape.constant(random_tensor(rng, 3, 4));
  {
    const std::vector<ad::Var> w = {tape.constant(Tensor(2, 4)), tape.constant(Tensor(1, 2))};
    const std::vector<ad::Var> b = {tape.constant(Tensor(1, 2)), tape.constant(Tensor(1, 1))};
    const Tensor s = score_head(z, w, b).value();
    REQUIRE(s.rows() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(s[i] == 0.0);
  }
  {
    Tensor out_bias(1, 1);
    out_bias[0] = 0.75;
    const std::vector<ad::Var> w = {tape.constant(random_tensor(rng, 2, 4)), tape.constant(Tensor(1, 2))};
    const std::vector<ad::Var> b = {tape.constant(random_tensor(rng, 1, 2)), tape.constant(out_bias)};
    const Tensor s = score_head(z, w, b).value();
    for (std::size_t i = 0; i < 3; ++i) CHECK(s[i] == 0.75);
  }
  {
    Tensor x(1, 2), w(1, 2), b(1, 1);
    x[0] = 1;
    x[1] = 2;
    w[0] = 3;
    w[1] = 4;
    b[0] = 0.5;
    const std::vector<ad::Var> ws = {tape.constant(w)}, bs = {tape.constant(b)};
    CHECK(score_head(tape.constant(x), ws, bs).value()[0] == 11.5);
    // ReLU between layers: a negative hidden unit contributes nothing.
    Tensor w1(2, 2), w2(1, 2);
    w1(0, 0) = 1;
    w1(1, 1) = -1;
    w2[0] = 1;
    w2[1] = 1;
    const std::vector<ad::Var> ws2 = {tape.constant(w1), tape.constant(w2)};
    const std::vector<ad::Var> bs2 = {tape.constant(Tensor(1, 2)), tape.constant(Tensor(1, 1))};
    CHECK(score_head(tape.constant(x), ws2, bs2).value()[0] == 1.0);
  }
  CHECK_THROWS_AS(score_head(tape.constant(Tensor(1, 3)), std::vector<ad::Var>{tape.constant(Tensor(1, 4))},
                             std::vector<ad::Var>{tape.constant(Tensor(1, 1))}),
                  Error);
}

TEST_CASE("model construction") {
  const Model m(small_config(), kVocab, kRespondents);
  const ModelParams& p = m.params();
  REQUIRE(p.type_weights.size() == 2);
  CHECK(p.type_weights[0][1].shape_string() == "6x18");
  CHECK(p.gate_weight.shape_string() == "6x12");
  CHECK(p.respondent_table.rows() == kRespondents.size() + 1);
  CHECK(p.question_weight.shape_string() == "5x12");
  CHECK(p.answer_weight.shape_string() == "5x24");
  REQUIRE(p.fc_weights.size() == 2);
  CHECK(p.fc_weights[0].shape_string() == "4x30");
  CHECK(p.fc_weights[1].shape_string() == "1x4");
  CHECK(m.respondent_row("u3") == 3);
  CHECK(m.respondent_row("nobody") == kRespondents.size());
  CHECK_FALSE(m.knows_respondent("nobody"));
  CHECK(m.slot_names().size() == m.slots().size());
  CHECK(m.slot_names().back() == "word_embeddings");

  ModelConfig bad = small_config();
  bad.dim = 0;
  CHECK_THROWS_AS(Model(bad, kVocab, kRespondents), Error);
  CHECK_THROWS_AS(Model(small_config(), kVocab, {"a", "a"}), Error);
  CHECK_THROWS_AS(Model(small_config(), 0, kRespondents), Error);

  Model a(small_config(), kVocab, kRespondents), b(small_config(), kVocab, kRespondents);
  a.initialize(7);
  b.initialize(7);
  CHECK(a.params().answer_weight == b.params().answer_weight);
  CHECK(a.word_embeddings() == b.word_embeddings());
  CHECK(a.params().gate_bias[0] == 0.0);
}

TEST_CASE("ablation names") {
  AblationConfig c;
  CHECK(describe(c) == "full");
  enable_ablation(c, "no_res");
  CHECK(c.no_respondent);
  enable_ablation(c, "no_question_attention");
  CHECK(c.no_question_attention);
  CHECK(describe(c) == "no_res,no_que_att");
  CHECK_THROWS_AS(enable_ablation(c, "no_everything"), Error);
  CHECK(ablation_variants().size() == 8);
  for (std::uint32_t bits = 0; bits < 256; ++bits) CHECK(AblationConfig::from_bits(bits).bits() == bits);
}

TEST_CASE("forward invariants") {
  const corpus::Corpus qs = random_corpus(21, 60);
  const auto idx = corpus::compute_tfidf(qs, kVocab);
  std::vector<AblationConfig> variants = {AblationConfig{}};
  for (const AblationInfo& info : ablation_variants()) {
    AblationConfig c;
    c.*info.flag = true;
    variants.push_back(c);
  }
  std::mt19937_64 rng(23);
  for (const AblationConfig& ablation : variants) {
    CAPTURE(describe(ablation));
    const Model m = make_model(small_config(ablation));
    bool equivariant = true, normalized = true, gates_open = true;
    for (const Question& q : qs) {
      const ForwardOutput out = forward(m, prepare_question(q, idx, m));
      REQUIRE(out.scores.size() == q.answers.size());
      for (const auto* rows : {&out.question_attention, &out.answer_attention}) {
        for (const auto& row : *rows) {
          if (row.empty()) continue;
          normalized = normalized && std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) <= 1e-9;
        }
      }
      for (const auto& g : out.respondent_gates)
        for (double v : g) gates_open = gates_open && v > 0.0 && v < 1.0;
      for (double v : out.propagation_gates) gates_open = gates_open && v > 0.0 && v < 1.0;

      std::vector<std::size_t> perm(q.answers.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      Question shuffled = q;
      for (std::size_t i = 0; i < perm.size(); ++i) shuffled.answers[i] = q.answers[perm[i]];
      const std::vector<double> s = scores_of(m, shuffled, idx);
      for (std::size_t i = 0; i < perm.size(); ++i) equivariant = equivariant && s[i] == out.scores[perm[i]];
    }
    CHECK(equivariant);
    CHECK(normalized);
    CHECK(gates_open);
  }
}

TEST_CASE("ablation semantics") {
  const corpus::Corpus qs = random_corpus(31, 30);
  const auto idx = corpus::compute_tfidf(qs, kVocab);
  std::mt19937_64 rng(37);

  // True when perturbing `name` leaves every score unchanged.
  auto insensitive = [&](AblationConfig ablation, const std::string& name) {
    Model m = make_model(small_config(ablation));
    std::vector<std::vector<double>> before;
    for (const Question& q : qs) before.push_back(scores_of(m, q, idx));
    Tensor& t = param(m, name);
    t = random_tensor(rng, t.rows(), t.cols());
    for (std::size_t k = 0; k < qs.size(); ++k) {
      if (scores_of(m, qs[k], idx) != before[k]) return false;
    }
    return true;
  };
  AblationConfig full;
  CHECK_FALSE(insensitive(full, "respondent.table"));
  CHECK_FALSE(insensitive(full, "respondent.gate.weight"));
  CHECK_FALSE(insensitive(full, "gnn.layer1.word"));
  CHECK_FALSE(insensitive(full, "question_attention.weight"));

  AblationConfig c;
  c.no_respondent = true;
  CHECK(insensitive(c, "respondent.table"));
  c = {};
  c.no_respondent_gate = true;
  CHECK(insensitive(c, "respondent.gate.weight"));
  CHECK_FALSE(insensitive(c, "respondent.table"));
  c = {};
  c.no_type_matrices = true;
  CHECK(insensitive(c, "gnn.layer1.answer"));
  CHECK(insensitive(c, "gnn.layer2.word"));
  CHECK_FALSE(insensitive(c, "gnn.layer1.question"));
  c = {};
  c.no_graph = true;
  CHECK(insensitive(c, "gnn.layer1.question"));
  CHECK(insensitive(c, "gnn.gate.weight"));
  c = {};
  c.no_tri_attention = true;
  CHECK(insensitive(c, "question_attention.weight"));
  CHECK(insensitive(c, "answer_attention.weight"));
  CHECK(insensitive(c, "respondent.gate.bias"));
  c = {};
  c.no_question_attention = true;
  CHECK(insensitive(c, "question_attention.score"));
  c = {};
  c.no_question = true;
  CHECK(insensitive(c, "question_attention.weight"));

  SUBCASE("uniform question weights without question attention") {
    AblationConfig a;
    a.no_question_attention = true;
    const Model m = make_model(small_config(a));
    const ForwardOutput out = forward(m, prepare_question(qs[0], idx, m));
    for (const auto& row : out.question_attention)
      for (double v : row) CHECK(v == 1.0 / static_cast<double>(qs[0].tokens.size()));
  }
  SUBCASE("respondent leaves answer attention alone when left out of it") {
    AblationConfig a;
    a.no_respondent_in_answer_attention = true;
    Model m = make_model(small_config(a));
    const ForwardOutput before = forward(m, prepare_question(qs[1], idx, m));
    Tensor& t = param(m, "respondent.table");
    t = random_tensor(rng, t.rows(), t.cols());
    const ForwardOutput after = forward(m, prepare_question(qs[1], idx, m));
    CHECK(after.answer_attention == before.answer_attention);
    CHECK(after.scores != before.scores);
  }
  SUBCASE("question text is invisible without the question") {
    AblationConfig a;
    a.no_question = true;
    const Model m = make_model(small_config(a));
    Question q = qs[2];
    const std::vector<double> before = scores_of(m, q, idx);
    q.tokens = {29, 28, 27, 26};
    const std::vector<double> after = scores_of(m, q, idx);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(after[i] == doctest::Approx(before[i]).epsilon(1e-12));
    CHECK(forward(m, prepare_question(q, idx, m)).question_attention[0].empty());
  }
}

TEST_CASE("zero propagation layers skip the graph") {
  const corpus::Corpus qs = random_corpus(41, 20);
  const auto idx = corpus::compute_tfidf(qs, kVocab);
  AblationConfig no_graph;
  no_graph.no_graph = true;
  const Model reference = make_model(small_config(no_graph));
  ModelConfig flat = small_config();
  flat.layers = 0;
  Model m(flat, kVocab, kRespondents);
  for (const ModelParams::Entry& e : m.params().entries()) {
    *e.tensor = param(const_cast<Model&>(reference), e.name);
  }
  m.word_embeddings() = reference.word_embeddings();
  for (const Question& q : qs) {
    const ForwardOutput out = forward(m, prepare_question(q, idx, m));
    CHECK(out.propagation_gates.empty());
    CHECK(out.scores == scores_of(reference, q, idx));
  }
}

TEST_CASE("scaling the output layer keeps the ranking") {
  const corpus::Corpus qs = random_corpus(43, 30);
  const auto idx = corpus::compute_tfidf(qs, kVocab);
  Model m = make_model(small_config());
  std::vector<std::vector<double>> before;
  for (const Question& q : qs) before.push_back(scores_of(m, q, idx));
  for (Tensor* t : {&m.params().fc_weights.back(), &m.params().fc_biases.back()})
    for (double& v : t->values()) v *= 3.0;
  for (std::size_t k = 0; k < qs.size(); ++k) {
    const std::vector<double> after = scores_of(m, qs[k], idx);
    for (std::size_t i = 0; i < after.size(); ++i) {
      CHECK(after[i] == doctest::Approx(3.0 * before[k][i]).epsilon(1e-12));
      for (std::size_t j = 0; j < after.size(); ++j) {
        if (before[k][i] < before[k][j]) CHECK(after[i] < after[j]);
      }
    }
  }
  for (Tensor* t : {&m.params().fc_weights.back(), &m.params().fc_biases.back()}) t->fill(0.0);
  for (const Question& q : qs)
    for (double s : scores_of(m, q, idx)) CHECK(s == 0.0);
}

TEST_CASE("gradient check over every variant") {
  gradcheck::Options base;
  std::vector<gradcheck::Options> runs = {base};
  for (const AblationInfo& info : ablation_variants()) {
    gradcheck::Options o = base;
    o.ablation.*info.flag = true;
    runs.push_back(o);
  }
  gradcheck::Options normalized = base;
  normalized.normalization = graph::Normalization::RowL1;
  runs.push_back(normalized);
  gradcheck::Options other_seed = base;
  other_seed.seed = 5;
  runs.push_back(other_seed);
  for (const gradcheck::Options& o : runs) {
    CAPTURE(describe(o.ablation));
    const gradcheck::Report r = gradcheck::run(o);
    CAPTURE(r.worst_group);
    CHECK(r.max_relative_error < 1e-4);
    CHECK(r.passed);
  }
}
