#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gtan/autodiff.hpp"
#include "gtan/corpus.hpp"
#include "gtan/graph.hpp"
#include "gtan/tensor.hpp"

namespace gtan::model {

// Component switches matching the ablation rows of the model.
struct AblationConfig {
  bool no_graph = false;
  bool no_type_matrices = false;
  bool no_question = false;
  bool no_respondent = false;
  bool no_tri_attention = false;
  bool no_question_attention = false;
  bool no_respondent_in_answer_attention = false;
  bool no_respondent_gate = false;

  bool any() const;
  friend bool operator==(const AblationConfig&, const AblationConfig&) = default;

  // Packs the flags into bits in declaration order.
  std::uint32_t bits() const;
  static AblationConfig from_bits(std::uint32_t bits);
};

struct AblationInfo {
  std::string_view name;   // CLI name, e.g. "no_res"
  std::string_view label;  // table row label, e.g. "w/o Res"
  bool AblationConfig::*flag;
};

// The eight single-component variants, in table order.
const std::vector<AblationInfo>& ablation_variants();
// Sets the flag named by `name` (short or long form); throws Config otherwise.
void enable_ablation(AblationConfig& config, std::string_view name);
std::string describe(const AblationConfig& config);

struct ModelConfig {
  std::size_t dim = 64;
  std::size_t att_dim = 64;
  std::size_t hidden = 64;
  std::size_t layers = 2;     // propagation layers T
  std::size_t fc_layers = 2;  // fully-connected layers K
  AblationConfig ablation;
  graph::Normalization normalization = graph::Normalization::None;
  bool train_word_embeddings = false;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Node-type index of the typed transforms: question = 0, answer = 1, word = 2.
inline constexpr std::size_t kTypeCount = 3;

struct ModelParams {
  // Propagation: per layer one dim x 3dim transform per node type, then a
  // shared gate over [updated, previous].
  std::vector<std::array<Tensor, kTypeCount>> type_weights;
  Tensor gate_weight;  // dim x 2dim
  Tensor gate_bias;    // 1 x dim
  // Respondent gate and table; the last table row is the unknown respondent.
  Tensor respondent_gate_weight;  // dim x 2dim
  Tensor respondent_gate_bias;    // 1 x dim
  Tensor respondent_table;        // (respondents + 1) x dim
  // Question attention over question words.
  Tensor question_score;   // 1 x att
  Tensor question_weight;  // att x 2dim
  Tensor question_bias;    // 1 x att
  // Answer attention over answer words.
  Tensor answer_score;   // 1 x att
  Tensor answer_weight;  // att x 4dim
  Tensor answer_bias;    // 1 x att
  // Scoring head: hidden layers then a scalar output.
  std::vector<Tensor> fc_weights;
  std::vector<Tensor> fc_biases;

  struct Entry {
    std::string name;
    Tensor* tensor;
  };
  // Every parameter tensor in declaration order.
  std::vector<Entry> entries();
  std::vector<const Tensor*> tensors() const;
};

// All state needed to score a question: configuration, trainable parameters,
// the word embedding table and the respondent id -> table row mapping.
class Model {
 public:
  Model() = default;
  Model(ModelConfig config, std::size_t vocab_size, std::vector<std::string> respondents);

  // Xavier-uniform weights, zero biases, N(0, 0.1) respondent rows and, unless
  // loaded later, N(0, 0.1) word embeddings.
  void initialize(std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  ModelParams& params() noexcept { return params_; }
  const ModelParams& params() const noexcept { return params_; }
  Tensor& word_embeddings() noexcept { return words_; }
  const Tensor& word_embeddings() const noexcept { return words_; }
  const std::vector<std::string>& respondents() const noexcept { return respondents_; }
  std::size_t vocab_size() const noexcept { return words_.rows(); }

  std::size_t respondent_row(std::string_view id) const;  // unknown -> last row
  bool knows_respondent(std::string_view id) const;

  // Gradient slots: every parameter entry, then the word table.
  std::vector<const Tensor*> slots() const;
  std::vector<Tensor*> mutable_slots();
  std::size_t word_table_slot() const;
  std::vector<std::string> slot_names() const;

 private:
  void allocate();

  ModelConfig config_;
  ModelParams params_;
  Tensor words_;
  std::vector<std::string> respondents_;
  std::unordered_map<std::string, std::size_t> respondent_rows_;
};

// Graph and lookups for one question under a model's configuration.
struct PreparedQuestion {
  const corpus::Question* question = nullptr;
  graph::QuestionGraph graph;
  Tensor adjacency;  // dense, question edges dropped under no_question
  std::vector<std::size_t> respondent_rows;
  // Node order that depends only on content (answers by id and text, words by
  // vocabulary id), and `adjacency` permuted into it. Neighbor sums run in this
  // order so reordering the answers reorders the scores bit for bit.
  std::vector<std::size_t> canonical_order;
  Tensor canonical_adjacency;
};

PreparedQuestion prepare_question(const corpus::Question& question,
                                  const corpus::TfidfIndex& tfidf, const Model& model);

// Parameter leaves of one tape.
struct ParamVars {
  std::vector<std::array<ad::Var, kTypeCount>> type_weights;
  ad::Var gate_weight, gate_bias;
  ad::Var respondent_gate_weight, respondent_gate_bias, respondent_table;
  ad::Var question_score, question_weight, question_bias;
  ad::Var answer_score, answer_weight, answer_bias;
  std::vector<ad::Var> fc_weights, fc_biases;
  ad::Var word_embeddings;
};

ParamVars record_params(ad::Tape& tape, const Model& model);

// --- individual stages -----------------------------------------------------

// Word rows from the table; question and answer rows as mean-pooled words.
ad::Var init_inputs(const graph::QuestionGraph& graph, ad::Var word_table);

struct GnnLayerVars {
  std::array<ad::Var, kTypeCount> type_weights;
  ad::Var gate_weight;
  ad::Var gate_bias;
};

// One propagation step: neighbor sum, typed transform of
// [E, H, E*H] with ReLU, then a sigmoid gate blending new and old rows.
// `gate_out` receives the gate activations when given. With a nonempty
// `order`, `adjacency` is indexed in that node order instead of graph order.
ad::Var gnn_layer(ad::Var nodes, ad::Var adjacency, const graph::QuestionGraph& graph,
                  const GnnLayerVars& layer, bool share_type_weights, ad::Var* gate_out = nullptr,
                  std::span<const std::size_t> order = {});

// sigmoid(W [question, answer] + b) * respondent; `gate_out` gets the gate.
ad::Var respondent_gate(ad::Var question, ad::Var answer, ad::Var respondent, ad::Var weight,
                        ad::Var bias, ad::Var* gate_out = nullptr);

struct AttentionResult {
  ad::Var summary;  // 1 x dim weighted sum of the word rows
  ad::Var weights;  // 1 x length
};

// Additive attention: softmax_j(score . tanh(W [query, word_j] + b)).
AttentionResult additive_attention(ad::Var query, ad::Var words, ad::Var score, ad::Var weight,
                                   ad::Var bias);

// FC layers with ReLU between them and a linear scalar output; rows of `z`
// are scored independently.
ad::Var score_head(ad::Var z, std::span<const ad::Var> weights, std::span<const ad::Var> biases);

// --- full pass -------------------------------------------------------------

struct ForwardOutput {
  std::vector<double> scores;
  std::vector<std::vector<double>> question_attention;  // per answer, over question positions
  std::vector<std::vector<double>> answer_attention;    // per answer, over its positions
  std::vector<std::vector<double>> respondent_gates;    // per answer, per dimension
  std::vector<double> propagation_gates;                // every gate value of every layer
};

// Records the whole forward pass and returns the n x 1 score column.
ad::Var score_answers(ad::Tape& tape, const ParamVars& vars, const Model& model,
                      const PreparedQuestion& prepared, ForwardOutput* trace = nullptr);

ForwardOutput forward(const Model& model, const PreparedQuestion& prepared);

}  // namespace gtan::model
