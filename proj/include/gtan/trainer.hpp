#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gtan/autodiff.hpp"
#include "gtan/corpus.hpp"
#include "gtan/metrics.hpp"
#include "gtan/model.hpp"
#include "gtan/rng.hpp"

namespace gtan::train {

using Pair = std::pair<std::size_t, std::size_t>;  // (better, worse)

// Every (i, j) with votes[i] > votes[j], in lexicographic order. With
// max_pairs > 0 and more pairs than that, a uniform subset of that size is
// drawn from `rng` (kept in lexicographic order).
std::vector<Pair> make_pairs(std::span<const std::int64_t> votes, std::size_t max_pairs = 0,
                             Rng* rng = nullptr);
std::vector<Pair> make_pairs(const corpus::Question& question, std::size_t max_pairs = 0,
                             Rng* rng = nullptr);

// sum over pairs of max(0, margin + s_j - s_i), recorded on the scores' tape.
ad::Var question_loss(ad::Var scores, std::span<const Pair> pairs, double margin);
// Same sum on plain values.
double hinge_loss(std::span<const double> scores, std::span<const Pair> pairs, double margin);

struct TrainConfig {
  double margin = 1.0;
  double learning_rate = 0.0005;
  std::size_t epochs = 50;
  std::size_t patience = 10;   // 0 disables early stopping
  std::size_t max_pairs = 0;   // 0 = every pair
  std::size_t batch_size = 1;  // questions summed per optimizer step
  double clip_norm = 5.0;      // 0 disables clipping
  int threads = 1;             // forward/backward workers inside a batch
  int eval_threads = 0;        // 0 = OpenMP default
  std::size_t ndcg_k = 3;
  bool select_best = true;     // restore the best-validation epoch at the end
  std::uint64_t seed = 42;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean loss over questions with pairs
  std::size_t steps = 0;
  double validation_p_at_1 = 0.0;
  double validation_mrr = 0.0;
  double validation_ndcg = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

// Deterministic part of a run: equal seeds and data give equal reports.
struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t selected_epoch = 0;
  double best_validation_mrr = 0.0;
  std::size_t skipped_questions = 0;  // training questions without a vote pair
  bool stopped_early = false;

  friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

struct TrainTiming {
  double seconds = 0.0;
  double seconds_per_question = 0.0;  // per processed training question
};

struct TrainResult {
  model::Model model;
  TrainReport report;
  TrainTiming timing;
};

// Called after every epoch with the current (not the best) model; returning
// false stops training.
using EpochCallback = std::function<bool(const EpochRecord&, const model::Model&)>;

// `model` is used as the starting point and must already be initialized.
TrainResult train(model::Model model, std::span<const corpus::Question> train_questions,
                  std::span<const corpus::Question> validation_questions,
                  const corpus::TfidfIndex& tfidf, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Gradient of the question's pairwise loss for every trainable slot of
// `model`, plus the loss itself.
struct QuestionGradient {
  double loss = 0.0;
  std::vector<Tensor> grads;
};
QuestionGradient question_gradient(const model::Model& model,
                                   const model::PreparedQuestion& prepared,
                                   std::span<const Pair> pairs, double margin);

// Parameter tensors updated by training: every entry, plus the word table
// when it is trainable.
std::vector<const Tensor*> trainable_slots(const model::Model& model);
std::vector<Tensor*> trainable_slots(model::Model& model);

void write_epoch_json(std::ostream& out, const EpochRecord& record);
void write_report_jsonl(std::ostream& out, const TrainReport& report);
void write_summary(std::ostream& out, const TrainReport& report, const TrainTiming& timing);

}  // namespace gtan::train
