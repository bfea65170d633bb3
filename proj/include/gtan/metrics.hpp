#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gtan/corpus.hpp"
#include "gtan/model.hpp"

namespace gtan::eval {

// Indices sorted by score, highest first; equal scores keep input order.
std::vector<std::size_t> rank_answers(std::span<const double> scores);

// Any answer whose votes equal the maximum counts as a best answer.
double p_at_1(std::span<const std::size_t> ranking, std::span<const std::int64_t> votes);
double mrr(std::span<const std::size_t> ranking, std::span<const std::int64_t> votes);
// Binary relevance: an answer is relevant when it is among the k answers with
// the most votes (vote ties broken by input order).
double ndcg_at_k(std::span<const std::size_t> ranking, std::span<const std::int64_t> votes,
                 std::size_t k);

struct QuestionMetrics {
  std::string question_id;
  double p_at_1 = 0.0;
  double reciprocal_rank = 0.0;
  double ndcg = 0.0;
};

struct MetricReport {
  double p_at_1 = 0.0;
  double mrr = 0.0;
  double ndcg = 0.0;
  std::size_t ndcg_k = 3;
  std::vector<QuestionMetrics> per_question;
};

QuestionMetrics score_question(const std::string& id, std::span<const double> scores,
                               std::span<const std::int64_t> votes, std::size_t k);
MetricReport aggregate(std::vector<QuestionMetrics> per_question, std::size_t k);

struct EvalOptions {
  std::size_t ndcg_k = 3;
  int threads = 0;      // 0 = OpenMP default
  bool oracle = false;  // score answers by their votes instead of the model
};

MetricReport evaluate_prepared(const model::Model& model,
                               std::span<const model::PreparedQuestion> questions,
                               const EvalOptions& options = {});
MetricReport evaluate(const model::Model& model, std::span<const corpus::Question> questions,
                      const corpus::TfidfIndex& tfidf, const EvalOptions& options = {});

void write_metrics_json(std::ostream& out, const MetricReport& report);
void write_metrics_table(std::ostream& out, const MetricReport& report);
// question_id,P@1,reciprocal_rank,NDCG@k
void write_per_question_csv(std::ostream& out, const MetricReport& report);
// Reads the CSV written above.
std::vector<QuestionMetrics> read_per_question_csv(std::istream& in);

// --- answer similarity by vote quartile ------------------------------------

// Quartile boundaries of a vote-sorted list of n answers: ranks [0, top) are
// Top and ranks [bottom_begin, n) are Bottom.
std::size_t top_quartile_end(std::size_t n);
std::size_t bottom_quartile_begin(std::size_t n);

struct SimilarityReport {
  double top_top = 0.0;
  double top_bottom = 0.0;
  double bottom_bottom = 0.0;
  std::size_t top_top_questions = 0;  // questions contributing to each mean
  std::size_t top_bottom_questions = 0;
  std::size_t bottom_bottom_questions = 0;
  std::size_t top_top_pairs = 0;
  std::size_t top_bottom_pairs = 0;
  std::size_t bottom_bottom_pairs = 0;
  std::size_t questions_used = 0;
  std::size_t questions_skipped = 0;  // fewer than four answers

  // (top_top - bottom_bottom) / bottom_bottom
  double top_over_bottom() const;
};

double cosine(std::span<const double> a, std::span<const double> b);

// Each answer is the mean of its word rows in `embeddings`. Per question the
// pairwise cosines inside each group are averaged; the report averages those
// per-question means.
SimilarityReport analyze_similarity(std::span<const corpus::Question> questions,
                                    const Tensor& embeddings);

void write_similarity_json(std::ostream& out, const SimilarityReport& report);
void write_similarity_table(std::ostream& out, const SimilarityReport& report);

// --- answer delay histogram ------------------------------------------------

struct IntervalHistogram {
  // Upper bounds in minutes: <1, <10, <100, <1000, <10000, <100000, rest.
  std::vector<std::string> labels;
  std::vector<std::size_t> counts;
  std::size_t negative = 0;  // answers timestamped before their question
  std::size_t total = 0;
};

// Throws UnsupportedData when a question or answer lacks a timestamp.
IntervalHistogram interval_histogram(std::span<const corpus::TextQuestion> questions);
void write_histogram(std::ostream& out, const IntervalHistogram& histogram);

// --- paired comparison -----------------------------------------------------

struct SignTest {
  std::size_t wins = 0;    // a > b
  std::size_t losses = 0;  // a < b
  std::size_t ties = 0;
  double p_value = 1.0;    // two-sided exact binomial over non-tied pairs
};

SignTest paired_sign_test(std::span<const double> a, std::span<const double> b);

}  // namespace gtan::eval
