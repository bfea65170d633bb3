#include "gtan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gtan/error.hpp"
#include "gtan/kernels.hpp"

namespace gtan::eval {

namespace {

void check_lengths(std::span<const std::size_t> ranking, std::span<const std::int64_t> votes) {
  if (ranking.size() != votes.size() || ranking.empty()) {
    fail(ErrorKind::Contract, "ranking of " + std::to_string(ranking.size()) +
                                  " answers given " + std::to_string(votes.size()) + " votes");
  }
}

std::int64_t max_votes(std::span<const std::int64_t> votes) {
  return *std::max_element(votes.begin(), votes.end());
}

// Indices by votes descending, ties in input order.
std::vector<std::size_t> vote_order(std::span<const std::int64_t> votes) {
  std::vector<std::size_t> order(votes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return votes[a] > votes[b]; });
  return order;
}

}  // namespace

std::vector<std::size_t> rank_answers(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double p_at_1(std::span<const std::size_t> ranking, std::span<const std::int64_t> votes) {
  check_lengths(ranking, votes);
  return votes[ranking[0]] == max_votes(votes) ? 1.0 : 0.0;
}

double mrr(std::span<const std::size_t> ranking, std::span<const std::int64_t> votes) {
  check_lengths(ranking, votes);
  const std::int64_t best = max_votes(votes);
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    if (votes[ranking[r]] == best) return 1.0 / static_cast<double>(r + 1);
  }
  return 0.0;
}

double ndcg_at_k(std::span<const std::size_t> ranking, std::span<const std::int64_t> votes,
                 std::size_t k) {
  check_lengths(ranking, votes);
  if (k == 0) fail(ErrorKind::Contract, "NDCG cutoff must be at least 1");
  const std::size_t depth = std::min(k, ranking.size());
  const std::vector<std::size_t> ideal = vote_order(votes);
  std::vector<bool> relevant(votes.size(), false);
  for (std::size_t i = 0; i < depth; ++i) relevant[ideal[i]] = true;
  double dcg = 0.0;
  double idcg = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    const double discount = 1.0 / std::log2(static_cast<double>(i + 2));
    if (relevant[ranking[i]]) dcg += discount;
    idcg += discount;
  }
  return dcg / idcg;
}

QuestionMetrics score_question(const std::string& id, std::span<const double> scores,
                               std::span<const std::int64_t> votes, std::size_t k) {
  const std::vector<std::size_t> ranking = rank_answers(scores);
  return {id, p_at_1(ranking, votes), mrr(ranking, votes), ndcg_at_k(ranking, votes, k)};
}

MetricReport aggregate(std::vector<QuestionMetrics> per_question, std::size_t k) {
  if (per_question.empty()) fail(ErrorKind::Contract, "no questions to evaluate");
  MetricReport report;
  report.ndcg_k = k;
  for (const QuestionMetrics& q : per_question) {
    report.p_at_1 += q.p_at_1;
    report.mrr += q.reciprocal_rank;
    report.ndcg += q.ndcg;
  }
  const auto n = static_cast<double>(per_question.size());
  report.p_at_1 /= n;
  report.mrr /= n;
  report.ndcg /= n;
  report.per_question = std::move(per_question);
  return report;
}

MetricReport evaluate_prepared(const model::Model& model,
                               std::span<const model::PreparedQuestion> questions,
                               const EvalOptions& options) {
  if (questions.empty()) fail(ErrorKind::Corpus, "cannot evaluate an empty split");
  std::vector<QuestionMetrics> rows(questions.size());
  const int threads = options.threads > 0 ? options.threads : kernels::max_threads();
  // Exceptions must not escape an OpenMP region; the first one is rethrown.
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::size_t i = 0; i < questions.size(); ++i) {
    try {
      const corpus::Question& q = *questions[i].question;
      std::vector<std::int64_t> votes;
      for (const corpus::Answer& a : q.answers) votes.push_back(a.votes);
      std::vector<double> scores;
      if (options.oracle) {
        scores.assign(votes.begin(), votes.end());
      } else {
        scores = model::forward(model, questions[i]).scores;
      }
      rows[i] = score_question(q.id, scores, votes, options.ndcg_k);
    } catch (...) {
#pragma omp critical(gtan_eval_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return aggregate(std::move(rows), options.ndcg_k);
}

MetricReport evaluate(const model::Model& model, std::span<const corpus::Question> questions,
                      const corpus::TfidfIndex& tfidf, const EvalOptions& options) {
  std::vector<model::PreparedQuestion> prepared;
  prepared.reserve(questions.size());
  for (const corpus::Question& q : questions) {
    prepared.push_back(model::prepare_question(q, tfidf, model));
  }
  return evaluate_prepared(model, prepared, options);
}

void write_metrics_json(std::ostream& out, const MetricReport& report) {
  nlohmann::json j;
  j["questions"] = report.per_question.size();
  j["p_at_1"] = report.p_at_1;
  j["mrr"] = report.mrr;
  j["ndcg_k"] = report.ndcg_k;
  j["ndcg"] = report.ndcg;
  out << j.dump() << '\n';
}

void write_metrics_table(std::ostream& out, const MetricReport& report) {
  const std::string ndcg = "NDCG@" + std::to_string(report.ndcg_k);
  out << std::left << std::setw(12) << "Questions" << std::setw(10) << "P@1" << std::setw(10)
      << "MRR" << ndcg << '\n';
  out << std::setw(12) << report.per_question.size() << std::fixed << std::setprecision(4)
      << std::setw(10) << report.p_at_1 << std::setw(10) << report.mrr << report.ndcg << '\n';
  out << std::defaultfloat << std::right;
}

void write_per_question_csv(std::ostream& out, const MetricReport& report) {
  out << "question_id,P@1,reciprocal_rank,NDCG@" << report.ndcg_k << '\n';
  const auto precision = out.precision(17);
  for (const QuestionMetrics& q : report.per_question) {
    out << q.question_id << ',' << q.p_at_1 << ',' << q.reciprocal_rank << ',' << q.ndcg << '\n';
  }
  out.precision(precision);
}

std::vector<QuestionMetrics> read_per_question_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("question_id,")) {
    fail(ErrorKind::Parse, "per-question CSV lacks its header line");
  }
  std::vector<QuestionMetrics> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    QuestionMetrics q;
    std::string p1, rr, nd;
    if (!std::getline(ss, q.question_id, ',') || !std::getline(ss, p1, ',') ||
        !std::getline(ss, rr, ',') || !std::getline(ss, nd)) {
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected 4 fields");
    }
    try {
      q.p_at_1 = std::stod(p1);
      q.reciprocal_rank = std::stod(rr);
      q.ndcg = std::stod(nd);
    } catch (const std::exception&) {
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": non-numeric metric");
    }
    rows.push_back(std::move(q));
  }
  return rows;
}

// --- similarity ------------------------------------------------------------

std::size_t top_quartile_end(std::size_t n) { return (n + 3) / 4; }
std::size_t bottom_quartile_begin(std::size_t n) { return (3 * n) / 4; }

double SimilarityReport::top_over_bottom() const {
  return bottom_bottom == 0.0 ? 0.0 : (top_top - bottom_bottom) / bottom_bottom;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::Dimension, "cosine of vectors of length " + std::to_string(a.size()) +
                                   " and " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

SimilarityReport analyze_similarity(std::span<const corpus::Question> questions,
                                    const Tensor& embeddings) {
  SimilarityReport report;
  const std::size_t d = embeddings.cols();
  struct Accumulator {
    double sum = 0.0;
    std::size_t questions = 0;
    std::size_t pairs = 0;
  };
  Accumulator tt, tb, bb;

  auto mean_pair = [](const auto& pairs_of, Accumulator& acc) {
    double total = 0.0;
    std::size_t count = 0;
    pairs_of([&](double c) {
      total += c;
      ++count;
    });
    if (count == 0) return;
    acc.sum += total / static_cast<double>(count);
    acc.questions += 1;
    acc.pairs += count;
  };

  for (const corpus::Question& q : questions) {
    const std::size_t n = q.answers.size();
    if (n < 4) {
      ++report.questions_skipped;
      continue;
    }
    ++report.questions_used;
    std::vector<std::int64_t> votes;
    for (const corpus::Answer& a : q.answers) votes.push_back(a.votes);
    const std::vector<std::size_t> order = vote_order(votes);

    std::vector<std::vector<double>> pooled(n, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      const auto& tokens = q.answers[i].tokens;
      for (std::size_t t : tokens) {
        if (t >= embeddings.rows()) {
          fail(ErrorKind::Index, "token " + std::to_string(t) + " outside embedding table of " +
                                     std::to_string(embeddings.rows()) + " rows");
        }
        const auto row = embeddings.row(t);
        for (std::size_t c = 0; c < d; ++c) pooled[i][c] += row[c];
      }
      if (!tokens.empty()) {
        for (double& v : pooled[i]) v /= static_cast<double>(tokens.size());
      }
    }

    const std::size_t top_end = top_quartile_end(n);
    const std::size_t bottom_begin = bottom_quartile_begin(n);
    auto sim = [&](std::size_t r1, std::size_t r2) {
      return cosine(pooled[order[r1]], pooled[order[r2]]);
    };
    mean_pair(
        [&](auto emit) {
          for (std::size_t a = 0; a < top_end; ++a)
            for (std::size_t b = a + 1; b < top_end; ++b) emit(sim(a, b));
        },
        tt);
    mean_pair(
        [&](auto emit) {
          for (std::size_t a = 0; a < top_end; ++a)
            for (std::size_t b = bottom_begin; b < n; ++b) emit(sim(a, b));
        },
        tb);
    mean_pair(
        [&](auto emit) {
          for (std::size_t a = bottom_begin; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) emit(sim(a, b));
        },
        bb);
  }

  auto mean = [](const Accumulator& acc) {
    return acc.questions == 0 ? 0.0 : acc.sum / static_cast<double>(acc.questions);
  };
  report.top_top = mean(tt);
  report.top_bottom = mean(tb);
  report.bottom_bottom = mean(bb);
  report.top_top_questions = tt.questions;
  report.top_bottom_questions = tb.questions;
  report.bottom_bottom_questions = bb.questions;
  report.top_top_pairs = tt.pairs;
  report.top_bottom_pairs = tb.pairs;
  report.bottom_bottom_pairs = bb.pairs;
  return report;
}

void write_similarity_json(std::ostream& out, const SimilarityReport& r) {
  nlohmann::json j;
  j["top_top"] = r.top_top;
  j["top_bottom"] = r.top_bottom;
  j["bottom_bottom"] = r.bottom_bottom;
  j["top_top_pairs"] = r.top_top_pairs;
  j["top_bottom_pairs"] = r.top_bottom_pairs;
  j["bottom_bottom_pairs"] = r.bottom_bottom_pairs;
  j["questions_used"] = r.questions_used;
  j["questions_skipped"] = r.questions_skipped;
  j["top_over_bottom"] = r.top_over_bottom();
  out << j.dump() << '\n';
}

void write_similarity_table(std::ostream& out, const SimilarityReport& r) {
  out << std::left << std::setw(16) << "Group" << std::setw(12) << "Mean cos" << "Pairs\n";
  out << std::fixed << std::setprecision(4);
  out << std::setw(16) << "Top-Top" << std::setw(12) << r.top_top << r.top_top_pairs << '\n';
  out << std::setw(16) << "Top-Bottom" << std::setw(12) << r.top_bottom << r.top_bottom_pairs
      << '\n';
  out << std::setw(16) << "Bottom-Bottom" << std::setw(12) << r.bottom_bottom
      << r.bottom_bottom_pairs << '\n';
  out << "questions used " << r.questions_used << ", skipped " << r.questions_skipped
      << ", top over bottom " << std::setprecision(1) << 100.0 * r.top_over_bottom() << "%\n";
  out << std::defaultfloat << std::right;
}

// --- intervals -------------------------------------------------------------

IntervalHistogram interval_histogram(std::span<const corpus::TextQuestion> questions) {
  IntervalHistogram h;
  h.labels = {"<1", "<10", "<100", "<1000", "<10000", "<100000", ">=100000"};
  h.counts.assign(h.labels.size(), 0);
  for (const corpus::TextQuestion& q : questions) {
    if (!q.timestamp) {
      fail(ErrorKind::UnsupportedData, "question " + q.id + " has no timestamp");
    }
    for (const corpus::TextAnswer& a : q.answers) {
      if (!a.timestamp) {
        fail(ErrorKind::UnsupportedData, "answer " + a.id + " has no timestamp");
      }
      const std::int64_t delay = *a.timestamp - *q.timestamp;
      ++h.total;
      if (delay < 0) {
        ++h.negative;
        continue;
      }
      std::size_t bucket = 0;
      std::int64_t bound = 1;
      while (bucket + 1 < h.counts.size() && delay >= bound) {
        ++bucket;
        bound *= 10;
      }
      ++h.counts[bucket];
    }
  }
  return h;
}

void write_histogram(std::ostream& out, const IntervalHistogram& h) {
  out << std::left << std::setw(12) << "Minutes" << std::setw(10) << "Answers" << "Share\n";
  out << std::fixed << std::setprecision(4);
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double share = h.total == 0 ? 0.0 : static_cast<double>(h.counts[b]) / h.total;
    out << std::setw(12) << h.labels[b] << std::setw(10) << h.counts[b] << share << '\n';
  }
  if (h.negative > 0) out << "negative delays " << h.negative << '\n';
  out << std::defaultfloat << std::right;
}

// --- sign test -------------------------------------------------------------

SignTest paired_sign_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::Dimension, "paired test given " + std::to_string(a.size()) + " and " +
                                   std::to_string(b.size()) + " values");
  }
  SignTest t;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) {
      ++t.wins;
    } else if (a[i] < b[i]) {
      ++t.losses;
    } else {
      ++t.ties;
    }
  }
  const std::size_t m = t.wins + t.losses;
  if (m == 0) return t;
  const std::size_t k = std::min(t.wins, t.losses);
  const double log_half = static_cast<double>(m) * std::log(0.5);
  double tail = 0.0;
  for (std::size_t i = 0; i <= k; ++i) {
    tail += std::exp(std::lgamma(m + 1.0) - std::lgamma(i + 1.0) - std::lgamma(m - i + 1.0) +
                     log_half);
  }
  t.p_value = std::min(1.0, 2.0 * tail);
  return t;
}

}  // namespace gtan::eval
