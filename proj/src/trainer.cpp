#include "gtan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <iterator>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "gtan/adam.hpp"
#include "gtan/error.hpp"

namespace gtan::train {

std::vector<Pair> make_pairs(std::span<const std::int64_t> votes, std::size_t max_pairs,
                             Rng* rng) {
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    for (std::size_t j = 0; j < votes.size(); ++j) {
      if (votes[i] > votes[j]) pairs.emplace_back(i, j);
    }
  }
  if (max_pairs > 0 && pairs.size() > max_pairs) {
    if (rng == nullptr) fail(ErrorKind::Contract, "pair subsampling needs a random generator");
    std::vector<Pair> kept;
    kept.reserve(max_pairs);
    std::sample(pairs.begin(), pairs.end(), std::back_inserter(kept), max_pairs, *rng);
    pairs = std::move(kept);
  }
  return pairs;
}

std::vector<Pair> make_pairs(const corpus::Question& question, std::size_t max_pairs, Rng* rng) {
  std::vector<std::int64_t> votes;
  votes.reserve(question.answers.size());
  for (const corpus::Answer& a : question.answers) votes.push_back(a.votes);
  return make_pairs(votes, max_pairs, rng);
}

ad::Var question_loss(ad::Var scores, std::span<const Pair> pairs, double margin) {
  if (scores.cols() != 1) {
    fail(ErrorKind::Dimension, "scores must be a column, got " + scores.value().shape_string());
  }
  if (pairs.empty()) fail(ErrorKind::Contract, "question_loss needs at least one pair");
  std::vector<std::size_t> better, worse;
  better.reserve(pairs.size());
  worse.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    better.push_back(i);
    worse.push_back(j);
  }
  const ad::Var gap = ad::sub(ad::lookup(scores, worse), ad::lookup(scores, better));
  return ad::sum(ad::relu(ad::add_scalar(gap, margin)));
}

double hinge_loss(std::span<const double> scores, std::span<const Pair> pairs, double margin) {
  double total = 0.0;
  for (const auto& [i, j] : pairs) {
    if (i >= scores.size() || j >= scores.size()) {
      fail(ErrorKind::Index, "pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                 ") outside " + std::to_string(scores.size()) + " scores");
    }
    total += std::max(0.0, margin + scores[j] - scores[i]);
  }
  return total;
}

std::vector<const Tensor*> trainable_slots(const model::Model& model) {
  std::vector<const Tensor*> slots = model.params().tensors();
  if (model.config().train_word_embeddings) slots.push_back(&model.word_embeddings());
  return slots;
}

std::vector<Tensor*> trainable_slots(model::Model& model) {
  std::vector<Tensor*> slots;
  for (const auto& e : model.params().entries()) slots.push_back(e.tensor);
  if (model.config().train_word_embeddings) slots.push_back(&model.word_embeddings());
  return slots;
}

QuestionGradient question_gradient(const model::Model& model,
                                   const model::PreparedQuestion& prepared,
                                   std::span<const Pair> pairs, double margin) {
  ad::Tape tape;
  const model::ParamVars vars = model::record_params(tape, model);
  const ad::Var scores = model::score_answers(tape, vars, model, prepared);
  const ad::Var loss = question_loss(scores, pairs, margin);
  QuestionGradient out;
  out.loss = loss.value().item();
  if (!std::isfinite(out.loss)) return out;
  out.grads = tape.backward(loss, trainable_slots(model));
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

bool grads_finite(const std::vector<Tensor>& grads) {
  return std::all_of(grads.begin(), grads.end(), [](const Tensor& g) { return g.all_finite(); });
}

[[noreturn]] void diverged(const std::string& question, std::size_t epoch, const std::string& what) {
  fail(ErrorKind::Divergence, "training diverged on question " + question + " in epoch " +
                                  std::to_string(epoch) + ": " + what);
}

}  // namespace

TrainResult train(model::Model model, std::span<const corpus::Question> train_questions,
                  std::span<const corpus::Question> validation_questions,
                  const corpus::TfidfIndex& tfidf, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  if (train_questions.empty() || validation_questions.empty()) {
    fail(ErrorKind::Corpus, "training needs nonempty train and validation splits");
  }
  if (!(config.margin > 0.0)) fail(ErrorKind::Config, "margin must be positive");
  if (config.learning_rate < 0.0) fail(ErrorKind::Config, "learning rate must be nonnegative");
  if (config.batch_size == 0) fail(ErrorKind::Config, "batch_size must be at least 1");

  const auto start = Clock::now();
  std::vector<model::PreparedQuestion> train_set, validation_set;
  train_set.reserve(train_questions.size());
  for (const corpus::Question& q : train_questions) {
    train_set.push_back(model::prepare_question(q, tfidf, model));
  }
  validation_set.reserve(validation_questions.size());
  for (const corpus::Question& q : validation_questions) {
    validation_set.push_back(model::prepare_question(q, tfidf, model));
  }

  TrainResult result;
  TrainReport& report = result.report;
  std::vector<std::vector<Pair>> full_pairs(train_set.size());
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    full_pairs[i] = make_pairs(*train_set[i].question);
    if (full_pairs[i].empty()) {
      ++report.skipped_questions;
    } else {
      order.push_back(i);
    }
  }

  Rng shuffle_rng = make_rng(config.seed, Stream::Shuffle);
  Rng pair_rng = make_rng(config.seed, Stream::Pairs);
  AdamOptions adam_options;
  adam_options.learning_rate = config.learning_rate;
  AdamState adam(trainable_slots(std::as_const(model)), adam_options);
  eval::EvalOptions eval_options;
  eval_options.ndcg_k = config.ndcg_k;
  eval_options.threads = config.eval_threads;

  model::Model best = model;
  bool have_best = false;
  std::size_t since_best = 0;
  std::size_t processed = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochRecord record;
    record.epoch = epoch;
    double loss_total = 0.0;

    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::size_t count = end - begin;
      std::vector<std::vector<Pair>> batch_pairs(count);
      for (std::size_t b = 0; b < count; ++b) {
        const std::size_t q = order[begin + b];
        batch_pairs[b] = config.max_pairs == 0
                             ? full_pairs[q]
                             : make_pairs(*train_set[q].question, config.max_pairs, &pair_rng);
      }

      std::vector<QuestionGradient> results(count);
      std::vector<std::exception_ptr> errors(count);
      const int threads = std::max(1, config.threads);
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (threads > 1 && count > 1)
      for (std::size_t b = 0; b < count; ++b) {
        try {
          results[b] = question_gradient(model, train_set[order[begin + b]], batch_pairs[b],
                                         config.margin);
        } catch (...) {
          errors[b] = std::current_exception();
        }
      }

      std::vector<Tensor> grads;
      for (std::size_t b = 0; b < count; ++b) {
        const std::string& id = train_set[order[begin + b]].question->id;
        if (errors[b]) {
          try {
            std::rethrow_exception(errors[b]);
          } catch (const Error& e) {
            if (e.kind() == ErrorKind::NonFinite) diverged(id, epoch, e.what());
            throw;
          }
        }
        QuestionGradient& r = results[b];
        if (!std::isfinite(r.loss)) diverged(id, epoch, "non-finite loss");
        if (!grads_finite(r.grads)) diverged(id, epoch, "non-finite gradient");
        loss_total += r.loss;
        if (grads.empty()) {
          grads = std::move(r.grads);
        } else {
          for (std::size_t s = 0; s < grads.size(); ++s) {
            auto dst = grads[s].values();
            const auto src = r.grads[s].values();
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
          }
        }
      }
      if (config.clip_norm > 0.0) clip_global_norm(grads, config.clip_norm);
      adam.apply(trainable_slots(model), grads);
      ++record.steps;
      processed += count;
    }

    record.train_loss = order.empty() ? 0.0 : loss_total / static_cast<double>(order.size());
    const eval::MetricReport validation = eval::evaluate_prepared(model, validation_set, eval_options);
    record.validation_p_at_1 = validation.p_at_1;
    record.validation_mrr = validation.mrr;
    record.validation_ndcg = validation.ndcg;
    report.epochs.push_back(record);

    if (!have_best || record.validation_mrr > report.best_validation_mrr) {
      have_best = true;
      report.best_validation_mrr = record.validation_mrr;
      report.selected_epoch = epoch;
      if (config.select_best) best = model;
      since_best = 0;
    } else {
      ++since_best;
    }

    if (on_epoch && !on_epoch(record, model)) break;
    if (config.patience > 0 && since_best >= config.patience) {
      report.stopped_early = epoch < config.epochs;
      break;
    }
  }

  result.model = config.select_best && have_best ? std::move(best) : std::move(model);
  result.timing.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  result.timing.seconds_per_question =
      processed == 0 ? 0.0 : result.timing.seconds / static_cast<double>(processed);
  return result;
}

void write_epoch_json(std::ostream& out, const EpochRecord& r) {
  nlohmann::json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["steps"] = r.steps;
  j["validation"] = {{"p_at_1", r.validation_p_at_1},
                     {"mrr", r.validation_mrr},
                     {"ndcg", r.validation_ndcg}};
  out << j.dump() << '\n';
}

void write_report_jsonl(std::ostream& out, const TrainReport& report) {
  for (const EpochRecord& r : report.epochs) write_epoch_json(out, r);
}

void write_summary(std::ostream& out, const TrainReport& report, const TrainTiming& timing) {
  out << "epochs run        " << report.epochs.size() << (report.stopped_early ? " (early stop)" : "")
      << '\n';
  out << "selected epoch    " << report.selected_epoch << '\n';
  out << std::fixed << std::setprecision(4);
  out << "best valid MRR    " << report.best_validation_mrr << '\n';
  if (report.selected_epoch > 0) {
    const EpochRecord& sel = report.epochs[report.selected_epoch - 1];
    out << "valid P@1         " << sel.validation_p_at_1 << '\n';
    out << "valid NDCG        " << sel.validation_ndcg << '\n';
  }
  out << "skipped questions " << report.skipped_questions << '\n';
  out << std::setprecision(6) << "sec per question  " << timing.seconds_per_question << '\n';
  out << std::defaultfloat;
}

}  // namespace gtan::train
