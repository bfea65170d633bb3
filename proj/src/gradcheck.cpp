#include "gtan/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

#include "gtan/rng.hpp"
#include "gtan/trainer.hpp"

namespace gtan::gradcheck {

namespace {

constexpr std::size_t kToyVocab = 12;

double toy_loss(const model::Model& m, const model::PreparedQuestion& p,
                std::span<const train::Pair> pairs) {
  ad::Tape tape;
  const model::ParamVars vars = model::record_params(tape, m);
  return train::question_loss(model::score_answers(tape, vars, m, p), pairs, 1.0).value().item();
}

}  // namespace

Toy make_toy(std::uint64_t seed, std::size_t answers) {
  Rng rng = make_rng(seed, Stream::Gradcheck);
  std::uniform_int_distribution<std::size_t> word(1, kToyVocab - 1);
  Toy toy;
  toy.vocab_size = kToyVocab;
  toy.question.id = "toy";
  for (int k = 0; k < 4; ++k) toy.question.tokens.push_back(word(rng));
  std::vector<std::int64_t> votes(answers);
  std::iota(votes.rbegin(), votes.rend(), std::int64_t{1});
  std::shuffle(votes.begin(), votes.end(), rng);
  for (std::size_t i = 0; i < answers; ++i) {
    corpus::Answer a;
    a.id = "toy_a" + std::to_string(i);
    // One question word per answer keeps the graph connected.
    a.tokens.push_back(toy.question.tokens[i % toy.question.tokens.size()]);
    for (int k = 0; k < 4; ++k) a.tokens.push_back(word(rng));
    a.respondent = "r" + std::to_string(i);
    a.votes = votes[i];
    toy.respondents.push_back(a.respondent);
    toy.question.answers.push_back(std::move(a));
  }
  const corpus::Question copy = toy.question;
  toy.tfidf = corpus::compute_tfidf(std::span(&copy, 1), kToyVocab);
  return toy;
}

model::Model make_toy_model(const Toy& toy, const Options& options) {
  model::ModelConfig config;
  config.dim = options.dim;
  config.att_dim = options.att_dim;
  config.hidden = options.hidden;
  config.layers = options.layers;
  config.fc_layers = options.fc_layers;
  config.ablation = options.ablation;
  config.normalization = options.normalization;
  config.train_word_embeddings = true;
  model::Model m(config, toy.vocab_size, toy.respondents);
  m.initialize(options.seed);
  Rng rng = make_rng(options.seed, Stream::Gradcheck, 1);
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  for (Tensor* t : m.mutable_slots()) {
    for (double& v : t->values()) v = uniform(rng);
  }
  return m;
}

Report run(const Options& options) {
  const Toy toy = make_toy(options.seed, options.answers);
  model::Model m = make_toy_model(toy, options);
  const model::PreparedQuestion prepared = model::prepare_question(toy.question, toy.tfidf, m);
  const std::vector<train::Pair> pairs = train::make_pairs(toy.question);
  const train::QuestionGradient analytic = train::question_gradient(m, prepared, pairs, 1.0);

  const std::vector<std::string> names = m.slot_names();
  std::vector<Tensor*> slots = train::trainable_slots(m);
  Report report;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    GroupResult group;
    group.name = names[s];
    auto values = slots[s]->values();
    group.entries = values.size();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + options.epsilon;
      const double up = toy_loss(m, prepared, pairs);
      values[k] = saved - options.epsilon;
      const double down = toy_loss(m, prepared, pairs);
      values[k] = saved;
      const double numeric = (up - down) / (2.0 * options.epsilon);
      const double exact = analytic.grads[s].values()[k];
      const double abs_err = std::abs(exact - numeric);
      const double rel_err =
          abs_err / std::max({std::abs(exact), std::abs(numeric), options.floor});
      group.max_absolute_error = std::max(group.max_absolute_error, abs_err);
      if (rel_err > group.max_relative_error) {
        group.max_relative_error = rel_err;
        group.worst_index = k;
      }
    }
    if (report.groups.empty() || group.max_relative_error > report.max_relative_error) {
      report.max_relative_error = group.max_relative_error;
      report.worst_group = group.name;
    }
    report.groups.push_back(std::move(group));
  }
  report.passed = report.max_relative_error < options.tolerance;
  return report;
}

void write_report(std::ostream& out, const Report& report) {
  out << std::left << std::setw(30) << "group" << std::setw(9) << "entries" << std::setw(14)
      << "max rel err" << "max abs err\n";
  out << std::scientific << std::setprecision(3);
  for (const GroupResult& g : report.groups) {
    out << std::setw(30) << g.name << std::setw(9) << g.entries << std::setw(14)
        << g.max_relative_error << g.max_absolute_error << '\n';
  }
  out << (report.passed ? "PASS" : "FAIL") << " max relative error " << report.max_relative_error
      << " in " << report.worst_group << '\n';
  out << std::defaultfloat << std::right;
}

}  // namespace gtan::gradcheck
