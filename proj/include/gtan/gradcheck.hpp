#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gtan/corpus.hpp"
#include "gtan/model.hpp"

// Finite-difference check of the full model: a small random question with
// three answers, the pairwise hinge loss on top, and every trainable scalar
// perturbed in turn.
namespace gtan::gradcheck {

struct Options {
  std::uint64_t seed = 42;
  double epsilon = 1e-5;    // central difference step
  double tolerance = 1e-4;  // maximum relative error
  // |a - n| / max(|a|, |n|, floor); the floor keeps entries whose true
  // gradient is zero from turning rounding noise into a huge ratio.
  double floor = 1e-6;
  std::size_t dim = 8;
  std::size_t att_dim = 8;
  std::size_t hidden = 8;
  std::size_t layers = 2;
  std::size_t fc_layers = 2;
  std::size_t answers = 3;
  model::AblationConfig ablation;
  graph::Normalization normalization = graph::Normalization::None;
};

struct GroupResult {
  std::string name;
  std::size_t entries = 0;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t worst_index = 0;
};

struct Report {
  std::vector<GroupResult> groups;
  double max_relative_error = 0.0;
  std::string worst_group;
  bool passed = false;
};

// The toy question, vocabulary size and tf-idf index used by run().
struct Toy {
  corpus::Question question;
  corpus::TfidfIndex tfidf;
  std::size_t vocab_size = 0;
  std::vector<std::string> respondents;
};
Toy make_toy(std::uint64_t seed, std::size_t answers);

// Model with random weights and biases in [-0.5, 0.5] so no term is
// trivially zero.
model::Model make_toy_model(const Toy& toy, const Options& options);

Report run(const Options& options);
void write_report(std::ostream& out, const Report& report);

}  // namespace gtan::gradcheck
