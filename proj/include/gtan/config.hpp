#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "gtan/corpus.hpp"
#include "gtan/model.hpp"
#include "gtan/trainer.hpp"

// Run configuration: a text file of `key = value` lines ('#' starts a
// comment). Unknown keys are rejected. Command-line flags are applied on top
// with the same keys.
namespace gtan::config {

struct RunConfig {
  std::uint64_t seed = 42;
  std::string input;    // raw corpus file
  std::string dataset;  // prepared dataset directory
  std::string output;   // output directory or file
  std::string word_vectors;  // optional pretrained "word v1 .. vd" file
  model::ModelConfig model;
  train::TrainConfig train;
  corpus::FilterOptions filter;
};

// Sets one key; throws Config on an unknown key or a malformed value.
void set(RunConfig& config, std::string_view key, std::string_view value);
std::string get(const RunConfig& config, std::string_view key);
const std::vector<std::string>& keys();

RunConfig parse(std::istream& in);
RunConfig load(const std::string& path);
// Applies the lines of `in` on top of `config`.
void apply(RunConfig& config, std::istream& in);

// Every key with its effective value, one per line; parse() reads it back.
void write(std::ostream& out, const RunConfig& config);

// The training options with the run seed folded in.
train::TrainConfig training(const RunConfig& config);

}  // namespace gtan::config
