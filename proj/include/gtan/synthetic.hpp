#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "gtan/corpus.hpp"

namespace gtan::corpus {

// Planted-signal corpus generator.
//
// Each question owns a small pool of topic words. An answer's content
// quality decides how many of its distinct words come from that pool, so good
// answers share words with the question and with each other; every answer
// has the same number of distinct words, so the signal is only visible
// through co-occurrence across texts. Each respondent carries a skill scalar.
// Votes order answers by
//   strength * (respondent_weight * skill + content_weight * quality)
//   + (1 - strength) * noise
// and are strictly decreasing along that order.
struct SyntheticOptions {
  std::size_t num_questions = 200;
  std::size_t answers_per_question = 5;
  std::size_t vocab_size = 1000;
  std::size_t respondent_pool = 50;
  double signal_strength = 1.0;
  double respondent_weight = 0.5;
  double content_weight = 0.5;
  std::size_t question_length = 12;
  std::size_t answer_length = 24;
  std::size_t topic_pool = 10;        // topic words per question
  std::size_t answer_distinct = 10;   // distinct words per answer
  double max_topic_fraction = 0.7;    // share of topic words at quality 1
  std::uint64_t seed = 42;
};

enum class SyntheticPreset { Mixed, RespondentDominant, AnswerCorrelation };

SyntheticPreset parse_preset(std::string_view name);
std::string_view to_string(SyntheticPreset preset);
// Sets the two signal weights for a preset, leaving other fields alone.
void apply_preset(SyntheticOptions& options, SyntheticPreset preset);

TextCorpus generate_synthetic(const SyntheticOptions& options);

}  // namespace gtan::corpus
