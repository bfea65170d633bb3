#include "gtan/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "gtan/error.hpp"
#include "gtan/rng.hpp"

namespace gtan::corpus {

namespace {

// k distinct values from [0, n), in draw order.
std::vector<std::size_t> sample_distinct(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return pool;
}

// Every word of `words` once, padded to `length` with uniform draws, shuffled.
std::vector<std::string> fill_text(Rng& rng, const std::vector<std::string>& words,
                                   std::size_t length) {
  std::vector<std::string> tokens(words);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  while (tokens.size() < length) tokens.push_back(words[pick(rng)]);
  std::shuffle(tokens.begin(), tokens.end(), rng);
  return tokens;
}

}  // namespace

SyntheticPreset parse_preset(std::string_view name) {
  if (name == "mixed") return SyntheticPreset::Mixed;
  if (name == "respondent") return SyntheticPreset::RespondentDominant;
  if (name == "correlation") return SyntheticPreset::AnswerCorrelation;
  fail(ErrorKind::Config, "unknown synthetic preset '" + std::string(name) +
                              "' (expected mixed, respondent or correlation)");
}

std::string_view to_string(SyntheticPreset preset) {
  switch (preset) {
    case SyntheticPreset::Mixed: return "mixed";
    case SyntheticPreset::RespondentDominant: return "respondent";
    case SyntheticPreset::AnswerCorrelation: return "correlation";
  }
  return "mixed";
}

void apply_preset(SyntheticOptions& options, SyntheticPreset preset) {
  switch (preset) {
    case SyntheticPreset::Mixed:
      options.respondent_weight = 0.5;
      options.content_weight = 0.5;
      break;
    case SyntheticPreset::RespondentDominant:
      options.respondent_weight = 1.0;
      options.content_weight = 0.0;
      break;
    case SyntheticPreset::AnswerCorrelation:
      options.respondent_weight = 0.0;
      options.content_weight = 1.0;
      break;
  }
}

TextCorpus generate_synthetic(const SyntheticOptions& o) {
  if (o.num_questions == 0 || o.answers_per_question == 0 || o.respondent_pool == 0 ||
      o.question_length == 0 || o.answer_length == 0 || o.topic_pool == 0 ||
      o.answer_distinct == 0) {
    fail(ErrorKind::Config, "synthetic corpus sizes must be positive");
  }
  if (o.signal_strength < 0.0 || o.signal_strength > 1.0) {
    fail(ErrorKind::Config, "signal_strength must lie in [0, 1]");
  }
  const std::size_t common = std::max<std::size_t>(2, o.vocab_size / 20);
  if (o.vocab_size < common + o.topic_pool + o.answer_distinct + 8) {
    fail(ErrorKind::Config, "vocab_size too small for the requested text shapes");
  }
  const std::size_t content = o.vocab_size - common;

  Rng rng = make_rng(o.seed, Stream::Synthetic);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto common_word = [](std::size_t k) { return "c" + std::to_string(k); };
  auto content_word = [](std::size_t k) { return "w" + std::to_string(k); };

  std::vector<double> skill(o.respondent_pool);
  for (double& s : skill) s = normal(rng);

  const std::size_t n = o.answers_per_question;
  if (o.respondent_pool < n) {
    fail(ErrorKind::Config, "respondent_pool must be at least answers_per_question");
  }
  // Respondents are dealt from shuffled rounds of the whole pool, so answer
  // counts per respondent differ by at most one and small corpora survive
  // the respondent filter.
  std::vector<std::size_t> deck;
  std::size_t deck_pos = 0;
  const std::size_t common_per_text = 2;
  TextCorpus corpus;
  corpus.reserve(o.num_questions);
  for (std::size_t qi = 0; qi < o.num_questions; ++qi) {
    TextQuestion q;
    q.id = "q" + std::to_string(qi);
    q.timestamp = static_cast<std::int64_t>(unit(rng) * 1.0e6);

    // Off-topic words never come from this question's topic pool.
    std::vector<std::size_t> topic = sample_distinct(rng, content, o.topic_pool);
    auto off_topic = [&](std::vector<std::string>& words, std::size_t count) {
      std::uniform_int_distribution<std::size_t> pick(0, content - 1);
      while (count > 0) {
        const std::size_t w = pick(rng);
        const std::string word = content_word(w);
        if (std::find(topic.begin(), topic.end(), w) != topic.end()) continue;
        if (std::find(words.begin(), words.end(), word) != words.end()) continue;
        words.push_back(word);
        --count;
      }
    };
    auto add_common = [&](std::vector<std::string>& words) {
      for (std::size_t c : sample_distinct(rng, common, common_per_text)) {
        words.push_back(common_word(c));
      }
    };

    {
      std::vector<std::string> words;
      const std::size_t from_topic = std::max<std::size_t>(1, o.topic_pool / 2);
      for (std::size_t k = 0; k < from_topic; ++k) words.push_back(content_word(topic[k]));
      add_common(words);
      off_topic(words, 2);
      q.tokens = fill_text(rng, words, std::max(o.question_length, words.size()));
    }

    std::vector<std::size_t> who;
    while (who.size() < n) {
      if (deck_pos == deck.size()) {
        deck = sample_distinct(rng, o.respondent_pool, o.respondent_pool);
        deck_pos = 0;
      }
      auto fresh = std::find_if(deck.begin() + deck_pos, deck.end(), [&](std::size_t r) {
        return std::find(who.begin(), who.end(), r) == who.end();
      });
      if (fresh == deck.end()) {
        const auto more = sample_distinct(rng, o.respondent_pool, o.respondent_pool);
        deck.insert(deck.end(), more.begin(), more.end());
        continue;
      }
      std::iter_swap(deck.begin() + deck_pos, fresh);
      who.push_back(deck[deck_pos++]);
    }

    std::vector<double> latent(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double quality = unit(rng);
      const double noise = normal(rng);
      const double quality_z = (quality - 0.5) * std::sqrt(12.0);
      latent[i] = o.signal_strength *
                      (o.respondent_weight * skill[who[i]] + o.content_weight * quality_z) +
                  (1.0 - o.signal_strength) * noise;

      std::vector<std::string> words;
      const auto budget = o.answer_distinct > common_per_text ? o.answer_distinct - common_per_text
                                                              : std::size_t{1};
      const auto topical = std::min<std::size_t>(
          {o.topic_pool, budget,
           static_cast<std::size_t>(std::lround(quality * o.max_topic_fraction *
                                                static_cast<double>(budget)))});
      for (std::size_t t : sample_distinct(rng, o.topic_pool, topical)) {
        words.push_back(content_word(topic[t]));
      }
      add_common(words);
      off_topic(words, budget - topical);

      std::uniform_int_distribution<std::size_t> length(o.answer_length / 2 + 1,
                                                        o.answer_length + o.answer_length / 2);
      TextAnswer a;
      a.id = q.id + "a" + std::to_string(i);
      a.tokens = fill_text(rng, words, std::max(length(rng), words.size()));
      a.respondent = "u" + std::to_string(who[i]);
      const double delay = std::exp(std::log(60.0) + 1.5 * normal(rng));
      a.timestamp = *q.timestamp + static_cast<std::int64_t>(delay);
      q.answers.push_back(std::move(a));
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return latent[a] < latent[b]; });
    std::uniform_int_distribution<std::int64_t> base(0, 2);
    std::uniform_int_distribution<std::int64_t> step(1, 4);
    std::int64_t votes = base(rng);
    for (std::size_t rank = 0; rank < n; ++rank) {
      if (rank > 0) votes += step(rng);
      q.answers[order[rank]].votes = votes;
    }
    corpus.push_back(std::move(q));
  }
  return corpus;
}

}  // namespace gtan::corpus
