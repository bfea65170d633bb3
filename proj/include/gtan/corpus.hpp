#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gtan/error.hpp"

namespace gtan::corpus {

inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::size_t kUnkIndex = 0;

// Text-level records, before vocabulary indexing. `tokens` is filled by
// tokenize() from `text` on ingest, or read directly from prepared files.
struct TextAnswer {
  std::string id;
  std::vector<std::string> tokens;
  std::string respondent;
  std::int64_t votes = 0;
  std::optional<std::int64_t> timestamp;
};

struct TextQuestion {
  std::string id;
  std::vector<std::string> tokens;
  std::optional<std::int64_t> timestamp;
  std::vector<TextAnswer> answers;
};

using TextCorpus = std::vector<TextQuestion>;

// Indexed records used by the model.
struct Answer {
  std::string id;
  std::vector<std::size_t> tokens;
  std::string respondent;
  std::int64_t votes = 0;
  std::optional<std::int64_t> timestamp;
};

struct Question {
  std::string id;
  std::vector<std::size_t> tokens;
  std::optional<std::int64_t> timestamp;
  std::vector<Answer> answers;
};

using Corpus = std::vector<Question>;

// Lowercases, splits on whitespace, strips leading/trailing ASCII punctuation
// and drops empty tokens.
std::vector<std::string> tokenize(std::string_view text);

// --- filtering -------------------------------------------------------------

struct FilterOptions {
  std::size_t min_respondent_answers = 5;
  std::size_t min_answer_words = 5;
  std::size_t min_answers = 5;
  std::size_t max_answers = 1000;
  std::size_t min_word_freq = 10;
};

struct FilterPass {
  std::size_t short_answers_removed = 0;
  std::size_t questions_removed = 0;
  std::size_t respondent_answers_removed = 0;
  std::size_t words_replaced = 0;  // distinct word types mapped to UNK

  bool changed() const {
    return short_answers_removed + questions_removed + respondent_answers_removed +
               words_replaced > 0;
  }
};

struct FilterReport {
  std::vector<FilterPass> passes;
};

// Repeats the answer-length, answer-count, respondent and word-frequency
// filters until nothing changes. Throws EmptyCorpus when nothing survives.
TextCorpus filter_corpus(TextCorpus corpus, const FilterOptions& options,
                         FilterReport* report = nullptr);

// --- vocabulary ------------------------------------------------------------

class Vocabulary {
 public:
  // Index 0 is UNK; the remaining tokens are ordered by descending corpus
  // frequency, ties broken lexicographically.
  static Vocabulary build(const TextCorpus& corpus);
  static Vocabulary from_entries(std::vector<std::string> tokens, std::vector<std::size_t> freq,
                                 std::vector<std::size_t> doc_freq);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t index_of(std::string_view token) const;  // kUnkIndex when unseen
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  std::size_t frequency(std::size_t index) const { return freq_.at(index); }
  std::size_t document_frequency(std::size_t index) const { return doc_freq_.at(index); }

  std::vector<std::size_t> encode(std::span<const std::string> tokens,
                                  std::size_t* unknown = nullptr) const;

  void write_tsv(std::ostream& out) const;
  static Vocabulary read_tsv(std::istream& in);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> freq_;
  std::vector<std::size_t> doc_freq_;
  std::unordered_map<std::string, std::size_t> index_;
};

Corpus encode_corpus(const TextCorpus& corpus, const Vocabulary& vocab);

// --- split -----------------------------------------------------------------

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

// Seeded shuffle, then floor(0.8 n) train, floor(0.1 n) validation and the
// remainder to test.
DatasetSplit split_corpus(std::span<const std::string> question_ids, std::uint64_t seed);

// Questions with the given ids, in id order.
template <typename Q>
std::vector<Q> select_questions(std::span<const Q> corpus, std::span<const std::string> ids) {
  std::unordered_map<std::string_view, const Q*> by_id;
  for (const Q& q : corpus) by_id.emplace(q.id, &q);
  std::vector<Q> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) fail(ErrorKind::Corpus, "split names unknown question '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

// --- tf-idf ----------------------------------------------------------------

// Documents are individual question texts and answer texts.
// tf(t, d) = count / |d|; idf(t) = ln((1 + N) / (1 + df(t))) + 1.
class TfidfIndex {
 public:
  TfidfIndex() = default;
  TfidfIndex(std::vector<double> idf, std::size_t num_documents)
      : idf_(std::move(idf)), num_documents_(num_documents) {}

  double idf(std::size_t token) const { return idf_.at(token); }
  std::size_t vocabulary_size() const noexcept { return idf_.size(); }
  std::size_t num_documents() const noexcept { return num_documents_; }
  const std::vector<double>& idf_table() const noexcept { return idf_; }

  // tf-idf weight of every distinct token of one document.
  std::map<std::size_t, double> document(std::span<const std::size_t> tokens) const;

  void write_tsv(std::ostream& out) const;
  static TfidfIndex read_tsv(std::istream& in);

 private:
  std::vector<double> idf_;
  std::size_t num_documents_ = 0;
};

// idf from the given (training) questions only.
TfidfIndex compute_tfidf(std::span<const Question> train, std::size_t vocabulary_size);

// --- statistics ------------------------------------------------------------

struct CorpusStats {
  std::size_t questions = 0;
  std::size_t answers = 0;
  std::size_t respondents = 0;
  std::size_t vocabulary = 0;
  double avg_answer_length = 0.0;
};

CorpusStats corpus_stats(std::span<const Question> corpus, std::size_t vocabulary_size);
void write_stats_table(std::ostream& out, std::string_view name, const CorpusStats& stats);

// Sorted distinct respondent ids of the given questions.
std::vector<std::string> respondent_ids(std::span<const Question> corpus);

}  // namespace gtan::corpus
