#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gtan/corpus.hpp"
#include "gtan/tensor.hpp"

// A prepared dataset: filtered and indexed corpus, vocabulary, split and the
// training-split tf-idf table. On disk it is a directory of five files:
//
//   corpus.jsonl  filtered questions with token arrays
//   vocab.tsv     index, token, corpus frequency, document frequency
//   idf.tsv       idf per vocabulary index
//   split.json    seed and question ids per split
//   stats.txt     corpus statistics table and filter passes
namespace gtan::data {

struct Dataset {
  corpus::Vocabulary vocab;
  corpus::Corpus questions;
  corpus::DatasetSplit split;
  corpus::TfidfIndex tfidf;
  std::uint64_t seed = 0;
  corpus::FilterReport filter_report;

  corpus::Corpus train() const;
  corpus::Corpus validation() const;
  corpus::Corpus test() const;
  // Named split: "train", "validation"/"valid" or "test".
  corpus::Corpus select(const std::string& split_name) const;
};

// Filter, index, split and weight a raw corpus.
Dataset prepare_dataset(corpus::TextCorpus raw, const corpus::FilterOptions& filter,
                        std::uint64_t seed);

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// Respondents seen in the training split, sorted; the model's table rows.
std::vector<std::string> training_respondents(const Dataset& dataset);

// Reads "word v1 v2 ... vd" lines into the rows of known words. Returns the
// number of rows filled; a line with the wrong width is a parse error.
std::size_t load_word_vectors(std::istream& in, const corpus::Vocabulary& vocab, Tensor& table);

// Maps raw question records onto an existing vocabulary; unseen words become
// UNK. `unknown_words` receives the number of such tokens.
corpus::Corpus encode_with_vocabulary(const corpus::TextCorpus& raw,
                                      const corpus::Vocabulary& vocab,
                                      std::size_t* unknown_words = nullptr);

}  // namespace gtan::data
