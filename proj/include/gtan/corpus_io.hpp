#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "gtan/corpus.hpp"

// Line-delimited JSON corpus records, one question per line:
//
//   {"question_id": "...", "text": "...", "timestamp": 123,
//    "answers": [{"answer_id": "...", "text": "...", "respondent_id": "...",
//                 "votes": 3, "timestamp": 140}, ...]}
//
// Timestamps are optional integer minutes. Prepared datasets store a
// "tokens" array in place of "text"; the reader accepts either.
namespace gtan::corpus {

TextQuestion parse_question_record(std::string_view line, std::size_t line_no);
TextCorpus read_corpus_jsonl(std::istream& in);
TextCorpus read_corpus_file(const std::string& path);

enum class TextField { Text, Tokens };
void write_corpus_jsonl(std::ostream& out, const TextCorpus& corpus, TextField field);

// Reverse of encode_corpus: maps token indices back to strings.
TextCorpus decode_corpus(const Corpus& corpus, const Vocabulary& vocab);

void write_split_json(std::ostream& out, const DatasetSplit& split, std::uint64_t seed);
DatasetSplit read_split_json(std::istream& in);

}  // namespace gtan::corpus
