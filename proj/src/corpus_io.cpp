#include "gtan/corpus_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "gtan/error.hpp"

namespace gtan::corpus {

namespace {

using nlohmann::json;

[[noreturn]] void bad_record(std::size_t line_no, const std::string& what) {
  fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + what);
}

const json& require(const json& obj, const char* key, std::size_t line_no, const char* where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    bad_record(line_no, std::string(where) + " is missing field '" + key + "'");
  }
  return *it;
}

std::string require_string(const json& obj, const char* key, std::size_t line_no,
                           const char* where) {
  const json& v = require(obj, key, line_no, where);
  if (!v.is_string()) bad_record(line_no, std::string(where) + " field '" + key + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::int64_t> optional_timestamp(const json& obj, std::size_t line_no) {
  auto it = obj.find("timestamp");
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) bad_record(line_no, "timestamp must be an integer");
  return it->get<std::int64_t>();
}

std::vector<std::string> read_tokens(const json& obj, std::size_t line_no, const char* where) {
  if (auto it = obj.find("tokens"); it != obj.end()) {
    if (!it->is_array()) bad_record(line_no, std::string(where) + " 'tokens' must be an array");
    std::vector<std::string> tokens;
    for (const json& t : *it) {
      if (!t.is_string()) bad_record(line_no, std::string(where) + " tokens must be strings");
      tokens.push_back(t.get<std::string>());
    }
    return tokens;
  }
  return tokenize(require_string(obj, "text", line_no, where));
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

TextQuestion parse_question_record(std::string_view line, std::size_t line_no) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::parse_error& e) {
    bad_record(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!record.is_object()) bad_record(line_no, "record must be a JSON object");

  TextQuestion q;
  q.id = require_string(record, "question_id", line_no, "question");
  q.tokens = read_tokens(record, line_no, "question");
  q.timestamp = optional_timestamp(record, line_no);
  const json& answers = require(record, "answers", line_no, "question");
  if (!answers.is_array()) bad_record(line_no, "'answers' must be an array");
  for (const json& a : answers) {
    if (!a.is_object()) bad_record(line_no, "answer must be a JSON object");
    TextAnswer ans;
    ans.id = require_string(a, "answer_id", line_no, "answer");
    ans.tokens = read_tokens(a, line_no, "answer");
    ans.respondent = require_string(a, "respondent_id", line_no, "answer");
    const json& votes = require(a, "votes", line_no, "answer");
    if (!votes.is_number_integer() || votes.get<std::int64_t>() < 0) {
      bad_record(line_no, "answer field 'votes' must be a nonnegative integer");
    }
    ans.votes = votes.get<std::int64_t>();
    ans.timestamp = optional_timestamp(a, line_no);
    q.answers.push_back(std::move(ans));
  }
  return q;
}

TextCorpus read_corpus_jsonl(std::istream& in) {
  TextCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    corpus.push_back(parse_question_record(line, line_no));
  }
  return corpus;
}

TextCorpus read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open corpus file '" + path + "'");
  return read_corpus_jsonl(in);
}

void write_corpus_jsonl(std::ostream& out, const TextCorpus& corpus, TextField field) {
  for (const TextQuestion& q : corpus) {
    json record = json::object();
    record["question_id"] = q.id;
    if (field == TextField::Tokens) {
      record["tokens"] = q.tokens;
    } else {
      record["text"] = join(q.tokens);
    }
    if (q.timestamp) record["timestamp"] = *q.timestamp;
    json answers = json::array();
    for (const TextAnswer& a : q.answers) {
      json ans = json::object();
      ans["answer_id"] = a.id;
      if (field == TextField::Tokens) {
        ans["tokens"] = a.tokens;
      } else {
        ans["text"] = join(a.tokens);
      }
      ans["respondent_id"] = a.respondent;
      ans["votes"] = a.votes;
      if (a.timestamp) ans["timestamp"] = *a.timestamp;
      answers.push_back(std::move(ans));
    }
    record["answers"] = std::move(answers);
    out << record.dump() << '\n';
  }
}

TextCorpus decode_corpus(const Corpus& corpus, const Vocabulary& vocab) {
  auto decode = [&](const std::vector<std::size_t>& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (std::size_t t : tokens) out.push_back(vocab.token(t));
    return out;
  };
  TextCorpus out;
  out.reserve(corpus.size());
  for (const Question& q : corpus) {
    TextQuestion tq{q.id, decode(q.tokens), q.timestamp, {}};
    for (const Answer& a : q.answers) {
      tq.answers.push_back(TextAnswer{a.id, decode(a.tokens), a.respondent, a.votes, a.timestamp});
    }
    out.push_back(std::move(tq));
  }
  return out;
}

void write_split_json(std::ostream& out, const DatasetSplit& split, std::uint64_t seed) {
  json record = json::object();
  record["seed"] = seed;
  record["train"] = split.train;
  record["validation"] = split.validation;
  record["test"] = split.test;
  out << record.dump(1) << '\n';
}

DatasetSplit read_split_json(std::istream& in) {
  json record;
  try {
    in >> record;
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("split file: ") + e.what());
  }
  DatasetSplit split;
  try {
    split.train = record.at("train").get<std::vector<std::string>>();
    split.validation = record.at("validation").get<std::vector<std::string>>();
    split.test = record.at("test").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("split file: ") + e.what());
  }
  return split;
}

}  // namespace gtan::corpus
