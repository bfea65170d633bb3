#include "gtan/dataset.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gtan/corpus_io.hpp"
#include "gtan/error.hpp"

namespace gtan::data {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  return in;
}

}  // namespace

corpus::Corpus Dataset::train() const {
  return corpus::select_questions<corpus::Question>(questions, split.train);
}
corpus::Corpus Dataset::validation() const {
  return corpus::select_questions<corpus::Question>(questions, split.validation);
}
corpus::Corpus Dataset::test() const {
  return corpus::select_questions<corpus::Question>(questions, split.test);
}

corpus::Corpus Dataset::select(const std::string& name) const {
  if (name == "train") return train();
  if (name == "validation" || name == "valid") return validation();
  if (name == "test") return test();
  fail(ErrorKind::Config, "unknown split '" + name + "' (expected train, validation or test)");
}

Dataset prepare_dataset(corpus::TextCorpus raw, const corpus::FilterOptions& filter,
                        std::uint64_t seed) {
  Dataset d;
  d.seed = seed;
  const corpus::TextCorpus filtered = corpus::filter_corpus(std::move(raw), filter, &d.filter_report);
  d.vocab = corpus::Vocabulary::build(filtered);
  d.questions = corpus::encode_corpus(filtered, d.vocab);
  std::vector<std::string> ids;
  ids.reserve(d.questions.size());
  for (const corpus::Question& q : d.questions) ids.push_back(q.id);
  d.split = corpus::split_corpus(ids, seed);
  d.tfidf = corpus::compute_tfidf(d.train(), d.vocab.size());
  return d;
}

void save_dataset(const Dataset& d, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  {
    auto out = open_out(dir / "corpus.jsonl");
    corpus::write_corpus_jsonl(out, corpus::decode_corpus(d.questions, d.vocab),
                               corpus::TextField::Tokens);
  }
  {
    auto out = open_out(dir / "vocab.tsv");
    d.vocab.write_tsv(out);
  }
  {
    auto out = open_out(dir / "idf.tsv");
    d.tfidf.write_tsv(out);
  }
  {
    auto out = open_out(dir / "split.json");
    corpus::write_split_json(out, d.split, d.seed);
  }
  {
    auto out = open_out(dir / "stats.txt");
    corpus::write_stats_table(out, "all", corpus::corpus_stats(d.questions, d.vocab.size()));
    for (const char* name : {"train", "validation", "test"}) {
      const corpus::Corpus part = d.select(name);
      const corpus::CorpusStats s = corpus::corpus_stats(part, d.vocab.size());
      out << name << ": " << s.questions << " questions, " << s.answers << " answers\n";
    }
    out << "filter passes: " << d.filter_report.passes.size() << '\n';
    for (std::size_t p = 0; p < d.filter_report.passes.size(); ++p) {
      const corpus::FilterPass& f = d.filter_report.passes[p];
      out << "  pass " << p + 1 << ": short answers " << f.short_answers_removed
          << ", questions " << f.questions_removed << ", respondent answers "
          << f.respondent_answers_removed << ", words to unk " << f.words_replaced << '\n';
    }
  }
}

Dataset load_dataset(const fs::path& dir) {
  Dataset d;
  {
    auto in = open_in(dir / "vocab.tsv");
    d.vocab = corpus::Vocabulary::read_tsv(in);
  }
  {
    auto in = open_in(dir / "corpus.jsonl");
    d.questions = encode_with_vocabulary(corpus::read_corpus_jsonl(in), d.vocab);
  }
  {
    auto in = open_in(dir / "idf.tsv");
    d.tfidf = corpus::TfidfIndex::read_tsv(in);
    if (d.tfidf.vocabulary_size() != d.vocab.size()) {
      fail(ErrorKind::Corpus, "idf table covers " + std::to_string(d.tfidf.vocabulary_size()) +
                                  " tokens but the vocabulary has " +
                                  std::to_string(d.vocab.size()));
    }
  }
  {
    auto in = open_in(dir / "split.json");
    std::stringstream buffer;
    buffer << in.rdbuf();
    d.split = corpus::read_split_json(buffer);
    const auto record = nlohmann::json::parse(buffer.str(), nullptr, false);
    if (record.is_object() && record.contains("seed") && record["seed"].is_number_unsigned()) {
      d.seed = record["seed"].get<std::uint64_t>();
    }
  }
  return d;
}

std::vector<std::string> training_respondents(const Dataset& d) {
  return corpus::respondent_ids(d.train());
}

std::size_t load_word_vectors(std::istream& in, const corpus::Vocabulary& vocab, Tensor& table) {
  if (table.rows() != vocab.size()) {
    fail(ErrorKind::Dimension, "word table has " + std::to_string(table.rows()) +
                                   " rows for a vocabulary of " + std::to_string(vocab.size()));
  }
  std::string line;
  std::size_t line_no = 0;
  std::size_t filled = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word)) continue;
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (!ss.eof()) fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad number");
    if (values.size() != table.cols()) {
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": vector of width " +
                                 std::to_string(values.size()) + ", expected " +
                                 std::to_string(table.cols()));
    }
    if (!vocab.contains(word)) continue;
    auto row = table.row(vocab.index_of(word));
    std::copy(values.begin(), values.end(), row.begin());
    ++filled;
  }
  return filled;
}

corpus::Corpus encode_with_vocabulary(const corpus::TextCorpus& raw,
                                      const corpus::Vocabulary& vocab, std::size_t* unknown_words) {
  corpus::Corpus out;
  std::size_t unknown = 0;
  for (const corpus::TextQuestion& tq : raw) {
    corpus::Question q;
    q.id = tq.id;
    q.timestamp = tq.timestamp;
    q.tokens = vocab.encode(tq.tokens, &unknown);
    for (const corpus::TextAnswer& ta : tq.answers) {
      q.answers.push_back(corpus::Answer{ta.id, vocab.encode(ta.tokens, &unknown), ta.respondent,
                                         ta.votes, ta.timestamp});
    }
    out.push_back(std::move(q));
  }
  if (unknown_words != nullptr) *unknown_words = unknown;
  return out;
}

}  // namespace gtan::data
