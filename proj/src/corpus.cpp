#include "gtan/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "gtan/error.hpp"
#include "gtan/rng.hpp"

namespace gtan::corpus {

namespace {

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u) != 0;
}

bool is_ascii_space(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 128 && std::isspace(u) != 0;
}

template <typename Fn>
void for_each_document(const TextCorpus& corpus, Fn&& fn) {
  for (const TextQuestion& q : corpus) {
    fn(q.tokens);
    for (const TextAnswer& a : q.answers) fn(a.tokens);
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::size_t parse_count(const std::string& field, std::size_t line_no) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected an integer, got '" +
                               field + "'");
  }
  return value;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ascii_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_ascii_space(text[j])) ++j;
    std::size_t b = i, e = j;
    while (b < e && is_ascii_punct(text[b])) ++b;
    while (e > b && is_ascii_punct(text[e - 1])) --e;
    if (b < e) {
      std::string token(text.substr(b, e - b));
      for (char& c : token) {
        const auto u = static_cast<unsigned char>(c);
        if (u < 128) c = static_cast<char>(std::tolower(u));
      }
      tokens.push_back(std::move(token));
    }
    i = j;
  }
  return tokens;
}

TextCorpus filter_corpus(TextCorpus corpus, const FilterOptions& options, FilterReport* report) {
  const std::string unk(kUnkToken);
  while (true) {
    FilterPass pass;

    for (TextQuestion& q : corpus) {
      const auto before = q.answers.size();
      std::erase_if(q.answers, [&](const TextAnswer& a) {
        return a.tokens.size() < options.min_answer_words;
      });
      pass.short_answers_removed += before - q.answers.size();
    }

    {
      const auto before = corpus.size();
      std::erase_if(corpus, [&](const TextQuestion& q) {
        return q.tokens.empty() || q.answers.size() < options.min_answers ||
               q.answers.size() > options.max_answers;
      });
      pass.questions_removed += before - corpus.size();
    }

    {
      std::unordered_map<std::string, std::size_t> per_respondent;
      for (const TextQuestion& q : corpus) {
        for (const TextAnswer& a : q.answers) ++per_respondent[a.respondent];
      }
      for (TextQuestion& q : corpus) {
        const auto before = q.answers.size();
        std::erase_if(q.answers, [&](const TextAnswer& a) {
          return per_respondent[a.respondent] < options.min_respondent_answers;
        });
        pass.respondent_answers_removed += before - q.answers.size();
      }
    }

    {
      std::unordered_map<std::string, std::size_t> freq;
      for_each_document(corpus, [&](const std::vector<std::string>& tokens) {
        for (const std::string& t : tokens) {
          if (t != unk) ++freq[t];
        }
      });
      std::unordered_set<std::string> rare;
      for (const auto& [token, count] : freq) {
        if (count < options.min_word_freq) rare.insert(token);
      }
      pass.words_replaced = rare.size();
      if (!rare.empty()) {
        auto replace = [&](std::vector<std::string>& tokens) {
          for (std::string& t : tokens) {
            if (rare.contains(t)) t = unk;
          }
        };
        for (TextQuestion& q : corpus) {
          replace(q.tokens);
          for (TextAnswer& a : q.answers) replace(a.tokens);
        }
      }
    }

    if (report != nullptr) report->passes.push_back(pass);
    if (!pass.changed()) break;
  }
  if (corpus.empty()) fail(ErrorKind::EmptyCorpus, "no questions survive filtering");
  return corpus;
}

Vocabulary Vocabulary::build(const TextCorpus& corpus) {
  const std::string unk(kUnkToken);
  std::unordered_map<std::string, std::size_t> freq;
  std::unordered_map<std::string, std::size_t> doc_freq;
  std::size_t unk_freq = 0;
  std::size_t unk_docs = 0;
  for_each_document(corpus, [&](const std::vector<std::string>& tokens) {
    std::set<std::string_view> seen;
    for (const std::string& t : tokens) {
      if (t == unk) {
        ++unk_freq;
      } else {
        ++freq[t];
      }
      seen.insert(t);
    }
    for (std::string_view t : seen) {
      if (t == unk) {
        ++unk_docs;
      } else {
        ++doc_freq[std::string(t)];
      }
    }
  });
  std::vector<std::pair<std::string, std::size_t>> entries(freq.begin(), freq.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens{unk};
  std::vector<std::size_t> f{unk_freq};
  std::vector<std::size_t> df{unk_docs};
  for (auto& [token, count] : entries) {
    df.push_back(doc_freq[token]);
    f.push_back(count);
    tokens.push_back(std::move(token));
  }
  return from_entries(std::move(tokens), std::move(f), std::move(df));
}

Vocabulary Vocabulary::from_entries(std::vector<std::string> tokens, std::vector<std::size_t> freq,
                                    std::vector<std::size_t> doc_freq) {
  if (tokens.empty() || tokens.front() != kUnkToken) {
    fail(ErrorKind::Corpus, "vocabulary must start with the UNK token");
  }
  if (freq.size() != tokens.size() || doc_freq.size() != tokens.size()) {
    fail(ErrorKind::Corpus, "vocabulary statistics do not match token count");
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.freq_ = std::move(freq);
  v.doc_freq_ = std::move(doc_freq);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], i).second) {
      fail(ErrorKind::Corpus, "duplicate vocabulary token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

std::size_t Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkIndex : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

std::vector<std::size_t> Vocabulary::encode(std::span<const std::string> tokens,
                                            std::size_t* unknown) const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) {
    auto it = index_.find(t);
    if (it == index_.end()) {
      out.push_back(kUnkIndex);
      if (unknown != nullptr) ++*unknown;
    } else {
      out.push_back(it->second);
    }
  }
  return out;
}

void Vocabulary::write_tsv(std::ostream& out) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << i << '\t' << tokens_[i] << '\t' << freq_[i] << '\t' << doc_freq_[i] << '\n';
  }
}

Vocabulary Vocabulary::read_tsv(std::istream& in) {
  std::vector<std::string> tokens;
  std::vector<std::size_t> freq;
  std::vector<std::size_t> doc_freq;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 4) {
      fail(ErrorKind::Parse, "vocabulary line " + std::to_string(line_no) + ": expected 4 fields");
    }
    if (parse_count(fields[0], line_no) != tokens.size()) {
      fail(ErrorKind::Parse, "vocabulary line " + std::to_string(line_no) + ": index out of order");
    }
    tokens.push_back(fields[1]);
    freq.push_back(parse_count(fields[2], line_no));
    doc_freq.push_back(parse_count(fields[3], line_no));
  }
  return from_entries(std::move(tokens), std::move(freq), std::move(doc_freq));
}

Corpus encode_corpus(const TextCorpus& corpus, const Vocabulary& vocab) {
  Corpus out;
  out.reserve(corpus.size());
  for (const TextQuestion& tq : corpus) {
    Question q;
    q.id = tq.id;
    q.tokens = vocab.encode(tq.tokens);
    q.timestamp = tq.timestamp;
    for (const TextAnswer& ta : tq.answers) {
      q.answers.push_back(Answer{ta.id, vocab.encode(ta.tokens), ta.respondent, ta.votes,
                                 ta.timestamp});
    }
    out.push_back(std::move(q));
  }
  return out;
}

DatasetSplit split_corpus(std::span<const std::string> question_ids, std::uint64_t seed) {
  const std::size_t n = question_ids.size();
  if (n < 10) {
    fail(ErrorKind::Corpus,
         "split needs at least 10 questions, corpus has " + std::to_string(n));
  }
  std::vector<std::string> ids(question_ids.begin(), question_ids.end());
  Rng rng = make_rng(seed, Stream::Split);
  std::shuffle(ids.begin(), ids.end(), rng);
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;
  DatasetSplit split;
  split.train.assign(ids.begin(), ids.begin() + n_train);
  split.validation.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  split.test.assign(ids.begin() + n_train + n_val, ids.end());
  return split;
}

std::map<std::size_t, double> TfidfIndex::document(std::span<const std::size_t> tokens) const {
  std::map<std::size_t, double> weights;
  if (tokens.empty()) return weights;
  for (std::size_t t : tokens) {
    if (t >= idf_.size()) {
      fail(ErrorKind::Index, "token " + std::to_string(t) + " outside vocabulary of size " +
                                 std::to_string(idf_.size()));
    }
    weights[t] += 1.0;
  }
  const double length = static_cast<double>(tokens.size());
  for (auto& [token, w] : weights) w = (w / length) * idf_[token];
  return weights;
}

void TfidfIndex::write_tsv(std::ostream& out) const {
  out << "# documents\t" << num_documents_ << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < idf_.size(); ++i) out << i << '\t' << idf_[i] << '\n';
}

TfidfIndex TfidfIndex::read_tsv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t documents = 0;
  bool header = false;
  std::vector<double> idf;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2) {
      fail(ErrorKind::Parse, "idf line " + std::to_string(line_no) + ": expected 2 fields");
    }
    if (!header) {
      if (fields[0] != "# documents") fail(ErrorKind::Parse, "idf file lacks its header line");
      documents = parse_count(fields[1], line_no);
      header = true;
      continue;
    }
    if (parse_count(fields[0], line_no) != idf.size()) {
      fail(ErrorKind::Parse, "idf line " + std::to_string(line_no) + ": index out of order");
    }
    double value = 0.0;
    std::istringstream parse(fields[1]);
    if (!(parse >> value)) {
      fail(ErrorKind::Parse, "idf line " + std::to_string(line_no) + ": bad number");
    }
    idf.push_back(value);
  }
  if (!header) fail(ErrorKind::Parse, "idf file is empty");
  return TfidfIndex(std::move(idf), documents);
}

TfidfIndex compute_tfidf(std::span<const Question> train, std::size_t vocabulary_size) {
  std::vector<std::size_t> df(vocabulary_size, 0);
  std::size_t documents = 0;
  auto count = [&](const std::vector<std::size_t>& tokens) {
    ++documents;
    std::vector<std::size_t> distinct(tokens);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (std::size_t t : distinct) {
      if (t >= vocabulary_size) {
        fail(ErrorKind::Index, "token " + std::to_string(t) + " outside vocabulary of size " +
                                   std::to_string(vocabulary_size));
      }
      ++df[t];
    }
  };
  for (const Question& q : train) {
    count(q.tokens);
    for (const Answer& a : q.answers) count(a.tokens);
  }
  std::vector<double> idf(vocabulary_size);
  const double n = static_cast<double>(documents);
  for (std::size_t t = 0; t < vocabulary_size; ++t) {
    idf[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[t]))) + 1.0;
  }
  return TfidfIndex(std::move(idf), documents);
}

CorpusStats corpus_stats(std::span<const Question> corpus, std::size_t vocabulary_size) {
  CorpusStats stats;
  stats.questions = corpus.size();
  stats.vocabulary = vocabulary_size;
  std::set<std::string_view> respondents;
  std::size_t tokens = 0;
  for (const Question& q : corpus) {
    stats.answers += q.answers.size();
    for (const Answer& a : q.answers) {
      respondents.insert(a.respondent);
      tokens += a.tokens.size();
    }
  }
  stats.respondents = respondents.size();
  stats.avg_answer_length =
      stats.answers == 0 ? 0.0 : static_cast<double>(tokens) / static_cast<double>(stats.answers);
  return stats;
}

void write_stats_table(std::ostream& out, std::string_view name, const CorpusStats& stats) {
  out << std::left << std::setw(12) << "Dataset" << std::right << std::setw(10) << "#Que."
      << std::setw(10) << "#Ans." << std::setw(10) << "#Resp." << std::setw(10) << "Vocab."
      << std::setw(11) << "Avg. Len." << '\n';
  out << std::left << std::setw(12) << name << std::right << std::setw(10) << stats.questions
      << std::setw(10) << stats.answers << std::setw(10) << stats.respondents << std::setw(10)
      << stats.vocabulary << std::setw(11) << std::fixed << std::setprecision(1)
      << stats.avg_answer_length << '\n';
  out.unsetf(std::ios::fixed);
}

std::vector<std::string> respondent_ids(std::span<const Question> corpus) {
  std::set<std::string> ids;
  for (const Question& q : corpus) {
    for (const Answer& a : q.answers) ids.insert(a.respondent);
  }
  return {ids.begin(), ids.end()};
}

}  // namespace gtan::corpus
