#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "gtan/corpus.hpp"
#include "gtan/corpus_io.hpp"
#include "gtan/error.hpp"
#include "gtan/metrics.hpp"
#include "gtan/synthetic.hpp"

using namespace gtan;
using namespace gtan::corpus;

namespace {

TextAnswer text_answer(std::string id, std::string text, std::string who, std::int64_t votes) {
  return TextAnswer{std::move(id), tokenize(text), std::move(who), votes, std::nullopt};
}

FilterOptions loose() {
  FilterOptions o;
  o.min_respondent_answers = 1;
  o.min_answer_words = 1;
  o.min_answers = 1;
  o.min_word_freq = 1;
  return o;
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("What is SQL?") == std::vector<std::string>{"what", "is", "sql"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("  a,, b ") == std::vector<std::string>{"a", "b"});
  CHECK(tokenize("...") .empty());
  CHECK(tokenize("C++ isn't\tdone.\n") == std::vector<std::string>{"c", "isn't", "done"});
}

TEST_CASE("filter removes a respondent with four answers") {
  TextCorpus corpus;
  for (int q = 0; q < 6; ++q) {
    TextQuestion tq{"q" + std::to_string(q), tokenize("how do i sort a list"), std::nullopt, {}};
    for (int r = 0; r < 5; ++r) {
      tq.answers.push_back(text_answer("q" + std::to_string(q) + "r" + std::to_string(r),
                                       "use the sorted builtin function here", "r" + std::to_string(r),
                                       r));
    }
    if (q < 4) {
      tq.answers.push_back(
          text_answer("q" + std::to_string(q) + "f", "use the sorted builtin function here", "four", 9));
    }
    corpus.push_back(std::move(tq));
  }
  FilterOptions options;
  options.min_word_freq = 1;
  FilterReport report;
  const TextCorpus out = filter_corpus(corpus, options, &report);
  CHECK(out.size() == 6);
  for (const TextQuestion& q : out) {
    CHECK(q.answers.size() == 5);
    for (const TextAnswer& a : q.answers) CHECK(a.respondent != "four");
  }
  CHECK(report.passes.front().respondent_answers_removed == 4);
}

TEST_CASE("filter fixed point and chain removal") {
  TextCorpus corpus = {
      {"q1", {"w"}, std::nullopt, {text_answer("a1", "w", "a", 1), text_answer("x1", "w", "x", 0)}},
      {"q2", {"w"}, std::nullopt, {text_answer("a2", "w", "a", 1), text_answer("b2", "w", "b", 0)}},
      {"q3", {"w"}, std::nullopt, {text_answer("b3", "w", "b", 1), text_answer("a3", "w", "a", 0)}},
  };
  FilterOptions options = loose();
  options.min_respondent_answers = 2;
  options.min_answers = 2;

  FilterReport report;
  const TextCorpus out = filter_corpus(corpus, options, &report);
  // Pass 1 drops x's answer, pass 2 drops q1 which fell to one answer, pass 3
  // changes nothing.
  REQUIRE(report.passes.size() == 3);
  CHECK(report.passes[0].respondent_answers_removed == 1);
  CHECK(report.passes[0].questions_removed == 0);
  CHECK(report.passes[1].questions_removed == 1);
  CHECK_FALSE(report.passes[2].changed());
  REQUIRE(out.size() == 2);
  CHECK(out[0].id == "q2");
  CHECK(out[1].id == "q3");

  FilterReport again;
  const TextCorpus twice = filter_corpus(out, options, &again);
  CHECK(again.passes.size() == 1);
  CHECK(twice.size() == out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(twice[i].id == out[i].id);
    CHECK(twice[i].answers.size() == out[i].answers.size());
  }
}

TEST_CASE("filter replaces rare words with UNK after length checks") {
  TextCorpus corpus = {{"q", tokenize("common rare"), std::nullopt,
                        {text_answer("a", "common common rare", "u", 1)}}};
  FilterOptions options = loose();
  options.min_word_freq = 3;
  options.min_answer_words = 3;
  const TextCorpus out = filter_corpus(corpus, options);
  CHECK(out[0].answers[0].tokens == std::vector<std::string>{"common", "common", "<unk>"});
  CHECK(out[0].tokens == std::vector<std::string>{"common", "<unk>"});
}

TEST_CASE("filter rejects an empty result") {
  TextCorpus corpus = {{"q", {"w"}, std::nullopt, {text_answer("a", "short", "u", 1)}}};
  try {
    filter_corpus(corpus, FilterOptions{});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyCorpus);
  }
}

TEST_CASE("filter is idempotent on synthetic data") {
  SyntheticOptions o;
  o.num_questions = 120;
  o.seed = 5;
  FilterOptions f;
  f.min_word_freq = 3;
  const TextCorpus once = filter_corpus(generate_synthetic(o), f);
  FilterReport report;
  const TextCorpus twice = filter_corpus(once, f, &report);
  CHECK(report.passes.size() == 1);
  REQUIRE(twice.size() == once.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(twice[i].tokens == once[i].tokens);
    REQUIRE(twice[i].answers.size() == once[i].answers.size());
    for (std::size_t j = 0; j < once[i].answers.size(); ++j) {
      CHECK(twice[i].answers[j].tokens == once[i].answers[j].tokens);
    }
  }
}

TEST_CASE("vocabulary") {
  TextCorpus corpus = {{"q", {"b", "a"}, std::nullopt, {{"x", {"a", "c", "a"}, "u", 1, std::nullopt}}}};
  const Vocabulary v = Vocabulary::build(corpus);
  REQUIRE(v.size() == 4);
  CHECK(v.token(kUnkIndex) == kUnkToken);
  CHECK(v.token(1) == "a");  // most frequent first
  CHECK(v.frequency(1) == 3);
  CHECK(v.document_frequency(1) == 2);
  CHECK(v.token(2) == "b");  // ties lexicographic
  CHECK(v.token(3) == "c");
  std::size_t unknown = 0;
  const std::vector<std::string> text = {"a", "zzz", "c", "yyy"};
  CHECK(v.encode(text, &unknown) == std::vector<std::size_t>{1, 0, 3, 0});
  CHECK(unknown == 2);

  std::stringstream tsv;
  v.write_tsv(tsv);
  const Vocabulary back = Vocabulary::read_tsv(tsv);
  REQUIRE(back.size() == v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(back.token(i) == v.token(i));
    CHECK(back.frequency(i) == v.frequency(i));
    CHECK(back.document_frequency(i) == v.document_frequency(i));
  }

  const Corpus encoded = encode_corpus(corpus, v);
  for (std::size_t t : encoded[0].tokens) CHECK(t < v.size());
  for (std::size_t t : encoded[0].answers[0].tokens) CHECK(t < v.size());
}

TEST_CASE("UNK is never a corpus word of the vocabulary") {
  SyntheticOptions o;
  o.num_questions = 80;
  FilterOptions f;
  f.min_word_freq = 4;
  const TextCorpus filtered = filter_corpus(generate_synthetic(o), f);
  const Vocabulary v = Vocabulary::build(filtered);
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(v.token(i) != kUnkToken);
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(v.frequency(i) >= f.min_word_freq);
}

TEST_CASE("split sizes, determinism and partition") {
  auto ids = [](std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("q" + std::to_string(i));
    return out;
  };
  const auto hundred = ids(100);
  const DatasetSplit s = split_corpus(hundred, 3);
  CHECK(s.train.size() == 80);
  CHECK(s.validation.size() == 10);
  CHECK(s.test.size() == 10);

  const auto ninety_five = ids(95);
  const DatasetSplit t = split_corpus(ninety_five, 3);
  CHECK(t.train.size() == 76);
  CHECK(t.validation.size() == 9);
  CHECK(t.test.size() == 10);

  const DatasetSplit again = split_corpus(hundred, 3);
  CHECK(again.train == s.train);
  CHECK(again.validation == s.validation);
  CHECK(again.test == s.test);
  CHECK(split_corpus(hundred, 4).train != s.train);

  std::multiset<std::string> all(s.train.begin(), s.train.end());
  all.insert(s.validation.begin(), s.validation.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all == std::multiset<std::string>(hundred.begin(), hundred.end()));

  const auto nine = ids(9);
  CHECK_THROWS_AS(split_corpus(nine, 1), Error);
}

TEST_CASE("tf-idf formula") {
  SUBCASE("single document") {
    const Question q{"q", {1, 1, 2}, std::nullopt, {}};
    const TfidfIndex idx = compute_tfidf(std::span(&q, 1), 3);
    // Both tokens occur in the only document: idf = ln(2/2) + 1 = 1.
    const auto w = idx.document(q.tokens);
    CHECK(w.at(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(w.at(2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(w.size() == 2);
  }
  SUBCASE("three documents by hand") {
    // question [1,2], answers [2,3,3] and [1,2,4]; N = 3 documents.
    // df: 1 -> 2, 2 -> 3, 3 -> 1, 4 -> 1, 0 -> 0
    const Question q{"q", {1, 2}, std::nullopt,
                     {Answer{"a", {2, 3, 3}, "u", 1, std::nullopt},
                      Answer{"b", {1, 2, 4}, "v", 0, std::nullopt}}};
    const TfidfIndex idx = compute_tfidf(std::span(&q, 1), 5);
    CHECK(idx.num_documents() == 3);
    const double ln2 = 0.69314718055994531;     // ln(4/2)
    const double ln43 = 0.28768207245178093;    // ln(4/3)
    const double ln4 = 1.3862943611198906;      // ln(4/1)
    CHECK(idx.idf(0) == doctest::Approx(ln4 + 1).epsilon(1e-15));
    CHECK(idx.idf(1) == doctest::Approx(ln43 + 1).epsilon(1e-15));
    CHECK(idx.idf(2) == 1.0);  // present everywhere
    CHECK(idx.idf(3) == doctest::Approx(ln2 + 1).epsilon(1e-15));
    CHECK(idx.idf(4) == doctest::Approx(ln2 + 1).epsilon(1e-15));

    const auto wq = idx.document(q.tokens);
    CHECK(wq.at(1) == doctest::Approx((ln43 + 1) / 2).epsilon(1e-15));
    CHECK(wq.at(2) == doctest::Approx(0.5).epsilon(1e-15));
    const auto wa = idx.document(q.answers[0].tokens);
    CHECK(wa.size() == 2);
    CHECK(wa.at(2) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(wa.at(3) == doctest::Approx(2.0 / 3 * (ln2 + 1)).epsilon(1e-15));
    const auto wb = idx.document(q.answers[1].tokens);
    CHECK(wb.at(1) == doctest::Approx((ln43 + 1) / 3).epsilon(1e-15));
    CHECK(wb.at(4) == doctest::Approx((ln2 + 1) / 3).epsilon(1e-15));
    for (const auto& [token, w] : wb) CHECK(w > 0.0);
    CHECK_FALSE(wb.contains(3));
  }
  SUBCASE("idf ignores documents outside the given split") {
    const Question train{"t", {1}, std::nullopt, {Answer{"a", {1, 2}, "u", 1, std::nullopt}}};
    const Question other{"o", {3}, std::nullopt, {Answer{"b", {2, 3}, "u", 1, std::nullopt}}};
    const TfidfIndex a = compute_tfidf(std::span(&train, 1), 4);
    std::vector<Question> both = {train, other};
    const TfidfIndex b = compute_tfidf(both, 4);
    CHECK(a.idf(3) == doctest::Approx(std::log(3.0) + 1));
    CHECK(b.idf(3) != a.idf(3));
  }
  SUBCASE("table round trip") {
    const Question q{"q", {1, 2}, std::nullopt, {Answer{"a", {2, 3, 3}, "u", 1, std::nullopt}}};
    const TfidfIndex idx = compute_tfidf(std::span(&q, 1), 4);
    std::stringstream tsv;
    idx.write_tsv(tsv);
    const TfidfIndex back = TfidfIndex::read_tsv(tsv);
    CHECK(back.idf_table() == idx.idf_table());
    CHECK(back.num_documents() == idx.num_documents());
  }
}

TEST_CASE("corpus records") {
  const std::string good =
      R"({"question_id":"q1","text":"How to sort?","timestamp":10,"answers":[{"answer_id":"a1","text":"Use sorted().","respondent_id":"u1","votes":3,"timestamp":60}]})"
      "\n";
  std::istringstream in(good);
  const TextCorpus c = read_corpus_jsonl(in);
  REQUIRE(c.size() == 1);
  CHECK(c[0].id == "q1");
  CHECK(c[0].tokens == std::vector<std::string>{"how", "to", "sort"});
  CHECK(c[0].timestamp == 10);
  CHECK(c[0].answers[0].tokens == std::vector<std::string>{"use", "sorted"});
  CHECK(c[0].answers[0].votes == 3);
  CHECK(c[0].answers[0].timestamp == 60);

  SUBCASE("missing votes names the line") {
    std::istringstream bad(good +
                           R"({"question_id":"q2","text":"x","answers":[{"answer_id":"a","text":"y","respondent_id":"u"}]})"
                           "\n");
    try {
      read_corpus_jsonl(bad);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Parse);
      const std::string msg = e.what();
      CHECK(msg.find("line 2") != std::string::npos);
      CHECK(msg.find("votes") != std::string::npos);
    }
  }
  SUBCASE("malformed json names the line") {
    std::istringstream bad(good + good + "{not json\n");
    try {
      read_corpus_jsonl(bad);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Parse);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("negative votes are rejected") {
    std::istringstream bad(
        R"({"question_id":"q","text":"x","answers":[{"answer_id":"a","text":"y","respondent_id":"u","votes":-1}]})"
        "\n");
    CHECK_THROWS_AS(read_corpus_jsonl(bad), Error);
  }
  SUBCASE("text and token round trips") {
    for (TextField field : {TextField::Text, TextField::Tokens}) {
      std::stringstream buf;
      write_corpus_jsonl(buf, c, field);
      const TextCorpus back = read_corpus_jsonl(buf);
      REQUIRE(back.size() == 1);
      CHECK(back[0].tokens == c[0].tokens);
      CHECK(back[0].answers[0].tokens == c[0].answers[0].tokens);
      CHECK(back[0].answers[0].respondent == "u1");
      CHECK(back[0].timestamp == 10);
    }
  }
}

TEST_CASE("split file round trip") {
  DatasetSplit s{{"a", "b"}, {"c"}, {"d"}};
  std::stringstream buf;
  write_split_json(buf, s, 17);
  const DatasetSplit back = read_split_json(buf);
  CHECK(back.train == s.train);
  CHECK(back.validation == s.validation);
  CHECK(back.test == s.test);
}

TEST_CASE("synthetic generator") {
  SyntheticOptions o;
  o.num_questions = 50;
  o.seed = 9;
  const TextCorpus a = generate_synthetic(o);
  const TextCorpus b = generate_synthetic(o);
  REQUIRE(a.size() == 50);
  std::stringstream sa, sb;
  write_corpus_jsonl(sa, a, TextField::Text);
  write_corpus_jsonl(sb, b, TextField::Text);
  CHECK(sa.str() == sb.str());
  o.seed = 10;
  std::stringstream sc;
  write_corpus_jsonl(sc, generate_synthetic(o), TextField::Text);
  CHECK(sc.str() != sa.str());

  for (const TextQuestion& q : a) {
    REQUIRE(q.answers.size() == 5);
    std::set<std::int64_t> votes;
    std::set<std::string> who;
    for (const TextAnswer& ans : q.answers) {
      votes.insert(ans.votes);
      who.insert(ans.respondent);
      CHECK(ans.votes >= 0);
    }
    CHECK(votes.size() == 5);  // strict ordering
    CHECK(who.size() == 5);
  }
  // Balanced dealing keeps every respondent above the default answer floor.
  o.num_questions = 50;
  CHECK_NOTHROW(filter_corpus(generate_synthetic(o), FilterOptions{}));

  SyntheticOptions bad;
  bad.respondent_pool = 3;
  CHECK_THROWS_AS(generate_synthetic(bad), Error);
}

namespace {

// P@1 of ranking answers by how many question words they contain.
double overlap_ranker_p1(const TextCorpus& corpus) {
  double hits = 0;
  for (const TextQuestion& q : corpus) {
    const std::set<std::string> qw(q.tokens.begin(), q.tokens.end());
    std::vector<double> scores;
    std::vector<std::int64_t> votes;
    for (const TextAnswer& a : q.answers) {
      double s = 0;
      for (const std::string& t : a.tokens) s += qw.contains(t) ? 1 : 0;
      scores.push_back(s);
      votes.push_back(a.votes);
    }
    hits += eval::p_at_1(eval::rank_answers(scores), votes);
  }
  return hits / static_cast<double>(corpus.size());
}

}  // namespace

TEST_CASE("signal strength zero gives a null corpus") {
  SyntheticOptions o;
  o.num_questions = 2000;
  o.seed = 21;
  o.signal_strength = 0.0;
  const double null_p1 = overlap_ranker_p1(generate_synthetic(o));
  // Chance is 1/5; 3 sigma of a binomial mean over 2000 questions is 0.027.
  CHECK(std::abs(null_p1 - 0.2) < 0.027);
  o.signal_strength = 1.0;
  o.num_questions = 400;
  CHECK(overlap_ranker_p1(generate_synthetic(o)) > 0.35);
}
