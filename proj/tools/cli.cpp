#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gtan/checkpoint.hpp"
#include "gtan/config.hpp"
#include "gtan/corpus_io.hpp"
#include "gtan/dataset.hpp"
#include "gtan/error.hpp"
#include "gtan/gradcheck.hpp"
#include "gtan/metrics.hpp"
#include "gtan/rng.hpp"
#include "gtan/synthetic.hpp"

namespace gtan::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kModelKeys = {"dim",      "att_dim",       "hidden",
                                          "layers",   "fc_layers",     "ablation",
                                          "normalization", "train_word_embeddings"};

// Options shared by every subcommand: a config file, generic key=value
// overrides and typed flags that map onto config keys.
struct Settings {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::vector<std::string> sets;

  void key_flag(CLI::App* sub, const std::string& flag, const std::string& key,
                const std::string& help) {
    sub->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
  }

  void common(CLI::App* sub) {
    sub->add_option("--config", config_file, "key = value configuration file");
    sub->add_option("--set", sets, "extra key=value override (repeatable)");
    key_flag(sub, "--seed", "seed", "run seed (GTAN_SEED also sets it)");
  }

  void model_flags(CLI::App* sub) {
    key_flag(sub, "--dim", "dim", "embedding width d");
    key_flag(sub, "--att-dim", "att_dim", "attention width");
    key_flag(sub, "--hidden", "hidden", "scoring head hidden width");
    key_flag(sub, "--layers", "layers", "propagation layers T");
    key_flag(sub, "--fc-layers", "fc_layers", "scoring head layers K");
    key_flag(sub, "--ablation", "ablation", "comma list of removed components, or none");
    key_flag(sub, "--normalization", "normalization", "adjacency normalization: none or row_l1");
  }

  void train_flags(CLI::App* sub) {
    key_flag(sub, "--epochs", "epochs", "maximum epochs");
    key_flag(sub, "--patience", "patience", "early-stopping patience (0 disables)");
    key_flag(sub, "--lr", "learning_rate", "Adam learning rate");
    key_flag(sub, "--margin", "margin", "hinge margin");
    key_flag(sub, "--batch-size", "batch_size", "questions per optimizer step");
    key_flag(sub, "--max-pairs", "max_pairs", "pair cap per question (0 = all)");
    key_flag(sub, "--threads", "threads", "training workers inside a batch");
    key_flag(sub, "--eval-threads", "eval_threads", "evaluation workers (0 = all cores)");
    key_flag(sub, "--word-vectors", "word_vectors", "pretrained word vector file");
  }

  void filter_flags(CLI::App* sub) {
    key_flag(sub, "--min-respondent-answers", "min_respondent_answers", "respondent answer floor");
    key_flag(sub, "--min-answer-words", "min_answer_words", "shortest kept answer");
    key_flag(sub, "--min-answers", "min_answers", "fewest answers per question");
    key_flag(sub, "--max-answers", "max_answers", "most answers per question");
    key_flag(sub, "--min-word-freq", "min_word_freq", "rarer words become UNK");
  }

  // defaults < config file < GTAN_SEED < flags
  config::RunConfig resolve() const {
    config::RunConfig c;
    if (!config_file.empty()) c = config::load(config_file);
    if (const char* env = std::getenv("GTAN_SEED"); env != nullptr && *env != '\0') {
      config::set(c, "seed", env);
    }
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) fail(ErrorKind::Config, "--set expects key=value, got '" + s + "'");
      config::set(c, s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [key, value] : overrides) config::set(c, key, value);
    return c;
  }

  // True when the caller stated model dimensions, so a checkpoint must match.
  bool pins_model() const {
    if (!config_file.empty()) return true;
    for (const auto& [key, value] : overrides) {
      if (kModelKeys.contains(key)) return true;
    }
    for (const std::string& s : sets) {
      if (kModelKeys.contains(s.substr(0, s.find('=')))) return true;
    }
    return false;
  }
};

void require(const std::string& value, const char* flag) {
  if (value.empty()) fail(ErrorKind::Config, std::string(flag) + " is required");
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

eval::EvalOptions eval_options(const config::RunConfig& c) {
  eval::EvalOptions o;
  o.ndcg_k = c.train.ndcg_k;
  o.threads = c.train.eval_threads;
  return o;
}

model::Model fresh_model(const config::RunConfig& c, const data::Dataset& d) {
  model::Model m(c.model, d.vocab.size(), data::training_respondents(d));
  m.initialize(c.seed);
  if (!c.word_vectors.empty()) {
    std::ifstream in(c.word_vectors);
    if (!in) fail(ErrorKind::Io, "cannot read " + c.word_vectors);
    data::load_word_vectors(in, d.vocab, m.word_embeddings());
  }
  return m;
}

model::Model load_model(const std::string& path, const Settings& s, const config::RunConfig& c,
                        const data::Dataset& d) {
  std::optional<model::ModelConfig> expected;
  if (s.pins_model()) expected = c.model;
  model::Model m = checkpoint::load(path, expected);
  if (m.vocab_size() != d.vocab.size()) {
    fail(ErrorKind::Checkpoint, "checkpoint vocabulary size " + std::to_string(m.vocab_size()) +
                                    " does not match dataset vocabulary size " +
                                    std::to_string(d.vocab.size()));
  }
  return m;
}

// --- subcommands -------------------------------------------------------------

int cmd_ingest(const config::RunConfig& c, std::ostream& out) {
  require(c.input, "--input");
  require(c.output, "--output");
  const data::Dataset d = data::prepare_dataset(corpus::read_corpus_file(c.input), c.filter, c.seed);
  data::save_dataset(d, c.output);
  corpus::write_stats_table(out, "all", corpus::corpus_stats(d.questions, d.vocab.size()));
  out << "split " << d.split.train.size() << " / " << d.split.validation.size() << " / "
      << d.split.test.size() << " (train / validation / test)\n";
  out << "wrote " << c.output << '\n';
  return 0;
}

struct SyntheticArgs {
  std::string preset = "mixed";
  std::size_t questions = 200;
  std::size_t answers = 5;
  std::size_t vocab = 1000;
  std::size_t respondents = 50;
  double signal = 1.0;
};

int cmd_gen_synthetic(const config::RunConfig& c, const SyntheticArgs& a, std::ostream& out) {
  require(c.output, "--output");
  corpus::SyntheticOptions o;
  corpus::apply_preset(o, corpus::parse_preset(a.preset));
  o.num_questions = a.questions;
  o.answers_per_question = a.answers;
  o.vocab_size = a.vocab;
  o.respondent_pool = a.respondents;
  o.signal_strength = a.signal;
  o.seed = c.seed;
  const corpus::TextCorpus generated = corpus::generate_synthetic(o);
  auto file = open_out(c.output);
  corpus::write_corpus_jsonl(file, generated, corpus::TextField::Text);
  out << "wrote " << generated.size() << " questions (" << a.preset << ") to " << c.output << '\n';
  return 0;
}

int cmd_train(const config::RunConfig& c, std::ostream& out) {
  require(c.dataset, "--dataset");
  require(c.output, "--output");
  const data::Dataset d = data::load_dataset(c.dataset);
  const fs::path dir = c.output;
  make_dir(dir);
  {
    auto echo = open_out(dir / "config.txt");
    config::write(echo, c);
  }
  auto report = open_out(dir / "report.jsonl");
  const auto on_epoch = [&](const train::EpochRecord& r, const model::Model&) {
    train::write_epoch_json(report, r);
    report.flush();
    out << "epoch " << r.epoch << " loss " << std::fixed << std::setprecision(4) << r.train_loss
        << " valid P@1 " << r.validation_p_at_1 << " MRR " << r.validation_mrr << std::defaultfloat
        << '\n';
    return true;
  };
  const corpus::Corpus train_split = d.train();
  const corpus::Corpus valid_split = d.validation();
  const train::TrainResult result = train::train(fresh_model(c, d), train_split, valid_split,
                                                 d.tfidf, config::training(c), on_epoch);
  checkpoint::save((dir / "model.ckpt").string(), result.model);
  {
    auto summary = open_out(dir / "summary.txt");
    train::write_summary(summary, result.report, result.timing);
  }
  train::write_summary(out, result.report, result.timing);
  out << "wrote " << (dir / "model.ckpt").string() << '\n';
  return 0;
}

struct EvaluateArgs {
  std::string checkpoint;
  std::string split = "test";
  bool oracle = false;
  std::string csv;
  std::string json_path;
  std::string compare;
};

int cmd_evaluate(const Settings& s, const config::RunConfig& c, const EvaluateArgs& a,
                 std::ostream& out) {
  require(c.dataset, "--dataset");
  const data::Dataset d = data::load_dataset(c.dataset);
  const corpus::Corpus questions = d.select(a.split);
  eval::EvalOptions options = eval_options(c);
  options.oracle = a.oracle;
  model::Model m;
  if (!a.oracle) {
    require(a.checkpoint, "--checkpoint");
    m = load_model(a.checkpoint, s, c, d);
  } else if (!a.checkpoint.empty()) {
    m = load_model(a.checkpoint, s, c, d);
  } else {
    m = model::Model(c.model, d.vocab.size(), data::training_respondents(d));
  }
  const eval::MetricReport report = eval::evaluate(m, questions, d.tfidf, options);
  out << a.split << " split, " << questions.size() << " questions\n";
  eval::write_metrics_table(out, report);
  if (!a.csv.empty()) {
    auto file = open_out(a.csv);
    eval::write_per_question_csv(file, report);
  }
  if (!a.json_path.empty()) {
    auto file = open_out(a.json_path);
    eval::write_metrics_json(file, report);
  }
  if (!a.compare.empty()) {
    std::ifstream in(a.compare);
    if (!in) fail(ErrorKind::Io, "cannot read " + a.compare);
    std::map<std::string, double> baseline;
    for (const eval::QuestionMetrics& q : eval::read_per_question_csv(in)) {
      baseline[q.question_id] = q.reciprocal_rank;
    }
    std::vector<double> ours;
    std::vector<double> theirs;
    for (const eval::QuestionMetrics& q : report.per_question) {
      auto it = baseline.find(q.question_id);
      if (it == baseline.end()) continue;
      ours.push_back(q.reciprocal_rank);
      theirs.push_back(it->second);
    }
    if (ours.empty()) fail(ErrorKind::Corpus, "no shared question ids with " + a.compare);
    const eval::SignTest t = eval::paired_sign_test(ours, theirs);
    out << "sign test on reciprocal rank over " << ours.size() << " questions: " << t.wins
        << " wins, " << t.losses << " losses, " << t.ties << " ties, p = " << std::setprecision(4)
        << t.p_value << std::defaultfloat << '\n';
  }
  return 0;
}

struct AblateArgs {
  std::vector<std::string> only;
  std::string split = "test";
};

int cmd_ablate(const config::RunConfig& c, const AblateArgs& a, std::ostream& out) {
  require(c.dataset, "--dataset");
  const data::Dataset d = data::load_dataset(c.dataset);
  const corpus::Corpus train_split = d.train();
  const corpus::Corpus valid_split = d.validation();
  const corpus::Corpus eval_split = d.select(a.split);

  struct Row {
    std::string label;
    std::string name;
    model::AblationConfig ablation;
  };
  std::vector<Row> rows;
  const bool all = a.only.empty();
  const auto wanted = [&](std::string_view name) {
    return all || std::find(a.only.begin(), a.only.end(), name) != a.only.end();
  };
  for (const std::string& name : a.only) {
    if (name == "full") continue;
    model::AblationConfig check;
    model::enable_ablation(check, name);  // rejects unknown names early
  }
  for (const model::AblationInfo& v : model::ablation_variants()) {
    if (!wanted(v.name)) continue;
    model::AblationConfig ab;
    ab.*(v.flag) = true;
    rows.push_back({std::string(v.label), std::string(v.name), ab});
  }
  if (wanted("full")) rows.push_back({"GTAN", "full", {}});

  std::unique_ptr<std::ofstream> record;
  if (!c.output.empty()) {
    make_dir(c.output);
    record = std::make_unique<std::ofstream>(open_out(fs::path(c.output) / "ablation.jsonl"));
  }
  out << std::left << std::setw(14) << "Variant" << std::right << std::setw(8) << "P@1"
      << std::setw(8) << "MRR" << std::setw(9) << ("NDCG@" + std::to_string(c.train.ndcg_k))
      << '\n';
  out << std::fixed << std::setprecision(4);
  for (const Row& row : rows) {
    config::RunConfig rc = c;
    rc.model.ablation = row.ablation;
    const train::TrainResult result =
        train::train(fresh_model(rc, d), train_split, valid_split, d.tfidf, config::training(rc));
    const eval::MetricReport m = eval::evaluate(result.model, eval_split, d.tfidf, eval_options(rc));
    out << std::left << std::setw(14) << row.label << std::right << std::setw(8) << m.p_at_1
        << std::setw(8) << m.mrr << std::setw(9) << m.ndcg << '\n';
    out.flush();
    if (record) {
      *record << json{{"variant", row.name},   {"label", row.label},
                      {"split", a.split},      {"p_at_1", m.p_at_1},
                      {"mrr", m.mrr},          {"ndcg", m.ndcg},
                      {"selected_epoch", result.report.selected_epoch}}
                     .dump()
              << '\n';
    }
  }
  out << std::defaultfloat;
  return 0;
}

struct RankArgs {
  std::string checkpoint;
  std::string questions;
  bool explain = false;
  bool as_json = false;
};

json explain_weights(const std::vector<std::string>& tokens, const std::vector<double>& weights) {
  json list = json::array();
  for (std::size_t k = 0; k < weights.size() && k < tokens.size(); ++k) {
    list.push_back({tokens[k], weights[k]});
  }
  return list;
}

int cmd_rank(const Settings& s, const config::RunConfig& c, const RankArgs& a, std::ostream& out,
             std::ostream& err) {
  require(c.dataset, "--dataset");
  require(a.checkpoint, "--checkpoint");
  require(a.questions, "--questions");
  const data::Dataset d = data::load_dataset(c.dataset);
  const model::Model m = load_model(a.checkpoint, s, c, d);
  const corpus::TextCorpus raw = corpus::read_corpus_file(a.questions);

  for (const corpus::TextQuestion& tq : raw) {
    std::size_t unknown = 0;
    const corpus::Corpus encoded = data::encode_with_vocabulary({tq}, d.vocab, &unknown);
    const corpus::Question& q = encoded.front();
    if (unknown > 0) {
      err << "warning: question " << q.id << ": " << unknown << " unknown words mapped to "
          << corpus::kUnkToken << '\n';
    }
    for (const corpus::Answer& ans : q.answers) {
      if (!m.knows_respondent(ans.respondent)) {
        err << "warning: question " << q.id << ": unknown respondent '" << ans.respondent
            << "' uses the shared unknown row\n";
      }
    }
    const model::PreparedQuestion prepared = model::prepare_question(q, d.tfidf, m);
    const model::ForwardOutput f = model::forward(m, prepared);
    const std::vector<std::size_t> order = eval::rank_answers(f.scores);

    const auto decode = [&](const std::vector<std::size_t>& ids) {
      std::vector<std::string> words;
      words.reserve(ids.size());
      for (std::size_t id : ids) words.push_back(d.vocab.token(id));
      return words;
    };
    const std::vector<std::string> question_words = decode(q.tokens);

    if (a.as_json) {
      json record;
      record["question_id"] = q.id;
      json ranked = json::array();
      for (std::size_t r = 0; r < order.size(); ++r) {
        const std::size_t i = order[r];
        json entry{{"rank", r + 1},
                   {"answer_id", q.answers[i].id},
                   {"respondent_id", q.answers[i].respondent},
                   {"score", f.scores[i]}};
        if (a.explain) {
          if (i < f.question_attention.size() && !f.question_attention[i].empty()) {
            entry["question_attention"] = explain_weights(question_words, f.question_attention[i]);
          }
          if (i < f.answer_attention.size() && !f.answer_attention[i].empty()) {
            entry["answer_attention"] =
                explain_weights(decode(q.answers[i].tokens), f.answer_attention[i]);
          }
        }
        ranked.push_back(std::move(entry));
      }
      record["answers"] = std::move(ranked);
      out << record.dump() << '\n';
      continue;
    }

    out << "question " << q.id << '\n';
    for (std::size_t r = 0; r < order.size(); ++r) {
      const std::size_t i = order[r];
      out << "  " << r + 1 << "  " << q.answers[i].id << "  score " << std::setprecision(6)
          << f.scores[i] << "  respondent " << q.answers[i].respondent << std::defaultfloat
          << '\n';
      if (!a.explain) continue;
      const auto dump = [&](const char* label, const std::vector<std::string>& words,
                            const std::vector<double>& weights) {
        out << "     " << label << ':';
        for (std::size_t k = 0; k < weights.size() && k < words.size(); ++k) {
          out << ' ' << words[k] << '=' << std::fixed << std::setprecision(3) << weights[k];
        }
        out << std::defaultfloat << '\n';
      };
      if (i < f.question_attention.size() && !f.question_attention[i].empty()) {
        dump("question attention", question_words, f.question_attention[i]);
      }
      if (i < f.answer_attention.size() && !f.answer_attention[i].empty()) {
        dump("answer attention", decode(q.answers[i].tokens), f.answer_attention[i]);
      }
    }
  }
  return 0;
}

struct GradcheckArgs {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  bool all = false;
};

int cmd_gradcheck(const config::RunConfig& c, const GradcheckArgs& a, std::ostream& out,
                  std::ostream& err) {
  std::vector<std::pair<std::string, model::AblationConfig>> variants;
  if (a.all) {
    variants.emplace_back("full", model::AblationConfig{});
    for (const model::AblationInfo& v : model::ablation_variants()) {
      model::AblationConfig ab;
      ab.*(v.flag) = true;
      variants.emplace_back(std::string(v.name), ab);
    }
  } else {
    variants.emplace_back(model::describe(c.model.ablation), c.model.ablation);
  }
  bool passed = true;
  std::string worst;
  for (const auto& [name, ablation] : variants) {
    gradcheck::Options o;
    o.seed = c.seed;
    o.epsilon = a.epsilon;
    o.tolerance = a.tolerance;
    o.ablation = ablation;
    o.normalization = c.model.normalization;
    const gradcheck::Report r = gradcheck::run(o);
    out << "== " << name << '\n';
    gradcheck::write_report(out, r);
    if (!r.passed && passed) {
      std::ostringstream msg;
      msg << name << ": max relative error " << r.max_relative_error << " in " << r.worst_group;
      worst = msg.str();
    }
    passed = passed && r.passed;
  }
  if (!passed) {
    err << json{{"error", "gradcheck"}, {"message", worst}}.dump() << '\n';
    return 1;
  }
  return 0;
}

struct SimilarityArgs {
  std::string split = "all";
  std::string checkpoint;
  bool as_json = false;
};

int cmd_analyze_sim(const config::RunConfig& c, const SimilarityArgs& a, std::ostream& out) {
  corpus::Corpus questions;
  corpus::Vocabulary vocab;
  if (!c.dataset.empty()) {
    data::Dataset d = data::load_dataset(c.dataset);
    questions = a.split == "all" ? d.questions : d.select(a.split);
    vocab = std::move(d.vocab);
  } else {
    require(c.input, "--input or --dataset");
    const corpus::TextCorpus raw = corpus::read_corpus_file(c.input);
    vocab = corpus::Vocabulary::build(raw);
    questions = corpus::encode_corpus(raw, vocab);
  }
  Tensor embeddings;
  if (!a.checkpoint.empty()) {
    const model::Model m = checkpoint::load(a.checkpoint);
    if (m.vocab_size() != vocab.size()) {
      fail(ErrorKind::Checkpoint, "checkpoint vocabulary size " + std::to_string(m.vocab_size()) +
                                      " does not match corpus vocabulary size " +
                                      std::to_string(vocab.size()));
    }
    embeddings = m.word_embeddings();
  } else {
    // Independent random word vectors: answer cosine then tracks word overlap.
    embeddings = Tensor(vocab.size(), c.model.dim);
    Rng rng = make_rng(c.seed, Stream::WordEmbeddings);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : embeddings.values()) v = normal(rng);
    if (!c.word_vectors.empty()) {
      std::ifstream in(c.word_vectors);
      if (!in) fail(ErrorKind::Io, "cannot read " + c.word_vectors);
      data::load_word_vectors(in, vocab, embeddings);
    }
  }
  const eval::SimilarityReport r = eval::analyze_similarity(questions, embeddings);
  if (a.as_json) {
    eval::write_similarity_json(out, r);
  } else {
    eval::write_similarity_table(out, r);
  }
  return 0;
}

struct StatsArgs {
  bool intervals = false;
};

int cmd_stats(const config::RunConfig& c, const StatsArgs& a, std::ostream& out) {
  corpus::TextCorpus raw;
  if (!c.dataset.empty()) {
    const data::Dataset d = data::load_dataset(c.dataset);
    corpus::write_stats_table(out, "all", corpus::corpus_stats(d.questions, d.vocab.size()));
    for (const char* name : {"train", "validation", "test"}) {
      const corpus::Corpus part = d.select(name);
      corpus::write_stats_table(out, name, corpus::corpus_stats(part, d.vocab.size()));
    }
    raw = corpus::decode_corpus(d.questions, d.vocab);
  } else {
    require(c.input, "--input or --dataset");
    raw = corpus::read_corpus_file(c.input);
    const corpus::Vocabulary vocab = corpus::Vocabulary::build(raw);
    const corpus::Corpus encoded = corpus::encode_corpus(raw, vocab);
    corpus::write_stats_table(out, "raw", corpus::corpus_stats(encoded, vocab.size()));
  }
  if (a.intervals) eval::write_histogram(out, eval::interval_histogram(raw));
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph-based tri-attention answer ranking"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  Settings s;
  const auto io_flags = [&](CLI::App* sub, bool in, bool ds, bool outp) {
    if (in) s.key_flag(sub, "--input", "input", "raw corpus file (JSON lines)");
    if (ds) s.key_flag(sub, "--dataset", "dataset", "prepared dataset directory");
    if (outp) s.key_flag(sub, "--output", "output", "output path");
  };

  CLI::App* ingest = app.add_subcommand("ingest", "filter, index and split a raw corpus");
  s.common(ingest);
  io_flags(ingest, true, false, true);
  s.filter_flags(ingest);

  SyntheticArgs syn;
  CLI::App* gen = app.add_subcommand("gen-synthetic", "write a planted-signal corpus");
  s.common(gen);
  io_flags(gen, false, false, true);
  gen->add_option("--preset", syn.preset, "mixed, respondent or correlation")->capture_default_str();
  gen->add_option("--questions", syn.questions, "question count")->capture_default_str();
  gen->add_option("--answers", syn.answers, "answers per question")->capture_default_str();
  gen->add_option("--vocab", syn.vocab, "vocabulary size")->capture_default_str();
  gen->add_option("--respondents", syn.respondents, "respondent pool")->capture_default_str();
  gen->add_option("--signal", syn.signal, "signal strength in [0, 1]")->capture_default_str();

  CLI::App* train_cmd = app.add_subcommand("train", "train a model on a prepared dataset");
  s.common(train_cmd);
  io_flags(train_cmd, false, true, true);
  s.model_flags(train_cmd);
  s.train_flags(train_cmd);

  EvaluateArgs ev;
  CLI::App* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a split");
  s.common(evaluate);
  io_flags(evaluate, false, true, false);
  s.model_flags(evaluate);
  s.key_flag(evaluate, "--eval-threads", "eval_threads", "evaluation workers (0 = all cores)");
  s.key_flag(evaluate, "--ndcg-k", "ndcg_k", "NDCG cutoff");
  evaluate->add_option("--checkpoint", ev.checkpoint, "model checkpoint");
  evaluate->add_option("--split", ev.split, "train, validation or test")->capture_default_str();
  evaluate->add_flag("--oracle", ev.oracle, "rank answers by their true votes");
  evaluate->add_option("--csv", ev.csv, "write per-question metrics");
  evaluate->add_option("--json", ev.json_path, "write the metric report as JSON");
  evaluate->add_option("--compare", ev.compare, "per-question CSV of a baseline for a sign test");

  AblateArgs ab;
  CLI::App* ablate = app.add_subcommand("ablate", "train and score the full model and each ablation");
  s.common(ablate);
  io_flags(ablate, false, true, true);
  s.model_flags(ablate);
  s.train_flags(ablate);
  ablate->add_option("--only", ab.only, "run only these variants (names or full)");
  ablate->add_option("--split", ab.split, "split to report")->capture_default_str();

  RankArgs rk;
  CLI::App* rank = app.add_subcommand("rank", "rank the answers of new questions");
  s.common(rank);
  io_flags(rank, false, true, false);
  s.model_flags(rank);
  rank->add_option("--checkpoint", rk.checkpoint, "model checkpoint");
  rank->add_option("--questions", rk.questions, "questions in corpus record format");
  rank->add_flag("--explain", rk.explain, "print attention weights per token");
  rank->add_flag("--json", rk.as_json, "one JSON record per question");

  GradcheckArgs gc;
  CLI::App* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
  s.common(gradcheck_cmd);
  s.key_flag(gradcheck_cmd, "--ablation", "ablation", "comma list of removed components");
  s.key_flag(gradcheck_cmd, "--normalization", "normalization", "none or row_l1");
  gradcheck_cmd->add_option("--epsilon", gc.epsilon, "central difference step")->capture_default_str();
  gradcheck_cmd->add_option("--tolerance", gc.tolerance, "relative error bound")->capture_default_str();
  gradcheck_cmd->add_flag("--all", gc.all, "check the full model and every ablation");

  SimilarityArgs sim;
  CLI::App* analyze = app.add_subcommand("analyze-sim", "answer similarity by vote quartile");
  s.common(analyze);
  io_flags(analyze, true, true, false);
  s.key_flag(analyze, "--dim", "dim", "width of random word vectors");
  s.key_flag(analyze, "--word-vectors", "word_vectors", "pretrained word vector file");
  analyze->add_option("--split", sim.split, "all, train, validation or test")->capture_default_str();
  analyze->add_option("--checkpoint", sim.checkpoint, "use a checkpoint's word table");
  analyze->add_flag("--json", sim.as_json, "JSON output");

  StatsArgs st;
  CLI::App* stats = app.add_subcommand("stats", "corpus statistics");
  s.common(stats);
  io_flags(stats, true, true, false);
  stats->add_flag("--intervals", st.intervals, "answer delay histogram (needs timestamps)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }

  try {
    const config::RunConfig c = s.resolve();
    if (ingest->parsed()) return cmd_ingest(c, out);
    if (gen->parsed()) return cmd_gen_synthetic(c, syn, out);
    if (train_cmd->parsed()) return cmd_train(c, out);
    if (evaluate->parsed()) return cmd_evaluate(s, c, ev, out);
    if (ablate->parsed()) return cmd_ablate(c, ab, out);
    if (rank->parsed()) return cmd_rank(s, c, rk, out, err);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(c, gc, out, err);
    if (analyze->parsed()) return cmd_analyze_sim(c, sim, out);
    if (stats->parsed()) return cmd_stats(c, st, out);
  } catch (const Error& e) {
    err << json{{"error", std::string(to_string(e.kind()))}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace gtan::cli
