#include "gtan/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "gtan/error.hpp"

namespace gtan::config {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  fail(ErrorKind::Config, "config key '" + std::string(key) + "': '" + std::string(value) +
                              "' is not " + expected);
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    bad_value(key, value, "a nonnegative integer");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  const std::string text(value);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(text, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "a number");
  }
  if (used != text.size()) bad_value(key, value, "a number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "a boolean");
}

std::string real_text(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

model::AblationConfig parse_ablation(std::string_view value) {
  model::AblationConfig ablation;
  if (value.empty() || value == "none" || value == "full") return ablation;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto part = trim(value.substr(start, comma == std::string_view::npos ? value.npos
                                                                               : comma - start));
    if (!part.empty()) model::enable_ablation(ablation, part);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return ablation;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field size_field(std::string key, T RunConfig::*group, std::size_t T::*member) {
  return {key,
          [key, group, member](RunConfig& c, std::string_view v) {
            c.*group.*member = parse_integer<std::size_t>(key, v);
          },
          [group, member](const RunConfig& c) { return std::to_string(c.*group.*member); }};
}

template <typename T>
Field real_field(std::string key, T RunConfig::*group, double T::*member) {
  return {key,
          [key, group, member](RunConfig& c, std::string_view v) {
            c.*group.*member = parse_real(key, v);
          },
          [group, member](const RunConfig& c) { return real_text(c.*group.*member); }};
}

Field text_field(std::string key, std::string RunConfig::*member) {
  return {key, [member](RunConfig& c, std::string_view v) { c.*member = std::string(v); },
          [member](const RunConfig& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"seed",
                 [](RunConfig& c, std::string_view v) { c.seed = parse_integer<std::uint64_t>("seed", v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    f.push_back(text_field("input", &RunConfig::input));
    f.push_back(text_field("dataset", &RunConfig::dataset));
    f.push_back(text_field("output", &RunConfig::output));
    f.push_back(text_field("word_vectors", &RunConfig::word_vectors));

    f.push_back(size_field("dim", &RunConfig::model, &model::ModelConfig::dim));
    f.push_back(size_field("att_dim", &RunConfig::model, &model::ModelConfig::att_dim));
    f.push_back(size_field("hidden", &RunConfig::model, &model::ModelConfig::hidden));
    f.push_back(size_field("layers", &RunConfig::model, &model::ModelConfig::layers));
    f.push_back(size_field("fc_layers", &RunConfig::model, &model::ModelConfig::fc_layers));
    f.push_back({"ablation",
                 [](RunConfig& c, std::string_view v) { c.model.ablation = parse_ablation(v); },
                 [](const RunConfig& c) {
                   const std::string d = model::describe(c.model.ablation);
                   return d == "full" ? std::string("none") : d;
                 }});
    f.push_back({"normalization",
                 [](RunConfig& c, std::string_view v) {
                   c.model.normalization = graph::parse_normalization(v);
                 },
                 [](const RunConfig& c) {
                   return std::string(graph::to_string(c.model.normalization));
                 }});
    f.push_back({"train_word_embeddings",
                 [](RunConfig& c, std::string_view v) {
                   c.model.train_word_embeddings = parse_bool("train_word_embeddings", v);
                 },
                 [](const RunConfig& c) {
                   return std::string(c.model.train_word_embeddings ? "true" : "false");
                 }});

    f.push_back(real_field("margin", &RunConfig::train, &train::TrainConfig::margin));
    f.push_back(real_field("learning_rate", &RunConfig::train, &train::TrainConfig::learning_rate));
    f.push_back(size_field("epochs", &RunConfig::train, &train::TrainConfig::epochs));
    f.push_back(size_field("patience", &RunConfig::train, &train::TrainConfig::patience));
    f.push_back(size_field("max_pairs", &RunConfig::train, &train::TrainConfig::max_pairs));
    f.push_back(size_field("batch_size", &RunConfig::train, &train::TrainConfig::batch_size));
    f.push_back(real_field("clip_norm", &RunConfig::train, &train::TrainConfig::clip_norm));
    f.push_back({"threads",
                 [](RunConfig& c, std::string_view v) {
                   c.train.threads = parse_integer<int>("threads", v);
                 },
                 [](const RunConfig& c) { return std::to_string(c.train.threads); }});
    f.push_back({"eval_threads",
                 [](RunConfig& c, std::string_view v) {
                   c.train.eval_threads = parse_integer<int>("eval_threads", v);
                 },
                 [](const RunConfig& c) { return std::to_string(c.train.eval_threads); }});
    f.push_back(size_field("ndcg_k", &RunConfig::train, &train::TrainConfig::ndcg_k));
    f.push_back({"select_best",
                 [](RunConfig& c, std::string_view v) {
                   c.train.select_best = parse_bool("select_best", v);
                 },
                 [](const RunConfig& c) { return std::string(c.train.select_best ? "true" : "false"); }});

    f.push_back(size_field("min_respondent_answers", &RunConfig::filter,
                           &corpus::FilterOptions::min_respondent_answers));
    f.push_back(size_field("min_answer_words", &RunConfig::filter,
                           &corpus::FilterOptions::min_answer_words));
    f.push_back(size_field("min_answers", &RunConfig::filter, &corpus::FilterOptions::min_answers));
    f.push_back(size_field("max_answers", &RunConfig::filter, &corpus::FilterOptions::max_answers));
    f.push_back(size_field("min_word_freq", &RunConfig::filter,
                           &corpus::FilterOptions::min_word_freq));
    return f;
  }();
  return table;
}

const Field& field(std::string_view key) {
  for (const Field& f : fields()) {
    if (f.key == key) return f;
  }
  fail(ErrorKind::Config, "unknown config key '" + std::string(key) + "'");
}

}  // namespace

void set(RunConfig& config, std::string_view key, std::string_view value) {
  field(key).set(config, trim(value));
}

std::string get(const RunConfig& config, std::string_view key) { return field(key).get(config); }

const std::vector<std::string>& keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const Field& f : fields()) out.push_back(f.key);
    return out;
  }();
  return names;
}

void apply(RunConfig& config, std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::Config, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set(config, trim(view.substr(0, eq)), view.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorKind::Config, "config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

RunConfig parse(std::istream& in) {
  RunConfig config;
  apply(config, in);
  return config;
}

RunConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read config " + path);
  return parse(in);
}

void write(std::ostream& out, const RunConfig& config) {
  for (const Field& f : fields()) out << f.key << " = " << f.get(config) << '\n';
}

train::TrainConfig training(const RunConfig& config) {
  train::TrainConfig t = config.train;
  t.seed = config.seed;
  return t;
}

}  // namespace gtan::config
