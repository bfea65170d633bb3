#include "gtan/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "gtan/error.hpp"

namespace gtan::checkpoint {

namespace {

constexpr std::array<char, 8> kMagic = {'G', 'T', 'A', 'N', 'C', 'K', 'P', 'T'};
// Refuses absurd counts from corrupt headers before allocating.
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 34;

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
  }
  out.write(bytes.data(), bytes.size());
}

void put_f64(std::ostream& out, double value) { put_le(out, std::bit_cast<std::uint64_t>(value)); }

void put_string(std::ostream& out, const std::string& s) {
  put_le<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

[[noreturn]] void corrupt(const std::string& what) {
  fail(ErrorKind::Checkpoint, "corrupt checkpoint: " + what);
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    corrupt(std::string("truncated while reading ") + what);
  }
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{bytes[i]} << (8 * i);
  return static_cast<T>(v);
}

std::uint64_t get_count(std::istream& in, const char* what) {
  const auto n = get_le<std::uint64_t>(in, what);
  if (n > kMaxCount) corrupt(std::string("implausible ") + what + " " + std::to_string(n));
  return n;
}

std::string get_string(std::istream& in, const char* what) {
  const std::uint64_t n = get_count(in, what);
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) {
    corrupt(std::string("truncated while reading ") + what);
  }
  return s;
}

void expect_equal(const char* field, std::uint64_t stored, std::uint64_t wanted) {
  if (stored != wanted) {
    fail(ErrorKind::Checkpoint, std::string("checkpoint ") + field + "=" + std::to_string(stored) +
                                    " does not match config " + field + "=" +
                                    std::to_string(wanted));
  }
}

}  // namespace

void save(std::ostream& out, const model::Model& model) {
  const model::ModelConfig& c = model.config();
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kVersion);
  for (std::size_t v : {c.dim, c.att_dim, c.hidden, c.layers, c.fc_layers}) {
    put_le<std::uint64_t>(out, v);
  }
  put_le<std::uint32_t>(out, c.ablation.bits());
  put_le<std::uint8_t>(out, c.normalization == graph::Normalization::RowL1 ? 1 : 0);
  put_le<std::uint8_t>(out, c.train_word_embeddings ? 1 : 0);
  put_le<std::uint64_t>(out, model.vocab_size());
  put_le<std::uint64_t>(out, model.respondents().size());
  for (const std::string& r : model.respondents()) put_string(out, r);

  const std::vector<std::string> names = model.slot_names();
  const std::vector<const Tensor*> tensors = model.slots();
  put_le<std::uint64_t>(out, tensors.size());
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    put_string(out, names[k]);
    put_le<std::uint64_t>(out, tensors[k]->rows());
    put_le<std::uint64_t>(out, tensors[k]->cols());
    for (double v : tensors[k]->values()) put_f64(out, v);
  }
  if (!out) fail(ErrorKind::Io, "failed writing checkpoint");
}

void save(const std::string& path, const model::Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open " + path + " for writing");
  save(out, model);
}

model::Model load(std::istream& in, const std::optional<model::ModelConfig>& expected) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    corrupt("missing GTANCKPT header");
  }
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kVersion) {
    fail(ErrorKind::Checkpoint, "checkpoint version " + std::to_string(version) +
                                    " is not supported (expected " + std::to_string(kVersion) + ")");
  }
  model::ModelConfig c;
  c.dim = get_le<std::uint64_t>(in, "dim");
  c.att_dim = get_le<std::uint64_t>(in, "att_dim");
  c.hidden = get_le<std::uint64_t>(in, "hidden");
  c.layers = get_le<std::uint64_t>(in, "layers");
  c.fc_layers = get_le<std::uint64_t>(in, "fc_layers");
  c.ablation = model::AblationConfig::from_bits(get_le<std::uint32_t>(in, "ablation"));
  const auto norm = get_le<std::uint8_t>(in, "normalization");
  if (norm > 1) corrupt("unknown normalization code " + std::to_string(norm));
  c.normalization = norm == 1 ? graph::Normalization::RowL1 : graph::Normalization::None;
  c.train_word_embeddings = get_le<std::uint8_t>(in, "word flag") != 0;

  if (expected) {
    expect_equal("dim", c.dim, expected->dim);
    expect_equal("att_dim", c.att_dim, expected->att_dim);
    expect_equal("hidden", c.hidden, expected->hidden);
    expect_equal("layers", c.layers, expected->layers);
    expect_equal("fc_layers", c.fc_layers, expected->fc_layers);
    if (c.ablation != expected->ablation) {
      fail(ErrorKind::Checkpoint, "checkpoint ablation " + model::describe(c.ablation) +
                                      " does not match config ablation " +
                                      model::describe(expected->ablation));
    }
    if (c.normalization != expected->normalization) {
      fail(ErrorKind::Checkpoint, std::string("checkpoint normalization ") +
                                      (c.normalization == graph::Normalization::RowL1 ? "row_l1" : "none") +
                                      " does not match the configured one");
    }
  }

  const std::uint64_t vocab = get_count(in, "vocabulary size");
  const std::uint64_t respondent_count = get_count(in, "respondent count");
  std::vector<std::string> respondents;
  for (std::uint64_t i = 0; i < respondent_count; ++i) {
    respondents.push_back(get_string(in, "respondent id"));
  }

  model::Model model;
  try {
    model = model::Model(c, vocab, std::move(respondents));
  } catch (const Error& e) {
    corrupt(e.what());
  }
  const std::vector<std::string> names = model.slot_names();
  std::vector<Tensor*> tensors = model.mutable_slots();
  const std::uint64_t count = get_count(in, "tensor count");
  if (count != tensors.size()) {
    corrupt("holds " + std::to_string(count) + " tensors, the configuration needs " +
            std::to_string(tensors.size()));
  }
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const std::string name = get_string(in, "tensor name");
    if (name != names[k]) corrupt("tensor " + std::to_string(k) + " is '" + name + "', expected '" + names[k] + "'");
    const auto rows = get_le<std::uint64_t>(in, "tensor rows");
    const auto cols = get_le<std::uint64_t>(in, "tensor cols");
    Tensor& t = *tensors[k];
    if (rows != t.rows() || cols != t.cols()) {
      fail(ErrorKind::Checkpoint, "checkpoint tensor " + name + " is " + shape_string(rows, cols) +
                                      " but the configuration expects " + t.shape_string());
    }
    for (double& v : t.values()) v = std::bit_cast<double>(get_le<std::uint64_t>(in, "tensor values"));
  }
  if (in.peek() != std::char_traits<char>::eof()) corrupt("trailing bytes after the last tensor");
  return model;
}

model::Model load(const std::string& path, const std::optional<model::ModelConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint " + path);
  return load(in, expected);
}

}  // namespace gtan::checkpoint
