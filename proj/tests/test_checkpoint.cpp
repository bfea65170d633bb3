#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

#include "gtan/checkpoint.hpp"
#include "gtan/dataset.hpp"
#include "gtan/synthetic.hpp"
#include "gtan/trainer.hpp"

using namespace gtan;

namespace {

data::Dataset small_dataset() {
  corpus::SyntheticOptions o;
  o.num_questions = 40;
  o.vocab_size = 100;
  o.respondent_pool = 10;
  return data::prepare_dataset(corpus::generate_synthetic(o), {}, 1);
}

model::Model trained(const data::Dataset& ds, model::ModelConfig cfg) {
  model::Model m(cfg, ds.vocab.size(), data::training_respondents(ds));
  m.initialize(4);
  train::TrainConfig c;
  c.epochs = 1;
  return train::train(m, ds.train(), ds.validation(), ds.tfidf, c).model;
}

model::ModelConfig config(std::size_t dim) {
  model::ModelConfig c;
  c.dim = dim;
  c.att_dim = 8;
  c.hidden = 8;
  return c;
}

std::string expect_error(const std::string& bytes, const std::optional<model::ModelConfig>& cfg = {}) {
  std::istringstream in(bytes);
  try {
    checkpoint::load(in, cfg);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Checkpoint);
    return e.what();
  }
  FAIL("checkpoint loaded");
  return {};
}

}  // namespace

TEST_CASE("round trip is bitwise") {
  const data::Dataset ds = small_dataset();
  model::ModelConfig cfg = config(8);
  cfg.ablation.no_question_attention = true;
  cfg.normalization = graph::Normalization::RowL1;
  const model::Model m = trained(ds, cfg);

  std::stringstream buffer;
  checkpoint::save(buffer, m);
  const model::Model back = checkpoint::load(buffer, cfg);
  CHECK(back.config() == m.config());
  CHECK(back.respondents() == m.respondents());
  const auto a = m.slots(), b = back.slots();
  REQUIRE(a.size() == b.size());
  for (std::size_t s = 0; s < a.size(); ++s) CHECK(*a[s] == *b[s]);
  for (const corpus::Question& q : ds.test()) {
    const auto sa = model::forward(m, model::prepare_question(q, ds.tfidf, m)).scores;
    const auto sb = model::forward(back, model::prepare_question(q, ds.tfidf, back)).scores;
    CHECK(std::memcmp(sa.data(), sb.data(), sa.size() * sizeof(double)) == 0);
  }

  // Saving the loaded model reproduces the same bytes.
  std::stringstream again;
  checkpoint::save(again, back);
  CHECK(again.str() == buffer.str());

  const auto path = std::filesystem::temp_directory_path() / "gtan_test_roundtrip.ckpt";
  checkpoint::save(path.string(), m);
  CHECK(checkpoint::load(path.string()).config() == cfg);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(checkpoint::load((path.string() + ".missing")), Error);
}

TEST_CASE("mismatches and corruption") {
  const data::Dataset ds = small_dataset();
  model::Model m(config(32), ds.vocab.size(), data::training_respondents(ds));
  m.initialize(2);
  std::ostringstream out;
  checkpoint::save(out, m);
  const std::string bytes = out.str();

  const std::string dims = expect_error(bytes, config(64));
  CHECK(dims.find("32") != std::string::npos);
  CHECK(dims.find("64") != std::string::npos);

  model::ModelConfig ablated = config(32);
  ablated.ablation.no_graph = true;
  CHECK(expect_error(bytes, ablated).find("no_graph") != std::string::npos);

  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{40}, bytes.size() / 2, bytes.size() - 1}) {
    CAPTURE(cut);
    CHECK(expect_error(bytes.substr(0, cut)).find("corrupt") != std::string::npos);
  }

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(expect_error(bad_magic).find("corrupt") != std::string::npos);

  std::string bad_version = bytes;
  bad_version[8] = static_cast<char>(checkpoint::kVersion + 1);
  CHECK(expect_error(bad_version).find("version") != std::string::npos);

  CHECK(expect_error(bytes + "extra").find("corrupt") != std::string::npos);
}
