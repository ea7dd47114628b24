#include "test_support.hpp"
#include "vqvol/config.hpp"

#include <fstream>

using namespace vqvol;

namespace {

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ModelConfig, PresetsValidate) {
  ModelConfig desk = ModelConfig::desk();
  EXPECT_NO_THROW(desk.validate());
  EXPECT_EQ(desk.depth(), 3);
  EXPECT_EQ(desk.level_factor(0), 8);
  EXPECT_EQ(desk.level_factor(1), 4);
  ModelConfig full = ModelConfig::full_res();
  EXPECT_NO_THROW(full.validate());
  EXPECT_EQ(full.depth(), 6);
  EXPECT_EQ(full.levels.size(), 3u);
}

TEST(ModelConfig, RejectsBadLevels) {
  ModelConfig c = ModelConfig::desk();
  c.levels[0].codes = 257;
  EXPECT_NE(error_of([&] { c.validate(); }).find("levels[0].codes"), std::string::npos);
  c = ModelConfig::desk();
  c.levels[1].dims = {6, 6, 12};
  EXPECT_NE(error_of([&] { c.validate(); }).find("same power of two"), std::string::npos);
  c = ModelConfig::desk();
  std::swap(c.levels[0], c.levels[1]);
  EXPECT_NE(error_of([&] { c.validate(); }).find("coarsest first"), std::string::npos);
  c = ModelConfig::desk();
  c.levels[0].dims = {5, 5, 5};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ModelConfig::desk();
  c.levels.clear();
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ModelConfig::desk();
  c.codebook.gamma = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ModelConfig, JsonRoundTripAndHash) {
  ModelConfig c = ModelConfig::desk();
  c.base_width = 8;
  c.loss = LossKind::adaptive;
  c.adaptive.shared = true;
  c.codebook.beta = 0.5;
  const std::string text = model_config_json(c);
  EXPECT_EQ(parse_model_config(text), c);
  EXPECT_EQ(config_hash(parse_model_config(text)), config_hash(c));
  ModelConfig d = c;
  d.levels[1].codes = 128;
  EXPECT_NE(config_hash(d), config_hash(c));
  EXPECT_EQ(model_config_json(c), model_config_json(parse_model_config(text)));
}

TEST(ModelConfig, PartialJsonUsesDefaults) {
  ModelConfig c = parse_model_config(R"({"base_width": 4, "levels": [{"dims": [3, 3, 3], "code_dim": 2}]})");
  EXPECT_EQ(c.base_width, 4);
  EXPECT_EQ(c.levels[0].codes, 256);
  EXPECT_EQ(c.blocks_per_resolution, 2);
  EXPECT_EQ(c.input_dims, (Dims3{24, 24, 24}));
}

TEST(ModelConfig, UnknownKeysAreNamed) {
  EXPECT_NE(error_of([] { parse_model_config(R"({"base_widht": 4})"); }).find("base_widht"), std::string::npos);
  EXPECT_NE(error_of([] { parse_model_config(R"({"levels": [{"dims": [3,3,3], "k": 2}]})"); }).find("k"),
            std::string::npos);
  EXPECT_THROW(parse_model_config(R"({"loss": "l7"})"), std::invalid_argument);
  EXPECT_THROW(parse_model_config(R"({"input_dims": [24, 24]})"), std::invalid_argument);
  EXPECT_THROW(parse_model_config("not json"), std::invalid_argument);
}

TEST(Fnv, KnownVectors) {
  EXPECT_EQ(fnv1a64("", 0), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a", 1), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar", 6), 0x85944171f73967e8ULL);
}

TEST(ExperimentConfig, LoadFromFile) {
  auto dir = test::scratch_dir("config");
  {
    std::ofstream(dir / "cfg.json") << R"({"model": {"base_width": 8}, "train": {"batch_size": 2, "seed": 9}})";
  }
  ExperimentConfig e = load_experiment_config(dir / "cfg.json");
  EXPECT_EQ(e.model.base_width, 8);
  EXPECT_EQ(e.model.levels, ModelConfig::desk().levels);
  EXPECT_EQ(e.train.batch_size, 2);
  EXPECT_EQ(e.train.seed, 9u);
  EXPECT_EQ(parse_experiment_config(experiment_config_json(e)).train, e.train);
  EXPECT_NE(error_of([&] { load_experiment_config(dir / "missing.json"); }).find("missing.json"), std::string::npos);
  EXPECT_THROW(parse_experiment_config(R"({"train": {"batch_size": 0}})"), std::invalid_argument);
  EXPECT_THROW(parse_experiment_config(R"({"optimizer": {}})"), std::invalid_argument);
}
