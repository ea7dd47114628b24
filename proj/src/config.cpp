#include "vqvol/config.hpp"

#include "json.hpp"

#include <bit>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace vqvol {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument("config: '" + where + "' must be an object");
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw std::invalid_argument("config: unknown key '" + where + "." + item.key() + "'");
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: bad value for '" + where + "." + key + "': " + e.what());
  }
}

json dims_json(const Dims3& d) { return json::array({d[0], d[1], d[2]}); }

Dims3 parse_dims(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("config: '" + where + "' must be [d, h, w]");
  Dims3 d{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j[i].is_number_integer()) throw std::invalid_argument("config: '" + where + "' entries must be integers");
    d[i] = j[i].get<Index>();
  }
  return d;
}

json model_to_json(const ModelConfig& c) {
  json levels = json::array();
  for (const auto& l : c.levels) levels.push_back({{"dims", dims_json(l.dims)}, {"code_dim", l.code_dim}, {"codes", l.codes}});
  return {
      {"input_dims", dims_json(c.input_dims)},
      {"base_width", c.base_width},
      {"max_width", c.max_width},
      {"blocks_per_resolution", c.blocks_per_resolution},
      {"levels", levels},
      {"loss", loss_name(c.loss)},
      {"beta", c.codebook.beta},
      {"gamma", c.codebook.gamma},
      {"epsilon", c.codebook.epsilon},
      {"ema", c.codebook.ema},
      {"adaptive",
       {{"alpha_lo", c.adaptive.alpha_lo},
        {"alpha_hi", c.adaptive.alpha_hi},
        {"scale_lo", c.adaptive.scale_lo},
        {"alpha_init", c.adaptive.alpha_init},
        {"scale_init", c.adaptive.scale_init},
        {"shared", c.adaptive.shared}}},
  };
}

ModelConfig model_from_json(const json& j) {
  reject_unknown(j,
                 {"input_dims", "base_width", "max_width", "blocks_per_resolution", "levels", "loss", "beta", "gamma",
                  "epsilon", "ema", "adaptive"},
                 "model");
  ModelConfig c = ModelConfig::desk();
  if (j.contains("input_dims")) c.input_dims = parse_dims(j["input_dims"], "model.input_dims");
  read_opt(j, "base_width", c.base_width, "model");
  read_opt(j, "max_width", c.max_width, "model");
  read_opt(j, "blocks_per_resolution", c.blocks_per_resolution, "model");
  if (j.contains("levels")) {
    if (!j["levels"].is_array()) throw std::invalid_argument("config: 'model.levels' must be an array");
    c.levels.clear();
    for (const auto& lj : j["levels"]) {
      reject_unknown(lj, {"dims", "code_dim", "codes"}, "model.levels[]");
      LevelConfig l;
      if (!lj.contains("dims")) throw std::invalid_argument("config: 'model.levels[].dims' is required");
      l.dims = parse_dims(lj["dims"], "model.levels[].dims");
      read_opt(lj, "code_dim", l.code_dim, "model.levels[]");
      read_opt(lj, "codes", l.codes, "model.levels[]");
      c.levels.push_back(l);
    }
  }
  if (j.contains("loss")) {
    std::string name;
    read_opt(j, "loss", name, "model");
    c.loss = parse_loss(name);
  }
  read_opt(j, "beta", c.codebook.beta, "model");
  read_opt(j, "gamma", c.codebook.gamma, "model");
  read_opt(j, "epsilon", c.codebook.epsilon, "model");
  read_opt(j, "ema", c.codebook.ema, "model");
  if (j.contains("adaptive")) {
    const json& a = j["adaptive"];
    reject_unknown(a, {"alpha_lo", "alpha_hi", "scale_lo", "alpha_init", "scale_init", "shared"}, "model.adaptive");
    read_opt(a, "alpha_lo", c.adaptive.alpha_lo, "model.adaptive");
    read_opt(a, "alpha_hi", c.adaptive.alpha_hi, "model.adaptive");
    read_opt(a, "scale_lo", c.adaptive.scale_lo, "model.adaptive");
    read_opt(a, "alpha_init", c.adaptive.alpha_init, "model.adaptive");
    read_opt(a, "scale_init", c.adaptive.scale_init, "model.adaptive");
    read_opt(a, "shared", c.adaptive.shared, "model.adaptive");
  }
  c.validate();
  return c;
}

json train_to_json(const TrainConfig& t) {
  return {{"batch_size", t.batch_size}, {"lr_max", t.lr_max},         {"lr_min", t.lr_min},
          {"cycle_steps", t.cycle_steps}, {"cycle_mult", t.cycle_mult}, {"adam_beta1", t.adam_beta1},
          {"adam_beta2", t.adam_beta2},   {"adam_epsilon", t.adam_epsilon}, {"seed", t.seed},
          {"log_every", t.log_every}};
}

TrainConfig train_from_json(const json& j) {
  reject_unknown(j,
                 {"batch_size", "lr_max", "lr_min", "cycle_steps", "cycle_mult", "adam_beta1", "adam_beta2",
                  "adam_epsilon", "seed", "log_every"},
                 "train");
  TrainConfig t;
  read_opt(j, "batch_size", t.batch_size, "train");
  read_opt(j, "lr_max", t.lr_max, "train");
  read_opt(j, "lr_min", t.lr_min, "train");
  read_opt(j, "cycle_steps", t.cycle_steps, "train");
  read_opt(j, "cycle_mult", t.cycle_mult, "train");
  read_opt(j, "adam_beta1", t.adam_beta1, "train");
  read_opt(j, "adam_beta2", t.adam_beta2, "train");
  read_opt(j, "adam_epsilon", t.adam_epsilon, "train");
  read_opt(j, "seed", t.seed, "train");
  read_opt(j, "log_every", t.log_every, "train");
  t.validate();
  return t;
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
}

bool is_power_of_two(Index v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

std::string loss_name(LossKind kind) { return kind == LossKind::baur ? "baur" : "adaptive"; }

LossKind parse_loss(const std::string& name) {
  if (name == "baur") return LossKind::baur;
  if (name == "adaptive") return LossKind::adaptive;
  throw std::invalid_argument("config: unknown loss '" + name + "' (expected baur or adaptive)");
}

void ModelConfig::validate() const {
  for (Index d : input_dims) {
    if (d < 1) throw std::invalid_argument("config: model.input_dims must be positive");
  }
  if (base_width < 1) throw std::invalid_argument("config: model.base_width must be >= 1");
  if (max_width < base_width) throw std::invalid_argument("config: model.max_width must be >= base_width");
  if (blocks_per_resolution < 0) throw std::invalid_argument("config: model.blocks_per_resolution must be >= 0");
  if (levels.empty()) throw std::invalid_argument("config: model.levels must not be empty");
  if (!(codebook.gamma > 0.0 && codebook.gamma < 1.0)) throw std::invalid_argument("config: model.gamma must lie in (0, 1)");
  if (!(codebook.beta >= 0.0)) throw std::invalid_argument("config: model.beta must be >= 0");
  if (!(codebook.epsilon >= 0.0)) throw std::invalid_argument("config: model.epsilon must be >= 0");
  Index previous = 0;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto& lv = levels[l];
    const std::string name = "model.levels[" + std::to_string(l) + "]";
    if (lv.code_dim < 1) throw std::invalid_argument("config: " + name + ".code_dim must be >= 1");
    if (lv.codes < 1 || lv.codes > 256) throw std::invalid_argument("config: " + name + ".codes must lie in [1, 256]");
    Index factor = 0;
    for (int a = 0; a < 3; ++a) {
      if (lv.dims[a] < 1 || input_dims[a] % lv.dims[a] != 0) {
        throw std::invalid_argument("config: " + name + ".dims must divide model.input_dims");
      }
      const Index f = input_dims[a] / lv.dims[a];
      if (a == 0) factor = f;
      if (f != factor || !is_power_of_two(f)) {
        throw std::invalid_argument("config: " + name + " must downsample every axis by the same power of two");
      }
    }
    if (l > 0 && !(factor < previous)) {
      throw std::invalid_argument("config: model.levels must be ordered coarsest first with distinct resolutions");
    }
    previous = factor;
  }
}

Index ModelConfig::level_factor(std::size_t l) const { return input_dims[0] / levels.at(l).dims[0]; }

int ModelConfig::depth() const { return std::countr_zero(static_cast<std::uint64_t>(level_factor(0))); }

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.input_dims = {24, 24, 24};
  c.levels = {{{3, 3, 3}, 16, 256}, {{6, 6, 6}, 4, 256}};
  return c;
}

ModelConfig ModelConfig::full_res() {
  ModelConfig c;
  c.input_dims = {192, 256, 192};
  c.levels = {{{3, 4, 3}, 32, 256}, {{12, 16, 12}, 8, 256}, {{48, 64, 48}, 2, 256}};
  return c;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("config: train.batch_size must be >= 1");
  if (!(lr_max > 0.0 && lr_min >= 0.0 && lr_min <= lr_max)) {
    throw std::invalid_argument("config: train learning rates need 0 <= lr_min <= lr_max, lr_max > 0");
  }
  if (cycle_steps < 1) throw std::invalid_argument("config: train.cycle_steps must be >= 1");
  if (!(cycle_mult >= 1.0)) throw std::invalid_argument("config: train.cycle_mult must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw std::invalid_argument("config: train Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("config: train.adam_epsilon must be > 0");
  if (log_every < 1) throw std::invalid_argument("config: train.log_every must be >= 1");
}

std::string model_config_json(const ModelConfig& c) { return model_to_json(c).dump(); }

ModelConfig parse_model_config(const std::string& text) { return model_from_json(parse_text(text)); }

std::string experiment_config_json(const ExperimentConfig& c) {
  return json{{"model", model_to_json(c.model)}, {"train", train_to_json(c.train)}}.dump(2);
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  const json j = parse_text(text);
  reject_unknown(j, {"model", "train"}, "root");
  ExperimentConfig c;
  if (j.contains("model")) c.model = model_from_json(j["model"]);
  if (j.contains("train")) c.train = train_from_json(j["train"]);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_experiment_config(ss.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const ModelConfig& c) {
  const std::string text = model_config_json(c);
  return fnv1a64(text.data(), text.size());
}

}  // namespace vqvol
