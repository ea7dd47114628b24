#include "vqvol/trainer.hpp"

#include "vqvol/ops.hpp"

#include <numeric>
#include <random>
#include <stdexcept>

namespace vqvol {

namespace {

void check_dataset(const ModelConfig& config, const std::vector<Volume>& data) {
  if (data.empty()) throw std::invalid_argument("train: dataset is empty");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].dims != config.input_dims) {
      throw std::invalid_argument("train: volume " + std::to_string(i) + " has dims " + to_string(Shape(data[i].dims.begin(), data[i].dims.end())) +
                                  ", model expects " + to_string(Shape(config.input_dims.begin(), config.input_dims.end())));
    }
  }
}

std::vector<const Volume*> gather(const std::vector<Volume>& data, const std::vector<Index>& idx) {
  std::vector<const Volume*> out;
  for (Index i : idx) out.push_back(&data[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

TrainingState initial_state(const ExperimentConfig& config, std::string mode) {
  config.train.validate();
  TrainingState s;
  s.config = config;
  s.model = Model<float>(config.model, config.train.seed);
  s.adam = Adam(AdamOptions{config.train.adam_beta1, config.train.adam_beta2, config.train.adam_epsilon});
  s.data_seed = config.train.seed;
  s.mode = std::move(mode);
  return s;
}

TrainingState fine_tune_state(TrainingState pretrained, const ExperimentConfig& config, std::string mode) {
  if (!(pretrained.config.model == config.model)) {
    throw std::invalid_argument("fine-tune: checkpoint model config differs from the requested config");
  }
  config.train.validate();
  pretrained.config.train = config.train;
  pretrained.adam = Adam(AdamOptions{config.train.adam_beta1, config.train.adam_beta2, config.train.adam_epsilon});
  pretrained.step = 0;
  pretrained.data_seed = config.train.seed;
  pretrained.mode = std::move(mode);
  return pretrained;
}

std::vector<Index> batch_indices(long long step, Index batch_size, Index dataset_size, std::uint64_t seed) {
  if (dataset_size < 1 || batch_size < 1) throw std::invalid_argument("batch_indices: empty dataset or batch");
  std::vector<Index> out;
  std::vector<Index> perm;
  long long cached_epoch = -1;
  for (Index j = 0; j < batch_size; ++j) {
    const long long item = step * batch_size + j;
    const long long epoch = item / dataset_size;
    if (epoch != cached_epoch) {
      perm.resize(static_cast<std::size_t>(dataset_size));
      std::iota(perm.begin(), perm.end(), Index{0});
      std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(epoch));
      for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng() % i)]);
      cached_epoch = epoch;
    }
    out.push_back(perm[static_cast<std::size_t>(item % dataset_size)]);
  }
  return out;
}

std::vector<TrainLogEntry> train(TrainingState& state, const std::vector<Volume>& data, long long steps,
                                 const TrainLogSink& sink) {
  if (steps < 0) throw std::invalid_argument("train: negative step count");
  check_dataset(state.config.model, data);
  const TrainConfig& tc = state.config.train;
  const SgdrSchedule schedule{tc.lr_max, tc.lr_min, tc.cycle_steps, tc.cycle_mult};
  ParameterList<float> params = state.model.parameters();
  std::vector<TrainLogEntry> log;
  for (long long i = 0; i < steps; ++i) {
    const long long step = state.step;
    const Tensor<float> x = to_batch<float>(gather(data, batch_indices(step, tc.batch_size, static_cast<Index>(data.size()), state.data_seed)));
    for (auto& p : params) p.second->zero_grad();
    LossParts<float> parts = state.model.forward_loss(x);
    parts.total.backward();
    const double lr = schedule.lr(step);
    state.adam.step(params, lr);
    state.model.update_codebooks(parts.latents);

    TrainLogEntry e;
    e.step = step;
    e.lr = lr;
    e.total = parts.total.item();
    e.reconstruction = parts.reconstruction_loss.item();
    for (const auto& c : parts.codebook_losses) e.codebook += c.item();
    e.mse = (parts.reconstruction.values() - x.values()).squaredNorm() / static_cast<double>(x.size());
    const auto& fine = state.model.codebooks().back();
    e.perplexity = codebook_stats(parts.latents.levels.back().grids, fine.size()).perplexity;
    log.push_back(e);
    if (sink) sink(e);
    ++state.step;
  }
  return log;
}

double reconstruction_loss(const Model<float>& model, const std::vector<Volume>& data, Index batch_size) {
  check_dataset(model.config(), data);
  if (batch_size < 1) throw std::invalid_argument("reconstruction_loss: batch size must be positive");
  NoGradGuard guard;
  double total = 0.0;
  for (std::size_t start = 0; start < data.size(); start += static_cast<std::size_t>(batch_size)) {
    std::vector<const Volume*> batch;
    for (std::size_t i = start; i < std::min(data.size(), start + static_cast<std::size_t>(batch_size)); ++i) batch.push_back(&data[i]);
    const LossParts<float> parts = model.forward_loss(to_batch<float>(batch));
    total += parts.reconstruction_loss.item() * static_cast<double>(batch.size());
  }
  return total / static_cast<double>(data.size());
}

}  // namespace vqvol
