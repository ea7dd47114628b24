#include "test_support.hpp"
#include "vqvol/phantom.hpp"
#include "vqvol/trainer.hpp"

#include <set>

using namespace vqvol;

namespace {

ExperimentConfig tiny_experiment() {
  ExperimentConfig e;
  e.model.base_width = 2;
  e.model.blocks_per_resolution = 1;
  e.train.batch_size = 2;
  e.train.seed = 5;
  e.train.lr_max = 3e-3;
  e.train.lr_min = 1e-4;
  e.train.cycle_steps = 40;
  return e;
}

std::vector<Volume> phantoms(int n, std::uint64_t seed0 = 200) {
  std::vector<Volume> out;
  for (int i = 0; i < n; ++i)
    out.push_back(
        generate_phantom(PhantomSpec::for_cohort(Cohort::control, {24, 24, 24}, seed0 + static_cast<std::uint64_t>(i)))
            .volume);
  return out;
}

}  // namespace

TEST(BatchIndices, EpochsArePermutations) {
  std::multiset<Index> seen;
  for (long long step = 0; step < 5; ++step)
    for (Index i : batch_indices(step, 2, 10, 7)) seen.insert(i);
  for (Index i = 0; i < 10; ++i) EXPECT_EQ(seen.count(i), 1u);
  EXPECT_EQ(batch_indices(3, 4, 7, 1), batch_indices(3, 4, 7, 1));
  EXPECT_NE(batch_indices(0, 7, 7, 1), batch_indices(0, 7, 7, 2));
  EXPECT_EQ(batch_indices(0, 3, 1, 9), (std::vector<Index>{0, 0, 0}));
  EXPECT_THROW(batch_indices(0, 0, 3, 1), std::invalid_argument);
}

TEST(Trainer, LossDecreases) {
  TrainingState s = initial_state(tiny_experiment());
  const auto data = phantoms(4);
  const double before = reconstruction_loss(s.model, data, 2);
  std::vector<TrainLogEntry> seen;
  auto log = train(s, data, 40, [&](const TrainLogEntry& e) { seen.push_back(e); });
  ASSERT_EQ(log.size(), 40u);
  EXPECT_EQ(seen.size(), 40u);
  EXPECT_EQ(s.step, 40);
  EXPECT_EQ(s.adam.steps(), 40);
  EXPECT_LT(reconstruction_loss(s.model, data, 2), 0.8 * before);
  for (const auto& e : log) {
    EXPECT_TRUE(std::isfinite(e.total));
    EXPECT_GE(e.perplexity, 1.0);
  }
  EXPECT_EQ(log[0].lr, 3e-3);
}

TEST(Trainer, DeterministicGivenSeed) {
  const auto data = phantoms(3);
  TrainingState a = initial_state(tiny_experiment()), b = initial_state(tiny_experiment());
  auto la = train(a, data, 3);
  auto lb = train(b, data, 3);
  for (std::size_t i = 0; i < la.size(); ++i) EXPECT_EQ(la[i].total, lb[i].total);
}

TEST(Trainer, RejectsMismatchedData) {
  TrainingState s = initial_state(tiny_experiment());
  EXPECT_THROW(train(s, {}, 1), std::invalid_argument);
  EXPECT_THROW(train(s, {Volume(Dims3{24, 24, 16})}, 1), std::invalid_argument);
}

TEST(Trainer, FineTuneKeepsWeightsResetsOptimizer) {
  TrainingState pre = initial_state(tiny_experiment());
  train(pre, phantoms(2), 2);
  ExperimentConfig cfg = tiny_experiment();
  cfg.train.seed = 11;
  TrainingState ft = fine_tune_state(pre, cfg);
  EXPECT_EQ(ft.step, 0);
  EXPECT_EQ(ft.adam.steps(), 0);
  EXPECT_EQ(ft.mode, "PB");
  EXPECT_EQ(ft.data_seed, 11u);
  EXPECT_EQ(ft.model.parameters().front().second->values(), pre.model.parameters().front().second->values());
  cfg.model.base_width = 4;
  EXPECT_THROW(fine_tune_state(pre, cfg), std::invalid_argument);
}
