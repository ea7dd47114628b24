#include "test_support.hpp"
#include "json.hpp"
#include "vqvol/evaluate.hpp"
#include "vqvol/phantom.hpp"

#include <cfloat>
#include <cmath>

using namespace vqvol;

namespace {

std::vector<Volume> phantoms(int n, Cohort cohort, std::uint64_t seed0) {
  std::vector<Volume> out;
  for (int i = 0; i < n; ++i)
    out.push_back(generate_phantom(PhantomSpec::for_cohort(cohort, {16, 16, 16}, seed0 + static_cast<std::uint64_t>(i))).volume);
  return out;
}

}  // namespace

TEST(Aggregate, SampleStd) {
  Aggregate a = aggregate({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(a.mean, 2.5);
  EXPECT_DOUBLE_EQ(a.std, std::sqrt(5.0 / 3.0));
  EXPECT_EQ(aggregate({7.0}).std, 0.0);
}

TEST(EvaluatePairs, PerfectReconstruction) {
  auto x = phantoms(3, Cohort::control, 1);
  EvaluationReport r = evaluate_pairs(x, x, {"a", "b", "c"}, "P");
  EXPECT_EQ(r.ms_ssim.mean, 1.0);
  EXPECT_EQ(r.ms_ssim.std, 0.0);
  EXPECT_EQ(r.dice_wm.mean, 1.0);
  EXPECT_EQ(r.mean_dice(), 1.0);
  EXPECT_DOUBLE_EQ(r.log_mmd.mean, std::log(DBL_MIN));
  EXPECT_EQ(r.volumes[1].name, "b");
  EXPECT_EQ(r.mode, "P");
}

TEST(EvaluatePairs, WorseReconstructionScoresLower) {
  auto x = phantoms(3, Cohort::control, 10);
  auto blurred = x, flat = x;
  for (auto& v : blurred)
    for (auto& e : v.data) e = 0.7f * e + 0.15f;
  for (auto& v : flat) std::fill(v.data.begin(), v.data.end(), 0.5f);
  EvaluationReport rb = evaluate_pairs(x, blurred), rf = evaluate_pairs(x, flat);
  EXPECT_GT(rb.ms_ssim.mean, rf.ms_ssim.mean);
  EXPECT_LT(rb.log_mmd.mean, rf.log_mmd.mean);
  EXPECT_LT(rf.mean_dice(), 0.5);
  EXPECT_DOUBLE_EQ(rb.dice_gm.mean, (rb.volumes[0].dice_gm + rb.volumes[1].dice_gm + rb.volumes[2].dice_gm) / 3);
}

TEST(EvaluatePairs, Errors) {
  auto x = phantoms(2, Cohort::control, 20);
  EXPECT_THROW(evaluate_pairs({}, {}), std::invalid_argument);
  EXPECT_THROW(evaluate_pairs(x, {x[0]}), std::invalid_argument);
  EXPECT_THROW(evaluate_pairs(x, x, {"only"}), std::invalid_argument);
  EXPECT_TRUE(std::isnan(evaluate_pairs({x[0]}, {x[0]}).log_mmd.mean));
}

TEST(ReportJson, HasMetricKeys) {
  auto x = phantoms(2, Cohort::atrophy, 30);
  auto j = nlohmann::json::parse(report_json(evaluate_pairs(x, x, {}, "PB")));
  EXPECT_EQ(j["mode"], "PB");
  for (const char* k : {"MS-SSIM", "log(MMD)", "Dice WM", "Dice GM", "Dice CSF"}) {
    ASSERT_TRUE(j["metrics"].contains(k)) << k;
    EXPECT_TRUE(j["metrics"][k].contains("mean"));
    EXPECT_TRUE(j["metrics"][k].contains("std"));
  }
  EXPECT_EQ(j["volumes"].size(), 2u);
  EXPECT_EQ(j["volumes"][0]["name"], "volume_0");
}

TEST(EvaluateModel, ReconstructsInBatches) {
  ModelConfig c;
  c.input_dims = {16, 16, 16};
  c.base_width = 2;
  c.blocks_per_resolution = 1;
  c.levels = {{{2, 2, 2}, 4, 16}, {{4, 4, 4}, 2, 16}};
  Model<float> m(c, 1);
  auto x = phantoms(5, Cohort::control, 40);
  auto a = reconstruct_all(m, x, 2), b = reconstruct_all(m, x, 5);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].dims, x[i].dims);
    for (std::size_t k = 0; k < a[i].data.size(); ++k) ASSERT_NEAR(a[i].data[k], b[i].data[k], 1e-6);
  }
  EvaluationReport r = evaluate_model(m, x);
  EXPECT_EQ(r.volumes.size(), 5u);
  EXPECT_LT(r.ms_ssim.mean, 1.0);
}
