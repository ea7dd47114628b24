#include "vqvol/evaluate.hpp"

#include "json.hpp"

#include <cmath>
#include <stdexcept>

namespace vqvol {

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double q = 0.0;
    for (double v : values) q += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(q / static_cast<double>(values.size() - 1));
  }
  return a;
}

EvaluationReport evaluate_pairs(const std::vector<Volume>& originals, const std::vector<Volume>& reconstructions,
                                const std::vector<std::string>& names, const std::string& mode) {
  if (originals.empty()) throw std::invalid_argument("evaluate: empty test set");
  if (originals.size() != reconstructions.size()) throw std::invalid_argument("evaluate: originals and reconstructions differ in count");
  if (!names.empty() && names.size() != originals.size()) throw std::invalid_argument("evaluate: one name per volume required");
  EvaluationReport r;
  r.mode = mode;
  const MsSsimOptions options = ms_ssim_options_for(originals.front().dims);
  std::vector<double> ssim, wm, gm, csf;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    VolumeScores s;
    s.name = names.empty() ? "volume_" + std::to_string(i) : names[i];
    s.ms_ssim = ms_ssim(originals[i], reconstructions[i], options);
    const SegmentationMask a = segment_tissues(originals[i]);
    const SegmentationMask b = segment_tissues(reconstructions[i]);
    s.dice_wm = dice(a, b, Tissue::wm);
    s.dice_gm = dice(a, b, Tissue::gm);
    s.dice_csf = dice(a, b, Tissue::csf);
    ssim.push_back(s.ms_ssim);
    wm.push_back(s.dice_wm);
    gm.push_back(s.dice_gm);
    csf.push_back(s.dice_csf);
    r.volumes.push_back(s);
  }
  r.ms_ssim = aggregate(ssim);
  r.dice_wm = aggregate(wm);
  r.dice_gm = aggregate(gm);
  r.dice_csf = aggregate(csf);
  if (originals.size() >= 2) {
    r.log_mmd = {log_mmd(mmd2(originals, reconstructions)), 0.0};
  } else {
    r.log_mmd = {std::nan(""), 0.0};
  }
  return r;
}

std::vector<Volume> reconstruct_all(const Model<float>& model, const std::vector<Volume>& volumes, Index batch_size) {
  if (batch_size < 1) throw std::invalid_argument("reconstruct_all: batch size must be positive");
  NoGradGuard guard;
  std::vector<Volume> out;
  for (std::size_t start = 0; start < volumes.size(); start += static_cast<std::size_t>(batch_size)) {
    std::vector<const Volume*> batch;
    for (std::size_t i = start; i < std::min(volumes.size(), start + static_cast<std::size_t>(batch_size)); ++i) batch.push_back(&volumes[i]);
    std::vector<Volume> rec = from_batch(model.reconstruct(to_batch<float>(batch)));
    for (std::size_t i = 0; i < rec.size(); ++i) {
      rec[i].spacing = batch[i]->spacing;
      out.push_back(std::move(rec[i]));
    }
  }
  return out;
}

EvaluationReport evaluate_model(const Model<float>& model, const std::vector<Volume>& test,
                                const std::vector<std::string>& names, const std::string& mode) {
  return evaluate_pairs(test, reconstruct_all(model, test), names, mode);
}

std::string report_json(const EvaluationReport& r) {
  using nlohmann::json;
  auto agg = [](const Aggregate& a) {
    json j;
    j["mean"] = std::isfinite(a.mean) ? json(a.mean) : json(nullptr);
    j["std"] = a.std;
    return j;
  };
  json volumes = json::array();
  for (const auto& v : r.volumes) {
    volumes.push_back({{"name", v.name}, {"MS-SSIM", v.ms_ssim}, {"Dice WM", v.dice_wm}, {"Dice GM", v.dice_gm}, {"Dice CSF", v.dice_csf}});
  }
  json j;
  j["mode"] = r.mode;
  j["n"] = r.volumes.size();
  j["metrics"] = {{"MS-SSIM", agg(r.ms_ssim)},
                  {"log(MMD)", agg(r.log_mmd)},
                  {"Dice WM", agg(r.dice_wm)},
                  {"Dice GM", agg(r.dice_gm)},
                  {"Dice CSF", agg(r.dice_csf)}};
  j["volumes"] = volumes;
  return j.dump(2);
}

}  // namespace vqvol
