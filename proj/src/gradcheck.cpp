#include "vqvol/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace vqvol {

GradCheckReport check_gradients(const std::function<Tensor<double>()>& fn,
                                std::vector<Tensor<double>> inputs,
                                const GradCheckOptions& options) {
  for (auto& t : inputs) {
    if (!t.requires_grad()) throw std::invalid_argument("check_gradients: input does not require grad");
    t.zero_grad();
  }
  {
    Tensor<double> out = fn();
    out.backward();
  }
  std::vector<VectorX<double>> analytic;
  analytic.reserve(inputs.size());
  for (const auto& t : inputs) analytic.push_back(t.grad());

  auto evaluate = [&] {
    NoGradGuard guard;
    return fn().item();
  };

  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto& values = inputs[k].mutable_values();
    std::vector<Index> entries(static_cast<std::size_t>(values.size()));
    std::iota(entries.begin(), entries.end(), Index{0});
    if (options.max_entries_per_input > 0 &&
        static_cast<Index>(entries.size()) > options.max_entries_per_input) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(static_cast<std::size_t>(options.max_entries_per_input));
    }
    double max_diff = 0.0;
    double scale = 0.0;
    Index worst = -1;
    for (Index i : entries) {
      const double saved = values(i);
      values(i) = saved + options.step;
      const double up = evaluate();
      values(i) = saved - options.step;
      const double down = evaluate();
      values(i) = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double diff = std::abs(numeric - analytic[k](i));
      scale = std::max({scale, std::abs(numeric), std::abs(analytic[k](i))});
      if (diff > max_diff) {
        max_diff = diff;
        worst = i;
      }
      ++report.entries_checked;
    }
    const double rel = scale > 0.0 ? max_diff / scale : max_diff;
    report.max_abs_error = std::max(report.max_abs_error, max_diff);
    if (rel > report.max_relative_error || report.worst_input < 0) {
      if (rel >= report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_input = static_cast<Index>(k);
        report.worst_entry = worst;
      }
    }
  }
  report.passed = report.max_relative_error < options.tolerance;
  return report;
}

}  // namespace vqvol
