#pragma once

#include "vqvol/layers.hpp"

#include <string>
#include <vector>

namespace vqvol {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam. Moments are kept in double and keyed by position in
/// the parameter list, whose names are recorded for checkpoint validation.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamOptions options) : options_(options) {}

  /// One update of every parameter from its accumulated gradient. A parameter
  /// without a gradient is treated as having a zero gradient.
  template <typename Scalar>
  void step(const ParameterList<Scalar>& params, double lr);

  const AdamOptions& options() const { return options_; }
  long long steps() const { return steps_; }
  double last_lr() const { return last_lr_; }

  struct Slot {
    std::string name;
    Eigen::VectorXd m;
    Eigen::VectorXd v;
  };
  const std::vector<Slot>& slots() const { return slots_; }
  void restore(long long steps, double last_lr, std::vector<Slot> slots);

 private:
  AdamOptions options_;
  long long steps_ = 0;
  double last_lr_ = 0.0;
  std::vector<Slot> slots_;
};

/// Cosine annealing with warm restarts: cycle i lasts T * mult^i steps and
/// lr = lr_min + (lr_max - lr_min) (1 + cos(pi t_cur / T_i)) / 2.
struct SgdrSchedule {
  double lr_max = 1e-4;
  double lr_min = 1e-6;
  long long cycle_steps = 100;
  double cycle_mult = 2.0;

  double lr(long long step) const;
};

}  // namespace vqvol
