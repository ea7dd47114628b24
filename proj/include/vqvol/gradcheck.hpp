#pragma once

#include "vqvol/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace vqvol {

struct GradCheckOptions {
  double step = 1e-6;
  double tolerance = 1e-4;
  /// Entries probed per input; all of them when <= 0.
  Index max_entries_per_input = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  /// max_i |reverse_i - fd_i| / max_i max(|reverse_i|, |fd_i|), worst over inputs.
  double max_relative_error = 0.0;
  double max_abs_error = 0.0;
  Index entries_checked = 0;
  Index worst_input = -1;
  Index worst_entry = -1;
  bool passed = true;
};

/// Compares reverse-mode gradients of a scalar-valued function against
/// central finite differences, all in 64-bit. `fn` must rebuild the graph from
/// the current values of `inputs` on every call.
GradCheckReport check_gradients(const std::function<Tensor<double>()>& fn,
                                 std::vector<Tensor<double>> inputs,
                                 const GradCheckOptions& options = {});

}  // namespace vqvol
