#pragma once

#include "vqvol/tensor.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>

namespace vqvol::test {

inline Tensor<double> random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0,
                                    bool requires_grad = true) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  VectorX<double> v(element_count(shape));
  for (Index i = 0; i < v.size(); ++i) v(i) = u(rng);
  return Tensor<double>(std::move(shape), std::move(v), requires_grad);
}

/// Values with magnitude in [lo, hi] and random sign, away from kinks at zero.
inline Tensor<double> signed_away_from_zero(Shape shape, std::uint64_t seed, double lo = 0.2, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::bernoulli_distribution sign(0.5);
  VectorX<double> v(element_count(shape));
  for (Index i = 0; i < v.size(); ++i) v(i) = sign(rng) ? u(rng) : -u(rng);
  return Tensor<double>(std::move(shape), std::move(v), true);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::path(::testing::TempDir()) / ("vqvol_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace vqvol::test
