#include "vqvol/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vqvol {

template <typename Scalar>
void Adam::step(const ParameterList<Scalar>& params, double lr) {
  if (slots_.empty()) {
    for (const auto& [name, t] : params) {
      slots_.push_back({name, Eigen::VectorXd::Zero(t->size()), Eigen::VectorXd::Zero(t->size())});
    }
  }
  if (slots_.size() != params.size()) {
    throw std::invalid_argument("adam: parameter count changed from " + std::to_string(slots_.size()) + " to " +
                                std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (slots_[i].name != params[i].first || slots_[i].m.size() != params[i].second->size()) {
      throw std::invalid_argument("adam: parameter '" + params[i].first + "' does not match optimizer state '" +
                                  slots_[i].name + "'");
    }
  }
  ++steps_;
  last_lr_ = lr;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<Scalar>& p = *params[i].second;
    Slot& s = slots_[i];
    const Eigen::VectorXd g = p.has_grad() ? p.grad().template cast<double>().eval() : Eigen::VectorXd::Zero(p.size());
    s.m = b1 * s.m + (1.0 - b1) * g;
    s.v = b2 * s.v + (1.0 - b2) * g.cwiseAbs2();
    auto& values = p.mutable_values();
    for (Index k = 0; k < values.size(); ++k) {
      const double mh = s.m(k) / c1, vh = s.v(k) / c2;
      values(k) = static_cast<Scalar>(static_cast<double>(values(k)) - lr * mh / (std::sqrt(vh) + options_.epsilon));
    }
  }
}

void Adam::restore(long long steps, double last_lr, std::vector<Slot> slots) {
  if (steps < 0) throw std::invalid_argument("adam: negative step count");
  for (const auto& s : slots) {
    if (s.m.size() != s.v.size()) throw std::invalid_argument("adam: moment sizes differ for '" + s.name + "'");
  }
  steps_ = steps;
  last_lr_ = last_lr;
  slots_ = std::move(slots);
}

double SgdrSchedule::lr(long long step) const {
  if (step < 0) throw std::invalid_argument("sgdr: negative step");
  if (cycle_steps < 1 || cycle_mult < 1.0) throw std::invalid_argument("sgdr: invalid cycle");
  double t = static_cast<double>(step);
  double T = static_cast<double>(cycle_steps);
  if (cycle_mult == 1.0) {
    t = std::fmod(t, T);
  } else {
    while (t >= T) {
      t -= T;
      T *= cycle_mult;
    }
  }
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * t / T));
}

template void Adam::step(const ParameterList<float>&, double);
template void Adam::step(const ParameterList<double>&, double);

}  // namespace vqvol
