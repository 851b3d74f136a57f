#pragma once

#include "clutter/mpnn.hpp"

namespace clutter {

// Step-decay schedule: lr halves every halve_every steps.
struct LrSchedule {
  double base = 1e-3;
  long long halve_every = 128000;

  double at(long long step) const {
    return base * std::pow(0.5, static_cast<double>(step / halve_every));
  }
};

struct OptimConfig {
  LrSchedule schedule;
  double momentum = 0.0;  // 0 = plain gradient descent
  bool adam = false;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

// Applies accumulated model gradients and advances the step counter.
class Optimizer {
 public:
  explicit Optimizer(OptimConfig cfg = {}) : cfg_(cfg) {}

  long long steps() const { return steps_; }
  double current_lr() const { return cfg_.schedule.at(steps_); }

  void step(MPNNModel& model) {
    auto& ps = model.params();
    if (state_.empty()) {
      state_.resize(ps.size());
      for (std::size_t i = 0; i < ps.size(); ++i) {
        state_[i].m = Tensor(ps[i].w.rows, ps[i].w.cols);
        state_[i].v = Tensor(ps[i].w.rows, ps[i].w.cols);
      }
    }
    double lr = current_lr();
    ++steps_;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      Tensor& w = ps[i].w;
      Tensor& g = ps[i].g;
      if (!all_finite(g))
        throw std::runtime_error("non-finite gradient in " + ps[i].name);
      if (cfg_.adam) {
        double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
        double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
        double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
        for (std::size_t k = 0; k < w.size(); ++k) {
          double& m = state_[i].m.v[k];
          double& v = state_[i].v.v[k];
          m = b1 * m + (1.0 - b1) * g.v[k];
          v = b2 * v + (1.0 - b2) * g.v[k] * g.v[k];
          w.v[k] -= lr * (m / c1) / (std::sqrt(v / c2) + cfg_.adam_eps);
        }
      } else if (cfg_.momentum > 0.0) {
        for (std::size_t k = 0; k < w.size(); ++k) {
          double& m = state_[i].m.v[k];
          m = cfg_.momentum * m + g.v[k];
          w.v[k] -= lr * m;
        }
      } else {
        for (std::size_t k = 0; k < w.size(); ++k) w.v[k] -= lr * g.v[k];
      }
    }
  }

 private:
  struct Slot {
    Tensor m, v;
  };
  OptimConfig cfg_;
  std::vector<Slot> state_;
  long long steps_ = 0;
};

}  // namespace clutter
