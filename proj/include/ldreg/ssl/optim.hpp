#pragma once

#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "ldreg/error.hpp"

namespace ldreg::ssl {

enum class OptimizerKind { sgd, adam };

inline std::string_view to_string(OptimizerKind k) noexcept {
  return k == OptimizerKind::sgd ? "sgd" : "adam";
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Plain gradient descent or Adam over a fixed list of parameter arrays.
/// The first call to step() fixes the layout; later calls must match it.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {
    if (!(cfg.learning_rate >= 0.0)) throw UsageError("learning rate must be >= 0");
  }

  void step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<double>>& grads) {
    if (params.size() != grads.size()) throw UsageError("optimizer: parameter/gradient mismatch");
    for (std::size_t p = 0; p < params.size(); ++p)
      if (params[p].size() != grads[p].size())
        throw UsageError("optimizer: parameter/gradient size mismatch");
    if (cfg_.kind == OptimizerKind::sgd) {
      for (std::size_t p = 0; p < params.size(); ++p)
        for (std::size_t j = 0; j < params[p].size(); ++j)
          params[p][j] -= cfg_.learning_rate * grads[p][j];
      return;
    }
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
      }
    } else if (m_.size() != params.size()) {
      throw UsageError("optimizer: parameter layout changed between steps");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& m = m_[p];
      auto& v = v_[p];
      for (std::size_t j = 0; j < params[p].size(); ++j) {
        const double g = grads[p][j];
        m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
        v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m[j] / c1;
        const double vhat = v[j] / c2;
        params[p][j] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      }
    }
  }

  const OptimizerConfig& config() const noexcept { return cfg_; }

 private:
  OptimizerConfig cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long t_ = 0;
};

}  // namespace ldreg::ssl
