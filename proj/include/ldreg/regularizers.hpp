#pragma once

// Dimensionality regularizers over a batch of representations and their
// analytic gradients with respect to that batch.
//
// LIDs are estimated with the batch as its own reference set. During
// backpropagation the reference rows are constants and each query's
// neighbour set is frozen at its forward-pass value, so only the query
// row's distances carry gradient:
//
//   dLID/dmu = w / (w - mu)^2      dLID/dw = -mu / (w - mu)^2
//   dd_ij/dx_i = (x_i - x_j) / d_ij

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ldreg/error.hpp"
#include "ldreg/lidest.hpp"
#include "ldreg/matrix.hpp"

namespace ldreg {

enum class RegKind { l1, l2, target_lid, min_lid, none };

inline std::string_view to_string(RegKind k) noexcept {
  switch (k) {
    case RegKind::l1: return "l1";
    case RegKind::l2: return "l2";
    case RegKind::target_lid: return "target";
    case RegKind::min_lid: return "minlid";
    case RegKind::none: return "none";
  }
  return "?";
}

struct RegularizerConfig {
  RegKind kind = RegKind::none;
  double beta = 0.0;
  std::size_t k = kDefaultK;
  double target_id = 1.0;
  MomMode estimator_mode = MomMode::pseudocode;
  DegeneratePolicy degenerate_policy = DegeneratePolicy::error;
  /// Per-sample abs / sqrt(square) aggregation instead of the batch form.
  bool pseudocode_parity = false;
  /// Reference rows are constants in the backward pass. When false the
  /// gradient also flows through every row's role as a reference, giving
  /// the exact gradient of the loss with frozen neighbour sets.
  bool detach_reference = true;

  void validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw UsageError("beta must be >= 0");
    if (k < 2) throw UsageError("k must be at least 2");
    if (kind == RegKind::target_lid && !(target_id > 0.0))
      throw UsageError("target LID must be positive");
  }
};

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;
};

/// -(1/N) sum ln ID_i, or -(1/N) sum |ln ID_i| with parity.
inline double ldreg_l1_value(const LidBatch& lids, bool pseudocode_parity = false) {
  detail::check_positive(lids);
  double acc = 0.0;
  for (double v : lids.values) acc += pseudocode_parity ? std::abs(std::log(v)) : std::log(v);
  return -acc / static_cast<double>(lids.size());
}

/// -sqrt((1/N) sum (ln ID_i)^2), or -(1/N) sum sqrt((ln ID_i)^2) with parity.
inline double ldreg_l2_value(const LidBatch& lids, bool pseudocode_parity = false) {
  detail::check_positive(lids);
  const auto n = static_cast<double>(lids.size());
  double acc = 0.0;
  for (double v : lids.values) {
    const double l = std::log(v);
    acc += pseudocode_parity ? std::sqrt(l * l) : l * l;
  }
  return pseudocode_parity ? -acc / n : -std::sqrt(acc / n);
}

/// (1/N) sum (ln(ID_i / target))^2, the mean squared AFR distance to target.
inline double target_lid_value(const LidBatch& lids, double target) {
  detail::check_positive(lids);
  if (!(target > 0.0)) throw UsageError("target LID must be positive");
  const double lt = std::log(target);
  double acc = 0.0;
  for (double v : lids.values) {
    const double d = std::log(v) - lt;
    acc += d * d;
  }
  return acc / static_cast<double>(lids.size());
}

/// +(1/N) sum ln ID_i
inline double min_lid_value(const LidBatch& lids) {
  detail::check_positive(lids);
  double acc = 0.0;
  for (double v : lids.values) acc += std::log(v);
  return acc / static_cast<double>(lids.size());
}

inline double reg_value(const LidBatch& lids, const RegularizerConfig& cfg) {
  switch (cfg.kind) {
    case RegKind::l1: return ldreg_l1_value(lids, cfg.pseudocode_parity);
    case RegKind::l2: return ldreg_l2_value(lids, cfg.pseudocode_parity);
    case RegKind::target_lid: return target_lid_value(lids, cfg.target_id);
    case RegKind::min_lid: return min_lid_value(lids);
    case RegKind::none: return 0.0;
  }
  throw UsageError("unknown regularizer");
}

/// dL/dID_i for each sample.
inline std::vector<double> reg_outer_grad(const LidBatch& lids, const RegularizerConfig& cfg) {
  const std::size_t n = lids.size();
  const auto nd = static_cast<double>(n);
  std::vector<double> g(n, 0.0);
  const auto sign = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
  switch (cfg.kind) {
    case RegKind::l1:
      for (std::size_t i = 0; i < n; ++i) {
        const double v = lids.values[i];
        g[i] = cfg.pseudocode_parity ? -sign(std::log(v)) / (nd * v) : -1.0 / (nd * v);
      }
      break;
    case RegKind::l2:
      if (cfg.pseudocode_parity) {
        for (std::size_t i = 0; i < n; ++i) {
          const double v = lids.values[i];
          g[i] = -sign(std::log(v)) / (nd * v);
        }
      } else {
        double s = 0.0;
        for (double v : lids.values) s += std::log(v) * std::log(v);
        const double root = std::sqrt(s / nd);
        if (root > 0.0)
          for (std::size_t i = 0; i < n; ++i) {
            const double v = lids.values[i];
            g[i] = -std::log(v) / (nd * v * root);
          }
      }
      break;
    case RegKind::target_lid: {
      const double lt = std::log(cfg.target_id);
      for (std::size_t i = 0; i < n; ++i) {
        const double v = lids.values[i];
        g[i] = 2.0 * (std::log(v) - lt) / (nd * v);
      }
      break;
    }
    case RegKind::min_lid:
      for (std::size_t i = 0; i < n; ++i) g[i] = 1.0 / (nd * lids.values[i]);
      break;
    case RegKind::none: break;
  }
  return g;
}

struct RegEvaluation {
  LossAndGrad value;
  LidBatch lids;
};

/// Regularizer value and analytic gradient with frozen neighbour sets
/// (references detached unless configured otherwise). Clamped samples
/// contribute no gradient.
inline RegEvaluation reg_evaluate(const Matrix& x, const RegularizerConfig& cfg) {
  cfg.validate();
  RegEvaluation out{{0.0, Matrix(x.rows(), x.cols())}, {}};
  if (cfg.kind == RegKind::none) return out;
  check_batch_shape(x, cfg.k);
  if (!x.all_finite()) throw DataError("regularizer input is not finite");

  const std::size_t n = x.rows();
  const std::size_t k = cfg.k;
  const auto neighbors = batch_neighbors(x, x, k);

  LidBatch& lids = out.lids;
  lids.k = k;
  lids.estimator = estimator_for(cfg.estimator_mode);
  lids.values.resize(n);
  std::vector<bool> clamped(n, false);
  std::vector<MomParts> parts(n);
  NeighborProfile profile;
  profile.distances.resize(k);
  for (std::size_t i = 0; i < n; ++i) {
    profile.query_index = i;
    for (std::size_t j = 0; j < k; ++j) profile.distances[j] = neighbors[i][j].distance;
    const auto e = lid_mom(profile, cfg.estimator_mode, cfg.degenerate_policy);
    lids.values[i] = e.value;
    clamped[i] = e.clamped;
    parts[i] = mom_parts(profile.distances, cfg.estimator_mode);
    if (e.clamped) ++lids.clamped_count;
  }

  out.value.loss = reg_value(lids, cfg);
  const auto outer = reg_outer_grad(lids, cfg);

  Matrix& grad = out.value.grad;
  for (std::size_t i = 0; i < n; ++i) {
    if (clamped[i] || outer[i] == 0.0) continue;
    const auto [mu, w, count] = parts[i];
    const double gap = w - mu;
    const double d_mu = outer[i] * w / (gap * gap) / static_cast<double>(count);
    const double d_w = -outer[i] * mu / (gap * gap);
    auto gi = grad.row(i);
    const auto xi = x.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      double coeff = (j < count ? d_mu : 0.0) + (j + 1 == k ? d_w : 0.0);
      if (coeff == 0.0) continue;
      const auto& nb = neighbors[i][j];
      if (!(nb.distance > 0.0)) {
        // Under clamping a coincident pair takes the zero subgradient.
        if (cfg.degenerate_policy == DegeneratePolicy::clamp) continue;
        throw NumericError("zero distance between distinct points in gradient path", i);
      }
      coeff /= nb.distance;
      const auto xj = x.row(nb.index);
      for (std::size_t d = 0; d < x.cols(); ++d) gi[d] += coeff * (xi[d] - xj[d]);
      if (!cfg.detach_reference) {
        auto gj = grad.row(nb.index);
        for (std::size_t d = 0; d < x.cols(); ++d) gj[d] -= coeff * (xi[d] - xj[d]);
      }
    }
  }
  return out;
}

inline LossAndGrad reg_loss_and_grad(const Matrix& x, const RegularizerConfig& cfg) {
  return reg_evaluate(x, cfg).value;
}

/// L_ssl + beta * L_reg, gradients summed the same way.
inline LossAndGrad total_loss(const LossAndGrad& ssl, const LossAndGrad& reg, double beta) {
  if (!ssl.grad.same_shape(reg.grad)) throw UsageError("total_loss: gradient shape mismatch");
  if (!(beta >= 0.0)) throw UsageError("total_loss: beta must be >= 0");
  LossAndGrad out{ssl.loss + beta * reg.loss, ssl.grad};
  out.grad.add_scaled(reg.grad, beta);
  return out;
}

}  // namespace ldreg
