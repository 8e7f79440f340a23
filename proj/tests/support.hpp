#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>

#include "ldreg/geometry.hpp"
#include "ldreg/lidest.hpp"
#include "ldreg/matrix.hpp"
#include "ldreg/numerics.hpp"
#include "ldreg/regularizers.hpp"

namespace ldreg::testing {

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                              double scale = 1.0) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = scale * rng.gaussian();
  return m;
}

/// Central differences with step h = 1e-6 * (1 + |x|) on every entry.
inline Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x.data()[i];
    const double h = 1e-6 * (1.0 + std::abs(x0));
    probe.data()[i] = x0 + h;
    const double up = f(probe);
    probe.data()[i] = x0 - h;
    const double down = f(probe);
    probe.data()[i] = x0;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max |a - b| / max |b|: entries are compared against the scale of the
/// reference gradient so near-zero components do not dominate.
inline double relative_error(const Matrix& analytic, const Matrix& reference) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic.data()[i] - reference.data()[i]));
    scale = std::max(scale, std::abs(reference.data()[i]));
  }
  return diff / std::max(scale, 1e-300);
}

/// Regularizer loss with the reference set held at `refs`: row i of
/// `queries` is scored against refs with its own index excluded.
inline double detached_loss(const Matrix& queries, const Matrix& refs, const RegularizerConfig& cfg) {
  LidBatch lids;
  lids.k = cfg.k;
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    NeighborProfile p{i, {}};
    for (const auto& n : nearest_rows(queries.row(i), refs, cfg.k, i))
      p.distances.push_back(n.distance);
    lids.values.push_back(lid_mom(p, cfg.estimator_mode).value);
  }
  return reg_value(lids, cfg);
}

/// Regularizer loss with queries and references both equal to `x`.
inline double full_loss(const Matrix& x, const RegularizerConfig& cfg) {
  return reg_value(batch_lids(x, cfg.k, estimator_for(cfg.estimator_mode)), cfg);
}

/// Quadrature of the Fisher information integral for H_{w|theta}: the
/// integrand (d/dtheta ln h)^2 h with h(r) = theta/r (r/w)^theta, after the
/// substitution r = w t^(2/theta) that removes the endpoint singularity.
inline double fisher_quadrature(double theta, double w) {
  const double m = 2.0 / theta;
  const auto integrand = [&](double t) {
    if (t <= 0.0) return 0.0;
    const double r = w * std::pow(t, m);
    const double score = 1.0 / theta + std::log(r / w);
    const double h = theta / r * std::pow(r / w, theta);
    const double jac = w * m * std::pow(t, m - 1.0);
    return score * score * h * jac;
  };
  return geometry::adaptive_simpson(integrand, 0.0, 1.0, 1e-10);
}

}  // namespace ldreg::testing
