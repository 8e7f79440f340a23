#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ldreg/error.hpp"
#include "ldreg/lidest.hpp"
#include "ldreg/matrix.hpp"
#include "ldreg/numerics.hpp"

namespace ldreg {

/// Column-centred copy of X.
inline Matrix centered(const Matrix& x) {
  Matrix c = x;
  for (std::size_t d = 0; d < x.cols(); ++d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) mean += x(i, d);
    mean /= static_cast<double>(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) c(i, d) -= mean;
  }
  return c;
}

/// Singular values of the centred data matrix, descending, from the
/// eigenvalues of Xc^T Xc. Eigenvalues below D * eps * lambda_max are
/// indistinguishable from rounding and are reported as 0.
inline std::vector<double> centered_singular_values(const Matrix& x) {
  const Matrix c = centered(x);
  const std::size_t dim = x.cols();
  Matrix gram(dim, dim);
  for (std::size_t a = 0; a < dim; ++a)
    for (std::size_t b = a; b < dim; ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < c.rows(); ++i) acc += c(i, a) * c(i, b);
      gram(a, b) = acc;
      gram(b, a) = acc;
    }
  auto eig = sym_eigenvalues(gram);
  const double floor =
      static_cast<double>(dim) * std::numeric_limits<double>::epsilon() * std::max(eig.front(), 0.0);
  for (double& l : eig) l = l > floor ? std::sqrt(l) : 0.0;
  return eig;
}

/// exp of the Shannon entropy of a normalised nonnegative spectrum.
inline double spectral_entropy_rank(std::span<const double> sigma) {
  double total = 0.0;
  for (double s : sigma) total += s;
  if (!(total > 0.0)) throw NumericError("effective_rank: spectrum is identically zero");
  double h = 0.0;
  for (double s : sigma) {
    if (s <= 0.0) continue;
    const double p = s / total;
    h -= p * std::log(p);
  }
  return std::exp(h);
}

/// Effective rank of the mean-centred data (entropy of normalised singular
/// values, not their squares).
inline double effective_rank(const Matrix& x) {
  if (x.rows() < 2) throw UsageError("effective_rank needs at least 2 rows");
  if (!x.all_finite()) throw DataError("effective_rank: non-finite input");
  const auto sigma = centered_singular_values(x);
  return spectral_entropy_rank(sigma);
}

/// Linear interpolation between order statistics (p in [0, 1]).
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw UsageError("quantile of an empty set");
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

inline constexpr std::array<double, 5> kReportQuantiles{0.05, 0.25, 0.50, 0.75, 0.95};

struct CollapseReport {
  std::size_t n_samples = 0;
  std::size_t dim = 0;
  double effective_rank = 0.0;
  double mlid_geometric = 0.0;
  double frechet_variance = 0.0;
  std::array<double, 5> lid_quantiles{};  // p5 p25 p50 p75 p95
  std::size_t k = 0;
  Estimator estimator = Estimator::mom_pseudocode;
  std::size_t clamped_count = 0;

  friend bool operator==(const CollapseReport&, const CollapseReport&) = default;
};

inline CollapseReport report_from(const Matrix& x, const LidBatch& lids) {
  CollapseReport r;
  r.n_samples = x.rows();
  r.dim = x.cols();
  r.effective_rank = effective_rank(x);
  r.mlid_geometric = aggregate(lids, MeanKind::geometric);
  r.frechet_variance = frechet_variance(lids, r.mlid_geometric);
  std::vector<double> sorted = lids.values;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t q = 0; q < kReportQuantiles.size(); ++q)
    r.lid_quantiles[q] = quantile(sorted, kReportQuantiles[q]);
  r.k = lids.k;
  r.estimator = lids.estimator;
  r.clamped_count = lids.clamped_count;
  return r;
}

inline CollapseReport diagnose(const Matrix& x, std::size_t k = kDefaultK,
                               Estimator est = Estimator::mom_pseudocode,
                               DegeneratePolicy policy = DegeneratePolicy::error) {
  return report_from(x, batch_lids(x, k, est, policy));
}

/// Field-wise differences (a - b) and ratios (a / b) of two reports.
struct ReportDelta {
  double n_samples_diff = 0.0;
  double effective_rank_diff = 0.0;
  double mlid_geometric_diff = 0.0;
  double frechet_variance_diff = 0.0;
  std::array<double, 5> lid_quantiles_diff{};
  double effective_rank_ratio = 1.0;
  double mlid_geometric_ratio = 1.0;
  std::array<double, 5> lid_quantiles_ratio{};
};

inline ReportDelta compare_reports(const CollapseReport& a, const CollapseReport& b) {
  if (a.k != b.k || a.estimator != b.estimator)
    throw UsageError("compare_reports: reports use different k or estimator");
  ReportDelta d;
  d.n_samples_diff = static_cast<double>(a.n_samples) - static_cast<double>(b.n_samples);
  d.effective_rank_diff = a.effective_rank - b.effective_rank;
  d.mlid_geometric_diff = a.mlid_geometric - b.mlid_geometric;
  d.frechet_variance_diff = a.frechet_variance - b.frechet_variance;
  d.effective_rank_ratio = a.effective_rank / b.effective_rank;
  d.mlid_geometric_ratio = a.mlid_geometric / b.mlid_geometric;
  for (std::size_t q = 0; q < 5; ++q) {
    d.lid_quantiles_diff[q] = a.lid_quantiles[q] - b.lid_quantiles[q];
    d.lid_quantiles_ratio[q] = a.lid_quantiles[q] / b.lid_quantiles[q];
  }
  return d;
}

}  // namespace ldreg
