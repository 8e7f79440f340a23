#pragma once

// Sample-wise local intrinsic dimensionality estimates from k-NN distance
// profiles, batch estimation against the batch itself, and aggregation of
// LID values through Frechet means.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ldreg/error.hpp"
#include "ldreg/geometry.hpp"
#include "ldreg/matrix.hpp"
#include "ldreg/numerics.hpp"

namespace ldreg {

inline constexpr std::size_t kDefaultK = 64;

enum class Estimator { mom_pseudocode, mom_text, mle };
enum class MomMode { pseudocode, text };
enum class DegeneratePolicy { error, clamp };
enum class MeanKind { geometric, arithmetic, harmonic };
enum class FrechetMetric { afr, akl, akl_reverse };

inline constexpr double kDegenerateFloor = 1e-12;
inline constexpr double kLidCap = 1e6;

inline std::string_view to_string(Estimator e) noexcept {
  switch (e) {
    case Estimator::mom_pseudocode: return "mom_pseudocode";
    case Estimator::mom_text: return "mom_text";
    case Estimator::mle: return "mle";
  }
  return "?";
}

inline std::string_view to_string(MeanKind m) noexcept {
  switch (m) {
    case MeanKind::geometric: return "geometric";
    case MeanKind::arithmetic: return "arithmetic";
    case MeanKind::harmonic: return "harmonic";
  }
  return "?";
}

inline std::string_view to_string(FrechetMetric m) noexcept {
  switch (m) {
    case FrechetMetric::afr: return "afr";
    case FrechetMetric::akl: return "akl";
    case FrechetMetric::akl_reverse: return "akl_reverse";
  }
  return "?";
}

inline Estimator estimator_for(MomMode m) noexcept {
  return m == MomMode::text ? Estimator::mom_text : Estimator::mom_pseudocode;
}

/// Ascending non-self neighbour distances of one query; k = distances.size().
struct NeighborProfile {
  std::size_t query_index = 0;
  std::vector<double> distances;

  std::size_t k() const noexcept { return distances.size(); }
};

struct LidEstimate {
  double value = 0.0;
  Estimator estimator = Estimator::mom_pseudocode;
  std::size_t k = 0;
  bool clamped = false;
};

/// Per-sample LID values sharing one estimator and neighbourhood size.
struct LidBatch {
  std::vector<double> values;
  std::size_t k = 0;
  Estimator estimator = Estimator::mom_pseudocode;
  std::size_t clamped_count = 0;

  std::size_t size() const noexcept { return values.size(); }

  LidEstimate operator[](std::size_t i) const { return {values[i], estimator, k, false}; }

  /// Wraps externally supplied LID values.
  static LidBatch from_values(std::vector<double> v, std::size_t k = 0,
                              Estimator e = Estimator::mom_pseudocode) {
    LidBatch b;
    b.values = std::move(v);
    b.k = k;
    b.estimator = e;
    return b;
  }
};

namespace detail {

inline std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline void check_profile(const NeighborProfile& p) {
  if (p.distances.size() < 2)
    throw UsageError("neighbour profile needs at least 2 distances");
  for (std::size_t i = 0; i < p.distances.size(); ++i) {
    const double d = p.distances[i];
    if (!std::isfinite(d) || d < 0.0) throw DataError("neighbour distances must be finite and >= 0");
    if (i > 0 && d < p.distances[i - 1]) throw UsageError("neighbour distances must be ascending");
  }
}

inline void check_positive(const LidBatch& lids) {
  if (lids.values.empty()) throw UsageError("LID batch is empty");
  for (double v : lids.values)
    if (!(v > 0.0) || !std::isfinite(v)) throw UsageError("LID values must be positive and finite");
}

}  // namespace detail

/// Mean and tail width of a profile as used by the moment estimator.
/// `count` is the number of distances averaged into mu: all k in text mode,
/// the first k-1 in pseudocode mode (w is always the k-th distance).
struct MomParts {
  double mu;
  double w;
  std::size_t count;
};

inline MomParts mom_parts(std::span<const double> distances, MomMode mode) noexcept {
  const std::size_t k = distances.size();
  const std::size_t count = mode == MomMode::text ? k : k - 1;
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) sum += distances[i];
  return {sum / static_cast<double>(count), distances[k - 1], count};
}

/// Method-of-moments LID estimate mu / (w - mu).
///
/// A neighbourhood with w - mu <= 1e-12 (all distances equal) or mu = 0 is
/// degenerate. Under DegeneratePolicy::error that raises NumericError with
/// the query index. Under clamp the denominator is floored at 1e-12, values
/// are capped at 1e6, and a zero mu maps to 1e-6.
inline LidEstimate lid_mom(const NeighborProfile& profile, MomMode mode = MomMode::pseudocode,
                           DegeneratePolicy policy = DegeneratePolicy::error) {
  detail::check_profile(profile);
  const auto [mu, w, count] = mom_parts(profile.distances, mode);
  const double gap = w - mu;
  LidEstimate out{0.0, estimator_for(mode), profile.k(), false};
  if (gap > kDegenerateFloor && mu > 0.0) {
    out.value = mu / gap;
    if (policy == DegeneratePolicy::clamp && out.value > kLidCap) {
      out.value = kLidCap;
      out.clamped = true;
    }
    return out;
  }
  if (policy == DegeneratePolicy::error)
    throw NumericError("degenerate neighbourhood: w - mu = " + detail::short_num(gap),
                       profile.query_index);
  out.value = std::clamp(mu / std::max(gap, kDegenerateFloor), 1.0 / kLidCap, kLidCap);
  out.clamped = true;
  return out;
}

/// Maximum-likelihood (Hill) estimate ( -(1/k) sum ln(d_i / d_k) )^-1.
inline LidEstimate lid_mle(const NeighborProfile& profile) {
  detail::check_profile(profile);
  const auto& d = profile.distances;
  const double wk = d.back();
  if (!(d.front() > 0.0))
    throw NumericError("lid_mle: zero neighbour distance", profile.query_index);
  if (!(wk > d.front()))
    throw NumericError("lid_mle: all neighbour distances equal", profile.query_index);
  double acc = 0.0;
  for (double di : d) acc += std::log(di / wk);
  const double mean = acc / static_cast<double>(d.size());
  return {-1.0 / mean, Estimator::mle, d.size(), false};
}

inline LidEstimate estimate(const NeighborProfile& profile, Estimator est,
                            DegeneratePolicy policy = DegeneratePolicy::error) {
  switch (est) {
    case Estimator::mom_pseudocode: return lid_mom(profile, MomMode::pseudocode, policy);
    case Estimator::mom_text: return lid_mom(profile, MomMode::text, policy);
    case Estimator::mle: return lid_mle(profile);
  }
  throw UsageError("unknown estimator");
}

/// k nearest non-self neighbours (index and distance) of every row of
/// `queries` among the rows of `refs`. Row i of `queries` is taken to be row
/// i of `refs` for self-exclusion.
inline std::vector<std::vector<Neighbor>> batch_neighbors(const Matrix& queries, const Matrix& refs,
                                                          std::size_t k) {
  if (queries.cols() != refs.cols()) throw UsageError("batch_neighbors: column mismatch");
  if (queries.rows() > refs.rows()) throw UsageError("batch_neighbors: more queries than refs");
  std::vector<std::vector<Neighbor>> out(queries.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i) out[i] = nearest_rows(queries.row(i), refs, k, i);
  return out;
}

inline void check_batch_shape(const Matrix& x, std::size_t k) {
  if (k < 2) throw UsageError("k must be at least 2");
  if (x.rows() < k + 2)
    throw UsageError("batch of " + std::to_string(x.rows()) + " rows is too small for k=" +
                     std::to_string(k) + " (need at least k+2)");
}

/// LID of every row of X with the batch itself as reference set.
/// All failing rows are counted; the first one is reported.
inline LidBatch batch_lids(const Matrix& x, std::size_t k = kDefaultK,
                           Estimator est = Estimator::mom_pseudocode,
                           DegeneratePolicy policy = DegeneratePolicy::error) {
  check_batch_shape(x, k);
  if (!x.all_finite()) throw DataError("batch_lids: non-finite input");
  LidBatch out;
  out.k = k;
  out.estimator = est;
  out.values.resize(x.rows());
  std::optional<NumericError> first;
  std::size_t failures = 0;
  NeighborProfile profile;
  profile.distances.resize(k);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto nn = nearest_rows(x.row(i), x, k, i);
    profile.query_index = i;
    for (std::size_t j = 0; j < k; ++j) profile.distances[j] = nn[j].distance;
    try {
      const auto e = estimate(profile, est, policy);
      out.values[i] = e.value;
      if (e.clamped) ++out.clamped_count;
    } catch (const NumericError& err) {
      if (!first) first = err;
      ++failures;
    }
  }
  if (first)
    throw NumericError(std::to_string(failures) + " of " + std::to_string(x.rows()) +
                           " samples degenerate, first: ",
                       *first);
  return out;
}

inline double geometric_mean(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += std::log(x);
  return std::exp(acc / static_cast<double>(v.size()));
}

inline double aggregate(const LidBatch& lids, MeanKind mean) {
  detail::check_positive(lids);
  const auto n = static_cast<double>(lids.size());
  switch (mean) {
    case MeanKind::geometric: return geometric_mean(lids.values);
    case MeanKind::arithmetic:
      return std::accumulate(lids.values.begin(), lids.values.end(), 0.0) / n;
    case MeanKind::harmonic: {
      double inv = 0.0;
      for (double v : lids.values) inv += 1.0 / v;
      return n / inv;
    }
  }
  throw UsageError("unknown mean");
}

/// Closed-form Frechet mean under the asymptotic Fisher-Rao metric: the
/// geometric mean of the LIDs.
inline double frechet_mean_lid(const LidBatch& lids) { return aggregate(lids, MeanKind::geometric); }

/// Mean squared log-deviation from `mean_lid`.
inline double frechet_variance(const LidBatch& lids, double mean_lid) {
  detail::check_positive(lids);
  if (!(mean_lid > 0.0)) throw UsageError("frechet_variance: mean LID must be positive");
  const double center = std::log(mean_lid);
  double acc = 0.0;
  for (double v : lids.values) {
    const double d = std::log(v) - center;
    acc += d * d;
  }
  return acc / static_cast<double>(lids.size());
}

/// Squared distance between the candidate tail theta and a sample LID.
inline double frechet_term(FrechetMetric metric, double theta, double lid) {
  switch (metric) {
    case FrechetMetric::afr: {
      const double d = geometry::afr_distance(theta, lid);
      return d * d;
    }
    case FrechetMetric::akl: {
      const double d = geometry::akl_distance(theta, lid);
      return d * d;
    }
    case FrechetMetric::akl_reverse: {
      const double d = geometry::akl_distance(lid, theta);
      return d * d;
    }
  }
  throw UsageError("unknown metric");
}

/// Mean squared distance from the tail with LID theta to the batch.
inline double frechet_objective(const LidBatch& lids, FrechetMetric metric, double theta) {
  double acc = 0.0;
  for (double v : lids.values) acc += frechet_term(metric, theta, v);
  return acc / static_cast<double>(lids.size());
}

/// Golden-section minimisation of a unimodal f over [lo, hi].
template <typename F>
double golden_section_min(const F& f, double lo, double hi, double tol = 1e-9,
                          int max_iter = 200) {
  constexpr double inv_phi = 0.6180339887498948482;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < max_iter; ++it) {
    if (b - a <= tol) return 0.5 * (a + b);
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  if (b - a <= tol) return 0.5 * (a + b);
  throw NumericError("golden-section search did not converge");
}

/// Frechet mean LID found numerically: argmin over theta of the mean squared
/// metric distance, searched on [min/10, 10 max].
inline double frechet_mean_numeric(const LidBatch& lids, FrechetMetric metric,
                                   double tol = 1e-9) {
  detail::check_positive(lids);
  const auto [lo, hi] = std::minmax_element(lids.values.begin(), lids.values.end());
  return golden_section_min([&](double theta) { return frechet_objective(lids, metric, theta); },
                            *lo / 10.0, *hi * 10.0, tol);
}

}  // namespace ldreg
