#pragma once

// Dense distance, neighbour-selection and eigenvalue kernels shared by the
// estimators, regularizers and diagnostics. Everything is double precision
// with a fixed accumulation order, so results are reproducible bit for bit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ldreg/error.hpp"
#include "ldreg/matrix.hpp"

namespace ldreg {

/// Euclidean distance by direct per-coordinate accumulation. The Gram
/// identity |x|^2 + |y|^2 - 2<x,y> is deliberately not used: it cancels
/// catastrophically for close points and corrupts small-radius statistics.
inline double euclidean(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

/// Distances from one query row to every reference row.
inline void distance_row(std::span<const double> query, const Matrix& refs,
                         std::span<double> out) noexcept {
  for (std::size_t j = 0; j < refs.rows(); ++j) out[j] = euclidean(query, refs.row(j));
}

inline DistanceMatrix pairwise_distances(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols())
    throw UsageError("pairwise_distances: column mismatch (" + std::to_string(x.cols()) + " vs " +
                     std::to_string(y.cols()) + ")");
  if (!x.all_finite() || !y.all_finite())
    throw DataError("pairwise_distances: non-finite input");
  DistanceMatrix out(x.rows(), y.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) distance_row(x.row(i), y, out.row(i));
  return out;
}

/// Self-distances. The diagonal is pinned to zero and the lower triangle
/// mirrors the upper one, so the result is exactly symmetric.
inline DistanceMatrix pairwise_distances(const Matrix& x) {
  if (!x.all_finite()) throw DataError("pairwise_distances: non-finite input");
  DistanceMatrix out(x.rows(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    out(i, i) = 0.0;
    for (std::size_t j = i + 1; j < x.rows(); ++j) {
      const double d = euclidean(x.row(i), x.row(j));
      out(i, j) = d;
      out(j, i) = d;
    }
  }
  return out;
}

struct Neighbor {
  std::size_t index;
  double distance;
};

/// The `count` smallest entries of a distance row in ascending order, ties
/// broken by ascending index. `self` is removed before selection.
inline std::vector<Neighbor> nearest(std::span<const double> row, std::size_t count,
                                     std::optional<std::size_t> self = std::nullopt) {
  const std::size_t available = row.size() - (self && *self < row.size() ? 1 : 0);
  if (count > available)
    throw UsageError("requested " + std::to_string(count) + " neighbours but only " +
                     std::to_string(available) + " candidates");
  // Bounded insertion select under the strict total order (distance, index):
  // `out` holds the best `count` candidates seen so far, ascending.
  std::vector<Neighbor> out;
  out.reserve(count + 1);
  if (count == 0) return out;
  const auto before = [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  };
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (self && j == *self) continue;
    const Neighbor cand{j, row[j]};
    if (out.size() == count) {
      if (!before(cand, out.back())) continue;
      out.pop_back();
    }
    out.insert(std::upper_bound(out.begin(), out.end(), cand, before), cand);
  }
  return out;
}

/// Same result as nearest(distance_row(query, refs), count, self). A
/// selection pass on squared distances finds a cutoff; only rows at or below
/// it get a square root and take part in the final sort.
inline std::vector<Neighbor> nearest_rows(std::span<const double> query, const Matrix& refs,
                                          std::size_t count,
                                          std::optional<std::size_t> self = std::nullopt) {
  const std::size_t n = refs.rows();
  const bool skip = self && *self < n;
  const std::size_t available = n - (skip ? 1 : 0);
  if (count > available)
    throw UsageError("requested " + std::to_string(count) + " neighbours but only " +
                     std::to_string(available) + " candidates");
  std::vector<Neighbor> out;
  if (count == 0) return out;
  const std::size_t dim = query.size();
  const double* base = refs.values().data();
  thread_local std::vector<double> sq;
  thread_local std::vector<double> pool;
  sq.resize(n);
  pool.resize(n);
  if (dim == 2) {
    const double q0 = query[0];
    const double q1 = query[1];
    for (std::size_t j = 0; j < n; ++j) {
      const double a = q0 - base[2 * j];
      const double b = q1 - base[2 * j + 1];
      sq[j] = a * a + b * b;
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      const double* r = base + j * dim;
      double acc = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = query[d] - r[d];
        acc += diff * diff;
      }
      sq[j] = acc;
    }
  }
  if (skip) sq[*self] = std::numeric_limits<double>::infinity();

  const auto kth = [&](std::size_t m) {
    std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count - 1),
                     pool.begin() + static_cast<std::ptrdiff_t>(m));
    return pool[count - 1];
  };
  // The count-th smallest square among a prefix bounds the global one from
  // above, so only values under that bound need to be ranked.
  const std::size_t probe = std::min(n, std::max<std::size_t>(8 * count, 64));
  std::copy(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(probe), pool.begin());
  const double bound = kth(probe);
  std::size_t m = 0;
  for (std::size_t j = 0; j < n; ++j) {
    pool[m] = sq[j];
    m += sq[j] <= bound ? 1 : 0;
  }
  // padded so that squares rounding to the same root are all kept
  const double cutoff = kth(m) * (1.0 + 1e-12);
  for (std::size_t j = 0; j < n; ++j)
    if (sq[j] <= cutoff && !(skip && j == *self)) out.push_back({j, std::sqrt(sq[j])});
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  });
  out.resize(count);
  return out;
}

/// Ascending list of the k+1 smallest distances in `row`, with the query's
/// own slot dropped first when `self` is given.
inline std::vector<double> knn_distances(std::span<const double> row, std::size_t k,
                                         std::optional<std::size_t> self = std::nullopt) {
  if (self && *self >= row.size()) throw UsageError("knn_distances: self index out of range");
  const std::size_t need = k + 1;
  const std::size_t available = self ? row.size() - 1 : row.size();
  if (need > available)
    throw UsageError("knn_distances: k=" + std::to_string(k) + " too large for a row of " +
                     std::to_string(row.size()));
  std::vector<double> out;
  out.reserve(need);
  for (const auto& n : nearest(row, need, self)) out.push_back(n.distance);
  return out;
}

struct JacobiOptions {
  double relative_tolerance = 1e-12;
  int max_sweeps = 100;
};

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// descending. Converged when the off-diagonal Frobenius norm drops below
/// relative_tolerance * |S|_F.
inline std::vector<double> sym_eigenvalues(const Matrix& s, JacobiOptions opt = {}) {
  if (s.rows() != s.cols()) throw UsageError("sym_eigenvalues: matrix is not square");
  if (!s.all_finite()) throw DataError("sym_eigenvalues: non-finite input");
  const std::size_t n = s.rows();

  double max_abs = 0.0;
  for (double v : s.data()) max_abs = std::max(max_abs, std::abs(v));
  const double sym_tol = 1e-10 * std::max(1.0, max_abs);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(s(i, j) - s(j, i)) > sym_tol)
        throw DataError("sym_eigenvalues: matrix is not symmetric");

  Matrix a = s;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (s(i, j) + s(j, i));

  double frob = 0.0;
  for (double v : a.data()) frob += v * v;
  frob = std::sqrt(frob);

  const auto off_norm = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) acc += a(i, j) * a(i, j);
    return std::sqrt(acc);
  };

  bool converged = frob == 0.0;
  for (int sweep = 0; !converged && sweep < opt.max_sweeps; ++sweep) {
    if (off_norm() < opt.relative_tolerance * frob) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 1.0 / (2.0 * theta);
        } else {
          t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
    }
  }
  if (!converged && off_norm() >= opt.relative_tolerance * frob)
    throw NumericError("sym_eigenvalues: Jacobi iteration did not converge");

  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

/// Seeded variate stream. The engine is std::mt19937_64, whose output
/// sequence is fixed by the C++ standard. Uniforms take the top 53 bits of
/// each draw (value in [0,1)); gaussians use the Box-Muller transform and
/// hand out the sine branch on the following call.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  double gaussian() noexcept {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    return r * std::cos(phi);
  }

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) noexcept {
    const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  /// Fisher-Yates shuffle driven by this stream.
  template <typename T>
  void shuffle(std::vector<T>& v) noexcept {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  std::uint64_t next_u64() noexcept { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Mixes a base seed with a stream label into an independent sub-seed
/// (splitmix64 finalizer).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (label + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace ldreg
