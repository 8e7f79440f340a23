#pragma once

// Seeded synthetic data sets. Every generator draws from its own Rng, so a
// given (parameters, seed) pair always yields the same matrix.

#include <cmath>
#include <cstdint>

#include "ldreg/error.hpp"
#include "ldreg/matrix.hpp"
#include "ldreg/numerics.hpp"

namespace ldreg::ssl {

/// i.i.d. uniform points in [0,1)^2.
inline Matrix gen_uniform_2d(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw UsageError("gen_uniform_2d: n must be >= 1");
  Rng rng(seed);
  Matrix x(n, 2);
  for (double& v : x.data()) v = rng.uniform();
  return x;
}

/// Uniform points in the unit d-ball: gaussian direction, radius U^(1/d).
inline Matrix gen_uniform_ball(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw UsageError("gen_uniform_ball: n and d must be >= 1");
  Rng rng(seed);
  Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = x.row(i);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : row) {
        v = rng.gaussian();
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    const double radius = std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    for (double& v : row) v *= radius / norm;
  }
  return x;
}

/// D x d matrix with orthonormal columns (Gram-Schmidt on gaussian draws).
inline Matrix random_orthonormal_basis(std::size_t ambient, std::size_t intrinsic, Rng& rng) {
  Matrix b(ambient, intrinsic);
  for (std::size_t c = 0; c < intrinsic; ++c) {
    for (;;) {
      for (std::size_t r = 0; r < ambient; ++r) b(r, c) = rng.gaussian();
      // two passes of modified Gram-Schmidt
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t p = 0; p < c; ++p) {
          double dot = 0.0;
          for (std::size_t r = 0; r < ambient; ++r) dot += b(r, c) * b(r, p);
          for (std::size_t r = 0; r < ambient; ++r) b(r, c) -= dot * b(r, p);
        }
      double norm = 0.0;
      for (std::size_t r = 0; r < ambient; ++r) norm += b(r, c) * b(r, c);
      norm = std::sqrt(norm);
      if (norm > 1e-8) {
        for (std::size_t r = 0; r < ambient; ++r) b(r, c) /= norm;
        break;
      }
    }
  }
  return b;
}

/// Standard gaussian samples on a random d-dimensional linear subspace of
/// R^D, plus isotropic gaussian noise of scale noise_sigma.
inline Matrix gen_subspace_gaussian(std::size_t n, std::size_t d_intrinsic, std::size_t d_ambient,
                                    double noise_sigma, std::uint64_t seed) {
  if (n < 1) throw UsageError("gen_subspace_gaussian: n must be >= 1");
  if (d_intrinsic < 1 || d_intrinsic > d_ambient)
    throw UsageError("gen_subspace_gaussian: need 1 <= d <= D");
  if (!(noise_sigma >= 0.0)) throw UsageError("gen_subspace_gaussian: noise must be >= 0");
  Rng rng(seed);
  const Matrix basis = random_orthonormal_basis(d_ambient, d_intrinsic, rng);
  Matrix x(n, d_ambient);
  std::vector<double> z(d_intrinsic);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : z) v = rng.gaussian();
    auto row = x.row(i);
    for (std::size_t r = 0; r < d_ambient; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d_intrinsic; ++c) acc += basis(r, c) * z[c];
      row[r] = acc;
    }
    if (noise_sigma > 0.0)
      for (double& v : row) v += noise_sigma * rng.gaussian();
  }
  return x;
}

/// Two independently perturbed copies of each base row, interleaved so that
/// rows 2i and 2i+1 form a positive pair.
inline Matrix gen_paired_views(const Matrix& base, double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw UsageError("gen_paired_views: noise must be >= 0");
  Rng rng(seed);
  Matrix out(2 * base.rows(), base.cols());
  for (std::size_t i = 0; i < base.rows(); ++i)
    for (std::size_t v = 0; v < 2; ++v) {
      auto row = out.row(2 * i + v);
      const auto src = base.row(i);
      for (std::size_t d = 0; d < base.cols(); ++d)
        row[d] = src[d] + (noise_sigma > 0.0 ? noise_sigma * rng.gaussian() : 0.0);
    }
  return out;
}

}  // namespace ldreg::ssl
