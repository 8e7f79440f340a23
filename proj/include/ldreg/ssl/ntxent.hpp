#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ldreg/error.hpp"
#include "ldreg/matrix.hpp"
#include "ldreg/regularizers.hpp"

namespace ldreg::ssl {

/// Index of the positive partner under the interleaved pair layout.
constexpr std::size_t positive_of(std::size_t i) noexcept { return i ^ 1U; }

/// NT-Xent contrastive loss over 2N embeddings with rows (2i, 2i+1) as
/// positive pairs, cosine similarity and temperature tau. Each anchor i
/// scores its partner against every m != i; the loss is the mean over all
/// 2N anchors. Returns the loss and its gradient with respect to E.
inline LossAndGrad ntxent_loss(const Matrix& e, double tau) {
  if (!(tau > 0.0)) throw UsageError("ntxent: temperature must be positive");
  const std::size_t n2 = e.rows();
  if (n2 < 4 || n2 % 2 != 0)
    throw UsageError("ntxent: need an even number of at least 4 embeddings");
  const std::size_t dim = e.cols();

  Matrix u(n2, dim);
  std::vector<double> norms(n2);
  for (std::size_t i = 0; i < n2; ++i) {
    double acc = 0.0;
    for (double v : e.row(i)) acc += v * v;
    norms[i] = std::sqrt(acc);
    if (!(norms[i] > 0.0)) throw NumericError("ntxent: zero-norm embedding", i);
    for (std::size_t d = 0; d < dim; ++d) u(i, d) = e(i, d) / norms[i];
  }

  // s(i,m) = <u_i, u_m> / tau
  std::vector<double> s(n2 * n2);
  for (std::size_t i = 0; i < n2; ++i)
    for (std::size_t m = i; m < n2; ++m) {
      double acc = 0.0;
      for (std::size_t d = 0; d < dim; ++d) acc += u(i, d) * u(m, d);
      s[i * n2 + m] = s[m * n2 + i] = acc / tau;
    }

  const double scale = 1.0 / static_cast<double>(n2);
  double loss = 0.0;
  // gs(i,m) = dL/ds(i,m) collected row by row
  std::vector<double> gs(n2 * n2, 0.0);
  for (std::size_t i = 0; i < n2; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < n2; ++m)
      if (m != i) peak = std::max(peak, s[i * n2 + m]);
    double z = 0.0;
    for (std::size_t m = 0; m < n2; ++m)
      if (m != i) z += std::exp(s[i * n2 + m] - peak);
    const double lse = peak + std::log(z);
    const std::size_t p = positive_of(i);
    loss += lse - s[i * n2 + p];
    for (std::size_t m = 0; m < n2; ++m) {
      if (m == i) continue;
      gs[i * n2 + m] = scale * std::exp(s[i * n2 + m] - lse);
    }
    gs[i * n2 + p] -= scale;
  }
  loss *= scale;

  // dL/du_i = sum_m (gs(i,m) + gs(m,i)) u_m / tau
  Matrix gu(n2, dim);
  for (std::size_t i = 0; i < n2; ++i) {
    auto gi = gu.row(i);
    for (std::size_t m = 0; m < n2; ++m) {
      if (m == i) continue;
      const double c = (gs[i * n2 + m] + gs[m * n2 + i]) / tau;
      const auto um = u.row(m);
      for (std::size_t d = 0; d < dim; ++d) gi[d] += c * um[d];
    }
  }

  // through the normalisation: (g - <g,u> u) / |e|
  LossAndGrad out{loss, Matrix(n2, dim)};
  for (std::size_t i = 0; i < n2; ++i) {
    double dot = 0.0;
    for (std::size_t d = 0; d < dim; ++d) dot += gu(i, d) * u(i, d);
    for (std::size_t d = 0; d < dim; ++d)
      out.grad(i, d) = (gu(i, d) - dot * u(i, d)) / norms[i];
  }
  return out;
}

}  // namespace ldreg::ssl
