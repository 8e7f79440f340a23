#pragma once

// Information geometry of lower-tail distance distributions: the power-law
// tail family (r/w)^theta, the growth-rate functional r F'(r) / F(r), the
// asymptotic Fisher-Rao and KL distances between tails, and the auxiliary
// factor that links a general CDF to its power-law canonical form.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "ldreg/error.hpp"

namespace ldreg::geometry {

/// Power-law tail H(r) = (r / w)^theta on [0, w].
class SmoothGrowthModel {
 public:
  SmoothGrowthModel(double theta, double w) : theta_(theta), w_(w) {
    if (!(theta > 0.0) || !std::isfinite(theta))
      throw UsageError("SmoothGrowthModel: theta must be positive");
    if (!(w > 0.0) || !std::isfinite(w)) throw UsageError("SmoothGrowthModel: w must be positive");
  }

  double theta() const noexcept { return theta_; }
  double w() const noexcept { return w_; }

  double cdf(double r) const {
    if (!(r >= 0.0 && r <= w_))
      throw UsageError("cdf: r=" + std::to_string(r) + " outside [0, " + std::to_string(w_) + "]");
    if (r == w_) return 1.0;
    return std::pow(r / w_, theta_);
  }

  /// Density theta r^(theta-1) / w^theta.
  double pdf(double r) const {
    if (!(r > 0.0 && r <= w_)) throw UsageError("pdf: r outside (0, w]");
    return theta_ / r * std::pow(r / w_, theta_);
  }

 private:
  double theta_;
  double w_;
};

/// A CDF restricted to (0, w_max].
struct CdfCallable {
  std::function<double(double)> evaluator;
  double w_max;

  double operator()(double r) const { return evaluator(r); }

  static CdfCallable from(const SmoothGrowthModel& m) {
    return {[m](double r) { return m.cdf(r); }, m.w()};
  }
};

inline double cdf(const SmoothGrowthModel& model, double r) { return model.cdf(r); }

namespace detail {

// r F'(r) / F(r) for r in (0, w_max]. Central difference in the interior,
// second-order backward difference when the stencil would leave the domain.
inline double growth_rate(const CdfCallable& f, double r) {
  const double fr = f(r);
  if (!(fr > 0.0)) throw NumericError("intrinsic_dim_at: F(r) must be positive");
  double h = std::max(1e-7, 1e-7 * r);
  h = std::min(h, 0.25 * r);
  double derivative;
  if (r + h <= f.w_max) {
    derivative = (f(r + h) - f(r - h)) / (2.0 * h);
  } else {
    derivative = (3.0 * fr - 4.0 * f(r - h) + f(r - 2.0 * h)) / (2.0 * h);
  }
  return r * derivative / fr;
}

}  // namespace detail

/// Growth rate r F'(r) / F(r), with F' from a central difference.
inline double intrinsic_dim_at(const CdfCallable& f, double r) {
  if (!(r > 0.0 && r < f.w_max))
    throw UsageError("intrinsic_dim_at: r must lie in (0, w_max)");
  return detail::growth_rate(f, r);
}

/// |ln(id_g / id_f)|
inline double afr_distance(double id_f, double id_g) {
  if (!(id_f > 0.0) || !(id_g > 0.0))
    throw UsageError("afr_distance: LID values must be positive");
  return std::abs(std::log(id_g) - std::log(id_f));
}

/// sqrt(rho - ln rho - 1) with rho = id_g / id_f. Not symmetric.
inline double akl_distance(double id_f, double id_g) {
  if (!(id_f > 0.0) || !(id_g > 0.0))
    throw UsageError("akl_distance: LID values must be positive");
  const double delta = id_g / id_f - 1.0;
  // log1p keeps the difference accurate near rho = 1
  const double v = delta - std::log1p(delta);
  return std::sqrt(std::max(v, 0.0));
}

/// Fisher information of the power-law tail family in theta.
inline double fisher_information(double theta) {
  if (!(theta > 0.0)) throw UsageError("fisher_information: theta must be positive");
  return 1.0 / (theta * theta);
}

namespace detail {

template <typename F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth, bool& ok) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  if (depth <= 0) {
    ok = false;
    return left + right + diff / 15.0;
  }
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, ok) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, ok);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance `tol`.
/// Throws NumericError when the recursion limit is hit before convergence.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-8, int max_depth = 50) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  bool ok = true;
  const double value = detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth, ok);
  if (!ok || !std::isfinite(value)) throw NumericError("adaptive_simpson: no convergence");
  return value;
}

/// (F(r) / F(w)) * (w / r)^id_star. Equals 1 for the canonical form
/// (r/w)^id_star and tends to 1 as w -> 0 when id_star is F's LID.
inline double auxiliary_factor(const CdfCallable& f, double id_star, double r, double w) {
  if (!(id_star > 0.0)) throw UsageError("auxiliary_factor: id_star must be positive");
  if (!(r > 0.0 && r <= w && w <= f.w_max))
    throw UsageError("auxiliary_factor: need 0 < r <= w <= w_max");
  const double fr = f(r);
  const double fw = f(w);
  if (!(fr > 0.0) || !(fw > 0.0)) throw NumericError("auxiliary_factor: F must be positive");
  return fr / fw * std::pow(w / r, id_star);
}

/// Integral form of the auxiliary factor:
/// exp( integral_r^w (id_star - ID_F(t)) / t dt ).
inline double auxiliary_factor_integral(const CdfCallable& f, double id_star, double r, double w,
                                        double tol = 1e-8) {
  if (!(id_star > 0.0)) throw UsageError("auxiliary_factor: id_star must be positive");
  if (!(r > 0.0 && r <= w && w <= f.w_max))
    throw UsageError("auxiliary_factor: need 0 < r <= w <= w_max");
  if (r == w) return 1.0;
  const auto integrand = [&](double t) { return (id_star - detail::growth_rate(f, t)) / t; };
  return std::exp(adaptive_simpson(integrand, r, w, tol));
}

}  // namespace ldreg::geometry
