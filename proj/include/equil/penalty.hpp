#ifndef EQUIL_PENALTY_HPP
#define EQUIL_PENALTY_HPP

// The vorticity function f, its inverse F' and the convex penalty
// F(s) = int_0^s F'.
//
//   f(t) = slope * g(t),  slope = eps^{1-q} / |ln eps|^2,
//   g(t) = 0 (t <= 0),  t * phi(t) (0 < t < 1),  t (t >= 1),
//   phi(t) = h(t) / (h(t) + h(1 - t)),  h(s) = exp(-1/s).

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "grid.hpp"

namespace equil {

namespace detail {

inline double smooth_h(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

// phi and phi' for 0 < t < 1, written with the common factor removed so
// neither term underflows to 0/0 near the ends.
inline double blend(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  // phi = 1 / (1 + exp(1/t - 1/(1-t)))
  const double e = 1.0 / t - 1.0 / (1.0 - t);
  if (e > 700.0) return 0.0;
  return 1.0 / (1.0 + std::exp(e));
}

inline double blend_derivative(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double e = 1.0 / t - 1.0 / (1.0 - t);
  if (std::abs(e) > 700.0) return 0.0;
  const double ex = std::exp(e);
  const double de = -1.0 / (t * t) - 1.0 / ((1.0 - t) * (1.0 - t));
  // d/dt (1 + e^E)^{-1} = -E' e^E / (1 + e^E)^2
  return -de * ex / ((1.0 + ex) * (1.0 + ex));
}

}  // namespace detail

/// Parameters (eps, q) of the vorticity function family together with the
/// tables used for fast inversion.
class PenaltyFamily {
 public:
  static constexpr int kTableIntervals = 4096;

  PenaltyFamily(double eps, double q) : eps_(eps), q_(q) {
    if (!(eps > 0.0 && eps < 1.0)) throw ContractError("PenaltyFamily: eps must lie in (0, 1)");
    if (!(q > 0.0 && q <= 0.5)) throw ContractError("PenaltyFamily: q must lie in (0, 1/2]");
    L_ = std::abs(std::log(eps));
    slope_ = std::pow(eps, 1.0 - q) / (L_ * L_);

    t_nodes_.resize(kTableIntervals + 1);
    g_nodes_.resize(kTableIntervals + 1);
    cumulative_.assign(kTableIntervals + 1, 0.0);
    for (int k = 0; k <= kTableIntervals; ++k) {
      t_nodes_[k] = static_cast<double>(k) / kTableIntervals;
      g_nodes_[k] = profile(t_nodes_[k]);
    }
    for (int k = 1; k <= kTableIntervals; ++k) {
      if (g_nodes_[k] < g_nodes_[k - 1])
        throw std::logic_error("PenaltyFamily: transition profile is not monotone");
      if (profile_derivative(t_nodes_[k]) < 0.0)
        throw std::logic_error("PenaltyFamily: transition profile has negative slope");
      cumulative_[k] = cumulative_[k - 1] + profile_integral(t_nodes_[k - 1], t_nodes_[k]);
    }
  }

  double eps() const { return eps_; }
  double q() const { return q_; }
  double log_eps() const { return L_; }  ///< |ln eps|
  double slope() const { return slope_; }
  double amp_cap() const { return std::pow(eps_, 1.0 - q_); }

  /// Dimensionless profile g = f / slope.
  static double profile(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return t;
    return t * detail::blend(t);
  }
  static double profile_derivative(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return detail::blend(t) + t * detail::blend_derivative(t);
  }

  double f(double t) const { return slope_ * profile(t); }
  double f_derivative(double t) const { return slope_ * profile_derivative(t); }

  /// Inverse of f on [0, inf). Exact on the linear branch, safeguarded Newton
  /// on [0, 1] otherwise (|dt| <= 1e-12).
  double fprime(double s) const {
    if (s < 0.0 || std::isnan(s)) throw std::domain_error("Fprime: argument must be non-negative");
    if (s >= slope_) return s / slope_;
    if (s == 0.0) return 0.0;
    const double target = s / slope_;
    // Bracket from the table.
    auto it = std::upper_bound(g_nodes_.begin(), g_nodes_.end(), target);
    int k = static_cast<int>(it - g_nodes_.begin());
    k = std::clamp(k, 1, kTableIntervals);
    double lo = t_nodes_[k - 1];
    double hi = t_nodes_[k];
    double t = 0.5 * (lo + hi);
    if (g_nodes_[k] > g_nodes_[k - 1]) {
      t = lo + (hi - lo) * (target - g_nodes_[k - 1]) / (g_nodes_[k] - g_nodes_[k - 1]);
      t = std::clamp(t, lo, hi);
    }
    for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
      const double r = profile(t) - target;
      if (r == 0.0) return t;
      if (r > 0.0) hi = t; else lo = t;
      const double d = profile_derivative(t);
      double next = d > 0.0 ? t - r / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - t) < 1e-13) {
        t = next;
        break;
      }
      t = next;
    }
    return t;
  }

  /// F(s) = int_0^s F'. Uses Young's identity F(s) = s T - int_0^T f with
  /// T = F'(s); int_0^T f comes from a tabulated Gauss-Legendre integral of f.
  double penalty(double s) const {
    if (s < 0.0 || std::isnan(s)) throw std::domain_error("F: argument must be non-negative");
    if (s == 0.0) return 0.0;
    const double T = fprime(s);
    return s * T - slope_ * profile_integral_from_zero(T);
  }

  /// int_0^T g(t) dt.
  double profile_integral_from_zero(double T) const {
    if (T <= 0.0) return 0.0;
    if (T >= 1.0) return cumulative_.back() + 0.5 * (T * T - 1.0);
    const int k = std::min(kTableIntervals - 1, static_cast<int>(T * kTableIntervals));
    return cumulative_[k] + profile_integral(t_nodes_[k], T);
  }

 private:
  static double profile_integral(double a, double b) {
    if (b <= a) return 0.0;
    return boost::math::quadrature::gauss<double, 15>::integrate([](double t) { return profile(t); }, a, b);
  }

  double eps_;
  double q_;
  double L_;
  double slope_;
  std::vector<double> t_nodes_;
  std::vector<double> g_nodes_;
  std::vector<double> cumulative_;
};

/// max over t in [t_lo, t_hi] of |f^{(n)}(t)| * |ln eps|^2 * eps^{q-1}.
/// n = 1 uses the analytic derivative, higher orders central differences.
inline double fprime_bound_check(const PenaltyFamily& fam, int n, double t_lo = 0.0, double t_hi = 2.0,
                                 int samples = 20001) {
  if (n < 1 || n > 4) throw ContractError("fprime_bound_check: n must be in 1..4");
  if (!(t_hi > t_lo)) throw ContractError("fprime_bound_check: empty interval");
  const double scale = 1.0 / fam.slope();
  // Central-difference stencils for derivatives 2..4 with step h.
  const double h = n == 2 ? 1e-4 : (n == 3 ? 1e-3 : 4e-3);
  auto f = [&](double t) { return fam.f(t); };
  auto deriv = [&](double t) -> double {
    switch (n) {
      case 1:
        return fam.f_derivative(t);
      case 2:
        return (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
      case 3:
        return (f(t + 2 * h) - 2.0 * f(t + h) + 2.0 * f(t - h) - f(t - 2 * h)) / (2.0 * h * h * h);
      default:
        return (f(t + 2 * h) - 4.0 * f(t + h) + 6.0 * f(t) - 4.0 * f(t - h) + f(t - 2 * h)) / (h * h * h * h);
    }
  };
  double best = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double t = t_lo + (t_hi - t_lo) * k / (samples - 1);
    best = std::max(best, std::abs(deriv(t)) * scale);
  }
  return best;
}

}  // namespace equil

#endif  // EQUIL_PENALTY_HPP
