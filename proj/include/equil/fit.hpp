#ifndef EQUIL_FIT_HPP
#define EQUIL_FIT_HPP

// Log-log power-law fits against a predicted exponent.

#include <boost/math/statistics/linear_regression.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"

namespace equil {

struct ScalingFit {
  std::string quantity;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double predicted = 0.0;
  double tol = 0.0;
  std::size_t n = 0;
  bool pass = false;  ///< |slope - predicted| <= tol and r2 >= 0.9
};

/// Least squares of log y on log x.
inline ScalingFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys, double predicted,
                             double tol, std::string quantity = {}) {
  if (xs.size() != ys.size()) throw ContractError("fit_loglog: size mismatch");
  if (xs.size() < 3) throw ContractError("fit_loglog: at least 3 points required");
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (!(xs[k] > 0.0) || !(ys[k] > 0.0)) throw std::domain_error("fit_loglog: values must be positive");
    lx.push_back(std::log(xs[k]));
    ly.push_back(std::log(ys[k]));
  }
  const auto [c0, c1, r2] = boost::math::statistics::simple_ordinary_least_squares_with_R_squared(lx, ly);
  ScalingFit f;
  f.quantity = std::move(quantity);
  f.slope = c1;
  f.intercept = c0;
  // Exactly constant data is a perfect fit with slope 0.
  f.r2 = std::isnan(r2) ? 1.0 : r2;
  f.predicted = predicted;
  f.tol = tol;
  f.n = xs.size();
  f.pass = std::abs(f.slope - predicted) <= tol && f.r2 >= 0.9;
  return f;
}

}  // namespace equil

#endif  // EQUIL_FIT_HPP
