#ifndef EQUIL_RIGIDITY_HPP
#define EQUIL_RIGIDITY_HPP

// Critical-layer diagnostics for candidate traveling waves:
//   F_x(y) = y + c + u^x(x, y), the reference point y+(x), the energy
//   identity ||grad u^y||^2 = -int u^y d_x w and its weighted bound
//   int |u^y|^2 |d_y w| / |F_x|, and the W^{s,p} slope threshold scan.
// Fields are physical: u = grad^perp psi with -Lap psi = w.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "fit.hpp"
#include "grid.hpp"
#include "norms.hpp"
#include "parallel.hpp"
#include "poisson.hpp"

namespace equil {

enum class LayerRegime { interior_root, clamped_low, clamped_high };

inline std::string to_string(LayerRegime r) {
  switch (r) {
    case LayerRegime::interior_root: return "interior-root";
    case LayerRegime::clamped_low: return "clamped-low";
    case LayerRegime::clamped_high: return "clamped-high";
  }
  return "?";
}

struct CriticalLayer {
  std::vector<double> ystar;          ///< per x-column
  std::vector<LayerRegime> regime;    ///< per x-column
  std::vector<double> root_residual;  ///< |F_x(ystar)| for interior roots, 0 otherwise
  double max_dy_ux = 0.0;
  bool monotone_ok = false;           ///< max |d_y u^x| <= 1/2
  double c = 0.0;
};

namespace detail {

// F_x on the piecewise-linear interpolant of column i.
inline double layer_function(const Field& ux, double c, int i, double y) {
  const auto& g = ux.grid();
  const double t = std::clamp((y + 1.0) / g.hy(), 0.0, static_cast<double>(g.ny() - 1));
  const int j = std::min(static_cast<int>(t), g.ny() - 2);
  const double w = t - j;
  return y + c + (1.0 - w) * ux(i, j) + w * ux(i, j + 1);
}

}  // namespace detail

/// Per column: first root of F_x on [-1, 1] (bisection on the interpolant);
/// F_x > 0 throughout gives y+ = -1, F_x < 0 throughout gives y+ = +1.
inline CriticalLayer critical_layer(const Field& ux, double c) {
  const auto& g = ux.grid();
  CriticalLayer L;
  L.c = c;
  L.max_dy_ux = diff_y(ux).max_abs();
  L.monotone_ok = L.max_dy_ux <= 0.5;
  L.ystar.assign(g.nx(), 0.0);
  L.regime.assign(g.nx(), LayerRegime::interior_root);
  L.root_residual.assign(g.nx(), 0.0);
  parallel_blocks(static_cast<std::size_t>(g.nx()), [&](std::size_t b, std::size_t e) {
    for (auto i = static_cast<int>(b); i < static_cast<int>(e); ++i) {
      auto F = [&](int j) { return g.y(j) + c + ux(i, j); };
      int hit = -1;
      for (int j = 0; j + 1 < g.ny() && hit < 0; ++j)
        if (F(j) == 0.0 || F(j) * F(j + 1) < 0.0) hit = j;
      if (hit < 0 && F(g.ny() - 1) == 0.0) hit = g.ny() - 1;
      if (hit < 0) {
        const bool positive = F(0) > 0.0;
        L.regime[i] = positive ? LayerRegime::clamped_low : LayerRegime::clamped_high;
        L.ystar[i] = positive ? -1.0 : 1.0;
        continue;
      }
      if (F(hit) == 0.0) {
        L.ystar[i] = g.y(hit);
        continue;
      }
      double lo = g.y(hit), hi = g.y(hit + 1);
      const double flo = F(hit);
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = detail::layer_function(ux, c, i, mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm > 0.0) == (flo > 0.0)) lo = mid; else hi = mid;
      }
      L.ystar[i] = 0.5 * (lo + hi);
      L.root_residual[i] = std::abs(detail::layer_function(ux, c, i, L.ystar[i]));
    }
  });
  return L;
}

struct LayerBoundCheck {
  double worst_margin = 0.0;  ///< min over nodes of |F_x| - |y - y+| / 2
  std::size_t violations = 0;
  bool applicable = false;    ///< the bound is only claimed when monotone_ok
};

inline LayerBoundCheck layer_lower_bound(const CriticalLayer& L, const Field& ux, double tol = 1e-12) {
  const auto& g = ux.grid();
  LayerBoundCheck out;
  out.applicable = L.monotone_ok;
  out.worst_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double m = std::abs(g.y(j) + L.c + ux(i, j)) - 0.5 * std::abs(g.y(j) - L.ystar[i]);
      out.worst_margin = std::min(out.worst_margin, m);
      if (m < -tol) ++out.violations;
    }
  return out;
}

struct EnergyIdentityStats {
  double lhs = 0.0;            ///< ||grad u^y||^2
  double rhs_direct = 0.0;     ///< -int u^y d_x w
  double rhs_weighted = 0.0;   ///< int |u^y|^2 |d_y w| / max(|F_x|, floor)
  double rhs_weighted_half_floor = 0.0;
  double floor = 1e-6;
  std::optional<double> ratio;  ///< rhs_weighted / lhs; empty when lhs is below the roundoff floor
  double identity_error = 0.0;  ///< |lhs - rhs_direct| / lhs (0 when undefined)
  bool monotone_ok = false;
};

inline EnergyIdentityStats energy_identity_stats(const Field& w, const PoissonSolution& sol, double c,
                                                 double floor = 1e-6) {
  const auto& g = w.grid();
  EnergyIdentityStats st;
  st.floor = floor;
  const auto [uyx, uyy] = gradient(sol.uy);
  const auto [wx, wy] = gradient(w);
  const CriticalLayer L = critical_layer(sol.ux, c);
  st.monotone_ok = L.monotone_ok;
  Field lhs(g), direct(g), weighted(g), half(g);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double uy = sol.uy(i, j);
      const double F = std::abs(g.y(j) + c + sol.ux(i, j));
      lhs(i, j) = uyx(i, j) * uyx(i, j) + uyy(i, j) * uyy(i, j);
      direct(i, j) = -uy * wx(i, j);
      weighted(i, j) = uy * uy * std::abs(wy(i, j)) / std::max(F, floor);
      half(i, j) = uy * uy * std::abs(wy(i, j)) / std::max(F, 0.5 * floor);
    }
  st.lhs = integrate(lhs);
  st.rhs_direct = integrate(direct);
  st.rhs_weighted = integrate(weighted);
  st.rhs_weighted_half_floor = integrate(half);
  // Below max(1e-30, 1e-24 ||w||^2) the lhs is FFT roundoff (u^y of a shear
  // flow comes back at ~1e-16, not 0).
  if (st.lhs >= std::max(1e-30, 1e-24 * integrate(hadamard(w, w)))) {
    st.ratio = st.rhs_weighted / st.lhs;
    st.identity_error = std::abs(st.lhs - st.rhs_direct) / st.lhs;
  }
  return st;
}

struct WitnessRow {
  double s = 0.0;
  double p = 2.0;
  ScalingFit fit;
};

struct ThresholdWitness {
  std::vector<WitnessRow> rows;            ///< W^{s,p} slopes over the scan grid
  std::vector<std::pair<double, std::optional<double>>> s0;  ///< (p, zero crossing of the slope in s)
  std::vector<ScalingFit> holder;          ///< C^{0,0.5}, C^{0,0.9}, C^{1,0.5}
  bool low_confidence = false;             ///< some fit has r2 < 0.9
};

inline std::vector<double> default_s_grid(double p, double q) {
  std::vector<double> s = {0.0, 0.5, 1.0, 1.0 + 1.0 / p - 2.0 * q - 0.1, 1.0 + 1.0 / p - 0.05, 1.0 + 1.0 / p + 0.2};
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

/// Predicted slope of log ||w_eps||_{W^{s,p}} against log eps.
inline double predicted_sobolev_slope(double s, double p, double q) { return 1.0 - s + 1.0 / p - 2.0 * q; }

/// First s where the fitted slope changes sign from positive to
/// non-positive, by linear interpolation between scan points.
inline std::optional<double> slope_zero_crossing(const std::vector<double>& s, const std::vector<double>& slope) {
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    if (slope[k] > 0.0 && slope[k + 1] <= 0.0)
      return s[k] + (s[k + 1] - s[k]) * slope[k] / (slope[k] - slope[k + 1]);
  }
  return std::nullopt;
}

/// Fits W^{s,p} and Hoelder norm slopes against eps. Uses the calculators
/// so callers can share pair tables with other norm requests.
inline ThresholdWitness threshold_witness(const std::vector<double>& eps, std::vector<NormCalculator>& calcs, double q,
                                          const std::vector<double>& ps = {1.0, 2.0, 4.0}) {
  if (eps.size() != calcs.size()) throw ContractError("threshold_witness: size mismatch");
  if (eps.size() < 3) throw ContractError("threshold_witness: at least 3 reports required");
  ThresholdWitness out;
  for (auto& c : calcs)
    for (int m = 0; m <= 2; ++m) c.prepare(m, ps);
  for (double p : ps) {
    const auto grid = default_s_grid(p, q);
    std::vector<double> slopes;
    for (double s : grid) {
      std::vector<double> v;
      for (auto& c : calcs) v.push_back(c.evaluate({NormKind::Wsp_gagliardo, s, p, 0}, false).value);
      auto fit = fit_loglog(eps, v, predicted_sobolev_slope(s, p, q), 0.15,
                            NormSpec{NormKind::Wsp_gagliardo, s, p, 0}.key());
      out.low_confidence |= fit.r2 < 0.9;
      slopes.push_back(fit.slope);
      out.rows.push_back({s, p, fit});
    }
    out.s0.emplace_back(p, slope_zero_crossing(grid, slopes));
  }
  for (auto [k, a] : {std::pair{0, 0.5}, std::pair{0, 0.9}, std::pair{1, 0.5}}) {
    std::vector<double> v;
    for (auto& c : calcs) v.push_back(c.evaluate({NormKind::Holder, a, 2.0, k}, false).value);
    // Flexibility below C^1 (norm shrinks with eps), divergence above.
    auto fit = fit_loglog(eps, v, k == 0 ? 1.0 - 2.0 * q - a : -a - 2.0 * q, 0.3,
                          NormSpec{NormKind::Holder, a, 2.0, k}.key());
    out.low_confidence |= fit.r2 < 0.9;
    out.holder.push_back(fit);
  }
  return out;
}

}  // namespace equil

#endif  // EQUIL_RIGIDITY_HPP
