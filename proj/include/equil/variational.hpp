#ifndef EQUIL_VARIATIONAL_HPP
#define EQUIL_VARIATIONAL_HPP

// Penalized energy
//
//   E(w) = 1/2 int w G w  -  1/2 int (y - c)^2 w  -  eps^2 int F(w)
//
// over the admissible class {0 <= w <= eps^{1-q}, int w <= eps^2,
// supp w in |y - c| <= eps^{1-q}}, Steiner symmetrization, and the two-phase
// maximizer (projected ascent, then a damped Euler-Lagrange fixed point).

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "grid.hpp"
#include "penalty.hpp"
#include "poisson.hpp"

namespace equil {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateMaximizerError : public SolverError {
 public:
  using SolverError::SolverError;
};

class ResolutionError : public ContractError {
 public:
  using ContractError::ContractError;
};

struct AdmissibleSpec {
  double eps = 0.0;
  double q = 0.0;
  double center = 0.0;  ///< c; 0 for steady states
  double amp_cap = 0.0;
  double mass_cap = 0.0;
  double strip_halfwidth = 0.0;

  static AdmissibleSpec make(double eps, double q, double c = 0.0) {
    AdmissibleSpec s;
    s.eps = eps;
    s.q = q;
    s.center = c;
    s.amp_cap = std::pow(eps, 1.0 - q);
    s.mass_cap = eps * eps;
    s.strip_halfwidth = s.amp_cap;
    if (!(s.amp_cap > 0.0 && s.mass_cap > 0.0)) throw ContractError("AdmissibleSpec: caps must be positive");
    if (!(std::abs(c) + s.strip_halfwidth < 1.0))
      throw ContractError("AdmissibleSpec: strip |y - c| <= eps^{1-q} must stay inside the channel");
    return s;
  }

  bool in_strip(double y) const { return std::abs(y - center) <= strip_halfwidth; }
};

struct EnergyBreakdown {
  double e1 = 0.0;  ///< self energy, 1/2 int w psi
  double e2 = 0.0;  ///< -1/2 int (y-c)^2 w
  double e3 = 0.0;  ///< -eps^2 int F(w)
  double total = 0.0;
};

/// Names of the admissibility constraints `omega` violates (empty when
/// admissible).
inline std::vector<std::string> admissibility_violations(const Field& omega, const AdmissibleSpec& spec) {
  std::vector<std::string> out;
  const auto& g = omega.grid();
  bool negative = false, over_cap = false, outside = false, non_finite = false;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double v = omega(i, j);
      if (!std::isfinite(v)) non_finite = true;
      if (v < 0.0) negative = true;
      if (v > spec.amp_cap * (1.0 + 1e-12)) over_cap = true;
      if (v != 0.0 && !spec.in_strip(g.y(j))) outside = true;
    }
  if (non_finite) out.emplace_back("non-finite values");
  if (negative) out.emplace_back("negative values");
  if (over_cap) out.emplace_back("amplitude above eps^{1-q}");
  if (outside) out.emplace_back("support outside |y - c| <= eps^{1-q}");
  if (integrate(omega) > spec.mass_cap * (1.0 + 1e-6)) out.emplace_back("mass above eps^2");
  return out;
}

inline void require_admissible(const Field& omega, const AdmissibleSpec& spec) {
  const auto v = admissibility_violations(omega, spec);
  if (v.empty()) return;
  std::string msg = "inadmissible vorticity:";
  for (const auto& s : v) msg += " [" + s + "]";
  throw ContractError(msg);
}

/// Energy of `omega` given its stream function.
inline EnergyBreakdown energy_with_psi(const Field& omega, const Field& psi, const AdmissibleSpec& spec,
                                       const PenaltyFamily& fam) {
  const auto& g = omega.grid();
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double w = omega(i, j);
      if (w == 0.0) continue;
      const double wt = g.weight(i, j);
      const double dy = g.y(j) - spec.center;
      s1 += wt * w * psi(i, j);
      s2 += wt * dy * dy * w;
      s3 += wt * fam.penalty(w);
    }
  EnergyBreakdown e;
  e.e1 = 0.5 * s1;
  e.e2 = -0.5 * s2;
  e.e3 = -spec.eps * spec.eps * s3;
  e.total = e.e1 + e.e2 + e.e3;
  return e;
}

inline EnergyBreakdown energy(const Field& omega, const AdmissibleSpec& spec, const PenaltyFamily& fam,
                              const PoissonSolver& solver) {
  require_admissible(omega, spec);
  return energy_with_psi(omega, solver.stream_function(omega), spec, fam);
}

inline EnergyBreakdown energy(const Field& omega, const AdmissibleSpec& spec, const PenaltyFamily& fam) {
  return energy(omega, spec, fam, PoissonSolver(omega.grid()));
}

/// First variation H = psi - (y-c)^2/2 - eps^2 F'(omega).
inline Field first_variation(const Field& omega, const Field& psi, const AdmissibleSpec& spec,
                             const PenaltyFamily& fam) {
  const auto& g = omega.grid();
  Field H(g);
  const double e2 = spec.eps * spec.eps;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double dy = g.y(j) - spec.center;
      H(i, j) = psi(i, j) - 0.5 * dy * dy - e2 * fam.fprime(std::max(0.0, omega(i, j)));
    }
  return H;
}

/// Semi-axes of the thin trial ellipse: (eps^q |ln eps|^2, eps).
inline std::pair<double, double> trial_ellipse_axes(const AdmissibleSpec& spec, const PenaltyFamily& fam) {
  return {std::pow(spec.eps, spec.q) * fam.log_eps() * fam.log_eps(), spec.eps};
}

/// omega = eps^{1-q} / (pi |ln eps|^2) on the ellipse
/// (x/a)^2 + ((y-c)/eps)^2 <= 1, a = eps^q |ln eps|^2.
struct EllipseOptions {
  bool clip_to_box = false;       ///< cut an over-long ellipse at the box instead of rejecting it
  bool check_resolution = true;  ///< require hy <= eps/4 and hx <= a/8
};

inline Field trial_ellipse(const AdmissibleSpec& spec, const PenaltyFamily& fam, const ChannelGrid& g,
                           EllipseOptions opt = {}) {
  const bool clip_to_box = opt.clip_to_box;
  const auto [a, b] = trial_ellipse_axes(spec, fam);
  if (opt.check_resolution && g.hy() > b / 4.0 * (1.0 + 1e-12))
    throw ResolutionError("trial_ellipse: need hy <= eps/4");
  if (opt.check_resolution && g.hx() > a / 8.0 * (1.0 + 1e-12))
    throw ResolutionError("trial_ellipse: need hx <= eps^q |ln eps|^2 / 8");
  if (!clip_to_box && a > g.Lx() - g.hx())
    throw ResolutionError("trial_ellipse: ellipse is longer than the truncation box");
  const double amp = spec.amp_cap / (std::numbers::pi * fam.log_eps() * fam.log_eps());
  return Field::sample(g, [&](double x, double y) {
    const double u = x / a;
    const double v = (y - spec.center) / b;
    return (u * u + v * v <= 1.0 && spec.in_strip(y)) ? amp : 0.0;
  });
}

/// Row-wise symmetric decreasing rearrangement about x = 0: each row's
/// values, sorted in decreasing order, are laid out at x = 0, +hx, -hx,
/// +2hx, -2hx, ...
inline Field steiner(const Field& omega) {
  const auto& g = omega.grid();
  if (omega.min() < 0.0) throw std::domain_error("steiner: negative entries");
  std::vector<int> order;
  order.reserve(g.nx());
  order.push_back(g.center_x());
  for (int k = 1; k <= g.center_x(); ++k) {
    order.push_back(g.center_x() + k);
    order.push_back(g.center_x() - k);
  }
  Field out(g);
  std::vector<double> row(g.nx());
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) row[i] = omega(i, j);
    std::sort(row.begin(), row.end(), std::greater<>());
    for (int k = 0; k < g.nx(); ++k) out(order[k], j) = row[k];
  }
  return out;
}

struct SupportExtents {
  double x_halfwidth = 0.0;
  double y_halfwidth = 0.0;
  double x_center = 0.0;
  double y_center = 0.0;
  bool empty = true;
};

/// Smallest axis-aligned node rectangle containing {omega > threshold}.
inline SupportExtents support_rectangle(const Field& omega, double threshold) {
  const auto& g = omega.grid();
  SupportExtents s;
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      if (!(omega(i, j) > threshold)) continue;
      const double x = g.x(i), y = g.y(j);
      if (s.empty) {
        x0 = x1 = x;
        y0 = y1 = y;
        s.empty = false;
      } else {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
  if (!s.empty) {
    s.x_halfwidth = 0.5 * (x1 - x0);
    s.y_halfwidth = 0.5 * (y1 - y0);
    s.x_center = 0.5 * (x1 + x0);
    s.y_center = 0.5 * (y1 + y0);
  }
  return s;
}

struct SolverOptions {
  double theta = 0.3;
  int max_iters = 5000;
  double tol = 1e-8;
  int steiner_every = 10;
  int phase1_steps = 50;
  double support_threshold = 1e-8;  ///< relative to max amplitude
};

struct SolveReport {
  Field omega;
  Field psi;
  double alpha = 0.0;
  EnergyBreakdown energy;
  double el_residual_on_supp = 0.0;
  double el_violation_off_supp = 0.0;
  SupportExtents support;
  double supp_x_halfwidth = 0.0;
  double supp_y_halfwidth = 0.0;
  double max_amp = 0.0;
  double mass = 0.0;
  int iterations = 0;         ///< fixed-point iterations
  int phase1_iterations = 0;  ///< accepted ascent steps
  std::vector<double> phase1_energies;
  double final_change = 0.0;  ///< last relative L1 change of the fixed point
  bool converged = false;
  std::vector<std::string> warnings;
};

namespace detail {

// Weighted Euclidean projection onto {0 <= v <= cap, v = 0 off the strip,
// int v = mass}: v -> clamp(v - mu, 0, cap) with mu found by bisection.
inline Field project_active_mass(const Field& v, const AdmissibleSpec& spec) {
  const auto& g = v.grid();
  std::vector<std::size_t> idx;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j)
      if (spec.in_strip(g.y(j)) && j > 0 && j < g.ny() - 1) idx.push_back(g.index(i, j));
  if (idx.empty()) throw ResolutionError("admissible strip contains no interior grid rows");
  const double cell = g.hx() * g.hy();
  double vmin = v[idx[0]], vmax = v[idx[0]];
  for (auto k : idx) {
    vmin = std::min(vmin, v[k]);
    vmax = std::max(vmax, v[k]);
  }
  auto mass_at = [&](double mu) {
    double m = 0.0;
    for (auto k : idx) m += std::clamp(v[k] - mu, 0.0, spec.amp_cap);
    return m * cell;
  };
  double lo = vmin - spec.amp_cap;  // everything saturates
  double hi = vmax;                 // everything vanishes
  if (mass_at(lo) < spec.mass_cap) throw ResolutionError("admissible strip cannot carry mass eps^2 below the cap");
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (mass_at(mid) > spec.mass_cap) lo = mid; else hi = mid;
  }
  const double mu = 0.5 * (lo + hi);
  Field out(g);
  for (auto k : idx) out[k] = std::clamp(v[k] - mu, 0.0, spec.amp_cap);
  return out;
}

inline void symmetrize_x(Field& w) {
  const auto& g = w.grid();
  for (int i = 0; i < g.center_x(); ++i) {
    const int m = g.nx() - 1 - i;
    for (int j = 0; j < g.ny(); ++j) {
      const double avg = 0.5 * (w(i, j) + w(m, j));
      w(i, j) = avg;
      w(m, j) = avg;
    }
  }
}

// Interior rows [lo, hi] inside the admissible strip.
inline std::pair<int, int> strip_rows(const ChannelGrid& g, const AdmissibleSpec& spec) {
  int lo = g.ny(), hi = -1;
  for (int j = 1; j < g.ny() - 1; ++j)
    if (spec.in_strip(g.y(j))) {
      lo = std::min(lo, j);
      hi = std::max(hi, j);
    }
  if (hi < lo) throw ResolutionError("admissible strip contains no interior grid rows");
  return {lo, hi};
}

// Euler-Lagrange profile f((Psi - alpha)/eps^2) restricted to the strip and
// clamped to the amplitude cap.
inline void el_profile(const Field& Psi, double alpha, const AdmissibleSpec& spec, const PenaltyFamily& fam,
                       Field& out) {
  const auto& g = Psi.grid();
  const auto [lo, hi] = strip_rows(g, spec);
  const double inv = 1.0 / (spec.eps * spec.eps);
  std::fill(out.values().begin(), out.values().end(), 0.0);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = lo; j <= hi; ++j) out(i, j) = std::min(spec.amp_cap, fam.f((Psi(i, j) - alpha) * inv));
}

// alpha with int f((Psi - alpha)/eps^2) = eps^2 (mass is decreasing in alpha).
inline double solve_multiplier(const Field& Psi, const AdmissibleSpec& spec, const PenaltyFamily& fam) {
  const auto& g = Psi.grid();
  const auto [lo, hi_row] = strip_rows(g, spec);
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(g.nx()) * (hi_row - lo + 1));
  for (int i = 0; i < g.nx(); ++i)
    for (int j = lo; j <= hi_row; ++j) vals.push_back(Psi(i, j));
  const double cell = g.hx() * g.hy();
  const double inv = 1.0 / (spec.eps * spec.eps);
  auto excess = [&](double alpha) {
    double m = 0.0;
    for (double v : vals) m += std::min(spec.amp_cap, fam.f((v - alpha) * inv));
    return m * cell - spec.mass_cap;
  };
  double hi = *std::max_element(vals.begin(), vals.end());
  double step = spec.eps * spec.eps;
  double lo_a = hi - step;
  int guard = 0;
  while (excess(lo_a) < 0.0) {
    hi = lo_a;
    step *= 2.0;
    lo_a -= step;
    if (++guard > 200) throw SolverError("multiplier: cannot reach mass eps^2 inside the admissible strip");
  }
  if (excess(hi) > 0.0) return hi;
  std::uintmax_t max_iter = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(52);
  auto [a, b] = boost::math::tools::toms748_solve(excess, lo_a, hi, tol, max_iter);
  return 0.5 * (a + b);
}

inline Field relative_potential(const Field& psi, const AdmissibleSpec& spec) {
  const auto& g = psi.grid();
  Field Psi(g);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double dy = g.y(j) - spec.center;
      Psi(i, j) = psi(i, j) - 0.5 * dy * dy;
    }
  return Psi;
}

inline double weighted_l1(const Field& f) {
  const auto& g = f.grid();
  double s = 0.0;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) s += g.weight(i, j) * std::abs(f(i, j));
  return s;
}

}  // namespace detail

/// Euler-Lagrange diagnostics of a candidate state: fills alpha, energy,
/// residuals, support and amplitude fields of `rep` from rep.omega.
inline void evaluate_report(SolveReport& rep, const AdmissibleSpec& spec, const PenaltyFamily& fam,
                            const PoissonSolver& solver, double support_threshold) {
  const auto& g = rep.omega.grid();
  rep.psi = solver.stream_function(rep.omega);
  const Field Psi = detail::relative_potential(rep.psi, spec);
  rep.alpha = detail::solve_multiplier(Psi, spec, fam);
  rep.energy = energy_with_psi(rep.omega, rep.psi, spec, fam);
  rep.max_amp = rep.omega.max();
  rep.mass = integrate(rep.omega);
  const double thr = support_threshold * rep.max_amp;
  const Field H = first_variation(rep.omega, rep.psi, spec, fam);
  const double scale = std::max(std::abs(rep.alpha), std::numeric_limits<double>::min());
  double on = 0.0, off = 0.0;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 1; j < g.ny() - 1; ++j) {
      const double d = H(i, j) - rep.alpha;
      if (rep.omega(i, j) > thr) on = std::max(on, std::abs(d));
      else off = std::max(off, d);
    }
  rep.el_residual_on_supp = on / scale;
  rep.el_violation_off_supp = std::max(0.0, off) / scale;
  rep.support = support_rectangle(rep.omega, thr);
  rep.supp_x_halfwidth = rep.support.x_halfwidth;
  rep.supp_y_halfwidth = rep.support.y_halfwidth;
}

/// Two-phase maximizer of the penalized energy on the active-mass slice
/// int w = eps^2.
inline SolveReport maximize(const AdmissibleSpec& spec, const PenaltyFamily& fam, const ChannelGrid& g,
                            const SolverOptions& opts = {}) {
  if (!(opts.theta > 0.0 && opts.theta <= 1.0)) throw ContractError("maximize: theta must lie in (0, 1]");
  const PoissonSolver solver(g);
  SolveReport rep;

  const auto [a, b] = trial_ellipse_axes(spec, fam);
  if (a > g.Lx() - g.hx())
    rep.warnings.push_back("trial ellipse longer than the truncation box; clipped before projection");
  // The start only has to be admissible, so coarse grids are accepted here.
  Field w = detail::project_active_mass(trial_ellipse(spec, fam, g, {.clip_to_box = true, .check_resolution = false}),
                                        spec);

  // Phase 1: projected ascent along H with backtracking.
  Field psi = solver.stream_function(w);
  double E = energy_with_psi(w, psi, spec, fam).total;
  rep.phase1_energies.push_back(E);
  double tau = 1.0;
  constexpr double tau_min = 1e-14;
  for (int step = 1; step <= opts.phase1_steps; ++step) {
    const Field H = first_variation(w, psi, spec, fam);
    bool accepted = false;
    while (tau >= tau_min) {
      Field cand = detail::project_active_mass(w + tau * H, spec);
      Field cpsi = solver.stream_function(cand);
      const double Ec = energy_with_psi(cand, cpsi, spec, fam).total;
      if (Ec >= E) {
        w = std::move(cand);
        psi = std::move(cpsi);
        E = Ec;
        accepted = true;
        tau = std::min(tau * 2.0, 1e6);
        break;
      }
      tau *= 0.25;
    }
    if (!accepted) break;
    ++rep.phase1_iterations;
    if (opts.steiner_every > 0 && step % opts.steiner_every == 0) {
      Field ws = steiner(w);
      Field spsi = solver.stream_function(ws);
      const double Es = energy_with_psi(ws, spsi, spec, fam).total;
      if (Es >= E - 1e-12 * std::abs(E)) {
        w = std::move(ws);
        psi = std::move(spsi);
        E = std::max(E, Es);
      }
    }
    rep.phase1_energies.push_back(E);
  }
  for (std::size_t k = 1; k < rep.phase1_energies.size(); ++k)
    if (rep.phase1_energies[k] < rep.phase1_energies[k - 1])
      throw SolverError("maximize: phase-1 energy decreased");

  // Phase 2: damped Euler-Lagrange fixed point with the multiplier fixed by
  // the mass constraint.
  Field target(g);
  detail::symmetrize_x(w);
  rep.converged = false;
  for (int it = 1; it <= opts.max_iters; ++it) {
    psi = solver.stream_function(w);
    const Field Psi = detail::relative_potential(psi, spec);
    const double alpha = detail::solve_multiplier(Psi, spec, fam);
    detail::el_profile(Psi, alpha, spec, fam, target);
    detail::symmetrize_x(target);
    Field next = (1.0 - opts.theta) * w + opts.theta * target;
    const double norm = detail::weighted_l1(w);
    const double change = detail::weighted_l1(next - w) / (norm > 0.0 ? norm : 1.0);
    w = std::move(next);
    rep.iterations = it;
    rep.final_change = change;
    if (change <= opts.tol) {
      rep.converged = true;
      break;
    }
  }

  rep.omega = std::move(w);
  evaluate_report(rep, spec, fam, solver, opts.support_threshold);
  if (rep.mass < 1e-3 * spec.mass_cap)
    throw DegenerateMaximizerError("maximize: state collapsed to zero (mass < 1e-3 eps^2)");
  return rep;
}

struct MultiplierDiagnostics {
  double alpha_over_eps2L = 0.0;
  double claim_integral_over_eps2 = 0.0;
};

/// alpha / (eps^2 |ln eps|) and int (w F'(w) - 2 F(w)) / eps^2.
inline MultiplierDiagnostics multiplier_diagnostics(const Field& omega, double alpha, const PenaltyFamily& fam) {
  const double e2 = fam.eps() * fam.eps();
  MultiplierDiagnostics d;
  d.alpha_over_eps2L = alpha / (e2 * fam.log_eps());
  d.claim_integral_over_eps2 =
      integrate(omega.map([&](double w) { return w > 0.0 ? w * fam.fprime(w) - 2.0 * fam.penalty(w) : 0.0; })) / e2;
  return d;
}

inline MultiplierDiagnostics multiplier_diagnostics(const SolveReport& rep, const PenaltyFamily& fam) {
  return multiplier_diagnostics(rep.omega, rep.alpha, fam);
}

struct SupportRatios {
  SupportExtents rect;
  double rx = 0.0;  ///< x half-width * |ln eps|
  double ry = 0.0;  ///< y half-width / (eps |ln eps|^{1/2})
};

inline SupportRatios support_extents(const Field& omega, const PenaltyFamily& fam, double rel_threshold = 1e-8) {
  SupportRatios r;
  r.rect = support_rectangle(omega, rel_threshold * omega.max());
  r.rx = r.rect.x_halfwidth * fam.log_eps();
  r.ry = r.rect.y_halfwidth / (fam.eps() * std::sqrt(fam.log_eps()));
  return r;
}

inline SupportRatios support_extents(const SolveReport& rep, const PenaltyFamily& fam) {
  return support_extents(rep.omega, fam);
}

/// || (y - c + u^x) d_x w + u^y d_y w ||_{L2} for the physical state
/// w = -omega*, psi = -psi*, viewed in the frame moving with speed c.
inline double transport_residual(const Field& omega_star, const Field& psi_star, double c) {
  const auto& g = omega_star.grid();
  const Field w = -1.0 * omega_star;
  const Field psi = -1.0 * psi_star;
  auto [wx, wy] = gradient(w);
  auto [px, py] = gradient(psi);
  Field r(g);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double ux = py(i, j);
      const double uy = -px(i, j);
      r(i, j) = (g.y(j) - c + ux) * wx(i, j) + uy * wy(i, j);
    }
  return l2_norm(r);
}

}  // namespace equil

#endif  // EQUIL_VARIATIONAL_HPP
