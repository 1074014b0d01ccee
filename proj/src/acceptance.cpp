// Acceptance runner: one PASS/FAIL line per criterion.
// Usage: equil_acceptance [output-dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include "equil/green_kernel.hpp"
#include "equil/studies.hpp"

using namespace equil;

namespace {

constexpr double pi = std::numbers::pi;
const std::vector<double> kSweep = {0.1, 0.05, 0.025};
constexpr double kQ = 0.05;

int passed = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  passed += ok;
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << ". " << name << ": " << detail << std::endl;
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1
void solver_cross_validation() {
  const auto t0 = std::chrono::steady_clock::now();
  const ChannelGrid g(129, 65, 8.0);
  auto bump = [](double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; };
  std::vector<std::function<double(double, double)>> inputs = {
      [&](double x, double y) { return bump((x * x) / 4.0 + (y * y) / 0.36); },
      [&](double x, double y) { return bump(((x - 0.8) * (x - 0.8)) / 1.0 + ((y - 0.3) * (y - 0.3)) / 0.25); },
      [&](double x, double y) {
        return bump((x * x) / 6.25 + (y * y) / 0.49) * std::cos(1.5 * x) + 0.5 * bump(((x + 1) * (x + 1) + y * y) / 0.3);
      }};
  double worst = 0.0;
  for (const auto& fn : inputs) {
    Field w(g);
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 1; j < g.ny() - 1; ++j) w(i, j) = fn(g.x(i), g.y(j));
    const Field direct = convolve(w);
    const Field fast = solve_poisson(w).psi;
    worst = std::max(worst, l2_norm(direct - fast) / l2_norm(fast));
  }
  const double secs = seconds_since(t0);
  report(1, "solver cross-validation", worst <= 1e-3 && secs < 30.0,
         "max rel L2 " + fmt(worst) + " (<= 1e-3), " + fmt(secs) + " s (< 30 s), 129x65, Lx = 8");
}

// ---------------------------------------------------------------- 2
void penalty_suite() {
  std::vector<double> claim, fos;
  double worst_claim = -1e300, worst_fos = 0.0, worst_linear = 0.0, worst_convex = 0.0;
  for (double eps : kSweep) {
    const PenaltyFamily fam(eps, kQ);
    const double hi = 3.0 * fam.amp_cap();
    double mag = 0.0, top = -1e300, c2 = 0.0;
    for (int k = 1; k <= 4000; ++k) {
      const double s = hi * std::pow(k / 4000.0, 3.0);
      const double v = (s * fam.fprime(s) - 2.0 * fam.penalty(s)) / fam.slope();
      mag = std::max(mag, std::abs(v));
      top = std::max(top, v);
      const double t = fam.slope() * k / 4000.0;
      c2 = std::max(c2, fam.penalty(t) / t);
    }
    claim.push_back(mag);
    fos.push_back(c2);
    worst_claim = std::max(worst_claim, top);
    worst_fos = std::max(worst_fos, c2);
    const double coef = fam.log_eps() * fam.log_eps() * std::pow(eps, kQ - 1.0);
    for (int k = 0; k <= 100; ++k) {
      const double s = fam.slope() * (1.0 + 0.02 * k);
      worst_linear = std::max(worst_linear, std::abs(fam.fprime(s) / (coef * s) - 1.0));
    }
    const double h = hi / 4000.0;
    for (int k = 1; k < 4000; ++k) {
      const double s = k * h;
      const double d2 = fam.penalty(s + h) - 2.0 * fam.penalty(s) + fam.penalty(s - h);
      worst_convex = std::min(worst_convex, d2 / std::max(fam.penalty(s), 1e-300));
    }
  }
  auto spread = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
  };
  const bool ok = worst_claim <= 10.0 && spread(claim) <= 2.0 && worst_fos <= 2.0 && spread(fos) <= 2.0 &&
                  worst_linear <= 1e-12 && worst_convex >= -1e-12;
  report(2, "penalty suite", ok,
         "max (sF'-2F)/slope " + fmt(worst_claim) + " (<= 10), |.| constants " + fmt(claim[0]) + "," +
             fmt(claim[1]) + "," + fmt(claim[2]) + " (spread " + fmt(spread(claim)) + "); F/s on [0, slope] " +
             fmt(fos[0]) + "," + fmt(fos[1]) + "," + fmt(fos[2]) + " (<= 2, spread " + fmt(spread(fos)) +
             "); linear-branch F' rel err " + fmt(worst_linear) + "; min rel 2nd diff of F " + fmt(worst_convex));
}

// ---------------------------------------------------------------- 3-7 on a sweep
struct SweepVerdicts {
  bool c3 = false, c4 = false, c5 = false, c6 = false, c7 = false;
  std::string d3, d4, d5, d6, d7;
};

// Transport residual at eps = 0.1 on three nested resolutions.
std::pair<bool, std::string> steadiness(RunMode mode, double c) {
  const double eps = 0.1;
  const auto spec = AdmissibleSpec::make(eps, kQ, c);
  const PenaltyFamily fam(eps, kQ);
  std::vector<double> res;
  std::string detail;
  for (auto [nx, ny] : {std::pair{257, 61}, std::pair{513, 121}, std::pair{1025, 241}}) {
    try {
      const auto rep = maximize(spec, fam, ChannelGrid(nx, ny, 8.0));
      res.push_back(transport_residual(rep.omega, rep.psi, c));
    } catch (const std::exception& e) {
      return {false, std::string("maximize failed: ") + e.what()};
    }
  }
  const double o1 = std::log2(res[0] / res[1]), o2 = std::log2(res[1] / res[2]);
  const bool ok = res[1] < res[0] && res[2] < res[1] && o2 >= 1.0;
  (void)mode;
  return {ok, "residuals " + fmt(res[0]) + " > " + fmt(res[1]) + " > " + fmt(res[2]) + ", orders " + fmt(o1) + ", " +
                  fmt(o2) + " (>= 1)"};
}

SweepVerdicts judge_sweep(const SweepResult& r, RunMode mode, double c) {
  SweepVerdicts v;
  // 3: positivity of the trial energy.
  v.c3 = true;
  for (const auto& run : r.runs) {
    const double L = std::abs(std::log(run.eps));
    const double need = 0.01 * L * std::pow(run.eps, 4);
    v.c3 &= run.trial_energy > 0.0 && run.trial_energy >= need;
    v.d3 += "E/(|ln eps| eps^4) at " + fmt(run.eps) + ": " + fmt(run.trial_energy / (L * std::pow(run.eps, 4))) + "; ";
  }
  v.d3 += "need >= 0.01";

  // 4: maximizer structure.
  v.c4 = true;
  std::size_t converged = 0;
  for (const auto& run : r.runs) {
    if (!run.ok) continue;
    ++converged;
    const auto& rep = run.report;
    const bool ok = rep.el_residual_on_supp <= 0.05 && rep.el_violation_off_supp <= 0.05 &&
                    rep.max_amp < 0.9 * std::pow(run.eps, 1.0 - kQ) && rep.alpha > 0.0 && run.alpha_ratio >= 0.05 &&
                    run.claim_ratio <= 20.0;
    v.c4 &= ok;
    v.d4 += "eps " + fmt(run.eps) + ": el_res " + fmt(rep.el_residual_on_supp) + ", el_viol " +
            fmt(rep.el_violation_off_supp) + ", amp/cap " + fmt(rep.max_amp / std::pow(run.eps, 1.0 - kQ)) +
            ", alpha/(eps^2|ln eps|) " + fmt(run.alpha_ratio) + ", claim/eps^2 " + fmt(run.claim_ratio) + "; ";
  }
  v.c4 &= converged > 0;
  v.d4 += std::to_string(converged) + "/" + std::to_string(r.runs.size()) + " converged";

  // 5: steadiness under refinement.
  std::tie(v.c5, v.d5) = steadiness(mode, c);

  // 6: scaling fits.
  const double q = kQ;
  std::vector<std::pair<std::string, std::string>> want = {
      {"norm:" + NormSpec{NormKind::Lp, 0, 1, 0}.key(), "L1"},
      {"norm:" + NormSpec{NormKind::DerivSup, 0, 2, 0}.key(), "Linf"},
      {"norm:" + NormSpec{NormKind::DerivSup, 0, 2, 1}.key(), "grad Linf"},
      {"norm:" + NormSpec{NormKind::Wsp_gagliardo, 0.5, 2, 0}.key(), "W^{0.5,2}"},
      {"norm:" + NormSpec{NormKind::Wsp_gagliardo, 1.0, 2, 0}.key(), "W^{1,2}"},
      {"norm:" + NormSpec{NormKind::Wsp_gagliardo, 1.4, 2, 0}.key(), "W^{1.4,2}"},
      {"supp_y", "supp_y"}};
  v.c6 = r.fits.size() > 0;
  for (const auto& [key, label] : want) {
    const auto* f = find_fit(r, key);
    if (!f) {
      v.c6 = false;
      v.d6 += label + " missing; ";
      continue;
    }
    v.c6 &= f->pass;
    v.d6 += label + " " + fmt(f->slope) + " (" + fmt(f->predicted) + "+-" + fmt(f->tol) + ", r2 " + fmt(f->r2) + ")" +
            (f->pass ? "" : " x") + "; ";
  }
  bool mono = true;
  std::string sx;
  const RunRecord* prev = nullptr;
  for (const auto& run : r.runs) {
    if (!run.ok) continue;
    sx += fmt(run.report.supp_x_halfwidth) + " ";
    if (prev && run.report.supp_x_halfwidth < prev->report.supp_x_halfwidth) mono = false;
    prev = &run;
  }
  v.c6 &= mono;
  v.d6 += "supp_x " + sx + (mono ? "(nonincreasing in eps)" : "(not monotone) x");
  (void)q;

  // 7: threshold witness.
  if (r.witness) {
    std::optional<double> s0;
    for (const auto& [p, s] : r.witness->s0)
      if (p == 2.0) s0 = s;
    const double lo = 1.5 - 2.0 * kQ - 0.2, hi = 1.6;
    const bool s_ok = s0 && *s0 >= lo && *s0 <= hi;
    const auto* c09 = find_fit(r, "norm:" + NormSpec{NormKind::Holder, 0.9, 2, 0}.key());
    const auto* c15 = find_fit(r, "norm:" + NormSpec{NormKind::Holder, 0.5, 2, 1}.key());
    v.c7 = s_ok && c09 && c15 && c09->slope > 0.0 && c15->slope < 0.0;
    v.d7 = "s0(2) = " + (s0 ? fmt(*s0) : std::string("none")) + " in [" + fmt(lo) + ", " + fmt(hi) +
           "]; C^{0,0.9} slope " + (c09 ? fmt(c09->slope) : "n/a") + " (> 0); C^{1,0.5} slope " +
           (c15 ? fmt(c15->slope) : "n/a") + " (< 0)";
  } else {
    v.d7 = "no witness (fewer than 3 converged runs)";
  }
  return v;
}

RunManifest sweep_manifest(RunMode mode, double c) {
  RunManifest m;
  m.mode = mode;
  m.c = c;
  m.eps_list = kSweep;
  m.q = kQ;
  m.delta = 4.0 * kQ;
  m.grid = {513, 0, 8.0};
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path out = argc > 1 ? argv[1] : "acceptance_out";
  const auto t0 = std::chrono::steady_clock::now();

  solver_cross_validation();
  penalty_suite();

  const RunManifest ms = sweep_manifest(RunMode::steady, 0.0);
  const SweepResult steady = run_sweep(ms);
  write_outputs(steady, out / "steady");
  const auto vs = judge_sweep(steady, RunMode::steady, 0.0);
  report(3, "positivity", vs.c3, vs.d3);
  report(4, "maximizer structure", vs.c4, vs.d4);
  report(5, "steadiness", vs.c5, vs.d5);
  report(6, "scaling fits", vs.c6, vs.d6);
  report(7, "threshold witness", vs.c7, vs.d7);

  const double c = 0.5;
  const SweepResult trav = run_sweep(sweep_manifest(RunMode::traveling, c));
  write_outputs(trav, out / "traveling");
  const auto vt = judge_sweep(trav, RunMode::traveling, c);
  bool centred = true;
  std::string centres;
  for (const auto& run : trav.runs) {
    if (!run.ok) continue;
    const double hy = 2.0 / (run.ny - 1);
    centred &= std::abs(run.report.support.y_center - c) <= 2.0 * hy;
    centres += fmt(run.report.support.y_center) + " ";
  }
  const bool c8 = vt.c3 && vt.c4 && vt.c5 && vt.c6 && vt.c7 && centred;
  report(8, "traveling-wave parity", c8,
         std::string("criteria 3-7 at c = 0.5: ") + (vt.c3 ? "P" : "F") + (vt.c4 ? "P" : "F") + (vt.c5 ? "P" : "F") +
             (vt.c6 ? "P" : "F") + (vt.c7 ? "P" : "F") + "; support y-centres " + centres + "(target 0.5 within 2hy)" +
             " | " + vt.d4 + " | " + vt.d6 + " | " + vt.d7);

  // 9: rigidity probe.
  {
    double worst_identity = 0.0;
    for (double width : {1.0, 0.5}) {
      const ChannelGrid g(513, 257, 6.0);
      Field w(g);
      for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
          const double x = g.x(i) / width, Y = 0.5 * pi * (g.y(j) + 1.0);
          const double gx = std::exp(-x * x), gxx = (4.0 * x * x - 2.0) * gx / (width * width);
          const double s2 = std::sin(Y) * std::sin(Y), s2yy = 0.5 * pi * pi * std::cos(2.0 * Y);
          w(i, j) = -(gxx * s2 + gx * s2yy);
        }
      worst_identity = std::max(worst_identity, energy_identity_stats(w, solve_poisson(w), 0.0).identity_error);
    }
    bool ratios = true, bounds = true;
    std::string rs;
    for (const auto* sw : {&steady, &trav})
      for (const auto& run : sw->runs) {
        if (!run.ok) continue;
        const auto& st = run.identity;
        ratios &= st.ratio.has_value() && *st.ratio >= 1.0;
        rs += st.ratio ? fmt(*st.ratio) + " " : std::string("undef ");
        if (st.monotone_ok) bounds &= run.layer_violations == 0;
      }
    report(9, "rigidity probe", worst_identity <= 0.05 && ratios && bounds,
           "manufactured identity error " + fmt(worst_identity) + " (<= 0.05); contraction ratios " + rs +
               "(>= 1); layer lower bound " + (bounds ? "holds" : "violated") + " where monotone_ok");
  }

  // 10: determinism.
  {
    const SweepResult again = run_sweep(manifest_from_json(to_json(ms)));
    const bool same = results_csv(again) == results_csv(steady);
    report(10, "determinism", same,
           same ? "results.csv bit-identical on rerun from manifest" : "results.csv differs on rerun");
  }

  std::cout << "acceptance: " << passed << "/10 criteria pass (" << fmt(seconds_since(t0), 4) << " s)" << std::endl;
  return passed == 10 ? 0 : 1;
}
