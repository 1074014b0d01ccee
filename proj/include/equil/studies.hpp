#ifndef EQUIL_STUDIES_HPP
#define EQUIL_STUDIES_HPP

// eps-sweeps over steady states and traveling waves: maximize, diagnostics,
// norm battery, scaling fits, and the on-disk outputs (results.csv, fits.csv,
// witness.csv, manifest.json, fields/*.bin, plots/*.svg).

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fit.hpp"
#include "norms.hpp"
#include "parallel.hpp"
#include "penalty.hpp"
#include "poisson.hpp"
#include "rigidity.hpp"
#include "variational.hpp"

#ifndef EQUIL_GIT_HASH
#define EQUIL_GIT_HASH "unknown"
#endif

namespace equil {

inline constexpr const char* kToolVersion = "0.1.0";

enum class RunMode { steady, traveling };

inline std::string to_string(RunMode m) { return m == RunMode::steady ? "steady" : "traveling"; }

inline RunMode parse_run_mode(const std::string& s) {
  if (s == "steady") return RunMode::steady;
  if (s == "traveling") return RunMode::traveling;
  throw ContractError("mode must be steady or traveling, got '" + s + "'");
}

struct GridParams {
  int nx = 513;
  int ny = 0;  ///< 0: per-eps automatic choice with hy <= eps/6
  double Lx = 8.0;
};

/// Smallest ny with hy <= eps/6 and ny = 1 mod 4 (so the grid coarsens by 2).
inline int auto_ny(double eps) {
  int n = static_cast<int>(std::ceil(12.0 / eps - 1e-9));
  n = (n + 3) / 4 * 4;
  return n + 1;
}

struct RunManifest {
  RunMode mode = RunMode::steady;
  double c = 0.0;
  std::vector<double> eps_list = {0.1, 0.05, 0.025};
  double q = 0.05;
  double delta = 0.2;  ///< q = delta / 4
  GridParams grid;
  SolverOptions solver;
  std::vector<double> ps = {1.0, 2.0, 4.0};
  bool norms = true;
  std::uint64_t seed = 0;  ///< recorded; the pipeline is deterministic
  std::string tool_version = kToolVersion;
  std::string git_hash = EQUIL_GIT_HASH;

  void validate() const {
    if (eps_list.empty()) throw ContractError("manifest: eps_list is empty");
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
      if (!(eps_list[k] > 0.0 && eps_list[k] < 0.5)) throw ContractError("manifest: eps must lie in (0, 0.5)");
      if (k > 0 && !(eps_list[k] < eps_list[k - 1])) throw ContractError("manifest: eps_list must strictly decrease");
    }
    if (!(std::abs(c) < 1.0)) throw ContractError("manifest: |c| must be < 1");
    if (mode == RunMode::steady && c != 0.0) throw ContractError("manifest: steady mode requires c = 0");
    if (!(q > 0.0 && q <= 0.5)) throw ContractError("manifest: q must lie in (0, 1/2]");
    if (std::abs(q - delta / 4.0) > 1e-12) throw ContractError("manifest: q must equal delta / 4");
    if (grid.nx < 3 || grid.nx % 2 == 0) throw ContractError("manifest: nx must be odd and >= 3");
    if (grid.ny != 0 && (grid.ny < 3 || grid.ny % 2 == 0)) throw ContractError("manifest: ny must be odd or auto");
    if (!(grid.Lx > 0.0)) throw ContractError("manifest: Lx must be positive");
    for (double p : ps)
      if (!(p >= 1.0) || std::isinf(p)) throw ContractError("manifest: norm exponents must be finite and >= 1");
  }

  ChannelGrid grid_for(double eps) const {
    return ChannelGrid(grid.nx, grid.ny == 0 ? auto_ny(eps) : grid.ny, grid.Lx);
  }
};

inline nlohmann::json to_json(const RunManifest& m) {
  return {{"mode", to_string(m.mode)},
          {"c", m.c},
          {"eps_list", m.eps_list},
          {"q", m.q},
          {"delta", m.delta},
          {"grid", {{"nx", m.grid.nx}, {"ny", m.grid.ny == 0 ? nlohmann::json("auto") : nlohmann::json(m.grid.ny)},
                    {"Lx", m.grid.Lx}}},
          {"solver",
           {{"theta", m.solver.theta},
            {"max_iters", m.solver.max_iters},
            {"tol", m.solver.tol},
            {"steiner_every", m.solver.steiner_every},
            {"phase1_steps", m.solver.phase1_steps},
            {"support_threshold", m.solver.support_threshold}}},
          {"ps", m.ps},
          {"norms", m.norms},
          {"seed", m.seed},
          {"tool_version", m.tool_version},
          {"git_hash", m.git_hash}};
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.mode = parse_run_mode(j.at("mode").get<std::string>());
  m.c = j.at("c").get<double>();
  m.eps_list = j.at("eps_list").get<std::vector<double>>();
  m.q = j.at("q").get<double>();
  m.delta = j.value("delta", 4.0 * m.q);
  const auto& g = j.at("grid");
  m.grid.nx = g.at("nx").get<int>();
  m.grid.ny = g.at("ny").is_string() ? 0 : g.at("ny").get<int>();
  m.grid.Lx = g.at("Lx").get<double>();
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    m.solver.theta = s.value("theta", m.solver.theta);
    m.solver.max_iters = s.value("max_iters", m.solver.max_iters);
    m.solver.tol = s.value("tol", m.solver.tol);
    m.solver.steiner_every = s.value("steiner_every", m.solver.steiner_every);
    m.solver.phase1_steps = s.value("phase1_steps", m.solver.phase1_steps);
    m.solver.support_threshold = s.value("support_threshold", m.solver.support_threshold);
  }
  m.ps = j.value("ps", m.ps);
  m.norms = j.value("norms", m.norms);
  m.seed = j.value("seed", std::uint64_t{0});
  m.tool_version = j.value("tool_version", std::string(kToolVersion));
  m.git_hash = j.value("git_hash", std::string(EQUIL_GIT_HASH));
  m.validate();
  return m;
}

/// The norm battery: W^{s,p} on the scan grid (plus s = 0.5, 1, 1.4 at p = 2),
/// ||w||_1, ||grad^k w||_inf for k <= 2, C^{0,0.5}, C^{0,0.9}, C^{1,0.5} and
/// the Plancherel H^s cross-check.
inline std::vector<NormSpec> norm_battery(double q, const std::vector<double>& ps) {
  std::vector<NormSpec> out;
  std::set<std::string> seen;
  auto add = [&](NormSpec n) {
    if (seen.insert(n.key()).second) out.push_back(n);
  };
  for (double p : ps) {
    auto grid = default_s_grid(p, q);
    if (p == 2.0)
      for (double s : {0.5, 1.0, 1.4}) grid.push_back(s);
    std::sort(grid.begin(), grid.end());
    for (double s : grid) add({NormKind::Wsp_gagliardo, s, p, 0});
  }
  add({NormKind::Lp, 0.0, 1.0, 0});
  for (int k = 0; k <= 2; ++k) add({NormKind::DerivSup, 0.0, 2.0, k});
  add({NormKind::Holder, 0.5, 2.0, 0});
  add({NormKind::Holder, 0.9, 2.0, 0});
  add({NormKind::Holder, 0.5, 2.0, 1});
  for (double s : {0.5, 1.0, 1.4}) add({NormKind::Hs_fourier, s, 2.0, 0});
  return out;
}

/// Everything recorded for one eps.
struct RunRecord {
  double eps = 0.0;
  int nx = 0, ny = 0;
  bool ok = false;  ///< maximize returned a converged state
  std::string error;
  SolveReport report;
  double alpha_ratio = 0.0;     ///< alpha / (eps^2 |ln eps|)
  double claim_ratio = 0.0;     ///< int (w F' - 2F) / eps^2
  double trial_energy = 0.0;    ///< energy of the mass-projected trial ellipse
  double transport_res = 0.0;
  EnergyIdentityStats identity;
  std::size_t layer_violations = 0;
  std::map<std::string, double> norms;
  std::size_t norm_warnings = 0;
};

struct SweepResult {
  RunManifest manifest;
  std::vector<RunRecord> runs;
  std::vector<ScalingFit> fits;
  std::optional<ThresholdWitness> witness;
  int exit_code = 0;  ///< 0 all converged, 2 partial, 1 nothing usable
};

namespace detail {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline RunRecord run_one(const RunManifest& m, double eps, NormCalculator*& calc_out,
                         std::unique_ptr<NormCalculator>& calc_store) {
  RunRecord r;
  r.eps = eps;
  const ChannelGrid g = m.grid_for(eps);
  r.nx = g.nx();
  r.ny = g.ny();
  const double c = m.mode == RunMode::traveling ? m.c : 0.0;
  const auto spec = AdmissibleSpec::make(eps, m.q, c);
  const PenaltyFamily fam(eps, m.q);
  try {
    // The maximizer's starting point: the trial ellipse projected onto the
    // mass slice (a no-op up to discretization on resolved grids).
    const Field trial = detail::project_active_mass(
        trial_ellipse(spec, fam, g, {.clip_to_box = true, .check_resolution = false}), spec);
    r.trial_energy = energy(trial, spec, fam).total;
    r.report = maximize(spec, fam, g, m.solver);
    r.ok = r.report.converged;
    if (!r.ok) r.error = "not converged";
  } catch (const std::exception& e) {
    r.error = e.what();
    return r;
  }
  const auto& rep = r.report;
  const auto md = multiplier_diagnostics(rep, fam);
  r.alpha_ratio = md.alpha_over_eps2L;
  r.claim_ratio = md.claim_integral_over_eps2;
  r.transport_res = transport_residual(rep.omega, rep.psi, c);
  // Physical state w = -omega*; its layer speed is -c in F_x = y + c_r + u^x.
  const Field w = -1.0 * rep.omega;
  const auto sol = solve_poisson(w);
  r.identity = energy_identity_stats(w, sol, -c);
  const auto layer = critical_layer(sol.ux, -c);
  if (layer.monotone_ok) r.layer_violations = layer_lower_bound(layer, sol.ux).violations;
  if (m.norms) {
    calc_store = std::make_unique<NormCalculator>(rep.omega);
    auto& calc = *calc_store;
    for (int k = 0; k <= 2; ++k) calc.prepare(k, m.ps);
    for (const auto& spec_n : norm_battery(m.q, m.ps)) {
      const auto nr = calc.evaluate(spec_n);
      r.norms[spec_n.key()] = nr.value;
      if (nr.method_notes.find("warning") != std::string::npos) ++r.norm_warnings;
    }
    calc_out = calc_store.get();
  }
  return r;
}

inline ScalingFit safe_fit(const std::vector<double>& xs, const std::vector<double>& ys, double pred, double tol,
                           const std::string& name) {
  try {
    return fit_loglog(xs, ys, pred, tol, name);
  } catch (const std::exception&) {
    ScalingFit f;
    f.quantity = name;
    f.slope = f.intercept = f.r2 = std::nan("");
    f.predicted = pred;
    f.tol = tol;
    f.n = xs.size();
    f.pass = false;
    return f;
  }
}

}  // namespace detail

/// Runs the sweep in memory. Entries run on a worker pool (EQUIL_THREADS);
/// aggregation happens after all workers finish.
inline SweepResult run_sweep(const RunManifest& m) {
  m.validate();
  SweepResult out;
  out.manifest = m;
  const std::size_t n = m.eps_list.size();
  out.runs.resize(n);
  std::vector<std::unique_ptr<NormCalculator>> calcs(n);
  std::vector<NormCalculator*> calc_ptr(n, nullptr);
  std::atomic<std::size_t> next{0};
  const unsigned workers = std::min<unsigned>(thread_count(), static_cast<unsigned>(n));
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < n;)
      out.runs[k] = detail::run_one(m, m.eps_list[k], calc_ptr[k], calcs[k]);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  std::vector<double> xs;
  std::vector<const RunRecord*> good;
  std::vector<NormCalculator> good_calcs;
  for (std::size_t k = 0; k < n; ++k)
    if (out.runs[k].ok) {
      xs.push_back(out.runs[k].eps);
      good.push_back(&out.runs[k]);
    }
  if (good.empty()) {
    out.exit_code = 1;
    return out;
  }
  out.exit_code = good.size() == n ? 0 : 2;
  if (good.size() < 3) return out;

  const double q = m.q;
  auto series = [&](auto get) {
    std::vector<double> ys;
    for (auto* r : good) ys.push_back(get(*r));
    return ys;
  };
  auto add = [&](const std::string& name, std::vector<double> ys, double pred, double tol) {
    out.fits.push_back(detail::safe_fit(xs, ys, pred, tol, name));
  };
  add("supp_y", series([](const RunRecord& r) { return r.report.supp_y_halfwidth; }), 1.0, 0.2);
  // supp_x ~ 1 / |ln eps| has local log-log slope 1 / |ln eps|.
  add("supp_x", series([](const RunRecord& r) { return r.report.supp_x_halfwidth; }),
      1.0 / std::abs(std::log(xs[xs.size() / 2])), 0.3);
  add("alpha", series([](const RunRecord& r) { return r.report.alpha; }), 2.0, 0.3);
  add("mass", series([](const RunRecord& r) { return r.report.mass; }), 2.0, 0.05);
  if (m.norms) {
    for (const auto& spec_n : norm_battery(q, m.ps)) {
      const auto key = spec_n.key();
      double pred = 0.0, tol = 0.15;
      switch (spec_n.kind) {
        case NormKind::Lp: pred = 2.0; tol = 0.2; break;
        case NormKind::DerivSup:
          pred = 1.0 - 2.0 * q - spec_n.k;
          tol = spec_n.k == 0 ? 0.2 : 0.3;
          break;
        case NormKind::Holder:
          pred = spec_n.k == 0 ? 1.0 - 2.0 * q - spec_n.s : -spec_n.s - 2.0 * q;
          tol = 0.3;
          break;
        default: pred = predicted_sobolev_slope(spec_n.s, spec_n.p, q); break;
      }
      add("norm:" + key, series([&](const RunRecord& r) { return r.norms.at(key); }), pred, tol);
    }
    for (std::size_t k = 0; k < n; ++k)
      if (out.runs[k].ok) good_calcs.push_back(std::move(*calcs[k]));
    out.witness = threshold_witness(xs, good_calcs, q, m.ps);
  }
  return out;
}

inline const ScalingFit* find_fit(const SweepResult& r, const std::string& quantity) {
  for (const auto& f : r.fits)
    if (f.quantity == quantity) return &f;
  return nullptr;
}

/// results.csv: one row per eps; norm columns are norm:<kind:s:p[:k]>.
inline std::string results_csv(const SweepResult& r) {
  std::set<std::string> keys;
  for (const auto& run : r.runs)
    for (const auto& [k, v] : run.norms) keys.insert(k);
  std::ostringstream os;
  os << "eps,nx,ny,converged,energy_e1,energy_e2,energy_e3,energy,trial_energy,alpha,mass,max_amp,supp_x,supp_y,"
        "supp_xc,supp_yc,el_res,el_viol,iterations,final_change,alpha_ratio,claim_ratio,transport_res,"
        "eid_lhs,eid_rhs_direct,eid_rhs_weighted,eid_ratio,monotone_ok,layer_violations,norm_warnings";
  for (const auto& k : keys) os << ",norm:" << k;
  os << '\n';
  using detail::num;
  for (const auto& run : r.runs) {
    const auto& rep = run.report;
    os << num(run.eps) << ',' << run.nx << ',' << run.ny << ',' << (run.ok ? 1 : 0) << ',' << num(rep.energy.e1)
       << ',' << num(rep.energy.e2) << ',' << num(rep.energy.e3) << ',' << num(rep.energy.total) << ','
       << num(run.trial_energy) << ',' << num(rep.alpha) << ',' << num(rep.mass) << ',' << num(rep.max_amp) << ','
       << num(rep.supp_x_halfwidth) << ',' << num(rep.supp_y_halfwidth) << ',' << num(rep.support.x_center) << ','
       << num(rep.support.y_center) << ',' << num(rep.el_residual_on_supp) << ',' << num(rep.el_violation_off_supp)
       << ',' << rep.iterations << ',' << num(rep.final_change) << ',' << num(run.alpha_ratio) << ','
       << num(run.claim_ratio) << ',' << num(run.transport_res) << ',' << num(run.identity.lhs) << ','
       << num(run.identity.rhs_direct) << ',' << num(run.identity.rhs_weighted) << ','
       << num(run.identity.ratio.value_or(std::nan(""))) << ',' << (run.identity.monotone_ok ? 1 : 0) << ','
       << run.layer_violations << ',' << run.norm_warnings;
    for (const auto& k : keys) {
      auto it = run.norms.find(k);
      os << ',' << (it == run.norms.end() ? std::string("nan") : num(it->second));
    }
    os << '\n';
  }
  return os.str();
}

inline std::string fits_csv(const SweepResult& r) {
  std::ostringstream os;
  os << "quantity,slope,intercept,r2,predicted,tol,n,pass\n";
  using detail::num;
  for (const auto& f : r.fits)
    os << f.quantity << ',' << num(f.slope) << ',' << num(f.intercept) << ',' << num(f.r2) << ',' << num(f.predicted)
       << ',' << num(f.tol) << ',' << f.n << ',' << (f.pass ? 1 : 0) << '\n';
  return os.str();
}

/// witness.csv: zero crossing s0(p) of the W^{s,p} slope and its window
/// [1 + 1/p - 2q - 0.2, 1 + 1/p + 0.1].
inline std::string witness_csv(const SweepResult& r) {
  std::ostringstream os;
  os << "p,s0,lo,hi,pass,low_confidence\n";
  if (!r.witness) return os.str();
  const double q = r.manifest.q;
  for (const auto& [p, s0] : r.witness->s0) {
    const double lo = 1.0 + 1.0 / p - 2.0 * q - 0.2, hi = 1.0 + 1.0 / p + 0.1;
    const bool pass = s0 && *s0 >= lo && *s0 <= hi;
    os << detail::num(p) << ',' << detail::num(s0.value_or(std::nan(""))) << ',' << detail::num(lo) << ','
       << detail::num(hi) << ',' << (pass ? 1 : 0) << ',' << (r.witness->low_confidence ? 1 : 0) << '\n';
  }
  return os.str();
}

/// Log-log scatter with the fitted line.
inline std::string loglog_svg(const std::string& title, const std::vector<double>& xs, const std::vector<double>& ys,
                              const ScalingFit& fit) {
  constexpr double W = 480, H = 360, pad = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (!(xs[k] > 0.0 && ys[k] > 0.0)) continue;
    const double lx = std::log10(xs[k]), ly = std::log10(ys[k]);
    pts.emplace_back(lx, ly);
    x0 = std::min(x0, lx);
    x1 = std::max(x1, lx);
    y0 = std::min(y0, ly);
    y1 = std::max(y1, ly);
  }
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << title << "</text>\n";
  if (pts.empty()) {
    os << "</svg>\n";
    return os.str();
  }
  if (x1 - x0 < 1e-12) x1 = x0 + 1.0;
  if (y1 - y0 < 1e-12) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double my = 0.1 * (y1 - y0);
  y0 -= my;
  y1 += my;
  auto X = [&](double lx) { return pad + (lx - x0) / (x1 - x0) * (W - 2 * pad); };
  auto Y = [&](double ly) { return H - pad - (ly - y0) / (y1 - y0) * (H - 2 * pad); };
  os << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad
     << "\" stroke=\"black\"/>\n<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\""
     << H - pad << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">log10 eps</text>\n";
  for (auto [lx, ly] : pts)
    os << "<circle cx=\"" << X(lx) << "\" cy=\"" << Y(ly) << "\" r=\"4\" fill=\"steelblue\"/>\n";
  if (std::isfinite(fit.slope)) {
    const double ln10 = std::log(10.0);
    auto line = [&](double lx) { return (fit.intercept + fit.slope * lx * ln10) / ln10; };
    os << "<line x1=\"" << X(x0) << "\" y1=\"" << Y(line(x0)) << "\" x2=\"" << X(x1) << "\" y2=\"" << Y(line(x1))
       << "\" stroke=\"firebrick\"/>\n";
  }
  os << "<text x=\"" << pad + 8 << "\" y=\"" << pad + 12 << "\" font-size=\"12\">slope " << detail::num(fit.slope)
     << " (predicted " << fit.predicted << " +- " << fit.tol << ")</text>\n</svg>\n";
  return os.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << s;
}

/// Writes all outputs of a sweep below dir.
inline void write_outputs(const SweepResult& r, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "fields");
  fs::create_directories(dir / "plots");
  write_text(dir / "results.csv", results_csv(r));
  write_text(dir / "fits.csv", fits_csv(r));
  write_text(dir / "witness.csv", witness_csv(r));
  write_text(dir / "manifest.json", to_json(r.manifest).dump(2) + "\n");
  for (const auto& run : r.runs) {
    if (run.report.omega.size() == 0) continue;
    char tag[32];
    std::snprintf(tag, sizeof tag, "eps%.4g", run.eps);
    write_field((dir / "fields" / (std::string("omega_") + tag + ".bin")).string(), run.report.omega);
    write_field((dir / "fields" / (std::string("psi_") + tag + ".bin")).string(), run.report.psi);
  }
  std::vector<double> xs;
  for (const auto& run : r.runs)
    if (run.ok) xs.push_back(run.eps);
  for (const auto& f : r.fits) {
    std::vector<double> ys;
    for (const auto& run : r.runs) {
      if (!run.ok) continue;
      if (f.quantity == "supp_y") ys.push_back(run.report.supp_y_halfwidth);
      else if (f.quantity == "supp_x") ys.push_back(run.report.supp_x_halfwidth);
      else if (f.quantity == "alpha") ys.push_back(run.report.alpha);
      else if (f.quantity == "mass") ys.push_back(run.report.mass);
      else if (f.quantity.rfind("norm:", 0) == 0) ys.push_back(run.norms.at(f.quantity.substr(5)));
    }
    std::string file = f.quantity;
    for (char& ch : file)
      if (ch == ':' || ch == '/') ch = '_';
    write_text(dir / "plots" / (file + ".svg"), loglog_svg(f.quantity, xs, ys, f));
  }
}

}  // namespace equil

#endif  // EQUIL_STUDIES_HPP
