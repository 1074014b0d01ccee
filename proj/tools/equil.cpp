#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include "equil/studies.hpp"

using namespace equil;

namespace {

GridParams parse_grid(const std::string& s, double Lx) {
  static const std::regex re(R"((\d+)x(\d+|auto))");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw ContractError("--grid must look like 513x129 or 513xauto");
  GridParams g;
  g.nx = std::stoi(m[1]);
  g.ny = m[2] == "auto" ? 0 : std::stoi(m[2]);
  g.Lx = Lx;
  return g;
}

// One spec per line: kind,s,p[,k]; p may be "inf". Blank lines and lines
// starting with # are skipped.
std::vector<NormSpec> read_specs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<NormSpec> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string kind, s, p, k;
    std::getline(ss, kind, ',');
    std::getline(ss, s, ',');
    std::getline(ss, p, ',');
    std::getline(ss, k, ',');
    if (kind == "kind") continue;
    NormSpec n;
    n.kind = parse_norm_kind(kind);
    n.s = std::stod(s);
    n.p = p == "inf" ? std::numeric_limits<double>::infinity() : std::stod(p);
    n.k = k.empty() ? 0 : std::stoi(k);
    out.push_back(n);
  }
  return out;
}

int cmd_run(const RunManifest& m, const std::string& out) {
  const auto r = run_sweep(m);
  write_outputs(r, out);
  for (const auto& run : r.runs)
    std::cout << "eps " << run.eps << " (" << run.nx << "x" << run.ny << "): "
              << (run.ok ? "converged" : "FAILED " + run.error) << ", energy " << run.report.energy.total
              << ", alpha " << run.report.alpha << ", supp " << run.report.supp_x_halfwidth << " x "
              << run.report.supp_y_halfwidth << "\n";
  std::size_t pass = 0;
  for (const auto& f : r.fits) pass += f.pass;
  std::cout << "fits passing: " << pass << "/" << r.fits.size() << "; outputs in " << out << "\n";
  return r.exit_code;
}

int cmd_norms(const std::string& field, const std::string& specs) {
  NormCalculator calc(read_field(field));
  std::cout << "spec,value,notes\n";
  for (const auto& n : read_specs(specs)) {
    const auto rep = calc.evaluate(n);
    std::cout << n.key() << ',' << detail::num(rep.value) << ",\"" << rep.method_notes << "\"\n";
  }
  return 0;
}

int cmd_rigidity(const std::string& field, double c) {
  // Stored fields are maximizers omega*; the physical vorticity is -omega*
  // and its layer speed is -c.
  const Field w = -1.0 * read_field(field);
  const auto sol = solve_poisson(w);
  const auto layer = critical_layer(sol.ux, -c);
  const auto st = energy_identity_stats(w, sol, -c);
  std::size_t interior = 0, low = 0, high = 0;
  double worst_root = 0.0;
  for (std::size_t i = 0; i < layer.ystar.size(); ++i) {
    switch (layer.regime[i]) {
      case LayerRegime::interior_root: ++interior; break;
      case LayerRegime::clamped_low: ++low; break;
      case LayerRegime::clamped_high: ++high; break;
    }
    worst_root = std::max(worst_root, layer.root_residual[i]);
  }
  const auto bound = layer_lower_bound(layer, sol.ux);
  std::cout << "columns interior/clamped-low/clamped-high: " << interior << '/' << low << '/' << high << "\n"
            << "max |d_y u^x|: " << layer.max_dy_ux << " (monotone_ok " << layer.monotone_ok << ")\n"
            << "max root residual: " << worst_root << "\n"
            << "lower-bound violations: " << bound.violations << " (worst margin " << bound.worst_margin << ")\n"
            << "lhs ||grad u^y||^2: " << st.lhs << "\n"
            << "rhs direct: " << st.rhs_direct << " (rel. error " << st.identity_error << ")\n"
            << "rhs weighted: " << st.rhs_weighted << " (half floor " << st.rhs_weighted_half_floor << ")\n"
            << "ratio: " << (st.ratio ? std::to_string(*st.ratio) : std::string("undefined")) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady states and traveling waves near Couette flow"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "eps-sweep: maximize, diagnostics, norm battery, fits");
  std::string mode = "steady", grid = "513xauto", out = "out", manifest_path;
  double c = 0.0, q = 0.05, Lx = 8.0;
  std::vector<double> eps = {0.1, 0.05, 0.025};
  std::vector<double> ps = {1.0, 2.0, 4.0};
  int max_iters = 5000;
  bool no_norms = false;
  run->add_option("--mode", mode, "steady or traveling")->check(CLI::IsMember({"steady", "traveling"}));
  run->add_option("-c", c, "traveling speed");
  run->add_option("--eps", eps, "decreasing eps list")->delimiter(',');
  run->add_option("--q", q, "penalty exponent q (delta = 4q)");
  run->add_option("--grid", grid, "NXxNY or NXxauto (hy <= eps/6)");
  run->add_option("--Lx", Lx, "box half-length");
  run->add_option("--p", ps, "norm exponents")->delimiter(',');
  run->add_option("--max-iters", max_iters, "fixed-point iteration cap");
  run->add_flag("--no-norms", no_norms, "skip the norm battery");
  run->add_option("--manifest", manifest_path, "rerun from a manifest.json (other options ignored)");
  run->add_option("--out", out, "output directory");

  auto* norms = app.add_subcommand("norms", "norms of a stored field");
  std::string field, specs;
  norms->add_option("--field", field, "field binary")->required();
  norms->add_option("--spec", specs, "CSV of kind,s,p[,k]")->required();

  auto* rig = app.add_subcommand("rigidity", "critical layer and energy identity of a stored maximizer");
  double rc = 0.0;
  rig->add_option("--field", field, "field binary")->required();
  rig->add_option("-c", rc, "traveling speed of the stored state");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) {
      RunManifest m;
      if (!manifest_path.empty()) {
        std::ifstream in(manifest_path);
        if (!in) throw std::runtime_error("cannot open " + manifest_path);
        m = manifest_from_json(nlohmann::json::parse(in));
      } else {
        m.mode = parse_run_mode(mode);
        m.c = c;
        m.eps_list = eps;
        m.q = q;
        m.delta = 4.0 * q;
        m.grid = parse_grid(grid, Lx);
        m.ps = ps;
        m.norms = !no_norms;
        m.solver.max_iters = max_iters;
        m.validate();
      }
      return cmd_run(m, out);
    }
    if (*norms) return cmd_norms(field, specs);
    if (*rig) return cmd_rigidity(field, rc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
