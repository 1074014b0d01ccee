#ifndef EQUIL_NORMS_HPP
#define EQUIL_NORMS_HPP

// Norms of grid fields: L^p, fractional Sobolev W^{s,p} via the Gagliardo
// double integral, a Plancherel H^s cross-check, Hoelder C^{k,a}, sup norms
// of derivatives, and mixed slice norms.
//
// With s = m + sigma (m integer, 0 <= sigma < 1),
//   ||f||_{W^{s,p}}^p = sum_{j<=m} ||grad^j f||_p^p + [grad^m f]_{sigma,p}^p,
//   [g]_{sigma,p}^p   = int int |g(z) - g(z')|^p / |z - z'|^{2 + sigma p},
// where grad^j f is the full tensor of j-th derivatives with the Frobenius
// norm. Distances are ambient distances in the channel.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "grid.hpp"
#include "parallel.hpp"
#include "poisson.hpp"

namespace equil {

enum class NormKind { Lp, Wsp_gagliardo, Hs_fourier, Holder, DerivSup };

inline std::string to_string(NormKind k) {
  switch (k) {
    case NormKind::Lp: return "Lp";
    case NormKind::Wsp_gagliardo: return "Wsp_gagliardo";
    case NormKind::Hs_fourier: return "Hs_fourier";
    case NormKind::Holder: return "Holder";
    case NormKind::DerivSup: return "DerivSup";
  }
  return "?";
}

inline NormKind parse_norm_kind(const std::string& s) {
  for (auto k : {NormKind::Lp, NormKind::Wsp_gagliardo, NormKind::Hs_fourier, NormKind::Holder, NormKind::DerivSup})
    if (to_string(k) == s) return k;
  throw ContractError("unknown norm kind '" + s + "'");
}

/// Lp: ||grad^k f||_p (s unused). Wsp_gagliardo / Hs_fourier: order s.
/// Holder: C^{k,s} with exponent s in [0, 1]. DerivSup: ||grad^k f||_inf.
struct NormSpec {
  NormKind kind = NormKind::Lp;
  double s = 0.0;
  double p = 2.0;
  int k = 0;

  std::string key() const {
    std::ostringstream os;
    os << to_string(kind) << ':' << s << ':';
    if (std::isinf(p)) os << "inf"; else os << p;
    if (kind == NormKind::Holder || kind == NormKind::DerivSup || kind == NormKind::Lp) os << ':' << k;
    return os.str();
  }
};

struct NormReport {
  NormSpec spec;
  double value = 0.0;
  std::string method_notes;
};

inline void validate(const NormSpec& n) {
  if (!(n.s >= 0.0) || !std::isfinite(n.s)) throw ContractError("norm: s must be finite and >= 0");
  if (!(n.p >= 1.0)) throw ContractError("norm: p must lie in [1, inf]");
  if (n.k < 0 || n.k > 3) throw ContractError("norm: derivative order k must lie in 0..3");
  if (n.kind == NormKind::Hs_fourier && n.p != 2.0) throw ContractError("norm: Hs_fourier requires p = 2");
  if (n.kind == NormKind::Holder && n.s > 1.0) throw ContractError("norm: Holder exponent must lie in [0, 1]");
  if ((n.kind == NormKind::Wsp_gagliardo || n.kind == NormKind::Hs_fourier) && n.s >= 4.0)
    throw ContractError("norm: Sobolev order must be below 4");
}

/// 2 int (1 - cos h_1) |h|^{-2-2 sigma} dh over R^2: the Fourier symbol of the
/// W^{sigma,2} Gagliardo seminorm is this constant times |xi|^{2 sigma}.
inline double gagliardo_symbol_constant(double sigma) {
  return 2.0 * std::numbers::pi * boost::math::tgamma(1.0 - sigma) /
         (sigma * std::pow(4.0, sigma) * boost::math::tgamma(1.0 + sigma));
}

namespace detail {

struct Component {
  Field values;
  double multiplicity;
};

// Components d_x^{m-a} d_y^a f, a = 0..m, with binomial multiplicities so
// that sum mult * c^2 is the squared Frobenius norm of the full tensor.
inline std::vector<Component> derivative_tensor(const Field& f, int m) {
  std::vector<Component> out;
  for (int a = 0; a <= m; ++a) {
    Field g = f;
    for (int r = 0; r < m - a; ++r) g = diff_x(g);
    for (int r = 0; r < a; ++r) g = diff_y(g);
    double mult = 1.0;
    for (int r = 1; r <= a; ++r) mult = mult * (m - r + 1) / r;
    out.push_back({std::move(g), mult});
  }
  return out;
}

inline Field frobenius(const std::vector<Component>& comps) {
  Field out(comps.front().values.grid());
  for (const auto& c : comps)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += c.multiplicity * c.values[k] * c.values[k];
  return out.map([](double v) { return std::sqrt(v); });
}

inline double pow_p(double d2, double p) {
  if (p == 2.0) return d2;
  if (p == 1.0) return std::sqrt(d2);
  if (p == 4.0) return d2 * d2;
  return std::pow(d2, 0.5 * p);
}

inline double lp_of(const Field& mag, double p) {
  if (std::isinf(p)) return mag.max_abs();
  const auto& g = mag.grid();
  double s = 0.0;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) s += g.weight(i, j) * pow_p(mag(i, j) * mag(i, j), p);
  return std::pow(s, 1.0 / p);
}

struct Window {
  int i0 = 0, i1 = -1, j0 = 0, j1 = -1;
  int wi() const { return i1 - i0 + 1; }
  int wj() const { return j1 - j0 + 1; }
  bool empty() const { return i1 < i0 || j1 < j0; }
};

// Support rectangle of f (|f| > rel * max|f|) dilated by a factor 3 about
// its centre plus one cell, clipped to the grid.
inline Window support_window(const Field& f, double rel = 1e-12) {
  const auto& g = f.grid();
  const double thr = rel * f.max_abs();
  Window w{g.nx(), -1, g.ny(), -1};
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j)
      if (std::abs(f(i, j)) > thr) {
        w.i0 = std::min(w.i0, i);
        w.i1 = std::max(w.i1, i);
        w.j0 = std::min(w.j0, j);
        w.j1 = std::max(w.j1, j);
      }
  if (w.empty()) return w;
  auto dilate = [](int a, int b, int n, int& lo, int& hi) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    lo = std::max(0, static_cast<int>(std::floor(c - 3.0 * h)) - 1);
    hi = std::min(n - 1, static_cast<int>(std::ceil(c + 3.0 * h)) + 1);
  };
  dilate(w.i0, w.i1, g.nx(), w.i0, w.i1);
  dilate(w.j0, w.j1, g.ny(), w.j0, w.j1);
  return w;
}

// Per-offset sums over pairs inside the window for one derivative order.
struct OffsetTable {
  std::vector<int> di, dj;
  std::map<double, std::vector<double>> sums;  // p -> sum |dg|^p per offset
  std::vector<double> max_d2;                  // per offset max |dg|^2
};

inline double pair_seminorm_from_table(const OffsetTable& t, double p, double sigma, double hx, double hy) {
  const auto& S = t.sums.at(p);
  const double expo = -(2.0 + sigma * p);
  double acc = 0.0;
  for (std::size_t k = 0; k < S.size(); ++k) {
    const double r = std::hypot(t.di[k] * hx, t.dj[k] * hy);
    acc += S[k] * std::pow(r, expo);
  }
  return 2.0 * hx * hy * hx * hy * acc;
}

}  // namespace detail

/// Computes norms of one field, caching derivative tensors and pair tables
/// across requests.
class NormCalculator {
 public:
  explicit NormCalculator(Field f) : f_(std::move(f)), window_(detail::support_window(f_)) {}

  const Field& field() const { return f_; }

  /// Builds pair tables for derivative order m and all exponents in ps in
  /// one pass (optional; evaluate() builds what it needs).
  void prepare(int m, std::vector<double> ps) {
    auto& t = tables_[m];
    std::vector<double> missing;
    for (double p : ps)
      if (!t.sums.count(p) && std::find(missing.begin(), missing.end(), p) == missing.end()) missing.push_back(p);
    if (missing.empty() && !t.di.empty()) return;
    build_table(m, missing, t);
  }

  NormReport evaluate(const NormSpec& spec, bool refinement_check = true) {
    validate(spec);
    NormReport rep;
    rep.spec = spec;
    NormSpec eff = spec;
    if (std::isinf(spec.p) && (spec.kind == NormKind::Wsp_gagliardo)) {
      eff.kind = NormKind::Holder;
      eff.k = static_cast<int>(std::floor(spec.s));
      eff.s = spec.s - eff.k;
      rep.method_notes += "p=inf routed to Holder C^{" + std::to_string(eff.k) + "," + fmt(eff.s) + "}; ";
    }
    if (f_.max_abs() == 0.0) {
      rep.value = 0.0;
      return rep;
    }
    rep.value = compute(eff, rep.method_notes);
    if (refinement_check && eff.kind != NormKind::Lp) {
      if (auto coarse = coarse_calculator()) {
        const double cv = coarse->compute(eff, scratch_);
        const double rel = std::abs(cv - rep.value) / std::max(rep.value, std::numeric_limits<double>::min());
        if (rel > 0.1) rep.method_notes += "warning: under-resolved (coarse/fine differ by " + fmt(100.0 * rel) + "%); ";
      } else {
        rep.method_notes += "refinement check skipped (grid not coarsenable); ";
      }
    }
    if (!std::isfinite(rep.value) || rep.value < 0.0) throw std::runtime_error("norm: non-finite result");
    return rep;
  }

  /// sqrt(2 Lx sum mult(|xi|) |a_xi|^2) for the expansion
  /// f = sum a e^{i xi_x x} sin(xi_y (y + 1)), xi_x = pi k / Lx, xi_y = pi m / 2.
  double fourier_multiplier_norm(const std::function<double(double)>& mult) const {
    const auto& g = f_.grid();
    const int nx = g.nx(), ny = g.ny(), n = ny - 2;
    std::vector<double> buf(f_.values().begin(), f_.values().end());
    for (int i = 0; i < nx; ++i) {
      buf[g.index(i, 0)] = 0.0;
      buf[g.index(i, ny - 1)] = 0.0;
    }
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      int len[] = {n};
      fftw_r2r_kind kind[] = {FFTW_RODFT00};
      fftw_plan plan = fftw_plan_many_r2r(1, len, nx, buf.data() + 1, nullptr, 1, ny, buf.data() + 1, nullptr, 1, ny,
                                          kind, FFTW_ESTIMATE | FFTW_UNALIGNED);
      fftw_execute(plan);
      fftw_destroy_plan(plan);
    }
    const int nmodes = nx / 2 + 1;
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(nmodes) * ny);
    fftw_execute_dft_r2c(detail::fft_plans(nx, ny).forward, buf.data(), reinterpret_cast<fftw_complex*>(spec.data()));
    const double norm = 1.0 / (static_cast<double>(nx) * (n + 1));
    double acc = 0.0;
    for (int k = 0; k < nmodes; ++k) {
      const double xk = std::numbers::pi * k / g.Lx();
      const double w = k == 0 ? 1.0 : 2.0;
      for (int m = 1; m <= n; ++m) {
        const double ym = 0.5 * std::numbers::pi * m;
        const double a = std::abs(spec[static_cast<std::size_t>(k) * ny + m]) * norm;
        acc += w * mult(std::hypot(xk, ym)) * a * a;
      }
    }
    return std::sqrt(2.0 * g.Lx() * acc);
  }

 private:
  static std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
  }

  const std::vector<detail::Component>& tensor(int m) {
    auto it = tensors_.find(m);
    if (it == tensors_.end()) it = tensors_.emplace(m, detail::derivative_tensor(f_, m)).first;
    return it->second;
  }

  double lp_derivative(int j, double p) { return detail::lp_of(detail::frobenius(tensor(j)), p); }

  double compute(const NormSpec& n, std::string& notes) {
    switch (n.kind) {
      case NormKind::Lp: return lp_derivative(n.k, n.p);
      case NormKind::DerivSup: return lp_derivative(n.k, std::numeric_limits<double>::infinity());
      case NormKind::Holder: return holder(n.k, n.s);
      case NormKind::Hs_fourier: return hs_fourier(n.s);
      case NormKind::Wsp_gagliardo: return gagliardo(n.s, n.p, notes);
    }
    return 0.0;
  }

  double hs_fourier(double s) const {
    const int m = static_cast<int>(std::floor(s));
    const double sigma = s - m;
    const double c = sigma > 0.0 ? gagliardo_symbol_constant(sigma) : 0.0;
    return fourier_multiplier_norm([&](double xi) {
      double v = 0.0, pw = 1.0;
      for (int j = 0; j <= m; ++j, pw *= xi * xi) v += pw;
      if (sigma > 0.0) v += c * std::pow(xi, 2.0 * s);
      return v;
    });
  }

  double holder(int k, double alpha) {
    double total = 0.0;
    for (int j = 0; j <= k; ++j) total += lp_derivative(j, std::numeric_limits<double>::infinity());
    if (alpha == 0.0 || window_.empty()) return total;
    prepare(k, {});
    const auto& t = tables_.at(k);
    const auto& g = f_.grid();
    double semi = 0.0;
    for (std::size_t o = 0; o < t.di.size(); ++o) {
      const double r = std::hypot(t.di[o] * g.hx(), t.dj[o] * g.hy());
      semi = std::max(semi, std::sqrt(t.max_d2[o]) / std::pow(r, alpha));
    }
    return total + semi;
  }

  double gagliardo(double s, double p, std::string& notes) {
    const int m = static_cast<int>(std::floor(s));
    const double sigma = s - m;
    double acc = 0.0;
    for (int j = 0; j <= m; ++j) acc += std::pow(lp_derivative(j, p), p);
    if (sigma > 0.0 && !window_.empty()) {
      prepare(m, {p});
      const auto& g = f_.grid();
      const double pairs = detail::pair_seminorm_from_table(tables_.at(m), p, sigma, g.hx(), g.hy());
      const double diag = diagonal_correction(m, p, sigma);
      const double tail = exterior_tail(m, p, sigma);
      acc += pairs + diag + tail;
      if (diag > 0.5 * (pairs + diag + tail)) notes += "diagonal correction dominates; ";
    }
    return std::pow(acc, 1.0 / p);
  }

  void build_table(int m, const std::vector<double>& ps, detail::OffsetTable& t) {
    const auto& comps = tensor(m);
    const auto& W = window_;
    if (W.empty()) return;
    const int wi = W.wi(), wj = W.wj(), nc = static_cast<int>(comps.size());
    // Window-local copy, component-interleaved for locality.
    std::vector<double> vals(static_cast<std::size_t>(wi) * wj * nc);
    std::vector<double> mult(nc);
    for (int c = 0; c < nc; ++c) mult[c] = comps[c].multiplicity;
    for (int i = 0; i < wi; ++i)
      for (int j = 0; j < wj; ++j)
        for (int c = 0; c < nc; ++c)
          vals[(static_cast<std::size_t>(i) * wj + j) * nc + c] = comps[c].values(W.i0 + i, W.j0 + j);

    const bool fresh = t.di.empty();
    if (fresh) {
      for (int di = 0; di < wi; ++di)
        for (int dj = (di == 0 ? 1 : -(wj - 1)); dj < wj; ++dj) {
          t.di.push_back(di);
          t.dj.push_back(dj);
        }
      t.max_d2.assign(t.di.size(), 0.0);
    }
    std::vector<std::vector<double>*> outs;
    for (double p : ps) {
      auto& v = t.sums[p];
      v.assign(t.di.size(), 0.0);
      outs.push_back(&v);
    }
    const std::size_t np = ps.size();
    parallel_blocks(t.di.size(), [&](std::size_t b, std::size_t e) {
      std::vector<double> local(np);
      for (std::size_t o = b; o < e; ++o) {
        const int di = t.di[o], dj = t.dj[o];
        std::fill(local.begin(), local.end(), 0.0);
        double mx = 0.0;
        const int jlo = std::max(0, -dj), jhi = std::min(wj, wj - dj);
        for (int i = 0; i + di < wi; ++i) {
          const double* a = vals.data() + static_cast<std::size_t>(i) * wj * nc;
          const double* bptr = vals.data() + static_cast<std::size_t>(i + di) * wj * nc;
          for (int j = jlo; j < jhi; ++j) {
            double d2 = 0.0;
            for (int c = 0; c < nc; ++c) {
              const double d = bptr[(j + dj) * nc + c] - a[j * nc + c];
              d2 += mult[c] * d * d;
            }
            if (d2 == 0.0) continue;
            mx = std::max(mx, d2);
            for (std::size_t q = 0; q < np; ++q) local[q] += detail::pow_p(d2, ps[q]);
          }
        }
        for (std::size_t q = 0; q < np; ++q) (*outs[q])[o] = local[q];
        if (fresh) t.max_d2[o] = mx;
      }
    });
  }

  // sum over window nodes of hx hy * int_cell |J e|^p / |d|^{2 + sigma p},
  // J the gradient of grad^m f at the node; beta = p (1 - sigma).
  double diagonal_correction(int m, double p, double sigma) {
    const auto& comps = tensor(m);
    const auto& g = f_.grid();
    const double hx = g.hx(), hy = g.hy(), beta = p * (1.0 - sigma);
    // Angular nodes on [0, pi) split at the cell-corner angle; the integrand
    // is pi-periodic, so the full circle is twice this.
    using GL = boost::math::quadrature::gauss<double, 20>;
    const double pc = std::atan2(hy, hx);
    struct Node {
      double c, s, w;
    };
    std::vector<Node> nodes;
    auto add_sector = [&](double a, double b, bool vertical_edge) {
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      for (std::size_t k = 0; k < GL::abscissa().size(); ++k) {
        for (int sgn : {-1, 1}) {
          if (k == 0 && sgn == -1 && GL::abscissa()[0] == 0.0) continue;
          const double phi = mid + sgn * half * GL::abscissa()[k];
          const double c = std::cos(phi), s = std::sin(phi);
          const double R = vertical_edge ? 0.5 * hx / std::abs(c) : 0.5 * hy / std::abs(s);
          nodes.push_back({c, s, 2.0 * half * GL::weights()[k] * std::pow(R, beta) / beta});
        }
      }
    };
    add_sector(-pc, pc, true);
    add_sector(pc, std::numbers::pi - pc, false);
    std::vector<std::pair<Field, Field>> grads;
    for (const auto& c : comps) grads.emplace_back(diff_x(c.values), diff_y(c.values));
    double acc = 0.0;
    const auto& W = window_;
    for (int i = W.i0; i <= W.i1; ++i)
      for (int j = W.j0; j <= W.j1; ++j) {
        double a11 = 0, a12 = 0, a22 = 0;
        for (std::size_t c = 0; c < comps.size(); ++c) {
          const double gx = grads[c].first(i, j), gy = grads[c].second(i, j), mu = comps[c].multiplicity;
          a11 += mu * gx * gx;
          a12 += mu * gx * gy;
          a22 += mu * gy * gy;
        }
        if (a11 == 0.0 && a22 == 0.0) continue;
        double s = 0.0;
        for (const auto& nd : nodes) {
          const double q = a11 * nd.c * nd.c + 2.0 * a12 * nd.c * nd.s + a22 * nd.s * nd.s;
          s += nd.w * detail::pow_p(std::max(q, 0.0), p);
        }
        acc += 2.0 * s;
      }
    return acc * hx * hy;
  }

  // 2 int_W |g|^p int_{channel \ W} |z - z'|^{-2 - sigma p} dz'.
  double exterior_tail(int m, double p, double sigma) {
    const Field mag = detail::frobenius(tensor(m));
    const auto& g = f_.grid();
    const auto& W = window_;
    const double xl = g.x(W.i0) - 0.5 * g.hx(), xr = g.x(W.i1) + 0.5 * g.hx();
    const double yb = std::max(-1.0, g.y(W.j0) - 0.5 * g.hy()), yt = std::min(1.0, g.y(W.j1) + 0.5 * g.hy());
    const double sp = sigma * p;
    constexpr int nang = 512;
    std::vector<double> cs(nang), sn(nang);
    for (int k = 0; k < nang; ++k) {
      const double phi = 2.0 * std::numbers::pi * (k + 0.5) / nang;
      cs[k] = std::cos(phi);
      sn[k] = std::sin(phi);
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (int i = W.i0; i <= W.i1; ++i)
      for (int j = W.j0; j <= W.j1; ++j) {
        const double v = mag(i, j);
        if (v == 0.0) continue;
        const double x = g.x(i), y = g.y(j);
        double s = 0.0;
        for (int k = 0; k < nang; ++k) {
          const double c = cs[k], n = sn[k];
          const double tx = c > 0 ? (xr - x) / c : (c < 0 ? (xl - x) / c : inf);
          const double ty = n > 0 ? (yt - y) / n : (n < 0 ? (yb - y) / n : inf);
          const double rw = std::min(tx, ty);
          const double rom = n > 0 ? (1.0 - y) / n : (n < 0 ? (-1.0 - y) / n : inf);
          if (rw >= rom) continue;
          s += std::pow(rw, -sp) - (std::isinf(rom) ? 0.0 : std::pow(rom, -sp));
        }
        acc += detail::pow_p(v * v, p) * s * (2.0 * std::numbers::pi / nang) / sp;
      }
    return 2.0 * acc * g.hx() * g.hy();
  }

  NormCalculator* coarse_calculator() {
    if (coarse_tried_) return coarse_.get();
    coarse_tried_ = true;
    const auto& g = f_.grid();
    const int nx = (g.nx() + 1) / 2, ny = (g.ny() + 1) / 2;
    if (nx % 2 == 0 || ny % 2 == 0 || nx < 5 || ny < 5) return nullptr;
    // Every other node; x = 0 and the walls stay nodes.
    const ChannelGrid cg(nx, ny, nx * g.hx());
    Field c(cg);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) c(i, j) = f_(2 * i, 2 * j);
    coarse_ = std::make_unique<NormCalculator>(std::move(c));
    return coarse_.get();
  }

  Field f_;
  detail::Window window_;
  std::map<int, std::vector<detail::Component>> tensors_;
  std::map<int, detail::OffsetTable> tables_;
  std::unique_ptr<NormCalculator> coarse_;
  bool coarse_tried_ = false;
  std::string scratch_;
};

inline NormReport norm(const Field& f, const NormSpec& spec) { return NormCalculator(f).evaluate(spec); }

namespace detail {

// 1D W^{s,p} norm^p of samples v (spacing h) on an interval. The domain
// extends dom_lo / dom_hi beyond the first / last sample centre (may be
// infinite); v is zero outside the samples.
inline double slice_norm_p(const std::vector<double>& v, double h, double s, double p, double dom_lo, double dom_hi) {
  const int n = static_cast<int>(v.size());
  const int m = static_cast<int>(std::floor(s));
  const double sigma = s - m;
  auto deriv = [&](const std::vector<double>& u) {
    std::vector<double> d(u.size());
    diff_line(u.data(), 1, static_cast<int>(u.size()), h, d.data());
    return d;
  };
  std::vector<double> g = v;
  double acc = 0.0;
  for (int j = 0; j <= m; ++j) {
    if (j > 0) g = deriv(g);
    double t = 0.0;
    for (double x : g) t += pow_p(x * x, p);
    acc += h * t;
  }
  if (sigma == 0.0) return acc;
  int lo = n, hi = -1;
  for (int k = 0; k < n; ++k)
    if (g[k] != 0.0) {
      lo = std::min(lo, k);
      hi = std::max(hi, k);
    }
  if (hi < lo) return acc;
  const double c = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
  const int a = std::max(0, static_cast<int>(std::floor(c - 3.0 * hw)) - 1);
  const int b = std::min(n - 1, static_cast<int>(std::ceil(c + 3.0 * hw)) + 1);
  const double sp = sigma * p, beta = p * (1.0 - sigma);
  double pairs = 0.0;
  for (int d = 1; d <= b - a; ++d) {
    double S = 0.0;
    for (int k = a; k + d <= b; ++k) S += pow_p((g[k + d] - g[k]) * (g[k + d] - g[k]), p);
    pairs += S * std::pow(d * h, -(1.0 + sp));
  }
  pairs *= 2.0 * h * h;
  const auto dg = deriv(g);
  double diag = 0.0, tail = 0.0;
  for (int k = a; k <= b; ++k) {
    diag += 2.0 * pow_p(dg[k] * dg[k], p) * std::pow(0.5 * h, beta) / beta;
    const double gp = pow_p(g[k] * g[k], p);
    if (gp == 0.0) continue;
    const double rl = (k - a + 0.5) * h, rr = (b - k + 0.5) * h;
    // Distance from sample k to the domain ends.
    const double Rl = std::isinf(dom_lo) ? dom_lo : k * h + dom_lo;
    const double Rr = std::isinf(dom_hi) ? dom_hi : (n - 1 - k) * h + dom_hi;
    auto piece = [&](double rw, double rd) {
      if (rw >= rd) return 0.0;
      return (std::pow(rw, -sp) - (std::isinf(rd) ? 0.0 : std::pow(rd, -sp))) / sp;
    };
    tail += gp * (piece(rl, Rl) + piece(rr, Rr));
  }
  return acc + pairs + h * diag + 2.0 * h * tail;
}

}  // namespace detail

/// Slice norms ||f||_{L^p_x W^{s,p}_y} and ||f||_{L^p_y W^{s,p}_x}.
struct SliceNorms {
  double x_of_y = 0.0;  ///< L^p in x of the W^{s,p}(-1, 1) norms of columns
  double y_of_x = 0.0;  ///< L^p in y of the W^{s,p}(R) norms of rows
  double full = 0.0;    ///< ||f||_{W^{s,p}(channel)}
  double ratio = 0.0;
};

inline SliceNorms slice_norms(const Field& f, double s, double p) {
  const auto& g = f.grid();
  SliceNorms out;
  if (f.max_abs() == 0.0) return out;
  constexpr double inf = std::numeric_limits<double>::infinity();
  double cols = 0.0;
  std::vector<double> col(g.ny());
  for (int i = 0; i < g.nx(); ++i) {
    bool any = false;
    for (int j = 0; j < g.ny(); ++j) any |= (col[j] = f(i, j)) != 0.0;
    if (any) cols += g.hx() * detail::slice_norm_p(col, g.hy(), s, p, 0.0, 0.0);
  }
  double rows = 0.0;
  std::vector<double> row(g.nx());
  for (int j = 0; j < g.ny(); ++j) {
    bool any = false;
    for (int i = 0; i < g.nx(); ++i) any |= (row[i] = f(i, j)) != 0.0;
    if (any) rows += g.weight(0, j) / g.hx() * detail::slice_norm_p(row, g.hx(), s, p, inf, inf);
  }
  out.x_of_y = std::pow(cols, 1.0 / p);
  out.y_of_x = std::pow(rows, 1.0 / p);
  out.full = NormCalculator(f).evaluate({NormKind::Wsp_gagliardo, s, p, 0}, false).value;
  out.ratio = (out.x_of_y + out.y_of_x) / out.full;
  return out;
}

/// (||f||_{L^p_x W^{s,p}_y} + ||f||_{L^p_y W^{s,p}_x}) / ||f||_{W^{s,p}}; 0 for f = 0.
inline double slice_norm_check(const Field& f, double s, double p) { return slice_norms(f, s, p).ratio; }

}  // namespace equil

#endif  // EQUIL_NORMS_HPP
