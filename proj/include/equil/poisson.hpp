#ifndef EQUIL_POISSON_HPP
#define EQUIL_POISSON_HPP

// Fast solver for -Lap_h psi = omega on the truncated channel with psi = 0 on
// y = +-1. Lap_h is spectral in x (periodic box of length 2 Lx) and the
// 3-point second difference in y, so each x-mode needs one tridiagonal solve.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "grid.hpp"

namespace equil {

struct PoissonSolution {
  Field psi;
  Field ux;  ///< d psi / dy
  Field uy;  ///< -d psi / dx
  double residual_l2 = 0.0;
  std::string warning;  ///< non-empty when the source reaches the x-truncation margin
};

namespace detail {

// FFTW plans keyed on (nx, ny). The planner is not thread safe; execution
// with the new-array interface is.
struct FftPlans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  ~FftPlans() {
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline const FftPlans& fft_plans(int nx, int ny) {
  static std::map<std::pair<int, int>, std::unique_ptr<FftPlans>> cache;
  std::lock_guard lock(fftw_planner_mutex());
  auto& slot = cache[{nx, ny}];
  if (!slot) {
    slot = std::make_unique<FftPlans>();
    const int nmodes = nx / 2 + 1;
    std::vector<double> real(static_cast<std::size_t>(nx) * ny);
    std::vector<fftw_complex> spec(static_cast<std::size_t>(nmodes) * ny);
    int n[] = {nx};
    // Transform along x for each of the ny rows; x-major storage means stride ny.
    slot->forward = fftw_plan_many_dft_r2c(1, n, ny, real.data(), nullptr, ny, 1, spec.data(), nullptr, ny, 1,
                                           FFTW_ESTIMATE | FFTW_UNALIGNED);
    slot->backward = fftw_plan_many_dft_c2r(1, n, ny, spec.data(), nullptr, ny, 1, real.data(), nullptr, ny, 1,
                                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  return *slot;
}

}  // namespace detail

class PoissonSolver {
 public:
  explicit PoissonSolver(const ChannelGrid& g) : grid_(g), plans_(&detail::fft_plans(g.nx(), g.ny())) {
    const int nmodes = g.nx() / 2 + 1;
    eig_x_.resize(nmodes);
    // nx is odd, so every retained mode is below Nyquist.
    for (int k = 0; k < nmodes; ++k) {
      const double xi = std::numbers::pi * k / g.Lx();
      eig_x_[k] = xi * xi;
    }
  }

  const ChannelGrid& grid() const { return grid_; }

  /// Stream function only.
  Field stream_function(const Field& omega) const {
    if (!(omega.grid() == grid_)) throw ContractError("PoissonSolver: grid mismatch");
    const int nx = grid_.nx();
    const int ny = grid_.ny();
    const int nmodes = nx / 2 + 1;

    std::vector<double> real(omega.values().begin(), omega.values().end());
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(nmodes) * ny);
    fftw_execute_dft_r2c(plans_->forward, real.data(), reinterpret_cast<fftw_complex*>(spec.data()));

    // Thomas algorithm per mode on rows 1..ny-2; coefficients are real.
    const double ay = 1.0 / (grid_.hy() * grid_.hy());
    const int m = ny - 2;
    std::vector<double> cprime(m);
    std::vector<std::complex<double>> dprime(m);
    for (int k = 0; k < nmodes; ++k) {
      auto* row = spec.data() + static_cast<std::size_t>(k) * ny;
      const double diag = 2.0 * ay + eig_x_[k];
      const double off = -ay;
      double denom = diag;
      cprime[0] = off / denom;
      dprime[0] = row[1] / denom;
      for (int r = 1; r < m; ++r) {
        denom = diag - off * cprime[r - 1];
        cprime[r] = off / denom;
        dprime[r] = (row[r + 1] - off * dprime[r - 1]) / denom;
      }
      row[m] = dprime[m - 1];
      for (int r = m - 2; r >= 0; --r) row[r + 1] = dprime[r] - cprime[r] * row[r + 2];
      row[0] = 0.0;
      row[ny - 1] = 0.0;
    }

    fftw_execute_dft_c2r(plans_->backward, reinterpret_cast<fftw_complex*>(spec.data()), real.data());
    const double scale = 1.0 / nx;
    for (auto& v : real) v *= scale;
    Field psi(grid_, std::move(real));
    for (int i = 0; i < nx; ++i) {
      psi(i, 0) = 0.0;
      psi(i, ny - 1) = 0.0;
    }
    return psi;
  }

  /// -Lap_h u on interior rows (zero on the Dirichlet rows).
  Field apply(const Field& u) const {
    if (!(u.grid() == grid_)) throw ContractError("PoissonSolver: grid mismatch");
    const int nx = grid_.nx();
    const int ny = grid_.ny();
    const int nmodes = nx / 2 + 1;
    std::vector<double> real(u.values().begin(), u.values().end());
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(nmodes) * ny);
    std::vector<std::complex<double>> out(spec.size());
    fftw_execute_dft_r2c(plans_->forward, real.data(), reinterpret_cast<fftw_complex*>(spec.data()));
    const double ay = 1.0 / (grid_.hy() * grid_.hy());
    for (int k = 0; k < nmodes; ++k) {
      const auto* row = spec.data() + static_cast<std::size_t>(k) * ny;
      auto* dst = out.data() + static_cast<std::size_t>(k) * ny;
      for (int j = 1; j < ny - 1; ++j) dst[j] = (2.0 * ay + eig_x_[k]) * row[j] - ay * (row[j + 1] + row[j - 1]);
    }
    fftw_execute_dft_c2r(plans_->backward, reinterpret_cast<fftw_complex*>(out.data()), real.data());
    Field res(grid_, std::move(real));
    res *= 1.0 / nx;
    for (int i = 0; i < nx; ++i) {
      res(i, 0) = 0.0;
      res(i, ny - 1) = 0.0;
    }
    return res;
  }

  PoissonSolution solve(const Field& omega) const {
    PoissonSolution sol;
    sol.psi = stream_function(omega);
    auto [dpx, dpy] = gradient(sol.psi);
    sol.ux = std::move(dpy);
    sol.uy = -1.0 * dpx;

    // Residual of the discrete system on interior rows.
    const Field lap = apply(sol.psi);
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < grid_.nx(); ++i)
      for (int j = 1; j < grid_.ny() - 1; ++j) {
        const double r = lap(i, j) - omega(i, j);
        num += r * r;
        den += omega(i, j) * omega(i, j);
      }
    sol.residual_l2 = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);

    const int margin = std::max(1, grid_.nx() / 10);
    for (int i = 0; i < grid_.nx() && sol.warning.empty(); ++i) {
      if (i >= margin && i < grid_.nx() - margin) continue;
      for (int j = 0; j < grid_.ny(); ++j)
        if (omega(i, j) != 0.0) {
          sol.warning = "source reaches the outer 10% of the x-truncation box; periodic images may matter";
          break;
        }
    }
    return sol;
  }

 private:
  ChannelGrid grid_;
  const detail::FftPlans* plans_;
  std::vector<double> eig_x_;
};

inline PoissonSolution solve_poisson(const Field& omega) { return PoissonSolver(omega.grid()).solve(omega); }

}  // namespace equil

#endif  // EQUIL_POISSON_HPP
