#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "equil/studies.hpp"

using namespace equil;

namespace {

RunManifest small_manifest() {
  RunManifest m;
  m.eps_list = {0.3, 0.2, 0.15};
  m.grid = {65, 33, 4.0};
  m.ps = {2.0};
  m.solver.max_iters = 400;
  m.solver.tol = 1e-6;
  return m;
}

}  // namespace

TEST(FitLogLog, ExactPowerLaw) {
  const std::vector<double> xs = {0.1, 0.05, 0.025, 0.0125};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(x * x);
  const auto f = fit_loglog(xs, ys, 2.0, 0.01, "sq");
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_TRUE(f.pass);
}

TEST(FitLogLog, NoisyPowerLaw) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  const std::vector<double> xs = {0.1, 0.05, 0.025};
  for (int trial = 0; trial < 50; ++trial) {
    const double a = -1.0 + 0.1 * trial;
    std::vector<double> ys;
    for (double x : xs) ys.push_back(3.0 * std::pow(x, a) * (1.0 + noise(rng)));
    EXPECT_NEAR(fit_loglog(xs, ys, a, 0.05).slope, a, 0.05);
  }
}

TEST(FitLogLog, Contracts) {
  EXPECT_THROW(fit_loglog({0.1, 0.05}, {1.0, 2.0}, 0, 1), ContractError);
  EXPECT_THROW(fit_loglog({0.1, 0.05, 0.025}, {1.0, 0.0, 2.0}, 0, 1), std::domain_error);
  const auto f = fit_loglog({0.1, 0.05, 0.025}, {2.0, 2.0, 2.0}, 0.0, 0.1);
  EXPECT_EQ(f.slope, 0.0);
  EXPECT_TRUE(f.pass);
  const auto bad = fit_loglog({0.1, 0.05, 0.025}, {1.0, 3.0, 0.5}, 0.0, 10.0);
  EXPECT_LT(bad.r2, 0.9);
  EXPECT_FALSE(bad.pass);
}

TEST(Manifest, JsonRoundTrip) {
  RunManifest m = small_manifest();
  m.mode = RunMode::traveling;
  m.c = 0.5;
  m.seed = 42;
  const auto back = manifest_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(to_json(back), to_json(m));
  m.grid.ny = 0;
  EXPECT_EQ(manifest_from_json(to_json(m)).grid.ny, 0);
}

TEST(Manifest, Validation) {
  RunManifest m;
  m.eps_list = {0.05, 0.1};
  EXPECT_THROW(m.validate(), ContractError);
  m = RunManifest{};
  m.c = 0.5;
  EXPECT_THROW(m.validate(), ContractError);
  m.mode = RunMode::traveling;
  m.c = 1.0;
  EXPECT_THROW(m.validate(), ContractError);
  m = RunManifest{};
  m.q = 0.1;
  EXPECT_THROW(m.validate(), ContractError);
  EXPECT_THROW(parse_run_mode("moving"), ContractError);
}

TEST(Manifest, AutoGridResolvesEps) {
  for (double eps : {0.1, 0.05, 0.025, 0.07}) {
    const int ny = auto_ny(eps);
    EXPECT_EQ(ny % 4, 1);
    EXPECT_LE(2.0 / (ny - 1), eps / 6.0 + 1e-15);
    EXPECT_GT(2.0 / (ny - 5), eps / 6.0);
  }
  EXPECT_EQ(auto_ny(0.1), 121);
  EXPECT_EQ(auto_ny(0.05), 241);
  EXPECT_EQ(auto_ny(0.025), 481);
}

TEST(Studies, BatteryKeysAreUnique) {
  const auto b = norm_battery(0.05, {1.0, 2.0, 4.0});
  std::set<std::string> keys;
  for (const auto& n : b) EXPECT_TRUE(keys.insert(n.key()).second) << n.key();
  EXPECT_TRUE(keys.count(NormSpec{NormKind::Wsp_gagliardo, 1.4, 2.0, 0}.key()));
  EXPECT_TRUE(keys.count(NormSpec{NormKind::Holder, 0.5, 2.0, 1}.key()));
}

TEST(Studies, SweepIsDeterministicAndWritesOutputs) {
  const RunManifest m = small_manifest();
  const auto a = run_sweep(m);
  const auto b = run_sweep(manifest_from_json(to_json(m)));
  ASSERT_EQ(a.runs.size(), 3u);
  EXPECT_EQ(results_csv(a), results_csv(b));
  EXPECT_EQ(fits_csv(a), fits_csv(b));
  for (const auto& r : a.runs) EXPECT_TRUE(r.error.empty() || r.error == "not converged") << r.error;

  const auto dir = std::filesystem::temp_directory_path() / "equil_studies_test";
  std::filesystem::remove_all(dir);
  write_outputs(a, dir);
  for (const char* f : {"results.csv", "fits.csv", "witness.csv", "manifest.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::ifstream mf(dir / "manifest.json");
  const auto j = nlohmann::json::parse(mf);
  EXPECT_EQ(j.at("git_hash").get<std::string>(), std::string(EQUIL_GIT_HASH));
  EXPECT_EQ(results_csv(run_sweep(manifest_from_json(j))), results_csv(a));
  std::filesystem::remove_all(dir);
}

TEST(Studies, FailedRunsSignalExitCode) {
  RunManifest m = small_manifest();
  m.solver.max_iters = 1;
  m.norms = false;
  const auto r = run_sweep(m);
  // One iteration is not enough at eps = 0.3 and 0.2; the sweep continues,
  // reports partial success and skips the fits.
  EXPECT_FALSE(r.runs[0].ok);
  EXPECT_FALSE(r.runs[1].ok);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_TRUE(r.fits.empty());
  m.eps_list = {0.3, 0.2};
  EXPECT_EQ(run_sweep(m).exit_code, 1);
}
