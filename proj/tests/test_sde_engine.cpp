#include <cmath>
#include <memory>

#include "doctest.h"
#include "oracle_lq.hpp"
#include "wip/estimators.hpp"

using namespace wip;

namespace {

TerminalFunctional quad1(double P2, double p1 = 0.0, double Pbar2 = 0.0, double p2 = 0.0) {
  return TerminalFunctional::quadratic(Mat::scalar(P2), Vec{p1}, Mat::scalar(Pbar2), p2);
}

SimConfig basic_config(int N, long long M, double y, double dt = 0.0, uint64_t seed = 7) {
  SimConfig sc;
  sc.n_particles = N;
  sc.n_samples = M;
  sc.s = 0.0;
  sc.T = 1.0;
  sc.dt = dt;
  sc.base_seed = seed;
  sc.y = Mat(1, 1);
  sc.y(0, 0) = y;
  return sc;
}

bool records_equal(const std::vector<SampleRecord>& a, const std::vector<SampleRecord>& b) {
  if (a.size() != b.size()) return false;
  for (size_t j = 0; j < a.size(); ++j)
    if (a[j].g_terminal != b[j].g_terminal || a[j].log_weight != b[j].log_weight ||
        a[j].aux_sq_control_integral != b[j].aux_sq_control_integral ||
        a[j].valid != b[j].valid)
      return false;
  return true;
}

}  // namespace

TEST_CASE("frozen dynamics reduce to the initial cost") {
  ModelSpec still;
  still.dim_d = 1;
  still.dim_m = 1;
  still.constant_diffusion = true;
  still.drift = [](const double*, const EmpiricalMeasure&, double* out) { out[0] = 0.0; };
  still.diffusion = [](const double*, const EmpiricalMeasure&, double* out) { out[0] = 0.0; };
  const auto g = quad1(1.0, 0.5, 0.0, 0.25);
  const auto cfg = basic_config(4, 3, 0.3);
  const auto rec = simulate_sample(still, ControlPolicy::zero(), g, cfg, 0);
  const auto mu0 = EmpiricalMeasure::replicate(Vec{0.3}, 4);
  CHECK(rec.g_terminal == evaluate_G(g, mu0));
  CHECK(rec.log_weight == 0.0);
  CHECK(rec.aux_sq_control_integral == 0.0);
  CHECK(rec.valid);
}

TEST_CASE("zero policy carries exactly zero weight") {
  const ModelSpec model = lq_to_model(LQModel::scalar(0, -1, 2, 0.5));
  const auto g = quad1(1.0);
  const auto cfg = basic_config(5, 10, 0.2);
  const auto records = simulate_batch_serial(model, ControlPolicy::zero(), g, cfg);
  for (const auto& r : records) {
    CHECK(r.log_weight == 0.0);
    CHECK(r.aux_sq_control_integral == 0.0);
  }
}

TEST_CASE("constant-control estimator is pathwise exact in the decoupled-mean example") {
  // With drift x - mean + control -sigma, the discrete estimator telescopes:
  // -N g + log_weight = log E[exp(-N G)] exactly, step size independent.
  const LQModel lq = LQModel::scalar(0, 1, -1, 0.5);
  const ModelSpec model = lq_to_model(lq);
  const auto g = quad1(0.0, 1.0);
  const auto sol = std::make_shared<RiccatiSolution>(solve_riccati(lq, g, 0, 1, 2000));
  const auto policy = ControlPolicy::lq_optimal(sol);
  const int N = 10;
  const auto cfg = basic_config(N, 50, 0.1, 0.01);
  const double log_exact = -N * 0.1 + N * 0.25 * 0.5;
  const auto records = simulate_batch(model, policy, g, cfg);
  for (const auto& r : records)
    CHECK(-N * r.g_terminal + r.log_weight == doctest::Approx(log_exact).epsilon(1e-9));
}

TEST_CASE("batch results are worker-count invariant and match the serial reference") {
  const LQModel lq = LQModel::scalar(0, -1, 2, 0.5);
  const ModelSpec model = lq_to_model(lq);
  const auto g = quad1(1.0);
  const auto sol = std::make_shared<RiccatiSolution>(solve_riccati(lq, g, 0, 1, 2000));
  const auto policy = ControlPolicy::lq_optimal(sol);
  const auto cfg = basic_config(4, 200, 0.2, 0.0, 99);

  const auto serial = simulate_batch_serial(model, policy, g, cfg);
  const auto w1 = simulate_batch(model, policy, g, cfg, false, 1);
  const auto w4 = simulate_batch(model, policy, g, cfg, false, 4);
  const auto w8 = simulate_batch(model, policy, g, cfg, false, 8);
  CHECK(records_equal(serial, w1));
  CHECK(records_equal(serial, w4));
  CHECK(records_equal(serial, w8));
}

TEST_CASE("tilted run with zero policy reproduces the plain run") {
  const ModelSpec model = lq_to_model(LQModel::scalar(0, -1, 2, 0.5));
  const auto g = quad1(1.0);
  const auto cfg = basic_config(3, 50, 0.2);
  const auto plain = simulate_batch_serial(model, ControlPolicy::zero(), g, cfg, false);
  const auto tilted = simulate_batch_serial(model, ControlPolicy::zero(), g, cfg, true);
  CHECK(records_equal(plain, tilted));
}

TEST_CASE("tilted weight integrates the squared control exactly") {
  const ModelSpec model = lq_to_model(LQModel::scalar(0, 0, 0, 1.0));
  const auto g = quad1(0.0, 1.0);
  const double c = -0.8;
  const auto policy = ControlPolicy::custom(
      1, [c](double, int, const EmpiricalMeasure&, double* out) { out[0] = c; });
  auto cfg = basic_config(1, 3, 0.0, 0.1);
  const auto rec = simulate_tilted_sample(model, policy, g, cfg, 1);
  CHECK(rec.log_weight == doctest::Approx(c * c * 1.0).epsilon(1e-12));
  CHECK(rec.aux_sq_control_integral == doctest::Approx(c * c * 1.0).epsilon(1e-12));
}

TEST_CASE("final partial step covers a non-divisible horizon") {
  const ModelSpec model = lq_to_model(LQModel::scalar(0.5, 0, 0, 0.0));  // deterministic drift
  const auto g = quad1(0.0, 1.0);
  SimConfig cfg = basic_config(1, 1, 0.0, 0.4);  // steps 0.4, 0.4, then 0.2
  const auto rec = simulate_sample(model, ControlPolicy::zero(), g, cfg, 0);
  CHECK(rec.g_terminal == doctest::Approx(0.5 * 1.0).epsilon(1e-12));
}

TEST_CASE("girsanov identity holds between controlled and tilted second moments") {
  const LQModel lq = LQModel::scalar(0, 1, -1, 0.5);
  const ModelSpec model = lq_to_model(lq);
  const auto g = quad1(0.0, 1.0);
  const auto sol = std::make_shared<RiccatiSolution>(solve_riccati(lq, g, 0, 1, 2000));
  const auto policy = ControlPolicy::lq_optimal(sol);
  const auto cfg = basic_config(5, 10000, 0.1);
  const auto res = girsanov_second_moment_check(model, g, cfg, policy, policy);
  CHECK(res.pass);
  CHECK(res.discrepancy_sigmas <= 3.0);
}

TEST_CASE("a mismatched tilted control is detected") {
  const LQModel lq = LQModel::scalar(0, 1, -1, 0.5);
  const ModelSpec model = lq_to_model(lq);
  const auto g = quad1(0.0, 1.0);
  const auto sol = std::make_shared<RiccatiSolution>(solve_riccati(lq, g, 0, 1, 2000));
  const auto policy = ControlPolicy::lq_optimal(sol);
  const auto wrong = ControlPolicy::custom(
      1, [](double, int, const EmpiricalMeasure&, double* out) { out[0] = -0.9; });
  const auto cfg = basic_config(5, 10000, 0.1);
  const auto res = girsanov_second_moment_check(model, g, cfg, policy, wrong);
  CHECK_FALSE(res.pass);
}

TEST_CASE("weak error shrinks with the step size") {
  const LQModel lq = LQModel::scalar(0, -1, 2, 0.5);
  const ModelSpec model = lq_to_model(lq);
  const auto g = quad1(1.0);
  const auto sol = std::make_shared<RiccatiSolution>(solve_riccati(lq, g, 0, 1, 10000));
  const auto policy = ControlPolicy::lq_optimal(sol);
  const int N = 5;
  const double exact = exact_value(*sol, N, 0.0, EmpiricalMeasure::replicate(Vec{0.2}, N));

  auto estimate_with = [&](double dt) {
    const auto cfg = basic_config(N, 10000, 0.2, dt, 1234);
    return aggregate(simulate_batch(model, policy, g, cfg), N).estimate;
  };
  const double err_coarse = std::fabs(estimate_with(0.01) - exact);
  const double err_fine = std::fabs(estimate_with(0.0025) - exact);
  CHECK(err_fine < err_coarse);
}

TEST_CASE("nan trajectories are flagged and batch-level abort triggers") {
  ModelSpec explosive;
  explosive.dim_d = 1;
  explosive.dim_m = 1;
  explosive.constant_diffusion = true;
  explosive.drift = [](const double* x, const EmpiricalMeasure&, double* out) {
    out[0] = 1e160 * x[0] * x[0] * x[0];
  };
  explosive.diffusion = [](const double*, const EmpiricalMeasure&, double* out) {
    out[0] = 1.0;
  };
  const auto g = quad1(0.0, 1.0);
  const auto cfg = basic_config(1, 100, 1.0, 0.1);
  const auto rec = simulate_sample(explosive, ControlPolicy::zero(), g, cfg, 0);
  CHECK_FALSE(rec.valid);
  CHECK_THROWS_AS(simulate_batch_serial(explosive, ControlPolicy::zero(), g, cfg),
                  std::runtime_error);
}

TEST_CASE("config validation") {
  const ModelSpec model = lq_to_model(LQModel::scalar(0, 0, 0, 1));
  const auto g = quad1(1.0);
  SimConfig cfg = basic_config(2, 4, 0.0);
  cfg.n_samples = 0;
  CHECK_THROWS_AS(simulate_batch_serial(model, ControlPolicy::zero(), g, cfg),
                  std::invalid_argument);
  cfg = basic_config(2, 4, 0.0);
  cfg.T = -1.0;
  CHECK_THROWS_AS(simulate_batch_serial(model, ControlPolicy::zero(), g, cfg),
                  std::invalid_argument);
  cfg = basic_config(2, 4, 0.0);
  cfg.y = Mat(3, 1);  // neither 1 nor n_particles rows
  CHECK_THROWS_AS(simulate_batch_serial(model, ControlPolicy::zero(), g, cfg),
                  std::invalid_argument);
  cfg = basic_config(2, 4, 0.0);
  CHECK_THROWS_AS(simulate_sample(model, ControlPolicy::zero(), g, cfg, 9),
                  std::invalid_argument);
}
