// Compares the OpenMP batch kernel against the serial reference on the same
// workload and verifies the records agree bitwise.
#include <chrono>
#include <functional>
#include <iostream>

#include "wip/config.hpp"
#include "wip/estimators.hpp"

using namespace wip;

namespace {

double time_s(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  int N = 10;
  long long M = 4000;
  int workers = 0;
  if (argc > 1) N = std::atoi(argv[1]);
  if (argc > 2) M = std::atoll(argv[2]);
  if (argc > 3) workers = std::atoi(argv[3]);

  RunConfig cfg = named_example("sec_5_1");
  const ModelSpec model = lq_to_model(cfg.lq);
  const auto sol = std::make_shared<RiccatiSolution>(
      solve_riccati(cfg.lq, *cfg.g, cfg.s, cfg.T, cfg.riccati_steps));
  const ControlPolicy policy = ControlPolicy::lq_optimal(sol);

  SimConfig sc;
  sc.n_particles = N;
  sc.n_samples = M;
  sc.s = cfg.s;
  sc.T = cfg.T;
  sc.base_seed = 42;
  sc.y = Mat(1, 1);
  sc.y(0, 0) = cfg.y0[0];

  std::vector<SampleRecord> serial, parallel;
  const double t_serial =
      time_s([&] { serial = simulate_batch_serial(model, policy, *cfg.g, sc); });
  const double t_parallel =
      time_s([&] { parallel = simulate_batch(model, policy, *cfg.g, sc, false, workers); });

  bool identical = serial.size() == parallel.size();
  for (size_t j = 0; identical && j < serial.size(); ++j)
    identical = serial[j].g_terminal == parallel[j].g_terminal &&
                serial[j].log_weight == parallel[j].log_weight &&
                serial[j].aux_sq_control_integral == parallel[j].aux_sq_control_integral &&
                serial[j].valid == parallel[j].valid;

  const EstimatorReport rep = aggregate(parallel, N);
  std::cout << "bench sec_5_1 N=" << N << " M=" << M << " dt=" << format_double(sc.resolved_dt())
            << "\n"
            << "  serial reference: " << format_double(t_serial) << " s\n"
            << "  openmp kernel:    " << format_double(t_parallel) << " s  (speedup "
            << format_double(t_serial / t_parallel) << ")\n"
            << "  records bitwise identical: " << (identical ? "yes" : "NO") << "\n"
            << "  estimate " << format_double(rep.estimate) << "  rho "
            << format_double(rep.empirical_rel_error) << "\n";
  return identical ? 0 : 1;
}
