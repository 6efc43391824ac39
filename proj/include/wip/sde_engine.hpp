#pragma once

#include <cstdint>
#include <vector>

#include "wip/controls.hpp"
#include "wip/models.hpp"

namespace wip {

struct SimConfig {
  int n_particles = 1;
  long long n_samples = 1;
  double s = 0.0;
  double T = 1.0;
  double dt = 0.0;  // 0 selects the default rule 0.01 / n_particles
  uint64_t base_seed = 0;
  Mat y;  // n_particles x d, or a single row replicated across particles

  double resolved_dt() const;
  Mat initial_positions(int dim_d) const;
  void validate(int dim_d) const;
};

// One simulated path of the N-particle system.
//   g_terminal: G(empirical measure at T)
//   log_weight: controlled runs accumulate sum_i [-v_i.dW_i - (1/2)|v_i|^2 dt]
//               (the Girsanov log-density); tilted runs accumulate
//               +int sum_i |v_i|^2 dt
//   aux_sq_control_integral: int sum_i |v_i|^2 dt along the simulated path
struct SampleRecord {
  double g_terminal = 0.0;
  double log_weight = 0.0;
  double aux_sq_control_integral = 0.0;
  bool valid = true;
};

// Euler-Maruyama path of the controlled system (drift b + sigma v). The same
// Gaussian increments drive both the state and the weight. Fully determined
// by (cfg.base_seed, sample_index).
SampleRecord simulate_sample(const ModelSpec& model, const ControlPolicy& policy,
                             const TerminalFunctional& g, const SimConfig& cfg,
                             long long sample_index);

// Tilted variant: drift b - sigma v, weight +int sum_i |v_i|^2 dt.
SampleRecord simulate_tilted_sample(const ModelSpec& model, const ControlPolicy& policy,
                                    const TerminalFunctional& g, const SimConfig& cfg,
                                    long long sample_index);

// OpenMP-parallel batch. Records are bitwise-identical for any worker count
// and to simulate_batch_serial. Throws if more than 0.1% of samples go
// non-finite (silent exclusion at that rate would bias the estimator).
std::vector<SampleRecord> simulate_batch(const ModelSpec& model, const ControlPolicy& policy,
                                         const TerminalFunctional& g, const SimConfig& cfg,
                                         bool tilted = false, int workers = 0);

// Plain-loop reference implementation kept for testing and benchmarking.
std::vector<SampleRecord> simulate_batch_serial(const ModelSpec& model,
                                                const ControlPolicy& policy,
                                                const TerminalFunctional& g,
                                                const SimConfig& cfg, bool tilted = false);

long long count_invalid(const std::vector<SampleRecord>& records);

}  // namespace wip
