#pragma once

#include <optional>
#include <span>
#include <utility>

#include "wip/riccati.hpp"
#include "wip/sde_engine.hpp"

namespace wip {

double log_sum_exp(std::span<const double> values);

// Aggregated estimator statistics. Relative errors follow the per-sample
// convention: empirical_rel_error = sqrt(R - 1) with R the ratio of the
// empirical second moment to the squared mean of exp(-N g + log_weight).
// Standard errors come from the delta method on the sample moments.
struct EstimatorReport {
  double estimate = 0.0;
  double log_estimate = 0.0;
  double empirical_rel_error = 0.0;   // rho-tilde
  double second_moment_ratio = 1.0;   // R-tilde
  double work_metric = 0.0;           // T(N) = N (R-tilde - 1)
  double se_log_estimate = 0.0;       // = rho-tilde / sqrt(n_valid)
  double se_rel_error = 0.0;
  long long n_valid = 0;
  std::optional<double> exact_value;
  std::optional<double> exact_rel_error;
};

// Log-space reduction of per-record values exp(-N g_j + log_weight_j).
// Requires at least two valid records.
EstimatorReport aggregate(const std::vector<SampleRecord>& records, int n_particles);

// -(1/N) log R-tilde; near 0 for log-efficient schemes.
double log_efficiency_diagnostic(const EstimatorReport& report, int n_particles);

// log( (1/M) sum_j exp(g_coeff*g_j + w_coeff*log_weight_j) ) over valid
// records, with the per-sample relative error of that mean.
struct LogMoment {
  double log_mean = 0.0;
  double rel_error = 0.0;
  long long n = 0;
};
LogMoment log_moment(const std::vector<SampleRecord>& records, double g_coeff,
                     double w_coeff);

// Two independent estimators of the same second moment
// E[exp(-2NG) Z^2]: the controlled run reweighted by Z^2 and the tilted run
// reweighted by exp(int sum |v|^2 dt). They must agree within tolerance_sigmas
// combined standard errors (on the log scale).
struct GirsanovCheckResult {
  double log_m2_controlled = 0.0;
  double log_m2_tilted = 0.0;
  double se_log_controlled = 0.0;
  double se_log_tilted = 0.0;
  double discrepancy_sigmas = 0.0;
  bool pass = false;
};
GirsanovCheckResult girsanov_second_moment_check(const ModelSpec& model,
                                                 const TerminalFunctional& g,
                                                 const SimConfig& cfg,
                                                 const ControlPolicy& controlled_policy,
                                                 const ControlPolicy& tilted_policy,
                                                 int workers = 0,
                                                 double tolerance_sigmas = 3.0);

// Runs (a) the N-particle estimator and (b) the aggregated scalar SDE
//   dY = [b0 + (B+Bbar) Y] dt + (sigma/sqrt(N)) dWbar
// driven by the same per-particle Gaussian draws, with the same control
// evaluated on the single-atom measure at Y. Requires d = 1 and a terminal
// cost that is affine in the mean (quadratic with P2 = Pbar2 = 0).
std::pair<EstimatorReport, EstimatorReport> small_noise_cross_check(
    const LQModel& lq, const TerminalFunctional& g, const SimConfig& cfg,
    const ControlPolicy& policy, int workers = 0);

}  // namespace wip
