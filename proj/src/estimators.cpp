#include "wip/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "wip/rng.hpp"

namespace wip {

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("log_sum_exp of an empty range");
  const double mx = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(mx)) return mx;  // all -inf, or a NaN/inf poisoning the set
  double s = 0.0;
  for (double v : values) s += std::exp(v - mx);
  return mx + std::log(s);
}

namespace {

// log( (1/M) sum exp(k * l_j) ) for k = 1..4, fixed reduction order.
struct LogPowerMoments {
  double lm1, lm2, lm3, lm4;
  long long n;
};

LogPowerMoments log_power_moments(const std::vector<double>& l) {
  const long long n = static_cast<long long>(l.size());
  std::vector<double> scaled(l.size());
  LogPowerMoments out{};
  out.n = n;
  const double logn = std::log(static_cast<double>(n));
  double* dst[4] = {&out.lm1, &out.lm2, &out.lm3, &out.lm4};
  for (int k = 1; k <= 4; ++k) {
    for (size_t j = 0; j < l.size(); ++j) scaled[j] = k * l[j];
    *dst[k - 1] = log_sum_exp(scaled) - logn;
  }
  return out;
}

std::vector<double> collect_log_values(const std::vector<SampleRecord>& records,
                                       double g_coeff, double w_coeff) {
  std::vector<double> l;
  l.reserve(records.size());
  for (const auto& r : records)
    if (r.valid) l.push_back(g_coeff * r.g_terminal + w_coeff * r.log_weight);
  return l;
}

}  // namespace

EstimatorReport aggregate(const std::vector<SampleRecord>& records, int n_particles) {
  const std::vector<double> l = collect_log_values(records, -static_cast<double>(n_particles), 1.0);
  if (l.size() < 2)
    throw std::invalid_argument("aggregate requires at least two valid records");
  const LogPowerMoments m = log_power_moments(l);

  EstimatorReport rep;
  rep.n_valid = m.n;
  rep.log_estimate = m.lm1;
  rep.estimate = std::exp(m.lm1);

  const double log_R = m.lm2 - 2.0 * m.lm1;
  rep.second_moment_ratio = std::exp(log_R);
  // Sample variance is nonnegative, so R >= 1 up to rounding; clamp tiny
  // negative radicands from near-constant samples.
  const double r_minus_1 = std::max(std::expm1(log_R), 0.0);
  rep.empirical_rel_error = std::sqrt(r_minus_1);
  rep.work_metric = n_particles * r_minus_1;

  const double M = static_cast<double>(m.n);
  rep.se_log_estimate = rep.empirical_rel_error / std::sqrt(M);

  // Delta method for rho = sqrt(R - 1) via dimensionless moment ratios
  // r_k = m_k / m_1^k:  M Var(R) = r4 + 4 r2^3 - r2^2 - 4 r2 r3.
  const double r2 = rep.second_moment_ratio;
  const double r3 = std::exp(m.lm3 - 3.0 * m.lm1);
  const double r4 = std::exp(m.lm4 - 4.0 * m.lm1);
  const double var_R = std::max(r4 + 4.0 * r2 * r2 * r2 - r2 * r2 - 4.0 * r2 * r3, 0.0) / M;
  rep.se_rel_error = (r_minus_1 > 0.0) ? std::sqrt(var_R) / (2.0 * rep.empirical_rel_error) : 0.0;
  return rep;
}

double log_efficiency_diagnostic(const EstimatorReport& report, int n_particles) {
  return -std::log(report.second_moment_ratio) / n_particles;
}

LogMoment log_moment(const std::vector<SampleRecord>& records, double g_coeff,
                     double w_coeff) {
  const std::vector<double> l = collect_log_values(records, g_coeff, w_coeff);
  if (l.size() < 2) throw std::invalid_argument("log_moment requires at least two valid records");
  const LogPowerMoments m = log_power_moments(l);
  LogMoment out;
  out.n = m.n;
  out.log_mean = m.lm1;
  out.rel_error = std::sqrt(std::max(std::expm1(m.lm2 - 2.0 * m.lm1), 0.0));
  return out;
}

GirsanovCheckResult girsanov_second_moment_check(const ModelSpec& model,
                                                 const TerminalFunctional& g,
                                                 const SimConfig& cfg,
                                                 const ControlPolicy& controlled_policy,
                                                 const ControlPolicy& tilted_policy,
                                                 int workers, double tolerance_sigmas) {
  const auto controlled = simulate_batch(model, controlled_policy, g, cfg, false, workers);
  const auto tilted = simulate_batch(model, tilted_policy, g, cfg, true, workers);
  const double N = static_cast<double>(cfg.n_particles);
  const LogMoment mc = log_moment(controlled, -2.0 * N, 2.0);
  const LogMoment mt = log_moment(tilted, -2.0 * N, 1.0);

  GirsanovCheckResult out;
  out.log_m2_controlled = mc.log_mean;
  out.log_m2_tilted = mt.log_mean;
  out.se_log_controlled = mc.rel_error / std::sqrt(static_cast<double>(mc.n));
  out.se_log_tilted = mt.rel_error / std::sqrt(static_cast<double>(mt.n));
  const double combined = std::hypot(out.se_log_controlled, out.se_log_tilted);
  const double diff = std::fabs(out.log_m2_controlled - out.log_m2_tilted);
  // floor covers pure floating-point roundoff between two zero-variance runs
  const double floor = 1e-12 * std::max(1.0, std::fabs(out.log_m2_controlled));
  out.discrepancy_sigmas = diff / std::max(combined, floor);
  out.pass = diff <= tolerance_sigmas * combined + floor;
  return out;
}

std::pair<EstimatorReport, EstimatorReport> small_noise_cross_check(
    const LQModel& lq, const TerminalFunctional& g, const SimConfig& cfg,
    const ControlPolicy& policy, int workers) {
  if (lq.dim() != 1 || lq.noise_dim() != 1)
    throw std::invalid_argument("small-noise cross-check requires d = m = 1");
  if (!g.is_quadratic())
    throw std::invalid_argument("small-noise cross-check requires a quadratic terminal cost");
  if (g.P2()(0, 0) != 0.0 || g.Pbar2()(0, 0) != 0.0)
    throw std::invalid_argument(
        "small-noise cross-check requires a terminal cost affine in the mean "
        "(P2 = Pbar2 = 0)");

  const ModelSpec model = lq_to_model(lq);
  const auto particle_records = simulate_batch(model, policy, g, cfg, false, workers);
  EstimatorReport particle_rep = aggregate(particle_records, cfg.n_particles);

  // Aggregated scalar dynamics driven by the same draws.
  const int n = cfg.n_particles;
  const double N = static_cast<double>(n);
  const double sqrtN = std::sqrt(N);
  const Mat y0 = cfg.initial_positions(1);
  double y_mean = 0.0;
  for (int i = 0; i < n; ++i) y_mean += y0(i, 0);
  y_mean /= N;
  const double dt = cfg.resolved_dt();
  const double eps = 1e-12 * std::max(1.0, std::fabs(cfg.T));
  const double drift_b0 = lq.b0[0];
  const double drift_lin = lq.B(0, 0) + lq.Bbar(0, 0);
  const double sigma = lq.sigma(0, 0);
  const double p_coeff = g.p1()[0];
  const double p_const = g.p2();

  std::vector<SampleRecord> agg_records(static_cast<size_t>(cfg.n_samples));
  const long long M = cfg.n_samples;
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < M; ++j) {
    Mat ypos(1, 1);
    ypos(0, 0) = y_mean;
    EmpiricalMeasure ym(ypos);
    double Y = y_mean;
    double lw = 0.0, aux = 0.0;
    double t = cfg.s;
    uint32_t step = 0;
    double v = 0.0;
    bool ok = true;
    while (cfg.T - t > eps) {
      const double h = std::min(dt, cfg.T - t);
      const double sqh = std::sqrt(h);
      ypos(0, 0) = Y;
      ym.assign(ypos.a.data());
      if (!policy.is_zero()) policy.value(t, 0, ym, &v);
      double dWbar = 0.0;
      for (int i = 0; i < n; ++i)
        dWbar += rng::normal_draw(cfg.base_seed, static_cast<uint64_t>(j),
                                  static_cast<uint32_t>(i), step, 0);
      dWbar *= sqh / sqrtN;
      Y += (drift_b0 + drift_lin * Y + sigma * v) * h + (sigma / sqrtN) * dWbar;
      if (!policy.is_zero()) {
        lw += -sqrtN * v * dWbar - 0.5 * N * v * v * h;
        aux += v * v * h;
      }
      t += h;
      ++step;
    }
    ok = std::isfinite(Y) && std::isfinite(lw);
    SampleRecord rec;
    rec.g_terminal = p_coeff * Y + p_const;
    rec.log_weight = lw;
    rec.aux_sq_control_integral = aux;
    rec.valid = ok && std::isfinite(rec.g_terminal);
    agg_records[static_cast<size_t>(j)] = rec;
  }

  EstimatorReport agg_rep = aggregate(agg_records, cfg.n_particles);
  return {particle_rep, agg_rep};
}

}  // namespace wip
