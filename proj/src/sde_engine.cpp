#include "wip/sde_engine.hpp"

#include <omp.h>

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "wip/rng.hpp"

namespace wip {

double SimConfig::resolved_dt() const { return dt > 0.0 ? dt : 0.01 / n_particles; }

Mat SimConfig::initial_positions(int dim_d) const {
  if (y.cols != dim_d) throw std::invalid_argument("initial positions have wrong dimension");
  if (y.rows == n_particles) return y;
  if (y.rows == 1) {
    Mat full(n_particles, dim_d);
    for (int i = 0; i < n_particles; ++i)
      for (int j = 0; j < dim_d; ++j) full(i, j) = y(0, j);
    return full;
  }
  throw std::invalid_argument("initial positions must have 1 or n_particles rows");
}

void SimConfig::validate(int dim_d) const {
  if (n_particles < 1) throw std::invalid_argument("n_particles must be >= 1");
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (n_samples > (1ll << 32)) throw std::invalid_argument("n_samples exceeds the RNG index range");
  if (!(s >= 0.0) || !(T > s)) throw std::invalid_argument("times must satisfy 0 <= s < T");
  if (dt < 0.0) throw std::invalid_argument("dt must be positive (or 0 for the default rule)");
  if (!all_finite(y)) throw std::invalid_argument("initial positions must be finite");
  initial_positions(dim_d);  // shape check
}

namespace {

SampleRecord run_path(const ModelSpec& model, const ControlPolicy& policy,
                      const TerminalFunctional& g, const SimConfig& cfg,
                      long long sample_index, bool tilted, const Mat& y0) {
  const int n = cfg.n_particles;
  const int d = model.dim_d;
  const int m = model.dim_m;
  const double dt = cfg.resolved_dt();
  const double t_end = cfg.T;
  const double eps = 1e-12 * std::max(1.0, std::fabs(t_end));
  const bool zero_policy = policy.is_zero();
  const double drift_sign = tilted ? -1.0 : 1.0;

  Mat state = y0;
  EmpiricalMeasure mu(state);
  Vec v(m), dW(m), bbuf(d), sig(static_cast<size_t>(d) * m);

  if (model.constant_diffusion) model.diffusion(state.row(0), mu, sig.data());

  SampleRecord rec;
  double lw = 0.0, aux = 0.0;
  double t = cfg.s;
  uint32_t step = 0;

  while (t_end - t > eps) {
    const double h = std::min(dt, t_end - t);
    const double sqh = std::sqrt(h);
    mu.assign(state.a.data());
    for (int i = 0; i < n; ++i) {
      const double* x = state.row(i);
      if (!zero_policy) policy.value(t, i, mu, v.data());
      model.drift(x, mu, bbuf.data());
      if (!model.constant_diffusion) model.diffusion(x, mu, sig.data());
      for (int k = 0; k < m; ++k)
        dW[k] = sqh * rng::normal_draw(cfg.base_seed, static_cast<uint64_t>(sample_index),
                                       static_cast<uint32_t>(i), step,
                                       static_cast<uint32_t>(k));
      double* xw = state.row(i);
      for (int r = 0; r < d; ++r) {
        double drift_r = bbuf[r];
        double noise_r = 0.0;
        for (int k = 0; k < m; ++k) {
          const double srk = sig[static_cast<size_t>(r) * m + k];
          noise_r += srk * dW[k];
          if (!zero_policy) drift_r += drift_sign * srk * v[k];
        }
        xw[r] += drift_r * h + noise_r;
      }
      if (!zero_policy) {
        double v2 = 0.0, vdW = 0.0;
        for (int k = 0; k < m; ++k) {
          v2 += v[k] * v[k];
          vdW += v[k] * dW[k];
        }
        if (tilted)
          lw += v2 * h;
        else
          lw += -vdW - 0.5 * v2 * h;
        aux += v2 * h;
      }
    }
    if (!all_finite(state.a.data(), state.a.size())) {
      rec.valid = false;
      return rec;
    }
    t += h;
    ++step;
  }

  mu.assign(state.a.data());
  rec.g_terminal = evaluate_G(g, mu);
  rec.log_weight = lw;
  rec.aux_sq_control_integral = aux;
  rec.valid = std::isfinite(rec.g_terminal) && std::isfinite(lw) && std::isfinite(aux);
  return rec;
}

void check_inputs(const ModelSpec& model, const ControlPolicy& policy,
                  const TerminalFunctional& g, const SimConfig& cfg) {
  if (!model.drift || !model.diffusion)
    throw std::invalid_argument("model must provide drift and diffusion callables");
  if (g.is_quadratic() && g.dim() != model.dim_d)
    throw std::invalid_argument("terminal cost dimension does not match model");
  if (policy.dim_m() != model.dim_m)
    throw std::invalid_argument("control dimension does not match model noise dimension");
  cfg.validate(model.dim_d);
  // Probe the policy serially at both endpoints so mismatches surface here
  // rather than inside a parallel region.
  if (!policy.is_zero()) {
    EmpiricalMeasure mu0(cfg.initial_positions(model.dim_d));
    Vec probe(static_cast<size_t>(model.dim_m), 0.0);
    policy.value(cfg.s, 0, mu0, probe.data());
    policy.value(cfg.T, 0, mu0, probe.data());
  }
#ifndef NDEBUG
  {  // debug builds sample the coefficients once: finite in, finite out
    EmpiricalMeasure mu0(cfg.initial_positions(model.dim_d));
    Vec db(static_cast<size_t>(model.dim_d), 0.0);
    Vec sg(static_cast<size_t>(model.dim_d) * model.dim_m, 0.0);
    model.drift(mu0.atom(0), mu0, db.data());
    model.diffusion(mu0.atom(0), mu0, sg.data());
    assert(all_finite(db) && all_finite(sg));
  }
#endif
}

void check_invalid_rate(const std::vector<SampleRecord>& records) {
  const long long bad = count_invalid(records);
  if (bad > 0 && 1000.0 * static_cast<double>(bad) > static_cast<double>(records.size()))
    throw std::runtime_error("more than 0.1% of samples went non-finite (" +
                             std::to_string(bad) + " of " + std::to_string(records.size()) +
                             "); excluding them would bias the estimator");
}

}  // namespace

SampleRecord simulate_sample(const ModelSpec& model, const ControlPolicy& policy,
                             const TerminalFunctional& g, const SimConfig& cfg,
                             long long sample_index) {
  check_inputs(model, policy, g, cfg);
  if (sample_index < 0 || sample_index >= cfg.n_samples)
    throw std::invalid_argument("sample_index out of range");
  return run_path(model, policy, g, cfg, sample_index, false,
                  cfg.initial_positions(model.dim_d));
}

SampleRecord simulate_tilted_sample(const ModelSpec& model, const ControlPolicy& policy,
                                    const TerminalFunctional& g, const SimConfig& cfg,
                                    long long sample_index) {
  check_inputs(model, policy, g, cfg);
  if (sample_index < 0 || sample_index >= cfg.n_samples)
    throw std::invalid_argument("sample_index out of range");
  return run_path(model, policy, g, cfg, sample_index, true,
                  cfg.initial_positions(model.dim_d));
}

std::vector<SampleRecord> simulate_batch(const ModelSpec& model, const ControlPolicy& policy,
                                         const TerminalFunctional& g, const SimConfig& cfg,
                                         bool tilted, int workers) {
  check_inputs(model, policy, g, cfg);
  const Mat y0 = cfg.initial_positions(model.dim_d);
  std::vector<SampleRecord> records(static_cast<size_t>(cfg.n_samples));
  const long long M = cfg.n_samples;
  if (workers > 0) {
#pragma omp parallel for schedule(static) num_threads(workers)
    for (long long j = 0; j < M; ++j)
      records[static_cast<size_t>(j)] = run_path(model, policy, g, cfg, j, tilted, y0);
  } else {
#pragma omp parallel for schedule(static)
    for (long long j = 0; j < M; ++j)
      records[static_cast<size_t>(j)] = run_path(model, policy, g, cfg, j, tilted, y0);
  }
  check_invalid_rate(records);
  return records;
}

std::vector<SampleRecord> simulate_batch_serial(const ModelSpec& model,
                                                const ControlPolicy& policy,
                                                const TerminalFunctional& g,
                                                const SimConfig& cfg, bool tilted) {
  check_inputs(model, policy, g, cfg);
  const Mat y0 = cfg.initial_positions(model.dim_d);
  std::vector<SampleRecord> records(static_cast<size_t>(cfg.n_samples));
  for (long long j = 0; j < cfg.n_samples; ++j)
    records[static_cast<size_t>(j)] = run_path(model, policy, g, cfg, j, tilted, y0);
  check_invalid_rate(records);
  return records;
}

long long count_invalid(const std::vector<SampleRecord>& records) {
  long long bad = 0;
  for (const auto& r : records) bad += r.valid ? 0 : 1;
  return bad;
}

}  // namespace wip
