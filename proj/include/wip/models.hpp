#pragma once

#include <functional>

#include "wip/measures.hpp"

namespace wip {

// Drift/diffusion specification for the particle system. Callables must be
// pure, re-entrant and non-throwing on finite inputs; they write into
// caller-provided buffers (d doubles for drift, row-major d x m for
// diffusion). constant_diffusion lets the engine evaluate the diffusion once
// per path.
struct ModelSpec {
  int dim_d = 1;
  int dim_m = 1;
  bool constant_diffusion = false;
  std::function<void(const double* x, const EmpiricalMeasure& mu, double* out)> drift;
  std::function<void(const double* x, const EmpiricalMeasure& mu, double* out)> diffusion;
};

// Linear dynamics with mean-field coupling and constant diffusion:
//   drift(x, mu) = b0 + B x + Bbar mean(mu),  diffusion = sigma (d x m).
struct LQModel {
  Vec b0;
  Mat B;
  Mat Bbar;
  Mat sigma;

  int dim() const { return B.rows; }
  int noise_dim() const { return sigma.cols; }

  static LQModel scalar(double b0v, double Bv, double Bbarv, double sigmav) {
    return LQModel{{b0v}, Mat::scalar(Bv), Mat::scalar(Bbarv), Mat::scalar(sigmav)};
  }
};

ModelSpec lq_to_model(const LQModel& lq);

}  // namespace wip
