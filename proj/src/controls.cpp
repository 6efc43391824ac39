#include "wip/controls.hpp"

#include <cassert>
#include <cmath>

namespace wip {

namespace {

inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

ControlPolicy ControlPolicy::zero(int dim_m) {
  ControlPolicy p;
  p.v_ = Zero{};
  p.dim_m_ = dim_m;
  return p;
}

ControlPolicy ControlPolicy::lq_optimal(std::shared_ptr<const RiccatiSolution> sol) {
  if (!sol) throw std::invalid_argument("lq_optimal requires a Riccati solution");
  ControlPolicy p;
  p.dim_m_ = sol->lq.noise_dim();
  p.v_ = LQOptimal{std::move(sol)};
  return p;
}

ControlPolicy ControlPolicy::sign_outside(double B, double Bbar, double sigma, double T) {
  ControlPolicy p;
  p.v_ = SignOutside{B, Bbar, sigma, T};
  p.dim_m_ = 1;
  return p;
}

ControlPolicy ControlPolicy::sign_inside(double B, double Bbar, double sigma, double T) {
  ControlPolicy p;
  p.v_ = SignInside{B, Bbar, sigma, T};
  p.dim_m_ = 1;
  return p;
}

ControlPolicy ControlPolicy::custom(int dim_m, CustomFn fn) {
  if (!fn) throw std::invalid_argument("custom control requires a callable");
  ControlPolicy p;
  p.v_ = Custom{std::move(fn)};
  p.dim_m_ = dim_m;
  return p;
}

void ControlPolicy::value(double t, int i, const EmpiricalMeasure& state, double* out) const {
  if (i < 0 || i >= state.n()) throw std::invalid_argument("particle index out of range");
  switch (v_.index()) {
    case 0: {  // Zero
      for (int k = 0; k < dim_m_; ++k) out[k] = 0.0;
      return;
    }
    case 1: {  // LQOptimal
      const auto& sol = *std::get<LQOptimal>(v_).sol;
      const int d = sol.dim();
      if (state.dim() != d)
        throw std::invalid_argument("state dimension does not match Riccati solution");
      thread_local RiccatiSolution::Coeffs c;
      sol.eval(t, c);
      const double* x = state.atom(i);
      const Vec& mn = state.mean();
      // p = 2 Lambda x + 2 (Gamma - Lambda) mean + gamma, then v = -sigma^T p
      double acc = 0.0;
      for (int r = 0; r < d; ++r) {
        double pr = c.gamma[r];
        for (int j = 0; j < d; ++j)
          pr += 2.0 * c.Lambda(r, j) * x[j] +
                2.0 * (c.Gamma(r, j) - c.Lambda(r, j)) * mn[j];
        acc += sol.lq.sigma(r, 0) * pr;
      }
      out[0] = -acc;
      return;
    }
    case 2: {  // SignOutside
      const auto& sp = std::get<SignOutside>(v_);
      if (state.dim() != 1) throw std::invalid_argument("sign controls require d = 1");
      out[0] = -sp.sigma * std::exp((sp.B + sp.Bbar) * (sp.T - t)) * sgn(state.mean()[0]);
      assert(std::fabs(out[0]) <=
             2.0 * sp.sigma * std::exp(std::max(sp.B + sp.Bbar, 0.0) * (sp.T - t)) + 1e-12);
      return;
    }
    case 3: {  // SignInside
      const auto& sp = std::get<SignInside>(v_);
      if (state.dim() != 1) throw std::invalid_argument("sign controls require d = 1");
      const int n = state.n();
      double avg = 0.0;
      for (int j = 0; j < n; ++j) avg += sgn(state.atom(j)[0]);
      avg /= n;
      const double eb = std::exp(sp.B * (sp.T - t));
      const double ebb = std::exp((sp.B + sp.Bbar) * (sp.T - t));
      out[0] = -sp.sigma * (eb * sgn(state.atom(i)[0]) + (ebb - eb) * avg);
      assert(std::fabs(out[0]) <=
             2.0 * sp.sigma * std::exp(std::max(sp.B + sp.Bbar, 0.0) * (sp.T - t)) + 1e-12);
      return;
    }
    case 4: {  // Custom
      std::get<Custom>(v_).fn(t, i, state, out);
      return;
    }
  }
}

void control_value(const ControlPolicy& policy, double t, int i,
                   const EmpiricalMeasure& state, double* out) {
  policy.value(t, i, state, out);
}

Vec control_value(const ControlPolicy& policy, double t, int i,
                  const EmpiricalMeasure& state) {
  Vec out(policy.dim_m(), 0.0);
  policy.value(t, i, state, out.data());
  return out;
}

}  // namespace wip
