#include "wip/riccati.hpp"

#include <algorithm>
#include <cmath>

namespace wip {

namespace {

struct State {
  Mat Lambda, Gamma;
  Vec gamma;
  double chi = 0.0, corr = 0.0;
};

State axpy(const State& x, double c, const State& d) {
  State r = x;
  for (size_t k = 0; k < r.Lambda.a.size(); ++k) r.Lambda.a[k] += c * d.Lambda.a[k];
  for (size_t k = 0; k < r.Gamma.a.size(); ++k) r.Gamma.a[k] += c * d.Gamma.a[k];
  for (size_t k = 0; k < r.gamma.size(); ++k) r.gamma[k] += c * d.gamma[k];
  r.chi += c * d.chi;
  r.corr += c * d.corr;
  return r;
}

bool finite(const State& s) {
  return all_finite(s.Lambda) && all_finite(s.Gamma) && all_finite(s.gamma) &&
         std::isfinite(s.chi) && std::isfinite(s.corr);
}

// sigma^T A sigma as a scalar (m = 1: sigma is d x 1).
double sandwich(const Mat& sigma, const Mat& A) {
  double s = 0.0;
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) s += sigma(i, 0) * A(i, j) * sigma(j, 0);
  return s;
}

}  // namespace

void RiccatiSolution::eval(double tq, Coeffs& out) const {
  const double tol = 1e-9 * std::max(1.0, std::fabs(T) + std::fabs(s));
  if (tq < s - tol || tq > T + tol)
    throw std::invalid_argument("time outside the Riccati solution interval");
  tq = std::clamp(tq, s, T);
  const size_t k = grid_index_below(tq);
  const size_t k1 = std::min(k + 1, t.size() - 1);
  const double h = t[k1] - t[k];
  const double w = (h > 0.0) ? (tq - t[k]) / h : 0.0;

  const int d = dim();
  if (out.Lambda.rows != d) {
    out.Lambda = Mat(d, d);
    out.Gamma = Mat(d, d);
    out.gamma.assign(d, 0.0);
  }
  for (size_t e = 0; e < out.Lambda.a.size(); ++e) {
    out.Lambda.a[e] = (1.0 - w) * Lambda[k].a[e] + w * Lambda[k1].a[e];
    out.Gamma.a[e] = (1.0 - w) * Gamma[k].a[e] + w * Gamma[k1].a[e];
  }
  for (int e = 0; e < d; ++e) out.gamma[e] = (1.0 - w) * gamma[k][e] + w * gamma[k1][e];
  out.chi = (1.0 - w) * chi[k] + w * chi[k1];
  out.chi_correction = (1.0 - w) * chi_correction[k] + w * chi_correction[k1];
}

RiccatiSolution::Coeffs RiccatiSolution::at(double tq) const {
  Coeffs c;
  eval(tq, c);
  return c;
}

size_t RiccatiSolution::grid_index_below(double tq) const {
  const size_t n = t.size();
  if (n < 2) return 0;
  const double h = (T - s) / static_cast<double>(n - 1);
  auto k = static_cast<long long>(std::floor((tq - s) / h));
  k = std::clamp<long long>(k, 0, static_cast<long long>(n) - 2);
  // guard against rounding at grid boundaries
  while (k > 0 && t[k] > tq) --k;
  while (k + 2 < static_cast<long long>(n) && t[k + 1] < tq) ++k;
  return static_cast<size_t>(k);
}

RiccatiSolution solve_riccati(const LQModel& lq, const TerminalFunctional& g, double s,
                              double T, int n_steps) {
  if (!g.is_quadratic())
    throw std::invalid_argument("solve_riccati requires a quadratic terminal cost");
  if (!(T > s)) throw std::invalid_argument("solve_riccati requires T > s");
  if (n_steps < 1) throw std::invalid_argument("solve_riccati requires n_steps >= 1");
  if (lq.noise_dim() != 1)
    throw std::invalid_argument("the Riccati tables are implemented for m = 1");
  const int d = lq.dim();
  if (g.dim() != d) throw std::invalid_argument("terminal cost dimension does not match model");

  const Mat ss = lq.sigma * transpose(lq.sigma);  // d x d
  const Mat Bt = transpose(lq.B);
  const Mat Bsum = lq.B + lq.Bbar;
  const Mat Bsum_t = transpose(Bsum);

  auto rhs = [&](const State& x) {
    State dv;
    // dLambda/dt = -(Lambda B + B^T Lambda) + 2 Lambda ss Lambda
    dv.Lambda = 2.0 * (x.Lambda * ss * x.Lambda) - (x.Lambda * lq.B + Bt * x.Lambda);
    // dGamma/dt = -(Gamma (B+Bbar) + (B+Bbar)^T Gamma) + 2 Gamma ss Gamma
    dv.Gamma = 2.0 * (x.Gamma * ss * x.Gamma) - (x.Gamma * Bsum + Bsum_t * x.Gamma);
    // dgamma/dt = -(B+Bbar)^T gamma + 2 Gamma ss gamma - 2 Gamma b0
    dv.gamma = matvec(x.Gamma, matvec(ss, x.gamma));
    const Vec bterm = matvec(x.Gamma, lq.b0);
    const Vec lin = matvec(Bsum_t, x.gamma);
    for (int i = 0; i < d; ++i) dv.gamma[i] = 2.0 * dv.gamma[i] - lin[i] - 2.0 * bterm[i];
    // dchi/dt = (1/2) gamma^T ss gamma - gamma.b0 - sigma^T Lambda sigma
    dv.chi = 0.5 * quad_form(x.gamma, ss) - dot(x.gamma, lq.b0) - sandwich(lq.sigma, x.Lambda);
    // dcorr/dt = -sigma^T (Gamma - Lambda) sigma
    dv.corr = -sandwich(lq.sigma, x.Gamma - x.Lambda);
    return dv;
  };

  RiccatiSolution sol;
  sol.s = s;
  sol.T = T;
  sol.lq = lq;
  sol.g = g;
  const size_t npts = static_cast<size_t>(n_steps) + 1;
  sol.t.resize(npts);
  sol.Lambda.resize(npts);
  sol.Gamma.resize(npts);
  sol.gamma.resize(npts);
  sol.chi.resize(npts);
  sol.chi_correction.resize(npts);

  State x;
  x.Lambda = g.P2();
  x.Gamma = g.P2() + g.Pbar2();
  x.gamma = g.p1();
  x.chi = g.p2();
  x.corr = 0.0;

  const double h = (T - s) / n_steps;
  auto store = [&](size_t idx, double tv, const State& st) {
    sol.t[idx] = tv;
    sol.Lambda[idx] = st.Lambda;
    sol.Gamma[idx] = st.Gamma;
    sol.gamma[idx] = st.gamma;
    sol.chi[idx] = st.chi;
    sol.chi_correction[idx] = st.corr;
  };
  store(npts - 1, T, x);

  for (int k = 0; k < n_steps; ++k) {
    const double tk = T - k * h;
    const State k1 = rhs(x);
    const State k2 = rhs(axpy(x, -0.5 * h, k1));
    const State k3 = rhs(axpy(x, -0.5 * h, k2));
    const State k4 = rhs(axpy(x, -h, k3));
    State incr = k1;
    incr = axpy(incr, 2.0, k2);
    incr = axpy(incr, 2.0, k3);
    incr = axpy(incr, 1.0, k4);
    x = axpy(x, -h / 6.0, incr);
    symmetrize(x.Lambda);
    symmetrize(x.Gamma);
    if (!finite(x)) throw RiccatiBlowupError(tk - h);
    const size_t idx = npts - 2 - static_cast<size_t>(k);
    store(idx, (idx == 0) ? s : s + static_cast<double>(idx) * h, x);
  }
  return sol;
}

double psi_value(const RiccatiSolution& sol, double t, const EmpiricalMeasure& mu) {
  if (mu.dim() != sol.dim())
    throw std::invalid_argument("measure dimension does not match Riccati solution");
  RiccatiSolution::Coeffs c = sol.at(t);
  const int n = mu.n(), d = mu.dim();
  double quad = 0.0;
  Vec x(d);
  for (int i = 0; i < n; ++i) {
    const double* r = mu.atom(i);
    for (int j = 0; j < d; ++j) x[j] = r[j];
    quad += quad_form(x, c.Lambda);
  }
  quad /= n;
  const Vec& mn = mu.mean();
  return quad + quad_form(mn, c.Gamma - c.Lambda) + dot(c.gamma, mn) + c.chi;
}

double exact_log_value(const RiccatiSolution& sol, int n_particles, double s,
                       const EmpiricalMeasure& initial) {
  if (initial.n() != n_particles)
    throw std::invalid_argument("particle count does not match initial positions");
  RiccatiSolution::Coeffs c = sol.at(s);
  const double base = psi_value(sol, s, initial);
  return -n_particles * base - c.chi_correction;
}

double exact_value(const RiccatiSolution& sol, int n_particles, double s,
                   const EmpiricalMeasure& initial) {
  return std::exp(exact_log_value(sol, n_particles, s, initial));
}

double exact_mc_relative_error(const LQModel& lq, const TerminalFunctional& g,
                               int n_particles, double s, double T,
                               const EmpiricalMeasure& initial, double n_samples,
                               int n_steps) {
  const RiccatiSolution sol1 = solve_riccati(lq, g, s, T, n_steps);
  const RiccatiSolution sol2 = solve_riccati(lq, g.scaled(2.0), s, T, n_steps);
  const double log_ratio = exact_log_value(sol2, n_particles, s, initial) -
                           2.0 * exact_log_value(sol1, n_particles, s, initial);
  if (log_ratio < -1e-12)
    throw std::runtime_error(
        "internal consistency failure: second moment below squared mean (log ratio " +
        std::to_string(log_ratio) + ")");
  const double radicand = std::max(std::expm1(log_ratio), 0.0);
  return std::sqrt(radicand / n_samples);
}

double hjb_residual(const RiccatiSolution& sol, double t, const EmpiricalMeasure& mu) {
  if (mu.dim() != sol.dim())
    throw std::invalid_argument("measure dimension does not match Riccati solution");
  const size_t n = sol.t.size();
  if (n < 3) throw std::invalid_argument("grid too coarse for a centered difference");
  size_t k = sol.grid_index_below(t);
  // snap to nearest interior grid point
  if (k + 1 < n && std::fabs(sol.t[k + 1] - t) < std::fabs(sol.t[k] - t)) ++k;
  if (k == 0 || k + 1 >= n)
    throw std::invalid_argument("time too close to the grid boundary for the residual");

  const double tk = sol.t[k];
  const double dpsi_dt =
      (psi_value(sol, sol.t[k + 1], mu) - psi_value(sol, sol.t[k - 1], mu)) /
      (sol.t[k + 1] - sol.t[k - 1]);

  RiccatiSolution::Coeffs c = sol.at(tk);
  const Mat ss = sol.lq.sigma * transpose(sol.lq.sigma);
  const Mat GmL = c.Gamma - c.Lambda;
  const Vec& mn = mu.mean();
  const int d = mu.dim();

  // H0 = -<b.p - (1/2) p.(ss p) + (1/2) ss : 2 Lambda, mu>,
  // p(z) = 2 Lambda z + 2 (Gamma - Lambda) mean + gamma
  const double trace_term = [&] {
    double tr = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) tr += ss(i, j) * 2.0 * c.Lambda(i, j);
    return tr;
  }();

  Vec x(d), b(d), p(d);
  const Vec shift = [&] {
    Vec r = matvec(GmL, mn);
    for (int j = 0; j < d; ++j) r[j] = 2.0 * r[j] + c.gamma[j];
    return r;
  }();
  double integral = 0.0;
  for (int i = 0; i < mu.n(); ++i) {
    const double* rptr = mu.atom(i);
    for (int j = 0; j < d; ++j) x[j] = rptr[j];
    for (int j = 0; j < d; ++j) {
      double s1 = sol.lq.b0[j];
      for (int l = 0; l < d; ++l) s1 += sol.lq.B(j, l) * x[l] + sol.lq.Bbar(j, l) * mn[l];
      b[j] = s1;
    }
    const Vec Lx = matvec(c.Lambda, x);
    for (int j = 0; j < d; ++j) p[j] = 2.0 * Lx[j] + shift[j];
    integral += dot(b, p) - 0.5 * quad_form(p, ss) + 0.5 * trace_term;
  }
  integral /= mu.n();
  const double H0 = -integral;
  return dpsi_dt - H0;
}

}  // namespace wip
