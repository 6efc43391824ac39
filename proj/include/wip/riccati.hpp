#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "wip/measures.hpp"
#include "wip/models.hpp"

namespace wip {

// Finite-time blowup detected while integrating the Riccati system.
struct RiccatiBlowupError : std::runtime_error {
  double time;
  explicit RiccatiBlowupError(double t)
      : std::runtime_error("Riccati integration blew up near t = " + std::to_string(t)),
        time(t) {}
};

// Backward-in-time coefficient tables for the quadratic value ansatz
//   Psi(t, mu) = <z^T Lambda(t) z, mu> + mean^T [Gamma(t) - Lambda(t)] mean
//                + gamma(t).mean + chi(t)
// on a uniform grid over [s, T], plus the finite-size correction integral
//   chi_correction(t) = int_t^T sigma^T [Gamma(tau) - Lambda(tau)] sigma dtau
// stored N-free: the exact finite-N value uses chi(t) + chi_correction(t)/N.
struct RiccatiSolution {
  double s = 0.0, T = 1.0;
  std::vector<double> t;                       // ascending, t.front()=s, t.back()=T
  std::vector<Mat> Lambda, Gamma;              // d x d per grid point
  std::vector<Vec> gamma;                      // d per grid point
  std::vector<double> chi, chi_correction;     // scalars per grid point
  LQModel lq;
  TerminalFunctional g = TerminalFunctional::abs_of_mean();  // quadratic, set by solver

  struct Coeffs {
    Mat Lambda, Gamma;
    Vec gamma;
    double chi = 0.0, chi_correction = 0.0;
  };

  // Linear interpolation between grid points; throws outside [s, T].
  void eval(double tq, Coeffs& out) const;
  Coeffs at(double tq) const;

  int dim() const { return lq.dim(); }
  size_t grid_index_below(double tq) const;
};

RiccatiSolution solve_riccati(const LQModel& lq, const TerminalFunctional& g, double s,
                              double T, int n_steps = 10000);

// Psi(t, mu) with coefficients interpolated on the grid.
double psi_value(const RiccatiSolution& sol, double t, const EmpiricalMeasure& mu);

// log and plain value of E[exp(-N G(mu_T))] started from atoms y at time s.
double exact_log_value(const RiccatiSolution& sol, int n_particles, double s,
                       const EmpiricalMeasure& initial);
double exact_value(const RiccatiSolution& sol, int n_particles, double s,
                   const EmpiricalMeasure& initial);

// Relative error of the plain Monte Carlo estimator with n_samples samples,
// computed from the exact values of the original and doubled terminal costs.
double exact_mc_relative_error(const LQModel& lq, const TerminalFunctional& g,
                               int n_particles, double s, double T,
                               const EmpiricalMeasure& initial, double n_samples,
                               int n_steps = 10000);

// d_t Psi - H0(mu, dPsi/dmu, d_z dPsi/dmu) evaluated at the grid point nearest
// to t (time derivative by centered difference). Near zero for a solution.
double hjb_residual(const RiccatiSolution& sol, double t, const EmpiricalMeasure& mu);

}  // namespace wip
