#pragma once

#include <functional>
#include <memory>
#include <variant>

#include "wip/riccati.hpp"

namespace wip {

// Feedback control v(t, i, state) applied through the diffusion matrix.
// Built-in variants:
//   zero          v = 0
//   lq_optimal    v = -sigma^T [2 Lambda(t) x_i + 2 (Gamma(t)-Lambda(t)) mean + gamma(t)]
//   sign_outside  v = -sigma e^{(B+Bbar)(T-t)} sign(mean)                       (d = 1)
//   sign_inside   v = -sigma [e^{B(T-t)} sign(x_i)
//                             + (e^{(B+Bbar)(T-t)} - e^{B(T-t)}) avg_j sign(x_j)] (d = 1)
// sign(0) is taken as 0.
class ControlPolicy {
 public:
  using CustomFn =
      std::function<void(double t, int i, const EmpiricalMeasure& state, double* out)>;

  static ControlPolicy zero(int dim_m = 1);
  static ControlPolicy lq_optimal(std::shared_ptr<const RiccatiSolution> sol);
  static ControlPolicy sign_outside(double B, double Bbar, double sigma, double T);
  static ControlPolicy sign_inside(double B, double Bbar, double sigma, double T);
  // Custom controls must be bounded on bounded state sets; nothing is clipped.
  static ControlPolicy custom(int dim_m, CustomFn fn);

  int dim_m() const { return dim_m_; }
  bool is_zero() const { return std::holds_alternative<Zero>(v_); }

  // Writes the m-vector control for particle i into out.
  void value(double t, int i, const EmpiricalMeasure& state, double* out) const;

 private:
  struct Zero {};
  struct LQOptimal {
    std::shared_ptr<const RiccatiSolution> sol;
  };
  struct SignOutside {
    double B, Bbar, sigma, T;
  };
  struct SignInside {
    double B, Bbar, sigma, T;
  };
  struct Custom {
    CustomFn fn;
  };

  ControlPolicy() = default;
  std::variant<Zero, LQOptimal, SignOutside, SignInside, Custom> v_;
  int dim_m_ = 1;
};

void control_value(const ControlPolicy& policy, double t, int i,
                   const EmpiricalMeasure& state, double* out);
Vec control_value(const ControlPolicy& policy, double t, int i,
                  const EmpiricalMeasure& state);

}  // namespace wip
