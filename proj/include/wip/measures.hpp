#pragma once

#include <string>

#include "wip/linalg.hpp"

namespace wip {

// Uniform empirical measure on n atoms in R^d, stored as an n x d matrix with
// a cached mean. Instances are immutable once shared between threads; assign()
// exists so a single owner can reuse the buffer along a simulated path.
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(Mat positions);
  static EmpiricalMeasure replicate(const Vec& atom, int n);

  int n() const { return pos_.rows; }
  int dim() const { return pos_.cols; }
  const Mat& positions() const { return pos_; }
  const double* atom(int i) const { return pos_.row(i); }
  const Vec& mean() const { return mean_; }

  // Overwrites all atoms from a row-major n x d buffer and recomputes the
  // mean. No finiteness checks; callers in hot loops do their own.
  void assign(const double* data);

 private:
  Mat pos_;
  Vec mean_;
  void recompute_mean();
};

Vec mean(const EmpiricalMeasure& mu);

// Terminal cost G evaluated on empirical measures:
//   quadratic:   (1/n) sum_i (x_i^T P2 x_i + p1.x_i) + mean^T Pbar2 mean + p2
//   abs_of_mean: |mean| (d = 1)
//   mean_of_abs: (1/n) sum_i |x_i| (d = 1)
class TerminalFunctional {
 public:
  enum class Kind { quadratic, abs_of_mean, mean_of_abs };

  // check_psd enables a cheap necessary-condition screen (nonnegative
  // diagonal, no all-negative Gershgorin disc) on P2 and Pbar2. It never
  // rejects a PSD matrix.
  static TerminalFunctional quadratic(Mat P2, Vec p1, Mat Pbar2, double p2,
                                      bool check_psd = true);
  static TerminalFunctional abs_of_mean();
  static TerminalFunctional mean_of_abs();

  Kind kind() const { return kind_; }
  bool is_quadratic() const { return kind_ == Kind::quadratic; }
  int dim() const { return dim_; }

  const Mat& P2() const { return P2_; }
  const Vec& p1() const { return p1_; }
  const Mat& Pbar2() const { return Pbar2_; }
  double p2() const { return p2_; }

  // c*G; quadratic only.
  TerminalFunctional scaled(double c) const;

 private:
  TerminalFunctional() = default;
  Kind kind_ = Kind::abs_of_mean;
  int dim_ = 1;
  Mat P2_, Pbar2_;
  Vec p1_;
  double p2_ = 0.0;
};

double evaluate_G(const TerminalFunctional& g, const EmpiricalMeasure& mu);

}  // namespace wip
