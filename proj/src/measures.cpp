#include "wip/measures.hpp"

#include <cmath>
#include <stdexcept>

namespace wip {

EmpiricalMeasure::EmpiricalMeasure(Mat positions) : pos_(std::move(positions)) {
  if (pos_.rows < 1 || pos_.cols < 1)
    throw std::invalid_argument("empirical measure needs n >= 1 atoms in d >= 1 dimensions");
  if (!all_finite(pos_))
    throw std::invalid_argument("empirical measure atoms must be finite");
  mean_.resize(pos_.cols);
  recompute_mean();
}

EmpiricalMeasure EmpiricalMeasure::replicate(const Vec& atom, int n) {
  Mat p(n, static_cast<int>(atom.size()));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p.cols; ++j) p(i, j) = atom[j];
  return EmpiricalMeasure(std::move(p));
}

void EmpiricalMeasure::assign(const double* data) {
  std::copy(data, data + pos_.a.size(), pos_.a.begin());
  recompute_mean();
}

void EmpiricalMeasure::recompute_mean() {
  const int n = pos_.rows, d = pos_.cols;
  for (int j = 0; j < d; ++j) mean_[j] = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* r = pos_.row(i);
    for (int j = 0; j < d; ++j) mean_[j] += r[j];
  }
  const double inv = 1.0 / n;
  for (int j = 0; j < d; ++j) mean_[j] *= inv;
}

Vec mean(const EmpiricalMeasure& mu) { return mu.mean(); }

namespace {

void require_symmetric(const Mat& A, const char* name) {
  if (A.rows != A.cols) throw std::invalid_argument(std::string(name) + " must be square");
  if (max_abs_asym(A) > 1e-12)
    throw std::invalid_argument(std::string(name) + " must be symmetric to 1e-12");
}

// Necessary conditions for PSD only: a negative diagonal entry, or a
// Gershgorin disc lying entirely below zero, certifies a negative eigenvalue.
void screen_psd(const Mat& A, const char* name) {
  for (int i = 0; i < A.rows; ++i) {
    if (A(i, i) < 0.0)
      throw std::invalid_argument(std::string(name) + " has a negative diagonal entry");
    double radius = 0.0;
    for (int j = 0; j < A.cols; ++j)
      if (j != i) radius += std::fabs(A(i, j));
    if (A(i, i) + radius < 0.0)
      throw std::invalid_argument(std::string(name) + " fails the Gershgorin PSD screen");
  }
}

}  // namespace

TerminalFunctional TerminalFunctional::quadratic(Mat P2, Vec p1, Mat Pbar2, double p2,
                                                 bool check_psd) {
  const int d = P2.rows;
  require_symmetric(P2, "P2");
  require_symmetric(Pbar2, "Pbar2");
  if (Pbar2.rows != d || static_cast<int>(p1.size()) != d)
    throw std::invalid_argument("quadratic terminal cost has inconsistent dimensions");
  if (!all_finite(P2) || !all_finite(Pbar2) || !all_finite(p1) || !std::isfinite(p2))
    throw std::invalid_argument("quadratic terminal cost coefficients must be finite");
  if (check_psd) {
    screen_psd(P2, "P2");
    screen_psd(Pbar2, "Pbar2");
  }
  TerminalFunctional g;
  g.kind_ = Kind::quadratic;
  g.dim_ = d;
  g.P2_ = std::move(P2);
  g.p1_ = std::move(p1);
  g.Pbar2_ = std::move(Pbar2);
  g.p2_ = p2;
  return g;
}

TerminalFunctional TerminalFunctional::abs_of_mean() {
  TerminalFunctional g;
  g.kind_ = Kind::abs_of_mean;
  g.dim_ = 1;
  return g;
}

TerminalFunctional TerminalFunctional::mean_of_abs() {
  TerminalFunctional g;
  g.kind_ = Kind::mean_of_abs;
  g.dim_ = 1;
  return g;
}

TerminalFunctional TerminalFunctional::scaled(double c) const {
  if (kind_ != Kind::quadratic)
    throw std::invalid_argument("scaled() is defined for quadratic terminal costs only");
  Vec p1c = p1_;
  for (double& v : p1c) v *= c;
  return quadratic(c * P2_, std::move(p1c), c * Pbar2_, c * p2_, /*check_psd=*/false);
}

double evaluate_G(const TerminalFunctional& g, const EmpiricalMeasure& mu) {
  switch (g.kind()) {
    case TerminalFunctional::Kind::quadratic: {
      if (mu.dim() != g.dim())
        throw std::invalid_argument("terminal cost dimension does not match measure");
      const int n = mu.n(), d = mu.dim();
      double acc = 0.0;
      Vec x(d);
      for (int i = 0; i < n; ++i) {
        const double* r = mu.atom(i);
        for (int j = 0; j < d; ++j) x[j] = r[j];
        acc += quad_form(x, g.P2()) + dot(g.p1(), x);
      }
      acc /= n;
      return acc + quad_form(mu.mean(), g.Pbar2()) + g.p2();
    }
    case TerminalFunctional::Kind::abs_of_mean: {
      if (mu.dim() != 1)
        throw std::invalid_argument("abs_of_mean requires one-dimensional state");
      return std::fabs(mu.mean()[0]);
    }
    case TerminalFunctional::Kind::mean_of_abs: {
      if (mu.dim() != 1)
        throw std::invalid_argument("mean_of_abs requires one-dimensional state");
      const int n = mu.n();
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += std::fabs(mu.atom(i)[0]);
      return acc / n;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace wip
