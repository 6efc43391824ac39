#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace wip {

using Vec = std::vector<double>;

// Dense row-major matrix. Sized for small state dimensions (d, m of the
// particle system), not for large linear algebra.
struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0)
      : rows(r), cols(c), a(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {}

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rs) {
    Mat m(static_cast<int>(rs.size()), rs.size() ? static_cast<int>(rs.begin()->size()) : 0);
    int i = 0;
    for (const auto& r : rs) {
      if (static_cast<int>(r.size()) != m.cols) throw std::invalid_argument("ragged matrix rows");
      int j = 0;
      for (double v : r) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  static Mat scalar(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return m;
  }

  static Mat col(const Vec& v) {
    Mat m(static_cast<int>(v.size()), 1);
    m.a = v;
    return m;
  }

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
  const double* row(int i) const { return a.data() + static_cast<size_t>(i) * cols; }
  double* row(int i) { return a.data() + static_cast<size_t>(i) * cols; }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  bool empty() const { return rows == 0 || cols == 0; }
};

inline Mat operator+(const Mat& x, const Mat& y) {
  Mat r = x;
  for (size_t k = 0; k < r.a.size(); ++k) r.a[k] += y.a[k];
  return r;
}

inline Mat operator-(const Mat& x, const Mat& y) {
  Mat r = x;
  for (size_t k = 0; k < r.a.size(); ++k) r.a[k] -= y.a[k];
  return r;
}

inline Mat operator*(double c, const Mat& x) {
  Mat r = x;
  for (double& v : r.a) v *= c;
  return r;
}

inline Mat operator*(const Mat& x, const Mat& y) {
  Mat r(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      const double xik = x(i, k);
      for (int j = 0; j < y.cols; ++j) r(i, j) += xik * y(k, j);
    }
  return r;
}

inline Mat transpose(const Mat& x) {
  Mat r(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) r(j, i) = x(i, j);
  return r;
}

inline Vec matvec(const Mat& x, const Vec& v) {
  Vec r(x.rows, 0.0);
  for (int i = 0; i < x.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < x.cols; ++j) s += x(i, j) * v[j];
    r[i] = s;
  }
  return r;
}

inline double dot(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  return s;
}

// x^T A x
inline double quad_form(const Vec& x, const Mat& A) {
  double s = 0.0;
  for (int i = 0; i < A.rows; ++i) {
    double t = 0.0;
    for (int j = 0; j < A.cols; ++j) t += A(i, j) * x[j];
    s += x[i] * t;
  }
  return s;
}

// max_ij |A_ij - A_ji|
inline double max_abs_asym(const Mat& A) {
  double m = 0.0;
  for (int i = 0; i < A.rows; ++i)
    for (int j = i + 1; j < A.cols; ++j) m = std::max(m, std::fabs(A(i, j) - A(j, i)));
  return m;
}

inline void symmetrize(Mat& A) {
  for (int i = 0; i < A.rows; ++i)
    for (int j = i + 1; j < A.cols; ++j) {
      const double v = 0.5 * (A(i, j) + A(j, i));
      A(i, j) = v;
      A(j, i) = v;
    }
}

inline bool all_finite(const double* p, size_t n) {
  for (size_t k = 0; k < n; ++k)
    if (!std::isfinite(p[k])) return false;
  return true;
}

inline bool all_finite(const Mat& m) { return all_finite(m.a.data(), m.a.size()); }
inline bool all_finite(const Vec& v) { return all_finite(v.data(), v.size()); }

}  // namespace wip
