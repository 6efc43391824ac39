#include "wip/models.hpp"

#include <stdexcept>

namespace wip {

ModelSpec lq_to_model(const LQModel& lq) {
  const int d = lq.dim();
  const int m = lq.noise_dim();
  if (d < 1 || m < 1 || lq.B.cols != d || lq.Bbar.rows != d || lq.Bbar.cols != d ||
      static_cast<int>(lq.b0.size()) != d || lq.sigma.rows != d)
    throw std::invalid_argument("LQModel has inconsistent dimensions");
  if (!all_finite(lq.B) || !all_finite(lq.Bbar) || !all_finite(lq.sigma) || !all_finite(lq.b0))
    throw std::invalid_argument("LQModel coefficients must be finite");

  ModelSpec spec;
  spec.dim_d = d;
  spec.dim_m = m;
  spec.constant_diffusion = true;
  spec.drift = [lq, d](const double* x, const EmpiricalMeasure& mu, double* out) {
    const Vec& mn = mu.mean();
    for (int i = 0; i < d; ++i) {
      double s = lq.b0[i];
      for (int j = 0; j < d; ++j) s += lq.B(i, j) * x[j] + lq.Bbar(i, j) * mn[j];
      out[i] = s;
    }
  };
  spec.diffusion = [sigma = lq.sigma](const double*, const EmpiricalMeasure&, double* out) {
    std::copy(sigma.a.begin(), sigma.a.end(), out);
  };
  return spec;
}

}  // namespace wip
