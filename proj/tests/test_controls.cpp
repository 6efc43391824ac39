#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "wip/controls.hpp"

using namespace wip;

namespace {

TerminalFunctional quad1(double P2, double p1 = 0.0, double Pbar2 = 0.0, double p2 = 0.0) {
  return TerminalFunctional::quadratic(Mat::scalar(P2), Vec{p1}, Mat::scalar(Pbar2), p2);
}

EmpiricalMeasure random_measure(std::mt19937& gen, int n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat p(n, 1);
  for (double& v : p.a) v = dist(gen);
  return EmpiricalMeasure(std::move(p));
}

std::shared_ptr<const RiccatiSolution> sec51_solution() {
  static auto sol = std::make_shared<RiccatiSolution>(
      solve_riccati(LQModel::scalar(0, -1, 2, 0.5), quad1(1.0), 0.0, 1.0, 4000));
  return sol;
}

}  // namespace

TEST_CASE("zero policy") {
  const auto p = ControlPolicy::zero();
  CHECK(p.is_zero());
  std::mt19937 gen(1);
  const auto mu = random_measure(gen, 4);
  CHECK(control_value(p, 0.5, 2, mu) == Vec{0.0});
}

TEST_CASE("lq optimal control") {
  std::mt19937 gen(2);

  SUBCASE("constant control in the decoupled-mean example") {
    const auto sol = std::make_shared<RiccatiSolution>(
        solve_riccati(LQModel::scalar(0, 1, -1, 0.5), quad1(0, 1), 0.0, 1.0, 2000));
    const auto p = ControlPolicy::lq_optimal(sol);
    for (int rep = 0; rep < 10; ++rep) {
      const auto mu = random_measure(gen, 5);
      const double t = 0.09 * rep;
      CHECK(control_value(p, t, rep % 5, mu)[0] == doctest::Approx(-0.5).epsilon(1e-12));
    }
  }

  SUBCASE("matches the coefficient formula") {
    const auto sol = sec51_solution();
    const auto p = ControlPolicy::lq_optimal(sol);
    for (int rep = 0; rep < 10; ++rep) {
      const auto mu = random_measure(gen, 6);
      const double t = 0.05 + 0.09 * rep;
      const auto c = sol->at(t);
      const int i = rep % 6;
      const double expected =
          -0.5 * (2.0 * c.Lambda(0, 0) * mu.atom(i)[0] +
                  2.0 * (c.Gamma(0, 0) - c.Lambda(0, 0)) * mu.mean()[0] + c.gamma[0]);
      CHECK(control_value(p, t, i, mu)[0] == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  SUBCASE("affine in the particle position at fixed mean") {
    const auto sol = sec51_solution();
    const auto p = ControlPolicy::lq_optimal(sol);
    const double t = 0.3;
    const auto c = sol->at(t);
    Mat pos(4, 1);
    pos(0, 0) = 0.1;
    pos(1, 0) = -0.7;
    pos(2, 0) = 0.4;
    pos(3, 0) = 1.2;
    const double h = 1e-6;
    // shift atom 0 up and atom 1 down, which keeps the ensemble mean fixed
    Mat pos_hi = pos, pos_lo = pos;
    pos_hi(0, 0) += h;
    pos_hi(1, 0) -= h;
    pos_lo(0, 0) -= h;
    pos_lo(1, 0) += h;
    const EmpiricalMeasure hi(pos_hi), lo(pos_lo);
    const double slope = (control_value(p, t, 0, hi)[0] - control_value(p, t, 0, lo)[0]) /
                         (2.0 * h);
    CHECK(slope == doctest::Approx(-0.5 * 2.0 * c.Lambda(0, 0)).epsilon(1e-8));

    // shifting the particle alone adds the mean-channel contribution
    Mat own_hi = pos, own_lo = pos;
    own_hi(0, 0) += h;
    own_lo(0, 0) -= h;
    const double slope_own = (control_value(p, t, 0, EmpiricalMeasure(own_hi))[0] -
                              control_value(p, t, 0, EmpiricalMeasure(own_lo))[0]) /
                             (2.0 * h);
    const double expected =
        -0.5 * (2.0 * c.Lambda(0, 0) + 2.0 * (c.Gamma(0, 0) - c.Lambda(0, 0)) / 4.0);
    CHECK(slope_own == doctest::Approx(expected).epsilon(1e-6));
  }

  SUBCASE("rejects times outside the solution interval") {
    const auto p = ControlPolicy::lq_optimal(sec51_solution());
    std::mt19937 g2(3);
    const auto mu = random_measure(g2, 3);
    Vec out(1);
    CHECK_THROWS_AS(p.value(1.5, 0, mu, out.data()), std::invalid_argument);
  }
}

TEST_CASE("sign controls") {
  SUBCASE("ensemble-sign control value") {
    const auto p = ControlPolicy::sign_outside(-1.0, 2.0, 0.5, 1.0);
    const auto mu = EmpiricalMeasure::replicate(Vec{0.3}, 4);
    CHECK(control_value(p, 0.0, 1, mu)[0] ==
          doctest::Approx(-1.359140914229523).epsilon(1e-13));
    const auto neg = EmpiricalMeasure::replicate(Vec{-0.2}, 4);
    CHECK(control_value(p, 0.0, 1, neg)[0] ==
          doctest::Approx(1.359140914229523).epsilon(1e-13));
  }

  SUBCASE("zero argument contributes zero") {
    const auto p = ControlPolicy::sign_outside(-1.0, 2.0, 0.5, 1.0);
    Mat pos(2, 1);
    pos(0, 0) = 1.0;
    pos(1, 0) = -1.0;  // mean exactly zero
    CHECK(control_value(p, 0.2, 0, EmpiricalMeasure(pos))[0] == 0.0);

    const auto pi = ControlPolicy::sign_inside(-1.0, 2.0, 0.5, 1.0);
    Mat z(2, 1);  // atom at zero contributes nothing of its own sign
    z(0, 0) = 0.0;
    z(1, 0) = 0.8;
    const double t = 0.4;
    const double eb = std::exp(-1.0 * (1.0 - t));
    const double ebb = std::exp(1.0 * (1.0 - t));
    CHECK(control_value(pi, t, 0, EmpiricalMeasure(z))[0] ==
          doctest::Approx(-0.5 * (0.0 + (ebb - eb) * 0.5)).epsilon(1e-13));
  }

  SUBCASE("per-particle sign control matches its formula") {
    const auto pi = ControlPolicy::sign_inside(-1.0, 2.0, 0.5, 1.0);
    Mat pos(3, 1);
    pos(0, 0) = 0.7;
    pos(1, 0) = -0.1;
    pos(2, 0) = 0.2;
    const EmpiricalMeasure mu(pos);
    const double t = 0.25;
    const double eb = std::exp(-(1.0 - t));
    const double ebb = std::exp(1.0 - t);
    const double avg = (1.0 - 1.0 + 1.0) / 3.0;
    CHECK(control_value(pi, t, 1, mu)[0] ==
          doctest::Approx(-0.5 * (eb * -1.0 + (ebb - eb) * avg)).epsilon(1e-13));
  }
}

TEST_CASE("controls are exchangeable") {
  std::mt19937 gen(5);
  const auto lq = ControlPolicy::lq_optimal(sec51_solution());
  const auto so = ControlPolicy::sign_outside(-1.0, 2.0, 0.5, 1.0);
  const auto si = ControlPolicy::sign_inside(-1.0, 2.0, 0.5, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    const auto mu = random_measure(gen, 7);
    std::vector<int> perm(7);
    for (int i = 0; i < 7; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), gen);
    Mat shuffled(7, 1);
    for (int i = 0; i < 7; ++i) shuffled(i, 0) = mu.positions()(perm[i], 0);
    const EmpiricalMeasure mu2(shuffled);
    const double t = 0.17 * (rep % 5);
    const int i = rep % 7;
    int i2 = 0;
    while (perm[i2] != i) ++i2;
    for (const auto* p : {&lq, &so, &si})
      CHECK(control_value(*p, t, i, mu)[0] ==
            doctest::Approx(control_value(*p, t, i2, mu2)[0]).epsilon(1e-13));
  }
}

TEST_CASE("sign controls satisfy the crude bound") {
  std::mt19937 gen(6);
  const auto so = ControlPolicy::sign_outside(-1.0, 2.0, 0.5, 1.0);
  const auto si = ControlPolicy::sign_inside(-1.0, 2.0, 0.5, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const auto mu = random_measure(gen, 5);
    const double t = 0.02 * rep;
    const double bound = 2.0 * 0.5 * std::exp(std::max(1.0, 0.0) * (1.0 - t));
    CHECK(std::fabs(control_value(so, t, rep % 5, mu)[0]) <= bound + 1e-12);
    CHECK(std::fabs(control_value(si, t, rep % 5, mu)[0]) <= bound + 1e-12);
  }
}

TEST_CASE("custom controls pass through") {
  const auto p = ControlPolicy::custom(
      1, [](double t, int i, const EmpiricalMeasure&, double* out) { out[0] = t + i; });
  std::mt19937 gen(8);
  const auto mu = random_measure(gen, 3);
  CHECK(control_value(p, 0.25, 2, mu)[0] == 2.25);
  CHECK_THROWS_AS(ControlPolicy::custom(1, nullptr), std::invalid_argument);
}

TEST_CASE("out-of-range particle index is rejected") {
  const auto p = ControlPolicy::zero();
  std::mt19937 gen(9);
  const auto mu = random_measure(gen, 3);
  Vec out(1);
  CHECK_THROWS_AS(p.value(0.0, 3, mu, out.data()), std::invalid_argument);
  CHECK_THROWS_AS(p.value(0.0, -1, mu, out.data()), std::invalid_argument);
}
