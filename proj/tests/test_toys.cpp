#include "support.hpp"
#include "tsinfer/diagnostics.hpp"
#include "tsinfer/toys.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace tsinfer;
using testing::vec;

TEST_SUITE("toys") {

TEST_CASE("rosenbrock hand values") {
  CHECK(toys::rosenbrock(vec({1, 1})) == 0.0);
  CHECK(toys::rosenbrock(vec({0, 0})) == 1.0);
  CHECK(toys::rosenbrock(vec({-1, 1})) == 4.0);
}

TEST_CASE("logistic model satisfies its ODE") {
  const double r = 0.8, k = 12.0;
  const toys::LogisticModel m(0.5);
  const double h = 1e-5;
  for (int i = 0; i < 100; ++i) {
    const double t = 0.05 + 0.1 * i;
    const Matrix y = m.simulate(vec({r, k}), vec({t - h, t, t + h}));
    const double dy = (y(2, 0) - y(0, 0)) / (2 * h);
    CHECK(std::abs(dy - r * y(1, 0) * (1 - y(1, 0) / k)) < 1e-8);
  }
}

TEST_CASE("gaussian target at its mean") {
  const toys::GaussianLogPDF g(vec({3, -2}), Matrix::Identity(2, 2));
  CHECK(g(vec({3, -2})) == doctest::Approx(-std::log(2 * std::numbers::pi)));
}

TEST_CASE("twisted gaussian with zero warp is its underlying gaussian") {
  const toys::TwistedGaussianLogPDF twisted(0.0, 100.0);
  Matrix cov(2, 2);
  cov << 100, 0, 0, 1;
  const toys::GaussianLogPDF plain(vec({0, 0}), cov);
  RandomSource rng(5);
  for (int i = 0; i < 100; ++i) {
    const Vector p = vec({10 * rng.normal(), rng.normal()});
    CHECK(twisted(p) == doctest::Approx(plain(p)).epsilon(1e-14));
  }
}

TEST_CASE("twisted gaussian is normalised") {
  // Grid integral of exp(logpdf) over a box holding essentially all the mass.
  const toys::TwistedGaussianLogPDF t(0.1, 100.0);
  double sum = 0.0;
  const double hx = 0.1, hy = 0.1;
  for (double x = -60; x <= 60; x += hx)
    for (double y = -400; y <= 20; y += hy) sum += std::exp(t(vec({x, y})));
  CHECK(sum * hx * hy == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("bimodal with zero separation is unimodal") {
  const toys::BimodalLogPDF b(0.0, 0.5);
  RandomSource rng(21);
  Matrix xs(2000, 1);
  for (Index i = 0; i < xs.rows(); ++i) xs(i, 0) = rng.normal();
  CHECK(distribution_check(xs, {normal_cdf(0, 1)}).passed);
  CHECK(distribution_check(xs, {[&b](double x) { return b.cdf(x); }}).passed);
  CHECK(b(vec({0.7})) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi) - 0.245));
}

TEST_CASE("bimodal cdf is the mixture cdf") {
  const toys::BimodalLogPDF b(10.0, 0.3);
  const auto lo = normal_cdf(-5, 1), hi = normal_cdf(5, 1);
  for (double x : {-8.0, -5.0, 0.0, 4.0, 7.0})
    CHECK(b.cdf(x) == doctest::Approx(0.3 * lo(x) + 0.7 * hi(x)));
  // Density integrates to one.
  double sum = 0.0;
  for (double x = -15; x <= 15; x += 0.001) sum += std::exp(b(vec({x})));
  CHECK(sum * 0.001 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("toy densities are finite on their support") {
  const toys::TwistedGaussianLogPDF t;
  const toys::BimodalLogPDF b;
  RandomSource rng(2);
  for (int i = 0; i < 1000; ++i) {
    CHECK(std::isfinite(t(50.0 * rng.normal(2))));
    CHECK(std::isfinite(b(20.0 * rng.normal(1))));
  }
}

TEST_CASE("synthetic data") {
  auto model = std::make_shared<toys::LogisticModel>();
  const Vector t = Vector::LinSpaced(50, 0, 20);
  const Vector truth = vec({0.5, 10});

  SUBCASE("noiseless data equal the simulation") {
    RandomSource rng(1);
    const auto d = toys::generate_synthetic_data(model, truth, t, 0.0, rng);
    CHECK((d.problem->observations().array() == model->simulate(truth, t).array()).all());
    CHECK(d.true_parameters == truth);
  }
  SUBCASE("fixed seed gives identical data") {
    RandomSource a(9), b(9);
    const auto x = toys::generate_synthetic_data(model, truth, t, 0.1, a);
    const auto y = toys::generate_synthetic_data(model, truth, t, 0.1, b);
    CHECK((x.problem->observations().array() == y.problem->observations().array()).all());
  }
  SUBCASE("residual spread matches sigma") {
    auto c = std::make_shared<toys::ConstantModel>();
    RandomSource rng(3);
    const Vector times = Vector::LinSpaced(10000, 0, 1);
    const auto d = toys::generate_synthetic_data(c, vec({2.0}), times, 0.25, rng);
    const Vector r = d.problem->observations().col(0).array() - 2.0;
    const double sd = std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
    CHECK(sd == doctest::Approx(0.25).epsilon(0.03));
  }
}

}  // TEST_SUITE
