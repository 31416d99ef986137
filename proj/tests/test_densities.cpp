#include "support.hpp"
#include "tsinfer/densities.hpp"
#include "tsinfer/measures.hpp"
#include "tsinfer/toys.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace tsinfer;
using testing::FunctionLogPDF;
using testing::vec;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);
const double kInf = std::numeric_limits<double>::infinity();

std::shared_ptr<const TimeSeriesProblem> constant_problem(const Vector& obs) {
  return std::make_shared<TimeSeriesProblem>(std::make_shared<toys::ConstantModel>(),
                                             Vector::LinSpaced(obs.size(), 0, 1), obs);
}

}  // namespace

TEST_SUITE("densities") {

TEST_CASE("known-sigma likelihood closed forms") {
  CHECK(gaussian_log_likelihood_known_sigma(*constant_problem(vec({2})), vec({1}), vec({2})) ==
        doctest::Approx(-0.918938533204673));
  CHECK(gaussian_log_likelihood_known_sigma(*constant_problem(vec({2, 2, 2, 2})), vec({1}),
                                            vec({2})) == doctest::Approx(-3.675754132818691));
  CHECK_THROWS_AS(GaussianLogLikelihoodKnownSigma(constant_problem(vec({1})), 0.0),
                  ContractViolation);
  CHECK_THROWS_AS(GaussianLogLikelihoodKnownSigma(constant_problem(vec({1})), -1.0),
                  ContractViolation);
}

TEST_CASE("known-sigma likelihood matches an SSE-based formula") {
  auto logistic = std::make_shared<toys::LogisticModel>();
  const Vector t = Vector::LinSpaced(40, 0, 20);
  Vector obs(40);
  RandomSource rng(1);
  for (Index i = 0; i < 40; ++i) obs(i) = 5.0 + rng.normal();
  auto problem = std::make_shared<TimeSeriesProblem>(logistic, t, obs);
  const GaussianLogLikelihoodKnownSigma like(problem, 0.7);
  const double n = 40.0, s = 0.7;
  for (int k = 0; k < 50; ++k) {
    const Vector p = vec({rng.uniform(0.1, 2), rng.uniform(1, 15)});
    const double sse = sum_of_squares_error(*problem, p);
    const double expected = -0.5 * n * std::log(2 * std::numbers::pi * s * s) - sse / (2 * s * s);
    CHECK(like(p) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("known-sigma likelihood ranks in reverse SSE order") {
  const auto problem = constant_problem(vec({1, 3, 2}));
  const GaussianLogLikelihoodKnownSigma like(problem, 1.0);
  for (double a : {-1.0, 0.5, 2.0})
    for (double b : {1.5, 2.0, 4.0}) {
      const bool by_like = like(vec({a})) > like(vec({b}));
      const bool by_sse =
          sum_of_squares_error(*problem, vec({a})) < sum_of_squares_error(*problem, vec({b}));
      CHECK(by_like == by_sse);
    }
}

TEST_CASE("unknown-sigma likelihood") {
  const auto problem = constant_problem(vec({2}));
  const GaussianLogLikelihood like(problem);
  CHECK(like.n_parameters() == 2);
  CHECK(like(vec({2, 0})) == -kInf);
  CHECK(like(vec({2, -1})) == -kInf);
  CHECK(like(vec({2, 1})) ==
        gaussian_log_likelihood_known_sigma(*problem, vec({1}), vec({2})));
}

TEST_CASE("unknown-sigma maximiser is sqrt(SSE / N)") {
  // Residuals [1, -1]: model constant 0 against observations [-1, 1].
  const auto problem = constant_problem(vec({-1, 1}));
  const GaussianLogLikelihood like(problem);
  // Golden-section search over sigma as an independent 1-D oracle.
  double a = 0.05, b = 5.0;
  const double g = (std::sqrt(5.0) - 1) / 2;
  for (int i = 0; i < 200; ++i) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (like(vec({0, c})) > like(vec({0, d})))
      b = d;
    else
      a = c;
  }
  CHECK(0.5 * (a + b) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("multi-output sigma order follows output order") {
  Matrix obs(3, 2);
  obs << 1, 5, 2, 8, 3, 7;
  auto problem = std::make_shared<TimeSeriesProblem>(std::make_shared<toys::ConstantModel>(2),
                                                     vec({0, 1, 2}), obs);
  const GaussianLogLikelihood like(problem);
  const Vector p = vec({2, 6, 0.5, 3.0});
  CHECK(like(p) ==
        doctest::Approx(gaussian_log_likelihood_known_sigma(*problem, vec({0.5, 3.0}),
                                                            vec({2, 6}))));
  CHECK(like(p) !=
        doctest::Approx(gaussian_log_likelihood_known_sigma(*problem, vec({3.0, 0.5}),
                                                            vec({2, 6}))));
}

TEST_CASE("uniform prior") {
  const UniformLogPrior unit(vec({0, 0}), vec({1, 1}));
  CHECK(unit(vec({0.5, 0.5})) == 0.0);
  CHECK(unit(vec({0.0, 0.0})) == 0.0);
  CHECK(unit(vec({1.0, 0.5})) == -kInf);
  CHECK(unit(vec({0.5, 1.0 + 1e-12})) == -kInf);
  CHECK(unit(vec({-1e-300, 0.5})) == -kInf);

  const UniformLogPrior box(vec({0, 0}), vec({2, 5}));
  CHECK(box(vec({1, 1})) == doctest::Approx(-2.302585092994046));
  CHECK_THROWS_AS(UniformLogPrior(vec({0, 1}), vec({1, 1})), ContractViolation);
}

TEST_CASE("uniform prior integrates to one") {
  const UniformLogPrior prior(vec({-1, 2}), vec({3, 2.5}));
  // Monte Carlo over an enclosing box of volume 5 * 2 = 10.
  RandomSource rng(2);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Vector p = vec({rng.uniform(-2, 3), rng.uniform(1.5, 3.5)});
    sum += std::exp(prior(p));
  }
  CHECK(10.0 * sum / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("uniform prior samples lie in the half-open box") {
  const UniformLogPrior prior(vec({-1, 0}), vec({1, 1e-300}));
  RandomSource rng(3);
  for (int i = 0; i < 10000; ++i) CHECK(prior.contains(prior.sample(rng)));
}

TEST_CASE("gaussian prior closed forms") {
  for (Index d : {1, 2, 5}) {
    const GaussianLogPrior p(Vector::Zero(d), Matrix::Identity(d, d));
    CHECK(p(Vector::Zero(d)) == doctest::Approx(-0.5 * static_cast<double>(d) * kLog2Pi));
  }
  const GaussianLogPrior one(vec({0}), Matrix::Identity(1, 1));
  CHECK(one(vec({1})) == doctest::Approx(-1.418938533204673));

  Matrix cov(2, 2);
  cov << 2, 0.6, 0.6, 1;
  const GaussianLogPrior g(vec({1, -1}), cov);
  const Vector v = vec({0.3, -0.8});
  CHECK(g(vec({1, -1}) + v) == doctest::Approx(g(vec({1, -1}) - v)).epsilon(1e-15));

  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(GaussianLogPrior(vec({0, 0}), bad), ContractViolation);
}

TEST_CASE("gaussian prior samples have the right moments") {
  Matrix cov(2, 2);
  cov << 2, 0.6, 0.6, 1;
  const GaussianLogPrior g(vec({1, -1}), cov);
  RandomSource rng(8);
  const int n = 100000;
  Matrix xs(n, 2);
  for (int i = 0; i < n; ++i) xs.row(i) = g.sample(rng).transpose();
  const Vector mean = xs.colwise().mean();
  const Matrix centred = xs.rowwise() - mean.transpose();
  const Matrix s = centred.transpose() * centred / (n - 1);
  CHECK((mean - vec({1, -1})).norm() < 0.02);
  CHECK((s - cov).norm() / cov.norm() < 0.02);
}

TEST_CASE("composed prior") {
  auto unit = std::make_shared<UniformLogPrior>(vec({0}), vec({1}));
  auto unit2 = std::make_shared<UniformLogPrior>(vec({0, 0}), vec({1, 1}));

  SUBCASE("single component is identity") {
    const ComposedLogPrior c({unit2});
    RandomSource rng(1);
    for (int i = 0; i < 20; ++i) {
      const Vector p = vec({rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5)});
      CHECK(c(p) == (*unit2)(p));
    }
  }
  SUBCASE("two unit boxes give zero inside the square") {
    CHECK(composed_log_prior({unit, unit}, vec({0.2, 0.9})) == 0.0);
  }
  SUBCASE("any component out of support absorbs") {
    auto g = std::make_shared<GaussianLogPrior>(vec({0}), Matrix::Identity(1, 1));
    CHECK(composed_log_prior({g, unit}, vec({0.0, 2.0})) == -kInf);
    CHECK(composed_log_prior({unit, g}, vec({-1.0, 0.0})) == -kInf);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(composed_log_prior({unit, unit}, vec({0.5})), ContractViolation);
  }
  SUBCASE("two gaussians equal a block-diagonal joint") {
    Matrix a(2, 2);
    a << 1.5, -0.4, -0.4, 0.8;
    Matrix b(1, 1);
    b << 2.5;
    auto ga = std::make_shared<GaussianLogPrior>(vec({0.1, 0.2}), a);
    auto gb = std::make_shared<GaussianLogPrior>(vec({-3}), b);
    Matrix joint = Matrix::Zero(3, 3);
    joint.topLeftCorner(2, 2) = a;
    joint(2, 2) = 2.5;
    const GaussianLogPrior full(vec({0.1, 0.2, -3}), joint);
    const ComposedLogPrior composed({ga, gb});
    RandomSource rng(6);
    for (int i = 0; i < 100; ++i) {
      const Vector p = 2.0 * rng.normal(3);
      CHECK(composed(p) == doctest::Approx(full(p)).epsilon(1e-12));
    }
  }
}

TEST_CASE("log posterior") {
  auto unit = std::make_shared<UniformLogPrior>(vec({0}), vec({1}));
  auto like = std::make_shared<FunctionLogPDF>(1, [](const Vector& p) { return -p(0) * 4; });

  SUBCASE("prior outside support short-circuits") {
    const LogPosterior post(like, unit);
    CHECK(log_posterior(post, vec({1.5})) == -kInf);
    CHECK(like->calls == 0);
  }
  SUBCASE("flat prior leaves the likelihood unchanged") {
    const LogPosterior post(like, unit);
    CHECK(post(vec({0.25})) == (*like)(vec({0.25})));
  }
  SUBCASE("unit box plus known-sigma likelihood at a perfect fit") {
    auto problem = constant_problem(vec({0.5}));
    auto ks = std::make_shared<GaussianLogLikelihoodKnownSigma>(problem, 1.0);
    const LogPosterior post(ks, unit);
    CHECK(post(vec({0.5})) == doctest::Approx(-0.918938533204673));
  }
  SUBCASE("dimension mismatch") {
    auto two = std::make_shared<UniformLogPrior>(vec({0, 0}), vec({1, 1}));
    CHECK_THROWS_AS(LogPosterior(like, two), ContractViolation);
  }
}

TEST_CASE("densities never return NaN or +infinity") {
  auto problem = constant_problem(vec({1, 2, 3}));
  const GaussianLogLikelihood like(problem);
  const GaussianLogLikelihoodKnownSigma ks(problem, 0.3);
  const UniformLogPrior u(vec({-1, 0}), vec({1, 2}));
  const GaussianLogPrior g(vec({0, 0}), Matrix::Identity(2, 2));
  RandomSource rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Vector p = 1e3 * rng.normal(2);
    for (double v : {like(p), ks(p.head(1)), u(p), g(p)}) {
      CHECK_FALSE(std::isnan(v));
      CHECK(v != kInf);
    }
  }
}

}  // TEST_SUITE
