#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "spdelab/errors.hpp"
#include "spdelab/spectral.hpp"

using namespace spdelab;

namespace {

// Independent high-precision summation oracle: long double terms added from
// the small end up.
long double power_sum_oracle(double scale, double exponent, std::size_t m) {
  long double acc = 0.0L;
  for (std::size_t i = m; i >= 1; --i) {
    acc += static_cast<long double>(scale) *
           std::pow(static_cast<long double>(i),
                    static_cast<long double>(-exponent));
    if (i == 1) break;
  }
  return acc;
}

}  // namespace

TEST_CASE("trace of power(1,2) at M=10000 approaches the Basel value") {
  const DiagonalOperator op = DiagonalOperator::power(1.0, 2.0, 10000);
  const TraceResult tr = trace(op);
  const long double oracle = power_sum_oracle(1.0, 2.0, 10000);
  CHECK(tr.value == doctest::Approx(static_cast<double>(oracle)).epsilon(1e-13));
  // zeta(2) = pi^2/6
  const double basel = 1.6449340668482264;
  CHECK(std::abs(tr.value - 1.644834) < 1e-4);
  REQUIRE(tr.tail_estimate.has_value());
  CHECK(*tr.tail_estimate <= 1e-4 + 1e-12);
  CHECK(tr.value + *tr.tail_estimate >= basel);  // integral tail is an upper bound
}

TEST_CASE("trace handles explicit lists and rejects indefinite operators") {
  CHECK(trace(DiagonalOperator::explicit_list({0.0, 0.0, 0.0})).value == 0.0);
  CHECK(trace(DiagonalOperator::explicit_list({2.0, 1.0, 0.5})).value == 3.5);
  CHECK_THROWS_AS(trace(DiagonalOperator::explicit_list({1.0, -1.0})), Error);
}

TEST_CASE("op_norm takes the absolute maximum") {
  CHECK(op_norm(DiagonalOperator::explicit_list({2.0, 1.0, 0.5})) == 2.0);
  CHECK(op_norm(DiagonalOperator::power(3.0, 1.5, 50)) == 3.0);
  CHECK(op_norm(DiagonalOperator::explicit_list({-1.0, 0.5})) == 1.0);
  CHECK_THROWS_AS(DiagonalOperator::explicit_list({}), Error);
}

TEST_CASE("cameron_martin_norm formula and error paths") {
  const DiagonalOperator q = DiagonalOperator::explicit_list({4.0, 1.0});
  CHECK(cameron_martin_norm(SpectralVector({1.0, 0.0}), q) ==
        doctest::Approx(0.5));
  CHECK(cameron_martin_norm(SpectralVector({0.0, 0.0}), q) == 0.0);

  // v_m = m^{-2} against q = power(1,2): sum m^{-2} truncated at 100.
  const std::size_t m = 100;
  const DiagonalOperator qp = DiagonalOperator::power(1.0, 2.0, m);
  const SpectralVector v = SpectralVector::from_fn(
      m, [](std::size_t i) { return std::pow(double(i), -2.0); });
  const long double oracle = power_sum_oracle(1.0, 2.0, m);
  CHECK(cameron_martin_norm(v, qp) ==
        doctest::Approx(std::sqrt(static_cast<double>(oracle))).epsilon(1e-12));
  CHECK(std::abs(cameron_martin_norm(v, qp) - 1.2787) < 1e-3);

  const DiagonalOperator qz = DiagonalOperator::explicit_list({1.0, 0.0});
  CHECK_THROWS_AS(cameron_martin_norm(SpectralVector({1.0, 1.0}), qz),
                  NotInCameronMartin);
  CHECK(cameron_martin_norm(SpectralVector({1.0, 0.0}), qz) == 1.0);
}

TEST_CASE("embedding inequality: cm norm dominates H norm / sqrt(op norm)") {
  const DiagonalOperator q = DiagonalOperator::power(1.3, 2.0, 32);
  for (int trial = 0; trial < 50; ++trial) {
    const SpectralVector v = SpectralVector::from_fn(32, [&](std::size_t i) {
      return rng::normal(11, rng::Stream::audit,
                         static_cast<std::uint32_t>(trial),
                         static_cast<std::uint32_t>(i), 0);
    });
    CHECK(cameron_martin_norm(v, q) >=
          v.norm() / std::sqrt(op_norm(q)) - 1e-12);
  }
}

TEST_CASE("trace dominates op_norm for nonnegative operators") {
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> eigs(8);
    for (std::size_t k = 0; k < 8; ++k) {
      eigs[k] = rng::uniform(13, rng::Stream::audit,
                             static_cast<std::uint32_t>(trial),
                             static_cast<std::uint32_t>(k), 0);
    }
    const DiagonalOperator op = DiagonalOperator::explicit_list(eigs);
    CHECK(trace(op).value >= op_norm(op) - 1e-12);
  }
}

TEST_CASE("sample_gaussian is deterministic and nearly degenerate at tiny cov") {
  const GaussianSpec spec(
      SpectralVector({1.0, -2.0, 3.0}),
      DiagonalOperator::explicit_list({1e-30, 1e-30, 1e-30}));
  const SpectralVector a = sample_gaussian(spec, 5, 0);
  const SpectralVector b = sample_gaussian(spec, 5, 0);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(a[k] == b[k]);
    CHECK(std::abs(a[k] - spec.mean()[k]) < 1e-10);
  }
  CHECK(sample_gaussian(spec, 5, 1)[0] != a[0]);
}

TEST_CASE("sampler matches first and second moments at the MC rate") {
  const int n = 100000;
  const GaussianSpec spec(SpectralVector({0.0, 0.0}),
                          DiagonalOperator::explicit_list({1.0, 4.0}));
  double s[2] = {0, 0}, s2[2] = {0, 0};
  for (int i = 0; i < n; ++i) {
    const SpectralVector x =
        sample_gaussian(spec, 21, static_cast<std::uint32_t>(i));
    for (int k = 0; k < 2; ++k) {
      s[k] += x[static_cast<std::size_t>(k)];
      s2[k] += x[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
    }
  }
  for (int k = 0; k < 2; ++k) {
    const double var_true = spec.cov()[static_cast<std::size_t>(k)];
    const double mean = s[k] / n;
    const double var = s2[k] / n - mean * mean;
    const double se_mean = std::sqrt(var_true / n);
    const double se_var = var_true * std::sqrt(2.0 / (n - 1.0));
    CHECK(std::abs(mean) < 3.0 * se_mean);
    CHECK(std::abs(var - var_true) < 3.0 * se_var);
  }
}

TEST_CASE("fernique: scalar closed form and admissibility boundary") {
  const GaussianSpec one(SpectralVector({0.0}),
                         DiagonalOperator::explicit_list({1.0}));
  // E exp(alpha x^2) = (1 - 2 alpha)^{-1/2} for alpha < 1/2.
  const FerniqueReport r = fernique_check(one, 0.25, 200000, 31);
  CHECK(r.alpha_bound == doctest::Approx(0.5));
  CHECK(r.finite);
  CHECK(std::abs(r.finite_estimate - std::sqrt(2.0)) < 0.1);

  const FerniqueReport div = fernique_check(one, 0.5, 1000, 31);
  CHECK_FALSE(div.finite);
}

TEST_CASE("fernique: product closed form over a power-law covariance") {
  const std::size_t m = 64;
  const GaussianSpec spec(SpectralVector::zeros(m),
                          DiagonalOperator::power(1.0, 2.0, m));
  const double alpha = 0.1;
  long double oracle = 1.0L;
  for (std::size_t i = 1; i <= m; ++i) {
    const long double mu = std::pow(static_cast<long double>(i), -2.0L);
    oracle *= 1.0L / std::sqrt(1.0L - 2.0L * alpha * mu);
  }
  const FerniqueReport r = fernique_check(spec, alpha, 200000, 37);
  CHECK(r.finite);
  CHECK(r.finite_estimate ==
        doctest::Approx(static_cast<double>(oracle)).epsilon(0.02));
}

TEST_CASE("fernique verdict matches the per-mode MGF domain exactly") {
  const GaussianSpec spec(SpectralVector::zeros(4),
                          DiagonalOperator::explicit_list({2.0, 1.0, 0.5, 0.1}));
  const double bound = 1.0 / (2.0 * 2.0);
  for (double alpha : {0.01, 0.1, 0.2, 0.24, 0.2499, 0.25, 0.26, 0.4}) {
    const FerniqueReport r = fernique_check(spec, alpha, 10, 1);
    CHECK(r.finite == (alpha < bound));
  }
}

TEST_CASE("non-finite input poisons construction with an error") {
  CHECK_THROWS_AS(SpectralVector({1.0, std::nan("")}), Error);
  CHECK_THROWS_AS(
      SpectralVector({std::numeric_limits<double>::infinity()}), Error);
  CHECK_THROWS_AS(DiagonalOperator::explicit_list({1.0, std::nan("")}), Error);
}
