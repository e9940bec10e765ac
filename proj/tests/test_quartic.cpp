#include <cmath>
#include <vector>

#include <doctest.h>

#include "spdelab/laplace.hpp"
#include "spdelab/quartic.hpp"

using namespace spdelab;

namespace {

ModelInstance fixture_model(std::size_t dim, long n, std::uint64_t seed) {
  const DiagonalOperator q = DiagonalOperator::power(1.0, 2.0, dim);
  const DiagonalOperator a = DiagonalOperator::power(1.0, -2.0, dim);
  const SpectralVector ts = SpectralVector::from_fn(
      dim, [](std::size_t m) { return 0.5 * std::pow(double(m), -2.0); });
  return synthesize_data(q, a, ts, n, seed);
}

}  // namespace

TEST_CASE("adaptive simpson matches closed forms") {
  CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(integrate([](double x) { return std::exp(-x * x / 2.0); }, -30.0,
                  30.0) == doctest::Approx(std::sqrt(2.0 * M_PI)).epsilon(1e-11));
}

TEST_CASE("kappa = 0 reduces every perturbed quantity to the conjugate case") {
  const ModelInstance m = fixture_model(8, 100, 811);
  const QuarticPerturbation none{0.0, m.theta_star,
                                 std::vector<double>(m.dim(), 1.0)};
  const SpectralVector map = perturbed_map(m, none);
  const SpectralVector conj = compute_map(m);
  for (std::size_t k = 0; k < m.dim(); ++k) {
    CHECK(map[k] == doctest::Approx(conj[k]).epsilon(1e-12));
  }
  const DiagonalOperator h = perturbed_empirical_hessian(m, none, map);
  for (std::size_t k = 0; k < m.dim(); ++k) {
    CHECK(h[k] == doctest::Approx(m.a[k]).epsilon(1e-14));
  }
  const GaussianSpec gauss(map, laplace_covariance(m.q, m.a, m.n));
  const double kl = perturbed_kl_vs_gaussian_quadrature(m, none, gauss);
  CHECK(std::abs(kl) < 1e-9);
}

TEST_CASE("perturbed MAP is the stationary point of the mode objective") {
  const ModelInstance m = fixture_model(8, 100, 821);
  const QuarticPerturbation pert{5.0, m.theta_star,
                                 std::vector<double>(m.dim(), 1.0)};
  const SpectralVector map = perturbed_map(m, pert);
  for (std::size_t k = 0; k < m.dim(); ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(map[k]));
    const double up = perturbed_mode_log_unnorm(m, pert, k, map[k] + h);
    const double down = perturbed_mode_log_unnorm(m, pert, k, map[k] - h);
    const double at = perturbed_mode_log_unnorm(m, pert, k, map[k]);
    CHECK(std::abs((up - down) / (2.0 * h)) < 1e-5);
    CHECK(at >= up);
    CHECK(at >= down);
  }
}

TEST_CASE("langevin KL estimate agrees with the quadrature oracle") {
  const ModelInstance m = fixture_model(8, 100, 831);
  const QuarticPerturbation pert{5.0, m.theta_star,
                                 std::vector<double>(m.dim(), 1.0)};
  const SpectralVector map = perturbed_map(m, pert);
  const GaussianSpec gauss(map, laplace_covariance(m.q, m.a, m.n));
  const double oracle = perturbed_kl_vs_gaussian_quadrature(m, pert, gauss);
  CHECK(oracle > 0.0);

  SimConfig cfg;
  cfg.dt = 0.02;
  cfg.t_end = 12.0;
  cfg.n_replicas = 20000;
  cfg.scheme = Scheme::semi_implicit_euler;
  cfg.record_times = {12.0};
  cfg.seed = 839;
  const auto samples = perturbed_langevin_samples(m, pert, cfg, 4);
  const std::vector<double> log_norms = perturbed_mode_log_norms(m, pert);
  const KlEstimate est = kl_estimate_vs_gaussian(
      samples,
      [&](std::size_t mode, double x) {
        return perturbed_mode_log_unnorm(m, pert, mode, x);
      },
      log_norms, gauss);
  // MC + discretization agreement within 4 standard errors plus a 10%
  // discretization allowance
  CHECK(std::abs(est.estimate - oracle) < 4.0 * est.se + 0.1 * oracle);
}

TEST_CASE("perturbed posterior tightens against its gaussianization") {
  // KL decreases with n: the quartic correction washes out at rate ~ 1/n.
  double prev = 1e300;
  for (long n : {50L, 400L, 3200L}) {
    const ModelInstance m = fixture_model(8, n, 853);
    const QuarticPerturbation pert{5.0, m.theta_star,
                                   std::vector<double>(m.dim(), 1.0)};
    const SpectralVector map = perturbed_map(m, pert);
    const GaussianSpec gauss(map, laplace_covariance(m.q, m.a, m.n));
    const double kl = perturbed_kl_vs_gaussian_quadrature(m, pert, gauss);
    CHECK(kl < prev);
    prev = kl;
  }
}
