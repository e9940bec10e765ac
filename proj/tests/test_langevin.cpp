#include <cmath>
#include <vector>

#include <doctest.h>

#include "spdelab/errors.hpp"
#include "spdelab/langevin.hpp"

using namespace spdelab;

namespace {

ModelInstance conjugate_single(double mu, double lambda, double theta_star,
                               long n) {
  return synthesize_data(DiagonalOperator::explicit_list({mu}),
                         DiagonalOperator::explicit_list({lambda}),
                         SpectralVector({theta_star}), n, 17, true);
}

DriftSpec pure_ou_drift(std::size_t dim) {
  // No likelihood, no prior: drift reduces to -theta/n.
  DriftSpec d;
  d.linearity_tag = DriftSpec::Linearity::linear;
  d.lin_slope.assign(dim, 0.0);
  d.lin_intercept.assign(dim, 0.0);
  d.likelihood_grad_raw = [](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  d.prior_grad_raw = d.likelihood_grad_raw;
  return d;
}

}  // namespace

TEST_CASE("pure OU mode reaches stationary variance mu/(n kappa) = 1") {
  SimConfig cfg;
  cfg.dt = 0.25;
  cfg.t_end = 50.0;
  cfg.n_replicas = 10000;
  cfg.scheme = Scheme::exact_ou;
  cfg.record_times = {50.0};
  cfg.seed = 41;
  const MomentTrace trace =
      simulate(pure_ou_drift(1), DiagonalOperator::explicit_list({1.0}), 1,
               SpectralVector({0.0}), cfg);
  const double se_var = 1.0 * std::sqrt(2.0 / (cfg.n_replicas - 1.0));
  CHECK(std::abs(trace.per_mode[0].variance - 1.0) < 3.0 * se_var);
  CHECK(std::abs(trace.per_mode[0].mean) < 3.0 / std::sqrt(10000.0));
}

TEST_CASE("per-mode stationary law equals the exact posterior (formulas)") {
  // OU rate 1/n + mu lambda, noise variance 2 mu / n: stationary mean and
  // variance reduce algebraically to the conjugate posterior formulas.
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = static_cast<std::uint32_t>(trial);
    const double mu = 0.05 + rng::uniform(3, rng::Stream::audit, t, 0, 0);
    const double lam = 2.0 * rng::uniform(3, rng::Stream::audit, t, 1, 0);
    const double c = rng::normal(3, rng::Stream::audit, t, 2, 0);
    const double n = 1.0 + 99.0 * rng::uniform(3, rng::Stream::audit, t, 3, 0);
    const double rate = 1.0 / n + mu * lam;
    const double ou_mean = (mu * c) / rate;
    const double ou_var = (mu / n) / rate;
    const double post_mean = n * mu * c / (1.0 + n * mu * lam);
    const double post_var = mu / (1.0 + n * mu * lam);
    CHECK(ou_mean == doctest::Approx(post_mean).epsilon(1e-14));
    CHECK(ou_var == doctest::Approx(post_var).epsilon(1e-14));
  }
}

TEST_CASE("single conjugate mode relaxes to the posterior law") {
  const ModelInstance m = conjugate_single(1.0, 1.0, 0.7, 50);
  const double c1 = m.data_coeffs[0];
  SimConfig cfg;
  cfg.dt = 1.0;
  cfg.t_end = 400.0;
  cfg.n_replicas = 10000;
  cfg.scheme = Scheme::exact_ou;
  cfg.record_times = {400.0};
  cfg.seed = 43;
  const DriftSpec drift = DriftSpec::from_model(m);
  const MomentTrace trace =
      simulate(drift, m.q, m.n, m.theta_star, cfg, 1, &m.theta_star);
  const double mean_true = 50.0 * c1 / 51.0;
  const double var_true = 1.0 / 51.0;
  CHECK(std::abs(trace.per_mode[0].mean - mean_true) <
        3.0 * std::sqrt(var_true / cfg.n_replicas));
  CHECK(std::abs(trace.per_mode[0].variance - var_true) <
        3.0 * var_true * std::sqrt(2.0 / (cfg.n_replicas - 1.0)));
}

TEST_CASE("semi-implicit euler has first-order weak bias in the variance") {
  // Stiff scalar drift -a theta with a = 10, n = 1: the discrete chain's
  // stationary variance is sigma^2 / (1 - (a - 1/n)(a + 1/n) dt / (2 kappa)),
  // so the bias ratio between dt and dt/2 approaches 2.
  const double a = 10.0;
  const double exact_var = 1.0 / 11.0;
  auto drift = DriftSpec::general(
      [a](std::span<const double> th, std::span<double> out) {
        for (std::size_t k = 0; k < th.size(); ++k) out[k] = -a * th[k];
      },
      [](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
      },
      1);
  double bias[2];
  const double dts[2] = {0.02, 0.01};
  for (int i = 0; i < 2; ++i) {
    SimConfig cfg;
    cfg.dt = dts[i];
    cfg.t_end = 3.0;
    cfg.n_replicas = 200000;
    cfg.scheme = Scheme::semi_implicit_euler;
    cfg.record_times = {3.0};
    cfg.seed = 47 + static_cast<std::uint64_t>(i);
    const MomentTrace trace =
        simulate(drift, DiagonalOperator::explicit_list({1.0}), 1,
                 SpectralVector({0.0}), cfg, 4);
    bias[i] = trace.per_mode[0].variance - exact_var;
  }
  CHECK(bias[0] > 0.0);
  CHECK(bias[1] > 0.0);
  CHECK(bias[0] / bias[1] == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("exact OU and semi-implicit euler agree in law as dt -> 0") {
  const ModelInstance m = conjugate_single(1.0, 2.0, 0.3, 20);
  MomentTrace traces[2];
  const Scheme schemes[2] = {Scheme::exact_ou, Scheme::semi_implicit_euler};
  for (int i = 0; i < 2; ++i) {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 4.0;
    cfg.n_replicas = 20000;
    cfg.scheme = schemes[i];
    cfg.record_times = {4.0};
    cfg.seed = 53 + static_cast<std::uint64_t>(i);
    traces[i] = simulate(DriftSpec::from_model(m), m.q, m.n, m.theta_star, cfg,
                         4, &m.theta_star);
  }
  const double var_scale = traces[0].per_mode[0].variance;
  const double se_mean = std::sqrt(var_scale / 20000.0);
  const double se_var = var_scale * std::sqrt(2.0 / 19999.0);
  CHECK(std::abs(traces[0].per_mode[0].mean - traces[1].per_mode[0].mean) <
        4.0 * std::sqrt(2.0) * se_mean);
  CHECK(std::abs(traces[0].per_mode[0].variance -
                 traces[1].per_mode[0].variance) <
        4.0 * std::sqrt(2.0) * se_var);
}

TEST_CASE("moment trace: determinism across threads and SE scaling") {
  const ModelInstance m = conjugate_single(0.5, 1.0, 0.2, 10);
  SimConfig cfg;
  cfg.dt = 0.5;
  cfg.t_end = 30.0;
  cfg.n_replicas = 2000;
  cfg.scheme = Scheme::exact_ou;
  cfg.record_times = {15.0, 30.0};
  cfg.seed = 59;
  const DriftSpec drift = DriftSpec::from_model(m);
  const MomentTrace t1 = simulate(drift, m.q, m.n, m.theta_star, cfg, 1);
  const MomentTrace t3 = simulate(drift, m.q, m.n, m.theta_star, cfg, 3);
  REQUIRE(t1.p_norms.count(2) == 1);
  for (std::size_t i = 0; i < t1.p_norms.at(2).size(); ++i) {
    CHECK(t1.p_norms.at(2)[i].value == t3.p_norms.at(2)[i].value);
    CHECK(t1.p_norms.at(2)[i].std_error == t3.p_norms.at(2)[i].std_error);
  }

  SimConfig big = cfg;
  big.n_replicas = 8000;
  const MomentTrace t4 = simulate(drift, m.q, m.n, m.theta_star, big, 3);
  const double ratio = t1.p_norms.at(2).back().std_error /
                       t4.p_norms.at(2).back().std_error;
  CHECK(ratio > 1.5);
  CHECK(ratio < 2.6);
}

TEST_CASE("second moment stays bounded on a coercive instance") {
  const ModelInstance m = synthesize_data(
      DiagonalOperator::power(1.0, 2.0, 8), DiagonalOperator::power(1.0, -2.0, 8),
      SpectralVector::zeros(8), 100, 61);
  SimConfig cfg;
  cfg.dt = 0.05;
  cfg.t_end = 40.0;
  cfg.n_replicas = 2000;
  cfg.scheme = Scheme::exact_ou;
  cfg.record_times = {5, 10, 15, 20, 25, 30, 35, 40};
  cfg.seed = 67;
  const MomentTrace trace = simulate(DriftSpec::from_model(m), m.q, m.n,
                                     m.theta_star, cfg, 2, &m.theta_star);
  double lo = 1e300, hi = 0.0;
  for (std::size_t i = trace.times.size() / 2; i < trace.times.size(); ++i) {
    lo = std::min(lo, trace.p_norms.at(2)[i].value);
    hi = std::max(hi, trace.p_norms.at(2)[i].value);
  }
  CHECK(hi / lo < 2.0);  // settled, no growth
  CHECK(std::isfinite(trace.p_norms.at(4).back().value));
}

TEST_CASE("exact OU refuses general drifts") {
  auto general = DriftSpec::general(
      [](std::span<const double> th, std::span<double> out) {
        for (std::size_t k = 0; k < th.size(); ++k) out[k] = -th[k] * th[k];
      },
      [](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
      },
      1);
  SimConfig cfg;
  cfg.dt = 0.1;
  cfg.t_end = 1.0;
  cfg.n_replicas = 4;
  cfg.scheme = Scheme::exact_ou;
  cfg.record_times = {1.0};
  cfg.seed = 5;
  CHECK_THROWS_WITH_AS(simulate(general, DiagonalOperator::explicit_list({1.0}),
                                1, SpectralVector({0.0}), cfg),
                       doctest::Contains("linear"), Error);
}

TEST_CASE("divergence guard names the first diverging replica") {
  auto unstable = DriftSpec::general(
      [](std::span<const double> th, std::span<double> out) {
        for (std::size_t k = 0; k < th.size(); ++k) out[k] = 3.0 * th[k];
      },
      [](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
      },
      1);
  SimConfig cfg;
  cfg.dt = 0.5;
  cfg.t_end = 100.0;
  cfg.n_replicas = 8;
  cfg.scheme = Scheme::semi_implicit_euler;
  cfg.record_times = {100.0};
  cfg.seed = 71;
  cfg.divergence_guard = 1e6;
  CHECK_THROWS_AS(simulate(unstable, DiagonalOperator::explicit_list({1.0}), 1,
                           SpectralVector({1.0}), cfg, 2),
                  SimulationDiverged);
}

TEST_CASE("stationary check: converged pass, tiny horizon fail, "
          "posterior-start pass") {
  const ModelInstance m = synthesize_data(
      DiagonalOperator::power(1.0, 2.0, 16), DiagonalOperator::power(1.0, 1.0, 16),
      SpectralVector::from_fn(
          16, [](std::size_t i) { return 0.5 * std::pow(double(i), -2.0); }),
      100, 73);

  SimConfig cfg;
  cfg.dt = 10.0;
  cfg.t_end = 2000.0;
  cfg.n_replicas = 4000;
  cfg.scheme = Scheme::exact_ou;
  cfg.record_times = {2000.0};
  cfg.seed = 79;
  const DistanceReport ok = stationary_check(m, cfg, 4);
  CHECK_FALSE(ok.refused);
  CHECK(ok.pass);
  CHECK(ok.max_abs_z < 4.0);

  SimConfig tiny = cfg;
  tiny.dt = 0.01;
  tiny.t_end = 0.01;
  tiny.record_times = {0.01};
  const DistanceReport fail = stationary_check(m, tiny, 4);
  CHECK_FALSE(fail.pass);
  CHECK(fail.max_abs_z > 10.0);

  // Starting at the invariant law stays at it, even with a tiny horizon.
  const GaussianSpec post = exact_posterior(m);
  SimConfig small = cfg;
  small.dt = 0.05;
  small.t_end = 0.05;
  small.record_times = {0.05};
  const MomentTrace from_post =
      simulate(DriftSpec::from_model(m), m.q, m.n, m.theta_star, small, 2,
               &m.theta_star, &post);
  double max_z = 0.0;
  for (std::size_t k = 0; k < m.dim(); ++k) {
    const double z_mean = (from_post.per_mode[k].mean - post.mean()[k]) /
                          std::sqrt(post.cov()[k] / small.n_replicas);
    const double z_var =
        (from_post.per_mode[k].variance - post.cov()[k]) /
        (post.cov()[k] * std::sqrt(2.0 / (small.n_replicas - 1.0)));
    max_z = std::max({max_z, std::abs(z_mean), std::abs(z_var)});
  }
  CHECK(max_z < 4.0);
}

TEST_CASE("stationary check refuses an indefinite information operator") {
  const ModelInstance bad = synthesize_data(
      DiagonalOperator::explicit_list({1.0, 1.0}),
      DiagonalOperator::explicit_list({1.0, -0.4}), SpectralVector::zeros(2),
      10, 83);
  SimConfig cfg;
  cfg.dt = 0.1;
  cfg.t_end = 1.0;
  cfg.n_replicas = 100;
  cfg.scheme = Scheme::exact_ou;
  cfg.record_times = {1.0};
  cfg.seed = 89;
  const DistanceReport rep = stationary_check(bad, cfg);
  CHECK(rep.refused);
  CHECK_FALSE(rep.failed_assumption.empty());
}

TEST_CASE("tail mass: empty ball, chebyshev-huge ball, sampler agreement") {
  const ModelInstance m = synthesize_data(
      DiagonalOperator::power(1.0, 2.0, 16), DiagonalOperator::power(1.0, -2.0, 16),
      SpectralVector::zeros(16), 100, 97);
  const TailMass all = tail_mass_estimate(m, 0.0, 500, SamplerKind::exact, 101);
  CHECK(all.mass == 1.0);

  const GaussianSpec post = exact_posterior(m);
  double mean_dist2 = 0.0;
  for (std::size_t k = 0; k < m.dim(); ++k) {
    const double d = post.mean()[k] - m.theta_star[k];
    mean_dist2 += d * d;
  }
  const double huge =
      10.0 * (std::sqrt(mean_dist2) + std::sqrt(trace(post.cov()).value));
  const TailMass none =
      tail_mass_estimate(m, huge, 5000, SamplerKind::exact, 101);
  CHECK(none.mass < 0.01);

  const double radius = std::sqrt(mean_dist2 + trace(post.cov()).value);
  const TailMass exact =
      tail_mass_estimate(m, radius, 20000, SamplerKind::exact, 103, 2);
  const TailMass langevin =
      tail_mass_estimate(m, radius, 20000, SamplerKind::langevin, 107, 2);
  CHECK(langevin.warning.empty());
  CHECK(std::abs(exact.mass - langevin.mass) <
        3.0 * std::sqrt(exact.se * exact.se + langevin.se * langevin.se) +
            1e-6);
}
