#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include "spdelab/certificates.hpp"
#include "spdelab/csvio.hpp"
#include "spdelab/errors.hpp"
#include "spdelab/laplace.hpp"
#include "spdelab/quartic.hpp"
#include "spdelab/runner.hpp"

// The acceptance suite.  Every tolerance below is pinned here; the criteria
// run on desk-scale instances (M <= 256) in a few minutes.

namespace spdelab {

namespace {

ModelInstance coercive_model(std::size_t dim, long n, std::uint64_t seed,
                             bool zero_noise = false) {
  // mu_m lambda_m = 1 for every mode: QA = I on the truncation.
  const DiagonalOperator q = DiagonalOperator::power(1.0, 2.0, dim);
  const DiagonalOperator a = DiagonalOperator::power(1.0, -2.0, dim);
  ThetaStarSpec ts;
  ts.kind = ThetaStarSpec::Kind::smooth;
  ts.smoothness = 2.0;
  ts.cm_norm = 1.0;
  return synthesize_data(q, a, ts.build(q), n, seed, zero_noise);
}

ModelInstance decaying_model(std::size_t dim, long n, std::uint64_t seed) {
  const DiagonalOperator q = DiagonalOperator::power(1.0, 2.0, dim);
  const DiagonalOperator a = DiagonalOperator::power(1.0, 1.0, dim);
  ThetaStarSpec ts;
  ts.kind = ThetaStarSpec::Kind::smooth;
  ts.smoothness = 2.0;
  ts.cm_norm = 1.0;
  return synthesize_data(q, a, ts.build(q), n, seed);
}

struct CriterionResult {
  int index;
  std::string name;
  bool pass;
  std::string detail;
  double seconds;
};

class Suite {
 public:
  explicit Suite(std::ostream& log, unsigned threads)
      : log_(log), threads_(threads) {}

  void run(int index, const std::string& name,
           const std::function<std::pair<bool, std::string>()>& body) {
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
      auto [p, d] = body();
      pass = p;
      detail = d;
    } catch (const std::exception& e) {
      pass = false;
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    results_.push_back({index, name, pass, detail, secs});
    char line[512];
    std::snprintf(line, sizeof(line), "criterion %d (%s): %s  [%s]  (%.1fs)",
                  index, name.c_str(), pass ? "PASS" : "FAIL", detail.c_str(),
                  secs);
    log_ << line << "\n" << std::flush;
  }

  bool all_passed() const {
    for (const auto& r : results_) {
      if (!r.pass) return false;
    }
    return true;
  }

  const std::vector<CriterionResult>& results() const { return results_; }
  unsigned threads() const { return threads_; }

 private:
  std::ostream& log_;
  unsigned threads_;
  std::vector<CriterionResult> results_;
};

std::string fmt(double x) { return csv_num(x); }

// --- criterion 1: conjugate Laplace collapse ---
std::pair<bool, std::string> criterion_collapse() {
  double worst = 0.0;
  for (long n : {10L, 1000L}) {
    const ModelInstance m = coercive_model(64, n, 0x11a);
    for (HessianSource src :
         {HessianSource::population, HessianSource::empirical}) {
      const LaplacePair pair = make_laplace_pair(m, src);
      worst = std::max(worst,
                       kl_commuting_gaussians(pair.posterior, pair.laplace));
    }
  }
  return {worst <= 1e-10, "max KL = " + fmt(worst) + " (tol 1e-10)"};
}

// --- criterion 2: SPDE stationarity ---
std::pair<bool, std::string> criterion_stationarity(unsigned threads) {
  const ModelInstance m = decaying_model(16, 100, 0x22b);
  SimConfig cfg;
  cfg.dt = 10.0;
  cfg.t_end = 20.0 * static_cast<double>(m.n);  // 2000
  cfg.n_replicas = 10000;
  cfg.scheme = Scheme::exact_ou;
  cfg.record_times = {cfg.t_end};
  cfg.seed = 3;
  const DistanceReport rep = stationary_check(m, cfg, threads);
  if (rep.refused) {
    return {false, "refused: " + rep.failed_assumption};
  }
  return {rep.pass, "max |z| = " + fmt(rep.max_abs_z) + " (tol 4)"};
}

// --- criterion 3: strong-rate certificate validity ---
std::pair<bool, std::string> criterion_certificate_validity(unsigned threads) {
  bool all = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (long n : {100L, 1000L, 10000L}) {
    const ModelInstance m = coercive_model(64, n, 0x33c);
    for (double delta : {0.5, 0.1, 0.01}) {
      const ModelConstants mc = model_constants(m, delta);
      StrongRateInputs in{trace(m.q).value, op_norm(m.q), mc.mu, mc.b,
                          mc.eps1,          mc.eps2,      n,     delta, 1.0};
      Certificate cert = strong_radius(in);
      cert = validate_certificate(std::move(cert), m, 10000, 0x33d, threads);
      const auto& v = *cert.empirical_validation;
      if (!v.pass) all = false;
      worst_margin = std::min(worst_margin, delta + 3.0 * v.se - v.tail_mass);
    }
  }
  return {all, "9 cells; worst slack delta+3se-mass = " + fmt(worst_margin)};
}

// --- criterion 4: n^{-1/2} contraction scaling ---
std::pair<bool, std::string> criterion_scaling() {
  const std::vector<long> ns{100, 1000, 10000, 100000};
  const double delta = 0.1;
  std::vector<double> xs, radii, quantiles;
  for (long n : ns) {
    const ModelInstance m = coercive_model(64, n, 0x44d);
    const ModelConstants mc = model_constants(m, delta);
    StrongRateInputs in{trace(m.q).value, op_norm(m.q), mc.mu, mc.b,
                        mc.eps1,          mc.eps2,      n,     delta, 1.0};
    const Certificate cert = strong_radius(in);
    // empirical (1-delta) posterior quantile of ||theta - theta*||
    const GaussianSpec post = exact_posterior(m);
    const int n_samples = 20000;
    std::vector<double> dist(n_samples);
    for (int i = 0; i < n_samples; ++i) {
      const SpectralVector x =
          sample_gaussian(post, 0x44e, static_cast<std::uint32_t>(i));
      double d2 = 0.0;
      for (std::size_t k = 0; k < m.dim(); ++k) {
        const double d = x[k] - m.theta_star[k];
        d2 += d * d;
      }
      dist[i] = std::sqrt(d2);
    }
    std::sort(dist.begin(), dist.end());
    const auto idx = static_cast<std::size_t>(
        std::ceil((1.0 - delta) * n_samples)) - 1;
    xs.push_back(static_cast<double>(n));
    radii.push_back(cert.radius);
    quantiles.push_back(dist[idx]);
  }
  const double s_rad = loglog_slope(xs, radii);
  const double s_q = loglog_slope(xs, quantiles);
  const bool pass = std::abs(s_rad + 0.5) <= 0.05 && std::abs(s_q + 0.5) <= 0.05;
  return {pass, "radius slope = " + fmt(s_rad) +
                    ", quantile slope = " + fmt(s_q) + " (target -0.5 +/- 0.05)"};
}

// --- criterion 5: fixed-point solver and (W.3) checker ---
std::pair<bool, std::string> criterion_fixed_point() {
  // Quadratic analytic case: z^2 = 0.1 z + 0.03.
  WeakRateInputs in;
  in.psi = ScalarFn::power(1.0, 2.0);
  in.zeta = ScalarFn::power(1.0, 0.0);
  in.eps = 0.1;
  in.b = 0.0;
  in.tr_q = 1.0;        // tr/n = 0.01
  in.q_opnorm = 1.0;    // log(1/delta)/n = 0.02
  in.n = 100;
  in.delta = std::exp(-2.0);
  in.z_max = 1e3;
  const Certificate cert = weak_fixed_point(in);
  const double closed_form = (0.1 + std::sqrt(0.01 + 4.0 * 0.03)) / 2.0;
  const double rel = std::abs(cert.radius - closed_form) / closed_form;
  if (!(rel <= 1e-9)) {
    return {false, "quadratic root rel err = " + fmt(rel)};
  }

  // (W.3) verdicts against the symbolic criteria on a 20-case (p,q) grid.
  int mismatches = 0;
  std::ostringstream detail;
  for (double p : {1.2, 1.5, 2.0, 2.5, 3.0}) {
    for (double q : {0.0, 0.5, 1.0, 1.5}) {
      const W3Report rep = check_w3(ScalarFn::power(1.0, p),
                                    ScalarFn::power(1.0, q), 1e-2, 1e2, 60);
      const bool symbolic = (p >= q + 1.0 - 1e-12) &&
                            (p * p >= 3.0 + q * q - q - 1e-12);
      if (rep.pass != symbolic) {
        ++mismatches;
        detail << " (p=" << p << ",q=" << q << ")";
      }
    }
  }
  return {mismatches == 0,
          "quadratic rel err = " + fmt(rel) + "; W.3 grid mismatches = " +
              std::to_string(mismatches) + detail.str()};
}

// --- criterion 6: eps2 coverage ---
std::pair<bool, std::string> criterion_eps2_coverage() {
  const std::size_t dim = 64;
  const long n = 100;
  const ModelInstance m = coercive_model(dim, n, 0x66f);
  bool all = true;
  std::ostringstream detail;
  for (double delta : {0.1, 0.01}) {
    const ModelConstants mc = model_constants(m, delta);
    // Z ~ N(0, QAQ) mode-wise.
    std::vector<double> eigs(dim);
    for (std::size_t k = 0; k < dim; ++k) eigs[k] = m.a[k] * m.q[k] * m.q[k];
    const GaussianSpec z_law(SpectralVector::zeros(dim),
                             DiagonalOperator::explicit_list(eigs));
    const int n_draws = 10000;
    int covered = 0;
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n_draws; ++i) {
      const SpectralVector z =
          sample_gaussian(z_law, 0x670, static_cast<std::uint32_t>(i));
      if (z.norm() / sqrt_n <= mc.eps2) ++covered;
    }
    const double frac = static_cast<double>(covered) / n_draws;
    detail << " delta=" << delta << ": coverage=" << frac;
    if (frac < 1.0 - delta) all = false;
  }
  return {all, detail.str()};
}

// --- criterion 7: measure-comparison checkers ---
std::pair<bool, std::string> criterion_measure_checkers() {
  const std::size_t dim = 256;
  const long n = 10;
  const DiagonalOperator q = DiagonalOperator::power(1.0, 2.0, dim);
  bool ok = true;
  std::ostringstream detail;

  // Product exponents 4, 0, and the 1/2 boundary; the l2 criterion says
  // equivalent iff 2 * exponent_sum > 1.
  struct Fh {
    double h_exponent;
    EquivalenceReport::Verdict expected;
  };
  const Fh cases[] = {
      {2.0, EquivalenceReport::Verdict::equivalent},
      {-2.0, EquivalenceReport::Verdict::singular},
      {-1.5, EquivalenceReport::Verdict::singular},
  };
  for (const auto& c : cases) {
    const DiagonalOperator h = DiagonalOperator::power(1.0, c.h_exponent, dim);
    const EquivalenceReport rep = feldman_hajek_check(q, h, n);
    if (rep.verdict != c.expected) {
      ok = false;
      detail << " FH(exponent " << c.h_exponent << ") wrong verdict;";
    }
  }

  // Shift checks: a_m = mu_m is inside H_Q, a_m = sqrt(mu_m) is not.
  const SpectralVector inside = SpectralVector::from_fn(
      dim, [](std::size_t m) { return std::pow(double(m), -2.0); });
  const SpectralVector outside = SpectralVector::from_fn(
      dim, [](std::size_t m) { return 1.0 / double(m); });
  const ShiftReport in_rep =
      cameron_martin_shift_check(q, inside, DecayLaw::power(1.0, 2.0));
  const ShiftReport out_rep =
      cameron_martin_shift_check(q, outside, DecayLaw::power(1.0, 1.0));
  if (!in_rep.in_cm) {
    ok = false;
    detail << " shift m^-2 should be in H_Q;";
  }
  if (out_rep.in_cm) {
    ok = false;
    detail << " shift m^-1 should be outside H_Q;";
  }
  if (ok) detail << "3 FH families + 2 shift verdicts match analytics";
  return {ok, detail.str()};
}

// --- criterion 8: numerical hygiene ---
std::pair<bool, std::string> criterion_hygiene(unsigned threads) {
  std::ostringstream detail;

  // Gradient vs central finite differences.
  const ModelInstance m = decaying_model(16, 50, 0x88a);
  double worst_rel = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> th(m.dim());
    for (std::size_t k = 0; k < m.dim(); ++k) {
      th[k] = rng::normal(0x88b, rng::Stream::audit,
                          static_cast<std::uint32_t>(trial),
                          static_cast<std::uint32_t>(k), 0);
    }
    const SpectralVector theta(th);
    const LikelihoodEval eval = eval_empirical_loglik(m, theta);
    for (std::size_t k = 0; k < m.dim(); ++k) {
      const double h = 1e-5 * std::max(1.0, std::abs(theta[k]));
      std::vector<double> plus = th, minus = th;
      plus[k] += h;
      minus[k] -= h;
      const double fd = (eval_empirical_loglik(m, SpectralVector(plus)).value -
                         eval_empirical_loglik(m, SpectralVector(minus)).value) /
                        (2.0 * h);
      const double expected = eval.gradient_precond[k];
      const double got = m.q[k] * fd;
      const double rel = std::abs(got - expected) /
                         std::max(1e-12, std::abs(expected));
      worst_rel = std::max(worst_rel, rel);
    }
  }
  const bool fd_ok = worst_rel < 1e-6;
  detail << "fd rel err = " << fmt(worst_rel);

  // Bit-identical reruns across thread counts.
  const ModelInstance ms = decaying_model(16, 100, 0x88c);
  SimConfig cfg;
  cfg.dt = 0.5;
  cfg.t_end = 50.0;
  cfg.n_replicas = 4000;
  cfg.scheme = Scheme::exact_ou;
  cfg.record_times = {25.0, 50.0};
  cfg.seed = 0x88d;
  const DriftSpec drift = DriftSpec::from_model(ms);
  const MomentTrace t1 = simulate(drift, ms.q, ms.n, ms.theta_star, cfg, 1);
  const MomentTrace t8 =
      simulate(drift, ms.q, ms.n, ms.theta_star, cfg, std::max(8u, threads));
  bool bit_identical = t1.times == t8.times;
  for (const auto& [p, series] : t1.p_norms) {
    const auto it = t8.p_norms.find(p);
    if (it == t8.p_norms.end() || it->second.size() != series.size()) {
      bit_identical = false;
      break;
    }
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (std::memcmp(&series[i].value, &it->second[i].value,
                      sizeof(double)) != 0 ||
          std::memcmp(&series[i].std_error, &it->second[i].std_error,
                      sizeof(double)) != 0) {
        bit_identical = false;
      }
    }
  }
  for (std::size_t k = 0; k < t1.per_mode.size(); ++k) {
    if (std::memcmp(&t1.per_mode[k].mean, &t8.per_mode[k].mean,
                    sizeof(double)) != 0 ||
        std::memcmp(&t1.per_mode[k].variance, &t8.per_mode[k].variance,
                    sizeof(double)) != 0) {
      bit_identical = false;
    }
  }
  detail << "; threads 1 vs 8 " << (bit_identical ? "identical" : "DIFFER");

  // KL identities on random Gaussian pairs.
  bool kl_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t dim = 8;
    std::vector<double> mp(dim), mr(dim), vp(dim), vr(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const auto t32 = static_cast<std::uint32_t>(trial);
      const auto k32 = static_cast<std::uint32_t>(k);
      mp[k] = rng::normal(0x88e, rng::Stream::audit, t32, k32, 0);
      mr[k] = rng::normal(0x88e, rng::Stream::audit, t32, k32, 1);
      vp[k] = 0.1 + rng::uniform(0x88e, rng::Stream::audit, t32, k32, 2);
      vr[k] = 0.1 + rng::uniform(0x88e, rng::Stream::audit, t32, k32, 3);
    }
    const GaussianSpec p(SpectralVector(mp),
                         DiagonalOperator::explicit_list(vp));
    const GaussianSpec r(SpectralVector(mr),
                         DiagonalOperator::explicit_list(vr));
    if (kl_commuting_gaussians(p, p) != 0.0) kl_ok = false;
    if (!(kl_commuting_gaussians(p, r) >= 0.0)) kl_ok = false;
  }
  detail << "; KL identities " << (kl_ok ? "hold" : "VIOLATED");

  return {fd_ok && bit_identical && kl_ok, detail.str()};
}

// --- criterion 9: H/K bound behavior and the non-conjugate KL ---
std::pair<bool, std::string> criterion_laplace_bounds(unsigned threads) {
  std::ostringstream detail;

  // Monotonicity of the bound formulas with envelopes proportional to
  // n^{-1/2}.
  bool monotone = true;
  for (double alpha : {0.3, 0.5}) {
    double prev_h = std::numeric_limits<double>::infinity();
    double prev_k = std::numeric_limits<double>::infinity();
    for (double n : {1e2, 1e3, 1e4, 1e5, 1e6}) {
      BoundInputs bi;
      bi.a_smooth = 1.0;
      bi.eps1_2 = 1.0 / std::sqrt(n);
      bi.eps2_2 = 1.0 / std::sqrt(n);
      bi.l2 = 1.0;
      bi.alpha = alpha;
      bi.sigma = 1.0;
      bi.lambda_min = 1.0;
      bi.q_opnorm = 1.0;
      bi.tr_q = 1.6;
      bi.n = static_cast<long>(n);
      bi.delta = 0.1;
      const double h = h_bound(bi).total;
      const double k = k_bound(bi).total;
      if (h > prev_h * (1.0 + 1e-12) || k > prev_k * (1.0 + 1e-12)) {
        monotone = false;
      }
      prev_h = h;
      prev_k = k;
    }
  }
  detail << "bounds monotone: " << (monotone ? "yes" : "NO");

  // Non-conjugate fixture: cubic drift perturbation, KL measured from the
  // Langevin sampler in estimate mode; c1 calibrated once at the smallest n
  // (factor 3) and then fixed.
  const std::vector<long> ns{100, 400, 1600};
  std::vector<double> kl_hat(ns.size()), kl_se(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const ModelInstance m = coercive_model(8, ns[i], 0x99a + i);
    QuarticPerturbation pert{5.0, m.theta_star,
                             std::vector<double>(m.dim(), 1.0)};
    SimConfig cfg;
    cfg.dt = 0.02;
    cfg.t_end = 12.0;
    cfg.n_replicas = 60000;
    cfg.scheme = Scheme::semi_implicit_euler;
    cfg.record_times = {cfg.t_end};
    cfg.seed = 0x99b + i;
    const auto samples = perturbed_langevin_samples(m, pert, cfg, threads);
    const SpectralVector map = perturbed_map(m, pert);
    const GaussianSpec gauss(map, laplace_covariance(m.q, m.a, m.n));
    const std::vector<double> log_norms = perturbed_mode_log_norms(m, pert);
    const KlEstimate est = kl_estimate_vs_gaussian(
        samples,
        [&](std::size_t mode, double x) {
          return perturbed_mode_log_unnorm(m, pert, mode, x);
        },
        log_norms, gauss);
    kl_hat[i] = est.estimate;
    kl_se[i] = est.se;
  }
  // H(n) = c1 A^2 / (lambda_min n) at alpha = 1/2 with zero envelopes.
  const double c1 = 3.0 * kl_hat[0] * static_cast<double>(ns[0]);
  bool below = true;
  detail << "; KL vs H:";
  for (std::size_t i = 0; i < ns.size(); ++i) {
    BoundInputs bi;
    bi.a_smooth = 1.0;
    bi.alpha = 0.5;
    bi.sigma = 1.0;
    bi.lambda_min = 1.0;
    bi.q_opnorm = 1.0;
    bi.tr_q = 1.6;
    bi.n = ns[i];
    bi.delta = 0.1;
    bi.c1 = c1;
    bi.c2 = c1;
    const double h = h_bound(bi).total;
    detail << " n=" << ns[i] << ": " << fmt(kl_hat[i]) << "+-"
           << fmt(kl_se[i]) << " vs " << fmt(h);
    if (!(kl_hat[i] <= h)) below = false;
  }
  return {monotone && below, detail.str()};
}

}  // namespace

int run_acceptance(std::ostream& log, unsigned threads,
                   const std::string& out_dir) {
  Suite suite(log, threads);
  suite.run(1, "conjugate Laplace collapse", criterion_collapse);
  suite.run(2, "SPDE stationarity",
            [&] { return criterion_stationarity(threads); });
  suite.run(3, "certificate validity",
            [&] { return criterion_certificate_validity(threads); });
  suite.run(4, "contraction scaling", criterion_scaling);
  suite.run(5, "fixed-point solver", criterion_fixed_point);
  suite.run(6, "eps2 coverage", criterion_eps2_coverage);
  suite.run(7, "measure-comparison checkers", criterion_measure_checkers);
  suite.run(8, "numerical hygiene", [&] { return criterion_hygiene(threads); });
  suite.run(9, "Laplace bound behavior",
            [&] { return criterion_laplace_bounds(threads); });

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    CsvWriter csv(
        (std::filesystem::path(out_dir) / "acceptance.csv").string(),
        {"criterion", "name", "pass", "seconds", "detail"});
    for (const auto& r : suite.results()) {
      csv.row({std::to_string(r.index), r.name, r.pass ? "true" : "false",
               csv_num(r.seconds), r.detail});
    }
  }
  log << (suite.all_passed() ? "acceptance: ALL PASS"
                             : "acceptance: FAILURES present")
      << "\n";
  return suite.all_passed() ? 0 : 4;
}

}  // namespace spdelab
