#include "spdelab/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spdelab/errors.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

DiagonalOperator laplace_covariance(const DiagonalOperator& q,
                                    const DiagonalOperator& h, long n) {
  if (q.dim() != h.dim()) throw Error("laplace_covariance: dimension mismatch");
  if (q.positivity_class() != Positivity::strictly_positive) {
    throw Error("laplace_covariance: q must be strictly positive");
  }
  if (n < 1) throw Error("laplace_covariance: n must be >= 1");
  std::vector<double> eigs(q.dim());
  for (std::size_t m = 0; m < q.dim(); ++m) {
    const double denom = 1.0 + static_cast<double>(n) * q[m] * h[m];
    if (!(denom > 0.0)) {
      throw Error(
          "laplace_covariance: positive-definiteness violated at mode " +
          std::to_string(m + 1) + " (lambda_m mu_m <= -1/n)");
    }
    eigs[m] = q[m] / denom;
  }
  return DiagonalOperator::explicit_list(std::move(eigs));
}

LaplacePair make_laplace_pair(const ModelInstance& m, HessianSource source) {
  // Hat H_n = -grad^2 F_n = A exactly for this model, so both sources share
  // the covariance; the distinction is kept for fixtures with perturbed
  // likelihoods.
  const GaussianSpec posterior = exact_posterior(m);
  GaussianSpec laplace(compute_map(m), laplace_covariance(m.q, m.a, m.n));
  return LaplacePair{posterior, std::move(laplace), source};
}

EquivalenceReport feldman_hajek_check(const DiagonalOperator& q,
                                      const DiagonalOperator& h, long n) {
  if (q.dim() != h.dim()) {
    throw Error("feldman_hajek_check: dimension mismatch");
  }
  EquivalenceReport rep;
  const double nd = static_cast<double>(n);
  double sum = 0.0;
  double ratio_min = std::numeric_limits<double>::infinity();
  double ratio_max = 0.0;
  double l = 0.0;  // ||QH||_op over the truncation
  for (std::size_t m = 0; m < q.dim(); ++m) {
    const double prod = q[m] * h[m];
    const double ratio = 1.0 / (1.0 + nd * prod);
    const double summand = nd * prod * ratio;
    sum += summand * summand;
    ratio_min = std::min(ratio_min, ratio);
    ratio_max = std::max(ratio_max, ratio);
    l = std::max(l, std::abs(prod));
  }
  rep.fh1_partial_sum = sum;
  rep.ratio_min = ratio_min;
  rep.ratio_max = ratio_max;
  rep.sufficient_lo = 1.0 / (nd * l + 1.0);
  rep.sufficient_hi = 1.0;

  const bool h_zero = op_norm(h) == 0.0;
  if (h_zero) {
    rep.verdict = EquivalenceReport::Verdict::equivalent;
    rep.note = "zero perturbation: same measure";
    return rep;
  }

  if (q.decay() && h.decay() && q.decay()->kind == DecayLaw::Kind::power &&
      h.decay()->kind == DecayLaw::Kind::power) {
    // lambda_m mu_m follows a power law with the summed exponent; the
    // (F-H.1) series behaves like its square.
    const double rho = q.decay()->exponent + h.decay()->exponent;
    const double scale = q.decay()->scale * h.decay()->scale;
    if (2.0 * rho > 1.0) {
      rep.verdict = EquivalenceReport::Verdict::equivalent;
      const double md = static_cast<double>(q.dim());
      rep.fh1_tail = nd * nd * scale * scale *
                     std::pow(md, 1.0 - 2.0 * rho) / (2.0 * rho - 1.0);
      rep.note = "{lambda_m mu_m} in l2 (product exponent " +
                 std::to_string(rho) + ")";
    } else {
      rep.verdict = EquivalenceReport::Verdict::singular;
      rep.note =
          "singular in the limit: (F-H.1) series diverges (product exponent " +
          std::to_string(rho) + " <= 1/2); finite truncation shown only";
    }
    return rep;
  }

  rep.verdict = EquivalenceReport::Verdict::inconclusive;
  rep.note = "explicit eigenvalues carry no tail law; partial sum reported";
  return rep;
}

ShiftReport cameron_martin_shift_check(
    const DiagonalOperator& q, const SpectralVector& shift,
    const std::optional<DecayLaw>& shift_law) {
  if (q.dim() != shift.dim()) {
    throw Error("cameron_martin_shift_check: dimension mismatch");
  }
  ShiftReport rep;
  double sum = 0.0;
  bool hit_zero_eig = false;
  for (std::size_t m = 0; m < q.dim(); ++m) {
    if (q[m] == 0.0) {
      if (shift[m] != 0.0) hit_zero_eig = true;
      continue;
    }
    sum += shift[m] * shift[m] / q[m];
  }
  if (hit_zero_eig) {
    rep.in_cm = false;
    rep.evidence = "nonzero coefficient on a zero covariance eigenvalue";
    return rep;
  }

  if (shift_law && shift_law->kind == DecayLaw::Kind::power && q.decay() &&
      q.decay()->kind == DecayLaw::Kind::power) {
    // a_m^2 / mu_m ~ m^{-(2 rho_a - rho_q)}: finite iff 2 rho_a - rho_q > 1.
    const double exp_sum = 2.0 * shift_law->exponent - q.decay()->exponent;
    if (exp_sum > 1.0) {
      rep.in_cm = true;
      const double scale =
          shift_law->scale * shift_law->scale / q.decay()->scale;
      const double tail = scale *
                          std::pow(static_cast<double>(q.dim()),
                                   1.0 - exp_sum) /
                          (exp_sum - 1.0);
      rep.norm = std::sqrt(sum + tail);
      rep.evidence = "series exponent " + std::to_string(exp_sum) +
                     " > 1; tail estimate " + std::to_string(tail);
    } else {
      rep.in_cm = false;
      rep.evidence = "series exponent " + std::to_string(exp_sum) +
                     " <= 1: sum a_m^2/mu_m diverges";
    }
    return rep;
  }

  rep.in_cm = true;
  rep.norm = std::sqrt(sum);
  rep.evidence = "finite truncation sum; no decay law to extrapolate";
  return rep;
}

double kl_commuting_gaussians(const GaussianSpec& p, const GaussianSpec& r) {
  if (p.dim() != r.dim()) {
    throw Error("kl_commuting_gaussians: dimension mismatch");
  }
  double kl = 0.0;
  for (std::size_t m = 0; m < p.dim(); ++m) {
    const double sp = p.cov()[m];
    const double sr = r.cov()[m];
    if (!(sr > 0.0)) {
      throw Error("kl_commuting_gaussians: undefined divergence (zero "
                  "reference variance at mode " +
                  std::to_string(m + 1) + ")");
    }
    const double ratio = sp / sr;
    const double dm = p.mean()[m] - r.mean()[m];
    kl += ratio - 1.0 - std::log(ratio) + dm * dm / sr;
  }
  return 0.5 * kl;
}

namespace {

double check_alpha(const BoundInputs& in) {
  if (!(in.alpha > 0.25 && in.alpha <= 0.5)) {
    throw Error("bound inputs: alpha must lie in (1/4, 1/2]");
  }
  if (!(in.lambda_min > 0.0)) {
    throw Error("bound inputs: lambda_min must be positive (bound vacuous)");
  }
  if (in.n < 1) throw Error("bound inputs: n must be >= 1");
  return static_cast<double>(in.n);
}

}  // namespace

BoundResult h_bound(const BoundInputs& in) {
  const double n = check_alpha(in);
  BoundResult out;
  out.term1 = in.c1 * (in.a_smooth * in.a_smooth + in.eps1_2 * in.eps1_2) *
              std::pow(n, 1.0 - 4.0 * in.alpha) / in.lambda_min;
  out.term2 = in.c2 *
              (in.eps2_2 * in.eps2_2 + in.q_opnorm * in.l2 * in.l2 / (n * n)) *
              std::pow(n, 1.0 - 2.0 * in.alpha) / in.lambda_min;
  out.total = out.term1 + out.term2;
  return out;
}

BoundResult k_bound(const BoundInputs& in) {
  const double n = check_alpha(in);
  BoundResult out;
  const double s2 = in.sigma * in.sigma;
  out.term1 = (in.c1 * in.tr_q * in.tr_q + 4.0 * s2 * s2) * in.a_smooth *
              in.a_smooth * std::pow(n, 1.0 - 4.0 * in.alpha) / in.lambda_min;
  out.term2 = (in.c2 * in.tr_q + 4.0 * s2) * in.eps2_2 * in.eps2_2 *
              std::pow(n, 1.0 - 2.0 * in.alpha) / in.lambda_min;
  out.total = out.term1 + out.term2;
  out.advisory_o1n = 1.0 / n;
  return out;
}

AuditReport bvm_audit_grad(
    const std::function<SpectralVector(const SpectralVector&)>& grad_precond,
    const DiagonalOperator& qh, const SpectralVector& theta_star, int n_pairs,
    double radius, std::uint64_t seed) {
  AuditReport rep;
  if (radius <= 0.0 || n_pairs <= 0) {
    rep.entries.push_back({"BvM.1", AuditEntry::Status::vacuous, 0.0, 0.0,
                           "degenerate sampling radius"});
    rep.entries.push_back({"BvM.2", AuditEntry::Status::vacuous, 0.0, 0.0, ""});
    return rep;
  }
  const std::size_t dim = theta_star.dim();
  double worst = 0.0;       // max ||dg - (-QH) dtheta||
  double a_witness = 0.0;   // deviation scaled by pair distance and offset
  std::string witness;
  for (int p = 0; p < n_pairs; ++p) {
    std::vector<double> t1(dim), t2(dim);
    double off1 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double z1 = rng::normal(seed, rng::Stream::audit,
                                    static_cast<std::uint32_t>(p),
                                    static_cast<std::uint32_t>(k), 0);
      const double z2 = rng::normal(seed, rng::Stream::audit,
                                    static_cast<std::uint32_t>(p),
                                    static_cast<std::uint32_t>(k), 1);
      t1[k] = theta_star[k] + radius * 0.5 * z1 / std::sqrt(double(dim));
      t2[k] = theta_star[k] + radius * 0.5 * z2 / std::sqrt(double(dim));
      const double o = t1[k] - theta_star[k];
      off1 += o * o;
    }
    const SpectralVector v1(t1), v2(t2);
    const SpectralVector g1 = grad_precond(v1);
    const SpectralVector g2 = grad_precond(v2);
    double dev2 = 0.0, d2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double dtheta = v1[k] - v2[k];
      const double expected = -qh[k] * dtheta;
      const double dev = (g1[k] - g2[k]) - expected;
      dev2 += dev * dev;
      d2 += dtheta * dtheta;
    }
    const double dev = std::sqrt(dev2);
    if (dev > worst) {
      worst = dev;
      witness = "pair " + std::to_string(p);
    }
    if (d2 > 1e-30 && off1 > 1e-30) {
      a_witness = std::max(
          a_witness, dev / (std::sqrt(d2) * std::sqrt(off1)));
    }
  }
  const bool constant = worst < 1e-10;
  rep.entries.push_back({"BvM.1",
                         AuditEntry::Status::pass,
                         constant ? 0.0 : a_witness, worst, witness});
  rep.entries.push_back({"BvM.2", AuditEntry::Status::pass, 0.0,
                         constant ? 0.0 : worst,
                         constant ? "empirical Hessian constant"
                                  : "nonconstant Hessian witness"});
  return rep;
}

AuditReport bvm_audit(const ModelInstance& m, int n_pairs, double radius,
                      std::uint64_t seed) {
  std::vector<double> qa(m.dim());
  for (std::size_t k = 0; k < m.dim(); ++k) qa[k] = m.q[k] * m.a[k];
  const auto grad = [&m](const SpectralVector& t) {
    return eval_empirical_loglik(m, t).gradient_precond;
  };
  return bvm_audit_grad(grad, DiagonalOperator::explicit_list(std::move(qa)),
                        m.theta_star, n_pairs, radius, seed);
}

double calibrate_sigma(const DiagonalOperator& q, const DiagonalOperator& a,
                       const SpectralVector& theta_star, long n, double delta,
                       int n_replicas, std::uint64_t seed) {
  if (n_replicas < 2) throw Error("calibrate_sigma: need >= 2 replicas");
  std::vector<double> dist(static_cast<std::size_t>(n_replicas));
  for (int r = 0; r < n_replicas; ++r) {
    const ModelInstance m = synthesize_data(
        q, a, theta_star, n, seed + static_cast<std::uint64_t>(r));
    const SpectralVector map = compute_map(m);
    double d2 = 0.0;
    for (std::size_t k = 0; k < m.dim(); ++k) {
      const double d = map[k] - theta_star[k];
      d2 += d * d;
    }
    dist[static_cast<std::size_t>(r)] = std::sqrt(d2);
  }
  std::sort(dist.begin(), dist.end());
  const auto idx = static_cast<std::size_t>(
      std::min<double>(std::ceil((1.0 - delta) * n_replicas),
                       static_cast<double>(n_replicas)) -
      1);
  return dist[idx];
}

KlEstimate kl_estimate_vs_gaussian(
    const std::vector<std::vector<double>>& samples,
    const std::function<double(std::size_t mode, double x)>& log_unnorm,
    const std::vector<double>& log_norms, const GaussianSpec& r) {
  if (samples.empty()) throw Error("kl_estimate_vs_gaussian: no samples");
  const std::size_t dim = r.dim();
  constexpr double half_log_two_pi = 0.91893853320467274178;
  double s = 0.0, s2 = 0.0;
  for (const auto& x : samples) {
    if (x.size() != dim) {
      throw Error("kl_estimate_vs_gaussian: sample dimension mismatch");
    }
    double lr = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double lp = log_unnorm(k, x[k]) - log_norms[k];
      const double d = x[k] - r.mean()[k];
      const double lq = -half_log_two_pi - 0.5 * std::log(r.cov()[k]) -
                        0.5 * d * d / r.cov()[k];
      lr += lp - lq;
    }
    s += lr;
    s2 += lr * lr;
  }
  const double n = static_cast<double>(samples.size());
  KlEstimate out;
  out.estimate = s / n;
  const double var = std::max(0.0, (s2 - s * s / n) / (n - 1.0));
  out.se = std::sqrt(var / n);
  return out;
}

}  // namespace spdelab
