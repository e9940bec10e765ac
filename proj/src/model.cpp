#include "spdelab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spdelab/errors.hpp"

namespace spdelab {

namespace {

// Decides whether inf_m mu_m lambda_m stays bounded away from zero when both
// operators carry power laws: the product exponent must be <= 0.  Explicit
// lists carry no tail information, so the verdict stays truncation-bound.
Coercivity classify_coercivity(const DiagonalOperator& q,
                               const DiagonalOperator& a, double truncated_min) {
  if (truncated_min <= 0.0) return Coercivity::vanishing;
  if (q.decay() && a.decay() && q.decay()->kind == DecayLaw::Kind::power &&
      a.decay()->kind == DecayLaw::Kind::power) {
    const double product_exponent = q.decay()->exponent + a.decay()->exponent;
    return product_exponent <= 0.0 ? Coercivity::certified
                                   : Coercivity::vanishing;
  }
  return Coercivity::truncated_only;
}

SpectralVector sample_in_ball(const ModelInstance& m, double radius,
                              std::uint64_t seed, std::uint32_t pair,
                              std::uint32_t which) {
  // Isotropic Gaussian direction scaled to a uniform radial fraction.
  std::vector<double> dir(m.dim());
  double norm2 = 0.0;
  for (std::size_t k = 0; k < m.dim(); ++k) {
    dir[k] = rng::normal(seed, rng::Stream::audit, pair,
                         static_cast<std::uint32_t>(k), 2 * which);
    norm2 += dir[k] * dir[k];
  }
  const double u =
      rng::uniform(seed, rng::Stream::audit, pair, 0xFFFFu, 2 * which + 1);
  const double scale = norm2 > 0.0 ? radius * u / std::sqrt(norm2) : 0.0;
  std::vector<double> out(m.dim());
  for (std::size_t k = 0; k < m.dim(); ++k) {
    out[k] = m.theta_star[k] + scale * dir[k];
  }
  return SpectralVector(std::move(out));
}

}  // namespace

ModelInstance synthesize_data(const DiagonalOperator& q,
                              const DiagonalOperator& a,
                              const SpectralVector& theta_star, long n,
                              std::uint64_t noise_seed, bool zero_noise) {
  if (q.dim() != a.dim() || q.dim() != theta_star.dim()) {
    throw Error("synthesize_data: dimension mismatch");
  }
  if (q.positivity_class() != Positivity::strictly_positive) {
    throw Error("synthesize_data: prior covariance must be strictly positive");
  }
  if (n < 1) throw Error("synthesize_data: n must be >= 1");
  cameron_martin_norm(theta_star, q);  // theta* must lie in H_Q

  const std::size_t dim = q.dim();
  double qaq_tr = 0.0;
  double qaq_op = 0.0;
  double min_mu_lambda = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < dim; ++m) {
    const double w = a[m] * q[m] * q[m];
    qaq_tr += std::abs(w);
    qaq_op = std::max(qaq_op, std::abs(w));
    min_mu_lambda = std::min(min_mu_lambda, q[m] * a[m]);
  }
  if (!std::isfinite(qaq_tr)) {
    throw Error(
        "synthesize_data: sum of lambda_m mu_m^2 overflows; reduce the "
        "truncation or rescale the operators");
  }

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  std::vector<double> data(dim);
  for (std::size_t m = 0; m < dim; ++m) {
    double zm = 0.0;
    if (!zero_noise && a[m] > 0.0) {
      // Z ~ N(0, QAQ) mode-wise: sd = mu_m sqrt(lambda_m).
      const double z = rng::normal(noise_seed, rng::Stream::data, 0,
                                   static_cast<std::uint32_t>(m), 0);
      zm = q[m] * std::sqrt(a[m]) * z;
    }
    data[m] = a[m] * theta_star[m] + zm / (sqrt_n * q[m]);
  }

  ModelInstance inst{q,
                     a,
                     theta_star,
                     n,
                     SpectralVector(std::move(data)),
                     qaq_tr,
                     qaq_op,
                     Coercivity::truncated_only,
                     min_mu_lambda};
  inst.coercivity = classify_coercivity(q, a, min_mu_lambda);
  return inst;
}

LikelihoodEval eval_empirical_loglik(const ModelInstance& m,
                                     const SpectralVector& theta) {
  if (theta.dim() != m.dim()) {
    throw Error("eval_empirical_loglik: dimension mismatch");
  }
  double value = 0.0;
  std::vector<double> grad(m.dim());
  std::vector<double> hess(m.dim());
  for (std::size_t k = 0; k < m.dim(); ++k) {
    const double lam = m.a[k];
    const double mu = m.q[k];
    const double th = theta[k];
    value += -0.5 * lam * th * th + th * m.data_coeffs[k];
    grad[k] = mu * (-lam * th + m.data_coeffs[k]);
    hess[k] = -mu * lam;
  }
  return LikelihoodEval{value, SpectralVector(std::move(grad)),
                        DiagonalOperator::explicit_list(std::move(hess))};
}

SpectralVector population_grad_precond(const ModelInstance& m,
                                       const SpectralVector& theta) {
  std::vector<double> g(m.dim());
  for (std::size_t k = 0; k < m.dim(); ++k) {
    g[k] = -m.q[k] * m.a[k] * (theta[k] - m.theta_star[k]);
  }
  return SpectralVector(std::move(g));
}

GaussianSpec exact_posterior(const ModelInstance& m) {
  const double n = static_cast<double>(m.n);
  std::vector<double> cov(m.dim());
  std::vector<double> mean(m.dim());
  for (std::size_t k = 0; k < m.dim(); ++k) {
    const double denom = 1.0 + n * m.q[k] * m.a[k];
    if (!(denom > 0.0)) {
      throw Error("exact_posterior: 1 + n mu_m lambda_m <= 0 at mode " +
                  std::to_string(k + 1));
    }
    cov[k] = m.q[k] / denom;
    mean[k] = n * m.q[k] * m.data_coeffs[k] / denom;
  }
  return GaussianSpec(SpectralVector(std::move(mean)),
                      DiagonalOperator::explicit_list(std::move(cov)));
}

SpectralVector compute_map(const ModelInstance& m) {
  const double n = static_cast<double>(m.n);
  std::vector<double> map(m.dim());
  for (std::size_t k = 0; k < m.dim(); ++k) {
    map[k] = n * m.data_coeffs[k] / (1.0 / m.q[k] + n * m.a[k]);
  }
  return SpectralVector(std::move(map));
}

double om_objective(const ModelInstance& m, const SpectralVector& theta) {
  const double fn = eval_empirical_loglik(m, theta).value;
  double cm2 = 0.0;
  for (std::size_t k = 0; k < m.dim(); ++k) {
    cm2 += theta[k] * theta[k] / m.q[k];
  }
  return -static_cast<double>(m.n) * fn + 0.5 * cm2;
}

ModelConstants model_constants(const ModelInstance& m, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error("model_constants: delta must lie in (0,1)");
  }
  if (m.coercivity == Coercivity::vanishing) {
    throw AuditBlock(
        "model_constants: condition (L.1) fails -- inf_m mu_m lambda_m "
        "vanishes, no coercivity certificate available");
  }
  ModelConstants c;
  c.mu = m.coercivity_constant;
  double l1 = 0.0;
  for (std::size_t k = 0; k < m.dim(); ++k) {
    l1 = std::max(l1, std::abs(m.q[k] * m.a[k]));
  }
  c.l1 = l1;
  c.b = 1.0;
  c.eps1 = 0.0;
  c.eps2 = (std::sqrt(m.qaq_trace) +
            std::sqrt(2.0 * m.qaq_opnorm * std::log(1.0 / delta))) /
           std::sqrt(static_cast<double>(m.n));
  return c;
}

bool AuditReport::all_passed() const {
  for (const auto& e : entries) {
    if (e.status == AuditEntry::Status::fail) return false;
  }
  return true;
}

const AuditEntry* AuditReport::find(const std::string& condition) const {
  for (const auto& e : entries) {
    if (e.condition == condition) return &e;
  }
  return nullptr;
}

AuditReport audit_assumptions(const ModelInstance& m, int n_pairs,
                              double radius, std::uint64_t seed) {
  AuditReport rep;
  if (radius <= 0.0 || n_pairs <= 0) {
    for (const char* name : {"A.1", "A.2", "B", "C.1", "C.3"}) {
      rep.entries.push_back(
          {name, AuditEntry::Status::vacuous, 0.0, 0.0, "degenerate pairs"});
    }
    return rep;
  }

  // Analytic values for this model.
  double l1 = 0.0;
  double mu_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m.dim(); ++k) {
    l1 = std::max(l1, std::abs(m.q[k] * m.a[k]));
    mu_min = std::min(mu_min, m.q[k] * m.a[k]);
  }

  double worst_lip = 0.0;          // max ||dg|| / ||dtheta||
  double worst_growth = 0.0;       // max ||g||^2 / (1 + ||theta||^2)
  double worst_monotone = -std::numeric_limits<double>::infinity();
  double worst_concavity = std::numeric_limits<double>::infinity();
  std::string witness_concavity;
  std::string witness_monotone;

  const double inv_n = 1.0 / static_cast<double>(m.n);
  for (int p = 0; p < n_pairs; ++p) {
    const auto pair_id = static_cast<std::uint32_t>(p);
    const SpectralVector t1 = sample_in_ball(m, radius, seed, pair_id, 0);
    const SpectralVector t2 = sample_in_ball(m, radius, seed, pair_id, 1);
    const SpectralVector g1 = eval_empirical_loglik(m, t1).gradient_precond;
    const SpectralVector g2 = eval_empirical_loglik(m, t2).gradient_precond;

    double d2 = 0.0, dg2 = 0.0, inner = 0.0;
    for (std::size_t k = 0; k < m.dim(); ++k) {
      const double dt = t1[k] - t2[k];
      const double dgk = g1[k] - g2[k];
      d2 += dt * dt;
      dg2 += dgk * dgk;
      // drift difference: -dt/n + dg (V = 0)
      inner += (-dt * inv_n + dgk) * dt;
    }
    if (d2 > 0.0) {
      worst_lip = std::max(worst_lip, std::sqrt(dg2 / d2));
      if (inner > worst_monotone) {
        worst_monotone = inner;
        witness_monotone = "pair " + std::to_string(p);
      }
    }

    const double g1n2 = g1.squared_norm();
    worst_growth =
        std::max(worst_growth, g1n2 / (1.0 + t1.squared_norm()));

    // (C.1): -<Q grad F(theta), theta - theta*> >= mu ||theta - theta*||^2.
    const SpectralVector gp = population_grad_precond(m, t1);
    double h2 = 0.0, c_inner = 0.0;
    for (std::size_t k = 0; k < m.dim(); ++k) {
      const double h = t1[k] - m.theta_star[k];
      h2 += h * h;
      c_inner += -gp[k] * h;
    }
    if (h2 > 1e-30) {
      const double ratio = c_inner / h2;
      if (ratio < worst_concavity) {
        worst_concavity = ratio;
        witness_concavity = "pair " + std::to_string(p);
      }
    }
  }

  const double tol = 1e-9 * std::max(1.0, l1);
  rep.entries.push_back({"A.1",
                         worst_lip <= l1 + tol ? AuditEntry::Status::pass
                                               : AuditEntry::Status::fail,
                         l1, worst_lip, ""});
  // Affine gradient: ||g(theta)||^2 <= 2 (L1^2 ||theta||^2 + ||Q d||^2).
  double qd2 = 0.0;
  for (std::size_t k = 0; k < m.dim(); ++k) {
    const double qd = m.q[k] * m.data_coeffs[k];
    qd2 += qd * qd;
  }
  const double growth_const = 2.0 * std::max(l1 * l1, qd2);
  rep.entries.push_back({"A.2",
                         worst_growth <= growth_const + tol
                             ? AuditEntry::Status::pass
                             : AuditEntry::Status::fail,
                         growth_const, worst_growth, ""});
  rep.entries.push_back({"B",
                         worst_monotone <= tol ? AuditEntry::Status::pass
                                               : AuditEntry::Status::fail,
                         0.0, worst_monotone, witness_monotone});
  rep.entries.push_back({"C.1",
                         (mu_min > 0.0 && worst_concavity >= mu_min - tol)
                             ? AuditEntry::Status::pass
                             : AuditEntry::Status::fail,
                         mu_min, worst_concavity, witness_concavity});
  rep.entries.push_back({"C.3", AuditEntry::Status::pass, 0.0, 0.0,
                         "V = 0: holds with any B >= 0"});
  return rep;
}

}  // namespace spdelab
