#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spdelab/spectral.hpp"

// The linear Gaussian experiment X_i = G theta* + eps_i reduced to its
// sufficient statistic.  G and the noise covariance are never materialized:
// the model is parameterized by the prior covariance Q (eigs mu_m) and the
// information operator A = G* Gamma^{-1} G (eigs lambda_m), which share the
// eigenbasis.  The whitened data enter through data_coeffs, the coefficients
// of G* Gamma^{-1} Xbar_n.

namespace spdelab {

// Whether the coercivity constant inf_m mu_m lambda_m survives beyond the
// truncation.  `vanishing` blocks strong-rate certificates: the truncated
// minimum would fabricate coercivity the full sequence does not have.
enum class Coercivity { certified, truncated_only, vanishing };

struct ModelInstance {
  DiagonalOperator q;
  DiagonalOperator a;
  SpectralVector theta_star;
  long n = 0;
  SpectralVector data_coeffs;

  double qaq_trace = 0.0;   // sum lambda_m mu_m^2
  double qaq_opnorm = 0.0;  // max lambda_m mu_m^2

  Coercivity coercivity = Coercivity::truncated_only;
  double coercivity_constant = 0.0;  // min_m mu_m lambda_m over the truncation

  std::size_t dim() const { return q.dim(); }
};

// Draws the whitened fluctuation Z ~ N(0, QAQ) and assembles
// data_coeffs_m = lambda_m theta*_m + Z_m / (sqrt(n) mu_m).
// `zero_noise` forces Z = 0 (the noiseless forward map).
ModelInstance synthesize_data(const DiagonalOperator& q,
                              const DiagonalOperator& a,
                              const SpectralVector& theta_star, long n,
                              std::uint64_t noise_seed,
                              bool zero_noise = false);

struct LikelihoodEval {
  double value = 0.0;               // F_n(theta), additive constant dropped
  SpectralVector gradient_precond;  // Q grad F_n(theta)
  DiagonalOperator hessian_precond; // -QA, constant in theta
};

LikelihoodEval eval_empirical_loglik(const ModelInstance& m,
                                     const SpectralVector& theta);

// Population counterpart: Q grad F(theta) = -QA (theta - theta*).
SpectralVector population_grad_precond(const ModelInstance& m,
                                       const SpectralVector& theta);

// Conjugate posterior: cov eig_m = mu_m / (1 + n mu_m lambda_m),
// mean_m = n mu_m data_m / (1 + n mu_m lambda_m).
GaussianSpec exact_posterior(const ModelInstance& m);

// Minimizer of the Onsager-Machlup objective -n F_n + 1/2 ||.||^2_{H_Q};
// computed through the stationarity equation (Q^{-1} + nA) theta = n data.
SpectralVector compute_map(const ModelInstance& m);

// The objective itself (V = 0), for independent minimization oracles.
double om_objective(const ModelInstance& m, const SpectralVector& theta);

struct ModelConstants {
  double l1 = 0.0;    // ||QA||_op
  double mu = 0.0;    // coercivity constant min_m mu_m lambda_m
  double b = 1.0;     // stated constant; 0 is the tight value for V = 0
  double eps1 = 0.0;
  double eps2 = 0.0;  // n^{-1/2} (sqrt(tr QAQ) + sqrt(2 ||QAQ||_op log(1/delta)))
};

// Throws AuditBlock when the instance is not coercive.
ModelConstants model_constants(const ModelInstance& m, double delta);

struct AuditEntry {
  std::string condition;
  enum class Status { pass, fail, vacuous } status = Status::vacuous;
  double analytic = 0.0;
  double sampled = 0.0;
  std::string witness;
};

struct AuditReport {
  std::vector<AuditEntry> entries;
  bool all_passed() const;
  const AuditEntry* find(const std::string& condition) const;
};

// Samples pairs in a ball of the given radius around theta* and checks the
// drift assumptions: (A.1) Lipschitz gradients, (A.2) linear growth,
// (B) monotone drift, (C.1) one-point strong concavity, (C.3) prior control.
// Failures are reported, never thrown.
AuditReport audit_assumptions(const ModelInstance& m, int n_pairs,
                              double radius, std::uint64_t seed);

}  // namespace spdelab
