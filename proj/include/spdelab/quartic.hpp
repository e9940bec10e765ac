#pragma once

#include <cstdint>
#include <vector>

#include "spdelab/langevin.hpp"
#include "spdelab/model.hpp"
#include "spdelab/spectral.hpp"

// Non-conjugate companion of the linear Gaussian model: the log-likelihood
// picks up a convex quartic penalty per mode,
//   F~_n(theta) = F_n(theta) - (kappa/4) sum_m w_m (theta_m - c_m)^4,
// so the drift gains a cubic term while remaining monotone.  Everything
// stays mode-separable, which keeps the perturbed posterior computable by
// one-dimensional quadrature.

namespace spdelab {

struct QuarticPerturbation {
  double kappa = 0.0;
  SpectralVector center;        // usually theta*
  std::vector<double> weights;  // w_m >= 0
};

DriftSpec perturbed_drift(const ModelInstance& m, const QuarticPerturbation& p);

// Unnormalized log posterior density of mode k at x:
//   n (-lambda x^2/2 + d x - (kappa w/4)(x-c)^4) - x^2 / (2 mu).
double perturbed_mode_log_unnorm(const ModelInstance& m,
                                 const QuarticPerturbation& p, std::size_t mode,
                                 double x);

// Per-mode MAP by Newton iteration on the strictly convex objective.
SpectralVector perturbed_map(const ModelInstance& m,
                             const QuarticPerturbation& p);

// hat H_n eigenvalues at a point: lambda_m + 3 kappa w_m (x_m - c_m)^2.
DiagonalOperator perturbed_empirical_hessian(const ModelInstance& m,
                                             const QuarticPerturbation& p,
                                             const SpectralVector& at);

// Log normalizing constants of each mode density, by adaptive quadrature.
std::vector<double> perturbed_mode_log_norms(const ModelInstance& m,
                                             const QuarticPerturbation& p);

// Quadrature-grade KL(perturbed posterior || gaussian) for cross-checks.
double perturbed_kl_vs_gaussian_quadrature(const ModelInstance& m,
                                           const QuarticPerturbation& p,
                                           const GaussianSpec& gauss);

// End states of the semi-implicit Langevin chain, one row per replica.
std::vector<std::vector<double>> perturbed_langevin_samples(
    const ModelInstance& m, const QuarticPerturbation& p, const SimConfig& cfg,
    unsigned threads = 1);

// Adaptive Simpson integral of fn over [a, b] to the given tolerance.
double integrate(const std::function<double(double)>& fn, double a, double b,
                 double tol = 1e-12);

}  // namespace spdelab
