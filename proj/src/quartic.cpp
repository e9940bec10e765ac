#include "spdelab/quartic.hpp"

#include <algorithm>
#include <cmath>

#include "spdelab/errors.hpp"
#include "spdelab/parallel.hpp"

namespace spdelab {

namespace {

double simpson(const std::function<double(double)>& fn, double a, double b,
               double fa, double fm, double fb, double whole, double tol,
               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = fn(lm);
  const double frm = fn(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(fn, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(fn, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

void validate(const ModelInstance& m, const QuarticPerturbation& p) {
  if (p.center.dim() != m.dim() || p.weights.size() != m.dim()) {
    throw Error("quartic perturbation: dimension mismatch");
  }
  if (p.kappa < 0.0) throw Error("quartic perturbation: kappa must be >= 0");
  for (double w : p.weights) {
    if (w < 0.0) throw Error("quartic perturbation: weights must be >= 0");
  }
}

}  // namespace

double integrate(const std::function<double(double)>& fn, double a, double b,
                 double tol) {
  const double m = 0.5 * (a + b);
  const double fa = fn(a), fm = fn(m), fb = fn(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(fn, a, b, fa, fm, fb, whole, tol, 48);
}

DriftSpec perturbed_drift(const ModelInstance& m,
                          const QuarticPerturbation& p) {
  validate(m, p);
  const std::size_t dim = m.dim();
  std::vector<double> slope(dim), intercept(dim), mus(dim), centers(dim),
      cubic(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    slope[k] = m.q[k] * m.a[k];
    intercept[k] = m.q[k] * m.data_coeffs[k];
    mus[k] = m.q[k];
    centers[k] = p.center[k];
    cubic[k] = p.kappa * p.weights[k];
  }
  auto lik = [slope, intercept, mus, centers, cubic](
                 std::span<const double> theta, std::span<double> out) {
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double d = theta[k] - centers[k];
      out[k] = -slope[k] * theta[k] + intercept[k] -
               mus[k] * cubic[k] * d * d * d;
    }
  };
  auto prior = [](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  return DriftSpec::general(std::move(lik), std::move(prior), dim);
}

double perturbed_mode_log_unnorm(const ModelInstance& m,
                                 const QuarticPerturbation& p, std::size_t mode,
                                 double x) {
  const double n = static_cast<double>(m.n);
  const double d = x - p.center[mode];
  const double quart = 0.25 * p.kappa * p.weights[mode] * d * d * d * d;
  return n * (-0.5 * m.a[mode] * x * x + m.data_coeffs[mode] * x - quart) -
         0.5 * x * x / m.q[mode];
}

SpectralVector perturbed_map(const ModelInstance& m,
                             const QuarticPerturbation& p) {
  validate(m, p);
  const double n = static_cast<double>(m.n);
  std::vector<double> out(m.dim());
  for (std::size_t k = 0; k < m.dim(); ++k) {
    const double kw = p.kappa * p.weights[k];
    const double c = p.center[k];
    // Minimize n(lambda x^2/2 - d x + kw (x-c)^4/4) + x^2/(2 mu).
    double x = compute_map(m)[k];
    for (int it = 0; it < 100; ++it) {
      const double dd = x - c;
      const double g =
          n * (m.a[k] * x - m.data_coeffs[k] + kw * dd * dd * dd) +
          x / m.q[k];
      const double h = n * (m.a[k] + 3.0 * kw * dd * dd) + 1.0 / m.q[k];
      const double step = g / h;
      x -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    out[k] = x;
  }
  return SpectralVector(std::move(out));
}

DiagonalOperator perturbed_empirical_hessian(const ModelInstance& m,
                                             const QuarticPerturbation& p,
                                             const SpectralVector& at) {
  validate(m, p);
  std::vector<double> eigs(m.dim());
  for (std::size_t k = 0; k < m.dim(); ++k) {
    const double d = at[k] - p.center[k];
    eigs[k] = m.a[k] + 3.0 * p.kappa * p.weights[k] * d * d;
  }
  return DiagonalOperator::explicit_list(std::move(eigs));
}

namespace {

// Integration window for mode k: Gaussian scale around the perturbed MAP.
struct ModeWindow {
  double lo, hi, peak;
};

ModeWindow mode_window(const ModelInstance& m, const QuarticPerturbation& p,
                       std::size_t k, double map_k) {
  const double n = static_cast<double>(m.n);
  const double d = map_k - p.center[k];
  const double curv =
      n * (m.a[k] + 3.0 * p.kappa * p.weights[k] * d * d) + 1.0 / m.q[k];
  const double sd = 1.0 / std::sqrt(curv);
  return ModeWindow{map_k - 14.0 * sd, map_k + 14.0 * sd,
                    perturbed_mode_log_unnorm(m, p, k, map_k)};
}

}  // namespace

std::vector<double> perturbed_mode_log_norms(const ModelInstance& m,
                                             const QuarticPerturbation& p) {
  validate(m, p);
  const SpectralVector map = perturbed_map(m, p);
  std::vector<double> out(m.dim());
  for (std::size_t k = 0; k < m.dim(); ++k) {
    const ModeWindow w = mode_window(m, p, k, map[k]);
    const double z = integrate(
        [&](double x) {
          return std::exp(perturbed_mode_log_unnorm(m, p, k, x) - w.peak);
        },
        w.lo, w.hi, 1e-13);
    out[k] = w.peak + std::log(z);
  }
  return out;
}

double perturbed_kl_vs_gaussian_quadrature(const ModelInstance& m,
                                           const QuarticPerturbation& p,
                                           const GaussianSpec& gauss) {
  validate(m, p);
  if (gauss.dim() != m.dim()) {
    throw Error("perturbed_kl_vs_gaussian_quadrature: dimension mismatch");
  }
  const SpectralVector map = perturbed_map(m, p);
  const std::vector<double> log_norms = perturbed_mode_log_norms(m, p);
  constexpr double half_log_two_pi = 0.91893853320467274178;
  double kl = 0.0;
  for (std::size_t k = 0; k < m.dim(); ++k) {
    const ModeWindow w = mode_window(m, p, k, map[k]);
    const double var = gauss.cov()[k];
    const double mean = gauss.mean()[k];
    kl += integrate(
        [&](double x) {
          const double lp = perturbed_mode_log_unnorm(m, p, k, x) -
                            log_norms[k];
          const double d = x - mean;
          const double lq = -half_log_two_pi - 0.5 * std::log(var) -
                            0.5 * d * d / var;
          return std::exp(lp) * (lp - lq);
        },
        w.lo, w.hi, 1e-13);
  }
  return kl;
}

std::vector<std::vector<double>> perturbed_langevin_samples(
    const ModelInstance& m, const QuarticPerturbation& p, const SimConfig& cfg,
    unsigned threads) {
  validate(m, p);
  cfg.validate();
  const std::size_t dim = m.dim();
  const DriftSpec drift = perturbed_drift(m, p);
  const auto n_steps =
      static_cast<std::size_t>(std::ceil(cfg.t_end / cfg.dt - 1e-12));
  const double inv_n = 1.0 / static_cast<double>(m.n);
  std::vector<double> noise_sd(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    noise_sd[k] = std::sqrt(2.0 * m.q[k] * inv_n * cfg.dt);
  }

  std::vector<std::vector<double>> samples(
      static_cast<std::size_t>(cfg.n_replicas));
  parallel_chunks(
      static_cast<std::size_t>(cfg.n_replicas), 256, threads,
      [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> state(dim), grad(dim);
        for (std::size_t r = begin; r < end; ++r) {
          std::copy(m.theta_star.coeffs().begin(),
                    m.theta_star.coeffs().end(), state.begin());
          for (std::size_t step = 1; step <= n_steps; ++step) {
            drift.likelihood_grad_raw(state, grad);
            const double denom = 1.0 + cfg.dt * inv_n;
            for (std::size_t k = 0; k < dim; ++k) {
              const double z = rng::normal(
                  cfg.seed, rng::Stream::dynamics,
                  static_cast<std::uint32_t>(r),
                  static_cast<std::uint32_t>(k),
                  static_cast<std::uint32_t>(step));
              state[k] =
                  (state[k] + cfg.dt * grad[k] + noise_sd[k] * z) / denom;
            }
          }
          samples[r] = state;
        }
      });
  return samples;
}

}  // namespace spdelab
