#include "spdelab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spdelab/errors.hpp"

namespace spdelab {

namespace {

void ensure_all_finite(const std::vector<double>& xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) {
      throw Error(std::string(what) + ": non-finite entry");
    }
  }
}

Positivity classify(const std::vector<double>& eigs) {
  bool all_pos = true;
  bool all_nonneg = true;
  for (double e : eigs) {
    if (e <= 0.0) all_pos = false;
    if (e < 0.0) all_nonneg = false;
  }
  if (all_pos) return Positivity::strictly_positive;
  if (all_nonneg) return Positivity::nonnegative;
  return Positivity::indefinite;
}

}  // namespace

SpectralVector::SpectralVector(std::vector<double> coeffs)
    : coeffs_(std::move(coeffs)) {
  ensure_all_finite(coeffs_, "SpectralVector");
}

SpectralVector SpectralVector::zeros(std::size_t dim) {
  return SpectralVector(std::vector<double>(dim, 0.0));
}

SpectralVector SpectralVector::from_fn(
    std::size_t dim, const std::function<double(std::size_t)>& fn) {
  std::vector<double> c(dim);
  for (std::size_t m = 0; m < dim; ++m) c[m] = fn(m + 1);
  return SpectralVector(std::move(c));
}

double SpectralVector::squared_norm() const {
  double s = 0.0;
  for (double x : coeffs_) s += x * x;
  return s;
}

double SpectralVector::norm() const { return std::sqrt(squared_norm()); }

DiagonalOperator::DiagonalOperator(std::vector<double> eigs,
                                   std::optional<DecayLaw> decay)
    : eigs_(std::move(eigs)), decay_(std::move(decay)) {
  if (eigs_.empty()) throw Error("DiagonalOperator: empty eigenvalue list");
  ensure_all_finite(eigs_, "DiagonalOperator");
  positivity_ = classify(eigs_);
}

DiagonalOperator DiagonalOperator::power(double scale, double exponent,
                                         std::size_t dim) {
  if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(exponent)) {
    throw Error("DiagonalOperator::power: scale must be positive and finite");
  }
  std::vector<double> eigs(dim);
  for (std::size_t m = 0; m < dim; ++m) {
    eigs[m] = scale * std::pow(static_cast<double>(m + 1), -exponent);
  }
  return DiagonalOperator(std::move(eigs), DecayLaw::power(scale, exponent));
}

DiagonalOperator DiagonalOperator::explicit_list(std::vector<double> eigs) {
  return DiagonalOperator(std::move(eigs), std::nullopt);
}

DiagonalOperator DiagonalOperator::from_law(
    const DecayLaw& law, std::size_t dim,
    const std::vector<double>& explicit_values) {
  if (law.kind == DecayLaw::Kind::power) {
    return power(law.scale, law.exponent, dim);
  }
  return explicit_list(explicit_values);
}

TraceResult trace(const DiagonalOperator& op) {
  if (op.positivity_class() == Positivity::indefinite) {
    throw Error("trace: indefinite operator is not a covariance");
  }
  TraceResult out;
  double s = 0.0;
  for (double e : op.eigs()) s += e;
  out.value = s;
  if (op.decay() && op.decay()->kind == DecayLaw::Kind::power &&
      op.decay()->exponent > 1.0) {
    const double rho = op.decay()->exponent;
    const double m = static_cast<double>(op.dim());
    out.tail_estimate = op.decay()->scale * std::pow(m, 1.0 - rho) / (rho - 1.0);
  }
  return out;
}

double op_norm(const DiagonalOperator& op) {
  double best = 0.0;
  for (double e : op.eigs()) best = std::max(best, std::abs(e));
  return best;
}

double cameron_martin_norm(const SpectralVector& v,
                           const DiagonalOperator& q) {
  if (v.dim() != q.dim()) {
    throw Error("cameron_martin_norm: dimension mismatch");
  }
  if (q.positivity_class() == Positivity::indefinite) {
    throw Error("cameron_martin_norm: covariance must be nonnegative");
  }
  double s = 0.0;
  for (std::size_t m = 0; m < v.dim(); ++m) {
    const double c = v[m];
    const double mu = q[m];
    if (mu == 0.0) {
      if (c != 0.0) {
        throw NotInCameronMartin(
            "cameron_martin_norm: not in Cameron-Martin space (mode " +
            std::to_string(m + 1) + " has zero covariance eigenvalue)");
      }
      continue;
    }
    s += c * c / mu;
  }
  if (!std::isfinite(s)) {
    throw Error("cameron_martin_norm: numeric overflow");
  }
  return std::sqrt(s);
}

GaussianSpec::GaussianSpec(SpectralVector mean, DiagonalOperator cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (mean_.dim() != cov_.dim()) {
    throw Error("GaussianSpec: mean/cov dimension mismatch");
  }
  if (cov_.positivity_class() != Positivity::strictly_positive) {
    throw Error("GaussianSpec: covariance must be strictly positive");
  }
  const double tr = trace(cov_).value;
  if (!(tr > 0.0) || !std::isfinite(tr)) {
    throw Error("GaussianSpec: covariance trace must be finite and positive");
  }
}

SpectralVector sample_gaussian(const GaussianSpec& spec, std::uint64_t seed,
                               std::uint32_t replica, rng::Stream stream) {
  std::vector<double> out(spec.dim());
  for (std::size_t m = 0; m < spec.dim(); ++m) {
    const double z =
        rng::normal(seed, stream, replica, static_cast<std::uint32_t>(m), 0);
    out[m] = spec.mean()[m] + std::sqrt(spec.cov()[m]) * z;
  }
  return SpectralVector(std::move(out));
}

FerniqueReport fernique_check(const GaussianSpec& spec, double alpha,
                              int n_samples, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw Error("fernique_check: alpha must be positive");
  FerniqueReport rep;
  rep.alpha_bound = 1.0 / (2.0 * op_norm(spec.cov()));
  rep.finite = alpha < rep.alpha_bound;
  double acc = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const SpectralVector x = sample_gaussian(
        spec, seed, static_cast<std::uint32_t>(i), rng::Stream::fernique);
    acc += std::exp(alpha * x.squared_norm());
  }
  rep.finite_estimate = acc / static_cast<double>(n_samples);
  return rep;
}

}  // namespace spdelab
