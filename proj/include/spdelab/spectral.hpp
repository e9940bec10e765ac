#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "spdelab/rng.hpp"

// Finite spectral truncation of a separable Hilbert space: all vectors are
// coefficient sequences in one fixed eigenbasis, all operators are diagonal
// in that basis.  Values are immutable after construction and every
// operation here is a pure function.

namespace spdelab {

// Eigenvalue decay descriptor.  `power` means eig_m = scale * m^(-exponent);
// a negative exponent describes a growing sequence (information operators).
struct DecayLaw {
  enum class Kind { power, explicit_list };
  Kind kind = Kind::explicit_list;
  double scale = 0.0;
  double exponent = 0.0;

  static DecayLaw power(double scale, double exponent) {
    return DecayLaw{Kind::power, scale, exponent};
  }
  static DecayLaw explicit_list() { return DecayLaw{}; }
};

class SpectralVector {
 public:
  explicit SpectralVector(std::vector<double> coeffs);

  static SpectralVector zeros(std::size_t dim);
  static SpectralVector from_fn(std::size_t dim,
                                const std::function<double(std::size_t)>& fn);

  const std::vector<double>& coeffs() const { return coeffs_; }
  std::size_t dim() const { return coeffs_.size(); }
  double operator[](std::size_t i) const { return coeffs_[i]; }

  double norm() const;          // Hilbert norm of the truncation
  double squared_norm() const;

 private:
  std::vector<double> coeffs_;
};

enum class Positivity { strictly_positive, nonnegative, indefinite };

class DiagonalOperator {
 public:
  // eig_m = scale * m^(-exponent), m = 1..dim.
  static DiagonalOperator power(double scale, double exponent,
                                std::size_t dim);
  static DiagonalOperator explicit_list(std::vector<double> eigs);
  static DiagonalOperator from_law(const DecayLaw& law, std::size_t dim,
                                   const std::vector<double>& explicit_values);

  const std::vector<double>& eigs() const { return eigs_; }
  std::size_t dim() const { return eigs_.size(); }
  double operator[](std::size_t i) const { return eigs_[i]; }
  Positivity positivity_class() const { return positivity_; }
  const std::optional<DecayLaw>& decay() const { return decay_; }

 private:
  DiagonalOperator(std::vector<double> eigs, std::optional<DecayLaw> decay);

  std::vector<double> eigs_;
  std::optional<DecayLaw> decay_;
  Positivity positivity_;
};

struct TraceResult {
  double value = 0.0;
  // Analytic bound on the discarded tail, available for power decay with
  // exponent > 1: scale * M^(1-rho) / (rho-1).
  std::optional<double> tail_estimate;
};

TraceResult trace(const DiagonalOperator& op);

double op_norm(const DiagonalOperator& op);

// ||Q^{-1/2} v|| over the truncation.  Throws NotInCameronMartin when a
// zero eigenvalue meets a nonzero coefficient.
double cameron_martin_norm(const SpectralVector& v, const DiagonalOperator& q);

class GaussianSpec {
 public:
  GaussianSpec(SpectralVector mean, DiagonalOperator cov);

  const SpectralVector& mean() const { return mean_; }
  const DiagonalOperator& cov() const { return cov_; }
  std::size_t dim() const { return mean_.dim(); }

 private:
  SpectralVector mean_;
  DiagonalOperator cov_;
};

// mean + cov^{1/2} z with z i.i.d. standard normal per mode, keyed by
// (seed, stream, replica, mode).  Same key, same bits.
SpectralVector sample_gaussian(const GaussianSpec& spec, std::uint64_t seed,
                               std::uint32_t replica = 0,
                               rng::Stream stream = rng::Stream::sampler);

struct FerniqueReport {
  double finite_estimate = 0.0;  // Monte Carlo estimate of E exp(alpha ||x||^2)
  double alpha_bound = 0.0;      // 1 / (2 ||cov||_op)
  bool finite = false;           // alpha < alpha_bound
};

FerniqueReport fernique_check(const GaussianSpec& spec, double alpha,
                              int n_samples, std::uint64_t seed);

}  // namespace spdelab
