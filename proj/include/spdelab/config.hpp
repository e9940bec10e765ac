#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spdelab/certificates.hpp"
#include "spdelab/langevin.hpp"
#include "spdelab/laplace.hpp"
#include "spdelab/model.hpp"
#include "spdelab/spectral.hpp"

// Experiment configuration: a strict JSON schema.  Unknown keys are rejected
// with the offending key named, so typos never silently change a run.

namespace spdelab {

struct ThetaStarSpec {
  enum class Kind { smooth, spike, list };
  Kind kind = Kind::smooth;
  double smoothness = 2.0;  // theta*_m proportional to m^{-s}
  double cm_norm = 1.0;     // target ||theta*||_{H_Q}
  std::size_t mode = 1;     // spike preset
  double value = 1.0;
  std::vector<double> values;

  SpectralVector build(const DiagonalOperator& q) const;
};

struct DecayLawConfig {
  DecayLaw law;
  std::vector<double> explicit_values;

  DiagonalOperator build(std::size_t dim) const;
};

struct ModelConfig {
  std::size_t truncation = 256;
  DecayLawConfig q;
  DecayLawConfig a;
  ThetaStarSpec theta_star;
  long n = 1000;
  std::uint64_t seed = 1;
  bool zero_noise = false;

  ModelInstance build() const;
};

struct SimSection {
  std::optional<double> dt;     // defaults derived from the model when absent
  std::optional<double> t_end;
  int n_replicas = 10000;
  Scheme scheme = Scheme::exact_ou;
  std::vector<double> record_times;
  std::optional<std::uint64_t> seed;
  std::vector<int> moment_ps{2, 4};
  double divergence_guard = 1e8;

  SimConfig build(const ModelInstance& m, std::uint64_t fallback_seed) const;
};

struct ScalarFnConfig {
  bool is_power = true;
  double coef = 1.0;
  double exponent = 2.0;
  std::vector<double> table_r, table_v;

  ScalarFn build() const;
};

struct CertificateSection {
  enum class Kind { strong, weak };
  Kind kind = Kind::strong;
  double c_universal = 1.0;
  double delta = 0.1;
  bool validate = true;
  int n_samples = 10000;
  // weak-rate inputs
  ScalarFnConfig psi;
  ScalarFnConfig zeta;
  std::optional<double> eps;  // absent: use the model's eps2(n, delta)
  double z_max = 1e6;
};

struct LaplaceSection {
  double alpha = 0.5;
  double sigma = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double delta = 0.1;
  HessianSource hessian_source = HessianSource::empirical;
};

struct SweepSection {
  std::string parameter = "n";  // "n" or "delta"
  std::vector<double> values;
  double delta = 0.1;
  int n_samples = 20000;
  double c_universal = 1.0;
};

struct AuditSection {
  int n_pairs = 200;
  double radius = 1.0;
  std::uint64_t seed = 7;
};

struct ExperimentConfig {
  ModelConfig model;
  std::optional<SimSection> sim;
  std::optional<CertificateSection> certificate;
  std::optional<LaplaceSection> laplace;
  std::optional<SweepSection> sweep;
  std::optional<AuditSection> audit;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
};

// Throws ConfigError on schema violations.
ExperimentConfig parse_config_text(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Canonical serialization (sorted keys) hashed with FNV-1a 64.
std::string config_digest(const std::string& json_text);

}  // namespace spdelab
