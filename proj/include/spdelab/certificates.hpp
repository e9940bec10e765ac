#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spdelab/langevin.hpp"
#include "spdelab/model.hpp"

// Contraction-rate certificates: the strong-concavity radius
//   c sqrt(tr(Q)/(n mu)) + B/(n mu) + eps2/mu + c sqrt(||Q||_op log(1/delta)/(n mu))
// and the weak-concavity fixed point
//   psi(z) = eps zeta(z) z + (B/n) z + tr(Q)/n + log(1/delta) ||Q||_op / n.
// The constant term uses log(1/delta) ||Q||_op; a moment-order variant with a
// general p in place of log(1/delta) exists but is not what the solver
// implements.

namespace spdelab {

// Scalar envelope function: either coef * r^exponent, or a tabulated set of
// points with monotone cubic interpolation.  Derivatives for the
// admissibility checks use central differences with step h = r * 1e-5.
class ScalarFn {
 public:
  static ScalarFn power(double coef, double exponent);
  static ScalarFn tabulated(std::vector<double> r, std::vector<double> v);

  double operator()(double r) const;
  double d1(double r) const;
  double d2(double r) const;

  bool is_power() const { return kind_ == Kind::power; }
  double power_coef() const { return coef_; }
  double power_exponent() const { return exponent_; }
  std::string describe() const;

 private:
  enum class Kind { power, tabulated };
  Kind kind_ = Kind::power;
  double coef_ = 1.0;
  double exponent_ = 1.0;
  std::vector<double> knots_r_, knots_v_, slopes_;
};

struct StrongRateInputs {
  double tr_q = 0.0;
  double q_opnorm = 0.0;
  double mu = 0.0;
  double b = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  long n = 0;
  double delta = 0.0;
  double c_universal = 1.0;
};

struct WeakRateInputs {
  ScalarFn psi = ScalarFn::power(1.0, 2.0);
  ScalarFn zeta = ScalarFn::power(1.0, 0.0);
  double eps = 0.0;
  double b = 0.0;
  double tr_q = 0.0;
  double q_opnorm = 0.0;
  long n = 0;
  double delta = 0.0;
  double z_max = 1e6;
};

struct AdmissibilityEntry {
  std::string condition;
  bool pass = false;
  std::string witness;
};

struct EmpiricalValidation {
  double tail_mass = 0.0;
  double se = 0.0;
  double delta = 0.0;
  bool pass = false;
};

struct Certificate {
  enum class Kind { strong, weak };
  Kind kind = Kind::strong;
  double radius = 0.0;
  double delta = 0.0;
  std::string inputs_digest;  // canonical serialization of the inputs
  std::vector<std::pair<std::string, double>> terms;
  std::vector<AdmissibilityEntry> admissibility;
  std::optional<EmpiricalValidation> empirical_validation;

  // A failed admissibility entry voids the certificate; the radius is then
  // advisory only.
  bool valid() const;
  // Diff-stable text form: sorted keys, 17 significant digits.
  std::string canonical_text() const;
};

// Throws Error when eps1 > mu/6 (the radius hypothesis is unmet).
Certificate strong_radius(const StrongRateInputs& in);

// Bracketing plus bisection to relative tolerance 1e-10; uniqueness asserted
// by a sign-change count on a geometric grid.  Throws Error when no bracket
// exists within z_max or when multiple sign changes appear.
Certificate weak_fixed_point(const WeakRateInputs& in);

struct W3Report {
  bool pass = false;
  double worst_margin_ineq1 = 0.0;
  double worst_margin_ineq2 = 0.0;
  double worst_convexity = 0.0;
  std::optional<double> first_violation_r;
};

// (W.3) admissibility on a geometric grid over [r_min, r_max]:
//   r psi' zeta >= r psi zeta' + psi zeta,
//   r^2 psi'' zeta + r psi' zeta >= 3 psi zeta + r^2 psi zeta'',
// plus convexity of r -> psi(xi(r)) with xi the inverse of r -> r zeta(r).
W3Report check_w3(const ScalarFn& psi, const ScalarFn& zeta, double r_min,
                  double r_max, int n_grid);

// Fills empirical_validation by exact-sampler tail mass at cert.radius;
// pass iff mass <= delta + 3 se.
Certificate validate_certificate(Certificate cert, const ModelInstance& model,
                                 int n_samples, std::uint64_t seed,
                                 unsigned threads = 1);

}  // namespace spdelab
