#include "spdelab/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "spdelab/errors.hpp"

namespace spdelab {

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string digest_of(const std::map<std::string, std::string>& fields) {
  std::ostringstream os;
  for (const auto& [k, v] : fields) os << k << "=" << v << ";";
  return os.str();
}

}  // namespace

ScalarFn ScalarFn::power(double coef, double exponent) {
  ScalarFn f;
  f.kind_ = Kind::power;
  f.coef_ = coef;
  f.exponent_ = exponent;
  return f;
}

ScalarFn ScalarFn::tabulated(std::vector<double> r, std::vector<double> v) {
  if (r.size() != v.size() || r.size() < 2) {
    throw Error("ScalarFn::tabulated: need matching lists of >= 2 points");
  }
  for (std::size_t i = 1; i < r.size(); ++i) {
    if (!(r[i] > r[i - 1])) {
      throw Error("ScalarFn::tabulated: abscissae must be increasing");
    }
  }
  ScalarFn f;
  f.kind_ = Kind::tabulated;
  f.knots_r_ = std::move(r);
  f.knots_v_ = std::move(v);
  // Fritsch-Carlson monotone cubic slopes.
  const std::size_t n = f.knots_r_.size();
  std::vector<double> d(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    d[i] = (f.knots_v_[i + 1] - f.knots_v_[i]) /
           (f.knots_r_[i + 1] - f.knots_r_[i]);
  }
  f.slopes_.assign(n, 0.0);
  f.slopes_[0] = d[0];
  f.slopes_[n - 1] = d[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (d[i - 1] * d[i] <= 0.0) {
      f.slopes_[i] = 0.0;
    } else {
      f.slopes_[i] = 0.5 * (d[i - 1] + d[i]);
    }
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (d[i] == 0.0) {
      f.slopes_[i] = f.slopes_[i + 1] = 0.0;
      continue;
    }
    const double a = f.slopes_[i] / d[i];
    const double b = f.slopes_[i + 1] / d[i];
    const double s = a * a + b * b;
    if (s > 9.0) {
      const double t = 3.0 / std::sqrt(s);
      f.slopes_[i] = t * a * d[i];
      f.slopes_[i + 1] = t * b * d[i];
    }
  }
  return f;
}

double ScalarFn::operator()(double r) const {
  if (kind_ == Kind::power) {
    return coef_ * std::pow(r, exponent_);
  }
  const auto& xs = knots_r_;
  if (r <= xs.front()) {
    return knots_v_.front() + slopes_.front() * (r - xs.front());
  }
  if (r >= xs.back()) {
    return knots_v_.back() + slopes_.back() * (r - xs.back());
  }
  const auto it = std::upper_bound(xs.begin(), xs.end(), r);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double h = xs[i + 1] - xs[i];
  const double t = (r - xs[i]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  return h00 * knots_v_[i] + h10 * h * slopes_[i] + h01 * knots_v_[i + 1] +
         h11 * h * slopes_[i + 1];
}

double ScalarFn::d1(double r) const {
  const double h = std::max(std::abs(r), 1e-12) * 1e-5;
  return ((*this)(r + h) - (*this)(r - h)) / (2.0 * h);
}

double ScalarFn::d2(double r) const {
  const double h = std::max(std::abs(r), 1e-12) * 1e-5;
  return ((*this)(r + h) - 2.0 * (*this)(r) + (*this)(r - h)) / (h * h);
}

std::string ScalarFn::describe() const {
  if (kind_ == Kind::power) {
    return "power(coef=" + fmt17(coef_) + ",exponent=" + fmt17(exponent_) + ")";
  }
  std::ostringstream os;
  os << "tabulated(n=" << knots_r_.size() << ",r0=" << fmt17(knots_r_.front())
     << ",r1=" << fmt17(knots_r_.back()) << ")";
  return os.str();
}

bool Certificate::valid() const {
  if (!(radius > 0.0)) return false;
  for (const auto& e : admissibility) {
    if (!e.pass) return false;
  }
  return true;
}

std::string Certificate::canonical_text() const {
  std::map<std::string, std::string> fields;
  fields["kind"] = kind == Kind::strong ? "strong" : "weak";
  fields["radius"] = fmt17(radius);
  fields["delta"] = fmt17(delta);
  fields["valid"] = valid() ? "true" : "false";
  fields["inputs_digest"] = inputs_digest;
  for (const auto& [name, value] : terms) {
    fields["term." + name] = fmt17(value);
  }
  for (const auto& e : admissibility) {
    fields["admissibility." + e.condition] =
        (e.pass ? std::string("pass") : std::string("fail")) +
        (e.witness.empty() ? "" : " (" + e.witness + ")");
  }
  if (empirical_validation) {
    fields["validation.tail_mass"] = fmt17(empirical_validation->tail_mass);
    fields["validation.se"] = fmt17(empirical_validation->se);
    fields["validation.delta"] = fmt17(empirical_validation->delta);
    fields["validation.pass"] = empirical_validation->pass ? "true" : "false";
  }
  std::ostringstream os;
  for (const auto& [k, v] : fields) os << k << ": " << v << "\n";
  return os.str();
}

Certificate strong_radius(const StrongRateInputs& in) {
  if (!(in.mu > 0.0)) throw Error("strong_radius: mu must be positive");
  if (!(in.delta > 0.0 && in.delta < 1.0)) {
    throw Error("strong_radius: delta must lie in (0,1)");
  }
  if (in.n < 1) throw Error("strong_radius: n must be >= 1");
  if (in.eps1 > in.mu / 6.0) {
    throw Error(
        "strong_radius: hypothesis unmet: n too small for the (C.2) envelope "
        "(eps1 > mu/6)");
  }

  const double n = static_cast<double>(in.n);
  const double log_term = std::log(1.0 / in.delta);
  const double t_trace = in.c_universal * std::sqrt(in.tr_q / (n * in.mu));
  const double t_prior = in.b / (n * in.mu);
  const double t_empirical = in.eps2 / in.mu;
  const double t_confidence =
      in.c_universal * std::sqrt(in.q_opnorm * log_term / (n * in.mu));

  Certificate cert;
  cert.kind = Certificate::Kind::strong;
  cert.delta = in.delta;
  cert.radius = t_trace + t_prior + t_empirical + t_confidence;
  cert.terms = {{"trace", t_trace},
                {"prior", t_prior},
                {"empirical", t_empirical},
                {"confidence", t_confidence}};
  cert.admissibility.push_back(
      {"eps1<=mu/6", in.eps1 <= in.mu / 6.0,
       "eps1=" + fmt17(in.eps1) + ", mu/6=" + fmt17(in.mu / 6.0)});
  cert.admissibility.push_back({"mu>0", in.mu > 0.0, ""});
  cert.inputs_digest = digest_of({{"kind", "strong"},
                                  {"tr_q", fmt17(in.tr_q)},
                                  {"q_opnorm", fmt17(in.q_opnorm)},
                                  {"mu", fmt17(in.mu)},
                                  {"b", fmt17(in.b)},
                                  {"eps1", fmt17(in.eps1)},
                                  {"eps2", fmt17(in.eps2)},
                                  {"n", std::to_string(in.n)},
                                  {"delta", fmt17(in.delta)},
                                  {"c_universal", fmt17(in.c_universal)}});
  return cert;
}

Certificate weak_fixed_point(const WeakRateInputs& in) {
  if (!(in.delta > 0.0 && in.delta < 1.0)) {
    throw Error("weak_fixed_point: delta must lie in (0,1)");
  }
  if (in.n < 1) throw Error("weak_fixed_point: n must be >= 1");
  if (!(in.z_max > 0.0)) throw Error("weak_fixed_point: z_max must be > 0");

  const double n = static_cast<double>(in.n);
  const double rhs_const =
      in.tr_q / n + std::log(1.0 / in.delta) * in.q_opnorm / n;
  const auto residual = [&](double z) {
    return in.psi(z) -
           (in.eps * in.zeta(z) * z + (in.b / n) * z + rhs_const);
  };

  Certificate cert;
  cert.kind = Certificate::Kind::weak;
  cert.delta = in.delta;
  cert.inputs_digest = digest_of({{"kind", "weak"},
                                  {"psi", in.psi.describe()},
                                  {"zeta", in.zeta.describe()},
                                  {"eps", fmt17(in.eps)},
                                  {"b", fmt17(in.b)},
                                  {"tr_q", fmt17(in.tr_q)},
                                  {"q_opnorm", fmt17(in.q_opnorm)},
                                  {"n", std::to_string(in.n)},
                                  {"delta", fmt17(in.delta)},
                                  {"z_max", fmt17(in.z_max)}});

  // (W.4) precheck: liminf psi(z)/(z zeta(z)) on the top decades of the grid
  // must exceed eps.  Heuristic; the bracketing below is the final arbiter.
  constexpr int kGrid = 1000;
  const double z_lo = in.z_max * 1e-6;
  double liminf = std::numeric_limits<double>::infinity();
  for (int i = kGrid / 2; i <= kGrid; ++i) {
    const double z =
        z_lo * std::pow(in.z_max / z_lo, static_cast<double>(i) / kGrid);
    const double denom = z * in.zeta(z);
    if (denom > 0.0) liminf = std::min(liminf, in.psi(z) / denom);
  }
  cert.admissibility.push_back(
      {"W.4 liminf", liminf > in.eps,
       "liminf~" + fmt17(liminf) + " vs eps=" + fmt17(in.eps)});

  // Degenerate right-hand side: the only root is z = 0.
  if (rhs_const == 0.0 && in.b == 0.0 && in.eps == 0.0) {
    cert.radius = 0.0;
    cert.admissibility.push_back(
        {"positive radius", false, "all right-hand constants are zero"});
    return cert;
  }

  // Sign scan on a geometric grid.
  int sign_changes = 0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  double prev_z = z_lo;
  double prev_res = residual(prev_z);
  for (int i = 1; i <= kGrid; ++i) {
    const double z =
        z_lo * std::pow(in.z_max / z_lo, static_cast<double>(i) / kGrid);
    const double res = residual(z);
    if ((prev_res < 0.0 && res >= 0.0) || (prev_res > 0.0 && res <= 0.0)) {
      if (sign_changes == 0) {
        bracket_lo = prev_z;
        bracket_hi = z;
      }
      ++sign_changes;
    }
    prev_z = z;
    prev_res = res;
  }
  if (sign_changes == 0) {
    throw Error(
        "weak_fixed_point: no bracket within z_max -- (W.4) violated at this "
        "(n, delta)");
  }
  if (sign_changes > 1) {
    throw Error("weak_fixed_point: multiple sign changes -- non-admissible "
                "(psi, zeta) pair");
  }

  double lo = bracket_lo, hi = bracket_hi;
  double flo = residual(lo);
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double fm = residual(mid);
    if ((flo < 0.0) == (fm < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-10 * std::max(1e-300, std::abs(lo))) break;
  }
  const double z_star = 0.5 * (lo + hi);
  cert.radius = z_star;
  cert.terms = {{"z_star", z_star},
                {"residual", residual(z_star)},
                {"rhs_const", rhs_const}};
  cert.admissibility.push_back(
      {"unique root", true,
       "single sign change on " + std::to_string(kGrid) + "-point grid"});
  const double res_tol = 1e-9 * std::max(1.0, std::abs(in.psi(z_star)));
  cert.admissibility.push_back(
      {"residual tolerance", std::abs(residual(z_star)) <= res_tol,
       "|residual|=" + fmt17(std::abs(residual(z_star)))});
  return cert;
}

W3Report check_w3(const ScalarFn& psi, const ScalarFn& zeta, double r_min,
                  double r_max, int n_grid) {
  if (!(r_min > 0.0 && r_max > r_min) || n_grid < 2) {
    throw Error("check_w3: need 0 < r_min < r_max and n_grid >= 2");
  }
  W3Report rep;
  rep.worst_margin_ineq1 = std::numeric_limits<double>::infinity();
  rep.worst_margin_ineq2 = std::numeric_limits<double>::infinity();
  rep.worst_convexity = std::numeric_limits<double>::infinity();

  // xi(r): inverse of s -> s zeta(s), bisection plus Newton polish.
  const auto xi = [&](double r) {
    double lo = 0.0, hi = std::max(r_max, 1.0);
    while (hi * zeta(hi) < r && hi < 1e12) hi *= 2.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid * zeta(mid) < r) {
        lo = mid;
      } else {
        hi = mid;
      }
      if (hi - lo <= 1e-12 * std::max(1.0, hi)) break;
    }
    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 4; ++it) {
      const double g = s * zeta(s) - r;
      const double dg = zeta(s) + s * zeta.d1(s);
      if (!(std::abs(dg) > 0.0)) break;
      const double next = s - g / dg;
      if (!(next > 0.0) || !std::isfinite(next)) break;
      s = next;
    }
    return s;
  };

  std::vector<double> grid(static_cast<std::size_t>(n_grid));
  for (int i = 0; i < n_grid; ++i) {
    grid[static_cast<std::size_t>(i)] =
        r_min *
        std::pow(r_max / r_min, static_cast<double>(i) / (n_grid - 1));
  }

  for (double r : grid) {
    const double p = psi(r), pz = zeta(r);
    const double p1 = psi.d1(r), z1 = zeta.d1(r);
    const double p2 = psi.d2(r), z2 = zeta.d2(r);
    const double scale1 = std::max(1.0, std::abs(r * p1 * pz));
    const double m1 = (r * p1 * pz - (r * p * z1 + p * pz)) / scale1;
    const double scale2 = std::max(1.0, std::abs(r * r * p2 * pz));
    const double m2 =
        (r * r * p2 * pz + r * p1 * pz - (3.0 * p * pz + r * r * p * z2)) /
        scale2;
    // Convexity of psi(xi(.)) via central second differences, normalized by
    // the composed map's own curvature scale.
    const double h = r * 1e-3;
    const double psi_xi = psi(xi(r));
    const double conv_raw =
        h > 0.0 ? (psi(xi(r + h)) - 2.0 * psi_xi + psi(xi(r - h))) / (h * h)
                : 0.0;
    const double conv = conv_raw / std::max(1.0, std::abs(psi_xi) / (r * r));

    const double tol = -1e-7;
    if ((m1 < tol || m2 < tol || conv < tol) && !rep.first_violation_r) {
      rep.first_violation_r = r;
    }
    rep.worst_margin_ineq1 = std::min(rep.worst_margin_ineq1, m1);
    rep.worst_margin_ineq2 = std::min(rep.worst_margin_ineq2, m2);
    rep.worst_convexity = std::min(rep.worst_convexity, conv);
  }
  const double tol = -1e-7;
  rep.pass = rep.worst_margin_ineq1 >= tol && rep.worst_margin_ineq2 >= tol &&
             rep.worst_convexity >= tol;
  return rep;
}

Certificate validate_certificate(Certificate cert, const ModelInstance& model,
                                 int n_samples, std::uint64_t seed,
                                 unsigned threads) {
  const TailMass tm = tail_mass_estimate(model, cert.radius, n_samples,
                                         SamplerKind::exact, seed, threads);
  EmpiricalValidation v;
  v.tail_mass = tm.mass;
  v.se = tm.se;
  v.delta = cert.delta;
  v.pass = tm.mass <= cert.delta + 3.0 * tm.se;
  cert.empirical_validation = v;
  return cert;
}

}  // namespace spdelab
