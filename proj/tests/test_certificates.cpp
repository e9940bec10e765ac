#include <cmath>
#include <cstring>
#include <vector>

#include <doctest.h>

#include "spdelab/certificates.hpp"
#include "spdelab/csvio.hpp"
#include "spdelab/errors.hpp"

using namespace spdelab;

TEST_CASE("strong radius: term-by-term against a long-double oracle") {
  StrongRateInputs in;
  in.tr_q = 1.644934;
  in.q_opnorm = 1.0;
  in.mu = 1.0;
  in.b = 1.0;
  in.eps1 = 0.0;
  in.eps2 = 0.05;
  in.n = 1000;
  in.delta = 0.1;
  in.c_universal = 1.0;
  const Certificate cert = strong_radius(in);

  const long double n = 1000.0L;
  const long double t1 = std::sqrt(1.644934L / n);
  const long double t2 = 1.0L / n;
  const long double t3 = 0.05L;
  const long double t4 = std::sqrt(std::log(10.0L) / n);
  CHECK(std::abs(cert.radius - double(t1 + t2 + t3 + t4)) < 1e-12);
  CHECK(cert.radius == doctest::Approx(0.1395430).epsilon(1e-5));
  CHECK(cert.valid());
  REQUIRE(cert.terms.size() == 4);
  CHECK(cert.terms[0].second == doctest::Approx(double(t1)).epsilon(1e-12));
  CHECK(cert.terms[1].second == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(cert.terms[2].second == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(cert.terms[3].second == doctest::Approx(double(t4)).epsilon(1e-12));
}

TEST_CASE("strong radius limits and scaling") {
  // delta -> 1 with eps2 = b = 0 leaves the trace term only
  StrongRateInputs in;
  in.tr_q = 2.0;
  in.q_opnorm = 1.0;
  in.mu = 0.5;
  in.b = 0.0;
  in.eps1 = 0.0;
  in.eps2 = 0.0;
  in.n = 100;
  in.delta = 1.0 - 1e-15;
  const Certificate only_trace = strong_radius(in);
  CHECK(only_trace.radius ==
        doctest::Approx(std::sqrt(2.0 / (100.0 * 0.5))).epsilon(1e-7));

  // doubling n with eps2 ~ n^{-1/2} shrinks each sqrt-term by sqrt(2)
  StrongRateInputs a = in;
  a.delta = 0.1;
  a.eps2 = 1.0 / std::sqrt(100.0);
  StrongRateInputs b = a;
  b.n = 200;
  b.eps2 = 1.0 / std::sqrt(200.0);
  const Certificate ca = strong_radius(a);
  const Certificate cb = strong_radius(b);
  for (std::size_t t : {0u, 2u, 3u}) {
    CHECK(ca.terms[t].second / cb.terms[t].second ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
  }
  CHECK(ca.terms[1].second == 0.0);

  // hypothesis gate
  StrongRateInputs bad = a;
  bad.eps1 = bad.mu;  // > mu/6
  CHECK_THROWS_WITH_AS(strong_radius(bad),
                       doctest::Contains("hypothesis unmet"), Error);
}

TEST_CASE("strong radius monotonicity on parameter grids") {
  StrongRateInputs base;
  base.tr_q = 1.6;
  base.q_opnorm = 1.0;
  base.mu = 1.0;
  base.b = 1.0;
  base.eps1 = 0.0;
  base.n = 100;
  base.delta = 0.1;

  double prev = 1e300;
  for (long n : {100L, 400L, 1600L, 6400L}) {
    StrongRateInputs in = base;
    in.n = n;
    in.eps2 = 3.0 / std::sqrt(double(n));
    const double r = strong_radius(in).radius;
    CHECK(r < prev);
    prev = r;
  }
  prev = 0.0;
  for (double delta : {0.5, 0.1, 0.01, 0.001}) {
    StrongRateInputs in = base;
    in.eps2 = 0.1;
    in.delta = delta;
    const double r = strong_radius(in).radius;
    CHECK(r > prev);  // nondecreasing as delta shrinks
    prev = r;
  }
  prev = 1e300;
  for (double mu : {0.5, 1.0, 2.0, 4.0}) {
    StrongRateInputs in = base;
    in.eps2 = 0.1;
    in.mu = mu;
    const double r = strong_radius(in).radius;
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("weak fixed point: quadratic closed form") {
  WeakRateInputs in;
  in.psi = ScalarFn::power(1.0, 2.0);
  in.zeta = ScalarFn::power(1.0, 0.0);
  in.eps = 0.1;
  in.b = 0.0;
  in.tr_q = 1.0;      // tr/n = 0.01 at n = 100
  in.q_opnorm = 1.0;  // log(1/delta)/n = 0.02 at delta = e^{-2}
  in.n = 100;
  in.delta = std::exp(-2.0);
  in.z_max = 1e4;
  const Certificate cert = weak_fixed_point(in);
  // z^2 = 0.1 z + 0.03: quadratic-formula oracle
  const double oracle = (0.1 + std::sqrt(0.01 + 0.12)) / 2.0;
  CHECK(std::abs(cert.radius - oracle) / oracle < 1e-9);
  CHECK(cert.radius == doctest::Approx(0.2302776).epsilon(1e-6));
  CHECK(cert.valid());

  // residual tolerance property
  const double psi_at = cert.radius * cert.radius;
  const double rhs = 0.1 * cert.radius + 0.03;
  CHECK(std::abs(psi_at - rhs) <= 1e-9 * std::max(1.0, psi_at));
}

TEST_CASE("weak fixed point: degenerate and error paths") {
  WeakRateInputs in;
  in.psi = ScalarFn::power(1.0, 2.0);
  in.zeta = ScalarFn::power(1.0, 0.0);
  in.eps = 0.0;
  in.b = 0.0;
  in.tr_q = 0.0;
  in.q_opnorm = 0.0;
  in.n = 10;
  in.delta = 0.5;
  const Certificate cert = weak_fixed_point(in);
  CHECK(cert.radius == 0.0);
  CHECK_FALSE(cert.valid());

  // eps too large for psi(z)/ (z zeta(z)) = z -> but with zeta = z the ratio
  // tends to a constant below eps: no bracket
  WeakRateInputs bad;
  bad.psi = ScalarFn::power(1.0, 2.0);
  bad.zeta = ScalarFn::power(1.0, 1.0);
  bad.eps = 2.0;  // liminf psi/(z zeta) = 1 < eps
  bad.b = 0.0;
  bad.tr_q = 1.0;
  bad.q_opnorm = 1.0;
  bad.n = 10;
  bad.delta = 0.5;
  CHECK_THROWS_WITH_AS(weak_fixed_point(bad), doctest::Contains("W.4"), Error);
}

TEST_CASE("weak fixed point reduces to the strong rate structure") {
  // psi(z) = mu z^2, zeta = 1, eps ~ n^{-1/2}: same n-scaling as the strong
  // radius, within a factor 2, slope -1/2 up to +-0.02.
  const double mu = 1.0;
  const double tr_q = 1.644934;
  const double opn = 1.0;
  const double delta = 0.1;
  std::vector<double> ns, zs, rads;
  for (long n : {100L, 1000L, 10000L}) {
    const double eps2 =
        (std::sqrt(tr_q) + std::sqrt(2.0 * std::log(1.0 / delta))) /
        std::sqrt(double(n));
    WeakRateInputs in;
    in.psi = ScalarFn::power(mu, 2.0);
    in.zeta = ScalarFn::power(1.0, 0.0);
    in.eps = eps2;
    in.b = 1.0;
    in.tr_q = tr_q;
    in.q_opnorm = opn;
    in.n = n;
    in.delta = delta;
    in.z_max = 1e4;
    const Certificate weak = weak_fixed_point(in);

    StrongRateInputs si;
    si.tr_q = tr_q;
    si.q_opnorm = opn;
    si.mu = mu;
    si.b = 1.0;
    si.eps1 = 0.0;
    si.eps2 = eps2;
    si.n = n;
    si.delta = delta;
    const Certificate strong = strong_radius(si);

    CHECK(weak.radius / strong.radius < 2.0);
    CHECK(weak.radius / strong.radius > 0.5);
    ns.push_back(double(n));
    zs.push_back(weak.radius);
    rads.push_back(strong.radius);
  }
  CHECK(std::abs(loglog_slope(ns, zs) + 0.5) < 0.02);
  CHECK(std::abs(loglog_slope(ns, rads) + 0.5) < 0.02);
}

TEST_CASE("W.3 checker matches symbolic power-law reductions") {
  // p = 3, q = 1: margin r^{p+q}(p - q - 1) > 0
  CHECK(check_w3(ScalarFn::power(1.0, 3.0), ScalarFn::power(1.0, 1.0), 1e-2,
                 1e2, 50)
            .pass);
  // p = 1.5, q = 1: fails the first inequality with a witness
  const W3Report fail = check_w3(ScalarFn::power(1.0, 1.5),
                                 ScalarFn::power(1.0, 1.0), 1e-2, 1e2, 50);
  CHECK_FALSE(fail.pass);
  CHECK(fail.first_violation_r.has_value());
  // constant zeta, psi = r^2: 4 >= 3
  CHECK(check_w3(ScalarFn::power(1.0, 2.0), ScalarFn::power(1.0, 0.0), 1e-2,
                 1e2, 50)
            .pass);
}

TEST_CASE("tabulated scalar functions interpolate monotonically") {
  // Tabulate r^2 on a grid and compare the interpolant and derivative.
  std::vector<double> r, v;
  for (int i = 0; i <= 400; ++i) {
    const double x = 0.01 + i * 0.01;
    r.push_back(x);
    v.push_back(x * x);
  }
  const ScalarFn f = ScalarFn::tabulated(r, v);
  for (double x : {0.5, 1.0, 2.0, 3.5}) {
    CHECK(f(x) == doctest::Approx(x * x).epsilon(1e-4));
    CHECK(f.d1(x) == doctest::Approx(2.0 * x).epsilon(1e-2));
  }
  CHECK_THROWS_AS(ScalarFn::tabulated({1.0}, {1.0}), Error);
  CHECK_THROWS_AS(ScalarFn::tabulated({1.0, 0.5}, {1.0, 2.0}), Error);
}

TEST_CASE("empirical validation: degenerate and inflated radii") {
  const ModelInstance m = synthesize_data(
      DiagonalOperator::power(1.0, 2.0, 16),
      DiagonalOperator::power(1.0, -2.0, 16), SpectralVector::zeros(16), 1000,
      911);
  const ModelConstants mc = model_constants(m, 0.1);
  StrongRateInputs in{trace(m.q).value, op_norm(m.q), mc.mu, mc.b,
                      mc.eps1,          mc.eps2,      1000,  0.1,  1.0};
  Certificate cert = strong_radius(in);
  const Certificate ok = validate_certificate(cert, m, 4000, 913);
  REQUIRE(ok.empirical_validation.has_value());
  CHECK(ok.empirical_validation->pass);

  Certificate zero = cert;
  zero.radius = 0.0;
  const Certificate z = validate_certificate(zero, m, 2000, 913);
  CHECK(z.empirical_validation->tail_mass == 1.0);
  CHECK_FALSE(z.empirical_validation->pass);

  Certificate fat = cert;
  fat.radius = cert.radius * 10.0;
  const Certificate f = validate_certificate(fat, m, 2000, 913);
  CHECK(f.empirical_validation->tail_mass == doctest::Approx(0.0));
  CHECK(f.empirical_validation->pass);
}

TEST_CASE("certificates are reproducible bit for bit") {
  StrongRateInputs in;
  in.tr_q = 1.6;
  in.q_opnorm = 1.0;
  in.mu = 0.7;
  in.b = 1.0;
  in.eps1 = 0.0;
  in.eps2 = 0.123456789;
  in.n = 555;
  in.delta = 0.07;
  in.c_universal = 1.5;
  const Certificate a = strong_radius(in);
  const Certificate b = strong_radius(in);
  CHECK(a.inputs_digest == b.inputs_digest);
  CHECK(std::memcmp(&a.radius, &b.radius, sizeof(double)) == 0);
  CHECK(a.canonical_text() == b.canonical_text());
  CHECK(a.canonical_text().find("radius") != std::string::npos);

  StrongRateInputs other = in;
  other.eps2 = 0.1234567891;
  CHECK(strong_radius(other).inputs_digest != a.inputs_digest);
}
