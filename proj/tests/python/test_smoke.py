"""Smoke tests for the python bindings."""

import math

import pytest

import spdelab as sl


def make_model(dim=16, n=100, seed=7):
    q = sl.DiagonalOperator.power(1.0, 2.0, dim)
    a = sl.DiagonalOperator.power(1.0, -2.0, dim)
    theta = sl.SpectralVector([0.5 * (m + 1) ** -2.0 for m in range(dim)])
    return sl.synthesize_data(q, a, theta, n, seed)


def test_trace_and_norms():
    op = sl.DiagonalOperator.power(1.0, 2.0, 10000)
    tr = sl.trace(op)
    assert abs(tr.value - 1.644834) < 1e-4
    assert tr.tail_estimate == pytest.approx(1e-4)
    assert sl.op_norm(op) == 1.0

    q = sl.DiagonalOperator.explicit_list([4.0, 1.0])
    assert sl.cameron_martin_norm(sl.SpectralVector([1.0, 0.0]), q) == 0.5


def test_exact_posterior_formula():
    m = make_model()
    post = sl.exact_posterior(m)
    n = m.n
    for k in range(16):
        denom = 1.0 + n * m.q.eigs[k] * m.a.eigs[k]
        assert post.cov.eigs[k] == pytest.approx(m.q.eigs[k] / denom, rel=1e-14)
    # MAP equals the posterior mean
    map_est = sl.compute_map(m)
    for k in range(16):
        assert map_est.coeffs[k] == pytest.approx(post.mean.coeffs[k], rel=1e-13, abs=1e-15)


def test_conjugate_laplace_collapse():
    m = make_model()
    pair = sl.make_laplace_pair(m, sl.HessianSource.empirical)
    assert sl.kl_commuting_gaussians(pair.posterior, pair.laplace) <= 1e-10


def test_strong_radius_example():
    inputs = sl.StrongRateInputs()
    inputs.tr_q = 1.644934
    inputs.q_opnorm = 1.0
    inputs.mu = 1.0
    inputs.b = 1.0
    inputs.eps1 = 0.0
    inputs.eps2 = 0.05
    inputs.n = 1000
    inputs.delta = 0.1
    inputs.c_universal = 1.0
    cert = sl.strong_radius(inputs)
    assert cert.radius == pytest.approx(0.1395430, abs=1e-6)
    assert cert.valid()


def test_weak_fixed_point_quadratic():
    inputs = sl.WeakRateInputs()
    inputs.psi = sl.ScalarFn.power(1.0, 2.0)
    inputs.zeta = sl.ScalarFn.power(1.0, 0.0)
    inputs.eps = 0.1
    inputs.b = 0.0
    inputs.tr_q = 1.0
    inputs.q_opnorm = 1.0
    inputs.n = 100
    inputs.delta = math.exp(-2.0)
    inputs.z_max = 1e4
    cert = sl.weak_fixed_point(inputs)
    oracle = (0.1 + math.sqrt(0.01 + 0.12)) / 2.0
    assert cert.radius == pytest.approx(oracle, rel=1e-9)


def test_sampler_determinism():
    spec = sl.GaussianSpec(
        sl.SpectralVector([0.0, 1.0]), sl.DiagonalOperator.explicit_list([1.0, 2.0])
    )
    a = sl.sample_gaussian(spec, 42, 0)
    b = sl.sample_gaussian(spec, 42, 0)
    c = sl.sample_gaussian(spec, 42, 1)
    assert a.coeffs == b.coeffs
    assert a.coeffs != c.coeffs


def test_simulate_and_stationarity():
    m = make_model(dim=8, n=50, seed=11)
    cfg = sl.SimConfig.defaults_for(m, 4000, 13)
    report = sl.stationary_check(m, cfg, 2)
    assert not report.refused
    assert report.max_abs_z < 6.0


def test_feldman_hajek_verdicts():
    q = sl.DiagonalOperator.power(1.0, 2.0, 64)
    eq = sl.feldman_hajek_check(q, sl.DiagonalOperator.power(1.0, 0.0, 64), 10)
    assert eq.verdict == sl.EquivalenceReport.Verdict.equivalent
    sing = sl.feldman_hajek_check(q, sl.DiagonalOperator.power(1.0, -2.0, 64), 10)
    assert sing.verdict == sl.EquivalenceReport.Verdict.singular


def test_errors_surface_as_exceptions():
    with pytest.raises(RuntimeError):
        sl.DiagonalOperator.explicit_list([])
    with pytest.raises(RuntimeError):
        sl.cameron_martin_norm(
            sl.SpectralVector([1.0]), sl.DiagonalOperator.explicit_list([0.0])
        )
