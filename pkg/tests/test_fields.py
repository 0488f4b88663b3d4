"""Field operations: gradients, modulars, Luxemburg norms, truncations."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import orlx.modular as mod
from orlx.fields import (
    NormDivergenceError,
    gradient,
    holder_gap,
    luxemburg_norm,
    modular,
    modular_convergence_test,
    psi_l,
    truncate,
    uniform_integrability_profile,
)
from orlx.grid import ScalarField, VectorField, unit_square


def test_gradient_zero_and_affine(grid32):
    z = ScalarField.zeros(grid32)
    assert np.all(gradient(z).values == 0.0)
    u = ScalarField.from_function(grid32, lambda x, y: x)
    g = gradient(u)
    assert np.allclose(g.values[0], 1.0)
    assert np.allclose(g.values[1], 0.0)


def test_gradient_first_order_rate():
    errs = []
    for n in (64, 128, 256):
        g = unit_square(n)
        u = ScalarField.from_function(g, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
        gv = gradient(u)
        X, Y = g.meshgrid()
        ex = np.pi * np.cos(np.pi * X) * np.sin(np.pi * Y)
        ey = np.pi * np.sin(np.pi * X) * np.cos(np.pi * Y)
        errs.append(max(np.max(np.abs(gv.values[0] - ex)), np.max(np.abs(gv.values[1] - ey))))
    rates = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(r > 0.8 for r in rates)
    fit = np.polyfit(np.log([1 / 64, 1 / 128, 1 / 256]), np.log(errs), 1)[0]
    assert 0.8 <= fit <= 1.3


def test_modular_basics(grid32):
    M = mod.variable_exponent_power(grid32, 2.0)
    assert modular(M, VectorField.zeros(grid32)) == 0.0
    one = VectorField.constant(grid32, (1.0, 0.0))
    assert modular(M, one) == pytest.approx(1.0, rel=1e-12)


def test_modular_variable_exponent_vs_quadrature_oracle(grid64):
    X, _ = grid64.meshgrid()
    M = mod.variable_exponent_power(grid64, 2.0 + X)
    got = modular(M, VectorField.constant(grid64, (1.0, 1.0)))
    xs = (np.arange(1_000_000) + 0.5) / 1_000_000
    oracle = float(np.mean(np.sqrt(2.0) ** (2.0 + xs)))
    assert got == pytest.approx(oracle, rel=1e-3)


def test_modular_domain_mismatch(grid32, grid64):
    M = mod.variable_exponent_power(grid32, 2.0)
    with pytest.raises(ValueError):
        modular(M, VectorField.zeros(grid64))


def test_modular_convexity_in_field(grid16, rng):
    M = mod.double_phase(grid16, 2.0, 3.0, 1.0)
    for _ in range(100):
        a = VectorField(grid16, rng.normal(size=(2, 16, 16)) * 3)
        b = VectorField(grid16, rng.normal(size=(2, 16, 16)) * 3)
        midf = VectorField(grid16, 0.5 * (a.values + b.values))
        assert modular(M, midf) <= 0.5 * (modular(M, a) + modular(M, b)) + 1e-10


def test_luxemburg_examples(grid32):
    M = mod.variable_exponent_power(grid32, 2.0)
    assert luxemburg_norm(M, VectorField.zeros(grid32)) == 0.0
    xi = VectorField.constant(grid32, (3.0, 0.0))
    assert luxemburg_norm(M, xi) == pytest.approx(3.0, rel=1e-9)


def test_luxemburg_vs_lambda_scan_oracle(grid64):
    X, _ = grid64.meshgrid()
    M = mod.variable_exponent_power(grid64, 2.0 + X)
    xi = VectorField.constant(grid64, (1.0, 1.0))
    nv = luxemburg_norm(M, xi, tol=1e-12)
    lams = np.linspace(nv - 1e-4, nv + 1e-4, 2001)  # 1e-7 resolution scan
    mods = np.array([modular(M, VectorField(grid64, xi.values / l)) for l in lams])
    scan = lams[np.argmax(mods <= 1.0)]
    assert abs(nv - scan) <= 1e-6


def test_luxemburg_unit_ball_property(grid16, rng):
    X, Y = grid16.meshgrid()
    fams = [
        mod.variable_exponent_power(grid16, 1.5 + X),
        mod.double_phase(grid16, 2.0, 3.0, 1.0 + X),
        mod.exp_type(grid16, 0.5 + Y),
        mod.anisotropic_sum(grid16, 2.0, 3.0),
    ]
    for M in fams:
        for _ in range(25):
            xi = VectorField(grid16, rng.normal(size=(2, 16, 16)) * rng.uniform(0.1, 5))
            nv = luxemburg_norm(M, xi)
            assert modular(M, VectorField(grid16, xi.values / nv)) <= 1.0 + 1e-9
            assert modular(M, VectorField(grid16, xi.values / (0.99 * nv))) > 1.0


def test_luxemburg_homogeneity(grid16, rng):
    M = mod.double_phase(grid16, 2.0, 3.0, 0.5)
    for _ in range(100):
        xi = VectorField(grid16, rng.normal(size=(2, 16, 16)))
        c = float(rng.uniform(0.1, 10))
        n1 = luxemburg_norm(M, VectorField(grid16, c * xi.values), tol=1e-12)
        n0 = luxemburg_norm(M, xi, tol=1e-12)
        assert n1 == pytest.approx(c * n0, rel=1e-9)


def test_luxemburg_divergence_error(grid16):
    M = mod.variable_exponent_power(grid16, 2.0)
    huge = VectorField.constant(grid16, (1e300, 0.0))
    with pytest.raises(NormDivergenceError):
        luxemburg_norm(M, huge)


def test_bounded_fields_have_finite_norm(grid16, rng):
    # L^infinity embeds in every implemented modular space
    X, Y = grid16.meshgrid()
    nodes = np.concatenate([[0.0], np.logspace(-4, 4, 65)])
    fams = [
        mod.variable_exponent_power(grid16, 1.5 + X),
        mod.double_phase(grid16, 2.0, 3.0, 1.0 + X),
        mod.exp_type(grid16, 0.5 + Y),
        mod.anisotropic_sum(grid16, 2.0, 3.0),
        mod.tabulated(
            grid16, nodes, np.broadcast_to(nodes**2, grid16.shape + (1, len(nodes))).copy()
        ),
    ]
    for M in fams:
        for _ in range(20):
            xi = VectorField(grid16, rng.uniform(-50, 50, size=(2, 16, 16)))
            nv = luxemburg_norm(M, xi)
            assert np.isfinite(nv) and nv > 0


def test_holder_gap_examples(grid32):
    M = mod.variable_exponent_power(grid32, 2.0)
    zero = VectorField.zeros(grid32)
    one = VectorField.constant(grid32, (1.0, 0.0))
    assert holder_gap(M, zero, one) == pytest.approx(0.0, abs=1e-12)
    # ||xi||_M = 1, ||xi||_M* = 1/2, pairing = 1: gap = 0
    assert holder_gap(M, one, one) == pytest.approx(0.0, abs=1e-9)


def test_holder_gap_random_nonnegative(grid16, rng):
    X, _ = grid16.meshgrid()
    M = mod.double_phase(grid16, 2.0, 3.0, 1.0 + X)
    for _ in range(100):
        xi = VectorField(grid16, rng.normal(size=(2, 16, 16)) * rng.uniform(0.2, 3))
        eta = VectorField(grid16, rng.normal(size=(2, 16, 16)) * rng.uniform(0.2, 3))
        assert holder_gap(M, xi, eta) >= -1e-8


def test_truncate_examples(grid16):
    u = ScalarField(grid16, np.full(grid16.shape, 5.0))
    assert np.all(truncate(u, 3.0).values == 3.0)
    u = ScalarField(grid16, np.full(grid16.shape, -7.0))
    assert np.all(truncate(u, 2.0).values == -2.0)
    u = ScalarField(grid16, np.full(grid16.shape, 0.5))
    assert np.all(truncate(u, 2.0).values == 0.5)
    with pytest.raises(ValueError):
        truncate(u, 0.0)


@settings(max_examples=200, deadline=None)
@given(
    a=st.floats(-50, 50),
    b=st.floats(-50, 50),
    k=st.floats(0.1, 20),
)
def test_truncate_lipschitz_idempotent_odd(a, b, k):
    g = unit_square(4)
    ua = ScalarField(g, np.full(g.shape, a))
    ub = ScalarField(g, np.full(g.shape, b))
    ta = truncate(ua, k).values[0, 0]
    tb = truncate(ub, k).values[0, 0]
    assert abs(ta - tb) <= abs(a - b) + 1e-12
    assert truncate(truncate(ua, k), k).values[0, 0] == ta
    assert truncate(ScalarField(g, -ua.values), k).values[0, 0] == -ta
    assert abs(ta) <= k


def test_psi_l_values(grid16):
    lv = 2.0
    u = ScalarField(grid16, np.full(grid16.shape, lv - 0.5))
    assert np.all(psi_l(u, lv).values == 1.0)
    u = ScalarField(grid16, np.full(grid16.shape, lv + 0.5))
    assert np.all(psi_l(u, lv).values == 0.5)
    u = ScalarField(grid16, np.full(grid16.shape, lv + 2.0))
    assert np.all(psi_l(u, lv).values == 0.0)


def test_truncated_gradient_modular_bound(grid32, rng):
    # both the composed gradient of the truncation and the masked gradient
    # stay below the full gradient modular
    M = mod.variable_exponent_power(grid32, 2.0)
    for _ in range(100):
        vals = rng.normal(size=grid32.shape) * 3
        vals[grid32.boundary_mask()] = 0.0
        u = ScalarField(grid32, vals)
        k = float(rng.uniform(0.5, 3.0))
        full = modular(M, gradient(u))
        composed = modular(M, gradient(truncate(u, k)))
        assert composed <= full + 1e-10
        gm = gradient(u).values.copy()
        inside = np.abs(u.values) < k
        gm[0][~inside] = 0.0
        gm[1][~inside] = 0.0
        assert modular(M, VectorField(grid32, gm)) <= full + 1e-10


def test_modular_convergence_constant_sequence(grid16):
    M = mod.variable_exponent_power(grid16, 2.0)
    limit = VectorField.constant(grid16, (0.7, -0.3))
    seq = [limit] * 4
    tr = modular_convergence_test(M, seq, limit)
    assert tr.meta["witness_lambda"] == min(2.0 ** np.arange(-6, 7))
    for key, series in tr.series.items():
        assert np.all(series == 0.0)


def test_modular_convergence_quadratic_decay(grid16):
    M = mod.variable_exponent_power(grid16, 2.0)
    limit = VectorField.zeros(grid16)
    seq = [VectorField.constant(grid16, (1.0 / i, 0.0)) for i in range(1, 9)]
    tr = modular_convergence_test(M, seq, limit)
    lam1 = tr.series["lambda=1"]
    expect = np.array([1.0 / i**2 for i in range(1, 9)])
    assert np.allclose(lam1, expect, rtol=1e-10)


def test_uniform_integrability_profiles(grid32):
    # bounded sequence: tail mass vanishes beyond the bound
    seq = [ScalarField(grid32, np.full(grid32.shape, 2.0)) for _ in range(4)]
    tr = uniform_integrability_profile(seq)
    assert tr.series["tail_mass"][tr.indices > 2.0].max() == 0.0
    # escaping mass: n * indicator of area 1/n keeps tail mass ~1
    n = grid32.nx * grid32.ny
    seqs = []
    for j in (1, 4, 16, 64):
        v = np.zeros(grid32.shape)
        v.ravel()[:n // j] = j
        seqs.append(ScalarField(grid32, v))
    tr = uniform_integrability_profile(seqs)
    mid = tr.indices <= 64
    assert np.all(tr.series["tail_mass"][mid] >= 0.9)
    with pytest.raises(ValueError):
        uniform_integrability_profile([])


def test_trace_monotone_indices():
    from orlx.fields import ConvergenceTrace

    with pytest.raises(ValueError):
        ConvergenceTrace(indices=np.array([1.0, 1.0, 2.0]), series={})
