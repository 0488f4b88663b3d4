"""Modular function families: evaluation, conjugates, Fenchel-Young."""

import numpy as np
import pytest

import orlx.modular as mod
from orlx.grid import unit_square, VectorField
from orlx.transform import conjugate_bruteforce


@pytest.fixture
def families(grid16):
    g = grid16
    X, Y = g.meshgrid()
    return {
        "vep": mod.variable_exponent_power(g, 1.5 + X),
        "double": mod.double_phase(g, 2.0, 3.0, 1.0 + X),
        "exp": mod.exp_type(g, 0.5 + Y),
        "aniso": mod.anisotropic_sum(g, 2.0, 3.0, 1.5, 0.5),
    }


def test_eval_examples(grid16):
    g = grid16
    M = mod.variable_exponent_power(g, 2.0)
    out = mod.eval_samples(M, np.array([3]), np.array([4]), np.array([[3.0, 4.0]]))
    assert out[0] == pytest.approx(25.0)
    Ma = mod.anisotropic_sum(g, 2.0, 3.0)
    out = mod.eval_samples(Ma, np.array([0]), np.array([0]), np.array([[1.0, 2.0]]))
    assert out[0] == pytest.approx(9.0)


def test_zero_at_origin_and_only_there(families):
    zero = np.array([[0.0, 0.0]])
    small = np.array([[1e-3, -2e-3]])
    for M in families.values():
        iy = np.array([1])
        ix = np.array([2])
        assert mod.eval_samples(M, iy, ix, zero)[0] == 0.0
        assert mod.eval_samples(M, iy, ix, small)[0] > 0.0


def test_symmetry_structural(families, rng):
    for M in families.values():
        iy = rng.integers(0, 16, 200)
        ix = rng.integers(0, 16, 200)
        xi = rng.normal(size=(200, 2)) * 3.0
        a = mod.eval_samples(M, iy, ix, xi)
        b = mod.eval_samples(M, iy, ix, -xi)
        assert np.allclose(a, b, rtol=1e-13)


def test_eval_rejects_nonfinite(grid16):
    M = mod.variable_exponent_power(grid16, 2.0)
    with pytest.raises(ValueError):
        mod.eval_samples(M, np.array([0]), np.array([0]), np.array([[np.inf, 0.0]]))


def test_family_validation(grid16):
    with pytest.raises(ValueError):
        mod.variable_exponent_power(grid16, 1.0)  # p must exceed 1
    with pytest.raises(ValueError):
        mod.double_phase(grid16, 3.0, 2.0, 1.0)  # needs p < q
    with pytest.raises(ValueError):
        mod.exp_type(grid16, 0.0)
    with pytest.raises(ValueError):
        mod.anisotropic_sum(grid16, 2.0, 3.0, a1=0.0)


def test_conjugate_closed_forms_vs_dense_grid(grid16, rng):
    # the double-phase conjugate is solved numerically; check every family
    # against the brute-force supremum over a dense radial grid
    g = grid16
    X, Y = g.meshgrid()
    fams = {
        "vep": mod.variable_exponent_power(g, 1.5 + X, weight=0.5 + Y),
        "double": mod.double_phase(g, 2.0, 3.0, 1.0 + X),
        "exp": mod.exp_type(g, 0.5 + Y),
        "aniso": mod.anisotropic_sum(g, 2.0, 3.0, 1.5, 0.5),
    }
    s = np.concatenate([[0.0], np.logspace(-6, 3, 4000)])
    ax = np.linspace(-8.0, 8.0, 801)
    XI1, XI2 = np.meshgrid(ax, ax)
    xi2d = np.stack([XI1.ravel(), XI2.ravel()], axis=-1)
    for name, M in fams.items():
        iy = rng.integers(0, 16, 40)
        ix = rng.integers(0, 16, 40)
        th = rng.uniform(0, 2 * np.pi, 40)
        r = np.exp(rng.uniform(np.log(1e-2), np.log(10.0), 40))
        eta = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
        got = mod.conjugate_samples_at(M, iy, ix, eta)
        dirs = eta / r[:, None]
        for j in range(40):
            if name == "aniso":
                # the supremum is not attained along the eta-ray: 2-D grid sup
                vals = mod.eval_samples(
                    M, np.full(len(xi2d), iy[j]), np.full(len(xi2d), ix[j]), xi2d
                )
                oracle = float(np.max(xi2d @ eta[j] - vals))
                tol = 2e-3 * max(1.0, abs(oracle))
            else:
                vals = mod.eval_samples(
                    M,
                    np.full(len(s), iy[j]),
                    np.full(len(s), ix[j]),
                    s[:, None] * dirs[j][None, :],
                )
                oracle = float(np.max(s * r[j] - vals))
                tol = 2e-5 * max(1.0, abs(oracle))
            assert got[j] >= oracle - 1e-9 * max(1.0, abs(oracle)), (name, j)
            assert got[j] - oracle <= tol, (name, j, got[j], oracle)


def test_fenchel_young_examples(grid16):
    g = grid16
    M = mod.variable_exponent_power(g, 2.0)
    iy = np.array([5])
    ix = np.array([5])
    xi = np.array([[1.2, -0.7]])
    # equality case: eta = 2 xi for M = |xi|^2
    gap = mod.fenchel_young_gap(M, iy, ix, xi, 2.0 * xi)
    assert abs(gap[0]) < 1e-12
    # xi = 0: gap equals the conjugate value
    eta = np.array([[0.3, 0.4]])
    gap = mod.fenchel_young_gap(M, iy, ix, np.zeros((1, 2)), eta)
    assert gap[0] == pytest.approx(0.25 * 0.5**2)
    assert gap[0] >= 0.0


def test_fenchel_young_random_nonnegative(families, rng):
    for name, M in families.items():
        smax = 10.0 if name == "exp" else 100.0
        iy = rng.integers(0, 16, 10000)
        ix = rng.integers(0, 16, 10000)
        xi = rng.normal(size=(10000, 2)) * rng.uniform(1e-2, smax, (10000, 1))
        eta = rng.normal(size=(10000, 2)) * rng.uniform(1e-2, smax, (10000, 1))
        gap = mod.fenchel_young_gap(M, iy, ix, xi, eta)
        scale = np.maximum(
            1.0,
            mod.eval_samples(M, iy, ix, xi) + mod.conjugate_samples_at(M, iy, ix, eta),
        )
        assert np.min(gap / scale) >= -1e-8, name


def test_fenchel_young_equality_at_gradient(families, rng):
    for name in ("vep", "aniso", "exp", "double"):
        M = families[name]
        smax = 8.0 if name == "exp" else 50.0
        iy = rng.integers(0, 16, 2000)
        ix = rng.integers(0, 16, 2000)
        r = np.exp(rng.uniform(np.log(1e-2), np.log(smax), 2000))
        th = rng.uniform(0, 2 * np.pi, 2000)
        xi = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
        eta = mod.grad_xi_samples(M, iy, ix, xi)
        gap = mod.fenchel_young_gap(M, iy, ix, xi, eta)
        scale = np.maximum(1.0, mod.eval_samples(M, iy, ix, xi))
        assert np.max(np.abs(gap) / scale) < 1e-6, name


def test_tabulated_isotropic_conjugate(grid16):
    nodes = np.concatenate([[0.0], np.logspace(-4, 4, 129)])
    vals = np.broadcast_to(nodes**2, grid16.shape + (1, len(nodes))).copy()
    M = mod.tabulated(grid16, nodes, vals)
    eta = np.array([[0.0, 2.0]])
    out = mod.conjugate_samples_at(M, np.array([3]), np.array([3]), eta)
    assert out[0] == pytest.approx(1.0, rel=1e-3)  # (r^2)* = r^2/4 at r=2


def test_tabulated_anisotropic_conjugate_unsupported(grid16):
    nodes = np.concatenate([[0.0], np.logspace(-4, 4, 33)])
    vals = np.zeros(grid16.shape + (4, len(nodes)))
    vals[..., :] = nodes**2
    for k in range(4):
        vals[..., k, :] *= 1.0 + 0.1 * k
    M = mod.tabulated(grid16, nodes, np.maximum.accumulate(vals, axis=-1))
    with pytest.raises(mod.UnsupportedFamilyError):
        mod.conjugate_samples_at(M, np.array([0]), np.array([0]), np.array([[1.0, 0.0]]))


def test_json_roundtrip(grid16, rng):
    X, Y = grid16.meshgrid()
    fams = [
        mod.variable_exponent_power(grid16, 1.5 + X),
        mod.double_phase(grid16, 2.0, 3.0, 1.0 + X),
        mod.exp_type(grid16, 0.5 + Y),
        mod.anisotropic_sum(grid16, 2.0, 3.0, 1.5, 0.5),
    ]
    xi = rng.normal(size=(50, 2))
    iy = rng.integers(0, 16, 50)
    ix = rng.integers(0, 16, 50)
    for M in fams:
        M2 = mod.ModularFunction.from_json(M.to_json())
        assert np.allclose(
            mod.eval_samples(M, iy, ix, xi), mod.eval_samples(M2, iy, ix, xi)
        )


def test_conjugate_wrapper_field_eval(grid16):
    M = mod.variable_exponent_power(grid16, 2.0)
    W = mod.ConjugateModular(M)
    vf = VectorField.constant(grid16, (2.0, 0.0))
    assert np.allclose(W.eval_field(vf), 1.0)  # |eta|^2/4 at eta=2
