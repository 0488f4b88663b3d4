"""Monotone vector fields with convex potentials, and their pairing checks.

Two families are implemented, both gradients of explicit convex potentials:

- ``weighted_px_laplacian``:  A(x, xi) = alpha(x) |xi|^(p(x)-2) xi
- ``anisotropic_px``:         A_i(x, xi) = alpha_i(x) |xi_i|^(p_i(x)-2) xi_i

A regularization scale eps replaces |xi| by sqrt(|xi|^2 + eps^2) in the
degenerate factor; the potential is shifted so it still vanishes at zero.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import modular as mod
from .conditions import ConditionReport
from .grid import VectorField


def _field_like(grid, v):
    return np.broadcast_to(np.asarray(v, dtype=np.float64), grid.shape).copy()


@dataclass(frozen=True)
class OperatorSpec:
    family: str
    grid: object
    params: dict
    eps_reg: float = 0.0
    c_A: float | None = None

    def with_eps(self, eps):
        return replace(self, eps_reg=float(eps))

    def min_exponent(self):
        if self.family == "weighted_px_laplacian":
            return float(np.min(self.params["p"]))
        return float(min(np.min(self.params["p1"]), np.min(self.params["p2"])))


def weighted_px_laplacian(grid, p, alpha=1.0, eps_reg=0.0):
    p = _field_like(grid, p)
    alpha = _field_like(grid, alpha)
    if p.min() <= 1.0:
        raise ValueError("exponent field must satisfy min > 1")
    if alpha.min() <= 0.0:
        raise ValueError("weight field must be bounded away from 0")
    return OperatorSpec("weighted_px_laplacian", grid, {"p": p, "alpha": alpha}, eps_reg)


def anisotropic_px(grid, p1, p2, a1=1.0, a2=1.0, eps_reg=0.0):
    prm = {
        "p1": _field_like(grid, p1),
        "p2": _field_like(grid, p2),
        "a1": _field_like(grid, a1),
        "a2": _field_like(grid, a2),
    }
    if min(prm["p1"].min(), prm["p2"].min()) <= 1.0:
        raise ValueError("exponent fields must satisfy min > 1")
    if min(prm["a1"].min(), prm["a2"].min()) <= 0.0:
        raise ValueError("weight fields must be bounded away from 0")
    return OperatorSpec("anisotropic_px", grid, prm, eps_reg)


def _sub(prm, sl):
    return {k: v[sl] if isinstance(v, np.ndarray) else v for k, v in prm.items()}


def potential_values(spec, gx, gy, sl=None):
    """Convex potential at gradient samples; slices params with ``sl``."""
    prm = _sub(spec.params, sl) if sl is not None else spec.params
    e2 = spec.eps_reg**2
    if spec.family == "weighted_px_laplacian":
        p, al = prm["p"], prm["alpha"]
        r2 = gx * gx + gy * gy + e2
        return al / p * (np.power(r2, 0.5 * p) - spec.eps_reg**p)
    p1, p2, a1, a2 = prm["p1"], prm["p2"], prm["a1"], prm["a2"]
    return a1 / p1 * (np.power(gx * gx + e2, 0.5 * p1) - spec.eps_reg**p1) + a2 / p2 * (
        np.power(gy * gy + e2, 0.5 * p2) - spec.eps_reg**p2
    )


def _deg_factor(weight, p, r2):
    """weight * r2**((p-2)/2) with the p < 2 singularity pinned to A(x,0)=0."""
    safe = np.maximum(r2, 1e-300)
    fac = weight * np.power(safe, 0.5 * (p - 2.0))
    return np.where(r2 > 0.0, fac, 0.0)


def operator_values(spec, gx, gy, sl=None):
    """A(x, xi) at gradient samples; returns (Ax, Ay)."""
    prm = _sub(spec.params, sl) if sl is not None else spec.params
    e2 = spec.eps_reg**2
    if spec.family == "weighted_px_laplacian":
        fac = _deg_factor(prm["alpha"], prm["p"], gx * gx + gy * gy + e2)
        return fac * gx, fac * gy
    return (
        _deg_factor(prm["a1"], prm["p1"], gx * gx + e2) * gx,
        _deg_factor(prm["a2"], prm["p2"], gy * gy + e2) * gy,
    )


def operator_field(spec, vf):
    Ax, Ay = operator_values(spec, vf.values[0], vf.values[1])
    return VectorField(vf.domain, np.stack([Ax, Ay]))


def matched_modular(spec):
    """Modular function paired with the operator by the equality case of the
    Fenchel-Young inequality (coercivity constant 1 for eps_reg = 0)."""
    if spec.family == "weighted_px_laplacian":
        p = spec.params["p"]
        return mod.variable_exponent_power(spec.grid, p, weight=spec.params["alpha"] / p)
    raise ValueError("matched modular implemented for the isotropic family only")


def coercivity_check(spec, M, n_samples=20000, seed=0, xi_range=(1e-2, 1e2),
                     min_c=0.05):
    """Fit the largest c in (0, 1] with A.xi >= c (M + M*(A)) on samples.

    Samples |xi| in ``xi_range``; with a regularized operator the inequality
    degrades below |xi| ~ eps_reg, so the window should stay above it.  A fit
    below ``min_c`` is reported as failure: mismatched growth drives the
    fitted constant to zero at one end of the sample window.
    """
    rng = np.random.default_rng(seed)
    grid = spec.grid
    iy = rng.integers(0, grid.ny, n_samples)
    ix = rng.integers(0, grid.nx, n_samples)
    th = rng.uniform(0, 2 * np.pi, n_samples)
    rr = np.exp(rng.uniform(np.log(xi_range[0]), np.log(xi_range[1]), n_samples))
    xi = np.stack([rr * np.cos(th), rr * np.sin(th)], axis=-1)
    Ax, Ay = operator_values(spec, xi[:, 0], xi[:, 1], sl=(iy, ix))
    lhs = Ax * xi[:, 0] + Ay * xi[:, 1]
    rhs = mod.eval_samples(M, iy, ix, xi) + mod.conjugate_samples_at(
        M, iy, ix, np.stack([Ax, Ay], axis=-1)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, np.inf)
    fitted = float(min(np.min(ratio), 1.0))
    passed = fitted >= min_c
    witness = None
    if not passed:
        k = int(np.argmin(ratio))
        witness = {"cell": [int(iy[k]), int(ix[k])], "xi": xi[k].tolist(),
                   "ratio": float(ratio[k])}
    return ConditionReport(
        condition="coercivity",
        passed=passed,
        constants={"c_A": fitted, "min_c": min_c},
        witness=witness,
        samples=n_samples,
    )


def monotonicity_check(spec, n_pairs=100000, seed=0, xi_scale=10.0, tol=1e-12):
    """(A(x, xi) - A(x, eta)) . (xi - eta) >= 0 on random pairs."""
    rng = np.random.default_rng(seed)
    grid = spec.grid
    iy = rng.integers(0, grid.ny, n_pairs)
    ix = rng.integers(0, grid.nx, n_pairs)
    xi = rng.normal(scale=xi_scale, size=(n_pairs, 2))
    eta = rng.normal(scale=xi_scale, size=(n_pairs, 2))
    Axx, Axy = operator_values(spec, xi[:, 0], xi[:, 1], sl=(iy, ix))
    Aex, Aey = operator_values(spec, eta[:, 0], eta[:, 1], sl=(iy, ix))
    dot = (Axx - Aex) * (xi[:, 0] - eta[:, 0]) + (Axy - Aey) * (xi[:, 1] - eta[:, 1])
    scale = np.maximum(np.abs(Axx * xi[:, 0]) + np.abs(Axy * xi[:, 1]), 1.0)
    worst = float(np.min(dot / scale))
    passed = worst >= -tol
    witness = None
    if not passed:
        k = int(np.argmin(dot / scale))
        witness = {"cell": [int(iy[k]), int(ix[k])], "xi": xi[k].tolist(),
                   "eta": eta[k].tolist(), "dot": float(dot[k])}
    return ConditionReport(
        condition="monotonicity",
        passed=passed,
        constants={"min_normalized_dot": worst},
        witness=witness,
        samples=n_pairs,
    )
