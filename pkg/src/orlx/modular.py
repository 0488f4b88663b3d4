"""Spatially-dependent modular functions M(x, xi) on a grid domain.

Five families are implemented.  All depend on xi through |xi| or through
componentwise |xi_i|, so M(x, xi) = M(x, -xi) holds structurally:

- ``variable_exponent_power``:  w(x) |xi|^p(x)  with 1 < p- <= p(x) <= p+
- ``double_phase``:             |xi|^p + a(x) |xi|^q, constants p < q
- ``exp_type``:                 a(x) (exp(|xi|) - 1 + |xi|)
- ``anisotropic_sum``:          sum_i a_i(x) |xi_i|^p_i(x)
- ``tabulated``:                per-cell radial profiles per direction sector

Closed-form Fenchel conjugates exist for the power, anisotropic and exp
families; the double-phase conjugate is computed by solving the scalar
first-order condition, and tabulated (isotropic) profiles are conjugated on
the node grid.
"""

from dataclasses import dataclass

import numpy as np

from .grid import GridDomain, VectorField
from .transform import conjugate_samples

FAMILIES = (
    "variable_exponent_power",
    "double_phase",
    "exp_type",
    "anisotropic_sum",
    "tabulated",
)


class UnsupportedFamilyError(ValueError):
    """Raised when an operation does not apply to the given family."""


def _field(grid, v, name, positive=False, above_one=False):
    arr = np.broadcast_to(np.asarray(v, dtype=np.float64), grid.shape).copy()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if positive and arr.min() <= 0:
        raise ValueError(f"{name} must be bounded away from 0")
    if above_one and arr.min() <= 1.0:
        raise ValueError(f"{name} must satisfy min > 1")
    return arr


@dataclass(frozen=True)
class ModularFunction:
    family: str
    grid: GridDomain
    params: dict

    def eval_field(self, vf):
        return eval_field(self, vf)

    def eval_samples(self, iy, ix, xi):
        return eval_samples(self, iy, ix, xi)

    def conjugate(self):
        return ConjugateModular(self)

    def is_isotropic(self):
        if self.family in ("variable_exponent_power", "double_phase", "exp_type"):
            return True
        if self.family == "tabulated":
            return self.params["values"].shape[2] == 1
        return False

    def to_json(self):
        params = {}
        for k, v in self.params.items():
            params[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return {"family": self.family, "params": params, "grid": self.grid.to_json()}

    @classmethod
    def from_json(cls, obj):
        grid = GridDomain.from_json(obj["grid"])
        family = obj["family"]
        p = {k: np.asarray(v) if isinstance(v, list) else v for k, v in obj["params"].items()}
        if family == "variable_exponent_power":
            return variable_exponent_power(grid, p["p"], p.get("weight", 1.0))
        if family == "double_phase":
            return double_phase(grid, p["p"], p["q"], p["a"])
        if family == "exp_type":
            return exp_type(grid, p["a"])
        if family == "anisotropic_sum":
            return anisotropic_sum(grid, p["p1"], p["p2"], p.get("a1", 1.0), p.get("a2", 1.0))
        if family == "tabulated":
            return tabulated(grid, np.asarray(p["nodes"]), np.asarray(p["values"]))
        raise ValueError(f"unknown family {family!r}")


def variable_exponent_power(grid, p, weight=1.0):
    return ModularFunction(
        "variable_exponent_power",
        grid,
        {
            "p": _field(grid, p, "exponent p", above_one=True),
            "weight": _field(grid, weight, "weight", positive=True),
        },
    )


def double_phase(grid, p, q, a):
    p, q = float(p), float(q)
    if not (1.0 < p < q):
        raise ValueError("double phase needs 1 < p < q")
    arr = _field(grid, a, "phase weight a")
    if arr.min() < 0:
        raise ValueError("phase weight a must be nonnegative")
    return ModularFunction("double_phase", grid, {"p": p, "q": q, "a": arr})


def exp_type(grid, a):
    return ModularFunction("exp_type", grid, {"a": _field(grid, a, "weight a", positive=True)})


def anisotropic_sum(grid, p1, p2, a1=1.0, a2=1.0):
    return ModularFunction(
        "anisotropic_sum",
        grid,
        {
            "p1": _field(grid, p1, "exponent p1", above_one=True),
            "p2": _field(grid, p2, "exponent p2", above_one=True),
            "a1": _field(grid, a1, "weight a1", positive=True),
            "a2": _field(grid, a2, "weight a2", positive=True),
        },
    )


def tabulated(grid, nodes, values):
    """Per-cell radial profiles; ``values`` has shape (ny, nx, nsect, ns).

    Sectors cover directions on [0, pi) (antipodal directions identified, so
    symmetry in xi is structural); profiles are interpolated linearly in the
    angle with wraparound.
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = np.broadcast_to(values, grid.shape + (1,) + values.shape).copy()
    if values.shape[:2] != grid.shape or values.ndim != 4:
        raise ValueError("tabulated values must have shape (ny, nx, nsect, ns)")
    if nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0):
        raise ValueError("tabulated nodes must be ascending with nodes[0] == 0")
    if np.any(values[..., 0] != 0.0):
        raise ValueError("tabulated profiles must vanish at the origin")
    if np.any(np.diff(values, axis=-1) < 0) or np.any(values < 0):
        raise ValueError("tabulated profiles must be nonnegative and nondecreasing")
    return ModularFunction("tabulated", grid, {"nodes": nodes, "values": values})


def _pwlin(nodes, values, r):
    """Piecewise-linear evaluation along the last axis of ``values``.

    ``r`` broadcasts against ``values.shape[:-1]``; beyond the last node the
    last slope extrapolates (the formula is linear in the bracket weight).
    """
    idx = np.clip(np.searchsorted(nodes, r, side="right") - 1, 0, len(nodes) - 2)
    lo = np.take_along_axis(values, idx[..., None], axis=-1)[..., 0]
    hi = np.take_along_axis(values, (idx + 1)[..., None], axis=-1)[..., 0]
    w = (r - nodes[idx]) / (nodes[idx + 1] - nodes[idx])
    return lo * (1.0 - w) + hi * w


def _tab_eval(nodes, values, xx, yy):
    """values: (..., nsect, ns) gathered per sample; xx, yy broadcast to (...)."""
    r = np.hypot(xx, yy)
    nsect = values.shape[-2]
    # radial: (..., nsect) profile values at |xi| for every sector
    radial = _pwlin(nodes, values, r[..., None])
    if nsect == 1:
        return radial[..., 0]
    theta = np.mod(np.arctan2(yy, xx), np.pi)
    u = theta / (np.pi / nsect) - 0.5
    k0 = np.floor(u).astype(np.intp)
    w = u - k0
    k0m = np.mod(k0, nsect)
    k1m = np.mod(k0 + 1, nsect)
    v0 = np.take_along_axis(radial, k0m[..., None], axis=-1)[..., 0]
    v1 = np.take_along_axis(radial, k1m[..., None], axis=-1)[..., 0]
    return v0 * (1.0 - w) + v1 * w


def _eval(family, prm, xx, yy):
    if family == "variable_exponent_power":
        r = np.hypot(xx, yy)
        with np.errstate(over="ignore"):
            return prm["weight"] * np.power(r, prm["p"])
    if family == "double_phase":
        r = np.hypot(xx, yy)
        with np.errstate(over="ignore"):
            return np.power(r, prm["p"]) + prm["a"] * np.power(r, prm["q"])
    if family == "exp_type":
        r = np.hypot(xx, yy)
        with np.errstate(over="ignore"):
            return prm["a"] * (np.exp(r) - 1.0 + r)
    if family == "anisotropic_sum":
        return prm["a1"] * np.power(np.abs(xx), prm["p1"]) + prm["a2"] * np.power(
            np.abs(yy), prm["p2"]
        )
    if family == "tabulated":
        return _tab_eval(prm["nodes"], prm["values"], xx, yy)
    raise ValueError(f"unknown family {family!r}")


def _params_full(M):
    return M.params


def _params_at(M, iy, ix):
    out = {}
    for k, v in M.params.items():
        if isinstance(v, np.ndarray) and v.shape[:2] == M.grid.shape:
            out[k] = v[iy, ix]
        else:
            out[k] = v
    return out


def _expand(prm, extra_axes):
    """Append singleton axes to gathered per-cell parameters."""
    out = {}
    for k, v in prm.items():
        if isinstance(v, np.ndarray) and k not in ("nodes",):
            out[k] = v.reshape(v.shape + (1,) * extra_axes)
        else:
            out[k] = v
    return out


def eval_field(M, vf):
    """M(x, xi(x)) for every cell; returns an (ny, nx) array."""
    if not isinstance(vf, VectorField) or vf.domain.shape != M.grid.shape:
        raise ValueError("field domain does not match the modular function grid")
    if not np.all(np.isfinite(vf.values)):
        raise ValueError("xi must be finite")
    return _eval(M.family, _params_full(M), vf.x, vf.y)


def eval_samples(M, iy, ix, xi):
    """M at cells (iy, ix) and vectors xi of shape iy.shape + (2,)."""
    xi = np.asarray(xi, dtype=np.float64)
    if not np.all(np.isfinite(xi)):
        raise ValueError("xi must be finite")
    prm = _params_at(M, np.asarray(iy), np.asarray(ix))
    return _eval(M.family, prm, xi[..., 0], xi[..., 1])


def radial_values(M, iy, ix, dirs, s):
    """M at cells (k,) for every direction (d, 2) and radius (ns,) -> (k, d, ns)."""
    iy = np.atleast_1d(np.asarray(iy))
    ix = np.atleast_1d(np.asarray(ix))
    dirs = np.asarray(dirs, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    prm = _expand(_params_at(M, iy, ix), 2)
    if M.family == "tabulated":
        # gathered values have shape (k, nsect, ns'); expand only the sample axes
        prm = dict(prm)
        prm["values"] = M.params["values"][iy, ix][:, None, None, :, :]
        prm["nodes"] = M.params["nodes"]
    xx = dirs[None, :, 0, None] * s[None, None, :]
    yy = dirs[None, :, 1, None] * s[None, None, :]
    return _eval(M.family, prm, xx, yy)


def _power_conj(weight, p, r):
    """Conjugate of t -> weight * t**p at r >= 0 (p > 1, weight > 0)."""
    pc = p / (p - 1.0)
    return (1.0 - 1.0 / p) * np.power(weight * p, 1.0 - pc) * np.power(r, pc)


def _double_phase_conj(p, q, a, r):
    """Conjugate of t -> t**p + a t**q by solving p t^(p-1) + a q t^(q-1) = r."""
    r = np.asarray(r, dtype=np.float64)
    hi = np.maximum(np.power(np.maximum(r, 1e-300) / p, 1.0 / (p - 1.0)), 1e-300)
    lo = np.zeros_like(hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        g = p * np.power(mid, p - 1.0) + a * q * np.power(mid, q - 1.0)
        take = g < r
        lo = np.where(take, mid, lo)
        hi = np.where(take, hi, mid)
    t = 0.5 * (lo + hi)
    val = r * t - (np.power(t, p) + a * np.power(t, q))
    return np.where(r > 0, np.maximum(val, 0.0), 0.0)


def _exp_conj(a, r):
    rho = r / a
    with np.errstate(invalid="ignore", divide="ignore"):
        core = (rho - 1.0) * np.log(np.maximum(rho - 1.0, 1e-300)) - rho + 2.0
    return np.where(rho > 2.0, a * core, 0.0)


def _conj(M, prm, xx, yy, iy=None, ix=None):
    fam = M.family
    if fam == "variable_exponent_power":
        return _power_conj(prm["weight"], prm["p"], np.hypot(xx, yy))
    if fam == "double_phase":
        return _double_phase_conj(prm["p"], prm["q"], prm["a"], np.hypot(xx, yy))
    if fam == "exp_type":
        return _exp_conj(prm["a"], np.hypot(xx, yy))
    if fam == "anisotropic_sum":
        return _power_conj(prm["a1"], prm["p1"], np.abs(xx)) + _power_conj(
            prm["a2"], prm["p2"], np.abs(yy)
        )
    if fam == "tabulated":
        if not M.is_isotropic():
            raise UnsupportedFamilyError(
                "conjugate evaluation needs an isotropic tabulated function"
            )
        if iy is None:
            raise ValueError("tabulated conjugate needs cell indices")
        vals = M.params["values"][iy, ix][..., 0, :]
        flat = vals.reshape(-1, vals.shape[-1])
        uniq, inv = np.unique(flat, axis=0, return_inverse=True)
        r = np.hypot(xx, yy)
        rb = np.broadcast_to(r, vals.shape[:-1]).reshape(-1)
        out = np.empty_like(rb)
        for u in range(len(uniq)):
            sel = np.nonzero(inv == u)[0]
            order = sel[np.argsort(rb[sel])]
            # evaluate the conjugate exactly at the requested radii
            out[order] = conjugate_samples(M.params["nodes"], uniq[u], rb[order])
        return np.maximum(out, 0.0).reshape(vals.shape[:-1])
    raise ValueError(f"unknown family {fam!r}")


def conjugate_field(M, vf):
    """M*(x, eta(x)) for every cell."""
    if M.family == "tabulated":
        iy, ix = np.indices(M.grid.shape)
        prm = _params_full(M)
        return _conj(M, prm, vf.x, vf.y, iy=iy, ix=ix)
    return _conj(M, _params_full(M), vf.x, vf.y)


def conjugate_samples_at(M, iy, ix, eta):
    eta = np.asarray(eta, dtype=np.float64)
    prm = _params_at(M, np.asarray(iy), np.asarray(ix))
    return _conj(M, prm, eta[..., 0], eta[..., 1], iy=np.asarray(iy), ix=np.asarray(ix))


def grad_xi_samples(M, iy, ix, xi):
    """dM/dxi at cells and vectors (smooth families, xi != 0)."""
    xi = np.asarray(xi, dtype=np.float64)
    prm = _params_at(M, np.asarray(iy), np.asarray(ix))
    xx, yy = xi[..., 0], xi[..., 1]
    r = np.hypot(xx, yy)
    fam = M.family
    if fam == "variable_exponent_power":
        fac = prm["weight"] * prm["p"] * np.power(np.maximum(r, 1e-300), prm["p"] - 2.0)
    elif fam == "double_phase":
        rs = np.maximum(r, 1e-300)
        fac = prm["p"] * np.power(rs, prm["p"] - 2.0) + prm["a"] * prm["q"] * np.power(
            rs, prm["q"] - 2.0
        )
    elif fam == "exp_type":
        fac = prm["a"] * (np.exp(r) + 1.0) / np.maximum(r, 1e-300)
    elif fam == "anisotropic_sum":
        gx = prm["a1"] * prm["p1"] * np.power(np.abs(xx), prm["p1"] - 1.0) * np.sign(xx)
        gy = prm["a2"] * prm["p2"] * np.power(np.abs(yy), prm["p2"] - 1.0) * np.sign(yy)
        return np.stack([gx, gy], axis=-1)
    else:
        raise UnsupportedFamilyError(f"no closed-form gradient for {fam!r}")
    fac = np.where(r > 0, fac, 0.0)
    return np.stack([fac * xx, fac * yy], axis=-1)


def fenchel_young_gap(M, iy, ix, xi, eta):
    """M(x, xi) + M*(x, eta) - |xi . eta|; nonnegative up to round-off."""
    xi = np.asarray(xi, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    dot = np.abs(xi[..., 0] * eta[..., 0] + xi[..., 1] * eta[..., 1])
    return eval_samples(M, iy, ix, xi) + conjugate_samples_at(M, iy, ix, eta) - dot


class ConjugateModular:
    """Evaluable wrapper for M*; duck-types the modular evaluation API."""

    def __init__(self, M):
        self.base = M
        self.grid = M.grid
        self.family = M.family + "*"

    def eval_field(self, vf):
        if vf.domain.shape != self.grid.shape:
            raise ValueError("field domain does not match the modular function grid")
        return conjugate_field(self.base, vf)

    def eval_samples(self, iy, ix, eta):
        return conjugate_samples_at(self.base, iy, ix, eta)

    def is_isotropic(self):
        return self.base.is_isotropic()
