"""Structural condition checkers for modular functions.

Checks the N-function axioms, the doubling (Delta-2) condition, log-Holder
continuity in x, and the cube-localized ratio condition that controls the
approximation properties of the space.  Each checker fits the constants it
needs from samples and returns a :class:`ConditionReport`; a failed report
always carries a witness sample.

Pass/fail rules operate on fitted-constant *stability* rather than absolute
thresholds: on a bounded sample range any inequality can be satisfied by a
large enough constant, so divergence is detected as drift of the fit when the
localization scale (doubling decade, pair distance, cube size) shrinks.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import modular as mod
from .grid import GridDomain
from .profiles import RadialProfile, biconjugate, conjugate
from .transform import envelope_values


def _json_safe(v):
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_json_safe(x) for x in v.tolist()]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


@dataclass
class ConditionReport:
    condition: str
    passed: bool
    constants: dict
    witness: dict | None
    samples: int

    def __post_init__(self):
        if not self.passed and self.witness is None:
            raise ValueError("a failed report must carry a witness")

    def to_json(self):
        return {
            "condition": self.condition,
            "pass": bool(self.passed),
            "constants": _json_safe(self.constants),
            "witness": _json_safe(self.witness),
            "samples": int(self.samples),
        }


def _directions(n, half=False):
    """n unit vectors, equally spaced on the half or full circle."""
    span = np.pi if half else 2.0 * np.pi
    th = (np.arange(n) + 0.5) * span / n
    return np.column_stack([np.cos(th), np.sin(th)])


def _cell_subset(grid, cap=4096):
    """Deterministic strided subset of cell indices."""
    iy, ix = np.indices(grid.shape)
    iy, ix = iy.ravel(), ix.ravel()
    if iy.size > cap:
        stride = int(np.ceil(iy.size / cap))
        iy, ix = iy[::stride], ix[::stride]
    return iy, ix


def _default_sgrid():
    return np.logspace(-4, 4, 65)


def _loglog_slope(s, v):
    """Least-squares slope of log v against log s (finite positive samples)."""
    m = np.isfinite(v) & (v > 0)
    if np.count_nonzero(m) < 3:
        return np.nan
    return float(np.polyfit(np.log(s[m]), np.log(v[m]), 1)[0])


def check_nfunction(M, s_grid=None, n_dirs=8, seed=0, tol=1e-9):
    """Test the four N-function axioms on a radial sample grid.

    Near-zero and near-infinity axioms are judged by the log-log slope of the
    ratio sup_x M/|xi| (resp. inf_x M/|xi|) over the outer two decades of the
    grid; convexity is a midpoint scan along rays plus random chords.
    """
    s = _default_sgrid() if s_grid is None else np.asarray(s_grid, dtype=np.float64)
    if len(s) < 8 or s.max() / s.min() < 1e4 or s.min() >= 1.0 or s.max() <= 1.0:
        raise ValueError("xi grid must span at least 4 decades around 1")
    dirs = _directions(n_dirs)
    iy, ix = _cell_subset(M.grid)
    vals = mod.radial_values(M, iy, ix, dirs, s)  # (k, d, ns)
    constants: dict = {}
    failures = []
    witness = None

    def worst(mask_kds):
        k, d, j = np.unravel_index(np.argmax(mask_kds), mask_kds.shape)
        return {
            "cell": [int(iy[k]), int(ix[k])],
            "xi": (s[j] * dirs[d]).tolist(),
        }

    # positivity away from 0 and symmetry (antipodal directions)
    if np.min(vals) <= 0.0:
        k, d, j = np.unravel_index(np.argmin(vals), vals.shape)
        failures.append("positive_off_origin")
        witness = witness or {"axiom": "positive_off_origin",
                              "cell": [int(iy[k]), int(ix[k])],
                              "xi": (s[j] * dirs[d]).tolist()}
    anti = mod.radial_values(M, iy, ix, -dirs, s)
    asym = np.abs(vals - anti)
    scale = np.maximum(np.abs(vals), 1.0)
    if np.max(asym / scale) > tol:
        failures.append("symmetry")
        witness = witness or {"axiom": "symmetry", **worst(asym / scale)}

    # slope at zero: sup_x M/|xi| must decay on the bottom decades
    ratio_sup = np.max(np.where(np.isfinite(vals), vals, 0.0), axis=(0, 1)) / s
    lo_mask = s <= s.min() * 100.0
    slope0 = _loglog_slope(s[lo_mask], ratio_sup[lo_mask])
    constants["slope_at_zero"] = slope0
    if not (slope0 > 0.05):
        failures.append("vanishing_slope_at_zero")
        witness = witness or {
            "axiom": "vanishing_slope_at_zero",
            "cell": None,
            "xi": [float(s[0]), 0.0],
            "ratio": float(ratio_sup[0]),
        }

    # superlinearity: inf_x M/|xi| must grow on the top decades
    ratio_inf = np.min(vals, axis=(0, 1)) / s
    hi_mask = s >= s.max() / 100.0
    if np.any(~np.isfinite(ratio_inf[hi_mask])):
        slope_inf = np.inf  # overflowed: growth is certainly superlinear
    else:
        slope_inf = _loglog_slope(s[hi_mask], ratio_inf[hi_mask])
    constants["slope_at_infinity"] = slope_inf
    if not (slope_inf > 0.05):
        failures.append("superlinear_at_infinity")
        witness = witness or {
            "axiom": "superlinear_at_infinity",
            "cell": None,
            "xi": [float(s[-1]), 0.0],
            "ratio": float(ratio_inf[-1]),
        }

    # midpoint convexity along rays
    s_lo, s_hi = s[:-2], s[2:]
    s_mid = 0.5 * (s_lo + s_hi)
    v_mid = mod.radial_values(M, iy, ix, dirs, s_mid)
    v_avg = 0.5 * (vals[:, :, :-2] + vals[:, :, 2:])
    with np.errstate(invalid="ignore"):
        viol = v_mid - v_avg - tol * np.maximum(np.abs(v_avg), 1.0)
    viol = np.where(np.isfinite(viol), viol, -1.0)
    if np.max(viol) > 0:
        k, d, j = np.unravel_index(np.argmax(viol), viol.shape)
        failures.append("midpoint_convexity")
        witness = witness or {
            "axiom": "midpoint_convexity",
            "cell": [int(iy[k]), int(ix[k])],
            "xi": (s_mid[j] * dirs[d]).tolist(),
            "gap": float(viol[k, d, j]),
        }
    # random chords across directions
    rng = np.random.default_rng(seed)
    ncell = min(len(iy), 256)
    sel = rng.integers(0, len(iy), size=ncell)
    xi_a = rng.uniform(-1, 1, size=(ncell, 2)) * rng.choice(s, size=(ncell, 1))
    xi_b = rng.uniform(-1, 1, size=(ncell, 2)) * rng.choice(s, size=(ncell, 1))
    ya, yb = iy[sel], ix[sel]
    va = mod.eval_samples(M, ya, yb, xi_a)
    vb = mod.eval_samples(M, ya, yb, xi_b)
    vm = mod.eval_samples(M, ya, yb, 0.5 * (xi_a + xi_b))
    finite = np.isfinite(va) & np.isfinite(vb)
    chord = np.where(finite, vm - 0.5 * (va + vb), -1.0)
    bad = chord > tol * np.maximum(0.5 * np.abs(va + vb), 1.0)
    if np.any(bad):
        k = int(np.argmax(np.where(bad, chord, -np.inf)))
        failures.append("midpoint_convexity_chord")
        witness = witness or {
            "axiom": "midpoint_convexity",
            "cell": [int(ya[k]), int(yb[k])],
            "xi": xi_a[k].tolist(),
            "xi2": xi_b[k].tolist(),
        }

    constants["failed_axioms"] = failures
    return ConditionReport(
        condition="nfunction",
        passed=not failures,
        constants=constants,
        witness=witness,
        samples=int(vals.size),
    )


def check_delta2(M, s_grid=None, n_dirs=8, drift_tol=0.05):
    """Fit the doubling constant and test it for scale drift.

    The fitted c is the supremum of M(x, 2 xi)/M(x, xi) over the decade that
    starts at the geometric center of the sample range; the check fails when
    the top-decade fit exceeds it by more than ``drift_tol``.
    """
    s = _default_sgrid() if s_grid is None else np.asarray(s_grid, dtype=np.float64)
    dirs = _directions(n_dirs)
    iy, ix = _cell_subset(M.grid)
    v1 = mod.radial_values(M, iy, ix, dirs, s)
    v2 = mod.radial_values(M, iy, ix, dirs, 2.0 * s)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(v1 > 0, v2 / v1, 0.0)
    ratio = np.where(np.isnan(ratio), np.inf, ratio)  # inf/inf: already doubled over

    gcenter = np.sqrt(s.min() * s.max())
    mid_mask = (s >= gcenter) & (s < 10.0 * gcenter)
    top_mask = s >= s.max() / 10.0
    c_mid = float(np.max(ratio[:, :, mid_mask]))
    c_top = float(np.max(ratio[:, :, top_mask]))
    passed = np.isfinite(c_top) and c_top <= (1.0 + drift_tol) * c_mid

    # additive part h(x) for the fitted c, and its integral
    with np.errstate(invalid="ignore"):
        excess = v2 - c_mid * v1
    excess = np.where(np.isfinite(excess), np.maximum(excess, 0.0), np.inf)
    h_cell = np.max(excess, axis=(1, 2))
    int_h = float(np.sum(h_cell) * M.grid.cell_area) if np.all(np.isfinite(h_cell)) else np.inf

    witness = None
    if not passed:
        sub = np.where(top_mask)[0]
        masked = ratio[:, :, sub]
        k, d, j = np.unravel_index(np.argmax(masked), masked.shape)
        witness = {
            "cell": [int(iy[k]), int(ix[k])],
            "xi": (s[sub[j]] * dirs[d]).tolist(),
            "ratio": float(masked[k, d, j]),
        }
    return ConditionReport(
        condition="delta2",
        passed=bool(passed),
        constants={"c": c_mid, "c_top": c_top, "drift": c_top / c_mid - 1.0
                   if np.isfinite(c_top) else np.inf, "int_h": int_h},
        witness=witness,
        samples=int(ratio.size),
    )


def _stratified_pairs(grid, n_pairs, rng):
    """Cell pairs with |x - y| < 1/2, stratified over distance half-decades.

    Uniform random pairs almost never land at small separations, so each
    distance bin gets its own budget of (random cell, random offset) pairs.
    Returns index arrays and separations.
    """
    h = grid.h
    edges = 0.5 ** np.arange(1, 12)
    edges = edges[edges > 1.5 * h]
    bins = [(edges[k + 1], edges[k]) for k in range(len(edges) - 1)]
    if not bins:
        raise ValueError("pair budget too small for the domain")
    per = max(n_pairs // len(bins), 32)
    iy1 = []
    ix1 = []
    iy2 = []
    ix2 = []
    for lo, hi in bins:
        d = rng.uniform(lo, hi, size=per)
        th = rng.uniform(0.0, 2 * np.pi, size=per)
        ay = rng.integers(0, grid.ny, size=per)
        ax = rng.integers(0, grid.nx, size=per)
        by = ay + np.rint(d * np.sin(th) / h).astype(int)
        bx = ax + np.rint(d * np.cos(th) / h).astype(int)
        keep = (by >= 0) & (by < grid.ny) & (bx >= 0) & (bx < grid.nx)
        keep &= (by != ay) | (bx != ax)
        iy1.append(ay[keep])
        ix1.append(ax[keep])
        iy2.append(by[keep])
        ix2.append(bx[keep])
    iy1, ix1, iy2, ix2 = (np.concatenate(a) for a in (iy1, ix1, iy2, ix2))
    xc, yc = grid.cell_centers()
    dist = np.hypot(xc[ix1] - xc[ix2], yc[iy1] - yc[iy2])
    keep = (dist > 0) & (dist < 0.5)
    return iy1[keep], ix1[keep], iy2[keep], ix2[keep], dist[keep]


def check_log_holder(M, n_pairs=20000, s_grid=None, seed=0, tol=1e-9):
    """Fit the spatial continuity constants (a1, b1) over stratified cell pairs.

    The exponent a1 is fitted on |xi| >= 1 samples binned by pair distance.
    The check fails when the per-bin fit grows with log(1/distance) (a jump
    in x makes the required a1 diverge as pairs shrink); b1 then covers the
    |xi| < 1 samples.
    """
    if not M.is_isotropic():
        raise mod.UnsupportedFamilyError("log-Holder check needs an isotropic family")
    s = _default_sgrid() if s_grid is None else np.asarray(s_grid, dtype=np.float64)
    grid = M.grid
    rng = np.random.default_rng(seed)
    iy1, ix1, iy2, ix2, dist = _stratified_pairs(grid, n_pairs, rng)
    if len(dist) < 64:
        raise ValueError("pair budget too small for the domain")

    e1 = np.array([[1.0, 0.0]])
    vx = mod.radial_values(M, iy1, ix1, e1, s)[:, 0, :]
    vy = mod.radial_values(M, iy2, ix2, e1, s)[:, 0, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.abs(np.log(vx) - np.log(vy))
    logr = np.where(np.isfinite(logr), logr, np.inf)
    L = np.log(1.0 / dist)[:, None]

    hi = s > 1.0
    a_req = np.max(L * logr[:, hi] / np.log(s[hi])[None, :], axis=1)

    edges = 0.5 ** np.arange(1, 12)
    bin_a = []
    bin_L = []
    for k in range(len(edges) - 1):
        m = (dist <= edges[k]) & (dist > edges[k + 1])
        if np.count_nonzero(m) >= 32:
            bin_a.append(float(np.max(a_req[m])))
            bin_L.append(float(np.log(1.0 / np.sqrt(edges[k] * edges[k + 1]))))
    a1 = float(np.max(a_req))
    constants = {"a1": a1, "bin_a1": bin_a, "bin_log_inv_distance": bin_L}

    if a1 <= tol:
        constants["b1"] = 1.0
        return ConditionReport("log_holder", True, constants, None, int(logr.size))

    lo = s < 1.0
    need = np.max(L * logr[:, lo], axis=1) / a1
    b1 = float(np.exp(np.max(need)))
    constants["b1"] = b1

    # divergence rule: the fitted a1 may not grow with log(1/distance)
    if len(bin_a) >= 3 and np.isfinite(a1):
        slope = float(np.polyfit(bin_L, bin_a, 1)[0])
        growth = max(slope, 0.0) * (max(bin_L) - min(bin_L))
        passed = growth <= 0.5 * a1
        constants["a1_growth"] = growth
    else:
        passed = bool(np.isfinite(a1) and (len(bin_a) < 2 or bin_a[-1] <= 2.0 * bin_a[0] + tol))
    witness = None
    if not passed:
        xc, yc = grid.cell_centers()
        k = int(np.argmax(a_req))
        j = int(np.argmax(logr[k, hi] / np.log(s[hi])))
        witness = {
            "x": [float(xc[ix1[k]]), float(yc[iy1[k]])],
            "y": [float(xc[ix2[k]]), float(yc[iy2[k]])],
            "xi": [float(s[hi][j]), 0.0],
            "a1_required": float(a_req[k]),
        }
    return ConditionReport("log_holder", bool(passed), constants, witness, int(logr.size))


@dataclass
class CubeCover:
    """Disjoint closed cubes of edge 2*delta covering the domain, with
    concentric enlarged cubes of edge 4*delta."""

    domain: GridDomain
    delta: float
    ncx: int = field(init=False)
    ncy: int = field(init=False)
    cube_of_cell: np.ndarray = field(init=False)

    def __post_init__(self):
        d = self.domain
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        edge = 2.0 * self.delta
        self.ncx = int(np.ceil((d.x1 - d.x0) / edge - 1e-12))
        self.ncy = int(np.ceil((d.y1 - d.y0) / edge - 1e-12))
        xc, yc = d.cell_centers()
        cx = np.clip(((xc - d.x0) / edge).astype(int), 0, self.ncx - 1)
        cy = np.clip(((yc - d.y0) / edge).astype(int), 0, self.ncy - 1)
        self.cube_of_cell = cy[:, None] * self.ncx + cx[None, :]

    @property
    def n_cubes(self):
        return self.ncx * self.ncy

    def center(self, j):
        cy, cx = divmod(j, self.ncx)
        edge = 2.0 * self.delta
        return (self.domain.x0 + (cx + 0.5) * edge, self.domain.y0 + (cy + 0.5) * edge)

    def cells(self, j):
        iy, ix = np.nonzero(self.cube_of_cell == j)
        return iy, ix

    def cells_enlarged(self, j):
        d = self.domain
        cxm, cym = self.center(j)
        xc, yc = d.cell_centers()
        half = 2.0 * self.delta + 1e-12
        ixs = np.nonzero(np.abs(xc - cxm) <= half)[0]
        iys = np.nonzero(np.abs(yc - cym) <= half)[0]
        iy, ix = np.meshgrid(iys, ixs, indexing="ij")
        return iy.ravel(), ix.ravel()


def _sgrid_with_origin(s):
    return np.concatenate([[0.0], s])


def check_condition_m(M, deltas, s_grid=None, n_dirs=32, delta0=0.25,
                      drift_tol=0.10, fit_slack=0.25):
    """Cube-localized ratio check across a list of cube scales.

    For each delta the worst ratio of M(x, xi) to the convex envelope of its
    infimum over the enlarged cube is reduced to a per-scale exponent e(delta)
    (log-log regression over the top decades).  The induced constant
    a(delta) = e(delta) * log(1/delta) must not grow as delta shrinks; the
    reported (a, b, c) are then verified directly against every sample.
    """
    deltas = sorted(float(d) for d in np.atleast_1d(deltas))[::-1]
    grid = M.grid
    h = grid.h
    for d in deltas:
        if d >= delta0:
            raise ValueError(f"delta {d} must be below delta0 = {delta0}")
        if 4.0 * d < 2.0 * h:
            raise ValueError(f"delta {d} too small: enlarged cube holds < 4 cells")
    s = np.logspace(-4, 4, 129) if s_grid is None else np.asarray(s_grid, dtype=np.float64)
    nodes = _sgrid_with_origin(s)
    dirs = _directions(1 if M.is_isotropic() else n_dirs, half=True)

    ratio_curves = {}
    worst = {"ratio": -np.inf}
    n_samples = 0
    for delta in deltas:
        cover = CubeCover(grid, delta)
        rmax = np.zeros_like(s)
        for j in range(cover.n_cubes):
            ey, ex = cover.cells_enlarged(j)
            prof = np.min(mod.radial_values(M, ey, ex, dirs, s), axis=0)  # (d, ns)
            rows = np.concatenate([np.zeros((len(dirs), 1)), prof], axis=1)
            env = envelope_values(nodes, rows)[:, 1:]  # greatest convex minorant
            qy, qx = cover.cells(j)
            if len(qy) == 0:
                continue
            vals = mod.radial_values(M, qy, qx, dirs, s)  # (k, d, ns)
            with np.errstate(divide="ignore", invalid="ignore"):
                r = np.where(env[None] > 0, vals / env[None], 1.0)
            n_samples += r.size
            rj = np.max(r, axis=(0, 1))
            better = rj > rmax
            rmax = np.where(better, rj, rmax)
            rw = float(np.max(rj))
            if rw > worst["ratio"]:
                k, dd, jj = np.unravel_index(np.argmax(r), r.shape)
                worst = {
                    "ratio": rw,
                    "cell": [int(qy[k]), int(qx[k])],
                    "xi": (s[jj] * dirs[dd]).tolist(),
                    "delta": delta,
                }
        ratio_curves[delta] = rmax

    # per-scale exponent from the top decades, induced constant a(delta)
    hi = s >= 10.0
    lo = s <= 1.0
    e_fit, a_fit, c_fit = [], [], []
    for delta in deltas:
        R = ratio_curves[delta]
        mask = hi & np.isfinite(R) & (R > 0)
        slope, icept = np.polyfit(np.log(s[mask]), np.log(R[mask]), 1)
        e = max(float(slope), 0.0)
        e_fit.append(e)
        a_fit.append(e * np.log(1.0 / delta))
        c_fit.append(float(np.exp(icept)))
    c_small = max(float(np.max(ratio_curves[d][lo])) for d in deltas)
    c = max(1.0, c_small, max(c_fit))
    a = max(max(a_fit), 0.0)
    b = 1.0

    stable = a_fit[-1] <= 1.10 * max(a_fit[:-1] + [1e-9]) + 1e-9 if len(deltas) > 1 else True
    # direct verification of the reported constants against every sample
    verified = True
    for delta in deltas:
        ebound = a / np.log(1.0 / (b * delta)) if a > 0 else 0.0
        bound = c * (1.0 + s**ebound) * (1.0 + fit_slack)
        if np.any(ratio_curves[delta] > bound):
            verified = False
            break
    passed = bool(stable and verified)
    constants = {
        "a": a,
        "b": b,
        "c": c,
        "deltas": list(deltas),
        "a_per_delta": a_fit,
        "e_per_delta": e_fit,
        "stable": bool(stable),
        "verified": bool(verified),
        "drift": (a_fit[-1] / max(max(a_fit[:-1]), 1e-9) - 1.0) if len(deltas) > 1 else 0.0,
    }
    witness = None if passed else {k: v for k, v in worst.items()}
    return ConditionReport("condition_m", passed, constants, witness, n_samples)


def radial_infimum(M, n_dirs=32, s_grid=None, chunk=512):
    """Profile of inf over cells and directions of M(x, s * d)."""
    s = np.logspace(-4, 4, 257) if s_grid is None else np.asarray(s_grid, dtype=np.float64)
    dirs = _directions(1 if M.is_isotropic() else n_dirs, half=True)
    iy, ix = np.indices(M.grid.shape)
    iy, ix = iy.ravel(), ix.ravel()
    best = np.full(len(s), np.inf)
    for lo in range(0, len(iy), chunk):
        v = mod.radial_values(M, iy[lo:lo + chunk], ix[lo:lo + chunk], dirs, s)
        best = np.minimum(best, np.min(v, axis=(0, 1)))
    return RadialProfile(_sgrid_with_origin(s), np.concatenate([[0.0], best]))


def m_underbar(M, alpha, n_dirs=32, s_grid=None, step_decades=1e-3):
    """Doubling minorant of the radial infimum envelope.

    Builds m_* as the convex envelope of the radial infimum of M, then
    integrates m'(s) = min(m_*'(s), alpha * m(s)/s) from the first positive
    node (explicit log-spaced Euler with step halving at branch switches).
    The result stays below m_* and satisfies m(2s) <= 2**alpha * m(s).
    """
    if alpha <= 1.0:
        raise ValueError("alpha must exceed 1")
    m_star = biconjugate(radial_infimum(M, n_dirs=n_dirs, s_grid=s_grid))
    nodes = m_star.nodes
    sv = nodes[1:]
    slopes = m_star.slopes()  # slope on [nodes[i], nodes[i+1]]

    def star_slope(x):
        i = np.searchsorted(nodes, x, side="right") - 1
        return slopes[min(max(i, 0), len(slopes) - 1)]

    n_steps = int(np.ceil(np.log10(sv[-1] / sv[0]) / step_decades))
    grid_s = np.logspace(np.log10(sv[0]), np.log10(sv[-1]), n_steps + 1)
    vals = np.empty_like(grid_s)
    vals[0] = m_star.values[1]

    def branch(x, y):
        return star_slope(x) <= alpha * y / x  # ties go to the first branch

    def advance(lo_s, hi_s, y, depth):
        # both branch flows integrate exactly over a step: linear growth with
        # the envelope slope, or the pure power y * (hi/lo)**alpha
        first = branch(lo_s, y)
        if first:
            y_end = y + star_slope(lo_s) * (hi_s - lo_s)
        else:
            y_end = y * (hi_s / lo_s) ** alpha
        if depth > 0 and branch(hi_s, y_end) != first:  # halve across the switch
            mid = np.sqrt(lo_s * hi_s)
            y = advance(lo_s, mid, y, depth - 1)
            return advance(mid, hi_s, y, depth - 1)
        return y_end

    for i in range(n_steps):
        vals[i + 1] = advance(grid_s[i], grid_s[i + 1], vals[i], 6)

    # subsampled integration grid keeps the piecewise-linear chord excess of
    # the doubling ratio below 1e-4
    keep = np.arange(0, n_steps + 1, 4)
    if keep[-1] != n_steps:
        keep = np.append(keep, n_steps)
    out_s = grid_s[keep]
    out_v = np.minimum(vals[keep], m_star.eval(out_s))
    return RadialProfile(
        np.concatenate([[0.0], out_s]), np.concatenate([[0.0], out_v])
    )


def growth_envelope(M, n_dirs=32, s_grid=None, chunk=256):
    """Radial upper envelope P with P(s) >= M(x, xi) for |xi| = s.

    P(s) = sup over |xi| = s of the conjugate of xi -> inf_x M*(x, xi);
    exact (up to grid error) for isotropic families, direction-sampled for
    anisotropic ones.  Returns (P, P*).
    """
    s = np.logspace(-4, 4, 257) if s_grid is None else np.asarray(s_grid, dtype=np.float64)
    iso = M.is_isotropic()
    dirs = _directions(1 if iso else n_dirs, half=True)
    iy, ix = np.indices(M.grid.shape)
    iy, ix = iy.ravel(), ix.ravel()
    ns, nd = len(s), len(dirs)
    best = np.full((nd, ns), np.inf)
    eta = dirs[:, None, :] * s[None, :, None]  # (nd, ns, 2)
    for lo in range(0, len(iy), chunk):
        cy, cx = iy[lo:lo + chunk], ix[lo:lo + chunk]
        v = mod.conjugate_samples_at(
            M, cy[:, None, None], cx[:, None, None], eta[None]
        )
        best = np.minimum(best, np.min(v, axis=0))
    nodes = _sgrid_with_origin(s)
    if iso:
        phi = RadialProfile(nodes, np.concatenate([[0.0], best[0]]))
        P = conjugate(phi, dual_nodes=nodes)
    else:
        # discrete conjugate over the sampled directions and radii
        pts = (dirs[:, None, :] * s[None, :, None]).reshape(-1, 2)
        phi = best.reshape(-1)
        vals = np.zeros((nd, ns))
        for d in range(nd):
            etag = dirs[d][None, :] * s[:, None]  # (ns, 2)
            dots = pts @ etag.T  # (npts, ns)
            vals[d] = np.max(dots - phi[:, None], axis=0)
        P = RadialProfile(nodes, np.concatenate([[0.0], np.maximum(np.max(vals, axis=0), 0.0)]))
    return P, conjugate(P, dual_nodes=nodes)
