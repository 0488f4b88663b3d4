"""Energy-minimizing solver for monotone elliptic problems and the
truncation-scheme diagnostics for integrable data.

The discrete energy sums the operator potential at cell-centered forward
differences over the cells that own both forward neighbors, so every cell
interface is counted exactly once: for the quadratic case the optimality
system is exactly the five-point Laplacian, and the energy inherits the
transpose symmetry of the stencil.  The minimizer is found by a
Polak-Ribiere conjugate-gradient descent with a secant/backtracking line
search (plain halving descent as fallback), warm-started along truncation
and regularization schedules.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .fields import gradient, modular, truncate
from .grid import ScalarField, VectorField
from .modular import ConjugateModular


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, residual_trace=None, s=None):
        super().__init__(msg)
        self.residual_trace = residual_trace
        self.s = s


@dataclass(frozen=True)
class EllipticProblem:
    """Dirichlet problem -div A(x, grad u) = f with modular growth control."""

    domain: object
    operator: ops.OperatorSpec
    modular: object
    source: ScalarField
    c_A: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.source.domain.shape != self.domain.shape:
            raise ValueError("source and domain shapes disagree")
        if self.c_A is None:
            rep = ops.coercivity_check(self.operator, self.modular, n_samples=4000)
            if not rep.passed:
                raise ValueError(
                    f"operator/modular pair fails the coercivity check: {rep.witness}"
                )
            object.__setattr__(self, "c_A", rep.constants["c_A"])


def _energy_grad(spec, gvals, h, u, need_grad=True):
    gx = (u[:, 1:] - u[:, :-1]) / h
    gy = (u[1:, :] - u[:-1, :]) / h
    gxc = gx[:-1, :]
    gyc = gy[:, :-1]
    sl = (slice(0, u.shape[0] - 1), slice(0, u.shape[1] - 1))
    phi = ops.potential_values(spec, gxc, gyc, sl=sl)
    E = float(phi.sum() * h * h - (gvals * u).sum() * h * h)
    if not need_grad:
        return E, None
    Ax, Ay = ops.operator_values(spec, gxc, gyc, sl=sl)
    grad = np.zeros_like(u)
    grad[:-1, :-1] -= (Ax + Ay) * h
    grad[:-1, 1:] += Ax * h
    grad[1:, :-1] += Ay * h
    grad -= gvals * h * h
    grad[0, :] = grad[-1, :] = 0.0
    grad[:, 0] = grad[:, -1] = 0.0
    return E, grad


def weak_residual(spec, g, u):
    """Max nodal weak-form residual |sum A(x, grad u).grad phi - sum g phi|."""
    _, gr = _energy_grad(spec, g.values, u.domain.h, u.values)
    return float(np.max(np.abs(gr)))


def _minimize(spec, gvals, h, u0, tol, max_iter):
    u = u0.copy()
    E, gr = _energy_grad(spec, gvals, h, u)
    d = -gr
    res_hist = [float(np.max(np.abs(gr)))]
    energy_hist = [E]
    ls_failures = 0
    alpha = 1.0
    it = 0
    while res_hist[-1] > tol:
        if it >= max_iter:
            return u, {
                "converged": False,
                "iterations": it,
                "residual": res_hist[-1],
                "residual_trace": np.asarray(res_hist),
                "energy_trace": np.asarray(energy_hist),
            }
        gdot = float(np.sum(gr * d))
        if gdot >= 0.0:  # not a descent direction: restart on steepest descent
            d = -gr
            gdot = -float(np.sum(gr * gr))
        # secant steps on the directional derivative; the gradient stays
        # accurate when energy differences drop below float resolution, so
        # acceptance is a curvature test with an energy blow-up guard
        fp_slack = 64.0 * np.finfo(float).eps * max(abs(E), 1.0)
        a1 = alpha
        ok = False
        for _ in range(8):
            E1, gr1 = _energy_grad(spec, gvals, h, u + a1 * d)
            d1 = float(np.sum(gr1 * d))
            if (
                np.isfinite(E1)
                and E1 <= E + 1e-4 * a1 * gdot + fp_slack
                and abs(d1) <= 0.5 * abs(gdot)
            ):
                ok = True
                break
            denom = d1 - gdot
            a_new = a1 * (1.0 - d1 / denom) if denom > 0 else 2.0 * a1
            if not np.isfinite(a_new) or a_new <= 0:
                a_new = 0.5 * a1
            a1 = min(max(a_new, 1e-12 * alpha), 1e6 * max(alpha, 1.0))
        if not ok:
            ls_failures += 1
            a1 = alpha
            for _ in range(40):  # plain halving on the energy
                E1, gr1 = _energy_grad(spec, gvals, h, u + a1 * d)
                if np.isfinite(E1) and E1 <= E + fp_slack:
                    ok = True
                    break
                a1 *= 0.5
            if not ok or ls_failures >= 5:
                d = -gr  # fall back to gradient descent from here on
                ls_failures = 0
                a1 = min(a1, 1.0)
                E1, gr1 = _energy_grad(spec, gvals, h, u + a1 * d)
                while not (np.isfinite(E1) and E1 <= E + fp_slack) and a1 > 1e-300:
                    a1 *= 0.5
                    E1, gr1 = _energy_grad(spec, gvals, h, u + a1 * d)
        u = u + a1 * d
        beta = max(0.0, float(np.sum(gr1 * (gr1 - gr)) / np.sum(gr * gr)))
        d = -gr1 + beta * d
        E, gr = E1, gr1
        alpha = a1
        res_hist.append(float(np.max(np.abs(gr))))
        energy_hist.append(E)
        it += 1
    return u, {
        "converged": True,
        "iterations": it,
        "residual": res_hist[-1],
        "residual_trace": np.asarray(res_hist),
        "energy_trace": np.asarray(energy_hist),
    }


def solve_bounded(problem, g, tol=1e-10, max_iter=50000, u0=None, return_info=False):
    """Minimize the discrete energy for bounded data g.

    Returns the Dirichlet field whose nodal weak-form residual is below
    ``tol``; raises :class:`NonConvergenceError` (carrying the residual
    trace) if the iteration budget runs out.  Operators with exponents below
    2 are continued through a decreasing regularization ladder.
    """
    if not np.all(np.isfinite(g.values)):
        raise ValueError("data must be bounded")
    dom = problem.domain
    spec = problem.operator
    h = dom.h
    u = np.zeros(dom.shape) if u0 is None else u0.values.copy()
    u[dom.boundary_mask()] = 0.0

    if spec.eps_reg == 0.0 and spec.min_exponent() < 2.0:
        ladder = [1e-2, 1e-4, 1e-6]
    else:
        ladder = [spec.eps_reg]
    info = None
    for k, eps in enumerate(ladder):
        stage = spec.with_eps(eps)
        stage_tol = tol if k == len(ladder) - 1 else max(tol, 1e-6)
        u, info = _minimize(stage, g.values, h, u, stage_tol, max_iter)
        if not info["converged"]:
            raise NonConvergenceError(
                f"descent exhausted {max_iter} iterations at residual "
                f"{info['residual']:.3e} (eps={eps:g})",
                residual_trace=info["residual_trace"],
            )
    out = ScalarField(dom, u)
    return (out, info) if return_info else out


def sample_source(domain, f, singular_points=(), subsample=32):
    """Cell samples of f; cells holding a singular point get a subsampled
    cell average instead of the center value."""
    X, Y = domain.meshgrid()
    vals = np.asarray(f(X, Y), dtype=np.float64)
    h = domain.h
    for (sx, sy) in singular_points:
        ix = int((sx - domain.x0) / h)
        iy = int((sy - domain.y0) / h)
        if not (0 <= ix < domain.nx and 0 <= iy < domain.ny):
            continue
        off = (np.arange(subsample) + 0.5) / subsample * h
        xs = domain.x0 + ix * h + off
        ys = domain.y0 + iy * h + off
        sub = np.asarray(f(xs[None, :], ys[:, None]), dtype=np.float64)
        vals[iy, ix] = float(np.mean(sub[np.isfinite(sub)]))
    if not np.all(np.isfinite(vals)):
        raise ValueError("source has non-finite samples outside declared singularities")
    return ScalarField(domain, vals)


@dataclass
class SolverReport:
    """Snapshots and per-stage convergence info of a truncation schedule."""

    problem: EllipticProblem
    s_values: list
    snapshots: list
    infos: list
    c_A: float

    def snapshot(self, j):
        return self.snapshots[j]


def truncated_sequence(problem, schedule, tol=1e-9, max_iter=50000):
    """Solve the truncated problems g = T_s(f) along an increasing schedule,
    warm-starting each stage from the previous solution."""
    schedule = [float(s) for s in np.atleast_1d(schedule)]
    if not schedule:
        raise ValueError("schedule must be nonempty")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    f = problem.source
    snapshots = []
    infos = []
    u_prev = None
    for s in schedule:
        g = truncate(f, s)
        try:
            u, info = solve_bounded(
                problem, g, tol=tol, max_iter=max_iter, u0=u_prev, return_info=True
            )
        except NonConvergenceError as err:
            err.s = s
            raise
        snapshots.append(u)
        infos.append(info)
        u_prev = u
    return SolverReport(problem, schedule, snapshots, infos, problem.c_A)


def _masked_gradient(u, k):
    """Gradient of u masked to cells with |u| < k (the discrete chain rule)."""
    gv = gradient(u).values.copy()
    inside = np.abs(u.values) < k
    gv[0][~inside] = 0.0
    gv[1][~inside] = 0.0
    return VectorField(u.domain, gv)


def apriori_check(report, k_values, tol=1e-2, threads=1):
    """Modular bounds for truncated gradients against (k/c_A) ||f||_L1.

    Returns (rows, all_ok); each row records both modulars and their ratios
    to the bound.  The (s, k) cells are independent and may be farmed to
    ``threads`` workers.
    """
    prob = report.problem
    M = prob.modular
    Mstar = ConjugateModular(M)
    area = prob.domain.cell_area
    f_l1 = float(np.sum(np.abs(prob.source.values)) * area)
    jobs = [(s, u, k) for s, u in zip(report.s_values, report.snapshots)
            for k in k_values]

    def one(job):
        s, u, k = job
        gk = _masked_gradient(u, k)
        m_val = modular(M, gk)
        a_val = modular(Mstar, ops.operator_field(prob.operator, gk))
        bound = k / report.c_A * f_l1
        ok = (m_val <= bound * (1.0 + tol)) and (a_val <= bound * (1.0 + tol))
        return {
            "s": s,
            "k": k,
            "modular_gradient": m_val,
            "modular_dual": a_val,
            "bound": bound,
            "ratio_gradient": m_val / bound if bound > 0 else 0.0,
            "ratio_dual": a_val / bound if bound > 0 else 0.0,
            "ok": ok,
        }

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, jobs))
    else:
        rows = [one(j) for j in jobs]
    return rows, all(r["ok"] for r in rows)


def radiation_profile(u, spec, l_values, m_under=None):
    """Annulus energies l -> int_{l < |u| < l+1} A(x, grad u).grad u.

    Also records the level-set measures |{|u| > l}| and, when a doubling
    minorant is supplied, the comparison envelope l/m(l).
    """
    from .fields import ConvergenceTrace

    dom = u.domain
    G = gradient(u)
    Ax, Ay = ops.operator_values(spec, G.values[0], G.values[1])
    density = Ax * G.values[0] + Ay * G.values[1]
    au = np.abs(u.values)
    area = dom.cell_area
    l_values = np.asarray(sorted(float(l) for l in np.atleast_1d(l_values)))
    rad = np.array(
        [float(np.sum(density[(au > l) & (au < l + 1.0)]) * area) for l in l_values]
    )
    meas = np.array([float(np.count_nonzero(au > l) * area) for l in l_values])
    series = {"radiation": rad, "measure": meas}
    if m_under is not None:
        with np.errstate(divide="ignore"):
            env = l_values / np.maximum(m_under.eval(l_values), 1e-300)
        series["measure_envelope_shape"] = env
    return ConvergenceTrace(indices=l_values, series=series)


@dataclass(frozen=True)
class BumpSpec:
    """Compactly supported C^1 bump around ``center`` of radius ``halfwidth``.

    Flat (exactly one) on the inner ``plateau`` fraction of the radius, then
    a quartic polynomial ramp (1 - s^2)^2 down to zero.
    """

    center: float
    halfwidth: float
    plateau: float = 0.0

    def _ramp_coord(self, r):
        t = np.abs((np.asarray(r, dtype=np.float64) - self.center) / self.halfwidth)
        return (t - self.plateau) / (1.0 - self.plateau)

    def __call__(self, r):
        s = self._ramp_coord(r)
        out = np.where(s < 1.0, (1.0 - np.clip(s, 0.0, 1.0) ** 2) ** 2, 0.0)
        return np.where(s <= 0.0, 1.0, out)

    def deriv(self, r):
        t = (np.asarray(r, dtype=np.float64) - self.center) / self.halfwidth
        s = self._ramp_coord(r)
        inner = (s > 0.0) & (s < 1.0)
        mag = -4.0 * s * (1.0 - s * s) / ((1.0 - self.plateau) * self.halfwidth)
        return np.where(inner, mag * np.sign(t), 0.0)


def renormalized_residual(u, spec, f, bump, phi):
    """|sum A(x, grad u) . grad(h(u) phi) - sum f h(u) phi| with the discrete
    product rule grad(h(u) phi) = h'(u) phi grad u + h(u) grad phi.

    Uses the energy stencil, so with h == 1 on the range of u the value
    reduces to the nodal weak-form residual.
    """
    dom = u.domain
    h = dom.h
    uv = u.values
    gx = (uv[:, 1:] - uv[:, :-1])[:-1, :] / h
    gy = (uv[1:, :] - uv[:-1, :])[:, :-1] / h
    pv = phi.values
    pgx = (pv[:, 1:] - pv[:, :-1])[:-1, :] / h
    pgy = (pv[1:, :] - pv[:-1, :])[:, :-1] / h
    sl = (slice(0, dom.ny - 1), slice(0, dom.nx - 1))
    Ax, Ay = ops.operator_values(spec, gx, gy, sl=sl)
    hu = bump(uv)[sl]
    dhu = bump.deriv(uv)[sl]
    phc = pv[sl]
    test_x = dhu * phc * gx + hu * pgx
    test_y = dhu * phc * gy + hu * pgy
    lhs = float(np.sum(Ax * test_x + Ay * test_y) * h * h)
    rhs = float(np.sum(f.values * bump(uv) * pv) * h * h)
    return abs(lhs - rhs)


def convergence_diagnostics(report, k_values, p_values=(2.0,), phis=(), m_under=None):
    """Stabilization diagnostics along the truncation schedule.

    Per k: L^p distances between successive truncations; level-set measures
    against the doubling-minorant envelope; dual pairings against a battery
    of smooth fields, checked for Cauchy behavior in s.
    """
    if len(report.snapshots) < 3:
        raise ValueError("need at least 3 snapshots")
    prob = report.problem
    area = prob.domain.cell_area
    out = {"s_values": np.asarray(report.s_values)}
    distances = {}
    for k in k_values:
        tks = [truncate(u, k).values for u in report.snapshots]
        for p in p_values:
            d = [
                float((np.sum(np.abs(b - a) ** p) * area) ** (1.0 / p))
                for a, b in zip(tks, tks[1:])
            ]
            distances[f"k={k:g},p={p:g}"] = np.asarray(d)
    out["successive_distances"] = distances

    u_last = report.snapshots[-1]
    l_grid = np.arange(1.0, max(2.0, np.ceil(np.max(np.abs(u_last.values)))) + 1.0)
    out["levelset"] = radiation_profile(u_last, prob.operator, l_grid, m_under=m_under)

    pairings = {}
    for idx, phi in enumerate(phis):
        gphi = gradient(phi)
        for k in k_values:
            vals = []
            for u in report.snapshots:
                gk = _masked_gradient(u, k)
                Af = ops.operator_field(prob.operator, gk)
                vals.append(float(np.sum(Af.values * gphi.values) * area))
            pairings[f"phi{idx},k={k:g}"] = np.asarray(vals)
    out["pairings"] = pairings
    return out
