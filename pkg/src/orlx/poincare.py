"""Empirical study of the modular Poincare inequality.

For a doubling radial profile m and Dirichlet fields g the ratio
int m(|g|) / int m(|grad g|) is bounded by a constant depending only on the
domain, the dimension and the doubling constant of m.  The module measures
the ratio over field batteries and compares the empirical maximum against
the (non-sharp) theoretical chain constant.
"""

import numpy as np

from .fields import ConvergenceTrace, gradient
from .grid import ScalarField


class DegenerateFieldError(ValueError):
    """The gradient modular vanishes, so the ratio is undefined."""


def _check_doubling(m, drift_tol=0.05):
    # the doubling ratio of an admissible profile levels off: compare the top
    # decade against the one below it (a slow approach to the asymptotic
    # constant is fine, continued growth is not)
    s = m.nodes[1:]
    v = m.values[1:]
    pos = v > 0
    ratios = np.where(pos, m.eval(2.0 * s) / np.where(pos, v, 1.0), 0.0)
    top = s >= s[-1] / 10.0
    prev = (s >= s[-1] / 100.0) & (s < s[-1] / 10.0)
    c_top = float(np.max(ratios[top]))
    c_prev = float(np.max(ratios[prev])) if np.any(prev) else c_top
    if not (np.isfinite(c_top) and np.isfinite(c_prev)):
        raise ValueError("profile does not satisfy the doubling condition")
    if c_top > (1.0 + drift_tol) * c_prev:
        raise ValueError("profile does not satisfy the doubling condition")
    return float(np.max(ratios[np.isfinite(ratios)]))


def poincare_ratio(m, g):
    """int m(|g|) dx / int m(|grad g|) dx for a Dirichlet field g."""
    if not g.is_dirichlet(tol=0.0):
        raise ValueError("g must vanish on the boundary cells")
    _check_doubling(m)
    num = float(np.sum(m.eval(np.abs(g.values))))
    den = float(np.sum(m.eval(gradient(g).magnitude())))
    if den <= 0.0:
        raise DegenerateFieldError("gradient modular vanishes")
    return num / den


def doubling_chain_constant(m, domain, dim=2):
    """Theoretical (non-sharp) constant from the cube-embedding proof chain.

    Applies the doubling inequality k1 times to absorb the unit-cube constant
    sqrt(N)/2 and k2 times to absorb the 4*diam dilation factor.
    """
    c2 = _check_doubling(m)
    c_cube = np.sqrt(dim) / 2.0
    k1 = max(0, int(np.ceil(np.log2(c_cube + 1e-15))))
    if 2.0**k1 <= c_cube:
        k1 += 1
    diam = np.hypot(domain.x1 - domain.x0, domain.y1 - domain.y0)
    k2 = max(0, int(np.ceil(np.log2(4.0 * diam + 1e-15))))
    if 2.0**k2 <= 4.0 * diam:
        k2 += 1
    return float(c2 ** (k1 + k2))


def _battery(domain, n_random, rng):
    """Random smooth Dirichlet fields plus adversarial candidates."""
    X, Y = domain.meshgrid()
    h = domain.h
    lx = domain.x1 - domain.x0
    ly = domain.y1 - domain.y0
    u = (X - domain.x0) / lx
    v = (Y - domain.y0) / ly
    fields = []
    # lowest Dirichlet eigenfunction approximation, pinned to the boundary
    # cell centers so clamping does not add a spurious kink
    ue = (X - domain.x0 - 0.5 * h) / (lx - h)
    ve = (Y - domain.y0 - 0.5 * h) / (ly - h)
    fields.append(np.sin(np.pi * ue) * np.sin(np.pi * ve))
    # sharp tents at a few centers and widths
    for cx, cy, w in ((0.5, 0.5, 0.25), (0.5, 0.5, 0.08), (0.3, 0.7, 0.15)):
        fields.append(np.maximum(0.0, 1.0 - np.maximum(np.abs(u - cx), np.abs(v - cy)) / w))
    for _ in range(n_random):
        f = np.zeros_like(X)
        for _ in range(4):
            k = rng.integers(1, 7)
            l = rng.integers(1, 7)
            f += rng.normal() * np.sin(np.pi * k * u) * np.sin(np.pi * l * v)
        fields.append(f)
    out = []
    mask = domain.boundary_mask()
    for f in fields:
        f = f.copy()
        f[mask] = 0.0
        out.append(ScalarField(domain, f))
    return out


def poincare_constant_estimate(m, domain, n_random=24, seed=0):
    """Max observed Poincare ratio over a battery of Dirichlet fields.

    Returns (estimate, trace of per-field ratios).
    """
    if n_random <= 0:
        raise ValueError("battery size must be positive")
    rng = np.random.default_rng(seed)
    ratios = []
    for g in _battery(domain, n_random, rng):
        try:
            ratios.append(poincare_ratio(m, g))
        except DegenerateFieldError:
            continue
    if not ratios:
        raise ValueError("battery produced no usable fields")
    ratios = np.asarray(ratios)
    trace = ConvergenceTrace(
        indices=np.arange(1, len(ratios) + 1),
        series={"ratio": ratios},
        meta={"chain_constant": doubling_chain_constant(m, domain)},
    )
    return float(np.max(ratios)), trace
