"""One-dimensional radial profiles: sampled sections of modular functions.

A :class:`RadialProfile` is a nonnegative, nondecreasing function sampled on
an ascending node grid with the origin pinned to zero.  Between nodes it is
the piecewise-linear interpolant; beyond the last node it extrapolates with
the final slope.  Profiles carry the one-dimensional sections used by the
conjugation, envelope and doubling machinery.
"""

from dataclasses import dataclass, field

import numpy as np

from .transform import conjugate_samples, envelope_values

# 64 nodes per decade keeps the relative conjugation error of smooth power
# profiles below 1e-3 on the interior decades (the error is curvature-limited,
# ~ (p-1)p'/2 * eps^2 with eps = half the log spacing).
N_NODES = 513
S_MIN = 1e-4
S_MAX = 1e4


def default_nodes():
    """Pinned origin plus log-spaced nodes covering [1e-4, 1e4]."""
    return np.concatenate([[0.0], np.logspace(np.log10(S_MIN), np.log10(S_MAX), N_NODES)])


@dataclass(frozen=True)
class RadialProfile:
    """Sampled scalar function s -> m(s) with m(0) = 0 pinned.

    nodes, values : ascending sample points and nonnegative, nondecreasing
        samples; ``nodes[0] == 0`` and ``values[0] == 0``.
    left_slope0 : records that the origin value is pinned exactly.
    """

    nodes: np.ndarray
    values: np.ndarray
    left_slope0: bool = field(default=True)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        if nodes.ndim != 1 or nodes.shape != values.shape:
            raise ValueError("nodes and values must be 1-D arrays of equal length")
        if nodes.size < 2:
            raise ValueError("a profile needs at least two nodes")
        if nodes[0] != 0.0 or values[0] != 0.0:
            raise ValueError("profile must start at (0, 0)")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("values must be finite and nonnegative")
        if np.any(np.diff(values) < 0):
            raise ValueError("values must be nondecreasing")

    def eval(self, s):
        """Piecewise-linear evaluation with last-slope extrapolation."""
        s = np.asarray(s, dtype=np.float64)
        out = np.interp(s, self.nodes, self.values)
        last_slope = (self.values[-1] - self.values[-2]) / (self.nodes[-1] - self.nodes[-2])
        beyond = s > self.nodes[-1]
        if np.any(beyond):
            out = np.where(beyond, self.values[-1] + last_slope * (s - self.nodes[-1]), out)
        return out

    def __call__(self, s):
        return self.eval(s)

    def slopes(self):
        return np.diff(self.values) / np.diff(self.nodes)

    def is_convex(self, rtol=1e-9):
        c = self.slopes()
        scale = max(float(np.max(np.abs(c))), 1.0)
        return bool(np.all(np.diff(c) >= -rtol * scale))

    def doubling_constant(self):
        """sup m(2s)/m(s) over nodes with positive value (inf if unbounded)."""
        s = self.nodes[1:]
        v = self.values[1:]
        mask = v > 0
        if not np.any(mask):
            return 0.0
        ratios = self.eval(2.0 * s[mask]) / v[mask]
        return float(np.max(ratios))

    def to_csv(self, path):
        arr = np.column_stack([self.nodes, self.values])
        np.savetxt(path, arr, delimiter=",", header="s,m", comments="")

    @classmethod
    def from_csv(cls, path):
        arr = np.loadtxt(path, delimiter=",", skiprows=1)
        return cls(arr[:, 0], arr[:, 1])

    @classmethod
    def from_function(cls, f, nodes=None):
        nodes = default_nodes() if nodes is None else np.asarray(nodes, dtype=np.float64)
        values = np.asarray(f(nodes), dtype=np.float64).copy()
        values[0] = 0.0
        return cls(nodes, values)


def _adaptive_dual_nodes(profile):
    """Origin-pinned log grid covering the profile's slope range.

    The conjugate of a sampled profile lives on its slope range; a grid that
    covers it (at twice the sample density) keeps round-trip conjugation
    accurate for steep or shallow profiles alike.
    """
    c = profile.slopes()
    cpos = c[c > 0]
    if cpos.size == 0:
        return default_nodes()
    hi = np.log10(cpos.max())
    lo = max(np.log10(cpos.min()), hi - 24.0)
    if hi - lo < 1.0:
        lo, hi = lo - 0.5, hi + 0.5
    n = max(2 * (len(profile.nodes) - 1), 512)
    # the exact slope values are the kinks of the conjugate; carrying them in
    # the dual grid makes the round-trip conjugate exact at the sample nodes
    t = np.unique(np.concatenate([[0.0], np.logspace(lo, hi, n + 1), cpos]))
    keep = np.concatenate([[True], np.diff(t) > 1e-12 * t[1:]])
    return t[keep]


def conjugate(profile, dual_nodes=None):
    """Discrete Legendre-Fenchel transform m*(t) = sup_i (s_i t - m(s_i)).

    Evaluated on ``dual_nodes`` (a grid adapted to the profile's slope range
    if omitted).  The output is convex and nondecreasing with m*(0) = 0.
    """
    t = _adaptive_dual_nodes(profile) if dual_nodes is None else np.asarray(
        dual_nodes, dtype=np.float64
    )
    vals = conjugate_samples(profile.nodes, profile.values, t)
    vals = np.maximum(vals, 0.0)
    vals[t == 0.0] = 0.0
    return RadialProfile(t, vals)


def biconjugate(profile):
    """Second conjugate on the profile's own nodes: its convex envelope.

    Computed from the lower convex hull of the samples, which is what the
    double transform converges to and is exact at the nodes.
    """
    return RadialProfile(profile.nodes, envelope_values(profile.nodes, profile.values))


def double_conjugate(profile):
    """(profile*)* by two grid transforms; agrees with :func:`biconjugate`
    up to dual-grid resolution."""
    return conjugate(conjugate(profile), dual_nodes=profile.nodes)


def power_profile(p, scale=1.0, nodes=None):
    """Profile of s -> scale * s**p."""
    return RadialProfile.from_function(lambda s: scale * np.power(s, p), nodes=nodes)
