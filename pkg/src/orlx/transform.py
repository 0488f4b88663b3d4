"""Sampled Legendre-Fenchel transforms with compiled/pure kernel dispatch.

Set ``ORLX_PURE=1`` in the environment to force the pure-Python kernel.
"""

import os

import numpy as np

if os.environ.get("ORLX_PURE", "0") == "1":
    from . import _lft_py as _kernel

    HAVE_COMPILED = False
else:
    try:
        from . import _lft as _kernel  # type: ignore[attr-defined]

        HAVE_COMPILED = True
    except ImportError:
        from . import _lft_py as _kernel

        HAVE_COMPILED = False


def conjugate_samples(s, m, t):
    """Conjugate sampled profiles: ``out[r, j] = max_i (s[i]*t[j] - m[r, i])``.

    ``m`` may be 1-D (one profile) or 2-D (a batch, one profile per row).
    ``s`` and ``t`` must be ascending.  The supremum runs over the sample
    points only; it equals the conjugate of the piecewise-linear interpolant
    restricted to the sampled range.
    """
    s = np.ascontiguousarray(s, dtype=np.float64)
    t = np.ascontiguousarray(t, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    squeeze = m.ndim == 1
    m2 = np.ascontiguousarray(np.atleast_2d(m))
    if m2.shape[1] != s.shape[0]:
        raise ValueError("profile values and nodes disagree in length")
    out = np.empty((m2.shape[0], t.shape[0]), dtype=np.float64)
    _kernel.conjugate_batch(s, m2, t, out)
    return out[0] if squeeze else out


def lower_hull_indices(s, m):
    """Indices of the lower convex hull of the points (s_i, m_i)."""
    from ._lft_py import _lower_hull

    return _lower_hull(np.asarray(s, dtype=np.float64), np.asarray(m, dtype=np.float64))


def envelope_values(s, m):
    """Greatest convex minorant of the sampled points, evaluated at the nodes.

    Equal to the second conjugate of the piecewise-linear profile; computed
    directly from the lower hull, which is exact at the nodes.
    """
    s = np.asarray(s, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    squeeze = m.ndim == 1
    m2 = np.atleast_2d(m)
    out = np.empty_like(m2)
    for r in range(m2.shape[0]):
        idx = lower_hull_indices(s, m2[r])
        out[r] = np.interp(s, s[idx], m2[r, idx])
    return out[0] if squeeze else out


def conjugate_bruteforce(s, m, t, chunk=64):
    """O(n*m) supremum oracle; the scan kernel must agree with this to 1e-10."""
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    squeeze = m.ndim == 1
    m2 = np.atleast_2d(m)
    out = np.empty((m2.shape[0], t.shape[0]), dtype=np.float64)
    st = s[:, None] * t[None, :]
    for lo in range(0, m2.shape[0], chunk):
        hi = min(lo + chunk, m2.shape[0])
        out[lo:hi] = np.max(st[None, :, :] - m2[lo:hi, :, None], axis=1)
    return out[0] if squeeze else out
