"""Pure-Python twin of the compiled transform kernel.

Same algorithm as ``_lft.pyx`` (lower hull + monotone slope sweep); used when
the extension is not built.  Must agree with the compiled kernel and with the
brute-force supremum to near machine precision.
"""

import numpy as np


def _lower_hull(s, m):
    hull = []
    for i in range(len(s)):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (s[a] - s[o]) * (m[i] - m[o]) - (m[a] - m[o]) * (s[i] - s[o])
            if cross <= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=np.intp)


def conjugate_batch(s, m, t, out):
    """Conjugate every row of ``m`` (sampled on ``s``) onto dual nodes ``t``."""
    for r in range(m.shape[0]):
        hull = _lower_hull(s, m[r])
        sv = s[hull]
        mv = m[r, hull]
        if len(hull) > 1:
            slopes = np.diff(mv) / np.diff(sv)
            k = np.searchsorted(slopes, t, side="left")
        else:
            k = np.zeros(len(t), dtype=np.intp)
        out[r, :] = sv[k] * t - mv[k]
    return None
