# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel for the sampled Legendre-Fenchel transform.

For each row of sampled values the conjugate max_i (s_i*t_j - m_i) is computed
by a monotone-slope scan: lower convex hull of the sample points followed by a
single sweep over the ascending dual nodes.  Values agree with the O(n*m)
brute-force supremum because points off the lower hull never attain the max.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def conjugate_batch(double[::1] s, double[:, ::1] m, double[::1] t,
                    double[:, ::1] out):
    """Conjugate every row of ``m`` (sampled on ``s``) onto dual nodes ``t``.

    ``s`` and ``t`` must be ascending; ``out`` has shape (rows, len(t)).
    """
    cdef Py_ssize_t n = s.shape[0]
    cdef Py_ssize_t nt = t.shape[0]
    cdef Py_ssize_t rows = m.shape[0]
    cdef Py_ssize_t r, i, j, k, hn
    cdef double ox, oy, ax, ay, cross, slope, tj
    cdef cnp.ndarray[cnp.intp_t, ndim=1] hull_arr = np.empty(n, dtype=np.intp)
    cdef cnp.intp_t[::1] hull = hull_arr

    for r in range(rows):
        # lower convex hull (monotone chain; s is already sorted)
        hn = 0
        for i in range(n):
            while hn >= 2:
                ox = s[hull[hn - 2]]
                oy = m[r, hull[hn - 2]]
                ax = s[hull[hn - 1]]
                ay = m[r, hull[hn - 1]]
                cross = (ax - ox) * (m[r, i] - oy) - (ay - oy) * (s[i] - ox)
                if cross <= 0.0:
                    hn -= 1
                else:
                    break
            hull[hn] = i
            hn += 1
        # sweep dual nodes; optimal vertex index is nondecreasing in t
        k = 0
        for j in range(nt):
            tj = t[j]
            while k < hn - 1:
                slope = (m[r, hull[k + 1]] - m[r, hull[k]]) / \
                        (s[hull[k + 1]] - s[hull[k]])
                if slope < tj:
                    k += 1
                else:
                    break
            out[r, j] = s[hull[k]] * tj - m[r, hull[k]]
    return None
