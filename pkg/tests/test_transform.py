"""Kernel agreement: compiled scan, pure-Python twin, brute-force supremum."""

import numpy as np
import pytest

from orlx import _lft_py
from orlx.profiles import default_nodes
from orlx.transform import (
    HAVE_COMPILED,
    conjugate_bruteforce,
    conjugate_samples,
    envelope_values,
    lower_hull_indices,
)


def _random_profiles(rng, rows, n):
    m = np.cumsum(rng.random((rows, n)), axis=1)
    m -= m[:, :1]
    return m


def test_scan_matches_bruteforce(rng):
    s = default_nodes()
    m = _random_profiles(rng, 16, len(s))
    t = default_nodes()
    a = conjugate_samples(s, m, t)
    b = conjugate_bruteforce(s, m, t)
    assert np.max(np.abs(a - b)) <= 1e-10 * max(1.0, np.max(np.abs(b)))


def test_pure_twin_matches_dispatched(rng):
    s = np.concatenate([[0.0], np.sort(rng.random(60)) + 0.01])
    m = _random_profiles(rng, 8, len(s))
    t = np.linspace(0.0, 5.0, 40)
    out_pure = np.empty((8, 40))
    _lft_py.conjugate_batch(s, np.ascontiguousarray(m), t, out_pure)
    out = conjugate_samples(s, m, t)
    assert np.allclose(out, out_pure, rtol=0, atol=1e-12)


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernel not built")
def test_compiled_kernel_in_use():
    from orlx import _lft

    assert hasattr(_lft, "conjugate_batch")


def test_lower_hull_is_convex_minorant(rng):
    for _ in range(100):
        n = int(rng.integers(4, 80))
        s = np.concatenate([[0.0], np.sort(rng.random(n)) * 10 + 1e-3])
        m = np.cumsum(rng.random(n + 1))
        m -= m[0]
        idx = lower_hull_indices(s, m)
        env = envelope_values(s, m)
        assert np.all(env <= m + 1e-12)
        assert np.all(env[idx] == m[idx])
        slopes = np.diff(env[idx]) / np.diff(s[idx])
        assert np.all(np.diff(slopes) >= -1e-9 * max(1.0, slopes.max()))


def test_conjugate_handles_single_row_and_batch(rng):
    s = default_nodes()
    m = _random_profiles(rng, 3, len(s))
    t = np.array([0.0, 0.5, 2.0])
    single = conjugate_samples(s, m[0], t)
    batch = conjugate_samples(s, m, t)
    assert single.shape == (3,)
    assert np.array_equal(batch[0], single)


def test_conjugate_rejects_bad_shapes():
    s = np.array([0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        conjugate_samples(s, np.zeros(4), s)
