"""Benchmark: compiled transform kernel against the pure-Python twin.

Times the batched conjugate on profile sets shaped like the hot paths (cube
envelope construction and radial calculus), plus the brute-force supremum for
scale.  Run:  python3 benchmarks/bench_transform.py
"""

import time

import numpy as np

from orlx import _lft_py
from orlx.profiles import default_nodes
from orlx.transform import HAVE_COMPILED, conjugate_bruteforce

try:
    from orlx import _lft  # type: ignore[attr-defined]
except ImportError:
    _lft = None


def _profiles(rng, rows, n):
    m = np.cumsum(rng.random((rows, n)), axis=1)
    m -= m[:, :1]
    return np.ascontiguousarray(m)


def _time(fn, reps=5):
    best = np.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    print(f"compiled kernel available: {HAVE_COMPILED}")
    cases = [
        ("cube envelopes (1024 x 130)", 1024, 130),
        ("direction batch  (32 x 514)", 32, 514),
        ("radial calculus  (256 x 514)", 256, 514),
    ]
    header = f"{'case':<30}{'pure py':>12}{'compiled':>12}{'speedup':>10}{'brute':>12}"
    print(header)
    print("-" * len(header))
    for name, rows, n in cases:
        s = np.ascontiguousarray(default_nodes()[:n])
        m = _profiles(rng, rows, n)
        t = s.copy()
        out = np.empty((rows, n))
        t_py = _time(lambda: _lft_py.conjugate_batch(s, m, t, out))
        if _lft is not None:
            t_c = _time(lambda: _lft.conjugate_batch(s, m, t, out))
            ref = np.empty((rows, n))
            _lft_py.conjugate_batch(s, m, t, ref)
            _lft.conjugate_batch(s, m, t, out)
            assert np.max(np.abs(out - ref)) <= 1e-10 * max(1.0, np.max(np.abs(ref)))
            speed = f"{t_py / t_c:8.1f}x"
            t_c_str = f"{t_c * 1e3:10.2f}ms"
        else:
            speed = "     n/a"
            t_c_str = "       n/a"
        t_b = _time(lambda: conjugate_bruteforce(s, m, t), reps=2)
        print(f"{name:<30}{t_py * 1e3:>10.2f}ms{t_c_str}{speed}{t_b * 1e3:>10.2f}ms")


if __name__ == "__main__":
    main()
