"""Trajectory kernel tests: fallback semantics and cross-backend agreement.

The cross-backend tests document an empirical guarantee: both kernels apply
the same floating-point operations per trajectory step, so their outputs are
identical, not merely close.  They are skipped when the extension is absent.
"""

import numpy as np
import pytest

from kamrotor._kernels import _fallback, kernel_backend

_TWO_PI = 2.0 * np.pi


def _reference_histogram(x0, p0, n_kicks, kick, n_cells):
    """Scalar re-derivation of the torus occupancy counts.

    Returns the canonical (n_traj, n_cells * n_cells) layout with flat cell
    index ix * n_cells + ip.
    """
    counts = np.zeros((len(x0), n_cells * n_cells), dtype=np.int64)
    for i in range(len(x0)):
        x, p = np.float64(x0[i]), np.float64(p0[i])
        for _ in range(n_kicks):
            p += kick * np.sin(_TWO_PI * x)
            p -= np.floor(p)
            x += p
            x -= np.floor(x)
            ix = min(int(x * n_cells), n_cells - 1)
            ip = min(int(p * n_cells), n_cells - 1)
            counts[i, ix * n_cells + ip] += 1
    return counts


def test_backend_reported():
    assert kernel_backend() in ("compiled", "fallback")


def test_trajectory_stays_on_torus():
    xs, ps = _fallback.torus_trajectory(0.12, 0.34, 500, 2.0 / _TWO_PI)
    assert xs.shape == (500,) and ps.shape == (500,)
    assert np.all((xs >= 0.0) & (xs < 1.0))
    assert np.all((ps >= 0.0) & (ps < 1.0))


def test_trajectory_zero_kick_is_pure_shear():
    x0, p0 = 0.2, 0.125
    xs, ps = _fallback.torus_trajectory(x0, p0, 16, 0.0)
    np.testing.assert_allclose(ps, p0, rtol=0, atol=0)
    expect_x = np.mod(x0 + p0 * np.arange(1, 17), 1.0)
    np.testing.assert_allclose(xs, expect_x, atol=1e-12)


def test_histogram_matches_scalar_reference():
    rng = np.random.default_rng(7)
    x0 = rng.random(5)
    p0 = rng.random(5)
    counts = np.zeros((5, 400), dtype=np.int64)
    _fallback.torus_histogram(x0, p0, 300, 2.0 / _TWO_PI, 20, counts)
    ref = _reference_histogram(x0, p0, 300, 2.0 / _TWO_PI, 20)
    np.testing.assert_array_equal(counts, ref)


def test_histogram_total_counts():
    rng = np.random.default_rng(3)
    counts = np.zeros((4, 100), dtype=np.int64)
    _fallback.torus_histogram(rng.random(4), rng.random(4), 777,
                              1.3 / _TWO_PI, 10, counts)
    assert counts.sum() == 4 * 777
    np.testing.assert_array_equal(counts.sum(axis=1), 777)


def test_final_momenta_zero_strength():
    p0 = np.array([0.5, -1.7, 3.2])
    out = _fallback.final_momenta(np.array([0.1, 0.2, 0.3]), p0.copy(), 50, 0.0)
    np.testing.assert_array_equal(out, p0)


@pytest.mark.skipif(kernel_backend() != "compiled",
                    reason="compiled extension not built")
class TestCompiledAgreement:
    def test_histogram_identical(self):
        from kamrotor._kernels import _compiled
        rng = np.random.default_rng(11)
        x0 = rng.random(8)
        p0 = rng.random(8)
        a = np.zeros((8, 625), dtype=np.int64)
        b = np.zeros((8, 625), dtype=np.int64)
        _compiled.torus_histogram(x0, p0, 2000, 2.0 / _TWO_PI, 25, a)
        _fallback.torus_histogram(x0, p0, 2000, 2.0 / _TWO_PI, 25, b)
        np.testing.assert_array_equal(a, b)

    def test_final_momenta_identical(self):
        from kamrotor._kernels import _compiled
        rng = np.random.default_rng(12)
        x0 = rng.random(16) * _TWO_PI
        p0 = rng.random(16) * _TWO_PI
        a = _compiled.final_momenta(x0.copy(), p0.copy(), 5000, 10.0)
        b = _fallback.final_momenta(x0.copy(), p0.copy(), 5000, 10.0)
        np.testing.assert_array_equal(a, b)

    def test_trajectory_identical(self):
        from kamrotor._kernels import _compiled
        xa, pa = _compiled.torus_trajectory(0.37, 0.61, 3000, 2.0 / _TWO_PI)
        xb, pb = _fallback.torus_trajectory(0.37, 0.61, 3000, 2.0 / _TWO_PI)
        np.testing.assert_array_equal(xa, xb)
        np.testing.assert_array_equal(pa, pb)
