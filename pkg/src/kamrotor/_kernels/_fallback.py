"""Pure-numpy stand-ins for the compiled trajectory kernels.

Semantically equivalent to the Cython versions; the histogram variant works
in vectorized time blocks with bincount to stay usable when the extension
is not built.  Chaotic orbits make bit-for-bit agreement with the compiled
path meaningless beyond a few dozen kicks, so only statistical agreement is
promised across backends.
"""

from __future__ import annotations

import math

import numpy as np

_TWO_PI = 2.0 * math.pi

_TIME_BLOCK = 256


def torus_trajectory(x0: float, p0: float, n_kicks: int, kick: float):
    xs = np.empty(n_kicks)
    ps = np.empty(n_kicks)
    x, p = x0, p0
    for t in range(n_kicks):
        p = (p + kick * math.sin(_TWO_PI * x)) % 1.0
        x = (x + p) % 1.0
        xs[t] = x
        ps[t] = p
    return xs, ps


def torus_histogram(x0, p0, n_kicks, kick, n_cells, counts):
    n_traj = len(x0)
    x = np.array(x0, dtype=float)
    p = np.array(p0, dtype=float)
    traj_offset = np.arange(n_traj, dtype=np.int64) * (n_cells * n_cells)
    flat = counts.reshape(-1)
    done = 0
    while done < n_kicks:
        block = min(_TIME_BLOCK, n_kicks - done)
        idx = np.empty((block, n_traj), dtype=np.int64)
        for t in range(block):
            p += kick * np.sin(_TWO_PI * x)
            p -= np.floor(p)
            x += p
            x -= np.floor(x)
            ix = np.minimum((x * n_cells).astype(np.int64), n_cells - 1)
            ip = np.minimum((p * n_cells).astype(np.int64), n_cells - 1)
            idx[t] = traj_offset + ix * n_cells + ip
        flat += np.bincount(idx.reshape(-1), minlength=flat.size)
        done += block


def final_momenta(x0, p0, n_kicks, strength):
    x = np.array(x0, dtype=float)
    p = np.array(p0, dtype=float)
    for _ in range(n_kicks):
        p += strength * np.sin(x)
        x += p
        x -= _TWO_PI * np.floor(x / _TWO_PI)
    return p
