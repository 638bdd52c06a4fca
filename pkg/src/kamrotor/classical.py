"""Classical standard map on the unit torus and its coarse-grained areas.

The quantum cell tiling has a direct classical counterpart: cover the torus
with n_cells x n_cells boxes, run each trajectory for n_kicks kicks, and
take the inverse participation sum of the visit frequencies.  Regular orbits
trace one-dimensional curves whose coarse area grows linearly with n_cells,
chaotic orbits fill two-dimensional regions growing quadratically, which is
the classical version of the regular/chaotic eigenstate split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import final_momenta, kernel_backend, torus_histogram, torus_trajectory
from .errors import ConfigError

_TWO_PI = 2.0 * math.pi

# Trajectories per histogram batch; keeps the per-batch count matrix small.
_CHUNK = 256


@dataclass(frozen=True)
class ClassicalParams:
    """Ensemble parameters for a coarse-grained area spectrum run."""

    K: float
    n_cells: int = 100
    n_init: int = 10_000
    n_kicks: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.K) and self.K >= 0):
            raise ConfigError("kick strength K must be finite and >= 0")
        if self.n_cells < 1 or self.n_init < 1 or self.n_kicks < 1:
            raise ConfigError("n_cells, n_init, n_kicks must be positive")


def standard_map_step(x: float, p: float, K: float):
    """One kick of the unit-torus standard map: p first, then x."""
    p = (p + K / _TWO_PI * math.sin(_TWO_PI * x)) % 1.0
    x = (x + p) % 1.0
    return x, p


def trajectory(x0: float, p0: float, n_kicks: int, K: float):
    """The n_kicks points visited after (x0, p0); initial point excluded."""
    return torus_trajectory(float(x0), float(p0), int(n_kicks), K / _TWO_PI)


def coarse_area(xs: np.ndarray, ps: np.ndarray, n_cells: int) -> float:
    """Inverse participation area (in cells) of a point cloud."""
    counts = occupancy_grid(xs, ps, n_cells).astype(float)
    n_t = len(xs)
    return n_t * n_t / float(np.sum(counts ** 2))


def occupancy_grid(xs: np.ndarray, ps: np.ndarray, n_cells: int) -> np.ndarray:
    """Visit counts on the n_cells x n_cells grid; index [ix, ip]."""
    ix = np.minimum((np.asarray(xs) * n_cells).astype(np.int64), n_cells - 1)
    ip = np.minimum((np.asarray(ps) * n_cells).astype(np.int64), n_cells - 1)
    flat = np.bincount(ix * n_cells + ip, minlength=n_cells * n_cells)
    return flat.reshape(n_cells, n_cells)


def initial_points(n_init: int, seed: int) -> np.ndarray:
    """Uniform initial points, one independent stream per trajectory.

    Stream i is seeded with (seed, i), so the ensemble does not depend on
    evaluation order or chunking.
    """
    pts = np.empty((n_init, 2))
    for i in range(n_init):
        pts[i] = np.random.default_rng((seed, i)).random(2)
    return pts


@dataclass
class ClassicalAreaSpectrum:
    """Coarse areas of a random ensemble, sorted ascending with rank labels."""

    params: ClassicalParams
    areas: np.ndarray
    labels: np.ndarray
    trajectory_indices: np.ndarray

    @property
    def n_orbits(self) -> int:
        return len(self.areas)

    def area_at_label(self, label: float) -> float:
        rank = min(max(int(round(label * self.n_orbits)), 1), self.n_orbits)
        return float(self.areas[rank - 1])


def classical_area_spectrum(params: ClassicalParams) -> ClassicalAreaSpectrum:
    pts = initial_points(params.n_init, params.seed)
    kick = params.K / _TWO_PI
    n_sq = params.n_cells * params.n_cells
    areas = np.empty(params.n_init)
    t_sq = float(params.n_kicks) ** 2
    for lo in range(0, params.n_init, _CHUNK):
        hi = min(lo + _CHUNK, params.n_init)
        counts = np.zeros((hi - lo, n_sq), dtype=np.int64)
        torus_histogram(np.ascontiguousarray(pts[lo:hi, 0]),
                        np.ascontiguousarray(pts[lo:hi, 1]),
                        params.n_kicks, kick, params.n_cells, counts)
        areas[lo:hi] = t_sq / np.sum(counts.astype(float) ** 2, axis=1)
    order = np.lexsort((np.arange(params.n_init), areas))
    return ClassicalAreaSpectrum(params=params,
                                 areas=areas[order],
                                 labels=np.arange(1, params.n_init + 1) / params.n_init,
                                 trajectory_indices=order)


def classical_demarcation(spectrum: ClassicalAreaSpectrum,
                          threshold_fraction: float) -> float:
    """Smallest rank label whose area reaches threshold_fraction times the
    total cell count; 0.0 / 1.0 edge conventions as for the quantum case."""
    cut = threshold_fraction * spectrum.params.n_cells ** 2
    idx = np.searchsorted(spectrum.areas, cut, side="left")
    if idx >= spectrum.n_orbits:
        return 1.0
    if idx == 0:
        return 0.0
    return float(spectrum.labels[idx])


@dataclass
class DiffusionEstimate:
    value: float
    quasilinear: float
    n_used: int
    n_total: int


def diffusion_coefficient(K: float, n_traj: int = 200, n_kicks: int = 10_000,
                          seed: int = 0, chaotic_only: bool = True,
                          ) -> DiffusionEstimate:
    """Momentum diffusion coefficient <(p_n - p_0)^2> / n of the unbounded
    map (angle convention: kick K sin x, x in [0, 2*pi)).

    With chaotic_only, trajectories whose short torus pre-run stays on a
    thin (regular) cell set are excluded before averaging, since trapped
    orbits do not diffuse.  Returns 0 when nothing qualifies.
    """
    if n_traj < 1 or n_kicks < 1:
        raise ConfigError("n_traj and n_kicks must be positive")
    pts = initial_points(n_traj, seed)
    keep = np.ones(n_traj, dtype=bool)
    if chaotic_only and K > 0:
        n_pre, n_c = 2000, 50
        kick = K / _TWO_PI
        for i in range(n_traj):
            xs, ps = torus_trajectory(pts[i, 0], pts[i, 1], n_pre, kick)
            keep[i] = coarse_area(xs, ps, n_c) >= 10.0 * n_c
    n_used = int(np.sum(keep))
    quasi = K * K / 2.0
    if n_used == 0:
        return DiffusionEstimate(value=0.0, quasilinear=quasi,
                                 n_used=0, n_total=n_traj)
    x0 = np.ascontiguousarray(pts[keep, 0] * _TWO_PI)
    p0 = np.ascontiguousarray(pts[keep, 1] * _TWO_PI)
    p_end = final_momenta(x0, p0, n_kicks, K)
    value = float(np.mean((p_end - p0) ** 2) / n_kicks)
    return DiffusionEstimate(value=value, quasilinear=quasi,
                             n_used=n_used, n_total=n_traj)


def backend_name() -> str:
    """Active trajectory kernel backend ('compiled' or 'fallback')."""
    return kernel_backend()
