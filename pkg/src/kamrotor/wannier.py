"""Phase-space cell basis built from momentum-block Fourier transforms.

The N momentum states are grouped into n_p blocks of n_x consecutive states;
a discrete Fourier transform inside each block yields n_x * n_p orthonormal
cell states labeled (X, P), X = 0..n_x-1, P = 0..n_p-1.  Each cell state has
exactly n_x nonzero momentum components of magnitude 1/sqrt(n_x), sits at
fractional position X/n_x, and occupies momentum block P.  Cell (X, P) of a
state vector is therefore one inverse-FFT coefficient of block P, which is
how all projections here are computed.

Flattened cell indexing is row = P * n_x + X throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WannierBasis:
    n_x: int
    n_p: int

    def __post_init__(self):
        if self.n_x < 1 or self.n_p < 1:
            raise ValueError("n_x and n_p must be positive")

    @property
    def n_states(self) -> int:
        return self.n_x * self.n_p

    def row_state(self, cell_x: int, cell_p: int) -> np.ndarray:
        """Momentum-space ket of cell (X, P): <g|X,P> over labels g = 1..N."""
        if not (0 <= cell_x < self.n_x and 0 <= cell_p < self.n_p):
            raise ValueError("cell out of range")
        ket = np.zeros(self.n_states, dtype=complex)
        n = np.arange(1, self.n_x + 1)
        block = np.exp(-1j * _TWO_PI * cell_x * n / self.n_x) / math.sqrt(self.n_x)
        ket[cell_p * self.n_x: (cell_p + 1) * self.n_x] = block
        return ket

    def transform(self) -> np.ndarray:
        """Dense N x N unitary; row P*n_x + X holds the bra <X,P|.

        Intended for small N (tests, explicit checks); production paths use
        the FFT projection instead.
        """
        n_x, n_p = self.n_x, self.n_p
        n = np.arange(1, n_x + 1)
        x = np.arange(n_x)
        block = np.exp(1j * _TWO_PI * np.outer(x, n) / n_x) / math.sqrt(n_x)
        out = np.zeros((self.n_states, self.n_states), dtype=complex)
        for p in range(n_p):
            rows = slice(p * n_x, (p + 1) * n_x)
            out[rows, rows] = block
        return out

    def amplitudes(self, states: np.ndarray) -> np.ndarray:
        """<X,P|psi> for one state (N,) or a stack of columns (N, m).

        Returns shape (n_p, n_x) or (n_p, n_x, m): index [P, X].
        """
        states = np.asarray(states, dtype=complex)
        single = states.ndim == 1
        work = states[:, None] if single else states
        if work.shape[0] != self.n_states:
            raise ValueError("state length must equal n_x * n_p")
        m = work.shape[1]
        blocks = work.reshape(self.n_p, self.n_x, m)
        amp = np.fft.ifft(blocks, axis=1) * math.sqrt(self.n_x)
        # block momenta start at label 1, not 0, hence the X-dependent phase
        phase = np.exp(1j * _TWO_PI * np.arange(self.n_x) / self.n_x)
        amp *= phase[None, :, None]
        return amp[:, :, 0] if single else amp


def build_basis(n_x: int, n_p: int) -> WannierBasis:
    return WannierBasis(n_x=n_x, n_p=n_p)


@dataclass
class PhaseSpaceDistribution:
    """Cell occupation probabilities of one state.

    grid[X, P] = |<X,P|psi>|^2.  ``total`` is 1 for a normalized state
    projected on the full basis; partial-window projections (truncated
    spectra) give total < 1.
    """

    grid: np.ndarray
    total: float

    @property
    def n_x(self) -> int:
        return self.grid.shape[0]

    @property
    def n_p(self) -> int:
        return self.grid.shape[1]


def project(basis: WannierBasis, state: np.ndarray) -> PhaseSpaceDistribution:
    """Phase-space distribution of one normalized state."""
    amp = basis.amplitudes(state)
    grid = np.abs(amp) ** 2
    return PhaseSpaceDistribution(grid=np.ascontiguousarray(grid.T),
                                  total=float(grid.sum()))


def project_columns(basis: WannierBasis, states: np.ndarray) -> np.ndarray:
    """Cell probabilities of many states at once.

    Returns shape (N_cells, m) with flat cell index P*n_x + X; column j is
    the phase-space distribution of states[:, j].
    """
    amp = basis.amplitudes(states)
    m = amp.shape[2]
    return (np.abs(amp) ** 2).reshape(basis.n_states, m)


def x_representation(basis: WannierBasis, cell_x: int, cell_p: int,
                     x: np.ndarray) -> np.ndarray:
    """Position wavefunction <x|X,P> on [0, 2*pi), closed form.

    Equals (2*pi*n_x)**-0.5 * sin(n_x x/2) / sin(x/2 - pi X/n_x) times the
    phase exp(i (2 P n_x + n_x + 1) x / 2 - i pi X / n_x), the analytic sum
    of the n_x momentum plane waves of the cell; the removable singularities
    at x = 2 pi X / n_x (mod 2 pi / ...) are patched with the l'Hopital
    limit.  The norm peaks at fractional position X/n_x.
    """
    n_x = basis.n_x
    x = np.asarray(x, dtype=float)
    half = 0.5 * x - math.pi * cell_x / n_x
    num = np.sin(n_x * 0.5 * x)
    den = np.sin(half)
    ratio = np.empty_like(x)
    regular = np.abs(den) >= 1e-8
    ratio[regular] = num[regular] / den[regular]
    if np.any(~regular):
        ratio[~regular] = (n_x * np.cos(n_x * 0.5 * x[~regular])
                           / np.cos(half[~regular]))
    phase = np.exp(1j * (0.5 * (2 * cell_p * n_x + n_x + 1) * x
                         - math.pi * cell_x / n_x))
    return ratio * phase / math.sqrt(_TWO_PI * n_x)


@dataclass
class MapImageReport:
    """Semiclassical check: argmax of |<X,P|V|X0,P0>|^2 against the
    standard-map image of the cell center."""

    cells: list
    argmax_cells: list
    image_points: list
    displacements: np.ndarray
    within_one: np.ndarray

    @property
    def mean_displacement(self) -> float:
        return float(self.displacements.mean())

    @property
    def fraction_within_one(self) -> float:
        return float(self.within_one.mean())


def _torus_delta(a: float, b: float, period: int) -> float:
    d = (a - b) % period
    if d > period / 2:
        d -= period
    return d


def semiclassical_map_check(v, basis: WannierBasis, cells) -> MapImageReport:
    """Apply the operator to each listed cell state and compare the argmax
    cell of the kicked distribution with the classical map image.

    The cell center is advanced by one step of the M-fold standard map:
    p' = p0 + K/(2 pi M) sin(2 pi x0), x' = x0 + M p' (mod 1).  The center
    sits at x0 = X/n_x (where the cell wavefunction peaks) and at the mean
    momentum of the cell's block, label P n_x + (n_x+1)/2, which lies half a
    cell above the block edge.  Displacements are Chebyshev distances in
    cell units on the torus; ``within_one`` uses the integer cell containing
    the image point.
    """
    params = v.params
    n_x, n_p = basis.n_x, basis.n_p
    if n_x * n_p != v.dim:
        raise ValueError("basis size does not match operator dimension")
    half_cell = (n_x + 1) / (2.0 * n_x)
    argmaxes, images = [], []
    disp = np.empty(len(cells))
    within = np.zeros(len(cells), dtype=bool)
    for i, (cx, cp) in enumerate(cells):
        kicked = v.matvec(basis.row_state(cx, cp))
        grid = project(basis, kicked).grid
        ax, ap = np.unravel_index(np.argmax(grid), grid.shape)
        x0, p0 = cx / n_x, (cp + half_cell) / n_p
        p1 = (p0 + params.K / (_TWO_PI * params.M) * math.sin(_TWO_PI * x0)) % 1.0
        x1 = (x0 + params.M * p1) % 1.0
        tx, tp = x1 * n_x, p1 * n_p - half_cell
        dx = _torus_delta(float(ax), tx, n_x)
        dp = _torus_delta(float(ap), tp, n_p)
        disp[i] = max(abs(dx), abs(dp))
        ix, ip = round(tx) % n_x, round(tp) % n_p
        within[i] = (min(abs(ax - ix), n_x - abs(ax - ix)) <= 1
                     and min(abs(ap - ip), n_p - abs(ap - ip)) <= 1)
        argmaxes.append((int(ax), int(ap)))
        images.append((tx, tp))
    return MapImageReport(cells=list(cells), argmax_cells=argmaxes,
                         image_points=images, displacements=disp,
                         within_one=within)
