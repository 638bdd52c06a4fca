"""Phase-space observables: occupied areas, cell lengths, scaling fits,
and stationary long-time areas of evolved cell states.

The occupied area of a distribution p over cells is the inverse
participation sum 1/sum(p^2): the number of cells an equivalent uniform
distribution would fill.  Applied to eigenstates it separates regular states
(area growing like the linear cell count) from chaotic ones (area growing
like the total cell count); applied cell-by-cell to the whole eigenbasis it
gives the dual cell-length map.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ComputeError, DegeneracyWarning, InsufficientData
from .floquet import EigenDecomposition, FloquetMatrix, apply_v
from .wannier import PhaseSpaceDistribution, WannierBasis, project, project_columns

_TWO_PI = 2.0 * math.pi


def area(dist: PhaseSpaceDistribution) -> float:
    """Occupied phase-space area (in cells) of one distribution."""
    s = float(np.sum(dist.grid.astype(float) ** 2))
    if s == 0.0:
        raise ComputeError("distribution is identically zero")
    return (dist.total ** 2) / s


@dataclass
class AreaSpectrum:
    """Eigenstate areas sorted ascending with rank labels rank/N.

    ``state_indices`` maps each rank back to the quasi-energy-ordered column
    of the eigendecomposition it came from.  Ties in area are broken by
    quasi-energy, then by original index, so the ordering is reproducible.
    """

    params: object
    areas: np.ndarray
    labels: np.ndarray
    quasi_energies: np.ndarray
    state_indices: np.ndarray

    @property
    def n_states(self) -> int:
        return len(self.areas)

    def area_at_label(self, label: float) -> float:
        """Area of the entry whose rank is nearest round(label * N)."""
        rank = min(max(int(round(label * self.n_states)), 1), self.n_states)
        return float(self.areas[rank - 1])


def _cell_probabilities(eig: EigenDecomposition, basis: WannierBasis) -> np.ndarray:
    if basis.n_states != eig.vectors.shape[0]:
        raise ValueError("basis size does not match eigenvector dimension")
    return project_columns(basis, eig.vectors)


def area_spectrum(eig: EigenDecomposition, basis: WannierBasis,
                  cell_probs: np.ndarray | None = None) -> AreaSpectrum:
    b = _cell_probabilities(eig, basis) if cell_probs is None else cell_probs
    areas = 1.0 / np.sum(b * b, axis=0)
    n = len(areas)
    order = np.lexsort((np.arange(n), eig.quasi_energies, areas))
    return AreaSpectrum(params=eig.params,
                        areas=areas[order],
                        labels=np.arange(1, n + 1) / n,
                        quasi_energies=eig.quasi_energies[order],
                        state_indices=order)


@dataclass
class CellLengthMap:
    """Per-cell inverse participation over the eigenbasis.

    lengths[X, P] counts how many eigenstates the cell effectively touches;
    labels[X, P] is the rank/N_cells label of the cell in the ascending
    length order (ties broken by flat cell index).
    """

    params: object
    lengths: np.ndarray
    labels: np.ndarray

    @property
    def n_cells(self) -> int:
        return self.lengths.size

    def flat_lengths(self) -> np.ndarray:
        """Lengths in flat cell order P*n_x + X."""
        return self.lengths.T.reshape(-1)


def cell_lengths(eig: EigenDecomposition, basis: WannierBasis,
                 cell_probs: np.ndarray | None = None) -> CellLengthMap:
    b = _cell_probabilities(eig, basis) if cell_probs is None else cell_probs
    flat = 1.0 / np.sum(b * b, axis=1)
    n = len(flat)
    order = np.lexsort((np.arange(n), flat))
    labels_flat = np.empty(n)
    labels_flat[order] = np.arange(1, n + 1) / n
    lengths = flat.reshape(basis.n_p, basis.n_x).T
    labels = labels_flat.reshape(basis.n_p, basis.n_x).T
    return CellLengthMap(params=eig.params,
                         lengths=np.ascontiguousarray(lengths),
                         labels=np.ascontiguousarray(labels))


@dataclass
class DeffResult:
    label: float
    slope: float
    deff: float
    residual_rms: float
    hbar_values: np.ndarray
    area_values: np.ndarray


def effective_dimension(spectra, label: float) -> DeffResult:
    """Scaling dimension of the area at fixed rank label across hbar_eff.

    Fits ln(area) = slope * ln(hbar_eff) + c by least squares over the given
    spectra and reports deff = -2 * slope.  Requires at least four distinct
    hbar_eff values.
    """
    hbars = np.array([s.params.hbar_eff for s in spectra], dtype=float)
    if len(np.unique(hbars)) < 4:
        raise InsufficientData("need at least 4 distinct hbar_eff values")
    areas = np.array([s.area_at_label(label) for s in spectra], dtype=float)
    lx, ly = np.log(hbars), np.log(areas)
    design = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    fit = design @ coef
    rms = float(np.sqrt(np.mean((ly - fit) ** 2)))
    return DeffResult(label=label, slope=float(coef[0]), deff=float(-2.0 * coef[0]),
                      residual_rms=rms, hbar_values=hbars, area_values=areas)


def demarcation_point(spectrum: AreaSpectrum, threshold_fraction: float) -> float:
    """Smallest rank label whose area reaches threshold_fraction * N.

    Returns 0.0 when already the smallest area exceeds the threshold and 1.0
    when none does.
    """
    cut = threshold_fraction * spectrum.n_states
    idx = np.searchsorted(spectrum.areas, cut, side="left")
    if idx >= spectrum.n_states:
        return 1.0
    if idx == 0:
        return 0.0
    return float(spectrum.labels[idx])


def check_quasi_energy_differences(eig: EigenDecomposition,
                                   tol: float = 1e-10) -> int:
    """Count coincidences among pairwise quasi-energy differences.

    The stationary long-time average assumes all differences w_i - w_j are
    distinct; coincidences within tol trigger a DegeneracyWarning.  Returns
    the number of coinciding adjacent pairs found.
    """
    w = eig.quasi_energies
    n = len(w)
    diffs = (w[None, :] - w[:, None])[np.triu_indices(n, 1)]
    diffs = np.sort(np.abs(diffs))
    coincident = int(np.sum(np.diff(diffs) < tol))
    if coincident > 0:
        warnings.warn(
            f"{coincident} quasi-energy difference coincidences within "
            f"{tol:.0e}; stationary average may be unreliable",
            DegeneracyWarning, stacklevel=2)
    return coincident


def long_time_area_diagonal(amplitudes: np.ndarray, eig: EigenDecomposition,
                            basis: WannierBasis,
                            cell_probs: np.ndarray | None = None,
                            check_degeneracy: bool = True) -> float:
    """Stationary occupied area of an evolved state from its eigenbasis
    amplitudes, using the diagonal-ensemble average

        1/area = 2 * sum_c (sum_f w_f b_cf)^2 - sum_c sum_f w_f^2 b_cf^2

    with w_f = |amplitudes_f|^2 and b_cf the eigenstate cell probabilities.
    """
    b = _cell_probabilities(eig, basis) if cell_probs is None else cell_probs
    if check_degeneracy:
        check_quasi_energy_differences(eig)
    w = np.abs(np.asarray(amplitudes, dtype=complex)) ** 2
    if w.shape[0] != b.shape[1]:
        raise ValueError("amplitude vector length must equal N")
    p_cell = b @ w
    term1 = 2.0 * float(np.sum(p_cell ** 2))
    state_ipr = np.sum(b * b, axis=0)
    term2 = float(np.sum(w * w * state_ipr))
    denom = term1 - term2
    if denom <= 0.0:
        raise ComputeError("non-positive participation sum")
    return 1.0 / denom


def orbit_areas_all_cells(eig: EigenDecomposition, basis: WannierBasis,
                          cell_probs: np.ndarray | None = None,
                          check_degeneracy: bool = True) -> np.ndarray:
    """Stationary areas of every cell state launched as an initial condition.

    Same average as long_time_area_diagonal, vectorized over all N cells via
    the Gram matrix of the cell-probability rows; returns a flat array in
    cell order P*n_x + X.
    """
    b = _cell_probabilities(eig, basis) if cell_probs is None else cell_probs
    if check_degeneracy:
        check_quasi_energy_differences(eig)
    gram = b @ b.T
    term1 = 2.0 * np.sum(gram * gram, axis=1)
    state_ipr = np.sum(b * b, axis=0)
    term2 = (b * b) @ state_ipr
    denom = term1 - term2
    if np.any(denom <= 0.0):
        raise ComputeError("non-positive participation sum")
    return 1.0 / denom


def long_time_area_direct(v: FloquetMatrix, basis: WannierBasis,
                          initial_state: np.ndarray, times) -> float:
    """Occupied area from direct time evolution, averaged over sample times.

    Evolves the state kick by kick, accumulates sum_c p_c(t)^2 at each of
    the given integer times, and inverts the time average.  Serves as the
    oracle for the diagonal-ensemble route.
    """
    times = np.unique(np.asarray(times, dtype=int))
    if len(times) == 0 or times[0] < 0:
        raise ValueError("times must be non-negative integers")
    state = np.asarray(initial_state, dtype=complex)
    sums = []
    current = state
    prev = 0
    for t in times:
        current = apply_v(v, current, int(t - prev))
        prev = int(t)
        grid = project(basis, current).grid
        sums.append(float(np.sum(grid ** 2)))
    return 1.0 / float(np.mean(sums))


def default_orbit_times(t_min: int = 100, t_max: int = 10_000,
                        count: int = 48) -> np.ndarray:
    """Log-spaced integer sample times in [t_min, t_max], deduplicated."""
    grid = np.unique(np.round(np.logspace(math.log10(t_min),
                                          math.log10(t_max), count)).astype(int))
    return grid[grid >= t_min]
