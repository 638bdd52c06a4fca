"""Irrational effective Planck constant approached through resonant values.

A generic hbar_eff = 2*pi/(n_x + delta)**2 with irrational delta is not a
resonance, but its continued-fraction convergents M_j / q_j of the ratio
n_x/(n_x + delta)^2 define a ladder of resonant parameter sets
(M = M_j, n_p = q_j) whose hbar_eff converges to the target.  Observables
computed along the ladder approach their generic-hbar limits once the block
dimension passes the localization scale.

The module also diagonalizes the plainly truncated operator on momentum
states 1..n_cut (no Bloch reduction), selecting eigenstates that live deep
inside the cutoff window, and measures their area on a local cell basis
spanning 3*n_x^2 momentum states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
import scipy.linalg

from .errors import ConfigError, ConvergenceError, NoValidConvergent, TruncationError
from .floquet import ModelParams, _kick_coefficients, build_v, diagonalize
from .observables import AreaSpectrum, area_spectrum
from .wannier import WannierBasis

_TWO_PI = 2.0 * math.pi

# pi to long-double precision; np.longdouble(np.pi) would carry only the
# double-rounded value.
_PI_LD = np.longdouble("3.14159265358979323846264338327950288")


def generic_hbar(n_x: int, delta: float) -> float:
    """The target irrational-side value 2*pi/(n_x + delta)**2."""
    return _TWO_PI / (n_x + delta) ** 2


def localization_length(diffusion: float, hbar_eff: float) -> float:
    """Estimated momentum localization scale diffusion / (2 * hbar_eff^2),
    in units of momentum states."""
    if hbar_eff <= 0:
        raise ConfigError("hbar_eff must be positive")
    return diffusion / (2.0 * hbar_eff * hbar_eff)


@dataclass(frozen=True)
class RationalStep:
    """One accepted rung of the approximation ladder."""

    index: int
    M: int
    n_p: int
    n_states: int
    hbar_eff: float
    delta_hbar: float
    is_convergent: bool


@dataclass
class RationalApprox:
    n_x: int
    delta: float
    target_hbar: float
    entries: list
    skipped: list = field(default_factory=list)


def rational_sequence(n_x: int, delta: float, count: int) -> RationalApprox:
    """Ladder of resonant parameter sets approaching the generic value.

    Walks the continued-fraction convergents (and their semiconvergents) of
    n_x/(n_x + delta)^2 in order of growing denominator, keeping fractions
    p/q that satisfy the resonance constraints (N = n_x*q even, M = p
    coprime with N) and strictly shrink |hbar_eff - target|.  Fractions that
    fail are recorded in ``skipped``, never silently dropped.
    """
    if count < 1:
        raise ConfigError("count must be positive")
    if n_x < 1 or not math.isfinite(delta) or delta < 0:
        raise ConfigError("need n_x >= 1 and finite delta >= 0")
    target = generic_hbar(n_x, delta)
    entries, skipped = [], []
    with mpmath.workdps(60):
        rho = mpmath.mpf(n_x) / (mpmath.mpf(n_x) + mpmath.mpf(delta)) ** 2
        a0 = int(mpmath.floor(rho))
        p_prev, q_prev = 1, 0
        p_cur, q_cur = a0, 1
        best = math.inf
        started = a0 >= 1
        if started:
            d_h = _delta_hbar(n_x, a0, 1, target)
            if _try_accept(entries, skipped, n_x, a0, 1, target, d_h, True):
                best = d_h
        frac = rho - a0
        while len(entries) < count and frac != 0:
            frac = 1 / frac
            a = int(mpmath.floor(frac))
            if a < 1 or q_cur > 10 ** 12:
                break
            frac = frac - a
            # before the first nonzero convergent the shallow semiconvergents
            # t < a are strictly worse approximations; only the convergent
            # itself seeds the ladder
            for t in (range(1, a + 1) if started else [a]):
                p_new = t * p_cur + p_prev
                q_new = t * q_cur + q_prev
                if p_new < 1:
                    continue
                started = True
                d_h = _delta_hbar(n_x, p_new, q_new, target)
                if d_h >= best:
                    continue
                if _try_accept(entries, skipped, n_x, p_new, q_new,
                               target, d_h, t == a):
                    best = d_h
                if len(entries) >= count:
                    break
            p_prev, q_prev, p_cur, q_cur = (
                p_cur, q_cur, a * p_cur + p_prev, a * q_cur + q_prev)
    if not entries:
        raise NoValidConvergent(
            f"no rational step satisfies the constraints for n_x={n_x}, "
            f"delta={delta}")
    return RationalApprox(n_x=n_x, delta=delta, target_hbar=target,
                          entries=entries, skipped=skipped)


def _delta_hbar(n_x: int, p: int, q: int, target: float) -> float:
    return abs(target - _TWO_PI * p / (n_x * q))


def _try_accept(entries, skipped, n_x, p, q, target, d_h, is_conv) -> bool:
    n = n_x * q
    if n % 2 != 0:
        skipped.append((p, q, "N odd"))
        return False
    if math.gcd(p, n) != 1:
        skipped.append((p, q, "M not coprime with N"))
        return False
    entries.append(RationalStep(index=len(entries), M=p, n_p=q, n_states=n,
                                hbar_eff=_TWO_PI * p / n,
                                delta_hbar=d_h, is_convergent=is_conv))
    return True


@dataclass
class GenericScanEntry:
    step: RationalStep
    spectrum: AreaSpectrum
    area_at_half: float


@dataclass
class GenericScanResult:
    approx: RationalApprox
    K: float
    entries: list
    skipped_dims: list = field(default_factory=list)


def resonant_scan(approx: RationalApprox, K: float, theta: float = 0.0,
                  max_dim: int | None = None) -> GenericScanResult:
    """Area spectra along the approximation ladder.

    Entries whose block dimension exceeds max_dim are skipped (recorded in
    ``skipped_dims``), which is how desk-size runs cap the cost.
    """
    result = GenericScanResult(approx=approx, K=K, entries=[])
    for step in approx.entries:
        if max_dim is not None and step.n_states > max_dim:
            result.skipped_dims.append(step)
            continue
        params = ModelParams(K=K, M=step.M, n_x=approx.n_x,
                             n_p=step.n_p, theta=theta)
        eig = diagonalize(build_v(params))
        basis = WannierBasis(n_x=approx.n_x, n_p=step.n_p)
        spec = area_spectrum(eig, basis)
        result.entries.append(GenericScanEntry(
            step=step, spectrum=spec,
            area_at_half=spec.area_at_label(0.5)))
    return result


def _generic_kinetic_phase(n: np.ndarray, hbar_eff: float) -> np.ndarray:
    """exp(-i n^2 hbar/2) for irrational hbar: the angle is reduced mod 2*pi
    in 80-bit arithmetic before the complex exponential, since n^2 hbar/2
    reaches ~1e6 where double reduction already costs ~1e-10 of phase."""
    angles = np.mod(n.astype(np.longdouble) ** 2 * (np.longdouble(hbar_eff) / 2),
                    2 * _PI_LD)
    return np.exp(-1j * angles.astype(float))


def build_truncated(K: float, n_x: int, delta: float, n_cut: int) -> np.ndarray:
    """Dense one-kick operator truncated to momentum labels 1..n_cut.

    No Bloch reduction: this is the raw operator block, unitary only up to
    edge effects, used to study the generic-hbar spectrum directly.
    """
    hbar = generic_hbar(n_x, delta)
    z = K / hbar
    coeffs, dropped = _kick_coefficients(z, n_cut - 1)
    if dropped > 1e-14:
        raise TruncationError(
            f"cutoff n_cut={n_cut} lies inside the kick bandwidth "
            f"(z={z:.1f}, dropped {dropped:.2e})")
    mid = n_cut - 1
    first_col = coeffs[mid::-1]      # coeff(-r), r = 0..n_cut-1
    first_row = coeffs[mid:]         # coeff(+c), c = 0..n_cut-1
    mat = scipy.linalg.toeplitz(first_col, first_row)
    phases = _generic_kinetic_phase(np.arange(1, n_cut + 1), hbar)
    mat *= phases[:, None]
    return mat


@dataclass
class TruncatedSpectrum:
    """Selected deep-window eigenstates of the truncated operator."""

    K: float
    n_x: int
    delta: float
    n_cut: int
    hbar_eff: float
    window_lo: float
    window_hi: float
    window_center: int
    edge_margin: int
    leakage_tol: float
    state_indices: np.ndarray
    eigenvalues: np.ndarray
    mean_momenta: np.ndarray
    normalized_areas: np.ndarray
    interior_probability: np.ndarray
    momentum_profiles: np.ndarray
    extra_areas: dict = field(default_factory=dict)

    @property
    def n_selected(self) -> int:
        return len(self.state_indices)


def truncated_spectrum(K: float, n_x: int, delta: float, n_cut: int,
                       window_center: int | None = None,
                       leakage_tol: float = 0.999,
                       edge_margin: int | None = None,
                       min_selected: int = 10,
                       keep_profiles: bool = True,
                       extra_window_centers: tuple = ()) -> TruncatedSpectrum:
    """Diagonalize the truncated operator and measure normalized areas of
    eigenstates that live deep inside the cutoff window.

    Selection: mean momentum within the central third of [1, n_cut] and
    interior probability (outside the two edge strips of width edge_margin,
    default n_cut // 10) above leakage_tol.  The local cell basis spans
    3*n_x^2 momentum states centered on window_center (default n_cut // 2);
    normalized areas use the partial-projection form (sum p)^2 / sum p^2.

    extra_window_centers requests the same area measurement for shifted
    windows from the one diagonalization (keyed by center in extra_areas),
    which is how window-shift insensitivity is checked cheaply.

    The window origin snaps down to a multiple of n_x, so the local cell
    boundaries coincide with the momentum blocks of the resonant reduction.
    Sub-block origin changes would re-group boundary momentum states between
    adjacent cells and move individual areas by ~10%; aligned windows shift
    by whole cells only, which translates the partition instead.
    """
    if n_cut < 8:
        raise ConfigError("n_cut too small")
    n_loc = 3 * n_x * n_x
    if window_center is None:
        window_center = n_cut // 2
    if edge_margin is None:
        edge_margin = n_cut // 10

    def window_base(center: int) -> int:
        base = ((center - n_loc // 2) // n_x) * n_x
        if base < 0 or base + n_loc > n_cut:
            raise ConfigError("local cell window does not fit inside the cutoff")
        return base

    bases = {center: window_base(center)
             for center in (window_center, *extra_window_centers)}

    mat = build_truncated(K, n_x, delta, n_cut)
    try:
        eigvals, vecs = scipy.linalg.eig(mat)
    except Exception as exc:  # pragma: no cover
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    del mat

    probs = np.abs(vecs) ** 2
    n_axis = np.arange(1, n_cut + 1, dtype=float)
    mean_n = n_axis @ probs
    lo, hi = n_cut / 3.0, 2.0 * n_cut / 3.0
    interior = 1.0 - probs[:edge_margin].sum(axis=0) - probs[n_cut - edge_margin:].sum(axis=0)
    sel = np.where((mean_n >= lo) & (mean_n <= hi) & (interior > leakage_tol))[0]
    if len(sel) < min_selected:
        raise TruncationError(
            f"only {len(sel)} eigenstates pass the deep-window selection "
            f"(need {min_selected}); increase n_cut")
    sel = sel[np.argsort(mean_n[sel], kind="stable")]

    # residual screen against eigensolver breakdown on the selected states
    res = np.linalg.norm(build_residual(vecs[:, sel], eigvals[sel],
                                        K, n_x, delta, n_cut), axis=0)
    if np.max(res) > 1e-6:
        raise ConvergenceError(f"eigenpair residual {np.max(res):.2e} above 1e-6")

    basis = WannierBasis(n_x=n_x, n_p=3 * n_x)

    def areas_for(base: int) -> np.ndarray:
        grids = np.abs(basis.amplitudes(vecs[base: base + n_loc, sel])) ** 2
        totals = grids.sum(axis=(0, 1))
        return totals ** 2 / (grids ** 2).sum(axis=(0, 1))

    return TruncatedSpectrum(
        K=K, n_x=n_x, delta=delta, n_cut=n_cut,
        hbar_eff=generic_hbar(n_x, delta),
        window_lo=lo, window_hi=hi, window_center=window_center,
        edge_margin=edge_margin, leakage_tol=leakage_tol,
        state_indices=sel,
        eigenvalues=eigvals[sel],
        mean_momenta=mean_n[sel],
        normalized_areas=areas_for(bases[window_center]),
        interior_probability=interior[sel],
        momentum_profiles=probs[:, sel].T.copy() if keep_profiles else np.empty((0, n_cut)),
        extra_areas={center: areas_for(base) for center, base in bases.items()
                     if center != window_center},
    )


def build_residual(vectors: np.ndarray, values: np.ndarray, K: float,
                   n_x: int, delta: float, n_cut: int) -> np.ndarray:
    """U phi - lambda phi for the given columns, recomputing U lazily."""
    mat = build_truncated(K, n_x, delta, n_cut)
    return mat @ vectors - vectors * values[None, :]


def split_two_classes(values: np.ndarray, min_size: int = 3):
    """Split a positive sample at its largest logarithmic gap.

    Returns (lower_median, upper_median, split_value).  Used to separate the
    regular-state and chaotic-state area branches; raises ComputeError-like
    ValueError when the sample is too small to split.
    """
    vals = np.sort(np.asarray(values, dtype=float))
    if len(vals) < 2 * min_size:
        raise ValueError("too few values to split")
    logs = np.log(vals)
    gaps = np.diff(logs)
    inner = gaps[min_size - 1: len(gaps) - (min_size - 1)]
    cut = int(np.argmax(inner)) + min_size - 1
    lower, upper = vals[: cut + 1], vals[cut + 1:]
    split = math.sqrt(vals[cut] * vals[cut + 1])
    return float(np.median(lower)), float(np.median(upper)), float(split)
