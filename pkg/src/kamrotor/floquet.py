"""One-kick evolution operator of the kicked rotor at quantum resonance.

The effective Planck constant is the rational multiple hbar_eff = 2*pi*M/N of
2*pi, with N = n_x * n_p even and gcd(M, N) = 1.  At such values the one-kick
operator commutes with momentum translation by N states, so it reduces to an
N x N Bloch block parametrized by a phase theta.  The block factorizes into a
diagonal free-rotation phase times a theta-twisted circulant kick factor,
which is what this module builds, applies, and diagonalizes.

Momentum labels follow the 1-based convention s = 1..N; stored arrays are
0-based, so array slot i holds label s = i + 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg

from .bessel import bessel_j_sequence
from .errors import ConfigError, ConvergenceError, SymmetryViolation, TruncationError

_TWO_PI = 2.0 * math.pi

# (-i)**k by residue of k mod 4; exact, unlike complex pow for large k.
_MINUS_I_POW = np.array([1.0 + 0.0j, -1.0j, -1.0 + 0.0j, 1.0j])

# Largest tolerable magnitude among the kick-factor terms dropped by the
# order truncation; exceeding it means the margin was too small.
_DROP_TOLERANCE = 1e-14

_RESIDUAL_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ModelParams:
    """Physical and lattice parameters of one resonant rotor run.

    K is the kick strength, M/N the resonance fraction (N = n_x * n_p), and
    theta the Bloch phase of the reduced block.  n_x and n_p set the Wannier
    grid used downstream; the operator itself only sees their product.
    """

    K: float
    M: int
    n_x: int
    n_p: int
    theta: float = 0.0

    def __post_init__(self):
        if not (isinstance(self.M, int) and isinstance(self.n_x, int)
                and isinstance(self.n_p, int)):
            raise ConfigError("M, n_x, n_p must be integers")
        if self.n_x < 1 or self.n_p < 1 or self.M < 1:
            raise ConfigError("M, n_x, n_p must be positive")
        if not (math.isfinite(self.K) and self.K >= 0):
            raise ConfigError("kick strength K must be finite and >= 0")
        n = self.n_x * self.n_p
        if n % 2 != 0:
            raise ConfigError(f"N = n_x*n_p = {n} must be even")
        if math.gcd(self.M, n) != 1:
            raise ConfigError(f"M = {self.M} must be coprime with N = {n}")
        if not (0.0 <= self.theta < _TWO_PI):
            raise ConfigError("theta must lie in [0, 2*pi)")

    @classmethod
    def unchecked(cls, K, M, n_x, n_p, theta=0.0):
        """Bypass validation; for diagnostics such as probing odd-N symmetry
        breaking, not for production runs."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "K", K)
        object.__setattr__(obj, "M", M)
        object.__setattr__(obj, "n_x", n_x)
        object.__setattr__(obj, "n_p", n_p)
        object.__setattr__(obj, "theta", theta)
        return obj

    @property
    def n_states(self) -> int:
        return self.n_x * self.n_p

    @property
    def hbar_ratio(self) -> Fraction:
        """hbar_eff / (2*pi) as an exact rational."""
        return Fraction(self.M, self.n_states)

    @property
    def hbar_eff(self) -> float:
        return _TWO_PI * self.M / self.n_states

    @property
    def kick_argument(self) -> float:
        """K / hbar_eff, the Bessel argument of the kick factor."""
        return self.K * self.n_states / (_TWO_PI * self.M)


def kinetic_phase(n, M: int, n_states: int) -> np.ndarray:
    """exp(-i n^2 hbar_eff / 2) with the angle reduced exactly.

    n^2 hbar_eff / 2 = pi * M * n^2 / N, so the reduction mod 2*pi is the
    integer reduction of M*n^2 mod 2N.  Doing it in integers keeps the phase
    accurate for large momentum labels and makes the N-translation symmetry
    of the operator exact in floating point when N is even.
    """
    n = np.asarray(n, dtype=np.int64)
    residue = (M * n * n) % (2 * n_states)
    return np.exp(-1j * math.pi * residue / n_states)


def _kick_coefficients(z: float, k_max: int):
    """Coefficients c_k = (-i)^k J_k(z) for k = -k_max..k_max, plus the
    largest dropped |J| beyond the retained orders."""
    # Look far enough past k_max to catch the true maximum of the dropped
    # tail even when k_max sits below the turning point k ~ z.
    probe = max(k_max + 2, int(math.ceil(z + 2.0 * z ** (1.0 / 3.0))) + 2) if z > 0 else k_max + 2
    j = bessel_j_sequence(z, probe)
    dropped = float(np.max(np.abs(j[k_max + 1:]))) if probe > k_max else 0.0
    orders = np.arange(-k_max, k_max + 1)
    mags = j[np.abs(orders)]
    # J_{-k} = (-1)^k J_k
    signs = np.where((orders < 0) & (orders % 2 != 0), -1.0, 1.0)
    coeffs = _MINUS_I_POW[orders % 4] * signs * mags
    return coeffs, dropped


def truncation_margin(z: float) -> int:
    """Number of Bessel orders retained past ceil(z).

    The minimum useful margin is 40; on top of that the margin grows with
    z**(1/3) because the Airy transition zone past the turning point widens
    at that rate, and a fixed margin would leave dropped terms far above the
    tolerance once z exceeds a few hundred.
    """
    base = 40
    if z > 0:
        base += int(math.ceil(12.0 * z ** (1.0 / 3.0)))
    return base


@dataclass
class FloquetMatrix:
    """Reduced one-kick operator for one Bloch phase.

    Stored as the diagonal free-rotation phase (row_phase) and the first
    generating row of the theta-twisted circulant kick factor (wrapped), from
    which dense entries, matrix-vector products (FFT based, O(N log N)), and
    single elements are produced.  ``dense()`` materializes and caches the
    full N x N array.
    """

    params: ModelParams
    k_max: int
    margin: int
    wrapped: np.ndarray
    row_phase: np.ndarray
    dropped_magnitude: float
    _dense: np.ndarray | None = field(default=None, repr=False)
    _symbol: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.params.n_states

    def _spectrum_symbol(self) -> np.ndarray:
        """DFT symbol of the (ramp-conjugated) kick factor; unit modulus up
        to the order truncation."""
        if self._symbol is None:
            n = self.dim
            theta = self.params.theta
            kappa = self.wrapped
            if theta != 0.0:
                kappa = kappa * np.exp(-1j * theta * np.arange(n) / n)
            self._symbol = n * np.fft.ifft(kappa)
        return self._symbol

    def unitarity_defect(self) -> float:
        """Upper bound on max |(V^H V - I)_ij|, O(N log N)."""
        sym = self._spectrum_symbol()
        return float(np.max(np.abs(np.abs(sym) ** 2 - 1.0)))

    def dense(self) -> np.ndarray:
        if self._dense is None:
            n = self.dim
            idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
            mat = self.wrapped[idx]
            if self.params.theta != 0.0:
                twist = np.exp(-1j * self.params.theta)
                mat = np.where(np.arange(n)[None, :] < np.arange(n)[:, None],
                               mat * twist, mat)
            self._dense = self.row_phase[:, None] * mat
        return self._dense

    def element(self, s_row: int, s_col: int) -> complex:
        """Single entry with 1-based momentum labels s = 1..N."""
        n = self.dim
        if not (1 <= s_row <= n and 1 <= s_col <= n):
            raise ValueError("labels must lie in 1..N")
        val = self.wrapped[(s_col - s_row) % n]
        if s_col < s_row and self.params.theta != 0.0:
            val = val * np.exp(-1j * self.params.theta)
        return complex(self.row_phase[s_row - 1] * val)

    def matvec(self, state: np.ndarray) -> np.ndarray:
        """Apply the operator to one state (or to columns of a 2-d array)."""
        n = self.dim
        state = np.asarray(state)
        if state.shape[0] != n:
            raise ValueError("state length must equal N")
        theta = self.params.theta
        sym = self._spectrum_symbol()
        work = state
        if theta != 0.0:
            ramp = np.exp(1j * theta * np.arange(n) / n)
            work = work * (ramp if state.ndim == 1 else ramp[:, None])
        ft = np.fft.fft(work, axis=0)
        ft *= sym if state.ndim == 1 else sym[:, None]
        out = np.fft.ifft(ft, axis=0)
        if theta != 0.0:
            out *= np.conj(ramp) if state.ndim == 1 else np.conj(ramp)[:, None]
        out *= self.row_phase if state.ndim == 1 else self.row_phase[:, None]
        return out


def build_v(params: ModelParams, margin: int | None = None) -> FloquetMatrix:
    """Assemble the reduced operator block at the Bloch phase of params.

    The kick-factor sum over translated momentum orders is truncated at
    |order| <= ceil(K/hbar_eff) + margin; the largest dropped term is checked
    against 1e-14 and TruncationError raised if it exceeds that, which is the
    signal that the margin was chosen too small.
    """
    n = params.n_states
    z = params.kick_argument
    if margin is None:
        margin = truncation_margin(z)
    if margin < 0:
        raise ConfigError("margin must be >= 0")
    k_max = int(math.ceil(z)) + margin
    coeffs, dropped = _kick_coefficients(z, k_max)
    if dropped > _DROP_TOLERANCE:
        raise TruncationError(
            f"largest dropped kick term {dropped:.3e} exceeds {_DROP_TOLERANCE:.0e}; "
            f"increase the truncation margin (k_max={k_max}, z={z:.1f})")

    # Fold coefficients into principal residues delta = 0..N-1 with the
    # Bloch twist phase exp(-i l theta) per momentum-cell shift l.
    wrapped = np.zeros(n, dtype=complex)
    orders = np.arange(-k_max, k_max + 1)
    shifts, residues = np.divmod(orders, n)
    if params.theta != 0.0:
        np.add.at(wrapped, residues, coeffs * np.exp(-1j * params.theta * shifts))
    else:
        np.add.at(wrapped, residues, coeffs)

    row_phase = kinetic_phase(np.arange(1, n + 1), params.M, n)
    return FloquetMatrix(params=params, k_max=k_max, margin=margin,
                         wrapped=wrapped, row_phase=row_phase,
                         dropped_magnitude=dropped)


_U_CACHE: dict[tuple[float, int], np.ndarray] = {}


def _cached_bessel(z: float, k_needed: int) -> np.ndarray:
    for (zc, kc), arr in list(_U_CACHE.items()):
        if zc == z and kc >= k_needed:
            return arr
    arr = bessel_j_sequence(z, k_needed)
    _U_CACHE.clear()
    _U_CACHE[(z, k_needed)] = arr
    return arr


def u_element(params: ModelParams, n_row: int, n_col: int) -> complex:
    """Entry <n_row|U|n_col> of the full (untruncated) one-kick operator.

    Row and column are momentum labels, any integers; the operator acts on
    the infinite momentum lattice and this accessor exists mainly for
    structural checks such as the translation symmetry probe.
    """
    z = params.kick_argument
    d = n_col - n_row
    k = abs(d)
    jarr = _cached_bessel(z, max(k, int(math.ceil(z)) + 8))
    mag = jarr[k] if k < len(jarr) else 0.0
    if d < 0 and k % 2 != 0:
        mag = -mag
    phase = kinetic_phase(np.array([n_row]), params.M, params.n_states)[0]
    return complex(_MINUS_I_POW[d % 4] * mag * phase)


@dataclass
class TranslationSymmetryReport:
    max_deviation: float
    samples: int


def check_translation_symmetry(params: ModelParams, samples: int = 64,
                               seed: int = 0) -> TranslationSymmetryReport:
    """Probe |U_{n+N, n'+N} - U_{n, n'}| on random label pairs.

    Offsets n' - n are drawn from the band where the Bessel factor is not
    negligible, otherwise the probe would only ever see zeros.  Raises
    SymmetryViolation when the maximum deviation exceeds 1e-12, which happens
    exactly when M*N is odd (the half-period kinetic phase flips sign).
    """
    n = params.n_states
    z = params.kick_argument
    rng = np.random.default_rng(seed)
    band = int(math.ceil(z)) + 5
    worst = 0.0
    for _ in range(samples):
        row = int(rng.integers(-2 * n, 2 * n))
        col = row + int(rng.integers(-band, band + 1))
        dev = abs(u_element(params, row + n, col + n) - u_element(params, row, col))
        worst = max(worst, dev)
    if worst > 1e-12:
        raise SymmetryViolation(
            f"translation deviation {worst:.3e} (N={n}, M={params.M}; "
            "N*M must be even for the resonance reduction)")
    return TranslationSymmetryReport(max_deviation=worst, samples=samples)


@dataclass
class EigenDecomposition:
    """Spectral data of one reduced block, sorted by quasi-energy.

    Column j of ``vectors`` belongs to eigenvalues[j] = exp(-i w_j) with
    w_j = quasi_energies[j] in [0, 2*pi).  ``residuals`` are per-state upper
    estimates of ||V phi - lambda phi||_2 derived from the Schur form.
    """

    params: ModelParams
    eigenvalues: np.ndarray
    quasi_energies: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray


def diagonalize(v: FloquetMatrix) -> EigenDecomposition:
    """Full eigendecomposition of the reduced block.

    A complex Schur decomposition of the (normal) block is diagonal up to
    roundoff, so the Schur basis doubles as an orthonormal eigenbasis; the
    leftover strict upper triangle gives the residual estimate per state.
    """
    n = v.dim
    try:
        t, q = scipy.linalg.schur(v.dense(), output="complex")
    except Exception as exc:  # pragma: no cover - LAPACK failure path
        raise ConvergenceError(f"Schur decomposition failed: {exc}") from exc
    eigvals = np.diag(t).copy()
    strict = np.triu(t, 1)
    residuals = np.sqrt(np.sum(np.abs(strict) ** 2, axis=0)) + n * 2.3e-16
    if np.max(residuals) > _RESIDUAL_TOLERANCE:
        raise ConvergenceError(
            f"eigenpair residual {np.max(residuals):.3e} above "
            f"{_RESIDUAL_TOLERANCE:.0e}")
    omega = np.mod(-np.angle(eigvals), _TWO_PI)
    order = np.argsort(omega, kind="stable")
    return EigenDecomposition(params=v.params,
                              eigenvalues=eigvals[order],
                              quasi_energies=omega[order],
                              vectors=np.ascontiguousarray(q[:, order]),
                              residuals=residuals[order])


def apply_v(v: FloquetMatrix, state: np.ndarray, steps: int) -> np.ndarray:
    """V**steps applied to state by repeated multiplication."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    out = np.array(state, dtype=complex, copy=True)
    for _ in range(steps):
        out = v.matvec(out)
    return out
