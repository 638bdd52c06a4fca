"""Integer-order Bessel functions of the first kind via Miller's algorithm.

The kick factor of the one-period operator needs J_k(z) for every order
0 <= k <= k_max at a single fixed argument, with k_max slightly beyond z.
Downward recurrence with sum normalization gives the whole array at machine
accuracy in O(k_max) operations, including the super-exponentially small
orders past the turning point where upward recurrence is useless.
"""

from __future__ import annotations

import math

import numpy as np

# Values this small are rescaled during the downward sweep to avoid overflow
# of the unnormalized minimal solution.
_RESCALE_LIMIT = 1e250


def bessel_j_sequence(z: float, k_max: int) -> np.ndarray:
    """Return J_k(z) for k = 0 .. k_max as a float array of length k_max + 1.

    z must be non-negative.  Accuracy is close to machine precision in the
    oscillatory region and relative (not just absolute) in the decaying tail,
    which is what the truncation guard of the Floquet build relies on.
    """
    if z < 0:
        raise ValueError("argument must be non-negative")
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    if z == 0.0:
        out = np.zeros(k_max + 1)
        out[0] = 1.0
        return out

    # Start the recurrence far enough above both k_max and the turning point
    # k ~ z that the contamination by the dominant solution has decayed below
    # machine epsilon by the time the sweep reaches the orders we keep.
    top = max(k_max, int(math.ceil(z)))
    start = top + int(math.sqrt(40.0 * (top + 1))) + 60
    if start % 2 == 1:
        start += 1

    raw = np.empty(start + 1)
    jp = 0.0
    jc = 1e-300
    raw[start] = jc
    norm = 0.0
    # Accumulates J_0 + 2 * sum_{m>=1} J_2m = 1, rescaled together with the
    # running values whenever they grow too large.
    for k in range(start, 0, -1):
        jm = (2.0 * k / z) * jc - jp
        jp = jc
        jc = jm
        if k % 2 == 0:
            norm += 2.0 * jp
        raw[k - 1] = jc
        if abs(jc) > _RESCALE_LIMIT:
            jc *= 1e-250
            jp *= 1e-250
            norm *= 1e-250
            raw[: k] = 0.0
            raw[k - 1] = jc
            raw[k:] *= 1e-250
    norm += jc  # J_0 term
    return raw[: k_max + 1] / norm


def bessel_j(order: int, z: float) -> float:
    """J_order(z) for a single (possibly negative) integer order."""
    k = abs(int(order))
    val = bessel_j_sequence(z, k)[k]
    if order < 0 and k % 2 == 1:
        val = -val
    return float(val)
