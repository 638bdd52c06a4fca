"""Trajectory kernel backend: compiled extension when built, numpy fallback
otherwise.  Both expose torus_trajectory, torus_histogram, final_momenta
with identical signatures."""

try:
    from ._compiled import final_momenta, torus_histogram, torus_trajectory
    BACKEND = "compiled"
except ImportError:  # extension not built
    from ._fallback import final_momenta, torus_histogram, torus_trajectory
    BACKEND = "fallback"


def kernel_backend() -> str:
    """Name of the active trajectory backend: 'compiled' or 'fallback'."""
    return BACKEND


__all__ = ["torus_trajectory", "torus_histogram", "final_momenta",
           "kernel_backend", "BACKEND"]
