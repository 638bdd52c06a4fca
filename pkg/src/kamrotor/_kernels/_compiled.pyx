# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory loops for the classical standard map.

Only the kick-by-kick iteration lives here; everything around it (sampling,
area evaluation, statistics) stays in numpy-land.
"""

from libc.math cimport floor, sin

import numpy as np


def torus_trajectory(double x0, double p0, long n_kicks, double kick):
    """Iterate the unit-torus map n_kicks times from (x0, p0).

    kick is K/(2*pi).  Returns the visited points as two arrays of length
    n_kicks (the initial point is not recorded).
    """
    xs = np.empty(n_kicks, dtype=np.float64)
    ps = np.empty(n_kicks, dtype=np.float64)
    cdef double[::1] xv = xs
    cdef double[::1] pv = ps
    cdef double x = x0, p = p0
    cdef double two_pi = 6.283185307179586476925287
    cdef long t
    for t in range(n_kicks):
        p = p + kick * sin(two_pi * x)
        p = p - floor(p)
        x = x + p
        x = x - floor(x)
        xv[t] = x
        pv[t] = p
    return xs, ps


def torus_histogram(double[::1] x0, double[::1] p0, long n_kicks, double kick,
                    int n_cells, long long[:, ::1] counts):
    """Accumulate per-trajectory coarse-cell visit counts.

    counts has shape (len(x0), n_cells * n_cells), flat cell index
    ix * n_cells + ip, and must be zeroed by the caller.
    """
    cdef Py_ssize_t n_traj = x0.shape[0]
    cdef Py_ssize_t i
    cdef long t
    cdef double x, p
    cdef double two_pi = 6.283185307179586476925287
    cdef int ix, ip
    for i in range(n_traj):
        x = x0[i]
        p = p0[i]
        for t in range(n_kicks):
            p = p + kick * sin(two_pi * x)
            p = p - floor(p)
            x = x + p
            x = x - floor(x)
            ix = <int>(x * n_cells)
            if ix >= n_cells:
                ix = n_cells - 1
            ip = <int>(p * n_cells)
            if ip >= n_cells:
                ip = n_cells - 1
            counts[i, ix * n_cells + ip] += 1


def final_momenta(double[::1] x0, double[::1] p0, long n_kicks, double strength):
    """Evolve with unbounded momentum (angle units, kick strength K) and
    return the final momenta; x is wrapped to [0, 2*pi), p is not wrapped."""
    cdef Py_ssize_t n_traj = x0.shape[0]
    out = np.empty(n_traj, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef long t
    cdef double x, p
    cdef double two_pi = 6.283185307179586476925287
    for i in range(n_traj):
        x = x0[i]
        p = p0[i]
        for t in range(n_kicks):
            p = p + strength * sin(x)
            x = x + p
            x = x - two_pi * floor(x / two_pi)
        ov[i] = p
    return out
