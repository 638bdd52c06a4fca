"""Wannier cell basis: orthonormality, closed forms, map concentration."""

import math

import numpy as np
import pytest

from kamrotor.floquet import ModelParams, build_v
from kamrotor.wannier import (WannierBasis, project, semiclassical_map_check,
                              x_representation)


def test_transform_unitary():
    basis = WannierBasis(n_x=6, n_p=8)
    mat = basis.transform()
    gram = mat.conj().T @ mat
    assert np.max(np.abs(gram - np.eye(basis.n_states))) < 1e-12


def test_row_state_round_trip():
    basis = WannierBasis(n_x=4, n_p=6)
    for cell_x, cell_p in [(0, 0), (3, 2), (1, 5)]:
        dist = project(basis, basis.row_state(cell_x, cell_p))
        expected = np.zeros((4, 6))
        expected[cell_x, cell_p] = 1.0
        assert np.max(np.abs(dist.grid - expected)) < 1e-12
        assert dist.total == pytest.approx(1.0, abs=1e-12)


def test_amplitudes_match_transform():
    basis = WannierBasis(n_x=4, n_p=4)
    rng = np.random.default_rng(3)
    state = rng.normal(size=16) + 1j * rng.normal(size=16)
    amp = basis.amplitudes(state)
    flat = basis.transform() @ state
    # transform rows are ordered cell index r = P*n_x + X, matching the
    # flattened (P, X) amplitude grid
    assert np.max(np.abs(amp.reshape(-1) - flat)) < 1e-12


def direct_x_sum(basis, cell_x, cell_p, x):
    """Position amplitude as the explicit lattice sum over the momentum
    labels of one cell row (independent route for the closed form)."""
    total = 0.0j
    n_x = basis.n_x
    for n in range(1, n_x + 1):
        label = cell_p * n_x + n
        weight = np.exp(-2j * math.pi * cell_x * n / n_x) / math.sqrt(n_x)
        total += weight * np.exp(1j * label * x) / math.sqrt(2.0 * math.pi)
    return total


def test_x_representation_matches_direct_sum():
    basis = WannierBasis(n_x=4, n_p=6)
    xs = np.array([0.05, 0.5, 1.57, 3.0, 5.9])
    for cell_x, cell_p in [(0, 0), (2, 3), (3, 5)]:
        ours = x_representation(basis, cell_x, cell_p, xs)
        ref = np.array([direct_x_sum(basis, cell_x, cell_p, x) for x in xs])
        assert np.max(np.abs(ours - ref)) < 1e-12


def test_x_representation_near_singular_points():
    basis = WannierBasis(n_x=4, n_p=4)
    center = 2.0 * math.pi * 1 / 4
    xs = center + np.array([0.0, 1e-9, -1e-9, 1e-12])
    vals = x_representation(basis, 1, 2, xs)
    assert np.all(np.isfinite(vals))
    peak = math.sqrt(basis.n_x / (2.0 * math.pi))
    assert np.max(np.abs(np.abs(vals) - peak)) < 1e-6


def test_states_normalized_in_x():
    # quadrature over one angle period of the closed form
    basis = WannierBasis(n_x=4, n_p=4)
    xs = np.linspace(0.0, 2.0 * math.pi, 4097)[:-1]
    vals = x_representation(basis, 2, 1, xs)
    norm = np.sum(np.abs(vals) ** 2) * (2.0 * math.pi / 4096)
    assert norm == pytest.approx(1.0, rel=1e-10)


def test_map_image_pure_shear():
    # K=0 evolution moves cell (X, P) by the exact vertical-advance map,
    # so every argmax must land within one cell of the image
    params = ModelParams(K=0.0, M=3, n_x=16, n_p=16)
    v = build_v(params)
    basis = WannierBasis(n_x=16, n_p=16)
    cells = [(0, 0), (3, 7), (12, 2), (9, 15), (5, 5)]
    report = semiclassical_map_check(v, basis, cells)
    assert report.fraction_within_one == 1.0


def test_map_image_kicked_concentration():
    params = ModelParams(K=2.0, M=1, n_x=32, n_p=32)
    v = build_v(params)
    basis = WannierBasis(n_x=32, n_p=32)
    rng = np.random.default_rng(0)
    cells = [(int(cx), int(cp)) for cx, cp in
             rng.integers(0, 32, size=(12, 2))]
    report = semiclassical_map_check(v, basis, cells)
    assert report.fraction_within_one >= 0.75
    assert report.mean_displacement < 1.5


def test_basis_validation():
    with pytest.raises(Exception):
        WannierBasis(n_x=0, n_p=4)
