"""Shared fixtures: cached eigensystems and the acceptance report.

Heavy diagonalizations are cached per session.  Area spectra (small) are
kept for every parameter set; full cell-probability matrices are kept only
at desk scale or for the one large parameter set several tests share, so
peak memory stays bounded.
"""

import numpy as np
import pytest

from kamrotor.floquet import ModelParams, build_v, diagonalize
from kamrotor.observables import area_spectrum, _cell_probabilities
from kamrotor.wannier import WannierBasis

# cell-probability matrices above this N are kept only for _ALWAYS_KEEP
_PROBS_CACHE_DIM = 2048
_ALWAYS_KEEP = {(2.0, 1, 64, 64, 0.0)}


class EigenStore:
    def __init__(self):
        self._spectra = {}
        self._probs = {}
        self._eigs = {}

    @staticmethod
    def _key(K, n_x, n_p, M, theta):
        return (float(K), int(M), int(n_x), int(n_p), float(theta))

    def spectrum(self, K, n_x, n_p=None, M=1, theta=0.0):
        n_p = n_x if n_p is None else n_p
        key = self._key(K, n_x, n_p, M, theta)
        if key not in self._spectra:
            self._build(key)
        return self._spectra[key]

    def cell_probs(self, K, n_x, n_p=None, M=1, theta=0.0):
        n_p = n_x if n_p is None else n_p
        key = self._key(K, n_x, n_p, M, theta)
        if key not in self._probs:
            self._build(key, want_probs=True)
        return self._probs[key]

    def eigensystem(self, K, n_x, n_p=None, M=1, theta=0.0):
        """(EigenDecomposition, WannierBasis) pair, cached like the probs."""
        n_p = n_x if n_p is None else n_p
        key = self._key(K, n_x, n_p, M, theta)
        if key not in self._eigs:
            self._build(key, want_eig=True)
        return self._eigs[key]

    def _build(self, key, want_probs=False, want_eig=False):
        K, M, n_x, n_p, theta = key
        params = ModelParams(K=K, M=M, n_x=n_x, n_p=n_p, theta=theta)
        eig = diagonalize(build_v(params))
        basis = WannierBasis(n_x=n_x, n_p=n_p)
        probs = _cell_probabilities(eig, basis)
        self._spectra[key] = area_spectrum(eig, basis, cell_probs=probs)
        keep = params.n_states <= _PROBS_CACHE_DIM or key in _ALWAYS_KEEP
        if want_probs or keep:
            self._probs[key] = probs
        if want_eig or keep:
            self._eigs[key] = (eig, basis)


@pytest.fixture(scope="session")
def eigen_store():
    return EigenStore()


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(num, title): numbered acceptance criterion check")
    config._acceptance_results = {}


def pytest_collection_modifyitems(items):
    # run acceptance checks in criterion order after the unit tests
    def sort_key(item):
        mark = item.get_closest_marker("acceptance")
        return (1, int(mark.args[0])) if mark else (0, 0)
    items.sort(key=sort_key)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark and report.when == "call":
        num, title = int(mark.args[0]), mark.args[1]
        item.config._acceptance_results[num] = (title, report.outcome)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance_results", {})
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(results):
        title, outcome = results[num]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {title}")
