from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from finitegauge import build_cyclic, build_dihedral, build_symmetric, builtin_irreps, hypercubic
from finitegauge.electric import electric_levels, gamma_preset
from finitegauge.hamiltonian import class_function, magnetic_matrix
from finitegauge.spin_network import enumerate_basis

DATA = Path(__file__).parent / "data"

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def D4():
    return build_dihedral(4)


@pytest.fixture(scope="session")
def D4_irreps(D4):
    return builtin_irreps(D4)


@pytest.fixture(scope="session")
def S5():
    return build_symmetric(5)


@pytest.fixture(scope="session")
def torus_basis(D4_irreps):
    """D4 spin-network basis on the 2x2 periodic lattice (8960 states)."""
    return enumerate_basis(D4_irreps, hypercubic([2, 2], periodic=True))


@pytest.fixture(scope="session")
def torus_magnetic(torus_basis, D4_irreps):
    """Magnetic matrix for h_B = -2 chi_4, shared by all generating-set presets."""
    return magnetic_matrix(torus_basis, class_function(D4_irreps, {4: -2.0}))


@pytest.fixture(scope="session")
def torus_hamiltonians(torus_basis, torus_magnetic, D4, D4_irreps):
    from finitegauge.hamiltonian import SparseHamiltonian
    from finitegauge.spin_network import electric_diagonal

    out = {}
    for name in ("gamma1", "gamma2", "gamma3"):
        spec = electric_levels(D4, gamma_preset(D4, name), D4_irreps)
        out[name] = SparseHamiltonian.from_parts(electric_diagonal(torus_basis, spec), torus_magnetic)
    return out


def six_dim_irrep_s5(G) -> np.ndarray:
    """Exterior square of the 4-dim standard representation of S5.

    The standard rep is the permutation action restricted to the sum-zero
    subspace; its exterior square is the 6-dim irrep whose character is 1 on
    5-cycles and at most 0 on every other non-identity class.
    """
    n = 5
    perms = []
    for name in G.names:
        perms.append(list(range(n)) if name == "e" else [int(c) - 1 for c in name])
    # orthonormal basis of the sum-zero subspace
    Q, _ = np.linalg.qr(np.eye(n)[:, : n - 1] - 1.0 / n)
    pairs = [(i, j) for i in range(n - 1) for j in range(i + 1, n - 1)]
    mats = np.empty((G.order, len(pairs), len(pairs)))
    for g, p in enumerate(perms):
        P = np.zeros((n, n))
        P[p, np.arange(n)] = 1.0  # e_i -> e_{p(i)}
        A = Q.T @ P @ Q
        for r, (i, j) in enumerate(pairs):
            for c, (k, l) in enumerate(pairs):
                mats[g, r, c] = A[i, k] * A[j, l] - A[i, l] * A[j, k]
    return mats


@pytest.fixture(scope="session")
def s5_six_dim(S5):
    return six_dim_irrep_s5(S5)
