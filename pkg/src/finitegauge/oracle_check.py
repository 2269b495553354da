"""Side-by-side comparison of the spin-network pipeline with the brute-force oracle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .electric import GammaSet, electric_levels, gamma_preset, validate_gamma
from .group import GroupTable, build_cyclic, build_dihedral
from .hamiltonian import ClassFunction, build_hamiltonian, class_function
from .lattice import LatticeGraph, hypercubic
from .oracle import burnside_count, commutator_norm, full_hamiltonian, gauge_projector, projected_spectrum
from .representation import builtin_irreps
from .spectra import dense_eig
from .spin_network import enumerate_basis, physical_dimension

__all__ = ["OracleCase", "standard_cases", "compare_case", "run_oracle_checks"]

DEFAULT_LAMS = (0.0, 0.3, 0.5, 0.7, 1.0)
SPECTRUM_TOL = 1e-8
COMMUTATOR_TOL = 1e-10


@dataclass(frozen=True)
class OracleCase:
    label: str
    group: GroupTable
    lattice: LatticeGraph
    gamma: GammaSet
    magnetic: ClassFunction


def _cyclic_case(n: int, lat: LatticeGraph, label: str) -> OracleCase:
    G = build_cyclic(n)
    S = builtin_irreps(G)
    gamma = validate_gamma(G, sorted({1, n - 1}))
    # -(chi_1 + chi_{n-1}) = -2 cos(2 pi k / n), real for every n
    coeffs = {1: -1.0, n - 1: -1.0} if n > 2 else {1: -2.0}
    return OracleCase(label, G, lat, gamma, class_function(S, coeffs))


def standard_cases() -> list[OracleCase]:
    """The four small systems used for cross-validation."""
    plaquette = hypercubic([2, 2], periodic=False)
    torus = hypercubic([2, 2], periodic=True)
    D4 = build_dihedral(4)
    return [
        _cyclic_case(2, plaquette, "Z2 plaquette"),
        _cyclic_case(2, torus, "Z2 2x2 periodic"),
        _cyclic_case(3, plaquette, "Z3 2x2 open"),
        OracleCase("D4 plaquette", D4, plaquette, gamma_preset(D4, "gamma1"), class_function(builtin_irreps(D4), {4: -2.0})),
    ]


def compare_case(case: OracleCase, lams: Sequence[float] = DEFAULT_LAMS) -> list[dict]:
    """Rows of (case, check, value, ok) for one system."""
    G, lat = case.group, case.lattice
    S = case.magnetic.irreps
    rows = []

    def add(check: str, value: float, ok: bool):
        rows.append({"case": case.label, "check": check, "value": float(value), "ok": bool(ok)})

    dim = physical_dimension(G, lat.n_links, lat.n_sites)
    P = gauge_projector(G, lat)
    trace = float(P.matrix.diagonal().sum())
    add("projector trace", abs(trace - dim), round(trace) == dim and abs(trace - dim) < 1e-9)
    orbits = burnside_count(G, lat)
    add("burnside count", abs(orbits - dim), orbits == dim)
    add("projector idempotence", P.idempotency_error(), P.idempotency_error() < 1e-12)

    basis = enumerate_basis(S, lat)
    add("basis count", abs(len(basis) - dim), len(basis) == dim)
    Hs = build_hamiltonian(basis, electric_levels(G, case.gamma, S), case.magnetic)
    for lam in lams:
        H = full_hamiltonian(G, lat, case.gamma.members.members, case.magnetic, lam)
        comm = commutator_norm(H.matrix, P.matrix)
        add(f"[H,P] lambda={lam:g}", comm, comm < COMMUTATOR_TOL)
        k = min(5, dim)
        ref = projected_spectrum(G, lat, case.gamma.members.members, case.magnetic, lam, k)
        got = dense_eig(Hs.dense(lam)).values[:k]
        err = float(np.max(np.abs(ref - got)))
        add(f"spectrum lambda={lam:g}", err, err < SPECTRUM_TOL)
    return rows


def run_oracle_checks(cases: Sequence[OracleCase] | None = None, lams: Sequence[float] = DEFAULT_LAMS) -> list[dict]:
    rows = []
    for case in cases if cases is not None else standard_cases():
        rows.extend(compare_case(case, lams))
    return rows
