"""Brute-force reference in the full group-element basis.

Everything here works on configurations ``(g_0, ..., g_{L-1})`` directly
and avoids the representation-basis machinery, so the two pipelines can
be compared. Configuration index: link 0 is the most significant digit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .group import GroupTable, generators
from .lattice import LatticeGraph

__all__ = [
    "OracleError",
    "FullBasisOperator",
    "configurations",
    "full_hamiltonian",
    "gauge_operator",
    "gauge_projector",
    "gauge_orbits",
    "burnside_count",
    "projected_spectrum",
    "link_electric_matrix",
    "commutator_norm",
]

SIZE_CAP = 1_000_000


class OracleError(RuntimeError):
    pass


@dataclass
class FullBasisOperator:
    matrix: sp.csr_matrix
    group: GroupTable
    lattice: LatticeGraph
    kind: str

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_error(self) -> float:
        D = self.matrix - self.matrix.conj().T
        return float(np.max(np.abs(D.data), initial=0.0))

    def unitarity_error(self) -> float:
        D = self.matrix.conj().T @ self.matrix - sp.identity(self.dimension, format="csr")
        return float(np.max(np.abs(D.data), initial=0.0))

    def idempotency_error(self) -> float:
        D = self.matrix @ self.matrix - self.matrix
        return float(np.max(np.abs(D.data), initial=0.0))


def _check_size(G: GroupTable, lat: LatticeGraph, cap: int = SIZE_CAP) -> int:
    n = G.order**lat.n_links
    if n > cap:
        raise OracleError(f"|G|^L = {n} exceeds the oracle cap {cap}")
    return n


def configurations(G: GroupTable, lat: LatticeGraph, cap: int = SIZE_CAP) -> np.ndarray:
    """(|G|^L, L) array of link variables, row c is configuration c."""
    n = _check_size(G, lat, cap)
    L = lat.n_links
    if L == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.stack(np.unravel_index(np.arange(n), (G.order,) * L), axis=1).astype(np.int64)


def _encode(G: GroupTable, conf: np.ndarray) -> np.ndarray:
    L = conf.shape[1]
    weights = G.order ** np.arange(L - 1, -1, -1, dtype=np.int64)
    return conf @ weights


def _loop_product(G: GroupTable, conf: np.ndarray, loop) -> np.ndarray:
    """Oriented ordered product of link variables around a loop."""
    acc = np.full(len(conf), G.identity, dtype=np.int64)
    for l, o in loop:
        g = conf[:, l] if o > 0 else G.inv[conf[:, l]]
        acc = G.mul[acc, g]
    return acc


def link_electric_matrix(G: GroupTable, gamma: Iterable[int]) -> np.ndarray:
    """sum_{k in Gamma} (1 - L_k) on one link, L_k |g> = |k g>."""
    gamma = list(gamma)
    M = len(gamma) * np.eye(G.order)
    for k in gamma:
        for g in range(G.order):
            M[G.mul[k, g], g] -= 1.0
    return M


def _values(G: GroupTable, hB) -> np.ndarray:
    vals = np.asarray(getattr(hB, "values", hB), dtype=float)
    if vals.shape != (G.order,):
        raise OracleError("magnetic term must give one value per group element")
    return vals


def full_hamiltonian(
    G: GroupTable, lat: LatticeGraph, gamma: Iterable[int], hB, lam: float, cap: int = SIZE_CAP
) -> FullBasisOperator:
    """(1 - lam) sum_links h_E + lam sum_loops h_B(g_loop) on all configurations."""
    gamma = [int(k) for k in gamma]
    conf = configurations(G, lat, cap)
    n = len(conf)
    codes = np.arange(n)
    rows, cols, vals = [], [], []
    diag = np.full(n, (1 - lam) * len(gamma) * lat.n_links, dtype=float)
    for l in range(lat.n_links):
        for k in gamma:
            moved = conf.copy()
            moved[:, l] = G.mul[k, conf[:, l]]
            rows.append(_encode(G, moved))
            cols.append(codes)
            vals.append(np.full(n, -(1 - lam)))
    hv = _values(G, hB)
    for loop in lat.plaquettes:
        diag += lam * hv[_loop_product(G, conf, loop)]
    rows.append(codes)
    cols.append(codes)
    vals.append(diag)
    M = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)).tocsr()
    M.sum_duplicates()
    M.eliminate_zeros()
    return FullBasisOperator(M, G, lat, "hamiltonian")


def _gauge_permutation(G: GroupTable, lat: LatticeGraph, conf: np.ndarray, site_elems: Sequence[int]) -> np.ndarray:
    """Image index of every configuration under g_l -> g_source g_l g_target^-1."""
    h = np.asarray(site_elems, dtype=np.int64)
    moved = np.empty_like(conf)
    for l, (s, t) in enumerate(lat.links):
        moved[:, l] = G.mul[G.mul[h[s], conf[:, l]], G.inv[h[t]]]
    return _encode(G, moved)


def gauge_operator(G: GroupTable, lat: LatticeGraph, site_elems: Sequence[int], cap: int = SIZE_CAP) -> FullBasisOperator:
    """Permutation matrix of the gauge transformation with the given site elements."""
    if len(site_elems) != lat.n_sites:
        raise OracleError(f"need one element per site ({lat.n_sites}), got {len(site_elems)}")
    conf = configurations(G, lat, cap)
    n = len(conf)
    image = _gauge_permutation(G, lat, conf, site_elems)
    M = sp.csr_matrix((np.ones(n), (image, np.arange(n))), shape=(n, n))
    return FullBasisOperator(M, G, lat, "gauge")


def _generator_perms(G: GroupTable, lat: LatticeGraph, conf: np.ndarray) -> np.ndarray:
    perms = []
    for x in range(lat.n_sites):
        for g in generators(G):
            elems = [G.identity] * lat.n_sites
            elems[x] = g
            perms.append(_gauge_permutation(G, lat, conf, elems))
    return np.array(perms, dtype=np.int64)


def gauge_orbits(G: GroupTable, lat: LatticeGraph, cap: int = SIZE_CAP) -> np.ndarray:
    """Orbit label (least member) of every configuration under gauge moves."""
    conf = configurations(G, lat, cap)
    if lat.n_links == 0:
        return np.zeros(1, dtype=np.int64)
    return np.asarray(_kernels.orbit_labels(_generator_perms(G, lat, conf)))


def burnside_count(G: GroupTable, lat: LatticeGraph, cap: int = SIZE_CAP, budget: int = 50_000_000) -> int:
    """Number of orbits = average number of fixed configurations over all |G|^V gauge elements."""
    conf = configurations(G, lat, cap)
    n_assign = G.order**lat.n_sites
    if n_assign * len(conf) > budget:
        raise OracleError(f"Burnside sum needs {n_assign * len(conf)} checks, over budget {budget}")
    total = 0
    codes = np.arange(len(conf))
    for a in range(n_assign):
        elems = np.unravel_index(a, (G.order,) * lat.n_sites)
        total += int(np.count_nonzero(_gauge_permutation(G, lat, conf, elems) == codes))
    if total % n_assign:
        raise OracleError("Burnside average is not an integer")
    return total // n_assign


def _orbit_basis(labels: np.ndarray) -> sp.csr_matrix:
    reps, col = np.unique(labels, return_inverse=True)
    sizes = np.bincount(col)
    n = len(labels)
    return sp.csr_matrix((1.0 / np.sqrt(sizes[col]), (np.arange(n), col)), shape=(n, len(reps)))


def gauge_projector(G: GroupTable, lat: LatticeGraph, cap: int = SIZE_CAP) -> FullBasisOperator:
    """Average of all gauge transformations.

    Gauge transformations permute configurations, so their average is the
    orthogonal projector onto functions constant on gauge orbits, W W^T
    with W the normalised orbit indicators.
    """
    W = _orbit_basis(gauge_orbits(G, lat, cap))
    return FullBasisOperator((W @ W.T).tocsr(), G, lat, "projector")


def commutator_norm(A: sp.spmatrix, B: sp.spmatrix) -> float:
    D = (A @ B - B @ A).tocsr()
    return float(np.max(np.abs(D.data), initial=0.0))


def projected_spectrum(
    G: GroupTable, lat: LatticeGraph, gamma: Iterable[int], hB, lam: float, k: int | None = None, cap: int = SIZE_CAP
) -> np.ndarray:
    """Lowest k eigenvalues of H restricted to the gauge-invariant subspace."""
    H = full_hamiltonian(G, lat, gamma, hB, lam, cap).matrix
    W = _orbit_basis(gauge_orbits(G, lat, cap))
    Hp = (W.T @ H @ W).toarray()
    w = np.linalg.eigvalsh((Hp + Hp.T) / 2)
    return w if k is None else w[:k]
