"""Gauge-invariant spin-network basis and the physical Hilbert space dimension."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .electric import ElectricSpectrum
from .group import GroupTable
from .lattice import LatticeGraph, site_links
from .representation import InvariantBasis, IrrepSet, SiteSignature, invariant_basis

__all__ = [
    "BasisError",
    "SpinNetworkBasis",
    "physical_dimension",
    "enumerate_basis",
    "electric_diagonal",
    "site_invariant_table",
]

logger = logging.getLogger(__name__)

DEFAULT_STATE_CAP = 10_000_000


class BasisError(RuntimeError):
    pass


def physical_dimension(G: GroupTable, n_links: int, n_sites: int) -> int:
    """sum over classes C of (|G|/|C|)^(L - V), evaluated exactly."""
    e = n_links - n_sites
    if e < -1:
        raise ValueError(f"L - V = {e} < -1 is impossible for a connected graph")
    total = sum(Fraction(G.order, len(c)) ** e for c in G.classes)
    if total.denominator != 1:
        raise ArithmeticError(f"dimension sum {total} is not an integer")
    return int(total)


def site_invariant_table(S: IrrepSet, duals: tuple[bool, ...]) -> np.ndarray:
    """dim Inv for every irrep choice on the slots, shape (n_irr,) * len(duals)."""
    chi = S.chi
    n = len(S)
    acc = np.ones(S.group.order, dtype=np.complex128)
    for k, dual in enumerate(duals):
        c = np.conj(chi) if dual else chi  # (n, |G|)
        acc = acc[..., None, :] * c.reshape((1,) * k + (n, S.group.order))
    vals = acc.sum(axis=-1) / S.group.order
    out = np.rint(vals.real)
    if np.max(np.abs(vals - out), initial=0.0) > 1e-9:
        raise ArithmeticError("character counts are not integers")
    return out.astype(np.int64)


@dataclass(frozen=True, eq=False)
class SpinNetworkBasis:
    """States ordered by (link irreps, invariant-tensor choice per site).

    ``assignments[i]`` lists an irrep per link; the states sharing it are
    ``offsets[i] .. offsets[i+1]`` with per-site choices enumerated in
    mixed radix ``inv_dims[i]`` (last site fastest).
    """

    irreps: IrrepSet
    lattice: LatticeGraph
    assignments: np.ndarray  # (n_assign, L)
    inv_dims: np.ndarray  # (n_assign, V)
    offsets: np.ndarray  # (n_assign + 1,)
    tensors: dict  # SiteSignature -> InvariantBasis

    @property
    def group(self) -> GroupTable:
        return self.irreps.group

    def __len__(self) -> int:
        return int(self.offsets[-1])

    @property
    def n_states(self) -> int:
        return len(self)

    def signature(self, assignment, x: int) -> SiteSignature:
        return SiteSignature(tuple((int(assignment[l]), dual) for l, dual in site_links(self.lattice, x)))

    def site_basis(self, assignment, x: int) -> InvariantBasis:
        return self.tensors[self.signature(assignment, x)]

    def state_assignment_index(self) -> np.ndarray:
        """Assignment row of every state."""
        return np.repeat(np.arange(len(self.assignments)), np.diff(self.offsets))

    def state_choices(self) -> np.ndarray:
        """(n_states, V) invariant-tensor choice of every state."""
        owner = self.state_assignment_index()
        local = np.arange(len(self)) - self.offsets[owner]
        dims = self.inv_dims[owner]
        out = np.empty_like(dims)
        for x in range(dims.shape[1] - 1, -1, -1):
            out[:, x] = local % dims[:, x]
            local = local // dims[:, x]
        return out

    def state(self, i: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if not 0 <= i < len(self):
            raise IndexError(i)
        a = int(np.searchsorted(self.offsets, i, side="right") - 1)
        local = i - int(self.offsets[a])
        choice = []
        for d in self.inv_dims[a][::-1]:
            choice.append(local % int(d))
            local //= int(d)
        return tuple(int(v) for v in self.assignments[a]), tuple(reversed(choice))

    def index(self, assignment, choice) -> int:
        row = np.asarray(assignment, dtype=self.assignments.dtype)
        # assignments are lexicographically sorted
        lo, hi = 0, len(self.assignments)
        while lo < hi:
            mid = (lo + hi) // 2
            if tuple(self.assignments[mid]) < tuple(row):
                lo = mid + 1
            else:
                hi = mid
        if lo == len(self.assignments) or not np.array_equal(self.assignments[lo], row):
            raise KeyError(f"assignment {tuple(assignment)} is not gauge invariant")
        local = 0
        for c, d in zip(choice, self.inv_dims[lo]):
            if not 0 <= c < d:
                raise KeyError(f"choice {tuple(choice)} out of range {tuple(self.inv_dims[lo])}")
            local = local * int(d) + int(c)
        return int(self.offsets[lo]) + local

    def is_real(self) -> bool:
        return self.irreps.is_real and all(not np.iscomplexobj(b.tensors) for b in self.tensors.values())


def enumerate_basis(
    S: IrrepSet, lat: LatticeGraph, cap: int = DEFAULT_STATE_CAP, product_cap: int | None = None
) -> SpinNetworkBasis:
    """Enumerate all gauge-invariant (assignment, choice) pairs.

    Links are assigned in ascending id; as soon as every link at a site is
    fixed, partial assignments whose site carries no invariant are dropped
    (character count, no tensors). Tensors are built only for the surviving
    signatures.
    """
    G = S.group
    expected = physical_dimension(G, lat.n_links, lat.n_sites)
    if expected > cap:
        raise BasisError(f"physical dimension {expected} exceeds the state cap {cap}")
    n_irr = len(S)
    L, V = lat.n_links, lat.n_sites
    slots = [site_links(lat, x) for x in range(V)]
    tables = {}
    for x in range(V):
        duals = tuple(d for _, d in slots[x])
        if duals not in tables:
            tables[duals] = site_invariant_table(S, duals)
    last_link = [max(l for l, _ in slots[x]) if slots[x] else -1 for x in range(V)]
    completes: dict[int, list[int]] = {}
    for x in range(V):
        completes.setdefault(last_link[x], []).append(x)

    dtype = np.int8 if n_irr < 127 else np.int32
    frontier = np.zeros((1, 0), dtype=dtype)
    for l in range(L):
        k = len(frontier)
        frontier = np.concatenate(
            [np.repeat(frontier, n_irr, axis=0), np.tile(np.arange(n_irr, dtype=dtype), k)[:, None]], axis=1
        )
        for x in completes.get(l, ()):
            links = [lid for lid, _ in slots[x]]
            tab = tables[tuple(d for _, d in slots[x])]
            keep = tab[tuple(frontier[:, lid] for lid in links)] > 0
            frontier = frontier[keep]
        if len(frontier) > 50 * cap:
            raise BasisError(f"partial assignment frontier ({len(frontier)}) exceeds the cap")

    inv_dims = np.empty((len(frontier), V), dtype=np.int64)
    for x in range(V):
        links = [lid for lid, _ in slots[x]]
        if not links:
            inv_dims[:, x] = 1
            continue
        tab = tables[tuple(d for _, d in slots[x])]
        inv_dims[:, x] = tab[tuple(frontier[:, lid] for lid in links)]
    counts = np.prod(inv_dims, axis=1)
    offsets = np.zeros(len(frontier) + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    total = int(offsets[-1])
    if total != expected:
        raise BasisError(f"enumerated {total} states but the closed form gives {expected}")

    tensors: dict[SiteSignature, InvariantBasis] = {}
    kw = {} if product_cap is None else {"cap": product_cap}
    for x in range(V):
        links = [lid for lid, _ in slots[x]]
        if not links:
            continue
        duals = [d for _, d in slots[x]]
        for row in np.unique(frontier[:, links], axis=0):
            sig = SiteSignature.from_lists(row.tolist(), duals)
            if sig not in tensors:
                tensors[sig] = invariant_basis(S, sig, **kw)
    logger.info("spin-network basis: %d assignments, %d states, %d signatures", len(frontier), total, len(tensors))
    frontier.setflags(write=False)
    inv_dims.setflags(write=False)
    offsets.setflags(write=False)
    return SpinNetworkBasis(S, lat, frontier, inv_dims, offsets, tensors)


def electric_diagonal(basis: SpinNetworkBasis, spec: ElectricSpectrum) -> np.ndarray:
    """sum over links of f(j_l) for every state."""
    f = np.asarray(spec.f, dtype=float)
    if len(f) != len(basis.irreps):
        raise ValueError("electric spectrum does not cover every irrep")
    per_assignment = f[basis.assignments.astype(np.int64)].sum(axis=1)
    return np.repeat(per_assignment, np.diff(basis.offsets))
