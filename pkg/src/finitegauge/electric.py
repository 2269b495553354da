"""Generating sets, Cayley-graph Laplacians and single-link electric energies."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .group import GroupTable, Subset, generated_subgroup
from .representation import Irrep, IrrepSet

__all__ = [
    "GammaError",
    "Provenance",
    "GammaSet",
    "ElectricSpectrum",
    "D4_PRESETS",
    "validate_gamma",
    "gamma_preset",
    "transfer_matrix_gamma",
    "cayley_laplacian",
    "electric_levels",
    "ground_degeneracy",
    "valid_gamma_unions",
]

DENSE_CAP = 4096

# named generating sets for D_4, written with build_dihedral's element names
D4_PRESETS = {
    "gamma1": ("r", "r3", "s", "r2s"),
    "gamma2": ("r", "r3", "s", "rs", "r2s", "r3s"),
    "gamma3": ("r", "r2", "r3"),
}


class GammaError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid generating set: " + "; ".join(violations))


class Provenance(enum.Enum):
    EXPLICIT = "explicit"
    TRANSFER_MATRIX = "transfer-matrix"


@dataclass(frozen=True)
class GammaSet:
    members: Subset
    provenance: Provenance = Provenance.EXPLICIT

    @property
    def group(self) -> GroupTable:
        return self.members.parent

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def names(self) -> list[str]:
        return self.members.names()


@dataclass(frozen=True)
class ElectricSpectrum:
    """f(j) for each irrep plus the single-link ground-state degeneracy."""

    f: np.ndarray
    dims: np.ndarray
    degeneracy: int

    def __getitem__(self, j: int) -> float:
        return float(self.f[j])

    def multiset(self) -> np.ndarray:
        """Sorted f(j), each repeated dim(j)^2 times."""
        return np.sort(np.repeat(self.f, self.dims**2))

    def rows(self) -> list[tuple[int, int, float]]:
        return [(j, int(d), float(v)) for j, (d, v) in enumerate(zip(self.dims, self.f))]


def validate_gamma(
    G: GroupTable, members: Subset | Iterable[int | str], provenance: Provenance = Provenance.EXPLICIT
) -> GammaSet:
    """Check identity-freeness, inversion closure and conjugation closure.

    Every violated condition is reported, not just the first.
    """
    sub = members if isinstance(members, Subset) else Subset.of(G, members)
    inside = np.zeros(G.order, dtype=bool)
    inside[list(sub.members)] = True
    problems = []
    if inside[G.identity]:
        problems.append(f"identity: {G.names[G.identity]} is a member")
    for g in sub.members:
        if not inside[G.inv[g]]:
            problems.append(f"inversion: {G.names[g]} is a member but its inverse {G.names[G.inv[g]]} is not")
    for h in sub.members:
        for g in range(G.order):
            c = G.conjugate(g, h)
            if not inside[c]:
                problems.append(
                    f"conjugation: {G.names[g]} {G.names[h]} {G.names[g]}^-1 = {G.names[c]} is not a member"
                )
                break
    if problems:
        raise GammaError(problems)
    return GammaSet(sub, provenance)


def gamma_preset(G: GroupTable, name: str) -> GammaSet:
    """The named D_4 sets gamma1, gamma2, gamma3."""
    if G.family != ("dihedral", 4):
        raise ValueError(f"preset {name!r} is defined for D4 only")
    key = name.lower().replace("_", "").replace("γ", "gamma")
    if key in ("g1", "g2", "g3"):
        key = "gamma" + key[1]
    if key not in D4_PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(D4_PRESETS)}")
    return validate_gamma(G, D4_PRESETS[key])


def transfer_matrix_gamma(G: GroupTable, rep: Irrep | np.ndarray, tol: float = 1e-9) -> GammaSet:
    """Non-identity elements maximising Re tr rho(g); ties all included."""
    mats = rep.matrices if isinstance(rep, Irrep) else np.asarray(rep)
    re_tr = np.trace(mats, axis1=1, axis2=2).real.copy()
    re_tr[G.identity] = -np.inf
    best = re_tr.max()
    members = [g for g in range(G.order) if g != G.identity and abs(re_tr[g] - best) < tol]
    return validate_gamma(G, members, Provenance.TRANSFER_MATRIX)


def cayley_laplacian(G: GroupTable, gamma: GammaSet, cap: int = DENSE_CAP) -> np.ndarray:
    """|Gamma| I - A with A[g, h] = 1 iff g h^-1 is in Gamma."""
    if G.order > cap:
        raise MemoryError(f"|G| = {G.order} exceeds the dense cap {cap}")
    inside = np.zeros(G.order, dtype=bool)
    inside[list(gamma.members.members)] = True
    A = inside[G.mul[:, G.inv]].astype(float)  # mul[g, inv[h]]
    return len(gamma) * np.eye(G.order) - A


def electric_levels(G: GroupTable, gamma: GammaSet, S: IrrepSet) -> ElectricSpectrum:
    """f(j) = |Gamma| - (1/dim j) sum_{k in Gamma} chi_j(k)."""
    members = list(gamma.members.members)
    chi = S.chi[:, members].sum(axis=1) if members else np.zeros(len(S), dtype=complex)
    f = len(members) - chi / S.dims
    if np.max(np.abs(f.imag), initial=0.0) >= 1e-9:
        raise ArithmeticError(f"electric energies have imaginary parts {f.imag}")
    f = f.real.copy()
    f[np.abs(f) < 1e-12] = 0.0
    return ElectricSpectrum(f=f, dims=S.dims, degeneracy=ground_degeneracy(G, gamma))


def ground_degeneracy(G: GroupTable, gamma: GammaSet) -> int:
    """|G| / |<Gamma>|, the number of Cayley-graph components."""
    return generated_subgroup(G, gamma.members).index


def valid_gamma_unions(G: GroupTable) -> list[GammaSet]:
    """Every non-empty valid Gamma built from non-identity conjugacy classes."""
    classes = [c for c in G.classes if G.identity not in c]
    out = []
    for mask in range(1, 2 ** len(classes)):
        members = [g for i, c in enumerate(classes) if mask >> i & 1 for g in c]
        try:
            out.append(validate_gamma(G, members))
        except GammaError:
            continue
    return out
