"""Finite groups as multiplication tables.

Every group in the package is a dense table over element indices
``0..|G|-1``; higher layers never see anything but those indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "GroupTableError",
    "GroupTable",
    "Subset",
    "GeneratedSubgroup",
    "build_cyclic",
    "build_dihedral",
    "build_symmetric",
    "load_group_table",
    "write_group_table",
    "conjugacy_classes",
    "generated_subgroup",
    "generators",
]

EXHAUSTIVE_ASSOC_ORDER = 120
ASSOC_SAMPLES = 100_000
MAX_SYMMETRIC_DEGREE = 6


class GroupTableError(ValueError):
    """A table that does not satisfy the group axioms, or malformed input."""


@dataclass(frozen=True, eq=False)
class GroupTable:
    """A finite group given by its multiplication table.

    ``mul[g, h]`` is the index of ``g*h``; ``inv[g]`` the index of ``g^-1``.
    ``family`` records how a built-in group was constructed, e.g.
    ``("dihedral", 4)``, so that analytic irreps can be attached later.
    """

    mul: np.ndarray
    inv: np.ndarray
    identity: int
    classes: tuple[tuple[int, ...], ...]
    names: tuple[str, ...]
    family: tuple[str, int] | None = None
    _class_of: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        class_of = np.empty(self.order, dtype=np.int64)
        for c, members in enumerate(self.classes):
            class_of[list(members)] = c
        object.__setattr__(self, "_class_of", class_of)
        self.mul.setflags(write=False)
        self.inv.setflags(write=False)
        class_of.setflags(write=False)

    @property
    def order(self) -> int:
        return int(self.mul.shape[0])

    @property
    def class_of(self) -> np.ndarray:
        """Conjugacy-class index of every element."""
        return self._class_of

    @property
    def class_sizes(self) -> np.ndarray:
        return np.array([len(c) for c in self.classes], dtype=np.int64)

    @property
    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mul, self.mul.T))

    def index(self, name: str | int) -> int:
        """Element index from a display name (integers pass through)."""
        if isinstance(name, (int, np.integer)):
            if not 0 <= int(name) < self.order:
                raise IndexError(f"element index {name} out of range for order {self.order}")
            return int(name)
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no element named {name!r}") from None

    def conjugate(self, g: int, h: int) -> int:
        """Return the index of g h g^-1."""
        return int(self.mul[self.mul[g, h], self.inv[g]])

    def element_order(self, g: int) -> int:
        k, x = 1, g
        while x != self.identity:
            x = self.mul[x, g]
            k += 1
        return k

    def same_table(self, other: "GroupTable") -> bool:
        return (
            self.identity == other.identity
            and np.array_equal(self.mul, other.mul)
            and np.array_equal(self.inv, other.inv)
        )

    def __eq__(self, other):
        if not isinstance(other, GroupTable):
            return NotImplemented
        return self.same_table(other) and self.names == other.names and self.classes == other.classes

    def __hash__(self):
        return hash((self.order, self.mul.tobytes()))


@dataclass(frozen=True)
class Subset:
    """Sorted, duplicate-free set of element indices of ``parent``."""

    parent: GroupTable = field(repr=False, compare=False)
    members: tuple[int, ...]

    @classmethod
    def of(cls, group: GroupTable, elements: Iterable[int | str]) -> "Subset":
        idx = sorted({group.index(e) for e in elements})
        return cls(group, tuple(idx))

    def __contains__(self, g) -> bool:
        return int(g) in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def names(self) -> list[str]:
        return [self.parent.names[g] for g in self.members]


class GeneratedSubgroup(NamedTuple):
    subgroup: Subset
    index: int
    cosets: tuple[tuple[int, ...], ...]


def _validate_table(mul: np.ndarray, rng_seed: int = 0) -> tuple[int, np.ndarray]:
    """Check the group axioms; return (identity, inverse table)."""
    n = mul.shape[0]
    if mul.ndim != 2 or mul.shape != (n, n) or n == 0:
        raise GroupTableError("multiplication table must be a non-empty square matrix")
    if mul.min() < 0 or mul.max() >= n:
        raise GroupTableError("closure: table entries must be element indices in 0..N-1")
    ar = np.arange(n)
    ids = [e for e in range(n) if np.array_equal(mul[e], ar) and np.array_equal(mul[:, e], ar)]
    if not ids:
        raise GroupTableError("identity: no element e with e*g = g*e = g for all g")
    e = ids[0]
    hits = mul == e
    inv = np.argmax(hits, axis=1)
    if not hits.any(axis=1).all() or not np.all(mul[inv, ar] == e):
        bad = int(np.flatnonzero(~hits.any(axis=1) | (mul[inv, ar] != e))[0])
        raise GroupTableError(f"inverses: element {bad} has no two-sided inverse")
    if n <= EXHAUSTIVE_ASSOC_ORDER:
        left = mul[mul]  # left[a, b, c] = (ab)c
        right = mul[:, mul]  # right[a, b, c] = a(bc)
        bad = np.argwhere(left != right)
    else:
        rng = np.random.default_rng(rng_seed)
        a, b, c = rng.integers(0, n, size=(3, ASSOC_SAMPLES))
        mask = mul[mul[a, b], c] != mul[a, mul[b, c]]
        bad = np.stack([a[mask], b[mask], c[mask]], axis=1)
    if len(bad):
        a, b, c = (int(x) for x in bad[0])
        raise GroupTableError(f"associativity: ({a}*{b})*{c} != {a}*({b}*{c})")
    return e, inv.astype(np.int64)


def _orbit_classes(mul: np.ndarray, inv: np.ndarray) -> tuple[tuple[int, ...], ...]:
    n = mul.shape[0]
    conj = mul[mul, inv[:, None]]  # conj[g, h] = g h g^-1
    seen = np.zeros(n, dtype=bool)
    classes = []
    for h in range(n):
        if seen[h]:
            continue
        orbit = np.unique(conj[:, h])
        seen[orbit] = True
        classes.append(tuple(int(x) for x in orbit))
    return tuple(classes)


def conjugacy_classes(G: GroupTable) -> tuple[tuple[int, ...], ...]:
    """Orbits of h -> g h g^-1, each sorted, ordered by least member."""
    return _orbit_classes(G.mul, G.inv)


def _make(mul: np.ndarray, names: Sequence[str], family=None) -> GroupTable:
    mul = np.ascontiguousarray(mul, dtype=np.int64)
    e, inv = _validate_table(mul)
    classes = _orbit_classes(mul, inv)
    if len(names) != mul.shape[0]:
        raise GroupTableError(f"expected {mul.shape[0]} element names, got {len(names)}")
    if len(set(names)) != len(names):
        raise GroupTableError("element names must be unique")
    return GroupTable(mul=mul, inv=inv, identity=e, classes=classes, names=tuple(names), family=family)


def build_cyclic(n: int) -> GroupTable:
    """Z_n; element k stands for xi^k."""
    if n < 1:
        raise ValueError(f"cyclic group needs n >= 1, got {n}")
    k = np.arange(n)
    mul = (k[:, None] + k[None, :]) % n
    names = ["e"] + ["x" if j == 1 else f"x{j}" for j in range(1, n)]
    return _make(mul, names, family=("cyclic", n))


def build_dihedral(n: int) -> GroupTable:
    """D_n of order 2n: indices 0..n-1 are r^k, n..2n-1 are r^k s."""
    if n < 2:
        raise ValueError(f"dihedral group needs n >= 2, got {n}")
    k = np.arange(2 * n)
    rot, refl = k % n, k // n
    # r^a s^x * r^b s^y = r^(a + (-1)^x b) s^(x+y)
    sign = np.where(refl == 1, -1, 1)
    new_rot = (rot[:, None] + sign[:, None] * rot[None, :]) % n
    new_refl = (refl[:, None] + refl[None, :]) % 2
    mul = new_rot + n * new_refl

    def rname(a):
        return "" if a == 0 else ("r" if a == 1 else f"r{a}")

    names = ["e"] + [rname(a) for a in range(1, n)] + [rname(a) + "s" for a in range(n)]
    return _make(mul, names, family=("dihedral", n))


def build_symmetric(n: int) -> GroupTable:
    """S_n with permutations in lexicographic order; (g*h)(i) = g(h(i))."""
    if n < 1:
        raise ValueError(f"symmetric group needs n >= 1, got {n}")
    if n > MAX_SYMMETRIC_DEGREE:
        raise ValueError(f"S_{n} exceeds the size limit (n <= {MAX_SYMMETRIC_DEGREE})")
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)
    order = perms.shape[0]
    radix = n ** np.arange(n - 1, -1, -1)
    perm_codes = perms @ radix  # ascending, since perms are in lex order
    composed = perms[np.arange(order)[:, None, None], perms[None, :, :]]  # g[h[i]]
    mul = np.searchsorted(perm_codes, composed @ radix)
    names = ["".join(str(p + 1) for p in perm) for perm in perms]
    names[0] = "e"
    return _make(mul, names, family=("symmetric", n))


def cycle_type(perm: Sequence[int]) -> tuple[int, ...]:
    """Sorted cycle lengths of a permutation given as an image list."""
    seen = [False] * len(perm)
    lengths = []
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, k = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            k += 1
        lengths.append(k)
    return tuple(sorted(lengths, reverse=True))


def _strip_comments(text: str) -> list[str]:
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    return lines


def load_group_table(source: str) -> GroupTable:
    """Parse the group-table text format.

    ``order N`` on the first line, then N element names, then N rows of N
    indices; row g, column h holds the index of g*h. ``#`` starts a comment.
    """
    lines = _strip_comments(source)
    if not lines:
        raise GroupTableError("empty group table")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "order":
        raise GroupTableError("first line must read 'order N'")
    try:
        n = int(head[1])
    except ValueError:
        raise GroupTableError(f"bad order {head[1]!r}") from None
    if n < 1:
        raise GroupTableError("order must be positive")
    if len(lines) != n + 2:
        raise GroupTableError(f"expected names line and {n} table rows, found {len(lines) - 1} lines")
    names = lines[1].split()
    try:
        rows = [[int(x) for x in line.split()] for line in lines[2:]]
    except ValueError as exc:
        raise GroupTableError(f"non-integer table entry: {exc}") from None
    if any(len(r) != n for r in rows):
        raise GroupTableError(f"every table row must have {n} entries")
    return _make(np.array(rows, dtype=np.int64), names)


def write_group_table(G: GroupTable) -> str:
    width = len(str(G.order - 1))
    out = [f"order {G.order}", " ".join(G.names)]
    out += [" ".join(f"{int(x):>{width}d}" for x in row) for row in G.mul]
    return "\n".join(out) + "\n"


def generated_subgroup(G: GroupTable, S: Subset | Iterable[int]) -> GeneratedSubgroup:
    """Closure of S under products and inverses, its index and right cosets."""
    members = S.members if isinstance(S, Subset) else tuple(int(x) for x in S)
    inside = np.zeros(G.order, dtype=bool)
    inside[G.identity] = True
    frontier = [G.identity]
    gens = sorted(set(members) | {int(G.inv[g]) for g in members})
    while frontier:
        new = []
        for h in frontier:
            for g in gens:
                x = G.mul[h, g]
                if not inside[x]:
                    inside[x] = True
                    new.append(int(x))
        frontier = new
    H = np.flatnonzero(inside)
    assigned = np.zeros(G.order, dtype=bool)
    cosets = []
    for h in range(G.order):
        if assigned[h]:
            continue
        coset = np.unique(G.mul[H, h])
        assigned[coset] = True
        cosets.append(tuple(int(x) for x in coset))
    sub = Subset(G, tuple(int(x) for x in H))
    return GeneratedSubgroup(sub, G.order // len(H), tuple(cosets))


def generators(G: GroupTable) -> tuple[int, ...]:
    """A small generating set, picked greedily in index order."""
    gens: list[int] = []
    size = 1
    for g in range(G.order):
        if size == G.order:
            break
        if g == G.identity:
            continue
        trial = generated_subgroup(G, gens + [g])
        if len(trial.subgroup) > size:
            gens.append(g)
            size = len(trial.subgroup)
    return tuple(gens)


def is_subgroup_closed(G: GroupTable, members: Iterable[int]) -> bool:
    m = np.asarray(sorted(set(members)), dtype=np.int64)
    mask = np.zeros(G.order, dtype=bool)
    mask[m] = True
    return bool(mask[G.mul[m[:, None], G.inv[m][None, :]]].all())
