"""Sites, oriented links and closed plaquette loops."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "LatticeError",
    "LatticeGraph",
    "hypercubic",
    "load_graph",
    "write_graph",
    "site_links",
]


class LatticeError(ValueError):
    pass


Loop = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class LatticeGraph:
    """Immutable graph with oriented links and oriented loops.

    ``links[l] = (source, target)``; a loop is a sequence of
    ``(link id, +1 | -1)``, where -1 traverses the link target to source.
    """

    n_sites: int
    links: tuple[tuple[int, int], ...]
    plaquettes: tuple[Loop, ...] = ()
    extents: tuple[int, ...] | None = None
    periodic: tuple[bool, ...] | None = None
    _site_links: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        links = tuple((int(s), int(t)) for s, t in self.links)
        loops = tuple(tuple((int(l), int(o)) for l, o in loop) for loop in self.plaquettes)
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "plaquettes", loops)
        _validate(self.n_sites, links, loops)
        per_site: list[list[tuple[int, bool]]] = [[] for _ in range(self.n_sites)]
        for l, (s, t) in enumerate(links):
            per_site[s].append((l, True))
            per_site[t].append((l, False))
        object.__setattr__(self, "_site_links", tuple(tuple(v) for v in per_site))

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def euler(self) -> int:
        """L - V."""
        return self.n_links - self.n_sites

    def describe(self) -> str:
        if self.extents is not None:
            shape = "x".join(map(str, self.extents))
            bc = "periodic" if all(self.periodic) else "open" if not any(self.periodic) else "mixed"
            return f"{shape} {bc}"
        return f"graph V={self.n_sites} L={self.n_links}"

    def canonical_text(self) -> str:
        return write_graph(self)


def _validate(V: int, links, loops) -> None:
    if V < 1:
        raise LatticeError("a lattice needs at least one site")
    for l, (s, t) in enumerate(links):
        if not (0 <= s < V and 0 <= t < V):
            raise LatticeError(f"link {l} ({s}->{t}) references a site outside 0..{V - 1}")
        if s == t:
            raise LatticeError(f"link {l} is a self-loop at site {s}")
    # connectivity by union-find over links
    parent = list(range(V))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for s, t in links:
        parent[find(s)] = find(t)
    roots = {find(v) for v in range(V)}
    if len(roots) > 1:
        raise LatticeError(f"graph is disconnected ({len(roots)} components)")
    for i, loop in enumerate(loops):
        if not loop:
            raise LatticeError(f"loop {i} is empty")
        ends = []
        for l, o in loop:
            if not 0 <= l < len(links):
                raise LatticeError(f"loop {i} references unknown link {l}")
            if o not in (1, -1):
                raise LatticeError(f"loop {i}: orientation of link {l} must be +1 or -1")
            s, t = links[l]
            ends.append((s, t) if o == 1 else (t, s))
        for k in range(len(ends)):
            if ends[k][1] != ends[(k + 1) % len(ends)][0]:
                raise LatticeError(
                    f"loop {i} is not closed: step {k} ends at site {ends[k][1]} "
                    f"but step {(k + 1) % len(ends)} starts at {ends[(k + 1) % len(ends)][0]}"
                )


def hypercubic(extents: Sequence[int], periodic: bool | Sequence[bool] = False) -> LatticeGraph:
    """Hypercubic lattice with axis 0 running fastest in the site index.

    Site links are numbered site-major, axis-minor; links point along the
    positive axis. Each elementary square for axes a < b is traversed as
    (x, a)+, (x + a, b)+, (x + b, a)-, (x, b)-.
    """
    extents = tuple(int(n) for n in extents)
    d = len(extents)
    if d < 1:
        raise LatticeError("need at least one axis")
    if isinstance(periodic, (bool, np.bool_)):
        periodic = (bool(periodic),) * d
    periodic = tuple(bool(p) for p in periodic)
    if len(periodic) != d:
        raise LatticeError(f"{len(periodic)} boundary flags for {d} axes")
    for ax, (n, p) in enumerate(zip(extents, periodic)):
        if n < 1:
            raise LatticeError(f"extent along axis {ax} must be positive, got {n}")
        if p and n < 2:
            raise LatticeError(f"periodic axis {ax} needs extent >= 2 (extent 1 would create a self-loop)")
    strides = np.cumprod((1,) + extents[:-1])
    V = int(np.prod(extents))

    def site(coord):
        return int(sum(c * s for c, s in zip(coord, strides)))

    links: list[tuple[int, int]] = []
    link_id: dict[tuple[int, int], int] = {}
    coords = [tuple(int(c) for c in reversed(t)) for t in itertools.product(*(range(n) for n in reversed(extents)))]
    for coord in coords:
        for ax in range(d):
            nxt = list(coord)
            nxt[ax] += 1
            if nxt[ax] == extents[ax]:
                if not periodic[ax]:
                    continue
                nxt[ax] = 0
            link_id[(site(coord), ax)] = len(links)
            links.append((site(coord), site(nxt)))

    def shift(coord, ax):
        c = list(coord)
        c[ax] = (c[ax] + 1) % extents[ax]
        return tuple(c)

    loops = []
    for coord in coords:
        for a in range(d):
            for b in range(a + 1, d):
                x = site(coord)
                xa, xb = site(shift(coord, a)), site(shift(coord, b))
                keys = [(x, a), (xa, b), (xb, a), (x, b)]
                if all(k in link_id for k in keys) and _square_fits(coord, a, b, extents, periodic):
                    ids = [link_id[k] for k in keys]
                    loops.append(((ids[0], 1), (ids[1], 1), (ids[2], -1), (ids[3], -1)))
    return LatticeGraph(V, tuple(links), tuple(loops), extents, periodic)


def _square_fits(coord, a, b, extents, periodic) -> bool:
    for ax in (a, b):
        if coord[ax] + 1 >= extents[ax] and not periodic[ax]:
            return False
    return True


def site_links(lat: LatticeGraph, x: int) -> tuple[tuple[int, bool], ...]:
    """Links at site x in ascending id; the flag is True when x is the source."""
    if not 0 <= x < lat.n_sites:
        raise LatticeError(f"site {x} out of range")
    return lat._site_links[x]


def load_graph(source: str) -> LatticeGraph:
    """Parse ``sites V`` / ``link id s t`` / ``loop l:+ l:- ...`` text."""
    V = None
    links: dict[int, tuple[int, int]] = {}
    loops = []
    for lineno, raw in enumerate(source.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        try:
            if head == "sites":
                V = int(rest[0])
            elif head == "link":
                lid, s, t = (int(v) for v in rest)
                if lid in links:
                    raise LatticeError(f"line {lineno}: duplicate link id {lid}")
                links[lid] = (s, t)
            elif head == "loop":
                loop = []
                for tok in rest:
                    lid, sign = tok.split(":")
                    if sign not in ("+", "-"):
                        raise LatticeError(f"line {lineno}: orientation must be + or -, got {sign!r}")
                    loop.append((int(lid), 1 if sign == "+" else -1))
                loops.append(tuple(loop))
            else:
                raise LatticeError(f"line {lineno}: unknown directive {head!r}")
        except (ValueError, IndexError) as exc:
            if isinstance(exc, LatticeError):
                raise
            raise LatticeError(f"line {lineno}: cannot parse {raw.strip()!r}") from exc
    if V is None:
        raise LatticeError("missing 'sites' line")
    if sorted(links) != list(range(len(links))):
        raise LatticeError("link ids must be dense 0..L-1")
    return LatticeGraph(V, tuple(links[i] for i in range(len(links))), tuple(loops))


def write_graph(lat: LatticeGraph) -> str:
    lines = [f"sites {lat.n_sites}"]
    lines += [f"link {l} {s} {t}" for l, (s, t) in enumerate(lat.links)]
    for loop in lat.plaquettes:
        lines.append("loop " + " ".join(f"{l}:{'+' if o > 0 else '-'}" for l, o in loop))
    return "\n".join(lines) + "\n"
