"""Unitary irreps, characters, and invariant tensors of tensor products.

Dual slots are realised by entry-wise complex conjugation of unitary
matrices, so an ``IrrepSet`` never stores a separate dual representation.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .group import GroupTable, generators

__all__ = [
    "RepresentationError",
    "Irrep",
    "IrrepSet",
    "IrrepReport",
    "SiteSignature",
    "InvariantBasis",
    "builtin_irreps",
    "load_irreps",
    "write_irreps",
    "load_representation",
    "write_representation",
    "verify_irreps",
    "verify_matrices",
    "peter_weyl_coeff",
    "peter_weyl_matrix",
    "dim_invariant",
    "invariant_basis",
    "averaging_projector",
    "kernel",
    "invariance_residual",
]

TOL = 1e-12
PROJECTOR_TOL = 1e-10
EIGEN_KEEP = 1.0 - 1e-8
PHASE_TOL = 1e-8
DEFAULT_PRODUCT_CAP = 65536
DENSE_PROJECTOR_LIMIT = 2048
EXHAUSTIVE_HOM_ORDER = 120


class RepresentationError(ValueError):
    """Irrep data failing unitarity, homomorphism, or completeness checks."""


@dataclass(frozen=True, eq=False)
class Irrep:
    id: int
    matrices: np.ndarray  # (|G|, dim, dim) complex
    character: np.ndarray  # per conjugacy class

    @property
    def dim(self) -> int:
        return int(self.matrices.shape[1])

    @property
    def chi(self) -> np.ndarray:
        """Character on every element."""
        return np.trace(self.matrices, axis1=1, axis2=2)


@dataclass(frozen=True, eq=False)
class IrrepSet:
    group: GroupTable
    irreps: tuple[Irrep, ...]
    _memo: dict = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __len__(self):
        return len(self.irreps)

    def __getitem__(self, j: int) -> Irrep:
        return self.irreps[j]

    def __iter__(self):
        return iter(self.irreps)

    @property
    def dims(self) -> np.ndarray:
        return self.cached("dims", lambda: _frozen(np.array([r.dim for r in self.irreps], dtype=np.int64)))

    @property
    def chi(self) -> np.ndarray:
        """(n_irreps, |G|) character table over elements."""
        return self.cached("chi", lambda: _frozen(np.stack([r.chi for r in self.irreps])))

    @property
    def trivial(self) -> int:
        return 0

    @property
    def is_real(self) -> bool:
        return self.cached("real", lambda: all(not np.any(np.abs(r.matrices.imag) > 0) for r in self.irreps))

    def fusion_table(self) -> np.ndarray:
        """N[k, f, j]: multiplicity of irrep k in f (x) j."""

        def compute():
            chi = self.chi
            N = np.einsum("kg,fg,jg->kfj", np.conj(chi), chi, chi) / self.group.order
            out = np.rint(N.real).astype(np.int64)
            if np.max(np.abs(N - out)) > 1e-9:
                raise ArithmeticError("fusion multiplicities are not integers")
            return _frozen(out)

        return self.cached("fusion", compute)

    def cached(self, key, compute):
        """Shared memo: compute outside the lock, first writer wins."""
        with self._lock:
            if key in self._memo:
                return self._memo[key]
        value = compute()
        with self._lock:
            return self._memo.setdefault(key, value)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _character_per_class(G: GroupTable, mats: np.ndarray) -> np.ndarray:
    chi = np.trace(mats, axis1=1, axis2=2)
    return np.array([chi[c[0]] for c in G.classes])


def _make_irrep(G: GroupTable, j: int, mats) -> Irrep:
    mats = np.ascontiguousarray(mats, dtype=np.complex128)
    mats.setflags(write=False)
    return Irrep(id=j, matrices=mats, character=_character_per_class(G, mats))


def _rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _clean(x: np.ndarray) -> np.ndarray:
    # cos(pi/2) and friends: snap rounding residue to exact zero / integers
    x = np.where(np.abs(x) < 1e-15, 0.0, x)
    r = np.round(x)
    return np.where(np.abs(x - r) < 1e-15, r, x)


def builtin_irreps(G: GroupTable) -> IrrepSet:
    """Analytic irreps for cyclic and dihedral groups.

    Z_N: rho_j(xi^k) = exp(2 pi i k j / N). D_N: the one-dimensional irreps
    (for even N ordered as trivial, r->-1, s->-1, both -1, matching the usual
    D_4 character table) then the two-dimensional ones, r -> rotation by
    2 pi l / N and s -> diag(1, -1).
    """
    if G.family is None:
        raise NotImplementedError("no built-in irreps for this group; use load_irreps")
    kind, n = G.family
    if kind == "cyclic":
        k = np.arange(n)
        irreps = []
        for j in range(n):
            phase = np.exp(2j * np.pi * k * j / n)
            phase = _clean(phase.real) + 1j * _clean(phase.imag)
            irreps.append(_make_irrep(G, j, phase.reshape(n, 1, 1)))
        return IrrepSet(G, tuple(irreps))
    if kind == "dihedral":
        k = np.arange(2 * n)
        rot, refl = k % n, k // n
        # (value of r, value of s) for the 1-dim irreps
        if n % 2 == 0:
            onedim = [(1, 1), (-1, 1), (1, -1), (-1, -1)]
        else:
            onedim = [(1, 1), (1, -1)]
        mats = []
        for rv, sv in onedim:
            mats.append((rv**rot * sv**refl).astype(float).reshape(-1, 1, 1))
        flip = np.diag([1.0, -1.0])
        for ell in range(1, (n - 1) // 2 + 1):
            m = np.empty((2 * n, 2, 2))
            for g in range(2 * n):
                m[g] = _rotation(2 * np.pi * ell * rot[g] / n)
                if refl[g]:
                    m[g] = m[g] @ flip
            mats.append(_clean(m))
        return IrrepSet(G, tuple(_make_irrep(G, j, m) for j, m in enumerate(mats)))
    raise NotImplementedError(f"no built-in irreps for the {kind} family; use load_irreps")


# --------------------------------------------------------------------------
# verification
# --------------------------------------------------------------------------


@dataclass
class IrrepReport:
    unitarity: float
    homomorphism: float
    identity: float
    class_function: float
    orthogonality: float
    completeness: bool
    trivial_present: bool
    tol: float = TOL

    @property
    def ok(self) -> bool:
        return (
            max(self.unitarity, self.homomorphism, self.identity, self.class_function, self.orthogonality)
            < self.tol
            and self.completeness
            and self.trivial_present
        )

    def failures(self) -> list[str]:
        out = []
        for name in ("unitarity", "homomorphism", "identity", "class_function", "orthogonality"):
            if getattr(self, name) >= self.tol:
                out.append(f"{name} residual {getattr(self, name):.3e}")
        if not self.completeness:
            out.append("completeness: sum of dim^2 != |G|")
        if not self.trivial_present:
            out.append("trivial irrep missing at id 0")
        return out


def _matrix_residuals(G: GroupTable, mats: np.ndarray, rng_seed: int = 0) -> tuple[float, float, float, float]:
    n, d, _ = mats.shape
    eye = np.eye(d)
    unit = float(np.max(np.abs(mats @ np.conj(np.swapaxes(mats, 1, 2)) - eye)))
    if n <= EXHAUSTIVE_HOM_ORDER:
        prod = np.einsum("gab,hbc->ghac", mats, mats)
        hom = float(np.max(np.abs(prod - mats[G.mul])))
    else:
        rng = np.random.default_rng(rng_seed)
        a, b = rng.integers(0, n, size=(2, 20000))
        hom = float(np.max(np.abs(mats[a] @ mats[b] - mats[G.mul[a, b]])))
    ident = float(np.max(np.abs(mats[G.identity] - eye)))
    chi = np.trace(mats, axis1=1, axis2=2)
    cls = max(float(np.ptp(chi[list(c)].real) + np.ptp(chi[list(c)].imag)) for c in G.classes)
    return unit, hom, ident, cls


def verify_matrices(G: GroupTable, mats: np.ndarray) -> dict[str, float]:
    """Unitarity / homomorphism residuals of one (possibly reducible) rep."""
    unit, hom, ident, cls = _matrix_residuals(G, np.asarray(mats, dtype=np.complex128))
    return {"unitarity": unit, "homomorphism": hom, "identity": ident, "class_function": cls}


def verify_irreps(G: GroupTable, S: IrrepSet | Sequence[Irrep]) -> IrrepReport:
    irreps = list(S)
    unit = hom = ident = cls = 0.0
    for r in irreps:
        u, h, i, c = _matrix_residuals(G, r.matrices)
        unit, hom, ident, cls = max(unit, u), max(hom, h), max(ident, i), max(cls, c)
    chi = np.stack([r.chi for r in irreps])
    gram = chi @ chi.conj().T / G.order
    ortho = float(np.max(np.abs(gram - np.eye(len(irreps)))))
    complete = sum(r.dim**2 for r in irreps) == G.order
    is_trivial = [r.dim == 1 and bool(np.all(np.abs(r.matrices - 1.0) < TOL)) for r in irreps]
    trivial = bool(irreps) and is_trivial[0] and sum(is_trivial) == 1
    return IrrepReport(unit, hom, ident, cls, ortho, complete, trivial)


def kernel(G: GroupTable, mats: np.ndarray, tol: float = 1e-10) -> tuple[int, ...]:
    """Elements represented by the identity matrix."""
    eye = np.eye(mats.shape[1])
    return tuple(g for g in range(G.order) if np.max(np.abs(mats[g] - eye)) < tol)


# --------------------------------------------------------------------------
# text format
# --------------------------------------------------------------------------


def _format_blocks(mats: np.ndarray) -> list[str]:
    out = []
    for m in mats:
        for row in m:
            out.append(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row.astype(complex)))
    return out


def write_representation(mats: np.ndarray, label: int = 0) -> str:
    mats = np.asarray(mats, dtype=np.complex128)
    return "\n".join([f"irrep {label} dim {mats.shape[1]}"] + _format_blocks(mats)) + "\n"


def write_irreps(S: IrrepSet) -> str:
    return "".join(write_representation(r.matrices, r.id) for r in S)


def _parse_blocks(source: str, order: int) -> list[tuple[int, np.ndarray]]:
    tokens_by_irrep: list[tuple[int, int, list[str]]] = []
    for lineno, raw in enumerate(source.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "irrep":
            if len(parts) != 4 or parts[2] != "dim":
                raise RepresentationError(f"line {lineno}: header must read 'irrep <id> dim <d>'")
            try:
                tokens_by_irrep.append((int(parts[1]), int(parts[3]), []))
            except ValueError:
                raise RepresentationError(f"line {lineno}: bad irrep header") from None
        else:
            if not tokens_by_irrep:
                raise RepresentationError(f"line {lineno}: matrix data before any 'irrep' header")
            tokens_by_irrep[-1][2].extend(parts)
    out = []
    for j, d, toks in tokens_by_irrep:
        if d < 1:
            raise RepresentationError(f"irrep {j}: dimension must be positive")
        want = 2 * order * d * d
        if len(toks) != want:
            raise RepresentationError(f"irrep {j}: expected {want} numbers, found {len(toks)}")
        try:
            vals = np.array([float(t) for t in toks]).reshape(order, d, d, 2)
        except ValueError as exc:
            raise RepresentationError(f"irrep {j}: {exc}") from None
        out.append((j, vals[..., 0] + 1j * vals[..., 1]))
    return out


def load_representation(source: str, G: GroupTable, tol: float = TOL) -> np.ndarray:
    """Load a single (possibly reducible) unitary representation."""
    blocks = _parse_blocks(source, G.order)
    if len(blocks) != 1:
        raise RepresentationError(f"expected one representation block, found {len(blocks)}")
    mats = blocks[0][1]
    res = verify_matrices(G, mats)
    bad = [f"{k} residual {v:.3e}" for k, v in res.items() if k != "class_function" and v >= tol]
    if bad:
        raise RepresentationError("representation rejected: " + "; ".join(bad))
    return mats


def load_irreps(source: str, G: GroupTable, tol: float = TOL) -> IrrepSet:
    blocks = _parse_blocks(source, G.order)
    ids = [j for j, _ in blocks]
    if ids != list(range(len(ids))):
        raise RepresentationError(f"irrep ids must be 0..{len(ids) - 1} in order, got {ids}")
    S = IrrepSet(G, tuple(_make_irrep(G, j, m) for j, m in blocks))
    report = verify_irreps(G, S)
    report.tol = tol
    if not report.ok:
        raise RepresentationError("irrep set rejected: " + "; ".join(report.failures()))
    return S


# --------------------------------------------------------------------------
# Peter-Weyl change of basis
# --------------------------------------------------------------------------


def peter_weyl_coeff(S: IrrepSet, g: int, j: int, m: int, n: int) -> complex:
    """<g|jmn> = sqrt(dim j / |G|) [rho_j(g)]_mn, with 0-based m, n."""
    r = S[j]
    if not (0 <= m < r.dim and 0 <= n < r.dim):
        raise IndexError(f"matrix index ({m}, {n}) out of range for dim {r.dim}")
    if not 0 <= g < S.group.order:
        raise IndexError(f"element {g} out of range")
    return complex(math.sqrt(r.dim / S.group.order) * r.matrices[g, m, n])


def peter_weyl_matrix(S: IrrepSet) -> tuple[np.ndarray, list[tuple[int, int, int]]]:
    """Unitary U with U[g, col] = <g|jmn>; columns ordered by (j, m, n)."""
    cols, labels = [], []
    for r in S:
        scale = math.sqrt(r.dim / S.group.order)
        for m in range(r.dim):
            for n in range(r.dim):
                cols.append(scale * r.matrices[:, m, n])
                labels.append((r.id, m, n))
    return np.stack(cols, axis=1), labels


# --------------------------------------------------------------------------
# invariant vectors at a site
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SiteSignature:
    """Irreps on the links at a site in ascending link order.

    Each slot is ``(irrep id, dual)``; a slot is dual when the site is the
    link's source.
    """

    slots: tuple[tuple[int, bool], ...]

    def __post_init__(self):
        if not self.slots:
            raise ValueError("a site signature needs at least one slot")
        object.__setattr__(self, "slots", tuple((int(j), bool(d)) for j, d in self.slots))

    @classmethod
    def from_lists(cls, irreps: Iterable[int], duals: Iterable[bool]) -> "SiteSignature":
        return cls(tuple(zip(irreps, duals)))

    def __len__(self):
        return len(self.slots)

    def __str__(self):
        return "(" + ",".join(f"{j}*" if d else f"{j}" for j, d in self.slots) + ")"


@dataclass(frozen=True, eq=False)
class InvariantBasis:
    signature: SiteSignature
    tensors: np.ndarray  # (dim_inv, d_1, ..., d_k)

    @property
    def dim_inv(self) -> int:
        return int(self.tensors.shape[0])

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.tensors.shape[1:])

    def matrix(self) -> np.ndarray:
        """Tensors flattened to (dim_inv, prod d)."""
        return self.tensors.reshape(self.dim_inv, int(np.prod(self.shape)))


def _slot_matrices(S: IrrepSet, sig: SiteSignature) -> list[np.ndarray]:
    return [np.conj(S[j].matrices) if dual else S[j].matrices for j, dual in sig.slots]


def dim_invariant(S: IrrepSet, sig: SiteSignature) -> int:
    """(1/|G|) sum_g prod_slots chi(g), conjugated on dual slots."""
    chi = S.chi
    prod = np.ones(S.group.order, dtype=np.complex128)
    for j, dual in sig.slots:
        prod = prod * (np.conj(chi[j]) if dual else chi[j])
    val = prod.sum() / S.group.order
    r = round(val.real)
    if abs(val - r) > 1e-9 or r < 0:
        raise ArithmeticError(f"character count for {sig} is not a non-negative integer: {val}")
    return int(r)


def _kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def _apply_product(mats_g: Sequence[np.ndarray], v: np.ndarray) -> np.ndarray:
    """Apply the tensor product of per-slot matrices to vectors v (D, k)."""
    dims = [m.shape[0] for m in mats_g]
    k = v.shape[1]
    t = v.reshape(*dims, k)
    for axis, m in enumerate(mats_g):
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1, k)


def averaging_projector(S: IrrepSet, sig: SiteSignature) -> np.ndarray:
    """Dense (1/|G|) sum_g (x)_slots M_slot(g)."""
    mats = _slot_matrices(S, sig)
    dim = int(np.prod([m.shape[1] for m in mats]))
    P = np.zeros((dim, dim), dtype=np.complex128)
    for g in range(S.group.order):
        P += _kron_all([m[g] for m in mats])
    return P / S.group.order


def _canonical(Q: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(Q columns).

    Gram-Schmidt over the columns of the projector QQ^+ in index order makes
    the basis depend only on the subspace; each vector then gets its first
    significant coefficient real positive, and the set is sorted
    lexicographically.
    """
    if Q.shape[1] == 0:
        return Q.T
    P = Q @ Q.conj().T
    k = Q.shape[1]
    basis = []
    R = P.copy()
    for _ in range(k):
        norms = np.linalg.norm(R, axis=0)
        # lowest-index column among the well-conditioned ones
        i = int(np.flatnonzero(norms >= 0.5 * norms.max())[0])
        v = R[:, i] / norms[i]
        for b in basis:  # re-orthogonalise against accumulated rounding
            v = v - b * np.vdot(b, v)
        v = v / np.linalg.norm(v)
        basis.append(v)
        R = R - np.outer(v, v.conj() @ R)
    out = []
    for v in basis:
        lead = np.flatnonzero(np.abs(v) > PHASE_TOL)[0]
        v = v * (abs(v[lead]) / v[lead])
        v[lead] = abs(v[lead])
        out.append(v)
    out.sort(key=lambda v: tuple(np.round(np.stack([v.real, v.imag], axis=1).ravel(), 12)))
    return np.array(out)


def invariant_basis(S: IrrepSet, sig: SiteSignature, cap: int = DEFAULT_PRODUCT_CAP) -> InvariantBasis:
    """Orthonormal invariant tensors of the slot tensor product (memoized)."""
    dims = [S[j].dim for j, _ in sig.slots]
    total = int(np.prod(dims))
    if total > cap:
        raise MemoryError(f"tensor product dimension {total} for {sig} exceeds cap {cap}")
    return S.cached(("inv", sig), lambda: _compute_invariant_basis(S, sig, dims, total))


def _compute_invariant_basis(S: IrrepSet, sig: SiteSignature, dims, total) -> InvariantBasis:
    expected = dim_invariant(S, sig)
    if total <= DENSE_PROJECTOR_LIMIT:
        P = averaging_projector(S, sig)
        if np.max(np.abs(P @ P - P)) > PROJECTOR_TOL:
            raise ArithmeticError(f"averaging projector for {sig} is not idempotent")
        tr = np.trace(P).real
        if abs(tr - round(tr)) > 1e-9:
            raise ArithmeticError(f"projector trace {tr} for {sig} is not an integer")
        w, V = np.linalg.eigh((P + P.conj().T) / 2)
        Q = V[:, w > EIGEN_KEEP]
    else:
        # matrix-free range finder; the projector is never formed
        mats = _slot_matrices(S, sig)
        rng = np.random.default_rng(len(sig) * 7919 + total)
        k = expected + 4
        X = rng.standard_normal((total, k)) + 1j * rng.standard_normal((total, k))
        Y = sum(_apply_product([m[g] for m in mats], X) for g in range(S.group.order)) / S.group.order
        U, s, _ = np.linalg.svd(Y, full_matrices=False)
        Q = U[:, s > 1e-8 * max(s.max(initial=0.0), 1.0)]
        PQ = sum(_apply_product([m[g] for m in mats], Q) for g in range(S.group.order)) / S.group.order
        if Q.shape[1] and np.max(np.abs(PQ - Q)) > PROJECTOR_TOL:
            raise ArithmeticError(f"range of averaging map for {sig} is not invariant")
    if Q.shape[1] != expected:
        raise ArithmeticError(f"invariant space of {sig}: rank {Q.shape[1]} != character count {expected}")
    vecs = _canonical(Q)
    if S.is_real and np.all(np.abs(vecs.imag) < 1e-13):
        vecs = vecs.real
    tensors = np.ascontiguousarray(vecs.reshape(expected, *dims))
    tensors.setflags(write=False)
    return InvariantBasis(sig, tensors)


def invariance_residual(S: IrrepSet, basis: InvariantBasis, elements: Iterable[int] | None = None) -> float:
    """max |(x) M(g) psi - psi| over the given elements (default: generators)."""
    if basis.dim_inv == 0:
        return 0.0
    elems = generators(S.group) if elements is None else tuple(elements)
    mats = _slot_matrices(S, basis.signature)
    V = basis.matrix().T.astype(np.complex128)
    worst = 0.0
    for g in elems:
        worst = max(worst, float(np.max(np.abs(_apply_product([m[g] for m in mats], V) - V))))
    return worst
