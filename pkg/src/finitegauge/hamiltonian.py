"""Electric + magnetic Hamiltonian in the spin-network basis.

The magnetic plaquette term is a class function of the oriented loop
product. Expanded in characters, each character becomes a trace around
the loop of one-link multiplication operators; on a link these act on the
representation basis through :func:`link_coupling_tensor`. States that
differ off the loop cannot couple, so every plaquette is handled as a set
of identical dense blocks, one per spectator configuration.
"""

from __future__ import annotations

import logging
import string
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .electric import ElectricSpectrum
from .representation import IrrepSet, SiteSignature
from .spin_network import SpinNetworkBasis, electric_diagonal

__all__ = [
    "HamiltonianError",
    "ClassFunction",
    "SparseHamiltonian",
    "class_function",
    "link_coupling_tensor",
    "fusion_multiplicity",
    "dual_irreps",
    "plaquette_operator",
    "magnetic_matrix",
    "assemble",
    "build_hamiltonian",
    "write_coordinate_text",
    "read_coordinate_text",
]

logger = logging.getLogger(__name__)

REALITY_TOL = 1e-12
DROP_TOL = 1e-13


class HamiltonianError(ValueError):
    pass


@dataclass(frozen=True)
class ClassFunction:
    """Real class function sum_j c_j chi_j, tabulated per element and per class."""

    irreps: IrrepSet
    coefficients: np.ndarray  # (n_irr,) complex
    values: np.ndarray  # (|G|,) real

    @property
    def per_class(self) -> np.ndarray:
        G = self.irreps.group
        return np.array([self.values[c[0]] for c in G.classes])

    def active(self) -> list[tuple[int, complex]]:
        return [(j, complex(c)) for j, c in enumerate(self.coefficients) if c != 0]

    def is_constant(self) -> bool:
        return bool(np.ptp(self.values) == 0)


def class_function(S: IrrepSet, coefficients) -> ClassFunction:
    """h(g) = sum_j c_j chi_j(g); rejects combinations that are not real."""
    c = np.zeros(len(S), dtype=np.complex128)
    if isinstance(coefficients, dict):
        for j, v in coefficients.items():
            c[int(j)] = v
    else:
        arr = np.asarray(coefficients, dtype=np.complex128)
        if len(arr) > len(S):
            raise HamiltonianError(f"{len(arr)} coefficients for {len(S)} irreps")
        c[: len(arr)] = arr
    vals = c @ S.chi
    if np.max(np.abs(vals.imag), initial=0.0) > REALITY_TOL:
        raise HamiltonianError(f"class function is not real: max |Im h| = {np.max(np.abs(vals.imag)):.3g}")
    values = vals.real.copy()
    G = S.group
    for cls in G.classes:
        if np.ptp(values[list(cls)]) > 1e-10:
            raise HamiltonianError("class function is not constant on a conjugacy class")
    return ClassFunction(S, c, values)


def fusion_multiplicity(S: IrrepSet, j_out: int, f: int, j_in: int) -> int:
    """Multiplicity of j_out in f (x) j_in, from characters."""
    return int(S.fusion_table()[j_out, f, j_in])


def dual_irreps(S: IrrepSet) -> np.ndarray:
    """Index of the irrep whose character is the conjugate of each irrep's."""

    def compute():
        chi = S.chi
        out = np.empty(len(S), dtype=np.int64)
        for j in range(len(S)):
            hits = np.flatnonzero(np.all(np.abs(chi - np.conj(chi[j])) < 1e-9, axis=1))
            if len(hits) != 1:
                raise HamiltonianError(f"no unique dual for irrep {j}")
            out[j] = hits[0]
        return out

    return S.cached("dual", compute)


def link_coupling_tensor(S: IrrepSet, j_out: int, j_in: int, f: int, sigma: int) -> np.ndarray:
    """T[m', n', a, b, m, n] for multiplication by rho_f(g^sigma)[a, b] on one link.

    T = sqrt(d_out d_in)/|G| sum_g conj(rho_out(g)[m', n']) rho_f(g^sigma)[a, b] rho_in(g)[m, n].
    Memoized on the irrep set.
    """
    if sigma not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    return S.cached(("link", j_out, j_in, f, sigma), lambda: _coupling(S, j_out, j_in, f, sigma))


def _coupling(S: IrrepSet, j_out, j_in, f, sigma):
    G = S.group
    ro, ri, rf = S[j_out].matrices, S[j_in].matrices, S[f].matrices
    if sigma == -1:
        rf = rf[G.inv]
    scale = np.sqrt(S[j_out].dim * S[j_in].dim) / G.order
    T = scale * np.einsum("gpq,gab,gmn->pqabmn", np.conj(ro), rf, ri, optimize=True)
    T[np.abs(T) < 1e-14] = 0
    if S.is_real:
        T = T.real
    T = np.ascontiguousarray(T)
    T.setflags(write=False)
    return T


# --------------------------------------------------------------------------
# plaquette blocks
# --------------------------------------------------------------------------


@dataclass
class _LoopGeometry:
    links: list[int]  # loop links in traversal order
    signs: list[int]
    sites: list[int]  # distinct loop sites, ascending
    # for each loop site: positions (in site_links order) of loop slots and spectator slots
    loop_slots: dict[int, list[int]]
    spect_slots: dict[int, list[int]]
    spect_links: list[int]  # off-loop links touching a loop site, ascending
    off_links: list[int]
    off_sites: list[int]


def _geometry(basis: SpinNetworkBasis, loop) -> _LoopGeometry:
    lat = basis.lattice
    links = [int(l) for l, _ in loop]
    signs = [int(o) for _, o in loop]
    if len(set(links)) != len(links):
        raise HamiltonianError("a loop may traverse each link at most once")
    on = set(links)
    sites = sorted({s for l in links for s in lat.links[l]})
    loop_slots, spect_slots, spect = {}, {}, set()
    for x in sites:
        sl = lat._site_links[x]
        loop_slots[x] = [k for k, (l, _) in enumerate(sl) if l in on]
        spect_slots[x] = [k for k, (l, _) in enumerate(sl) if l not in on]
        spect.update(sl[k][0] for k in spect_slots[x])
    off_links = [l for l in range(lat.n_links) if l not in on]
    off_sites = [x for x in range(lat.n_sites) if x not in set(sites)]
    return _LoopGeometry(links, signs, sites, loop_slots, spect_slots, sorted(spect), off_links, off_sites)


def _compile_plan(expr: str, ops) -> list[tuple[tuple[int, ...], str]]:
    """Contraction steps for ``expr`` following numpy's greedy path."""
    path = np.einsum_path(expr, *ops, optimize="greedy")[0][1:]
    inputs, output = expr.split("->")
    subs = inputs.split(",")
    steps = []
    for pair in path:
        idx = tuple(sorted(pair))
        rest = "".join(subs[k] for k in range(len(subs)) if k not in idx) + output
        keep = "".join(dict.fromkeys(c for k in idx for c in subs[k] if c in rest))
        steps.append((idx, ",".join(subs[k] for k in idx) + "->" + keep))
        subs = [subs[k] for k in range(len(subs)) if k not in idx] + [keep]
    (final,) = subs
    steps.append(((0,), f"{final}->{output}"))
    return steps


def _run_plan(plan, ops) -> np.ndarray:
    ops = list(ops)
    for idx, expr in plan:
        out = np.einsum(expr, *(ops[k] for k in idx))
        ops = [ops[k] for k in range(len(ops)) if k not in idx] + [out]
    return ops[0]


class _LoopContractor:
    """Contracts one loop for many (bra, ket) irrep pairs, reusing work.

    Site tensors are paired over their spectator slots once per signature
    pair; the einsum expression is fixed per loop and its contraction path
    is cached by operand shapes.
    """

    def __init__(self, basis: SpinNetworkBasis, geo: _LoopGeometry, terms):
        self.basis = basis
        self.geo = geo
        self.terms = terms
        self.S = basis.irreps
        lat = basis.lattice
        self.slots = {x: lat._site_links[x] for x in geo.sites}
        letters = iter(string.ascii_letters)
        link_idx = {l: tuple(next(letters) for _ in range(4)) for l in geo.links}
        subs = []
        a_bra, a_ket = [], []
        for x in geo.sites:
            ab, ak = next(letters), next(letters)
            a_bra.append(ab)
            a_ket.append(ak)
            sb, sk = [], []
            for k in geo.loop_slots[x]:
                l, dual = self.slots[x][k]
                mb, nb, mk, nk = link_idx[l]
                # the source end carries the row index m, the target end the column index n
                sb.append(mb if dual else nb)
                sk.append(mk if dual else nk)
            subs.append(ab + ak + "".join(sb) + "".join(sk))
        chain = [next(letters) for _ in geo.links]
        for k, l in enumerate(geo.links):
            mb, nb, mk, nk = link_idx[l]
            subs.append(mb + nb + chain[k] + chain[(k + 1) % len(chain)] + mk + nk)
        self.expr = ",".join(subs) + "->" + "".join(a_bra) + "".join(a_ket)
        self._pair_cache: dict = {}
        self._paths: dict = {}

    def _sig(self, x, assign) -> SiteSignature:
        return SiteSignature(tuple((int(assign[l]), dual) for l, dual in self.slots[x]))

    def _pair(self, x, sig_b, sig_k):
        key = (x, sig_b, sig_k)
        K = self._pair_cache.get(key)
        if K is None:
            tb = self.basis.tensors[sig_b].tensors
            tk = self.basis.tensors[sig_k].tensors
            loop_pos, spect_pos = self.geo.loop_slots[x], self.geo.spect_slots[x]
            pool = iter(string.ascii_letters)
            bra = [next(pool)] + [""] * len(sig_b)
            ket = [next(pool)] + [""] * len(sig_b)
            for k in spect_pos:
                bra[k + 1] = ket[k + 1] = next(pool)
            ob, ok = [], []
            for k in loop_pos:
                bra[k + 1], ket[k + 1] = next(pool), next(pool)
                ob.append(bra[k + 1])
                ok.append(ket[k + 1])
            expr = "".join(bra) + "," + "".join(ket) + "->" + bra[0] + ket[0] + "".join(ob) + "".join(ok)
            K = np.einsum(expr, np.conj(tb), tk)
            self._pair_cache[key] = K
        return K

    def block(self, spect_assign: dict, bra_loop, ket_loop, fs) -> np.ndarray:
        """<bra choices| sum_f c_f chi_f(loop) |ket choices> as a dense matrix."""
        geo = self.geo
        bra_full = dict(spect_assign)
        ket_full = dict(spect_assign)
        for l, jb, jk in zip(geo.links, bra_loop, ket_loop):
            bra_full[l] = jb
            ket_full[l] = jk
        site_ops = [self._pair(x, self._sig(x, bra_full), self._sig(x, ket_full)) for x in geo.sites]
        rows = int(np.prod([K.shape[0] for K in site_ops]))
        cols = int(np.prod([K.shape[1] for K in site_ops]))
        total = None
        for f, coeff in fs:
            link_ops = [
                link_coupling_tensor(self.S, jb, jk, f, sgn) for jb, jk, sgn in zip(bra_loop, ket_loop, geo.signs)
            ]
            ops = site_ops + link_ops
            shapes = tuple(o.shape for o in ops)
            plan = self._paths.get(shapes)
            if plan is None:
                plan = _compile_plan(self.expr, ops)
                self._paths[shapes] = plan
            val = coeff * _run_plan(plan, ops).reshape(rows, cols)
            total = val if total is None else total + val
        return total


def plaquette_operator(basis: SpinNetworkBasis, loop, hB: ClassFunction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All nonzero matrix elements (row, col, value) of h_B on one loop.

    The constant part (trivial-irrep coefficient) contributes c_0 on the
    diagonal.
    """
    geo = _geometry(basis, loop)
    n = len(basis)
    real = basis.is_real() and np.all(np.abs(hB.coefficients.imag) == 0)
    dtype = np.float64 if real else np.complex128
    terms = [(j, (c.real if real else c)) for j, c in hB.active()]
    if not terms:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, dtype)

    owner = basis.state_assignment_index()
    choices = basis.state_choices()
    assign = basis.assignments.astype(np.int64)[owner]  # (n, L)

    # group = all off-loop data; spectator class = irreps on spectator links
    key = np.concatenate([assign[:, geo.off_links], choices[:, geo.off_sites]], axis=1)
    if key.shape[1]:
        _, group = np.unique(key, axis=0, return_inverse=True)
        group = group.ravel()
    else:
        group = np.zeros(n, dtype=np.int64)
    spect = assign[:, geo.spect_links]
    if spect.shape[1]:
        spect_keys, spect_id = np.unique(spect, axis=0, return_inverse=True)
        spect_id = spect_id.ravel()
    else:
        spect_keys, spect_id = np.zeros((1, 0), np.int64), np.zeros(n, np.int64)
    loop_assign = assign[:, geo.links]
    loop_choice = choices[:, geo.sites]

    fusion = basis.irreps.fusion_table()
    dual = dual_irreps(basis.irreps)
    contractor = _LoopContractor(basis, geo, terms)
    rows_out, cols_out, vals_out = [], [], []
    for s_idx, skey in enumerate(spect_keys):
        members = np.flatnonzero(spect_id == s_idx)
        spect_assign = dict(zip(geo.spect_links, skey.tolist()))
        loops_here, inv_loop = np.unique(loop_assign[members], axis=0, return_inverse=True)
        inv_loop = inv_loop.ravel()
        # local index = offset of the loop irreps + mixed-radix loop-site choice
        first = np.zeros(len(loops_here), dtype=np.int64)
        first[inv_loop[::-1]] = members[::-1]
        dims = basis.inv_dims[owner[first]][:, geo.sites]
        sizes = np.prod(dims, axis=1)
        loc_off = np.concatenate([[0], np.cumsum(sizes)])
        n_loc = int(loc_off[-1])
        radix = np.zeros(len(members), dtype=np.int64)
        for k in range(len(geo.sites)):
            radix = radix * dims[inv_loop, k] + loop_choice[members, k]
        local = loc_off[inv_loop] + radix

        M = np.zeros((n_loc, n_loc), dtype=dtype)
        # fusion-rule screen for every (bra, ket) pair and every character
        allowed = np.ones((len(terms), len(loops_here), len(loops_here)), dtype=bool)
        for t, (f, _) in enumerate(terms):
            for k, sgn in enumerate(geo.signs):
                # a reversed link multiplies by rho_f(g^-1), which carries the dual irrep
                fk = f if sgn > 0 else dual[f]
                allowed[t] &= fusion[loops_here[:, None, k], fk, loops_here[None, :, k]] > 0
        for p, q in zip(*np.nonzero(np.triu(allowed.any(axis=0)))):
            fs = [terms[t] for t in range(len(terms)) if allowed[t, p, q]]
            blk = contractor.block(spect_assign, loops_here[p].tolist(), loops_here[q].tolist(), fs)
            if real:
                blk = blk.real
            M[loc_off[p] : loc_off[p + 1], loc_off[q] : loc_off[q + 1]] = blk
            if q != p:
                M[loc_off[q] : loc_off[q + 1], loc_off[p] : loc_off[p + 1]] = blk.conj().T
        if np.max(np.abs(M - M.conj().T), initial=0.0) > 1e-10:
            raise HamiltonianError("plaquette block is not Hermitian")
        M[np.abs(M) < DROP_TOL] = 0

        # every spectator group of this class holds each local state exactly once
        grp = group[members]
        order = np.lexsort((local, grp))
        g_sorted = grp[order]
        n_groups = len(np.unique(g_sorted))
        if n_groups * n_loc != len(members):
            raise HamiltonianError("spectator groups do not factorize over loop data")
        idx = members[order].reshape(n_groups, n_loc)
        if not np.array_equal(local[order].reshape(n_groups, n_loc), np.tile(np.arange(n_loc), (n_groups, 1))):
            raise HamiltonianError("inconsistent local indexing inside a spectator group")
        r, c = np.nonzero(M)
        rows_out.append(idx[:, r].ravel())
        cols_out.append(idx[:, c].ravel())
        vals_out.append(np.tile(M[r, c], n_groups))
    rows = np.concatenate(rows_out) if rows_out else np.zeros(0, np.int64)
    cols = np.concatenate(cols_out) if cols_out else np.zeros(0, np.int64)
    vals = np.concatenate(vals_out) if vals_out else np.zeros(0, dtype)
    return rows, cols, vals


def magnetic_matrix(basis: SpinNetworkBasis, hB: ClassFunction) -> sp.csr_matrix:
    """Sum of plaquette operators over all lattice loops, as CSR."""
    n = len(basis)
    parts = [plaquette_operator(basis, loop, hB) for loop in basis.lattice.plaquettes]
    if not parts:
        return sp.csr_matrix((n, n))
    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    vals = np.concatenate([p[2] for p in parts])
    M = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    M.sum_duplicates()
    M.data[np.abs(M.data) < DROP_TOL] = 0
    M.eliminate_zeros()
    M.sort_indices()
    return M


@dataclass
class SparseHamiltonian:
    """H(lambda) = (1 - lambda) H_E + lambda H_B with H_E diagonal.

    The magnetic part is stored as its upper triangle (row <= col); the
    full matrix is its Hermitian completion.
    """

    n: int
    electric: np.ndarray
    upper_rows: np.ndarray
    upper_cols: np.ndarray
    upper_vals: np.ndarray
    lam: float = 0.0
    metadata: dict = field(default_factory=dict)
    _HB: sp.csr_matrix | None = field(default=None, repr=False)
    _rows: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_parts(cls, electric: np.ndarray, magnetic: sp.spmatrix, lam: float = 0.0, **meta):
        up = sp.triu(magnetic, format="coo")
        order = np.lexsort((up.col, up.row))
        return cls(
            n=len(electric),
            electric=np.asarray(electric, dtype=float),
            upper_rows=up.row[order].astype(np.int64),
            upper_cols=up.col[order].astype(np.int64),
            upper_vals=up.data[order],
            lam=float(lam),
            metadata=dict(meta),
        )

    @property
    def dtype(self):
        return self.upper_vals.dtype

    @property
    def magnetic(self) -> sp.csr_matrix:
        if self._HB is None:
            off = self.upper_rows != self.upper_cols
            rows = np.concatenate([self.upper_rows, self.upper_cols[off]])
            cols = np.concatenate([self.upper_cols, self.upper_rows[off]])
            vals = np.concatenate([self.upper_vals, np.conj(self.upper_vals[off])])
            HB = sp.coo_matrix((vals, (rows, cols)), shape=(self.n, self.n)).tocsr()
            HB.sort_indices()
            self._HB = HB
            self._rows = np.repeat(np.arange(self.n), np.diff(HB.indptr))
        return self._HB

    def magnetic_nnz(self) -> int:
        return int(self.magnetic.nnz)

    def nonzero_fraction(self) -> float:
        return self.magnetic_nnz() / float(self.n) ** 2

    def with_lambda(self, lam: float) -> "SparseHamiltonian":
        _check_lambda(lam)
        out = SparseHamiltonian(
            self.n, self.electric, self.upper_rows, self.upper_cols, self.upper_vals, float(lam), self.metadata
        )
        out._HB, out._rows = self.magnetic, self._rows
        return out

    def matrix(self, lam: float | None = None) -> sp.csr_matrix:
        lam = self.lam if lam is None else lam
        return ((1 - lam) * sp.diags(self.electric) + lam * self.magnetic).tocsr()

    def dense(self, lam: float | None = None) -> np.ndarray:
        return self.matrix(lam).toarray()

    def matvec_magnetic(self, x: np.ndarray) -> np.ndarray:
        HB = self.magnetic
        return _kernels.csr_matvec(HB.indptr, HB.indices, HB.data, x, self._rows)

    def matvec(self, x: np.ndarray, lam: float | None = None) -> np.ndarray:
        lam = self.lam if lam is None else lam
        out = (1 - lam) * self.electric * x
        if lam != 0:
            out = out + lam * self.matvec_magnetic(x)
        return out

    def expectation(self, v: np.ndarray) -> tuple[float, float]:
        """(<H_E>, <H_B>) in a normalised vector."""
        he = float(np.real(np.vdot(v, self.electric * v)))
        hb = float(np.real(np.vdot(v, self.matvec_magnetic(v))))
        return he, hb

    def hermiticity_error(self) -> float:
        """max |H_B - H_B^+| recomputed from the stored lower completion."""
        HB = self.magnetic
        D = HB - HB.conj().T
        return float(np.max(np.abs(D.data), initial=0.0))


def _check_lambda(lam: float) -> None:
    if not (0.0 <= lam <= 1.0) or not np.isfinite(lam):
        raise HamiltonianError(f"lambda must lie in [0, 1], got {lam}")


def assemble(
    basis: SpinNetworkBasis, spec: ElectricSpectrum, hB: ClassFunction, lam: float
) -> SparseHamiltonian:
    """Build H(lambda) = (1 - lambda) H_E + lambda H_B."""
    _check_lambda(lam)
    HE = electric_diagonal(basis, spec)
    HB = magnetic_matrix(basis, hB)
    return SparseHamiltonian.from_parts(HE, HB, lam)


def build_hamiltonian(basis: SpinNetworkBasis, spec: ElectricSpectrum, hB: ClassFunction) -> SparseHamiltonian:
    """Lambda-independent parts; use ``with_lambda`` to pick a coupling."""
    return assemble(basis, spec, hB, 0.0)


def write_coordinate_text(H: SparseHamiltonian, lam: float | None = None, header: Sequence[str] = ()) -> str:
    """``n nnz`` then ``row col re [im]`` for the full matrix, rows ascending."""
    M = sp.coo_matrix(H.matrix(lam))
    order = np.lexsort((M.col, M.row))
    complex_out = np.iscomplexobj(M.data) and np.any(M.data.imag != 0)
    lines = [f"# {h}" for h in header]
    lines.append(f"{M.shape[0]} {M.nnz}")
    for k in order:
        v = M.data[k]
        if complex_out:
            lines.append(f"{M.row[k]} {M.col[k]} {v.real:.17g} {v.imag:.17g}")
        else:
            lines.append(f"{M.row[k]} {M.col[k]} {float(np.real(v)):.17g}")
    return "\n".join(lines) + "\n"


def read_coordinate_text(text: str) -> sp.csr_matrix:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    n, nnz = (int(v) for v in lines[0].split())
    rows, cols, vals = [], [], []
    for ln in lines[1 : 1 + nnz]:
        parts = ln.split()
        rows.append(int(parts[0]))
        cols.append(int(parts[1]))
        vals.append(complex(float(parts[2]), float(parts[3])) if len(parts) > 3 else float(parts[2]))
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
