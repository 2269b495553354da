"""Eigensolvers, lambda sweeps, fidelity susceptibility and transition points."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .hamiltonian import SparseHamiltonian

__all__ = [
    "SolverError",
    "LanczosError",
    "EigenResult",
    "SweepRecord",
    "FidelityResult",
    "TransitionEstimate",
    "SolverOptions",
    "dense_eig",
    "lanczos_lowest",
    "lowest_states",
    "ground_observables",
    "fidelity_susceptibility",
    "sweep",
    "transition_points",
    "default_grid",
    "refined_grid",
    "hellmann_feynman_residual",
]

logger = logging.getLogger(__name__)

DENSE_CAP = 4096
DEFAULT_SEED = 20240601
CLUSTER_TOL = 1e-8
HERMITIAN_TOL = 1e-10


class SolverError(RuntimeError):
    pass


class LanczosError(SolverError):
    def __init__(self, message: str, residuals: Sequence[float]):
        super().__init__(message)
        self.residuals = list(residuals)


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray  # columns
    residuals: np.ndarray
    degeneracy: int

    def __len__(self):
        return len(self.values)


@dataclass
class SolverOptions:
    k: int = 2
    tol: float = 1e-10
    seed: int = DEFAULT_SEED
    dense_cap: int = DENSE_CAP
    krylov_dim: int = 80
    max_restarts: int = 500
    max_k: int = 64
    cluster_tol: float = CLUSTER_TOL
    epsilon: float = 1e-3
    method: str = "auto"  # auto | dense | lanczos


# --------------------------------------------------------------------------
# operators
# --------------------------------------------------------------------------


def _operator(H, lam=None) -> tuple[Callable[[np.ndarray], np.ndarray], int, np.dtype]:
    if isinstance(H, SparseHamiltonian):
        lam = H.lam if lam is None else lam
        return (lambda x: H.matvec(x, lam)), H.n, np.result_type(H.dtype, np.float64)
    if sp.issparse(H):
        M = H.tocsr()
        return (lambda x: M @ x), M.shape[0], np.result_type(M.dtype, np.float64)
    M = np.asarray(H)
    return (lambda x: M @ x), M.shape[0], np.result_type(M.dtype, np.float64)


def _dense(H, lam=None) -> np.ndarray:
    if isinstance(H, SparseHamiltonian):
        return H.dense(lam)
    if sp.issparse(H):
        return H.toarray()
    return np.asarray(H)


def _degeneracy(values: np.ndarray, cluster_tol: float) -> int:
    if len(values) == 0:
        return 0
    scale = max(1.0, abs(values[0]))
    return int(np.sum(values - values[0] <= cluster_tol * scale))


# --------------------------------------------------------------------------
# dense
# --------------------------------------------------------------------------


def dense_eig(M, cap: int = DENSE_CAP, cluster_tol: float = CLUSTER_TOL) -> EigenResult:
    """Full spectrum of a Hermitian matrix through LAPACK's Hermitian solver."""
    A = _dense(M)
    n = A.shape[0]
    if A.shape != (n, n):
        raise SolverError(f"matrix is not square: {A.shape}")
    if n > cap:
        raise SolverError(f"dimension {n} exceeds the dense cap {cap}")
    asym = float(np.max(np.abs(A - A.conj().T), initial=0.0))
    if asym > HERMITIAN_TOL:
        raise SolverError(f"matrix is not Hermitian (max asymmetry {asym:.3g})")
    A = (A + A.conj().T) / 2
    w, V = np.linalg.eigh(A)
    res = np.linalg.norm(A @ V - V * w, axis=0)
    bound = 1e-8 * np.maximum(1.0, np.abs(w)) * max(1.0, math.sqrt(n) / 10)
    if np.any(res > bound):
        raise SolverError(f"dense eigensolver residual {res.max():.3g} above contract")
    return EigenResult(w, V, res, _degeneracy(w, cluster_tol))


# --------------------------------------------------------------------------
# Lanczos with locking
# --------------------------------------------------------------------------


def _orth(V: np.ndarray, w: np.ndarray) -> np.ndarray:
    if V.shape[1] == 0:
        return w
    for _ in range(2):
        w = w - V @ (V.conj().T @ w)
    return w


def _lowest_pair(matvec, n, dtype, locked, v0, m, tol, max_restarts, rng):
    """Lowest eigenpair of the operator deflated by the locked vectors."""
    free = n - locked.shape[1]
    m = max(1, min(m, free))
    v = _orth(locked, v0.astype(dtype))
    nv = np.linalg.norm(v)
    if nv < 1e-8:
        v = _orth(locked, rng.standard_normal(n).astype(dtype))
        nv = np.linalg.norm(v)
    v = v / nv
    best = (np.inf, None, None)
    second = None
    for restart in range(max_restarts):
        V = np.zeros((n, m + 1), dtype=dtype)
        alpha = np.zeros(m)
        beta = np.zeros(m)
        V[:, 0] = v
        steps = m
        for j in range(m):
            hv = matvec(V[:, j])
            scale = max(float(np.linalg.norm(hv)), 1e-300)
            w = _orth(locked, hv)
            alpha[j] = np.real(np.vdot(V[:, j], w))
            w = _orth(locked, _orth(V[:, : j + 1], w))
            beta[j] = np.linalg.norm(w)
            if beta[j] <= 1e-10 * scale:
                # invariant subspace: the Ritz pairs are exact here
                steps = j + 1
                break
            w = _orth(locked, _orth(V[:, : j + 1], w / beta[j]))
            V[:, j + 1] = w / np.linalg.norm(w)
        T = np.diag(alpha[:steps]) + np.diag(beta[: steps - 1], 1) + np.diag(beta[: steps - 1], -1)
        theta, s = np.linalg.eigh(T)
        x = V[:, :steps] @ s[:, 0]
        x = x / np.linalg.norm(x)
        r = _orth(locked, matvec(x)) - theta[0] * x
        res = float(np.linalg.norm(r))
        if res < best[0]:
            best = (res, theta[0], x)
        if steps > 1:
            second = V[:, :steps] @ s[:, 1]
        if res <= tol * max(1.0, abs(theta[0])):
            return float(theta[0]), x, res, second
        v = x
    raise LanczosError(f"Lanczos did not converge after {max_restarts} restarts", [best[0]])


def lanczos_lowest(
    H,
    k: int = 2,
    tol: float = 1e-10,
    seed: int = DEFAULT_SEED,
    lam: float | None = None,
    krylov_dim: int = 80,
    max_restarts: int = 500,
    extend_degenerate: bool = True,
    max_k: int = 64,
    cluster_tol: float = CLUSTER_TOL,
) -> EigenResult:
    """k lowest eigenpairs, one at a time with explicit deflation.

    Every pair is found by restarted Lanczos with full
    reorthogonalisation on the complement of the pairs already locked, so
    all copies of a degenerate level are recovered. With
    ``extend_degenerate`` the count grows until a value above the ground
    cluster has been found (at most ``max_k``).
    """
    matvec, n, dtype = _operator(H, lam)
    k = min(k, n)
    rng = np.random.default_rng(seed)
    locked = np.zeros((n, 0), dtype=dtype)
    values, residuals = [], []
    start = rng.standard_normal(n)
    if np.issubdtype(dtype, np.complexfloating):
        start = start + 1j * rng.standard_normal(n)
    target = k
    while len(values) < target:
        theta, x, res, nxt = _lowest_pair(matvec, n, dtype, locked, start, krylov_dim, tol, max_restarts, rng)
        values.append(theta)
        residuals.append(res)
        locked = np.concatenate([locked, x[:, None]], axis=1)
        fresh = rng.standard_normal(n).astype(dtype)
        start = fresh if nxt is None else nxt + 1e-3 * fresh / math.sqrt(n)
        if extend_degenerate and len(values) == target and target < min(max_k, n):
            # keep going while the ground level is still open
            ref = min(values)
            if values[-1] - ref <= cluster_tol * max(1.0, abs(ref)):
                target += 1
    vals = np.array(values)
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], locked[:, order]
    # Rayleigh-Ritz on the locked space cleans up any ordering slips
    Hv = np.stack([matvec(vecs[:, i]) for i in range(vecs.shape[1])], axis=1)
    R = vecs.conj().T @ Hv
    w, U = np.linalg.eigh((R + R.conj().T) / 2)
    vecs = vecs @ U
    Hv = Hv @ U
    res = np.linalg.norm(Hv - vecs * w, axis=0)
    return EigenResult(w, vecs, res, _degeneracy(w, cluster_tol))


def lowest_states(H, lam: float | None = None, options: SolverOptions | None = None) -> EigenResult:
    """Dispatch between dense and Lanczos solvers according to the options."""
    opt = options or SolverOptions()
    n = H.n if isinstance(H, SparseHamiltonian) else H.shape[0]
    method = opt.method
    if method == "auto":
        method = "dense" if n <= min(opt.dense_cap, 600) else "lanczos"
    if method == "dense":
        r = dense_eig(_dense(H, lam), cap=opt.dense_cap, cluster_tol=opt.cluster_tol)
        return r
    return lanczos_lowest(
        H,
        k=opt.k,
        tol=opt.tol,
        seed=opt.seed,
        lam=lam,
        krylov_dim=opt.krylov_dim,
        max_restarts=opt.max_restarts,
        max_k=opt.max_k,
        cluster_tol=opt.cluster_tol,
    )


# --------------------------------------------------------------------------
# observables
# --------------------------------------------------------------------------


@dataclass
class SweepRecord:
    lam: float
    E0: float
    gap: float
    exp_HE: float
    exp_HB: float
    chi: float  # nan when undefined
    degeneracy: int
    chi_warning: str = ""

    def row(self) -> list:
        return [self.lam, self.E0, self.gap, self.exp_HE, self.exp_HB, self.chi, self.degeneracy]


@dataclass
class FidelityResult:
    value: float
    defined: bool
    half_step_value: float = float("nan")
    richardson_ok: bool = True
    warning: str = ""


@dataclass
class TransitionEstimate:
    method: str
    lam: float | None
    uncertainty: float

    @property
    def found(self) -> bool:
        return self.lam is not None


def ground_observables(H: SparseHamiltonian, res: EigenResult, cluster_tol: float = CLUSTER_TOL):
    """(<H_E>, <H_B>) averaged over the degenerate ground level."""
    d = max(1, _degeneracy(res.values, cluster_tol))
    he = hb = 0.0
    for i in range(d):
        a, b = H.expectation(res.vectors[:, i])
        he += a
        hb += b
    return he / d, hb / d


def _ground(H: SparseHamiltonian, lam: float, opt: SolverOptions) -> EigenResult:
    return lowest_states(H, lam, opt)


def _overlap_chi(v0: np.ndarray, v1: np.ndarray, eps: float) -> float:
    ov = abs(np.vdot(v0, v1)) ** 2
    ov = min(ov, 1.0)
    if ov <= 0:
        return float("inf")
    return -2.0 * math.log(ov) / eps**2


def fidelity_susceptibility(
    H: SparseHamiltonian,
    lam: float,
    eps: float = 1e-3,
    options: SolverOptions | None = None,
    base: EigenResult | None = None,
) -> FidelityResult:
    """chi = -d^2/de^2 log |<psi0(lam)|psi0(lam + e)>|^2 by finite differences.

    For a smooth ground state, log|overlap|^2 = -(chi/2) e^2 + O(e^3), so
    chi ~ -2 log|overlap|^2 / e^2. The step goes backwards when lam + e
    leaves [0, 1]. A second estimate at e/2 must agree within 5%.
    """
    opt = options or SolverOptions()
    step = eps if lam + eps <= 1.0 else -eps
    r0 = base if base is not None else _ground(H, lam, opt)
    gap_tol = 1e-8
    if r0.degeneracy > 1 or len(r0.values) < 2 or r0.values[1] - r0.values[0] <= gap_tol:
        return FidelityResult(float("nan"), False, warning="degenerate ground state")
    r1 = _ground(H, lam + step, opt)
    r2 = _ground(H, lam + step / 2, opt)
    for r in (r1, r2):
        if r.degeneracy > 1 or len(r.values) < 2 or r.values[1] - r.values[0] <= gap_tol:
            return FidelityResult(float("nan"), False, warning="degenerate ground state at shifted coupling")
    chi = _overlap_chi(r0.vectors[:, 0], r1.vectors[:, 0], step)
    chi_half = _overlap_chi(r0.vectors[:, 0], r2.vectors[:, 0], step / 2)
    ok = abs(chi - chi_half) <= 0.05 * max(abs(chi), abs(chi_half), 1e-12) or max(chi, chi_half) < 1e-6
    warn = "" if ok else f"step-halving estimates disagree: {chi:.6g} vs {chi_half:.6g}"
    if warn:
        warnings.warn(f"fidelity susceptibility at lambda={lam}: {warn}", RuntimeWarning, stacklevel=2)
    return FidelityResult(chi, True, chi_half, ok, warn)


def default_grid(points: int = 101) -> np.ndarray:
    return np.round(np.linspace(0.0, 1.0, points), 12)


def refined_grid(points: int = 101, lo: float = 0.55, hi: float = 0.85, factor: int = 4) -> np.ndarray:
    """Uniform grid with ``factor`` times the density inside [lo, hi]."""
    base = default_grid(points)
    step = (base[1] - base[0]) / factor
    fine = np.arange(lo, hi + step / 2, step)
    return np.unique(np.round(np.concatenate([base, fine]), 12))


def sweep(
    H: SparseHamiltonian,
    grid: Sequence[float],
    options: SolverOptions | None = None,
    fidelity: bool = True,
    progress: Callable[[int, int], None] | None = None,
) -> list[SweepRecord]:
    """Ground-state observables of H(lambda) across a sorted grid."""
    opt = options or SolverOptions()
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("grid must be a non-empty 1-d sequence")
    if np.any(np.diff(grid) < 0) or grid[0] < 0 or grid[-1] > 1:
        raise ValueError("grid must be sorted inside [0, 1]")
    out = []
    for i, lam in enumerate(grid):
        try:
            r = _ground(H, float(lam), opt)
            he, hb = ground_observables(H, r, opt.cluster_tol)
            gap = float(r.values[1] - r.values[0]) if len(r.values) > 1 else float("nan")
            chi, warn = float("nan"), ""
            if fidelity:
                fr = fidelity_susceptibility(H, float(lam), opt.epsilon, opt, base=r)
                chi, warn = fr.value, fr.warning
        except SolverError as exc:
            raise SolverError(f"at lambda={lam}: {exc}") from exc
        out.append(SweepRecord(float(lam), float(r.values[0]), gap, he, hb, chi, int(r.degeneracy), warn))
        if progress is not None:
            progress(i + 1, len(grid))
    return out


# --------------------------------------------------------------------------
# transition points
# --------------------------------------------------------------------------


def _peak(x: np.ndarray, y: np.ndarray) -> float | None:
    """Location of the largest interior value, refined by a parabola."""
    n = len(x)
    ok = np.isfinite(y)
    cand = [i for i in range(1, n - 1) if ok[i - 1] and ok[i] and ok[i + 1]]
    if not cand:
        return None
    i = max(cand, key=lambda k: y[k])
    if not (y[i] >= y[i - 1] and y[i] >= y[i + 1]) or (y[i] == y[i - 1] and y[i] == y[i + 1]):
        return None
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if a >= 0:
        return float(x1)
    xv = -b / (2 * a)
    return float(min(max(xv, x0), x2))


def transition_points(records: Sequence[SweepRecord]) -> dict[str, TransitionEstimate]:
    """lambda* from the steepest <H_E>, the steepest <H_B> and the chi peak."""
    if len(records) < 5:
        raise ValueError("need at least five sweep points")
    lam = np.array([r.lam for r in records])
    spacing = float(np.max(np.diff(lam)))
    out = {}
    for name, vals in (
        ("electric", np.array([r.exp_HE for r in records])),
        ("magnetic", np.array([r.exp_HB for r in records])),
    ):
        d = np.abs(np.gradient(vals, lam))
        out[name] = TransitionEstimate(name, _peak(lam, d), spacing)
    chi = np.array([r.chi for r in records], dtype=float)
    out["fidelity"] = TransitionEstimate("fidelity", _peak(lam, chi), spacing)
    return out


def hellmann_feynman_residual(records: Sequence[SweepRecord]) -> np.ndarray:
    """Relative mismatch between dE0/dlambda and <H_B> - <H_E>.

    Central differences only; the two endpoints are NaN. The mismatch is
    scaled by max(|<H_B> - <H_E>|, 1) so a vanishing slope does not blow up.
    """
    lam = np.array([r.lam for r in records])
    E = np.array([r.E0 for r in records])
    slope = np.array([r.exp_HB - r.exp_HE for r in records])
    out = np.full(len(records), np.nan)
    if len(records) >= 3:
        dE = (E[2:] - E[:-2]) / (lam[2:] - lam[:-2])
        out[1:-1] = np.abs(dE - slope[1:-1]) / np.maximum(np.abs(slope[1:-1]), 1.0)
    return out
