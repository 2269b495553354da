"""Time the numpy and numba kernel paths against each other.

Usage::

    python benchmarks/bench_kernels.py [--dim 8960] [--density 0.0021] [--repeat 20]

The defaults match the magnetic matrix of D4 on the 2x2 periodic lattice.
Run with ``FINITEGAUGE_NUMBA=0`` to confirm the library falls back cleanly;
the numba column is then skipped.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np
import scipy.sparse as sp

from finitegauge import _kernels as K


def best_of(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def random_csr(dim: int, density: float, rng: np.random.Generator) -> sp.csr_matrix:
    A = sp.random(dim, dim, density=density, format="csr", random_state=rng, dtype=np.float64)
    return (A + A.T).tocsr()


def random_perms(k: int, n: int, cycle: int, rng: np.random.Generator) -> np.ndarray:
    """k permutations of n points, each a product of disjoint ``cycle``-cycles on a random subset."""
    perms = np.tile(np.arange(n), (k, 1))
    for row in perms:
        pts = rng.choice(n, size=(n // (4 * cycle), cycle), replace=False)
        row[pts] = np.roll(pts, 1, axis=1)
    return perms


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=8960)
    ap.add_argument("--density", type=float, default=0.0021)
    ap.add_argument("--points", type=int, default=200_000, help="points for the orbit benchmark")
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    A = random_csr(args.dim, args.density, rng)
    x = rng.standard_normal(args.dim)
    rows = np.repeat(np.arange(args.dim), np.diff(A.indptr))
    ref = A @ x
    print(f"backend selected by the library: {K.backend()}")
    print(f"csr_matvec: dim={args.dim} nnz={A.nnz}")
    t_np = best_of(lambda: K.csr_matvec_numpy(A.indptr, A.indices, A.data, x, rows), args.repeat)
    print(f"  numpy   {t_np * 1e3:9.3f} ms")
    if K.csr_matvec_numba is not None:
        assert np.allclose(K.csr_matvec_numba(A.indptr, A.indices, A.data, x), ref)
        t_nb = best_of(lambda: K.csr_matvec_numba(A.indptr, A.indices, A.data, x), args.repeat)
        print(f"  numba   {t_nb * 1e3:9.3f} ms  ({t_np / t_nb:.1f}x vs numpy)")
    t_sp = best_of(lambda: A @ x, args.repeat)
    print(f"  scipy   {t_sp * 1e3:9.3f} ms  (reference)")

    perms = random_perms(8, args.points, 4, rng)
    print(f"orbit_labels: points={args.points} generators={len(perms)}")
    lab = K.orbit_labels_numpy(perms)
    reps = max(1, args.repeat // 5)
    t_np = best_of(lambda: K.orbit_labels_numpy(perms), reps)
    print(f"  numpy   {t_np * 1e3:9.3f} ms  ({len(np.unique(lab))} orbits)")
    if K.orbit_labels_numba is not None:
        assert np.array_equal(K.orbit_labels_numba(perms), lab)
        t_nb = best_of(lambda: K.orbit_labels_numba(perms), reps)
        print(f"  numba   {t_nb * 1e3:9.3f} ms  ({t_np / t_nb:.1f}x vs numpy)")


if __name__ == "__main__":
    main()
