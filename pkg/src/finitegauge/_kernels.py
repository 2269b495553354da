"""Hot inner loops, compiled with numba when available.

Set ``FINITEGAUGE_NUMBA=0`` in the environment to force the pure-numpy
implementations (useful for debugging and for the benchmark that compares
the two). Both paths must produce identical results; the test-suite
checks them against each other.
"""

from __future__ import annotations

import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

_FLAG = os.environ.get("FINITEGAUGE_NUMBA", "1").strip().lower()
_WANT_NUMBA = _FLAG not in ("0", "false", "no", "off")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _WANT_NUMBA


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# --------------------------------------------------------------------------
# CSR matrix-vector product
# --------------------------------------------------------------------------


def csr_matvec_numpy(indptr, indices, data, x, rows=None):
    """y = A @ x for a CSR matrix given by its three arrays.

    ``rows`` (the expanded row index of every stored entry) can be passed
    in to avoid recomputing it on every call.
    """
    n = indptr.shape[0] - 1
    if rows is None:
        rows = np.repeat(np.arange(n), np.diff(indptr))
    prod = data * x[indices]
    if np.iscomplexobj(prod):
        return np.bincount(rows, weights=prod.real, minlength=n) + 1j * np.bincount(
            rows, weights=prod.imag, minlength=n
        )
    return np.bincount(rows, weights=prod, minlength=n)


def _csr_matvec_py(indptr, indices, data, x):
    # data and x share a dtype (the wrappers promote)
    n = indptr.shape[0] - 1
    out = np.zeros(n, dtype=x.dtype)
    for i in range(n):
        acc = out[i]
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * x[indices[p]]
        out[i] = acc
    return out


# --------------------------------------------------------------------------
# Orbit labelling under a set of permutations (union-find)
# --------------------------------------------------------------------------


def orbit_labels_numpy(perms: np.ndarray) -> np.ndarray:
    """Label each point by the least index in its orbit.

    ``perms`` has shape (k, n); row i maps point p to ``perms[i, p]``.
    Label propagation along the generators until nothing changes.
    """
    n = perms.shape[1]
    labels = np.arange(n)
    while True:
        new = labels.copy()
        for perm in perms:
            # a point and its image share an orbit
            np.minimum.at(new, perm, labels)
            new = np.minimum(new, new[perm])
        if np.array_equal(new, labels):
            return labels
        labels = new


def _orbit_labels_py(perms):
    k, n = perms.shape
    parent = np.arange(n)
    for i in range(k):
        for p in range(n):
            a = p
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            b = perms[i, p]
            while parent[b] != b:
                parent[b] = parent[parent[b]]
                b = parent[b]
            if a < b:
                parent[b] = a
            elif b < a:
                parent[a] = b
    labels = np.empty(n, dtype=np.int64)
    for p in range(n):
        a = p
        while parent[a] != a:
            a = parent[a]
        labels[p] = a
    return labels


if USE_NUMBA:
    _csr_matvec_jit = numba.njit(cache=True)(_csr_matvec_py)
    _orbit_labels_jit = numba.njit(cache=True)(_orbit_labels_py)

    def csr_matvec_numba(indptr, indices, data, x, rows=None):
        dt = np.result_type(data.dtype, x.dtype)
        return _csr_matvec_jit(indptr, indices, data.astype(dt, copy=False), x.astype(dt, copy=False))

    def orbit_labels_numba(perms):
        return _orbit_labels_jit(np.ascontiguousarray(perms, dtype=np.int64))

    csr_matvec = csr_matvec_numba
    orbit_labels = orbit_labels_numba
else:
    csr_matvec_numba = None
    orbit_labels_numba = None
    csr_matvec = csr_matvec_numpy
    orbit_labels = orbit_labels_numpy

logger.debug("finitegauge kernels using %s backend", backend())
