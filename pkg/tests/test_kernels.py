import numpy as np
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse.csgraph import connected_components

from finitegauge import _kernels


@given(st.integers(0, 1000), st.integers(1, 60), st.booleans())
def test_csr_matvec_backends_agree(seed, n, cplx):
    rng = np.random.default_rng(seed)
    M = sp.random(n, n, density=0.2, random_state=rng, format="csr")
    x = rng.standard_normal(n)
    if cplx:
        x = x + 1j * rng.standard_normal(n)
    ref = M @ x
    assert np.allclose(_kernels.csr_matvec_numpy(M.indptr, M.indices, M.data, x), ref, atol=1e-13)
    dt = np.result_type(M.data, x)
    loop = _kernels._csr_matvec_py(M.indptr, M.indices, M.data.astype(dt), x.astype(dt))
    assert np.allclose(loop, ref, atol=1e-13)
    if _kernels.csr_matvec_numba is not None:
        assert np.allclose(_kernels.csr_matvec_numba(M.indptr, M.indices, M.data, x), ref, atol=1e-13)


def _reference_orbits(perms):
    k, n = perms.shape
    edges = sp.coo_matrix((np.ones(k * n), (np.tile(np.arange(n), k), perms.ravel())), shape=(n, n))
    _, comp = connected_components(edges, directed=False)
    least = np.full(comp.max() + 1, n)
    np.minimum.at(least, comp, np.arange(n))
    return least[comp]


@given(st.integers(0, 1000), st.integers(2, 40), st.integers(1, 3))
def test_orbit_labels_backends_agree(seed, n, k):
    rng = np.random.default_rng(seed)
    perms = np.stack([rng.permutation(n) for _ in range(k)])
    ref = _reference_orbits(perms)
    assert np.array_equal(_kernels.orbit_labels_numpy(perms), ref)
    assert np.array_equal(_kernels._orbit_labels_py(perms), ref)
    if _kernels.orbit_labels_numba is not None:
        assert np.array_equal(_kernels.orbit_labels_numba(perms), ref)


def test_backend_flag():
    assert _kernels.backend() == ("numba" if _kernels.USE_NUMBA else "numpy")
