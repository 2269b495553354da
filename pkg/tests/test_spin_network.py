from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finitegauge.electric import electric_levels, validate_gamma
from finitegauge.group import build_cyclic, build_dihedral
from finitegauge.lattice import hypercubic
from finitegauge.representation import builtin_irreps, invariance_residual
from finitegauge.spin_network import BasisError, electric_diagonal, enumerate_basis, physical_dimension

TABLE = [
    ((2, 2), False, 5),
    ((2, 2), True, 8960),
    ((2, 3), False, 28),
    ((2, 3), True, 536576),
    ((3, 3), False, 1216),
    ((3, 3), True, 269221888),
]


@pytest.mark.parametrize("extents, periodic, dim", TABLE)
def test_d4_dimension_table(D4, extents, periodic, dim):
    lat = hypercubic(extents, periodic)
    assert physical_dimension(D4, lat.n_links, lat.n_sites) == dim


def test_tree_dimension_is_one(D4):
    for G in (D4, build_cyclic(5)):
        assert physical_dimension(G, 3, 4) == 1
    with pytest.raises(ValueError):
        physical_dimension(D4, 1, 4)


@given(st.integers(-1, 12), st.integers(1, 30))
def test_d4_closed_form(excess, V):
    L = V + excess
    closed = Fraction(8) ** excess * (2 + 3 * Fraction(2) ** (-excess))
    assert physical_dimension(build_dihedral(4), L, V) == closed


@given(st.integers(2, 9), st.integers(-1, 12))
def test_abelian_closed_form(n, excess):
    assert physical_dimension(build_cyclic(n), 10 + excess, 10) == n ** (excess + 1)


@pytest.mark.parametrize(
    "group, periodic, count",
    [("Z2", False, 2), ("Z2", True, 32), ("Z3", False, 3), ("Z3", True, 243), ("D4", False, 5)],
)
def test_enumeration_matches_closed_form(group, periodic, count):
    G = build_cyclic(int(group[1])) if group[0] == "Z" else build_dihedral(4)
    basis = enumerate_basis(builtin_irreps(G), hypercubic((2, 2), periodic))
    assert len(basis) == count


def test_d4_torus_enumeration(torus_basis):
    assert len(torus_basis) == 8960
    # every stored site tensor is invariant
    S = torus_basis.irreps
    worst = max(invariance_residual(S, b) for b in torus_basis.tensors.values())
    assert worst < 1e-10


def test_z2_plaquette_states():
    S = builtin_irreps(build_cyclic(2))
    basis = enumerate_basis(S, hypercubic((2, 2), False))
    assert [basis.state(i)[0] for i in range(len(basis))] == [(0, 0, 0, 0), (1, 1, 1, 1)]
    gamma = validate_gamma(S.group, [1])
    assert list(electric_diagonal(basis, electric_levels(S.group, gamma, S))) == [0, 8]


def test_state_index_roundtrip(D4_irreps):
    basis = enumerate_basis(D4_irreps, hypercubic((2, 3), False))
    assert len(basis) == 28
    choices = basis.state_choices()
    owner = basis.state_assignment_index()
    for i in range(len(basis)):
        assignment, choice = basis.state(i)
        assert basis.index(assignment, choice) == i
        assert tuple(choices[i]) == choice
        assert tuple(basis.assignments[owner[i]]) == assignment
    with pytest.raises(KeyError):
        basis.index((1, 0, 0, 0, 0, 0, 0), (0,) * 6)


def test_state_cap_enforced(D4_irreps):
    with pytest.raises(BasisError, match="cap"):
        enumerate_basis(D4_irreps, hypercubic((2, 2), True), cap=1000)


def test_basis_is_gamma_independent(D4_irreps):
    lat = hypercubic((2, 2), False)
    a = enumerate_basis(D4_irreps, lat)
    b = enumerate_basis(D4_irreps, lat)
    assert np.array_equal(a.assignments, b.assignments)
