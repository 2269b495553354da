import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finitegauge.group import (
    GroupTableError,
    Subset,
    build_cyclic,
    build_dihedral,
    build_symmetric,
    conjugacy_classes,
    cycle_type,
    generated_subgroup,
    generators,
    is_subgroup_closed,
    load_group_table,
    write_group_table,
)


def _brute_classes(G):
    seen, out = set(), []
    for h in range(G.order):
        if h in seen:
            continue
        cls = {int(G.mul[G.mul[g, h], G.inv[g]]) for g in range(G.order)}
        seen |= cls
        out.append(cls)
    return sorted(len(c) for c in out)


def test_cyclic_five_is_abelian_with_singleton_classes():
    G = build_cyclic(5)
    assert G.order == 5
    assert G.is_abelian
    assert len(G.classes) == 5 and all(len(c) == 1 for c in G.classes)


def test_cyclic_four_matches_hand_written_table(data_dir):
    loaded = load_group_table((data_dir / "z4.table").read_text())
    assert loaded.same_table(build_cyclic(4))
    assert loaded.names == ("e", "x", "x2", "x3")


def test_dihedral_four_classes(D4):
    assert D4.order == 8
    named = [sorted(D4.names[g] for g in c) for c in D4.classes]
    assert named == [["e"], ["r", "r3"], ["r2"], ["r2s", "s"], ["r3s", "rs"]]
    assert list(D4.class_sizes) == [1, 2, 1, 2, 2]
    assert D4.class_sizes.sum() == 8


def test_dihedral_two_is_klein_four():
    G = build_dihedral(2)
    assert G.order == 4 and G.is_abelian
    assert _brute_classes(G) == [1, 1, 1, 1]


def test_symmetric_class_sizes():
    assert sorted(len(c) for c in build_symmetric(3).classes) == [1, 2, 3]
    assert sorted(len(c) for c in build_symmetric(4).classes) == sorted([1, 6, 3, 8, 6])


def test_symmetric_five_cycle_class(S5):
    assert S5.order == 120
    five = [c for c in S5.classes if cycle_type(_perm(S5, c[0])) == (5,)]
    assert len(five) == 1 and len(five[0]) == 24
    brute = sum(1 for p in itertools.permutations(range(5)) if cycle_type(p) == (5,))
    assert brute == 24


def _perm(G, g):
    name = G.names[g]
    return list(range(5)) if name == "e" else [int(c) - 1 for c in name]


def test_generated_subgroups(D4, S5):
    rot = generated_subgroup(D4, Subset.of(D4, ["r", "r2", "r3"]))
    assert len(rot.subgroup) == 4 and rot.index == 2
    assert generated_subgroup(D4, Subset.of(D4, ["r", "r3", "s", "r2s"])).index == 1
    five = next(c for c in S5.classes if cycle_type(_perm(S5, c[0])) == (5,))
    A5 = generated_subgroup(S5, five)
    assert len(A5.subgroup) == 60 and A5.index == 2


def test_generators_generate(D4, S5):
    for G in (D4, S5, build_cyclic(7)):
        assert generated_subgroup(G, generators(G)).index == 1


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("", "empty"),
        ("order 2\ne x\n0 1\n1 1\n", ""),
        ("order 2\ne x\n0 1\n", "rows"),
        ("ord 2\n", "first line"),
        ("order 3\na b c\n0 1 2\n1 2 0\n2 0 0\n", ""),
    ],
)
def test_malformed_tables_rejected(text, fragment):
    with pytest.raises(GroupTableError) as info:
        load_group_table(text)
    assert fragment in str(info.value)


def test_non_associative_table_rejected():
    # a Latin square with identity that is not associative (order 5 loop)
    rows = [[0, 1, 2, 3, 4], [1, 0, 3, 4, 2], [2, 4, 0, 1, 3], [3, 2, 4, 0, 1], [4, 3, 1, 2, 0]]
    text = "order 5\na b c d f\n" + "\n".join(" ".join(map(str, r)) for r in rows)
    with pytest.raises(GroupTableError, match="associat"):
        load_group_table(text)


@given(st.sampled_from(["cyclic", "dihedral"]), st.integers(2, 12))
def test_group_axioms_and_roundtrip(family, n):
    G = build_cyclic(n) if family == "cyclic" else build_dihedral(n)
    mul, inv = G.mul, G.inv
    a, b, c = np.meshgrid(np.arange(G.order), np.arange(G.order), np.arange(G.order), indexing="ij")
    assert np.array_equal(mul[mul[a, b], c], mul[a, mul[b, c]])
    assert np.all(mul[np.arange(G.order), inv] == G.identity)
    assert G.class_sizes.sum() == G.order
    assert sorted(len(c) for c in conjugacy_classes(G)) == _brute_classes(G)
    again = load_group_table(write_group_table(G))
    assert again.same_table(G) and again.names == G.names


@given(st.integers(2, 10), st.data())
def test_subgroup_closure_property(n, data):
    G = build_dihedral(n)
    elems = data.draw(st.lists(st.integers(0, G.order - 1), min_size=1, max_size=4))
    H = generated_subgroup(G, elems)
    assert G.order % len(H.subgroup) == 0
    assert len(H.cosets) == H.index
    assert is_subgroup_closed(G, H.subgroup.members)
