import pytest
from hypothesis import given
from hypothesis import strategies as st

from finitegauge.lattice import LatticeError, LatticeGraph, hypercubic, load_graph, site_links, write_graph


@pytest.mark.parametrize(
    "extents, periodic, L, V, P",
    [
        ((2, 2), True, 8, 4, 4),
        ((2, 2), False, 4, 4, 1),
        ((3, 3), False, 12, 9, 4),
        ((3, 3), True, 18, 9, 9),
        ((2, 2, 2), True, 24, 8, 24),
    ],
)
def test_hypercubic_counts(extents, periodic, L, V, P):
    lat = hypercubic(extents, periodic)
    assert (lat.n_links, lat.n_sites, len(lat.plaquettes)) == (L, V, P)


def test_site_degrees():
    torus = hypercubic((2, 2), True)
    assert all(len(site_links(torus, x)) == 4 for x in range(4))
    open3 = hypercubic((3, 3), False)
    assert len(site_links(open3, 0)) == 2
    assert len(site_links(open3, 4)) == 4


def test_graph_file_roundtrip(data_dir):
    lat = load_graph((data_dir / "plaquette.graph").read_text())
    assert lat.n_links == 4 and len(lat.plaquettes) == 1
    again = load_graph(write_graph(lat))
    assert again.links == lat.links and again.plaquettes == lat.plaquettes


def test_tree_has_no_loops():
    tree = LatticeGraph(4, ((0, 1), (1, 2), (1, 3)), ())
    assert tree.euler == -1 and tree.plaquettes == ()


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("sites 2\nlink 0 0 0\n", "self"),
        ("sites 3\nlink 0 0 1\n", "connected"),
        ("sites 2\nlink 0 0 1\nlink 1 0 1\nloop 0:+ 1:+\n", "clos"),
        ("sites 2\nlink 0 0 5\n", "outside"),
        ("link 0 0 1\n", "sites"),
        ("sites 2\nlink 0 0 1\nloop 0:x\n", "orientation"),
        ("sites 2\nbridge 0 1\n", "unknown"),
    ],
)
def test_bad_graphs_rejected(text, fragment):
    with pytest.raises(LatticeError, match=fragment):
        load_graph(text)


def test_extent_one_periodic_rejected():
    with pytest.raises(LatticeError):
        hypercubic((1, 3), True)


@given(st.lists(st.integers(2, 4), min_size=1, max_size=3))
def test_periodic_link_count(extents):
    lat = hypercubic(extents, True)
    d = len(extents)
    assert lat.n_links == lat.n_sites * d
    assert all(len(site_links(lat, x)) == 2 * d for x in range(lat.n_sites))


@given(st.lists(st.integers(1, 4), min_size=1, max_size=3))
def test_open_lattice_loops_close(extents):
    lat = hypercubic(extents, False)
    for loop in lat.plaquettes:
        assert len(loop) == 4
    text = write_graph(lat)
    assert load_graph(text).links == lat.links
