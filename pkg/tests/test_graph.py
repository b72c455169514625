import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddorder.graph import BaConfig, Graph, GraphError, InstanceParseError, generate_ba, load_instance, save_instance


def test_ba_two_vertices():
    g = generate_ba(BaConfig(2, 1, 1, 1, seed=123))
    assert g.n == 2 and g.edges == {(0, 1): 1}


def test_ba_edge_count_small():
    for seed in range(10):
        assert generate_ba(BaConfig(10, 2, seed=seed)).m == 16


def test_ba_invalid_config():
    with pytest.raises(GraphError):
        generate_ba(BaConfig(5, 5))
    with pytest.raises(GraphError):
        generate_ba(BaConfig(5, 2, 3, 1))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 40), data=st.data(), seed=st.integers(0, 10**6), hi=st.integers(1, 10))
def test_ba_properties(n, data, seed, hi):
    nu = data.draw(st.integers(1, n - 1))
    cfg = BaConfig(n, nu, 1, hi, seed)
    g = generate_ba(cfg)
    assert g.m == nu * (n - nu)
    assert all(u < v for u, v in g.edges)
    assert all(1 <= w <= hi for w in g.edges.values())
    assert generate_ba(cfg) == g


def test_degree_queries(p3):
    assert p3.degree(1) == 2
    iso = Graph(3, {(0, 1): 1})
    assert iso.degree(2) == 0 and iso.incident_weight(2) == 0
    tri = Graph.from_edges(3, [(0, 1, 3), (1, 2, 4), (0, 2, 5)])
    assert tri.incident_weight(1) == 7
    assert tri.neighbors(0) == {1, 2}
    with pytest.raises(GraphError):
        tri.degree(3)


def test_graph_rejects_non_simple():
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 0)])
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 1), (1, 0)])


def test_instance_format(tmp_path):
    tri = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    path = tmp_path / "tri.gr"
    save_instance(tri, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "p edge 3 3"
    assert sorted(lines[1:]) == ["e 1 2 1", "e 1 3 1", "e 2 3 1"]
    assert load_instance(path) == tri


def test_round_trip_generated(tmp_path):
    for seed in range(5):
        g = generate_ba(BaConfig(25, 4, 1, 10, seed))
        save_instance(g, tmp_path / "g.gr", comment="seeded\nBA")
        assert load_instance(tmp_path / "g.gr") == g


def test_round_trip_bytes(tmp_path):
    g = generate_ba(BaConfig(12, 3, 1, 10, 4))
    save_instance(g, tmp_path / "a.gr")
    save_instance(load_instance(tmp_path / "a.gr"), tmp_path / "b.gr")
    assert (tmp_path / "a.gr").read_bytes() == (tmp_path / "b.gr").read_bytes()


@pytest.mark.parametrize(
    "text, lineno",
    [
        ("p edge 3 2\ne 1 2 1\ne 2 1 1\n", 3),
        ("c hi\np edge 3 1\ne 1 4 1\n", 3),
        ("e 1 2\n", 1),
        ("p edge 3 1\nx 1 2\n", 2),
        ("p edge 3 1\ne 1 b\n", 2),
    ],
)
def test_parse_errors(tmp_path, text, lineno):
    path = tmp_path / "bad.gr"
    path.write_text(text)
    with pytest.raises(InstanceParseError) as err:
        load_instance(path)
    assert err.value.lineno == lineno


def test_unweighted_edge_lines(tmp_path):
    path = tmp_path / "u.gr"
    path.write_text("p edge 3 2\ne 1 2\ne 2 3\n")
    assert load_instance(path) == Graph.from_edges(3, [(0, 1), (1, 2)])
