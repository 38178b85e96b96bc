import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from robspat.errors import DataError, WeightsError
from robspat.lattice import (
    LatticeSpec,
    Scheme,
    build_lattice_weights,
    from_adjacency_list,
    is_symmetric,
    read_adjacency_csv,
    write_adjacency_csv,
)

specs = st.builds(
    LatticeSpec,
    rows=st.integers(2, 9),
    cols=st.integers(2, 9),
    scheme=st.sampled_from([Scheme.ROOK, Scheme.QUEEN]),
    torus=st.booleans(),
)


def test_two_by_two_rook_corners():
    W = build_lattice_weights(LatticeSpec(2, 2, "rook"))
    assert list(W.n_neighbors) == [2, 2, 2, 2]
    assert np.all(W.matrix.data == 0.5)


def test_queen_connectivity_interior_edge_corner():
    W = build_lattice_weights(LatticeSpec(10, 10, "queen"))
    eta = W.connectivity.reshape(10, 10)
    assert eta[4, 4] == 8
    assert eta[0, 0] == eta[0, 9] == eta[9, 0] == eta[9, 9] == 3
    assert eta[0, 5] == 5
    assert np.all(eta[1:-1, 1:-1] == 8)


def test_rook_torus_rows_have_four_quarters():
    W = build_lattice_weights(LatticeSpec(4, 4, "rook", torus=True))
    dense = W.dense()
    for row in dense:
        assert np.count_nonzero(row) == 4
        assert np.all(row[row > 0] == 0.25)


@pytest.mark.parametrize("rows,cols", [(2, 5), (5, 1), (1, 1), (0, 3)])
def test_degenerate_grid_rejected(rows, cols):
    if rows >= 2 and cols >= 2:
        LatticeSpec(rows, cols)
        return
    with pytest.raises(DataError):
        LatticeSpec(rows, cols)


@settings(max_examples=40, deadline=None)
@given(specs)
def test_matches_geometric_enumeration(spec):
    W = build_lattice_weights(spec)
    A = oracles.lattice_dense(spec.rows, spec.cols, spec.scheme is Scheme.QUEEN, spec.torus)
    np.testing.assert_array_equal(W.raw.toarray(), A)
    np.testing.assert_allclose(W.dense(), oracles.standardize_rows(A), rtol=0, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(specs)
def test_weight_invariants(spec):
    W = build_lattice_weights(spec)
    dense = W.dense()
    assert np.all(np.diag(dense) == 0)
    assert np.all(W.matrix.data > 0)
    assert np.all(W.n_neighbors >= 1)
    np.testing.assert_allclose(dense.sum(axis=1), 1.0, rtol=0, atol=1e-12)
    raw = W.raw.toarray()
    np.testing.assert_array_equal(raw, raw.T)
    assert W.mean_connectivity == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(
    st.integers(3, 9),
    st.integers(3, 9),
    st.sampled_from([Scheme.ROOK, Scheme.QUEEN]),
)
def test_torus_constant_connectivity(rows, cols, scheme):
    W = build_lattice_weights(LatticeSpec(rows, cols, scheme, torus=True))
    expected = 4 if scheme is Scheme.ROOK else 8
    assert np.all(W.connectivity == expected)
    assert is_symmetric(W)


@settings(max_examples=30, deadline=None)
@given(specs)
def test_adjacency_round_trip(spec):
    W = build_lattice_weights(spec)
    again = from_adjacency_list(W.to_adjacency_list(), W.n)
    np.testing.assert_array_equal(again.dense(), W.dense())
    np.testing.assert_array_equal(again.connectivity, W.connectivity)


def test_round_trip_unequal_weights(weighted_graph, tmp_path):
    path = tmp_path / "adj.csv"
    write_adjacency_csv(weighted_graph, path)
    assert path.read_text().splitlines()[0] == "i,j,w"
    again = read_adjacency_csv(path)
    np.testing.assert_array_equal(again.dense(), weighted_graph.dense())


def test_swap_matrix():
    W = from_adjacency_list([(0, 1, 1), (1, 0, 1)], 2)
    np.testing.assert_array_equal(W.dense(), [[0, 1], [1, 0]])
    assert is_symmetric(W)


def test_equal_raw_weights_standardize_to_halves():
    W = from_adjacency_list([(0, 1, 2), (0, 2, 2), (1, 0, 1), (2, 0, 1)], 3)
    assert W.neighbors(0) == [(1, 0.5), (2, 0.5)]
    assert list(W.connectivity) == [4.0, 1.0, 1.0]


@pytest.mark.parametrize(
    "pairs,n,match",
    [
        ([(0, 1, 1)], 3, "node 1 isolated"),
        ([(0, 1, 1), (1, 0, 1)], 3, "node 2 isolated"),
        ([(0, 0, 1), (1, 0, 1)], 2, "self-loop at node 0"),
        ([(0, 1, 0), (1, 0, 1)], 2, "nonpositive weight"),
        ([(0, 1, -2), (1, 0, 1)], 2, "nonpositive weight"),
        ([(0, 5, 1)], 2, "out of range"),
        ([(0, 1, 1), (0, 1, 1), (1, 0, 1)], 2, "duplicate"),
    ],
)
def test_adjacency_errors(pairs, n, match):
    with pytest.raises(WeightsError, match=match):
        from_adjacency_list(pairs, n)


def test_symmetry_after_standardization():
    assert not is_symmetric(build_lattice_weights(LatticeSpec(10, 10, "rook")))
    assert is_symmetric(build_lattice_weights(LatticeSpec(4, 4, "rook", torus=True)))


def test_trace_w2_matches_dense(weighted_graph, queen10):
    for W in (weighted_graph, queen10):
        D = W.dense()
        assert W.trace_w2 == pytest.approx(np.trace(D @ D), rel=1e-14)


def test_weights_are_read_only(rook10):
    with pytest.raises(ValueError):
        rook10.matrix.data[0] = 3.0


def test_relabeling(weighted_graph):
    perm = [3, 0, 5, 1, 4, 2]
    P = weighted_graph.permuted(perm)
    D = weighted_graph.dense()
    np.testing.assert_array_equal(P.dense(), D[np.ix_(perm, perm)])


def test_parse_grid():
    spec = LatticeSpec.parse_grid("20x20", "Queen")
    assert (spec.rows, spec.cols, spec.scheme) == (20, 20, Scheme.QUEEN)
    with pytest.raises(DataError):
        LatticeSpec.parse_grid("20by20")
    with pytest.raises(DataError):
        Scheme.parse("bishop")


def test_adjacency_csv_bad_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b,c\n0,1,1\n")
    with pytest.raises(DataError, match="header"):
        read_adjacency_csv(p)
