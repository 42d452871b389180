import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reference import comparable_pairs
from resistar.grid import (
    DomainError,
    FaceCode,
    GridSpec,
    KuhnSimplexRef,
    SimplexFace,
    chain_masks,
    cube_edges,
    cube_of_point,
    kuhn_edges,
    kuhn_simplex_of_point,
    subfaces,
)


def test_gridspec_epsilon_is_exact():
    for n in (2, 3, 7, 48, 1000):
        g = GridSpec(3, n)
        assert abs(g.epsilon * (n - 1) - 1.0) < 1e-12


def test_gridspec_rejects_bad_sizes():
    with pytest.raises(ValueError):
        GridSpec(0, 4)
    with pytest.raises(ValueError):
        GridSpec(2, 1)


@pytest.mark.parametrize(
    "d, n, x, cube",
    [
        (2, 3, (0.3, 0.9), (0, 1)),
        (1, 2, (1.0,), (0,)),
        (3, 5, (0.46, 0.49, 0.48), (1, 1, 1)),
    ],
)
def test_cube_of_point_examples(d, n, x, cube):
    assert cube_of_point(GridSpec(d, n), x) == cube


def test_cube_of_point_outside_domain():
    g = GridSpec(2, 4)
    with pytest.raises(DomainError):
        cube_of_point(g, (1.01, 0.5))
    with pytest.raises(DomainError):
        cube_of_point(g, (-0.1, 0.5))


@given(st.integers(1, 5), st.integers(2, 20), st.data())
def test_cube_of_point_contains_point(d, n, data):
    g = GridSpec(d, n)
    x = np.array(data.draw(st.lists(st.floats(0, 1), min_size=d, max_size=d)))
    c = cube_of_point(g, x)
    lo = g.cube_coords(c)
    assert np.all(lo <= x + 1e-12) and np.all(x <= lo + g.epsilon + 1e-12)


@pytest.mark.parametrize(
    "local, perm",
    [((0.2, 0.7), (0, 1)), ((0.9, 0.1, 0.5), (1, 2, 0)), ((0.5, 0.5), (0, 1))],
)
def test_kuhn_simplex_of_point_examples(local, perm):
    g = GridSpec(len(local), 2)
    assert kuhn_simplex_of_point(g, (0,) * len(local), local).perm == perm


def test_kuhn_simplex_of_point_outside_cube():
    g = GridSpec(2, 3)
    with pytest.raises(DomainError):
        kuhn_simplex_of_point(g, (0, 0), (0.8, 0.2))


@given(st.integers(1, 5), st.data())
def test_point_lies_in_its_kuhn_simplex(d, data):
    g = GridSpec(d, 4)
    c = tuple(data.draw(st.lists(st.integers(0, 2), min_size=d, max_size=d)))
    u = np.array(data.draw(st.lists(st.floats(0.001, 0.999), min_size=d, max_size=d)))
    x = (np.asarray(c) + u) / 3
    ref = kuhn_simplex_of_point(g, c, x)
    local = g.to_local(c, x)[list(ref.perm)]
    assert np.all(np.diff(local) >= -1e-12)
    # the point is a convex combination of the chain vertices
    verts = np.array([[(m >> k) & 1 for k in range(d)] for m in ref.chain_masks], dtype=float)
    lam = np.linalg.lstsq(np.vstack([verts.T, np.ones(d + 1)]), np.append(g.to_local(c, x), 1.0), rcond=None)[0]
    assert np.all(lam >= -1e-9)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_kuhn_simplices_tile_the_cube(d, rng):
    g = GridSpec(d, 2)
    pts = rng.random((10_000, d))
    seen = set()
    for u in pts:
        ref = kuhn_simplex_of_point(g, (0,) * d, u)
        assert np.all(np.diff(u[list(ref.perm)]) >= 0)
        seen.add(ref.perm)
    assert len(seen) == math.factorial(d)


@pytest.mark.parametrize("d, count", [(2, 4), (3, 12), (6, 192)])
def test_cube_edge_counts(d, count):
    edges = cube_edges(GridSpec(d, 3), (0,) * d)
    assert len(edges) == count == d * 2 ** (d - 1)
    for a, b in edges:
        assert a < b and sum(abs(x - y) for x, y in zip(a, b)) == 1


@pytest.mark.parametrize("d, count", [(1, 1), (2, 5), (3, 19)])
def test_kuhn_edge_counts(d, count):
    assert len(kuhn_edges(GridSpec(d, 2), (0,) * d)) == count


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
def test_kuhn_edges_match_brute_force(d):
    g = GridSpec(d, 3)
    c = (1,) * d
    shift = [tuple(ci + k for ci, k in zip(c, v)) for v in itertools.product((0, 1), repeat=d)]
    brute = sorted(
        (tuple(ci + k for ci, k in zip(c, u)), tuple(ci + k for ci, k in zip(c, w))) for u, w in comparable_pairs(d)
    )
    assert kuhn_edges(g, c) == brute
    assert len(brute) == 3**d - 2**d
    assert set(cube_edges(g, c)) <= set(kuhn_edges(g, c))
    assert all(a in shift and b in shift for a, b in brute)


def test_kuhn_edges_are_union_of_simplex_edges():
    d = 3
    union = set()
    for perm in itertools.permutations(range(d)):
        masks = chain_masks(perm)
        for a, b in itertools.combinations(masks, 2):
            union.add((a, b))
    assert len(union) == 19


@pytest.mark.parametrize("d, i, count", [(3, 2, 6), (2, 0, 4), (4, 1, 32)])
def test_subfaces_counts(d, i, count):
    assert len(subfaces(FaceCode.cube(d), i)) == count


def test_subfaces_rejects_too_large_dimension():
    with pytest.raises(DomainError):
        subfaces(FaceCode.cube(3), 3)


@given(st.integers(2, 5), st.data())
def test_subfaces_lattice_consistency(d, data):
    f = FaceCode.cube(d)
    i = data.draw(st.integers(1, d - 1))
    j = data.draw(st.integers(0, i - 1))
    via = {h for g in subfaces(f, i) for h in subfaces(g, j)}
    assert via == set(subfaces(f, j))
    for h in via:
        assert f.contains_face(h) and h.dim == j


def test_facecode_validation_and_vertices():
    f = FaceCode.from_axes(3, [0, 2], {1: 1})
    assert f.dim == 2 and f.free_axes == (0, 2) and f.fixed_axes == (1,)
    assert sorted(f.vertices()) == [2, 3, 6, 7]
    assert f.facet(0, 1) == FaceCode(3, 4, 3)
    with pytest.raises(ValueError):
        FaceCode(2, 1, 1)
    with pytest.raises(DomainError):
        f.facet(1, 0)


def test_simplex_face_requires_chain():
    SimplexFace(((0, 0), (0, 1), (1, 1)))
    with pytest.raises(ValueError):
        SimplexFace(((0, 1), (1, 0)))


def test_kuhn_ref_vertices():
    ref = KuhnSimplexRef((2, 5), (1, 0))
    assert ref.chain_masks == (0, 1, 3)
    assert ref.vertices().vertices == ((2, 5), (3, 5), (3, 6))
    with pytest.raises(ValueError):
        KuhnSimplexRef((0, 0), (0, 0))
