import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from resistar.boundary import ContractViolation, build_store
from resistar.enumerate import (
    EnumerationCapExceeded,
    FaceChain,
    count_simplices,
    count_simplices_streamed,
    enumerate_simplices,
    iter_all_simplices,
    watertightness_check,
)
from resistar.grid import FaceCode, GridSpec, SimplexFace
from resistar.oracle import FunctionOracle, GridLabelOracle, HyperplaneOracle, SphereOracle, random_radial


def label_store(labels, variant="cube", q=4):
    labels = np.asarray(labels, dtype=np.int8)
    return build_store(GridLabelOracle(labels), GridSpec(labels.ndim, labels.shape[0]), variant, q)


def test_two_points_in_a_square_give_two_segments():
    s = label_store([[-1, 1], [-1, 1]])
    simplices = list(enumerate_simplices(s, (0, 0)))
    assert len(simplices) == 2
    bary = s.coords.mean(axis=0)
    ends = sorted(tuple(sx.vertices[0]) for sx in simplices)
    assert ends == sorted(tuple(p) for p in s.coords)
    for sx in simplices:
        assert np.allclose(sx.vertices[1], bary)


def test_six_points_in_a_cube_give_twelve_triangles():
    labels = np.ones((2, 2, 2), dtype=np.int8)
    labels[1, 0, 0] = -1
    labels[0, 1, 0] = -1
    s = label_store(labels)
    assert s.n_points == 6
    assert len(list(enumerate_simplices(s, (0, 0, 0)))) == 12


def test_four_dimensional_cube_gives_six_per_point():
    s = build_store(random_radial(4, 5, 0.3, 3), GridSpec(4, 4), "cube", 5)
    for c in list(s.cube_ids())[:15]:
        k = len(s.members(c))
        assert len(list(enumerate_simplices(s, c))) == 6 * k


@pytest.mark.parametrize(
    "variant, d, n",
    [(v, d, n) for v in ("cube", "kuhn") for d, n in ((2, 10), (3, 6), (4, 4))] + [("cube", 5, 3)],
)
def test_closed_form_count_matches_streamed(variant, d, n):
    s = build_store(random_radial(d, 5, 0.3, 60 + d), GridSpec(d, n), variant, 5)
    counted = count_simplices(s)
    assert counted.boundary_points == s.n_points
    assert counted.simplices == count_simplices_streamed(s)
    if variant == "cube":
        assert counted.simplices == math.factorial(d - 1) * int(np.diff(s.cube_ptr).sum())


def test_empty_store_counts_zero():
    o = FunctionOracle(lambda x: np.ones(len(x), dtype=np.int8), 3)
    s = build_store(o, GridSpec(3, 4), "kuhn", 3)
    rec = count_simplices(s).as_record()
    assert rec == {"d": 3, "n_g": 4, "variant": "kuhn", "boundary_points": 0, "simplices": 0}


def test_count_order_of_magnitude_for_radial_3d():
    # sites are random, so only the order of magnitude is comparable across seeds
    s = build_store(random_radial(3, 20, 0.2, 1), GridSpec(3, 16), "kuhn", 6)
    c = count_simplices(s)
    assert 1_000 < c.boundary_points < 12_000
    assert 10_000 < c.simplices < 100_000


def face_contains(face, c, point, n_g):
    """Whether a global point lies in a cube face or Kuhn simplex face (up to rounding)."""
    if isinstance(face, FaceCode):
        u = point * (n_g - 1) - np.asarray(c)
        return all(abs(u[a] - ((face.offset >> a) & 1)) < 1e-9 for a in face.fixed_axes)
    verts = np.asarray(face.vertices, dtype=float).T
    a = np.vstack([verts, np.ones(verts.shape[1])])
    lam, *_ = np.linalg.lstsq(a, np.append(point * (n_g - 1), 1.0), rcond=None)
    return np.allclose(a @ lam, np.append(point * (n_g - 1), 1.0), atol=1e-9) and np.all(lam > -1e-9)


@pytest.mark.parametrize("variant", ["cube", "kuhn"])
@pytest.mark.parametrize("d", [2, 3, 4])
def test_simplices_are_well_formed(variant, d):
    s = build_store(random_radial(d, 5, 0.3, 80 + d), GridSpec(d, 4), variant, 6)
    n = 0
    for sx in iter_all_simplices(s):
        n += 1
        assert sx.vertices.shape == (d, d)
        assert sx.is_affinely_independent(1e-9)
        assert len(sx.chain.faces) == d - 1
        for face, v in zip(sx.chain.faces, sx.vertices):
            assert face_contains(face, sx.cube, v, s.grid.n_g)
        # the last vertex is the barycentre of the cube's (or Kuhn simplex's) points
        if variant == "cube":
            assert np.allclose(sx.vertices[-1], s.coords[s.members(sx.cube)].mean(axis=0))
        if n > 3000:
            break
    assert n > 0


def test_face_chain_validation():
    FaceChain((FaceCode(3, 0b001, 0), FaceCode(3, 0b011, 0)))
    with pytest.raises(ValueError):
        FaceChain((FaceCode(3, 0b001, 0), FaceCode(3, 0b110, 0)))
    with pytest.raises(ValueError):
        FaceChain((FaceCode(3, 0b011, 0),))
    FaceChain((SimplexFace(((0, 0, 0), (1, 0, 0))), SimplexFace(((0, 0, 0), (1, 0, 0), (1, 1, 0)))))
    with pytest.raises(ValueError):
        FaceChain((SimplexFace(((0, 0, 0), (1, 0, 0))), SimplexFace(((0, 0, 0), (0, 1, 0), (1, 1, 0)))))


def test_enumeration_needs_a_store_cube():
    s = label_store([[-1, 1], [-1, 1]])
    with pytest.raises(ContractViolation):
        list(enumerate_simplices(build_store(HyperplaneOracle((1.0, 0.0), 0.3), GridSpec(2, 5), "cube", 3), (3, 3)))
    assert len(list(iter_all_simplices(s))) == 2


def test_ambiguous_square_is_not_a_manifold_for_cubes():
    checker = [[1, -1], [-1, 1]]
    s = label_store(checker, "cube")
    report = watertightness_check(s)
    assert not report.passed
    assert report.max_incidence == 4
    (facet, count), = report.bad_facets
    assert count == 4 and np.allclose(facet[0], s.coords.mean(axis=0))
    assert watertightness_check(label_store(checker, "kuhn")).passed


def test_single_cube_segments_pass_inside_the_cube():
    report = watertightness_check(label_store([[-1, 1], [-1, 1]]))
    assert report.passed and report.interior_facets == 1


@pytest.mark.parametrize("n", [5, 8])
def test_kuhn_sphere_is_closed_surface(n):
    s = build_store(SphereOracle((0.5, 0.5, 0.5), 0.3), GridSpec(3, n), "kuhn")
    report = watertightness_check(s)
    assert report.passed, report.summary()
    assert report.euler_characteristic == 2
    assert "pass" in report.summary()


@pytest.mark.parametrize("seed", [1, 2])
def test_kuhn_radial_is_watertight_in_4d(seed):
    s = build_store(random_radial(4, 3, 0.3, seed), GridSpec(4, 4), "kuhn", 6)
    assert watertightness_check(s).passed


@given(st.integers(0, 10_000))
def test_kuhn_radial_watertight_in_2d_and_3d(seed):
    for d, n in ((2, 9), (3, 5)):
        s = build_store(random_radial(d, 4, 0.3, seed), GridSpec(d, n), "kuhn", 6)
        assert watertightness_check(s).passed


def test_cap_refuses_large_dimension():
    s = build_store(random_radial(5, 3, 0.3, 1), GridSpec(5, 3), "kuhn", 3)
    with pytest.raises(EnumerationCapExceeded):
        watertightness_check(s)
    with pytest.raises(EnumerationCapExceeded):
        watertightness_check(build_store(random_radial(3, 3, 0.3, 1), GridSpec(3, 3), "kuhn", 3), cap=2)


def test_simplex_faces_of_kuhn_chain_are_nested_in_chain_order():
    s = build_store(SphereOracle((0.5, 0.5, 0.5), 0.3), GridSpec(3, 4), "kuhn", 5)
    for sx in itertools.islice(iter_all_simplices(s), 200):
        chain_set = {tuple(np.add(sx.cube, [(m >> k) & 1 for k in range(3)])) for m in _masks(sx.perm)}
        for face in sx.chain.faces:
            assert set(face.vertices) <= chain_set


def _masks(perm):
    d = len(perm)
    masks = [0]
    for j in range(1, d + 1):
        masks.append(masks[-1] | (1 << perm[d - j]))
    return masks
