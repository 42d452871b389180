"""Explicit resistar simplices, enumerated lazily from chains of nested faces.

A simplex is the list of barycentres ``[b(F_1), ..., b(F_{d-1}), b(C)]`` of a
chain of faces ``F_1 < ... < F_{d-1}`` of a cube (or of a Kuhn simplex) where
``F_1`` is an edge carrying a boundary point.  Barycentres are averaged over
global point coordinates in ascending point order, so a face shared by two
cubes yields bit-identical vertices in both.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

from .boundary import BoundaryStore, ContractViolation
from .grid import CubeId, FaceCode, SimplexFace, mask_to_vertex

DEFAULT_CAP = 4
_ROUND = 12


class EnumerationCapExceeded(ContractViolation):
    """Explicit enumeration was refused because of the dimension cap."""


@dataclass(frozen=True)
class FaceChain:
    """Nested faces ``F_1 < ... < F_{d-1}`` (cube faces or simplex faces)."""

    faces: tuple[Union[FaceCode, SimplexFace], ...]

    def __post_init__(self) -> None:
        for i, f in enumerate(self.faces, start=1):
            if f.dim != i:
                raise ValueError(f"face {i} of the chain has dimension {f.dim}")
        for a, b in zip(self.faces, self.faces[1:]):
            if isinstance(a, FaceCode):
                ok = b.contains_face(a)
            else:
                ok = set(a.vertices) < set(b.vertices)
            if not ok:
                raise ValueError("chain faces are not nested")


@dataclass(frozen=True)
class ResistarSimplex:
    """One ``(d-1)``-simplex of a resistar, vertices in global coordinates."""

    vertices: np.ndarray
    chain: FaceChain
    cube: CubeId
    perm: tuple[int, ...] | None = None

    def is_affinely_independent(self, tol: float = 1e-9) -> bool:
        v = np.asarray(self.vertices)
        if len(v) < 2:
            return True
        diffs = v[1:] - v[0]
        sv = np.linalg.svd(diffs, compute_uv=False)
        return bool(sv[-1] > tol * max(1.0, sv[0]))


def _barycentre(coords: np.ndarray, idx: Sequence[int]) -> np.ndarray:
    # summing in ascending point order keeps shared faces bit-identical
    acc = np.zeros(coords.shape[1])
    for i in sorted(idx):
        acc = acc + coords[i]
    return acc / len(idx)


def _cube_simplices(s: BoundaryStore, c: CubeId) -> Iterator[ResistarSimplex]:
    d = s.d
    data = s.cube_arrays(c)
    coords = s.coords
    full = (1 << d) - 1
    mm = data.mask_minus.tolist()
    mp = data.mask_plus.tolist()
    ids = data.index.tolist()
    cache: dict[tuple[int, int], np.ndarray] = {}

    def bary(free: int, offset: int) -> np.ndarray:
        key = (free, offset)
        if key not in cache:
            fixed = full & ~free
            members = [ids[k] for k in range(len(ids)) if (mm[k] & fixed) == offset and (mp[k] & fixed) == offset]
            cache[key] = _barycentre(coords, members)
        return cache[key]

    top = _barycentre(coords, ids)
    for k in range(len(ids)):
        axis_mask = mm[k] ^ mp[k]
        base = mm[k] & mp[k]
        rest = [a for a in range(d) if not (axis_mask >> a) & 1]
        for order in itertools.permutations(rest, d - 2):
            free = axis_mask
            faces = [FaceCode(d, free, base & (full & ~free))]
            verts = [coords[ids[k]]]
            for a in order:
                free |= 1 << a
                off = base & (full & ~free)
                faces.append(FaceCode(d, free, off))
                verts.append(bary(free, off))
            verts.append(top)
            yield ResistarSimplex(np.array(verts), FaceChain(tuple(faces)), c)


def _kuhn_simplices(s: BoundaryStore, c: CubeId) -> Iterator[ResistarSimplex]:
    d = s.d
    data = s.cube_arrays(c)
    coords = s.coords
    mm = data.mask_minus.tolist()
    mp = data.mask_plus.tolist()
    ids = data.index.tolist()
    cache: dict[frozenset, np.ndarray] = {}

    def bary(face: frozenset) -> np.ndarray:
        if face not in cache:
            members = [ids[k] for k in range(len(ids)) if mm[k] in face and mp[k] in face]
            cache[face] = _barycentre(coords, members)
        return cache[face]

    for perm in itertools.permutations(range(d)):
        masks = [0]
        for j in range(1, d + 1):
            masks.append(masks[-1] | (1 << perm[d - j]))
        chain = set(masks)
        inside = [k for k in range(len(ids)) if mm[k] in chain and mp[k] in chain]
        if not inside:
            continue
        top = _barycentre(coords, [ids[k] for k in inside])
        for k in inside:
            edge = {mm[k], mp[k]}
            rest = [m for m in masks if m not in edge]
            for order in itertools.permutations(rest, d - 2):
                face = set(edge)
                faces = [_simplex_face(c, face)]
                verts = [coords[ids[k]]]
                for m in order:
                    face.add(m)
                    faces.append(_simplex_face(c, face))
                    verts.append(bary(frozenset(face)))
                verts.append(top)
                yield ResistarSimplex(np.array(verts), FaceChain(tuple(faces)), c, tuple(perm))


def _simplex_face(c: CubeId, masks: set[int]) -> SimplexFace:
    ordered = sorted(masks, key=lambda m: (bin(m).count("1"), m))
    return SimplexFace(tuple(mask_to_vertex(c, m) for m in ordered))


def enumerate_simplices(s: BoundaryStore, c: Sequence[int]) -> Iterator[ResistarSimplex]:
    """Stream the resistar simplices of one store cube (every Kuhn simplex of it, for kuhn stores)."""
    c = s.grid.check_cube(c)
    if c not in s:
        raise ContractViolation(f"cube {c} is not in the store")
    if s.d < 2:
        raise ContractViolation("resistar simplices need d >= 2")
    if s.variant == "cube":
        return _cube_simplices(s, c)
    return _kuhn_simplices(s, c)


def iter_all_simplices(s: BoundaryStore) -> Iterator[ResistarSimplex]:
    for c in s.cube_ids():
        yield from enumerate_simplices(s, c)


@dataclass(frozen=True)
class SimplexCount:
    d: int
    n_g: int
    variant: str
    boundary_points: int
    simplices: int

    def as_record(self) -> dict[str, object]:
        return {
            "d": self.d,
            "n_g": self.n_g,
            "variant": self.variant,
            "boundary_points": self.boundary_points,
            "simplices": self.simplices,
        }


def count_simplices(s: BoundaryStore) -> SimplexCount:
    """Boundary points (once per edge) and simplices, by closed form.

    A cube holds ``(d-1)!`` simplices per boundary point.  A Kuhn simplex holds
    ``(d-1)!`` per point on its edges, and the edge between local masks
    ``u < w`` lies in ``|u|! (|w|-|u|)! (d-|w|)!`` Kuhn simplices of the cube.
    """
    d, g = s.d, s.grid
    total = 0
    if s.n_points and d >= 2:
        per_cube = np.diff(s.cube_ptr)
        if s.variant == "cube":
            total = math.factorial(d - 1) * int(per_cube.sum())
        else:
            rows = np.repeat(s.cube_index, per_cube, axis=0)
            vm = s.v_minus[s.cube_members].astype(np.int64) - rows
            vp = s.v_plus[s.cube_members].astype(np.int64) - rows
            lo = np.minimum(vm, vp).sum(axis=1)
            hi = np.maximum(vm, vp).sum(axis=1)
            fact = [math.factorial(k) for k in range(d + 1)]
            total = math.factorial(d - 1) * sum(
                fact[a] * fact[b - a] * fact[d - b] for a, b in zip(lo.tolist(), hi.tolist())
            )
    return SimplexCount(d, g.n_g, s.variant, s.n_points, int(total))


def count_simplices_streamed(s: BoundaryStore) -> int:
    """Simplex count by walking every face chain."""
    return sum(1 for _ in iter_all_simplices(s))


def _key(p: np.ndarray) -> tuple[float, ...]:
    return tuple(np.round(p, _ROUND).tolist())


@dataclass
class WatertightReport:
    simplices: int
    facets: int
    interior_facets: int
    bad_facets: list[tuple[tuple[tuple[float, ...], ...], int]]
    max_incidence: int
    euler_characteristic: int | None

    @property
    def passed(self) -> bool:
        return not self.bad_facets

    def summary(self) -> str:
        status = "pass" if self.passed else "fail"
        chi = "" if self.euler_characteristic is None else f" euler={self.euler_characteristic}"
        return (
            f"{status}: simplices={self.simplices} facets={self.facets} "
            f"interior={self.interior_facets} bad={len(self.bad_facets)}{chi}"
        )


def _on_domain_boundary(points: list[tuple[float, ...]]) -> bool:
    d = len(points[0])
    for a in range(d):
        for side in (0.0, 1.0):
            if all(abs(p[a] - side) <= 10.0**-_ROUND for p in points):
                return True
    return False


def watertightness_check(s: BoundaryStore, cap: int = DEFAULT_CAP) -> WatertightReport:
    """Count how many simplices share each ``(d-2)``-facet over the whole grid.

    Passes when every facet off the boundary of the domain is shared by exactly
    two simplices.  For ``d = 3`` the Euler characteristic of the triangle
    surface is reported too.
    """
    d = s.d
    if d > cap:
        raise EnumerationCapExceeded(f"refusing explicit enumeration at d={d} (cap {cap}); simplex counts grow like (d-1)!")
    if d < 2:
        raise ContractViolation("watertightness needs d >= 2")
    incidence: dict[tuple, int] = {}
    n = 0
    edges: set[tuple] = set()
    verts: set[tuple] = set()
    for simplex in iter_all_simplices(s):
        n += 1
        keys = [_key(v) for v in simplex.vertices]
        for drop in range(d):
            facet = tuple(sorted(k for i, k in enumerate(keys) if i != drop))
            incidence[facet] = incidence.get(facet, 0) + 1
        if d == 3:
            verts.update(keys)
            for a, b in itertools.combinations(keys, 2):
                edges.add((a, b) if a < b else (b, a))
    bad = []
    interior = 0
    for facet, count in incidence.items():
        if _on_domain_boundary(list(facet)):
            continue
        interior += 1
        if count != 2:
            bad.append((facet, count))
    chi = len(verts) - len(edges) + n if d == 3 else None
    return WatertightReport(
        simplices=n,
        facets=len(incidence),
        interior_facets=interior,
        bad_facets=bad,
        max_incidence=max(incidence.values(), default=0),
        euler_characteristic=chi,
    )
