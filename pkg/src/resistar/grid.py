"""Regular grid over [0, 1]^d: vertex/cube indexing, cube faces and Kuhn simplices.

Axes are 0-based throughout. Within a cube, a vertex is identified by a bit
mask whose bit ``k`` is the vertex offset (0 or 1) along axis ``k``; global
vertices and cubes are integer multi-indices (tuples).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

VertexId = tuple[int, ...]
CubeId = tuple[int, ...]

# tolerance used when deciding that a coordinate sits on a cube boundary
_ON_BOUNDARY = 1e-9


class DomainError(ValueError):
    """A point or index lies outside the domain an operation is defined on."""


@dataclass(frozen=True)
class GridSpec:
    """Grid of ``n_g`` points per axis covering ``[0, 1]^d``."""

    d: int
    n_g: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.n_g < 2:
            raise ValueError(f"n_g must be >= 2, got {self.n_g}")

    @property
    def epsilon(self) -> float:
        return 1.0 / (self.n_g - 1)

    @property
    def n_cubes(self) -> int:
        return (self.n_g - 1) ** self.d

    @property
    def n_vertices(self) -> int:
        return self.n_g**self.d

    def vertex_coords(self, v: Sequence[int]) -> np.ndarray:
        return np.asarray(v, dtype=float) / (self.n_g - 1)

    def cube_coords(self, c: Sequence[int]) -> np.ndarray:
        """Minimal corner of cube ``c``."""
        return np.asarray(c, dtype=float) / (self.n_g - 1)

    def cube_centre(self, c: Sequence[int]) -> np.ndarray:
        return (np.asarray(c, dtype=float) + 0.5) / (self.n_g - 1)

    def to_local(self, c: Sequence[int], x: Sequence[float]) -> np.ndarray:
        """Coordinates of ``x`` inside cube ``c`` rescaled to ``[0, 1]^d``."""
        return np.asarray(x, dtype=float) * (self.n_g - 1) - np.asarray(c, dtype=float)

    def check_cube(self, c: Sequence[int]) -> CubeId:
        c = tuple(int(k) for k in c)
        if len(c) != self.d or any(k < 0 or k > self.n_g - 2 for k in c):
            raise DomainError(f"{c} is not a cube of a {self.d}-d grid with n_g={self.n_g}")
        return c

    def cube_linear(self, c: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(c), (self.n_g - 1,) * self.d))


def _check_point(g: GridSpec, x: Sequence[float]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (g.d,):
        raise DomainError(f"expected a point of dimension {g.d}, got shape {x.shape}")
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError(f"point {x.tolist()} is outside [0, 1]^{g.d}")
    return x


def cube_of_point(g: GridSpec, x: Sequence[float]) -> CubeId:
    """Cube containing ``x``; points on shared facets go to the smallest index."""
    x = _check_point(g, x)
    idx = np.minimum(np.floor(x * (g.n_g - 1)).astype(int), g.n_g - 2)
    return tuple(int(k) for k in idx)


@dataclass(frozen=True)
class KuhnSimplexRef:
    """Kuhn simplex of ``cube`` given by a permutation of the (0-based) axes.

    The simplex is ``{x : x[perm[0]] <= x[perm[1]] <= ... <= x[perm[-1]]}`` in
    local cube coordinates.
    """

    cube: CubeId
    perm: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f"{self.perm} is not a permutation")

    @property
    def chain_masks(self) -> tuple[int, ...]:
        """Local vertex masks of the simplex, from the origin to the far corner."""
        return chain_masks(self.perm)

    def vertices(self) -> SimplexFace:
        return SimplexFace(tuple(mask_to_vertex(self.cube, m) for m in self.chain_masks))


def chain_masks(perm: Sequence[int]) -> tuple[int, ...]:
    # vertex j switches on the j axes with the largest coordinates
    d = len(perm)
    masks = [0]
    for j in range(1, d + 1):
        masks.append(masks[-1] | (1 << perm[d - j]))
    return tuple(masks)


def kuhn_simplex_of_point(g: GridSpec, c: Sequence[int], x: Sequence[float]) -> KuhnSimplexRef:
    c = g.check_cube(c)
    local = g.to_local(c, _check_point(g, x))
    if np.any(local < -_ON_BOUNDARY) or np.any(local > 1.0 + _ON_BOUNDARY):
        raise DomainError(f"point {list(x)} is not inside cube {c}")
    perm = tuple(int(k) for k in np.argsort(local, kind="stable"))
    return KuhnSimplexRef(c, perm)


def mask_to_vertex(c: Sequence[int], mask: int) -> VertexId:
    return tuple(int(ck) + ((mask >> k) & 1) for k, ck in enumerate(c))


def cube_vertices(g: GridSpec, c: Sequence[int]) -> list[VertexId]:
    c = g.check_cube(c)
    return [mask_to_vertex(c, m) for m in range(1 << g.d)]


def cube_edges(g: GridSpec, c: Sequence[int]) -> list[tuple[VertexId, VertexId]]:
    """The ``d * 2**(d-1)`` axis-aligned edges of a cube, lower endpoint first."""
    c = g.check_cube(c)
    edges = []
    for m in range(1 << g.d):
        for k in range(g.d):
            if not (m >> k) & 1:
                edges.append((mask_to_vertex(c, m), mask_to_vertex(c, m | (1 << k))))
    return edges


def kuhn_edges(g: GridSpec, c: Sequence[int]) -> list[tuple[VertexId, VertexId]]:
    """All dominance-comparable vertex pairs of a cube (the edges of its d! Kuhn simplices)."""
    c = g.check_cube(c)
    full = (1 << g.d) - 1
    edges = []
    for u in range(1 << g.d):
        rest = full & ~u
        # enumerate nonempty submasks of the axes still at 0
        s = rest
        while s:
            edges.append((mask_to_vertex(c, u), mask_to_vertex(c, u | s)))
            s = (s - 1) & rest
    edges.sort()
    return edges


@dataclass(frozen=True)
class FaceCode:
    """Face of a d-cube: ``free`` axes vary, the others are fixed at ``offset``.

    Both fields are bit masks; ``offset`` has no bits on free axes.
    """

    d: int
    free: int
    offset: int = 0

    def __post_init__(self) -> None:
        full = (1 << self.d) - 1
        if self.free & ~full or self.offset & ~full:
            raise ValueError("face masks exceed the dimension")
        if self.free & self.offset:
            raise ValueError("offset bits set on free axes")

    @classmethod
    def cube(cls, d: int) -> FaceCode:
        return cls(d, (1 << d) - 1, 0)

    @classmethod
    def from_axes(cls, d: int, free_axes: Sequence[int], offsets: dict[int, int]) -> FaceCode:
        free = 0
        for k in free_axes:
            free |= 1 << k
        off = 0
        for k, o in offsets.items():
            if o:
                off |= 1 << k
        if set(free_axes) | set(offsets) != set(range(d)) or set(free_axes) & set(offsets):
            raise ValueError("free and fixed axes must partition the axes")
        return cls(d, free, off)

    @property
    def dim(self) -> int:
        return bin(self.free).count("1")

    @property
    def free_axes(self) -> tuple[int, ...]:
        return tuple(k for k in range(self.d) if (self.free >> k) & 1)

    @property
    def fixed_axes(self) -> tuple[int, ...]:
        return tuple(k for k in range(self.d) if not (self.free >> k) & 1)

    def contains_vertex(self, mask: int) -> bool:
        fixed = ((1 << self.d) - 1) & ~self.free
        return (mask & fixed) == self.offset

    def contains_face(self, other: FaceCode) -> bool:
        return (other.free & ~self.free) == 0 and self.contains_vertex(other.offset)

    def vertices(self) -> list[int]:
        axes = self.free_axes
        out = []
        for bits in range(1 << len(axes)):
            m = self.offset
            for j, k in enumerate(axes):
                if (bits >> j) & 1:
                    m |= 1 << k
            out.append(m)
        return out

    def facet(self, axis: int, side: int) -> FaceCode:
        """Facet obtained by fixing free ``axis`` at ``side`` (0 or 1)."""
        if not (self.free >> axis) & 1:
            raise DomainError(f"axis {axis} is not free in {self}")
        return FaceCode(self.d, self.free & ~(1 << axis), self.offset | (side << axis))


def subfaces(f: FaceCode, i: int) -> list[FaceCode]:
    """All ``i``-dimensional faces of ``f``."""
    if i < 0 or i >= f.dim:
        raise DomainError(f"cannot take {i}-faces of a {f.dim}-face")
    out = []
    axes = f.free_axes
    for keep in itertools.combinations(axes, i):
        fixed = [k for k in axes if k not in keep]
        keep_mask = sum(1 << k for k in keep)
        for bits in range(1 << len(fixed)):
            off = f.offset
            for j, k in enumerate(fixed):
                if (bits >> j) & 1:
                    off |= 1 << k
            out.append(FaceCode(f.d, keep_mask, off))
    return out


@dataclass(frozen=True)
class SimplexFace:
    """Face of a Kuhn simplex: a dominance chain of grid vertices."""

    vertices: tuple[VertexId, ...]

    def __post_init__(self) -> None:
        for a, b in zip(self.vertices, self.vertices[1:]):
            if not all(x <= y for x, y in zip(a, b)) or a == b:
                raise ValueError(f"vertices {a} and {b} do not form an increasing chain")

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1
