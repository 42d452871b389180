"""Cut a resistar with ``d - 3`` hyperplanes into a 2D polygon soup in 3D.

Each simplex is cut plane by plane: the polytope is replaced by the points
where the segments between its vertices meet the plane.  What survives all
planes is a convex polygon, returned in coordinates of the three residual
directions and written out as OBJ or JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .boundary import BoundaryStore, ContractViolation
from .enumerate import enumerate_simplices

_ON_PLANE = 1e-12
_DEDUP = 1e-9
_COLLINEAR = 1e-9


class UsageError(ValueError):
    """An unsupported option was requested."""


@dataclass(frozen=True)
class Hyperplane:
    """``normal . x = offset``; ``axis`` is set for axis-aligned planes."""

    normal: tuple[float, ...]
    offset: float
    axis: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "normal", tuple(float(v) for v in self.normal))
        if not any(self.normal):
            raise ValueError("hyperplane normal must be nonzero")
        if self.axis is not None and not 0.0 < self.offset < 1.0:
            raise ValueError(f"axis-aligned plane value must lie in (0, 1), got {self.offset}")

    @classmethod
    def axis_aligned(cls, d: int, axis: int, value: float) -> Hyperplane:
        if not 0 <= axis < d:
            raise ValueError(f"axis {axis} out of range for d={d}")
        normal = [0.0] * d
        normal[axis] = 1.0
        return cls(tuple(normal), float(value), axis)

    @property
    def d(self) -> int:
        return len(self.normal)

    def signed(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ np.asarray(self.normal) - self.offset


@dataclass
class SliceMesh:
    """Convex polygons in 3D with the cube (and Kuhn permutation) each came from."""

    polygons: list[np.ndarray] = field(default_factory=list)
    provenance: list[tuple] = field(default_factory=list)
    axes: tuple[int, ...] | None = None

    def __len__(self) -> int:
        return len(self.polygons)


def _dedup(points: list[np.ndarray]) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for p in points:
        if not any(np.max(np.abs(p - q)) <= _DEDUP for q in out):
            out.append(p)
    return out


def cut_polytope(points: list[np.ndarray], plane: Hyperplane) -> list[np.ndarray]:
    """Vertices of ``conv(points)`` intersected with ``plane`` (a superset of its hull)."""
    sd = [float(plane.signed(p)) for p in points]
    out = [p for p, s in zip(points, sd) if abs(s) <= _ON_PLANE]
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            si, sj = sd[i], sd[j]
            if (si < -_ON_PLANE and sj > _ON_PLANE) or (si > _ON_PLANE and sj < -_ON_PLANE):
                # walk from the lexicographically smaller endpoint so results do not depend on order
                a, b, sa, sb = points[i], points[j], si, sj
                if tuple(b.tolist()) < tuple(a.tolist()):
                    a, b, sa, sb = b, a, sb, sa
                t = sa / (sa - sb)
                out.append(a + t * (b - a))
    return _dedup(out)


def _frame(planes: Sequence[Hyperplane], d: int) -> tuple[tuple[int, ...] | None, np.ndarray]:
    axes = [p.axis for p in planes]
    if all(a is not None for a in axes) and len(set(axes)) == len(axes):
        rest = tuple(k for k in range(d) if k not in axes)
        return rest, np.eye(d)[:, list(rest)]
    if not planes:
        return tuple(range(d)), np.eye(d)
    normals = np.array([p.normal for p in planes])
    _, sv, vt = np.linalg.svd(normals)
    if np.sum(sv > 1e-12) != len(planes):
        raise ContractViolation("slicing planes are not independent")
    return None, vt[len(planes) :].T


def _convex_hull_2d(pts: np.ndarray) -> list[int]:
    """Indices of the hull vertices, counter-clockwise, collinear points dropped."""
    order = sorted(range(len(pts)), key=lambda i: (pts[i][0], pts[i][1]))

    def left_turn(o, a, b):
        ax, ay = pts[a][0] - pts[o][0], pts[a][1] - pts[o][1]
        bx, by = pts[b][0] - pts[o][0], pts[b][1] - pts[o][1]
        # relative test: rounding in cut points leaves collinear vertices slightly off the line
        return ax * by - ay * bx > _COLLINEAR * math.hypot(ax, ay) * math.hypot(bx, by)

    lower: list[int] = []
    for i in order:
        while len(lower) >= 2 and not left_turn(lower[-2], lower[-1], i):
            lower.pop()
        lower.append(i)
    upper: list[int] = []
    for i in reversed(order):
        while len(upper) >= 2 and not left_turn(upper[-2], upper[-1], i):
            upper.pop()
        upper.append(i)
    return lower[:-1] + upper[:-1]


def _polygon(points: list[np.ndarray]) -> np.ndarray | None:
    """Order coplanar 3D points into a convex polygon; ``None`` if it has no area."""
    if len(points) < 3:
        return None
    p = np.array(points)
    centre = p.mean(axis=0)
    q = p - centre
    _, sv, vt = np.linalg.svd(q)
    if len(sv) < 2 or sv[1] <= 1e-12 * max(1.0, sv[0]):
        return None
    plane2 = q @ vt[:2].T
    hull = _convex_hull_2d(plane2)
    if len(hull) < 3:
        return None
    poly = p[hull]
    # order by angle around the centroid, starting from the smallest angle
    c2 = plane2[hull].mean(axis=0)
    ang = np.arctan2(plane2[hull][:, 1] - c2[1], plane2[hull][:, 0] - c2[0])
    return poly[np.argsort(ang, kind="stable")]


def _box_straddles(lo: np.ndarray, hi: np.ndarray, plane: Hyperplane) -> bool:
    n = np.asarray(plane.normal)
    low = np.sum(np.where(n > 0, n * lo, n * hi)) - plane.offset
    high = np.sum(np.where(n > 0, n * hi, n * lo)) - plane.offset
    return low <= _ON_PLANE and high >= -_ON_PLANE


def slice(s: BoundaryStore, planes: Sequence[Hyperplane]) -> SliceMesh:  # noqa: A001
    """Intersect every resistar simplex with all ``planes``; keep the 2D pieces."""
    d = s.d
    if d < 3:
        raise ContractViolation("slicing needs d >= 3")
    if len(planes) != d - 3:
        raise ContractViolation(f"need exactly d - 3 = {d - 3} planes, got {len(planes)}")
    for p in planes:
        if p.d != d:
            raise ContractViolation("plane dimension does not match the store")
    axes, basis = _frame(planes, d)
    mesh = SliceMesh(axes=axes)
    g = s.grid
    # a simplex facet lying inside a plane is cut out of both simplices sharing it
    seen: set[tuple] = set()
    for c in s.cube_ids():
        lo = g.cube_coords(c)
        if not all(_box_straddles(lo, lo + g.epsilon, p) for p in planes):
            continue
        for simplex in enumerate_simplices(s, c):
            pts = list(simplex.vertices)
            for plane in planes:
                pts = cut_polytope(pts, plane)
                if len(pts) < 3:
                    break
            if len(pts) < 3:
                continue
            poly = _polygon([pt @ basis for pt in pts])
            if poly is None:
                continue
            key = tuple(sorted(tuple(np.round(v, 9).tolist()) for v in poly))
            if key in seen:
                continue
            seen.add(key)
            mesh.polygons.append(poly)
            mesh.provenance.append((c, simplex.perm))
    return mesh


class _VertexIndex:
    """Vertex deduplication at a fixed tolerance through a hash grid."""

    def __init__(self, tol: float) -> None:
        self.tol = tol
        self.cells: dict[tuple[int, ...], list[int]] = {}
        self.points: list[np.ndarray] = []

    def add(self, p: np.ndarray) -> int:
        cell = tuple(int(v) for v in np.floor(p / self.tol))
        for off in np.ndindex(*(3,) * len(cell)):
            key = tuple(k + o - 1 for k, o in zip(cell, off))
            for i in self.cells.get(key, ()):
                if np.max(np.abs(self.points[i] - p)) <= self.tol:
                    return i
        self.points.append(p)
        self.cells.setdefault(cell, []).append(len(self.points) - 1)
        return len(self.points) - 1


def mesh_faces(m: SliceMesh, tol: float = _DEDUP) -> tuple[np.ndarray, list[list[int]]]:
    """Shared vertex array and 0-based polygon index lists."""
    index = _VertexIndex(tol)
    faces = [[index.add(np.asarray(v, dtype=float)) for v in poly] for poly in m.polygons]
    verts = np.array(index.points) if index.points else np.zeros((0, 3))
    return verts, faces


def export_mesh(m: SliceMesh, fmt: str = "obj") -> bytes:
    """Serialize a mesh as OBJ text (1-based faces) or JSON with provenance."""
    if fmt == "obj":
        verts, faces = mesh_faces(m)
        lines = ["# resistar slice mesh", f"# axes {' '.join(str(a + 1) for a in m.axes) if m.axes else 'general'}"]
        lines.append(f"# vertices {len(verts)} polygons {len(faces)}")
        lines += ["v " + " ".join(repr(float(c)) for c in v) for v in verts]
        lines += ["f " + " ".join(str(i + 1) for i in f) for f in faces]
        return ("\n".join(lines) + "\n").encode()
    if fmt == "json":
        payload = {
            "axes": list(m.axes) if m.axes is not None else None,
            "polygons": [
                {"vertices": poly.tolist(), "cube": list(c), "perm": list(perm) if perm is not None else None}
                for poly, (c, perm) in zip(m.polygons, m.provenance)
            ],
        }
        return (json.dumps(payload, indent=1) + "\n").encode()
    raise UsageError(f"unsupported mesh format {fmt!r}; use 'obj' or 'json'")


def mesh_euler_characteristic(m: SliceMesh) -> tuple[int, bool]:
    """Euler characteristic after fan triangulation, and whether every edge joins two triangles."""
    verts, faces = mesh_faces(m)
    edges: dict[tuple[int, int], int] = {}
    n_tri = 0
    for f in faces:
        for k in range(1, len(f) - 1):
            tri = (f[0], f[k], f[k + 1])
            n_tri += 1
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (a, b) if a < b else (b, a)
                edges[key] = edges.get(key, 0) + 1
    closed = all(v == 2 for v in edges.values())
    return len(verts) - len(edges) + n_tri, closed
