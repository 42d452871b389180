"""Boundary points by successive dichotomies, and the sparse cube -> points store."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .grid import CubeId, DomainError, FaceCode, GridSpec, VertexId
from .oracle import CountingOracle, Oracle, sanitize

VARIANTS = ("cube", "kuhn")
_CHUNK = 1 << 18


class ContractViolation(ValueError):
    """Inputs break an operation's precondition."""


@dataclass(frozen=True)
class BoundaryPoint:
    """Point ``v_minus + t (v_plus - v_minus)`` on a grid edge whose endpoints differ in label."""

    v_minus: VertexId
    v_plus: VertexId
    t: float

    def point(self, g: GridSpec) -> np.ndarray:
        vm = np.asarray(self.v_minus, dtype=float)
        vp = np.asarray(self.v_plus, dtype=float)
        return (vm + self.t * (vp - vm)) / (g.n_g - 1)


def dichotomy_boundary(o: Oracle, v_minus: Sequence[float], v_plus: Sequence[float], q: int) -> float:
    """Edge parameter of the boundary point found by ``q`` bisections.

    Endpoints are points (not indices); their sanitized labels must be -1 and +1.
    """
    a = np.asarray(v_minus, dtype=float)
    b = np.asarray(v_plus, dtype=float)
    ends = sanitize(o.evaluate_many(np.stack([a, b])))
    if ends[0] != -1 or ends[1] != 1:
        raise ContractViolation(f"endpoint labels are {ends.tolist()}, expected [-1, 1]")
    return float(dichotomy_batch(o, a[None, :], b[None, :], q)[0])


def dichotomy_batch(o: Oracle, a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    """Vectorized bisection over many edges ``a -> b`` (labels -1 at ``a``, +1 at ``b``).

    Brackets are tracked as integer numerators over ``2**q`` so the returned
    parameters are exactly ``(i + 0.5) / 2**q``.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = len(a)
    lo = np.zeros(n, dtype=np.int64)
    hi = np.full(n, 1 << q, dtype=np.int64)
    scale = float(1 << q)
    for _ in range(q):
        mid = (lo + hi) // 2
        s = (mid / scale)[:, None]
        lab = o.evaluate_many(a + s * (b - a)) if n else np.zeros(0, dtype=np.int8)
        pos = lab >= 0  # a midpoint on the manifold counts as +1
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    return (lo + 0.5) / scale


@dataclass(eq=False)
class BoundaryStore:
    """Boundary points of every grid edge with a sign change, indexed by cube.

    Points are stored once per geometric edge (``v_minus``, ``v_plus``, ``t``),
    sorted by edge key.  ``cube_index`` lists the cubes holding at least one
    point in lexicographic order; ``cube_ptr``/``cube_members`` give each
    cube's point indices (CSR layout, ascending within a cube).
    """

    grid: GridSpec
    variant: str
    q: int
    v_minus: np.ndarray
    v_plus: np.ndarray
    t: np.ndarray
    cube_index: np.ndarray
    cube_ptr: np.ndarray
    cube_members: np.ndarray
    oracle_digest: str = ""
    fallback_label: int = 1
    _lookup: dict[int, int] | None = field(default=None, repr=False)
    _coords: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def n_points(self) -> int:
        return len(self.t)

    @property
    def n_cubes(self) -> int:
        return len(self.cube_index)

    def __len__(self) -> int:
        return self.n_cubes

    def _linear(self, c: Sequence[int]) -> int:
        return self.grid.cube_linear(c)

    def _row(self, c: Sequence[int]) -> int | None:
        if self._lookup is None:
            lin = np.ravel_multi_index(tuple(self.cube_index.T), (self.grid.n_g - 1,) * self.d) if self.n_cubes else []
            self._lookup = {int(k): i for i, k in enumerate(np.asarray(lin).tolist())}
        return self._lookup.get(self._linear(c))

    def __contains__(self, c: Sequence[int]) -> bool:
        return self._row(c) is not None

    def cube_ids(self) -> Iterator[CubeId]:
        for row in self.cube_index:
            yield tuple(int(k) for k in row)

    def members(self, c: Sequence[int]) -> np.ndarray:
        row = self._row(c)
        if row is None:
            return np.zeros(0, dtype=np.int64)
        return self.cube_members[self.cube_ptr[row] : self.cube_ptr[row + 1]]

    def points_of(self, c: Sequence[int]) -> list[BoundaryPoint]:
        return [self.boundary_point(int(i)) for i in self.members(c)]

    @property
    def cubes(self) -> dict[CubeId, list[BoundaryPoint]]:
        return {c: self.points_of(c) for c in self.cube_ids()}

    def boundary_point(self, i: int) -> BoundaryPoint:
        return BoundaryPoint(
            tuple(int(k) for k in self.v_minus[i]), tuple(int(k) for k in self.v_plus[i]), float(self.t[i])
        )

    @property
    def coords(self) -> np.ndarray:
        """Global coordinates of every stored point."""
        if self._coords is None:
            vm = self.v_minus.astype(float)
            vp = self.v_plus.astype(float)
            self._coords = (vm + self.t[:, None] * (vp - vm)) / (self.grid.n_g - 1)
        return self._coords

    def cube_arrays(self, c: Sequence[int]) -> CubeData:
        """Per-cube view used by the classification kernels."""
        idx = self.members(c)
        corner = np.asarray(c, dtype=np.int64)
        vm = self.v_minus[idx].astype(np.int64) - corner
        vp = self.v_plus[idx].astype(np.int64) - corner
        bits = np.int64(1) << np.arange(self.d, dtype=np.int64)
        t = self.t[idx]
        local = vm + t[:, None] * (vp - vm)
        return CubeData(
            cube=tuple(int(k) for k in c),
            index=idx,
            local=np.ascontiguousarray(local, dtype=float),
            mask_minus=np.ascontiguousarray(vm @ bits, dtype=np.int64),
            mask_plus=np.ascontiguousarray(vp @ bits, dtype=np.int64),
            t=np.ascontiguousarray(t, dtype=float),
        )


@dataclass(frozen=True)
class CubeData:
    """Boundary points of one cube in local coordinates, with endpoint vertex masks."""

    cube: CubeId
    index: np.ndarray
    local: np.ndarray
    mask_minus: np.ndarray
    mask_plus: np.ndarray
    t: np.ndarray

    def __len__(self) -> int:
        return len(self.t)


def vertex_labels(o: Oracle, g: GridSpec) -> np.ndarray:
    """Sanitized labels of all grid vertices as an ``(n_g,) * d`` int8 array."""
    n, d = g.n_g, g.d
    out = np.empty(n**d, dtype=np.int8)
    for lo in range(0, n**d, _CHUNK):
        hi = min(lo + _CHUNK, n**d)
        idx = np.stack(np.unravel_index(np.arange(lo, hi), (n,) * d), axis=1)
        out[lo:hi] = sanitize(o.evaluate_many(idx / (n - 1)))
    return out.reshape((n,) * d)


def edge_directions(d: int, variant: str) -> list[tuple[int, ...]]:
    """Edge classes scanned by the builder: unit axes, or every nonzero 0/1 vector."""
    if variant == "cube":
        return [tuple(int(j == k) for j in range(d)) for k in range(d)]
    if variant == "kuhn":
        return [dv for dv in itertools.product((0, 1), repeat=d) if any(dv)]
    raise ValueError(f"unknown variant {variant!r}")


def _crossing_edges(labels: np.ndarray, direction: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Base vertices of edges ``a -> a + direction`` with a label change, and the label at ``a``."""
    n = labels.shape[0]
    lo = tuple(slice(0, n - 1) if s else slice(None) for s in direction)
    hi = tuple(slice(1, n) if s else slice(None) for s in direction)
    a_lab = labels[lo]
    diff = a_lab != labels[hi]
    base = np.argwhere(diff)
    return base, a_lab[diff]


def build_store(o: Oracle, g: GridSpec, variant: str = "cube", q: int | None = None, *, q_boost: bool = False) -> BoundaryStore:
    """Evaluate the grid, bisect every edge with a label change and index points by cube.

    ``q`` defaults to ``ceil(log2(n_g - 1))``, the smallest count with
    ``2**-q <= epsilon``.  With ``q_boost``, Kuhn edges of length
    ``sqrt(m) * epsilon`` get ``ceil(log2(sqrt(m)))`` extra bisections.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if o.d != g.d:
        raise ContractViolation(f"oracle dimension {o.d} does not match grid dimension {g.d}")
    if q is None:
        q = max(1, math.ceil(math.log2(g.n_g - 1)))
    if q < 1:
        raise ValueError("q must be >= 1")
    d, n = g.d, g.n_g
    labels = vertex_labels(o, g)
    fallback = int(labels[(0,) * d])

    vm_parts, vp_parts, t_parts = [], [], []
    for direction in edge_directions(d, variant):
        base, base_lab = _crossing_edges(labels, direction)
        if not len(base):
            continue
        step = np.asarray(direction, dtype=np.int64)
        tip = base + step
        neg_at_base = (base_lab == -1)[:, None]
        vm = np.where(neg_at_base, base, tip)
        vp = np.where(neg_at_base, tip, base)
        qe = q
        if q_boost:
            qe = q + math.ceil(math.log2(math.sqrt(int(step.sum())))) if step.sum() > 1 else q
        t = np.empty(len(vm))
        for lo in range(0, len(vm), _CHUNK):
            sl = slice(lo, lo + _CHUNK)
            t[sl] = dichotomy_batch(o, vm[sl] / (n - 1), vp[sl] / (n - 1), qe)
        vm_parts.append(vm)
        vp_parts.append(vp)
        t_parts.append(t)

    if vm_parts:
        v_minus = np.concatenate(vm_parts)
        v_plus = np.concatenate(vp_parts)
        t = np.concatenate(t_parts)
    else:
        v_minus = np.zeros((0, d), dtype=np.int64)
        v_plus = np.zeros((0, d), dtype=np.int64)
        t = np.zeros(0)
    return assemble_store(g, variant, q, v_minus, v_plus, t, o.digest(), fallback)


def _edge_order(v_minus: np.ndarray, v_plus: np.ndarray) -> np.ndarray:
    lower = np.minimum(v_minus, v_plus)
    upper = np.maximum(v_minus, v_plus)
    keys = np.concatenate([lower, upper], axis=1)
    # lexsort uses the last key as primary
    return np.lexsort(keys.T[::-1]) if len(keys) else np.zeros(0, dtype=np.int64)


def containing_cubes(g: GridSpec, v_minus: np.ndarray, v_plus: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All (point index, cube multi-index) pairs such that the point's edge lies in the cube."""
    d, n = g.d, g.n_g
    lower = np.minimum(v_minus, v_plus).astype(np.int64)
    span = np.abs(v_plus - v_minus).astype(np.int64)
    point_ids, cubes = [], []
    for choice in itertools.product((0, 1), repeat=d):
        shift = np.asarray(choice, dtype=np.int64)
        # on axes the edge spans, the cube starts at the lower endpoint
        ok = np.all((span == 0) | (shift == 0), axis=1)
        c = lower - shift
        ok &= np.all((c >= 0) & (c <= n - 2), axis=1)
        sel = np.nonzero(ok)[0]
        point_ids.append(sel)
        cubes.append(c[sel])
    return np.concatenate(point_ids), np.concatenate(cubes) if cubes else np.zeros((0, d), dtype=np.int64)


def assemble_store(
    g: GridSpec,
    variant: str,
    q: int,
    v_minus: np.ndarray,
    v_plus: np.ndarray,
    t: np.ndarray,
    oracle_digest: str = "",
    fallback_label: int = 1,
) -> BoundaryStore:
    """Canonicalize point order and build the cube index."""
    d = g.d
    v_minus = np.asarray(v_minus, dtype=np.int64).reshape(-1, d)
    v_plus = np.asarray(v_plus, dtype=np.int64).reshape(-1, d)
    t = np.asarray(t, dtype=float)
    order = _edge_order(v_minus, v_plus)
    v_minus, v_plus, t = v_minus[order], v_plus[order], t[order]

    pid, cubes = containing_cubes(g, v_minus, v_plus)
    if len(pid):
        lin = np.ravel_multi_index(tuple(cubes.T), (g.n_g - 1,) * d)
        order = np.lexsort((pid, lin))
        lin, pid = lin[order], pid[order]
        uniq, start = np.unique(lin, return_index=True)
        cube_index = np.stack(np.unravel_index(uniq, (g.n_g - 1,) * d), axis=1).astype(np.int64)
        cube_ptr = np.append(start, len(pid)).astype(np.int64)
    else:
        cube_index = np.zeros((0, d), dtype=np.int64)
        cube_ptr = np.zeros(1, dtype=np.int64)
    small = np.int16 if g.n_g < 2**15 else np.int64
    return BoundaryStore(
        grid=g,
        variant=variant,
        q=q,
        v_minus=v_minus.astype(small),
        v_plus=v_plus.astype(small),
        t=t,
        cube_index=cube_index,
        cube_ptr=cube_ptr,
        cube_members=pid.astype(np.int64),
        oracle_digest=oracle_digest,
        fallback_label=fallback_label,
    )


def boundary_points_of_face(s: BoundaryStore, c: Sequence[int], f: FaceCode) -> list[BoundaryPoint]:
    """Stored points of cube ``c`` whose edge lies in face ``f``."""
    if f.d != s.d:
        raise DomainError("face dimension does not match the store")
    data = s.cube_arrays(c)
    return [
        s.boundary_point(int(i))
        for i, a, b in zip(data.index, data.mask_minus, data.mask_plus)
        if f.contains_vertex(int(a)) and f.contains_vertex(int(b))
    ]


def build_counting(o: Oracle, g: GridSpec, variant: str = "cube", q: int | None = None, **kw) -> tuple[BoundaryStore, int]:
    """Build a store and report the number of oracle evaluations it took."""
    counter = CountingOracle(o)
    store = build_store(counter, g, variant, q, **kw)
    return store, counter.calls
