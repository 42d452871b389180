"""Classification of any point of the domain against a grid-level resistar.

A point whose own cube holds boundary points is classified in that cube (or in
its Kuhn simplex).  Any other point walks the segment towards a fixed reference
point ``m`` until the first cube of the store, and is classified at the point
where the segment enters that cube.
"""

from __future__ import annotations

import itertools
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from .boundary import BoundaryStore
from .cube_classifier import DEFAULT_DELTA
from .grid import CubeId, DomainError, GridSpec, _check_point

# a coordinate this close to a grid plane (in grid-index units) counts as on it
_PLANE_SLACK = 1e-9


def _cubes_at(n_g: int, u: np.ndarray) -> list[CubeId]:
    """Closed cubes containing the point with grid-index coordinates ``u``."""
    choices = []
    for v in u.tolist():
        k = round(v)
        if abs(v - k) <= _PLANE_SLACK:
            opts = [i for i in (k - 1, k) if 0 <= i <= n_g - 2]
        else:
            opts = [min(max(int(np.floor(v)), 0), n_g - 2)]
        choices.append(opts)
    return [tuple(c) for c in itertools.product(*choices)]


def walk_segment(g: GridSpec, a: Sequence[float], b: Sequence[float]) -> Iterator[tuple[float, CubeId]]:
    """Yield ``(entry parameter, cube)`` for every closed cube meeting ``[a, b]``.

    Events are ``t = 0`` and every parameter where the segment crosses a grid
    plane; at each event all cubes containing the point are reported, in
    lexicographic order, skipping cubes already seen.
    """
    n = g.n_g
    ua = np.asarray(a, dtype=float) * (n - 1)
    ub = np.asarray(b, dtype=float) * (n - 1)
    step = ub - ua
    events = [0.0]
    for k in range(g.d):
        if step[k] == 0.0:
            continue
        lo, hi = sorted((ua[k], ub[k]))
        for plane in range(int(np.ceil(lo)), int(np.floor(hi)) + 1):
            t = (plane - ua[k]) / step[k]
            if 0.0 < t <= 1.0:
                events.append(float(t))
    events = sorted(set(events))
    seen: set[CubeId] = set()
    for t in events:
        u = ua + t * step
        for c in _cubes_at(n, u):
            if c not in seen:
                seen.add(c)
                yield t, c


def segment_cubes(g: GridSpec, a: Sequence[float], b: Sequence[float]) -> list[CubeId]:
    """Cubes whose closed body meets ``[a, b]``, by increasing entry parameter from ``a``."""
    _check_point(g, a)
    _check_point(g, b)
    return [c for _, c in walk_segment(g, a, b)]


class Classifier:
    """Grid-level classifier over an immutable boundary store."""

    def __init__(self, store: BoundaryStore, delta: float = DEFAULT_DELTA) -> None:
        self.store = store
        self.delta = float(delta)
        self.grid = store.grid
        if store.n_cubes:
            self.reference_cube: CubeId | None = tuple(int(k) for k in store.cube_index[0])
            self.m: np.ndarray | None = self.grid.cube_centre(self.reference_cube)
        else:
            self.reference_cube = None
            self.m = None
        self.fallback_label = int(store.fallback_label)
        self._cache: dict[CubeId, object] = {}

    @property
    def variant(self) -> str:
        return self.store.variant

    def _data(self, c: CubeId):
        data = self._cache.get(c)
        if data is None:
            data = self.store.cube_arrays(c)
            self._cache[c] = data
        return data

    def _local_batch(self, c: CubeId, local: np.ndarray) -> np.ndarray:
        data = self._data(c)
        delta = self.delta * (self.grid.n_g - 1)
        if self.variant == "cube":
            return kernels.classify_cube_batch(data.local, data.mask_minus, data.mask_plus, local, delta)
        return kernels.classify_simplex_batch(data.mask_minus, data.mask_plus, data.t, local, delta)

    def entry_point(self, x: Sequence[float]) -> tuple[CubeId, np.ndarray] | None:
        """Store cube used for ``x`` and the point classified there (global coordinates)."""
        g = self.grid
        x = _check_point(g, x)
        if self.m is None:
            return None
        for t, c in walk_segment(g, x, self.m):
            if c in self.store:
                p = x + t * (self.m - x)
                lo = g.cube_coords(c)
                return c, np.clip(p, lo, lo + g.epsilon)
        raise AssertionError("the segment ends in a store cube")

    def classify(self, x: Sequence[float]) -> int:
        hit = self.entry_point(x)
        if hit is None:
            return self.fallback_label
        c, p = hit
        local = np.clip(self.grid.to_local(c, p), 0.0, 1.0)
        return int(self._local_batch(c, local[None, :])[0])

    def classify_many(self, xs: np.ndarray) -> np.ndarray:
        """Labels of many points; points sharing a cube are classified in one batch."""
        g = self.grid
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if xs.shape[1] != g.d:
            raise DomainError(f"expected points of dimension {g.d}")
        if np.any(~np.isfinite(xs)) or np.any(xs < 0.0) or np.any(xs > 1.0):
            raise DomainError(f"points must lie in [0, 1]^{g.d}")
        out = np.empty(len(xs), dtype=np.int8)
        if self.m is None:
            out[:] = self.fallback_label
            return out
        cubes = np.minimum(np.floor(xs * (g.n_g - 1)).astype(np.int64), g.n_g - 2)
        targets = np.empty_like(xs)
        owner = np.empty_like(cubes)
        direct = np.array([tuple(c) in self.store for c in cubes.tolist()], dtype=bool)
        targets[direct] = xs[direct]
        owner[direct] = cubes[direct]
        for i in np.nonzero(~direct)[0]:
            c, p = self.entry_point(xs[i])
            owner[i] = c
            targets[i] = p
        lin = np.ravel_multi_index(tuple(owner.T), (g.n_g - 1,) * g.d)
        order = np.argsort(lin, kind="stable")
        bounds = np.nonzero(np.diff(lin[order]))[0] + 1
        for group in np.split(order, bounds):
            if not len(group):
                continue
            c = tuple(int(k) for k in owner[group[0]])
            local = np.clip(targets[group] * (g.n_g - 1) - owner[group[0]], 0.0, 1.0)
            out[group] = self._local_batch(c, local)
        return out

    def classify_in_store_cube(self, c: Sequence[int], local: np.ndarray) -> np.ndarray:
        """Batch labels of local points of store cube ``c``."""
        c = self.grid.check_cube(c)
        if c not in self.store:
            raise DomainError(f"cube {c} is not in the store")
        return self._local_batch(c, np.atleast_2d(np.asarray(local, dtype=float)))
