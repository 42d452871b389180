"""Classify points inside one cube against the cube's c-resistar.

The classifier never builds simplices.  Starting from the cube, it projects the
query point from the barycentre of the current face's boundary points onto the
face boundary, descends into the facet that was hit and repeats, at most ``d``
times.  Work happens in local cube coordinates where ``delta`` becomes
``delta * (n_g - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .boundary import BoundaryPoint, BoundaryStore, ContractViolation
from .grid import DomainError, FaceCode, GridSpec

DEFAULT_DELTA = 1e-5
_TINY = 1e-15
_SLACK = 1e-9


class NumericError(ArithmeticError):
    """A ray has no usable direction inside the face."""


@dataclass(frozen=True)
class ProjectionState:
    """One step of the recursive projection, in local cube coordinates."""

    face: FaceCode
    point: tuple[float, ...]
    boundary: tuple[BoundaryPoint, ...]
    barycentre: tuple[float, ...]


def local_point(g: GridSpec, c: Sequence[int], x: Sequence[float]) -> np.ndarray:
    """``x`` in the local frame of cube ``c``; raises if ``x`` is outside the cube."""
    x = np.asarray(x, dtype=float)
    if x.shape != (g.d,):
        raise DomainError(f"expected a point of dimension {g.d}, got shape {x.shape}")
    u = g.to_local(c, x)
    if not np.all(np.isfinite(u)) or np.any(u < -_SLACK) or np.any(u > 1.0 + _SLACK):
        raise DomainError(f"point {x.tolist()} is not inside cube {tuple(c)}")
    return np.clip(u, 0.0, 1.0)


def _cube_data(s: BoundaryStore, c: Sequence[int]):
    c = s.grid.check_cube(c)
    data = s.cube_arrays(c)
    if not len(data):
        raise ContractViolation(f"cube {c} holds no boundary points")
    return c, data


def classify_in_cube(s: BoundaryStore, c: Sequence[int], x: Sequence[float], delta: float = DEFAULT_DELTA) -> int:
    """Label of global point ``x`` by the c-resistar of cube ``c``."""
    if s.variant != "cube":
        raise ContractViolation("classify_in_cube needs a cube-variant store")
    c, data = _cube_data(s, c)
    u = local_point(s.grid, c, x)
    lab = kernels.classify_cube_batch(data.local, data.mask_minus, data.mask_plus, u[None, :], delta * (s.grid.n_g - 1))
    return int(lab[0])


def projection_trace(s: BoundaryStore, c: Sequence[int], x: Sequence[float], delta: float = DEFAULT_DELTA) -> tuple[int, list[ProjectionState]]:
    """Label of ``x`` together with every face visited on the way."""
    c, data = _cube_data(s, c)
    u = local_point(s.grid, c, x)
    raw: list = []
    lab = kernels.classify_cube_point(
        data.local.tolist(), data.mask_minus.tolist(), data.mask_plus.tolist(), u.tolist(), delta * (s.grid.n_g - 1), trace=raw
    )
    states = []
    for free, offset, point, members, bary in raw:
        states.append(
            ProjectionState(
                face=FaceCode(s.d, free, offset),
                point=tuple(point),
                boundary=tuple(s.boundary_point(int(data.index[i])) for i in members),
                barycentre=tuple(bary),
            )
        )
    return lab, states


def ray_exit_face(f: FaceCode, origin: Sequence[float], through: Sequence[float]) -> tuple[np.ndarray, FaceCode]:
    """Where the ray from ``origin`` through ``through`` leaves face ``f`` of the unit cube.

    Ties between axes go to the smallest axis index.
    """
    o = np.asarray(origin, dtype=float)
    p = np.asarray(through, dtype=float)
    best_t, best_axis, best_side = np.inf, -1, 0
    for a in f.free_axes:
        step = p[a] - o[a]
        if step > _TINY:
            ta, side = (1.0 - o[a]) / step, 1
        elif step < -_TINY:
            ta, side = -o[a] / step, 0
        else:
            continue
        if ta < best_t:
            best_t, best_axis, best_side = ta, a, side
    if best_axis < 0:
        raise NumericError("ray direction vanishes on every free axis")
    exit_point = o + best_t * (p - o)
    exit_point[best_axis] = float(best_side)
    return exit_point, f.facet(best_axis, best_side)
