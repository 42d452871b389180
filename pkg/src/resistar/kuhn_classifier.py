"""Classify points inside one Kuhn simplex against its K-resistar.

Same recursion as the cube classifier, with faces of the simplex in place of
cube faces.  Points are carried as barycentric weights over the simplex's
vertex chain; a ray leaves the current face through the facet opposite the
vertex whose weight reaches zero first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .boundary import BoundaryPoint, BoundaryStore, ContractViolation
from .cube_classifier import DEFAULT_DELTA, local_point
from .grid import DomainError, KuhnSimplexRef, SimplexFace, mask_to_vertex

_WEIGHT_SLACK = 1e-12


class StoreInconsistency(RuntimeError):
    """Stored boundary points contradict each other."""


@dataclass(frozen=True)
class BarycentricPoint:
    """A point of ``face`` given by one nonnegative weight per face vertex."""

    face: SimplexFace
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        w = [float(v) for v in self.weights]
        if len(w) != len(self.face.vertices):
            raise ValueError("one weight per face vertex is required")
        if any(v < -_WEIGHT_SLACK for v in w) or abs(sum(w) - 1.0) > _WEIGHT_SLACK:
            raise ValueError(f"{w} are not barycentric weights")
        object.__setattr__(self, "weights", tuple(max(v, 0.0) for v in w))

    def cartesian(self) -> np.ndarray:
        """Position in grid-index units."""
        return np.asarray(self.weights) @ np.asarray(self.face.vertices, dtype=float)


def _simplex_rows(s: BoundaryStore, ref: KuhnSimplexRef):
    if s.variant != "kuhn":
        raise ContractViolation("K-resistar queries need a kuhn-variant store")
    c = s.grid.check_cube(ref.cube)
    data = s.cube_arrays(c)
    chain = set(ref.chain_masks)
    rows = [i for i, (a, b) in enumerate(zip(data.mask_minus.tolist(), data.mask_plus.tolist())) if a in chain and b in chain]
    return data, rows


def simplex_boundary_points(s: BoundaryStore, ref: KuhnSimplexRef) -> list[BoundaryPoint]:
    """Stored points of the simplex's cube whose edge joins two simplex vertices."""
    data, rows = _simplex_rows(s, ref)
    return [s.boundary_point(int(data.index[i])) for i in rows]


def simplex_vertex_labels(s: BoundaryStore, ref: KuhnSimplexRef) -> dict[int, int]:
    """Labels of the simplex vertices (keyed by local mask) read from its boundary points.

    Every vertex of a simplex with a sign change touches a crossing edge, so
    all labels are recovered; an empty boundary set yields an empty dict.
    """
    data, rows = _simplex_rows(s, ref)
    labels: dict[int, int] = {}
    for i in rows:
        for mask, lab in ((int(data.mask_minus[i]), -1), (int(data.mask_plus[i]), 1)):
            if labels.setdefault(mask, lab) != lab:
                raise StoreInconsistency(f"vertex mask {mask} of cube {ref.cube} is labelled both ways")
    return labels


def face_of_no_boundary(s: BoundaryStore, ref: KuhnSimplexRef, sign: int) -> SimplexFace:
    """Face spanned by the simplex vertices labelled ``sign``."""
    if sign not in (-1, 1):
        raise ValueError("sign must be -1 or +1")
    labels = simplex_vertex_labels(s, ref)
    if not labels:
        raise ContractViolation(f"simplex {ref} holds no boundary points")
    masks = ref.chain_masks
    if len(labels) != len(masks):
        raise StoreInconsistency(f"simplex {ref} has vertices on no crossing edge")
    chosen = [m for m in masks if labels[m] == sign]
    if not chosen or len(chosen) == len(masks):
        raise StoreInconsistency(f"simplex {ref} has a boundary set but one-signed vertices")
    return SimplexFace(tuple(mask_to_vertex(ref.cube, m) for m in chosen))


def barycentric_of(ref: KuhnSimplexRef, local: Sequence[float]) -> BarycentricPoint:
    """Barycentric weights of a local point over the simplex's vertex chain."""
    u = np.asarray(local, dtype=float)
    d = len(u)
    perm = ref.perm
    s = u[list(perm)]
    if np.any(np.diff(s) < -_WEIGHT_SLACK) or s[0] < -_WEIGHT_SLACK or s[-1] > 1.0 + _WEIGHT_SLACK:
        raise DomainError(f"local point {u.tolist()} is not inside simplex {perm}")
    w = [1.0 - u[perm[d - 1]]] + [u[perm[d - j]] - u[perm[d - j - 1]] for j in range(1, d)] + [u[perm[0]]]
    w = [min(max(v, 0.0), 1.0) for v in w]
    total = sum(w)
    return BarycentricPoint(ref.vertices(), tuple(v / total for v in w))


def classify_in_simplex(s: BoundaryStore, ref: KuhnSimplexRef, x: Sequence[float], delta: float = DEFAULT_DELTA) -> int:
    """Label of global point ``x`` by the K-resistar of simplex ``ref``."""
    data, rows = _simplex_rows(s, ref)
    if not rows:
        raise ContractViolation(f"simplex {ref} holds no boundary points")
    u = local_point(s.grid, ref.cube, x)
    barycentric_of(ref, u)  # membership check
    lab = kernels.classify_simplex_point(
        data.mask_minus[rows].tolist(),
        data.mask_plus[rows].tolist(),
        data.t[rows].tolist(),
        u.tolist(),
        delta * (s.grid.n_g - 1),
        perm=ref.perm,
    )
    return int(lab)


def simplex_trace(s: BoundaryStore, ref: KuhnSimplexRef, x: Sequence[float], delta: float = DEFAULT_DELTA) -> tuple[int, list]:
    """Label plus the per-step ``(active vertex mask, weights, members, barycentre)`` records."""
    data, rows = _simplex_rows(s, ref)
    if not rows:
        raise ContractViolation(f"simplex {ref} holds no boundary points")
    u = local_point(s.grid, ref.cube, x)
    barycentric_of(ref, u)
    trace: list = []
    lab = kernels.classify_simplex_point(
        data.mask_minus[rows].tolist(),
        data.mask_plus[rows].tolist(),
        data.t[rows].tolist(),
        u.tolist(),
        delta * (s.grid.n_g - 1),
        trace=trace,
        perm=ref.perm,
    )
    return int(lab), trace
