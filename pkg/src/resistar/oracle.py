"""Point-labelling oracles: ``[0, 1]^d -> {-1, 0, +1}``.

Every oracle implements ``evaluate_many(points) -> int8 array``; scalar
evaluation goes through it.  Oracles are immutable; call counting is done by
wrapping one in :class:`CountingOracle`.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .grid import GridSpec

_CHUNK = 1 << 16


class Oracle:
    """Base class for labelling oracles."""

    d: int

    def evaluate_many(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, x: Sequence[float]) -> int:
        return int(self.evaluate_many(np.asarray(x, dtype=float)[None, :])[0])

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError(f"{type(self).__name__} is not serializable")

    def digest(self) -> str:
        try:
            payload = json.dumps(self.to_dict(), sort_keys=True)
        except NotImplementedError:
            payload = repr(self)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _sign(values: np.ndarray) -> np.ndarray:
    return np.sign(values).astype(np.int8)


@dataclass(frozen=True)
class HyperplaneOracle(Oracle):
    """Label ``sign(normal . x - offset)``."""

    normal: tuple[float, ...]
    offset: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "normal", tuple(float(v) for v in self.normal))
        if not any(self.normal):
            raise ValueError("hyperplane normal must be nonzero")

    @property
    def d(self) -> int:
        return len(self.normal)

    def margin(self, x: np.ndarray) -> np.ndarray:
        """Signed Euclidean distance to the hyperplane."""
        n = np.asarray(self.normal)
        return (np.asarray(x, dtype=float) @ n - self.offset) / np.linalg.norm(n)

    def evaluate_many(self, x: np.ndarray) -> np.ndarray:
        return _sign(np.asarray(x, dtype=float) @ np.asarray(self.normal) - self.offset)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "hyperplane", "normal": list(self.normal), "offset": self.offset}


@dataclass(frozen=True)
class SphereOracle(Oracle):
    """Ball of ``radius`` around ``center``; the inside is labelled -1."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if not self.radius > 0:
            raise ValueError("sphere radius must be positive")

    @property
    def d(self) -> int:
        return len(self.center)

    def margin(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - np.asarray(self.center), axis=-1) - self.radius

    def evaluate_many(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        # compare squared distances so points exactly on the sphere give 0
        sq = np.sum((x - np.asarray(self.center)) ** 2, axis=-1)
        return _sign(sq - self.radius**2)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "sphere", "center": list(self.center), "radius": self.radius}


def radial_kernel(u2: np.ndarray) -> np.ndarray:
    """``phi(u) = 100 / (1 + u**2)`` taking ``u**2``."""
    return 100.0 / (1.0 + u2)


@dataclass(frozen=True, eq=False)
class RadialOracle(Oracle):
    """Sign of a difference of radial bumps centred on positive and negative sites."""

    positive_sites: np.ndarray
    negative_sites: np.ndarray
    sigma: float

    def __post_init__(self) -> None:
        pos = np.array(self.positive_sites, dtype=float, ndmin=2)
        neg = np.array(self.negative_sites, dtype=float, ndmin=2)
        if pos.size == 0 or neg.size == 0:
            raise ValueError("radial oracle needs at least one site of each sign")
        if pos.shape[1] != neg.shape[1]:
            raise ValueError("site dimensions differ")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        pos.setflags(write=False)
        neg.setflags(write=False)
        object.__setattr__(self, "positive_sites", pos)
        object.__setattr__(self, "negative_sites", neg)

    @property
    def d(self) -> int:
        return self.positive_sites.shape[1]

    def potential(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty(len(x))
        s2 = self.sigma**2
        for lo in range(0, len(x), _CHUNK):
            xc = x[lo : lo + _CHUNK]
            acc = np.zeros(len(xc))
            for p in self.positive_sites:
                acc += radial_kernel(np.sum((xc - p) ** 2, axis=1) / s2)
            for q in self.negative_sites:
                acc -= radial_kernel(np.sum((xc - q) ** 2, axis=1) / s2)
            out[lo : lo + _CHUNK] = acc
        return out

    def evaluate_many(self, x: np.ndarray) -> np.ndarray:
        return _sign(self.potential(x))

    def swapped(self) -> RadialOracle:
        return RadialOracle(self.negative_sites, self.positive_sites, self.sigma)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "radial",
            "positive_sites": self.positive_sites.tolist(),
            "negative_sites": self.negative_sites.tolist(),
            "sigma": self.sigma,
        }

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, RadialOracle)
            and self.sigma == other.sigma
            and np.array_equal(self.positive_sites, other.positive_sites)
            and np.array_equal(self.negative_sites, other.negative_sites)
        )

    def __hash__(self) -> int:
        return hash(self.digest())


@dataclass(frozen=True, eq=False)
class GridLabelOracle(Oracle):
    """Precomputed vertex labels; any point takes the label of its nearest vertex.

    Ties between equidistant vertices go to the lexicographically smallest.
    """

    labels: np.ndarray

    def __post_init__(self) -> None:
        lab = np.array(self.labels, dtype=np.int8)
        if lab.ndim < 1 or len(set(lab.shape)) != 1 or lab.shape[0] < 2:
            raise ValueError("labels must be a hypercubic array with >= 2 points per axis")
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    @property
    def d(self) -> int:
        return self.labels.ndim

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.labels.ndim, self.labels.shape[0])

    def evaluate_many(self, x: np.ndarray) -> np.ndarray:
        idx = nearest_vertex_index(self.grid, np.atleast_2d(x))
        return self.labels[tuple(idx.T)]

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "grid_labels", "labels": self.labels.tolist()}


@dataclass(frozen=True)
class FunctionOracle(Oracle):
    """Wrap an arbitrary ``f(points) -> labels`` callable (vectorized)."""

    func: Callable[[np.ndarray], np.ndarray]
    d: int
    name: str = "function"

    def evaluate_many(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.func(np.atleast_2d(np.asarray(x, dtype=float))), dtype=np.int8)


@dataclass(eq=False)
class CountingOracle(Oracle):
    """Thread-safe call counter around another oracle."""

    inner: Oracle
    calls: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def d(self) -> int:
        return self.inner.d

    def evaluate_many(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        with self._lock:
            self.calls += len(x)
        return self.inner.evaluate_many(x)

    def to_dict(self) -> dict[str, Any]:
        return self.inner.to_dict()

    def digest(self) -> str:
        return self.inner.digest()


def nearest_vertex_index(g: GridSpec, x: np.ndarray) -> np.ndarray:
    """Multi-index of the nearest grid vertex, rounding exact halves down."""
    u = np.asarray(x, dtype=float) * (g.n_g - 1)
    return np.clip(np.ceil(u - 0.5), 0, g.n_g - 1).astype(np.int64)


def sanitize(labels: np.ndarray) -> np.ndarray:
    """Map label 0 to +1 so grid vertices never sit on the manifold."""
    labels = np.asarray(labels, dtype=np.int8).copy()
    labels[labels == 0] = 1
    return labels


def sanitized_vertex_label(o: Oracle, g: GridSpec, v: Sequence[int]) -> int:
    return int(sanitize(o.evaluate_many(g.vertex_coords(v)[None, :]))[0])


def random_radial(d: int, n_sites: int, sigma: float, seed: int) -> RadialOracle:
    """Radial oracle with ``n_sites`` uniform positive and negative sites."""
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    rng = np.random.default_rng(seed)
    pos = rng.random((n_sites, d))
    neg = rng.random((n_sites, d))
    return RadialOracle(pos, neg, sigma)


def oracle_from_dict(data: dict[str, Any]) -> Oracle:
    kind = data.get("kind")
    if kind == "hyperplane":
        return HyperplaneOracle(tuple(data["normal"]), float(data["offset"]))
    if kind == "sphere":
        return SphereOracle(tuple(data["center"]), float(data["radius"]))
    if kind == "radial":
        return RadialOracle(
            np.asarray(data["positive_sites"], dtype=float),
            np.asarray(data["negative_sites"], dtype=float),
            float(data["sigma"]),
        )
    if kind == "random_radial":
        return random_radial(int(data["d"]), int(data["n_sites"]), float(data["sigma"]), int(data["seed"]))
    if kind == "grid_labels":
        return GridLabelOracle(np.asarray(data["labels"]))
    raise ValueError(f"unknown oracle kind {kind!r}")


def load_oracle(path: str) -> Oracle:
    with open(path) as fh:
        return oracle_from_dict(json.load(fh))


def dump_oracle(o: Oracle, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(o.to_dict(), fh, indent=1)
        fh.write("\n")
