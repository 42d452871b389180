"""Boundary store files.

Binary layout (``.rsb``, little endian)::

    magic      4 bytes  b"RSB\\x00"
    version    uint32   (1)
    d, n_g, q  uint32 x 3
    variant    uint8    0 = cube, 1 = kuhn
    fallback   int8     label used when the store is empty
    digest     16 bytes oracle digest, ASCII, NUL padded
    n_cubes    uint64
    then per cube, in lexicographic order:
        cube     uint32 x d
        count    uint32
        count x (v_minus uint32 x d, v_plus uint32 x d, t float64)

The text layout carries the same records, one per line, with ``t`` written by
``repr`` so both layouts round-trip bit-exactly::

    resistar-store 1
    d 2
    n_g 3
    q 2
    variant cube
    oracle_digest 0123456789abcdef
    fallback_label 1
    cubes 1
    cube 0 1 count 1
    0 1 1 1 0.375
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .boundary import VARIANTS, BoundaryStore, assemble_store
from .grid import GridSpec

MAGIC = b"RSB\x00"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIBb16sQ")
_TEXT_TAG = "resistar-store"


class StoreFormatError(ValueError):
    """A store file is malformed or internally inconsistent."""


def _records(s: BoundaryStore):
    for row, c in enumerate(s.cube_ids()):
        members = s.cube_members[s.cube_ptr[row] : s.cube_ptr[row + 1]]
        yield c, members


def to_bytes(s: BoundaryStore) -> bytes:
    digest = s.oracle_digest.encode("ascii")[:16]
    parts = [
        _HEADER.pack(MAGIC, VERSION, s.d, s.grid.n_g, s.q, VARIANTS.index(s.variant), s.fallback_label, digest, s.n_cubes)
    ]
    d = s.d
    rec = np.dtype([("vm", "<u4", (d,)), ("vp", "<u4", (d,)), ("t", "<f8")])
    for c, members in _records(s):
        parts.append(struct.pack(f"<{d}II", *c, len(members)))
        arr = np.empty(len(members), dtype=rec)
        arr["vm"] = s.v_minus[members]
        arr["vp"] = s.v_plus[members]
        arr["t"] = s.t[members]
        parts.append(arr.tobytes())
    return b"".join(parts)


def _merge_points(g: GridSpec, vms, vps, ts):
    """Collapse per-cube copies of shared points, insisting they agree."""
    if not vms:
        return np.zeros((0, g.d), np.int64), np.zeros((0, g.d), np.int64), np.zeros(0)
    vm = np.concatenate(vms).astype(np.int64)
    vp = np.concatenate(vps).astype(np.int64)
    t = np.concatenate(ts)
    keys = np.concatenate([vm, vp], axis=1)
    uniq, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    if not np.array_equal(t, t[first][inverse]):
        raise StoreFormatError("a shared edge carries different t values in different cubes")
    if np.any(vm < 0) or np.any(vm > g.n_g - 1) or np.any(vp < 0) or np.any(vp > g.n_g - 1):
        raise StoreFormatError("vertex index outside the grid")
    return vm[first], vp[first], t[first]


def from_bytes(data: bytes) -> BoundaryStore:
    if len(data) < _HEADER.size:
        raise StoreFormatError("file too short for a store header")
    magic, version, d, n_g, q, variant, fallback, digest, n_cubes = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise StoreFormatError("not a binary store file (bad magic)")
    if version != VERSION:
        raise StoreFormatError(f"unsupported store version {version}")
    if variant >= len(VARIANTS) or d < 1 or n_g < 2 or q < 1:
        raise StoreFormatError("invalid store header")
    g = GridSpec(d, n_g)
    rec = np.dtype([("vm", "<u4", (d,)), ("vp", "<u4", (d,)), ("t", "<f8")])
    head = struct.Struct(f"<{d}II")
    pos = _HEADER.size
    vms, vps, ts = [], [], []
    try:
        for _ in range(n_cubes):
            *cube, count = head.unpack_from(data, pos)
            pos += head.size
            arr = np.frombuffer(data, dtype=rec, count=count, offset=pos)
            pos += count * rec.itemsize
            vms.append(arr["vm"])
            vps.append(arr["vp"])
            ts.append(arr["t"])
    except (struct.error, ValueError) as exc:
        raise StoreFormatError(f"truncated store file: {exc}") from None
    if pos != len(data):
        raise StoreFormatError("trailing bytes after the last cube record")
    vm, vp, t = _merge_points(g, vms, vps, ts)
    return assemble_store(g, VARIANTS[variant], q, vm, vp, t, digest.rstrip(b"\x00").decode("ascii"), int(fallback))


def to_text(s: BoundaryStore) -> str:
    lines = [
        f"{_TEXT_TAG} {VERSION}",
        f"d {s.d}",
        f"n_g {s.grid.n_g}",
        f"q {s.q}",
        f"variant {s.variant}",
        f"oracle_digest {s.oracle_digest or '-'}",
        f"fallback_label {s.fallback_label}",
        f"cubes {s.n_cubes}",
    ]
    for c, members in _records(s):
        lines.append("cube " + " ".join(map(str, c)) + f" count {len(members)}")
        for i in members:
            ends = " ".join(map(str, s.v_minus[i].tolist() + s.v_plus[i].tolist()))
            lines.append(f"{ends} {float(s.t[i])!r}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> BoundaryStore:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    try:
        tag, version = lines[0].split()
        if tag != _TEXT_TAG or int(version) != VERSION:
            raise StoreFormatError("not a text store file")
        head = dict(ln.split(maxsplit=1) for ln in lines[1:8])
        d, n_g, q = int(head["d"]), int(head["n_g"]), int(head["q"])
        variant = head["variant"].strip()
        digest = head["oracle_digest"].strip()
        fallback = int(head["fallback_label"])
        n_cubes = int(head["cubes"])
        g = GridSpec(d, n_g)
        if variant not in VARIANTS:
            raise StoreFormatError(f"unknown variant {variant!r}")
        pos = 8
        vms, vps, ts = [], [], []
        for _ in range(n_cubes):
            fields = lines[pos].split()
            if fields[0] != "cube" or fields[-2] != "count":
                raise StoreFormatError(f"expected a cube record, got {lines[pos]!r}")
            count = int(fields[-1])
            pos += 1
            for ln in lines[pos : pos + count]:
                vals = ln.split()
                if len(vals) != 2 * d + 1:
                    raise StoreFormatError(f"bad point record {ln!r}")
                vms.append(np.array([int(v) for v in vals[:d]])[None, :])
                vps.append(np.array([int(v) for v in vals[d : 2 * d]])[None, :])
                ts.append(np.array([float(vals[-1])]))
            pos += count
        if pos != len(lines):
            raise StoreFormatError("trailing lines after the last cube record")
    except (IndexError, KeyError, ValueError) as exc:
        if isinstance(exc, StoreFormatError):
            raise
        raise StoreFormatError(f"malformed text store: {exc}") from None
    vm, vp, t = _merge_points(g, vms, vps, ts)
    return assemble_store(g, variant, q, vm, vp, t, "" if digest == "-" else digest, fallback)


def save_store(s: BoundaryStore, path: str | Path, fmt: str | None = None) -> None:
    """Write a store; ``fmt`` is ``binary`` or ``text`` (default: text for ``.txt`` paths)."""
    path = Path(path)
    fmt = fmt or ("text" if path.suffix == ".txt" else "binary")
    if fmt == "binary":
        path.write_bytes(to_bytes(s))
    elif fmt == "text":
        path.write_text(to_text(s))
    else:
        raise ValueError(f"unknown store format {fmt!r}")


def load_store(path: str | Path) -> BoundaryStore:
    """Read a store in either layout (detected from the content)."""
    data = Path(path).read_bytes()
    if data.startswith(MAGIC):
        return from_bytes(data)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise StoreFormatError("not a store file") from None
    return from_text(text)
