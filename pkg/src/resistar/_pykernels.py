"""Pure-Python classification kernels (fallback for the compiled ``_ckernels``).

Both kernels work in local cube coordinates (the cube is ``[0, 1]^d``) and
take a cube's boundary points as parallel arrays: ``local`` (k, d) positions,
``mask_minus`` / ``mask_plus`` endpoint vertex masks and ``t`` edge parameters.
``delta`` is expressed in local units.  Labels are -1, 0 or +1.
"""

from __future__ import annotations

import math

import numpy as np

# free-axis direction components below this are treated as zero
_TINY = 1e-15


def _in_face(mask: int, fixed: int, offset: int) -> bool:
    return (mask & fixed) == offset


def classify_cube_point(local, mask_minus, mask_plus, x, delta, trace=None) -> int:
    """Label of local point ``x`` by the c-resistar of one cube.

    The face is tracked as (fixed-axis mask, offset mask).  If ``trace`` is a
    list, ``(free_mask, offset, point, members, barycentre)`` is appended for
    every face visited.
    """
    d = len(x)
    full = (1 << d) - 1
    fixed, offset = 0, 0
    xi = [float(v) for v in x]
    members = list(range(len(mask_minus)))
    while True:
        k = len(members)
        bary = [0.0] * d
        for i in members:
            row = local[i]
            for a in range(d):
                bary[a] += row[a]
        for a in range(d):
            bary[a] /= k
        if trace is not None:
            trace.append((full & ~fixed, offset, list(xi), list(members), list(bary)))
        dist2 = 0.0
        for a in range(d):
            dist2 += (xi[a] - bary[a]) * (xi[a] - bary[a])
        if math.sqrt(dist2) < delta:
            return 0
        # exit the face along the ray from the barycentre through x
        best_t = math.inf
        best_axis = -1
        best_side = 0
        for a in range(d):
            if (fixed >> a) & 1:
                continue
            step = xi[a] - bary[a]
            if step > _TINY:
                ta = (1.0 - bary[a]) / step
                side = 1
            elif step < -_TINY:
                ta = -bary[a] / step
                side = 0
            else:
                continue
            if ta < best_t:
                best_t, best_axis, best_side = ta, a, side
        if best_axis < 0:
            return 0
        for a in range(d):
            if not (fixed >> a) & 1:
                v = bary[a] + best_t * (xi[a] - bary[a])
                xi[a] = min(1.0, max(0.0, v))
        xi[best_axis] = float(best_side)
        fixed |= 1 << best_axis
        offset |= best_side << best_axis
        inner = [i for i in members if _in_face(mask_minus[i], fixed, offset) and _in_face(mask_plus[i], fixed, offset)]
        if not inner:
            for i in members:
                if _in_face(mask_plus[i], fixed, offset):
                    return 1
                if _in_face(mask_minus[i], fixed, offset):
                    return -1
            raise RuntimeError("no boundary point has an endpoint in the face reached")
        members = inner


def _chain(x, perm=None):
    d = len(x)
    if perm is None:
        perm = sorted(range(d), key=lambda a: (x[a], a))
    masks = [0]
    for j in range(1, d + 1):
        masks.append(masks[-1] | (1 << perm[d - j]))
    return perm, masks


def _chain_position(mask, masks) -> int:
    j = bin(mask).count("1")
    return j if masks[j] == mask else -1


def _sorted_cartesian(weights):
    # the i-th smallest coordinate is the total weight of chain vertices j >= d - i
    d = len(weights) - 1
    out = [0.0] * d
    acc = 0.0
    for i in range(d):
        acc += weights[d - i]
        out[i] = acc
    return out


def vertex_zero_label(mask_minus, mask_plus) -> int:
    """Label of the cube's origin vertex, read off any point whose edge touches it."""
    for a, b in zip(mask_minus, mask_plus):
        if a == 0:
            return -1
        if b == 0:
            return 1
    raise RuntimeError("no boundary point touches the cube origin")


def classify_simplex_point(mask_minus, mask_plus, t, x, delta, empty_label=None, trace=None, perm=None) -> int:
    """Label of local point ``x`` by the K-resistar of its Kuhn simplex.

    The simplex is the one whose permutation sorts ``x`` (stable), unless
    ``perm`` names one explicitly.  If the simplex holds no boundary points,
    ``empty_label`` is returned when given (all simplex vertices then share the
    cube origin's label), otherwise ``ValueError`` is raised.
    """
    d = len(x)
    perm, masks = _chain(x, perm)
    pos_m, pos_p, weight = [], [], []
    for a, b, ti in zip(mask_minus, mask_plus, t):
        ja = _chain_position(int(a), masks)
        jb = _chain_position(int(b), masks)
        if ja >= 0 and jb >= 0:
            pos_m.append(ja)
            pos_p.append(jb)
            weight.append(float(ti))
    if not pos_m:
        if empty_label is None:
            raise ValueError("the Kuhn simplex holds no boundary points")
        return int(empty_label)

    lam = [0.0] * (d + 1)
    lam[0] = 1.0 - x[perm[d - 1]]
    for j in range(1, d):
        lam[j] = x[perm[d - j]] - x[perm[d - j - 1]]
    lam[d] = x[perm[0]]
    if min(lam) < 0.0:
        # only possible with an explicit perm that x satisfies up to rounding
        lam = [v if v > 0.0 else 0.0 for v in lam]
        total = sum(lam)
        lam = [v / total for v in lam]
    active = (1 << (d + 1)) - 1
    members = list(range(len(pos_m)))
    while True:
        beta = [0.0] * (d + 1)
        for i in members:
            beta[pos_m[i]] += 1.0 - weight[i]
            beta[pos_p[i]] += weight[i]
        k = len(members)
        for j in range(d + 1):
            beta[j] /= k
        if trace is not None:
            trace.append((active, list(lam), list(members), list(beta)))
        dist2 = 0.0
        for u, v in zip(_sorted_cartesian(lam), _sorted_cartesian(beta)):
            dist2 += (u - v) * (u - v)
        if math.sqrt(dist2) < delta:
            return 0
        best_s = math.inf
        best_j = -1
        for j in range(d + 1):
            if not (active >> j) & 1:
                continue
            step = lam[j] - beta[j]
            if step < -_TINY:
                s = beta[j] / -step
                if s < best_s:
                    best_s, best_j = s, j
        if best_j < 0:
            return 0
        total = 0.0
        for j in range(d + 1):
            if (active >> j) & 1 and j != best_j:
                v = beta[j] + best_s * (lam[j] - beta[j])
                lam[j] = v if v > 0.0 else 0.0
                total += lam[j]
            else:
                lam[j] = 0.0
        for j in range(d + 1):
            lam[j] /= total
        active &= ~(1 << best_j)
        inner = [i for i in members if (active >> pos_m[i]) & 1 and (active >> pos_p[i]) & 1]
        if not inner:
            for i in members:
                if (active >> pos_p[i]) & 1:
                    return 1
                if (active >> pos_m[i]) & 1:
                    return -1
            raise RuntimeError("no boundary point has an endpoint in the face reached")
        members = inner


def classify_cube_batch(local, mask_minus, mask_plus, xs, delta) -> np.ndarray:
    local_l = np.asarray(local, dtype=float).tolist()
    mm = [int(v) for v in mask_minus]
    mp = [int(v) for v in mask_plus]
    xs = np.asarray(xs, dtype=float)
    return np.array([classify_cube_point(local_l, mm, mp, x, delta) for x in xs.tolist()], dtype=np.int8)


def classify_simplex_batch(mask_minus, mask_plus, t, xs, delta) -> np.ndarray:
    mm = [int(v) for v in mask_minus]
    mp = [int(v) for v in mask_plus]
    tt = [float(v) for v in t]
    fallback = vertex_zero_label(mm, mp)
    xs = np.asarray(xs, dtype=float)
    return np.array(
        [classify_simplex_point(mm, mp, tt, x, delta, empty_label=fallback) for x in xs.tolist()], dtype=np.int8
    )
