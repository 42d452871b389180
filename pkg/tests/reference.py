"""Independent reference computations used as test oracles.

Nothing here calls the code under test's internals: bisection is redone with
plain floats, edges are found by brute force, and crossing parity solves
segment/simplex intersections as linear systems.
"""

import itertools

import numpy as np


def bisect_reference(label, a, b, q):
    """Plain float bisection: returns the final interval midpoint parameter."""
    lo, hi = 0.0, 1.0
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    for _ in range(q):
        mid = (lo + hi) / 2
        if label(a + mid * (b - a)) >= 0:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2


def comparable_pairs(d):
    """Pairs (u, w) of distinct 0/1 vectors with u <= w componentwise."""
    verts = list(itertools.product((0, 1), repeat=d))
    return sorted((u, w) for u in verts for w in verts if u != w and all(x <= y for x, y in zip(u, w)))


def segment_hits_simplex(p0, p1, simplex, margin=1e-9):
    """Whether segment [p0, p1] crosses the (d-1)-simplex; None if too close to call.

    Solves p0 + s (p1 - p0) = sum mu_i w_i with sum mu_i = 1.
    """
    w = np.asarray(simplex, dtype=float)
    d = w.shape[1]
    m = np.zeros((d + 1, d + 1))
    m[:d, 0] = -(p1 - p0)
    m[:d, 1:] = w.T
    m[d, 1:] = 1.0
    rhs = np.append(p0, 1.0)
    if abs(np.linalg.det(m)) < 1e-14:
        return None  # segment parallel to the simplex plane
    sol = np.linalg.solve(m, rhs)
    s, mu = sol[0], sol[1:]
    inside = (s > margin) and (s < 1 - margin) and np.all(mu > margin)
    outside = (s < -margin) or (s > 1 + margin) or np.any(mu < -margin)
    if inside:
        return True
    if outside:
        return False
    return None


def parity_label(simplices, x, ref_point, ref_label):
    """Label of x by counting crossings of [x, ref_point]; None when degenerate."""
    x = np.asarray(x, dtype=float)
    ref_point = np.asarray(ref_point, dtype=float)
    crossings = 0
    for simplex in simplices:
        hit = segment_hits_simplex(x, ref_point, simplex)
        if hit is None:
            return None
        crossings += int(hit)
    return ref_label * (-1) ** crossings


def sign_change_edges(labels, pairs):
    return [(u, w) for u, w in pairs if labels[u] != labels[w]]


def parity_labels_batch(simplices, xs, ref_point, ref_label, margin=1e-9):
    """Vectorized ``parity_label`` over many points; 0 marks a degenerate point."""
    xs = np.asarray(xs, dtype=float)
    p, d = xs.shape
    w = np.asarray(simplices, dtype=float).reshape(-1, d, d)
    m = len(w)
    if m == 0:
        return np.full(p, ref_label, dtype=np.int64)
    mat = np.zeros((p, m, d + 1, d + 1))
    mat[:, :, :d, 0] = -(np.asarray(ref_point, dtype=float) - xs)[:, None, :]
    mat[:, :, :d, 1:] = np.transpose(w, (0, 2, 1))[None]
    mat[:, :, d, 1:] = 1.0
    singular = np.abs(np.linalg.det(mat)) < 1e-14
    mat[singular] = np.eye(d + 1)
    rhs = np.concatenate([np.broadcast_to(xs[:, None, :], (p, m, d)), np.ones((p, m, 1))], axis=2)
    sol = np.linalg.solve(mat, rhs[..., None])[..., 0]
    s, mu = sol[..., 0], sol[..., 1:]
    inside = (s > margin) & (s < 1 - margin) & np.all(mu > margin, axis=-1)
    outside = (s < -margin) | (s > 1 + margin) | np.any(mu < -margin, axis=-1)
    undecided = singular | ~(inside | outside)
    labels = ref_label * (-1) ** inside.sum(axis=1)
    labels[undecided.any(axis=1)] = 0
    return labels
