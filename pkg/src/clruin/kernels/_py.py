"""Pure numpy implementations of the hot loops.

Signatures match the compiled module ``_c`` exactly so the two can be
swapped at import time.
"""

import numpy as np

from ._streams import BLOCK, path_bitgen

KIND_EXPONENTIAL = 0
KIND_GAMMA2 = 1
KIND_DISCRETE = 2

RUINED = 0
SURVIVED = 1
CAPPED = 2


def volterra_march(surv, surv_end, tail, a, h, v0):
    """March the trapezoidal product-integration scheme.

    Solves ``a v(x_j) = h [sum_{i=1}^{j-1} v_{j-i} S_i + v_0 E_j / 2 + v_j S_0 / 2] + T_j``
    node by node, where ``E_j`` is the survival value seen from inside the
    interval at its right end (differs from ``S_j`` only at atoms).
    """
    surv = np.ascontiguousarray(surv, dtype=float)
    surv_end = np.ascontiguousarray(surv_end, dtype=float)
    tail = np.ascontiguousarray(tail, dtype=float)
    n = surv.shape[0]
    v = np.empty(n)
    v[0] = v0
    denom = a - 0.5 * h * surv[0]
    for j in range(1, n):
        acc = np.dot(v[j - 1:0:-1], surv[1:j]) + 0.5 * v0 * surv_end[j]
        v[j] = (h * acc + tail[j]) / denom
    return v


def panjer_geometric(f, q):
    """Lattice masses of a geometric compound ``sum_{i<=K} I_i``, ``P(K=k) = (1-q) q^k``."""
    f = np.ascontiguousarray(f, dtype=float)
    n = f.shape[0]
    g = np.empty(n)
    scale = 1.0 / (1.0 - q * f[0])
    g[0] = (1.0 - q) * scale
    qs = q * scale
    for j in range(1, n):
        g[j] = qs * np.dot(f[1:j + 1], g[j - 1::-1])
    return g


def _claims(kind, params, cum, u):
    if kind == KIND_EXPONENTIAL:
        return -np.log1p(-u[:, 0]) / params[0]
    if kind == KIND_GAMMA2:
        return -(np.log1p(-u[:, 0]) + np.log1p(-u[:, 1])) / params[0]
    idx = np.searchsorted(cum, u[:, 0], side="right")
    return params[np.minimum(idx, params.shape[0] - 1)]


def _one_path(kind, params, cum, upc, lam, c, x, barrier, seed, path, max_claims):
    if x >= barrier:
        return SURVIVED
    gen = np.random.Generator(path_bitgen(seed, path))
    s = x
    done = 0
    blocks = 1
    while done < max_claims:
        u = gen.random((blocks, BLOCK * (1 + upc)))
        t = -np.log1p(-u[:, :BLOCK].ravel()) / lam
        y = _claims(kind, params, cum, u[:, BLOCK:].reshape(blocks * BLOCK, upc))
        steps = np.empty(2 * t.size + 1)
        steps[0] = s
        steps[1::2] = c * t
        steps[2::2] = -y
        post = np.add.accumulate(steps)[2::2]
        limit = min(post.size, max_claims - done)
        post = post[:limit]
        hit = np.flatnonzero((post < 0.0) | (post >= barrier))
        if hit.size:
            return RUINED if post[hit[0]] < 0.0 else SURVIVED
        s = post[-1]
        done += limit
        blocks = min(2 * blocks, 64)
    return CAPPED


def simulate_paths(kind, params, cum, upc, lam, c, x, barrier, seed,
                   path_start, path_stop, max_claims):
    """Run paths ``[path_start, path_stop)``; returns (ruined, survived, capped)."""
    params = np.ascontiguousarray(params, dtype=float)
    cum = np.ascontiguousarray(cum, dtype=float)
    counts = [0, 0, 0]
    for path in range(path_start, path_stop):
        counts[_one_path(kind, params, cum, upc, lam, c, x, barrier, seed, path, max_claims)] += 1
    return tuple(counts)
