"""Pure-Python evaluation kernel.

Mirrors the compiled kernel in _kernels.pyx operation for operation so the
two backends produce bit-identical strengths.  Keep the arithmetic in the
two files in sync.

Kind codes: 0 = df-quad, 1 = quad, 2 = reb, 3 = qem.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"

KIND_DFQUAD = 0
KIND_QUAD = 1
KIND_REB = 2
KIND_QEM = 3


def _node_strength(kind: int, tau: float, att: list[float], sup: list[float]) -> float:
    if kind == KIND_DFQUAD:
        va = 0.0
        for v in att:
            va = va + v - va * v
        vs = 0.0
        for v in sup:
            vs = vs + v - vs * v
        if va >= vs:
            return tau - tau * (va - vs)
        return tau + (1.0 - tau) * (vs - va)
    if kind == KIND_QUAD:
        if not att and not sup:
            return tau
        if not sup:
            pa = tau
            for v in att:
                pa = pa - pa * v
            return pa
        if not att:
            ps = tau
            for v in sup:
                ps = ps + (1.0 - ps) * v
            return ps
        pa = tau
        for v in att:
            pa = pa - pa * v
        ps = tau
        for v in sup:
            ps = ps + (1.0 - ps) * v
        return (pa + ps) / 2.0
    if kind == KIND_REB:
        energy = 0.0
        for v in sup:
            energy += v
        for v in att:
            energy -= v
        return 1.0 - (1.0 - tau * tau) / (1.0 + tau * math.exp(energy))
    if kind == KIND_QEM:
        energy = 0.0
        for v in sup:
            energy += v
        for v in att:
            energy -= v
        if energy >= 0.0:
            h = (energy * energy) / (1.0 + energy * energy)
            return tau + (1.0 - tau) * h
        h = (energy * energy) / (1.0 + energy * energy)
        return tau - tau * h
    raise ValueError(f"unknown semantics kind code {kind}")


def eval_all(tau, att_indptr, att_indices, sup_indptr, sup_indices, order, kind):
    """Strengths for every node, in node-index order."""
    t = tau.tolist()
    ap = att_indptr.tolist()
    ai = att_indices.tolist()
    sp = sup_indptr.tolist()
    si = sup_indices.tolist()
    s = [0.0] * len(t)
    for i in order.tolist():
        att = [s[j] for j in ai[ap[i] : ap[i + 1]]]
        sup = [s[j] for j in si[sp[i] : sp[i + 1]]]
        s[i] = _node_strength(kind, t[i], att, sup)
    return np.asarray(s, dtype=np.float64)


def eval_masked(tau, att_indptr, att_indices, sup_indptr, sup_indices, order, mask, kind):
    """Strengths over the subgraph induced by mask; excluded nodes get NaN."""
    t = tau.tolist()
    ap = att_indptr.tolist()
    ai = att_indices.tolist()
    sp = sup_indptr.tolist()
    si = sup_indices.tolist()
    m = mask.tolist()
    s = [0.0] * len(t)
    out = [math.nan] * len(t)
    for i in order.tolist():
        if not m[i]:
            continue
        att = [s[j] for j in ai[ap[i] : ap[i + 1]] if m[j]]
        sup = [s[j] for j in si[sp[i] : sp[i + 1]] if m[j]]
        s[i] = _node_strength(kind, t[i], att, sup)
        out[i] = s[i]
    return np.asarray(out, dtype=np.float64)
