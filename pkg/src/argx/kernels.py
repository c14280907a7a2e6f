"""Kernel backend selection and graph evaluation plans.

The compiled extension is preferred when importable; set ARGX_PURE_PYTHON=1
to force the pure-Python fallback.  Both backends are arithmetic-identical,
so transcripts do not depend on which one is active.

A plan is the flattened, index-based form of a QBAF: base scores, CSR
adjacency of attackers/supporters (neighbour lists sorted by index so
aggregation order never depends on input ordering) and a topological order.
"""

from __future__ import annotations

import heapq
import os
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import GraphError
from .graphs import ArgumentId, Baf

if os.environ.get("ARGX_PURE_PYTHON"):
    from . import _kernels_py as _backend
else:
    try:
        from . import _kernels as _backend  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _backend

BACKEND_NAME: str = _backend.BACKEND_NAME

KIND_CODES = {"df-quad": 0, "quad": 1, "reb": 2, "qem": 3}


@dataclass(frozen=True)
class EvalPlan:
    ids: tuple[ArgumentId, ...]
    index: Mapping[ArgumentId, int]
    tau: np.ndarray
    att_indptr: np.ndarray
    att_indices: np.ndarray
    sup_indptr: np.ndarray
    sup_indices: np.ndarray
    order: np.ndarray
    out_edges: tuple[tuple[tuple[int, int], ...], ...]  # per node: ((target, is_attack), ...)

    @property
    def n(self) -> int:
        return len(self.ids)


def build_plan(baf: Baf, scores: Mapping[ArgumentId, float]) -> EvalPlan:
    ids = tuple(sorted(baf.arguments))
    index = {a: i for i, a in enumerate(ids)}
    n = len(ids)
    att_lists: list[list[int]] = [[] for _ in range(n)]
    sup_lists: list[list[int]] = [[] for _ in range(n)]
    out_lists: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for u, v in baf.attacks:
        att_lists[index[v]].append(index[u])
        out_lists[index[u]].append((index[v], 1))
    for u, v in baf.supports:
        sup_lists[index[v]].append(index[u])
        out_lists[index[u]].append((index[v], 0))
    for lst in att_lists:
        lst.sort()
    for lst in sup_lists:
        lst.sort()

    att_indptr = np.zeros(n + 1, dtype=np.int32)
    sup_indptr = np.zeros(n + 1, dtype=np.int32)
    for i in range(n):
        att_indptr[i + 1] = att_indptr[i] + len(att_lists[i])
        sup_indptr[i + 1] = sup_indptr[i] + len(sup_lists[i])
    att_indices = np.asarray([j for lst in att_lists for j in lst], dtype=np.int32)
    sup_indices = np.asarray([j for lst in sup_lists for j in lst], dtype=np.int32)

    # Kahn's algorithm; in-neighbours (attackers/supporters) come first.
    indeg = [len(att_lists[i]) + len(sup_lists[i]) for i in range(n)]
    ready = [i for i in range(n) if indeg[i] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for j, _ in out_lists[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(ready, j)
    if len(order) != n:
        raise GraphError("cannot evaluate a cyclic graph")

    tau = np.asarray([float(scores[a]) for a in ids], dtype=np.float64)
    return EvalPlan(
        ids=ids,
        index=index,
        tau=tau,
        att_indptr=att_indptr,
        att_indices=att_indices,
        sup_indptr=sup_indptr,
        sup_indices=sup_indices,
        order=np.asarray(order, dtype=np.int32),
        out_edges=tuple(tuple(sorted(lst)) for lst in out_lists),
    )


def eval_plan(plan: EvalPlan, kind_code: int) -> np.ndarray:
    return _backend.eval_all(
        plan.tau,
        plan.att_indptr,
        plan.att_indices,
        plan.sup_indptr,
        plan.sup_indices,
        plan.order,
        kind_code,
    )


def eval_plan_masked(plan: EvalPlan, mask: np.ndarray, kind_code: int) -> np.ndarray:
    return _backend.eval_masked(
        plan.tau,
        plan.att_indptr,
        plan.att_indices,
        plan.sup_indptr,
        plan.sup_indices,
        plan.order,
        mask,
        kind_code,
    )


def backend_name() -> str:
    return BACKEND_NAME
