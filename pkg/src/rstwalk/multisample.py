"""Uniform k-subset sampling over a domain of weighted copies.

A domain is a vector of copy counts ``q``; its elements are the labels
``(e, j)`` with ``1 <= j <= q[e]``. Subsets are drawn by sampling with
replacement and keeping the first ``k`` distinct draws: conditioned on
distinctness, the result is a uniformly random ``k``-subset.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels
from . import ledger as ql
from ._validation import check_rng
from .exceptions import GraphError, SamplingError
from .graph import LabeledEdge
from .isotropic import IsotropicView

MULTI_PREPARE = "multi_prepare"
MULTI_SAMPLE = "multi_sample"


def _domain(q):
    q = np.asarray(q, dtype=np.int64)
    if q.ndim != 1 or np.any(q < 0):
        raise ValueError("copy counts must be a 1-d vector of nonnegative integers")
    offsets = np.concatenate([[0], np.cumsum(q)[:-1]]).astype(np.int64)
    return q, offsets


def _labels(ids, q, offsets):
    # zero-count edges share their successor's offset; side="right" skips them
    e = np.searchsorted(offsets, ids, side="right") - 1
    return [LabeledEdge(int(a), int(c - offsets[a] + 1)) for a, c in zip(e, ids)]


def sample_with_replacement(q, count, random_state=None, ledger=None):
    """``count`` independent uniform draws over all copies of ``q``.

    Each draw picks an edge with probability proportional to ``q[e]`` and then
    a copy index uniformly from ``1..q[e]``.
    """
    rng = check_rng(random_state)
    q, _ = _domain(q)
    N = int(q.sum())
    if N < 1:
        raise ValueError("empty domain")
    count = int(count)
    edges = np.empty(count, np.int64)
    slots = np.empty(count, np.int64)
    _kernels.draw_copies(q, np.cumsum(q), count, rng, edges, slots)
    if ledger is not None:
        ledger.record(MULTI_PREPARE, calls=count, charged=math.sqrt(N * count))
    return [LabeledEdge(int(e), int(s) + 1) for e, s in zip(edges, slots)]


def _subset(q, offsets, occ, k, rng):
    occ_count = np.bincount(np.repeat(np.arange(len(q)), q)[occ], minlength=len(q)).astype(np.int64)
    seen = np.zeros(len(occ), np.int64)
    out = np.empty(max(k, 1), np.int64)
    batches, draws, _ = _kernels.subset_sample(q, offsets, occ, occ_count, k, rng, seen, 0, out)
    return batches, draws, np.sort(out[:k])


def k_subset_sample(q, k, random_state=None, ledger=None, return_batches=False):
    """Uniformly random ``k``-subset of the copies of ``q``.

    Returns a sorted tuple of :class:`LabeledEdge`. Raises
    :class:`SamplingError` if every one of the 20 oversampled batches fails
    to yield ``k`` distinct copies.
    """
    rng = check_rng(random_state)
    q, offsets = _domain(q)
    N = int(q.sum())
    k = int(k)
    if k < 0 or k > N:
        raise ValueError(f"k={k} must lie in [0, {N}]")
    if k == 0:
        return ((), 0) if return_batches else ()
    batches, draws, ids = _subset(q, offsets, np.zeros(N, bool), k, rng)
    if batches == 0:
        raise SamplingError(f"no {k} distinct copies after {_kernels.MAX_BATCHES} batches")
    if ledger is not None:
        ledger.record(MULTI_SAMPLE, calls=draws, charged=math.sqrt(N * k))
    out = tuple(_labels(ids, q, offsets))
    return (out, batches) if return_batches else out


def iso_sample(view: IsotropicView, tree, k, random_state=None, ledger=None):
    """Uniform ``k``-subset of the isotropic copies not occupied by ``tree``.

    Copies of a tree edge other than the occupied label stay eligible.
    """
    rng = check_rng(random_state)
    occ = np.zeros(view.m_prime, bool)
    for lab in tree:
        cid = view.copy_id(lab)
        if occ[cid]:
            raise GraphError(f"label {tuple(lab)} repeated in tree")
        occ[cid] = True
    free = view.m_prime - int(occ.sum())
    k = int(k)
    if k < 0 or k > free:
        raise ValueError(f"k={k} exceeds the {free} copies outside the tree")
    if ledger is not None:
        ledger.record(ql.ISO_SAMPLE, calls=0, charged=ql.iso_sample_cost(view.m_prime, k), invocations=1)
    if k == 0:
        return ()
    batches, draws, ids = _subset(view.q, view.offsets, occ, k, rng)
    if batches == 0:
        raise SamplingError(f"no {k} distinct copies after {_kernels.MAX_BATCHES} batches")
    if ledger is not None:
        ledger.record(ql.ISO_SAMPLE, calls=draws, invocations=0)
    return tuple(view.label(int(c)) for c in ids)
