"""Compiled batch fingerprinting.

Computes the same bits as esep.independence.fingerprint_by_walk_search,
but vectorized over conditioning sets and batched over graphs, which is
what makes exhaustive verification over millions of graphs feasible.

Per graph and per target node b, a single backward fixpoint over walk
states (node, arrival kind) yields, for every conditioning subset at once,
whether an open walk into b exists from each state; states carry one bit
per subset.  Arrival kinds: 0 = head, 1 = tail with the previous node
outside the current node's strongly connected component, 2 = tail with the
previous node inside it.  Transition masks encode the blocking rules:
colliders pass where the node is an ancestor of the conditioning set,
conditioned non-colliders pass only where unblockable.

Node counts up to 5 are supported (the subset masks must fit in 64 bits).
"""

from __future__ import annotations

import numpy as np
import numba
from numba import njit, prange

from .graphs import Dmg

# TBB on this class of hosts is often too old; workqueue behaves identically
# for our embarrassingly parallel batches and never warns.
numba.config.THREADING_LAYER = "workqueue"

CRIT_CODE = {"d": 0, "sigma": 1, "e": 2}

MAX_KERNEL_D = 5


def n_fingerprint_words(d: int) -> int:
    return (d * d * (1 << (d - 1)) + 63) // 64


@njit(cache=True)
def _fingerprint_into(d, dir_mask, bi_mask, bi_self_mask, crit, out, row):
    # working graph: the lifted two-layer graph for criterion e, else the base
    if crit == 2:
        n = 2 * d
    else:
        n = d
    dout = np.zeros(n, dtype=np.int64)
    din = np.zeros(n, dtype=np.int64)
    bi = np.zeros(n, dtype=np.int64)

    if crit == 2:
        for i in range(d):
            for j in range(d):
                if (dir_mask >> (i * d + j)) & 1:
                    dout[i] |= np.int64(1) << j
                    din[j] |= np.int64(1) << i
                    dout[i] |= np.int64(1) << (d + j)
                    din[d + j] |= np.int64(1) << i
                    dout[d + i] |= np.int64(1) << (d + j)
                    din[d + j] |= np.int64(1) << (d + i)
        idx = 0
        for i in range(d):
            for j in range(i + 1, d):
                if (bi_mask >> idx) & 1:
                    for li in range(2):
                        for lj in range(2):
                            u = i + li * d
                            v = j + lj * d
                            bi[u] |= np.int64(1) << v
                            bi[v] |= np.int64(1) << u
                idx += 1
        for v in range(d):
            if (bi_self_mask >> v) & 1:
                bi[v] |= np.int64(1) << v
                bi[d + v] |= np.int64(1) << (d + v)
                bi[v] |= np.int64(1) << (d + v)
                bi[d + v] |= np.int64(1) << v
    else:
        for i in range(d):
            for j in range(d):
                if (dir_mask >> (i * d + j)) & 1:
                    dout[i] |= np.int64(1) << j
                    din[j] |= np.int64(1) << i
        idx = 0
        for i in range(d):
            for j in range(i + 1, d):
                if (bi_mask >> idx) & 1:
                    bi[i] |= np.int64(1) << j
                    bi[j] |= np.int64(1) << i
                idx += 1
        for v in range(d):
            if (bi_self_mask >> v) & 1:
                bi[v] |= np.int64(1) << v

    # reach[v]: nodes reachable from v along directed edges, v included
    reach = np.zeros(n, dtype=np.int64)
    for v in range(n):
        reach[v] = (np.int64(1) << v) | dout[v]
    for k in range(n):
        rk = reach[k]
        for v in range(n):
            if (reach[v] >> k) & 1:
                reach[v] |= rk
    scc = np.zeros(n, dtype=np.int64)
    for v in range(n):
        m = np.int64(0)
        for u in range(n):
            if ((reach[v] >> u) & 1) and ((reach[u] >> v) & 1):
                m |= np.int64(1) << u
        scc[v] = m

    n_csets = 1 << d
    full = (np.int64(1) << n_csets) - np.int64(1)
    half = 1 << (d - 1)
    in_cond = np.zeros(n, dtype=np.int64)
    anc_c = np.zeros(n, dtype=np.int64)
    good = np.zeros(3 * n, dtype=np.int64)

    for b in range(d):
        if crit == 2:
            vb = d + b
        else:
            vb = b

        for v in range(n):
            in_cond[v] = 0
            anc_c[v] = 0
        for code in range(n_csets):
            cond_nodes = np.int64(0)
            for k in range(d):
                if (code >> k) & 1:
                    cond_nodes |= np.int64(1) << k
                    if crit == 2 and k != b:
                        cond_nodes |= np.int64(1) << (d + k)
            bit = np.int64(1) << code
            for v in range(n):
                if (cond_nodes >> v) & 1:
                    in_cond[v] |= bit
                if reach[v] & cond_nodes:
                    anc_c[v] |= bit

        for s in range(3 * n):
            good[s] = 0
        for kind in range(3):
            good[3 * vb + kind] = full & ~in_cond[vb]

        changed = True
        while changed:
            changed = False
            for v in range(n):
                if v == vb:
                    continue
                notc = full & ~in_cond[v]
                for kind in range(3):
                    idx = 3 * v + kind
                    acc = good[idx]
                    for u in range(n):
                        if (dout[v] >> u) & 1:
                            # departure through a tail: right-chain or fork at v
                            if kind != 1 and crit != 0 and ((scc[v] >> u) & 1):
                                p = full
                            else:
                                p = notc
                            acc |= p & good[3 * u]
                        if (din[v] >> u) & 1:
                            # departure through a head against a directed edge
                            if kind == 0:
                                p = anc_c[v]  # collider
                            elif kind == 2 and crit != 0:
                                p = full  # left-chain, previous node in scc
                            else:
                                p = notc
                            if (scc[u] >> v) & 1:
                                acc |= p & good[3 * u + 2]
                            else:
                                acc |= p & good[3 * u + 1]
                        if (bi[v] >> u) & 1:
                            if kind == 0:
                                p = anc_c[v]
                            elif kind == 2 and crit != 0:
                                p = full
                            else:
                                p = notc
                            acc |= p & good[3 * u]
                    if acc != good[idx]:
                        good[idx] = acc
                        changed = True

        for a in range(d):
            va = a
            start = full & ~in_cond[va]
            conn = np.int64(0)
            for u in range(n):
                if (dout[va] >> u) & 1:
                    conn |= good[3 * u]
                if (din[va] >> u) & 1:
                    if (scc[u] >> va) & 1:
                        conn |= good[3 * u + 2]
                    else:
                        conn |= good[3 * u + 1]
                if (bi[va] >> u) & 1:
                    conn |= good[3 * u]
            conn &= start
            if crit != 2 and va == vb:
                conn |= start  # trivial walk from a node to itself
            base_idx = (a * d + b) * half
            for ccode in range(half):
                fullcode = ((ccode >> a) << (a + 1)) | (ccode & ((1 << a) - 1))
                if not (conn >> fullcode) & 1:
                    pos = base_idx + ccode
                    out[row, pos >> 6] |= np.uint64(1) << np.uint64(pos & 63)


@njit(cache=True, parallel=True)
def _batch(d, dir_arr, bi_arr, biself_arr, crit, out):
    for g in prange(dir_arr.shape[0]):
        _fingerprint_into(d, dir_arr[g], bi_arr[g], biself_arr[g], crit, out, g)


def fingerprint_words_batch(
    d: int,
    dir_masks: np.ndarray,
    bi_masks: np.ndarray | None = None,
    bi_self_masks: np.ndarray | None = None,
    criterion: str = "e",
) -> np.ndarray:
    """Fingerprints for a batch of graphs given as edge masks.

    Returns an array of shape (n_graphs, n_words) of uint64, little-endian
    in 64-bit words.
    """
    if not 1 <= d <= MAX_KERNEL_D:
        raise ValueError(f"kernel supports 1 <= d <= {MAX_KERNEL_D}, got {d}")
    crit = CRIT_CODE[criterion]
    dir_arr = np.ascontiguousarray(dir_masks, dtype=np.int64)
    n = dir_arr.shape[0]
    bi_arr = (
        np.zeros(n, dtype=np.int64)
        if bi_masks is None
        else np.ascontiguousarray(bi_masks, dtype=np.int64)
    )
    biself_arr = (
        np.zeros(n, dtype=np.int64)
        if bi_self_masks is None
        else np.ascontiguousarray(bi_self_masks, dtype=np.int64)
    )
    out = np.zeros((n, n_fingerprint_words(d)), dtype=np.uint64)
    _batch(d, dir_arr, bi_arr, biself_arr, crit, out)
    return out


def words_to_int(words: np.ndarray) -> int:
    bits = 0
    for k in range(words.shape[0]):
        bits |= int(words[k]) << (64 * k)
    return bits


def fingerprint_bits(g: Dmg, criterion: str = "e") -> int:
    """Fingerprint bit vector of one graph as a Python integer."""
    words = fingerprint_words_batch(
        g.d,
        np.array([g.dir_mask], dtype=np.int64),
        np.array([g.bi_mask], dtype=np.int64),
        np.array([g.bi_self_mask], dtype=np.int64),
        criterion,
    )
    return words_to_int(words[0])
