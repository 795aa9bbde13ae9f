"""Compiled hot loops (numba).

Everything here is deliberately dumb and allocation-free inside the loops:
single-site heat-bath updates with a per-vertex blocked-neighbour counter
(so a non-flipping step is O(1) and a flip costs deg(v)), annealed
trajectory weights, a batch sampler specialised to sorted 1D hard-core
intervals, and an iterative DFS that counts self-avoiding walks with an
optional rank-based pruning rule.

Kernels use numpy's legacy global RNG (`np.random.seed`), which numba
implements as a private per-thread Mersenne Twister: seeding at kernel
entry makes every kernel call a pure function of its arguments. Seeds are
derived from the caller's Generator (see seeding.kernel_seed).

All kernels are sequential; parallelism across replicates is left to the
caller (and is a no-op on single-core hosts anyway).
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "glauber_final",
    "glauber_batch_masks",
    "glauber_event_masks",
    "anneal_logweights",
    "hs1d_alg1_batch",
    "layer_counts_dfs",
]


@njit(cache=True)
def _glauber_steps(indptr, indices, state, blocked, p_occ, steps):
    """Run single-site heat-bath updates in place; return net occupancy change.

    state[v] in {0,1}; blocked[v] = number of occupied neighbours of v.
    A vertex with an occupied neighbour is forced to 0 (which it already is,
    by the invariant), so those steps fall through in O(1).
    """
    n = state.shape[0]
    d_occ = 0
    for _ in range(steps):
        v = np.random.randint(0, n)
        if blocked[v] > 0:
            continue
        if np.random.random() < p_occ:
            if state[v] == 0:
                state[v] = 1
                d_occ += 1
                for k in range(indptr[v], indptr[v + 1]):
                    blocked[indices[k]] += 1
        else:
            if state[v] == 1:
                state[v] = 0
                d_occ -= 1
                for k in range(indptr[v], indptr[v + 1]):
                    blocked[indices[k]] -= 1
    return d_occ


@njit(cache=True)
def _event_chain(
    indptr,
    indices,
    state,
    blocked,
    free_list,
    free_pos,
    occ_list,
    occ_pos,
    n_free,
    n_occ,
    p_occ,
    steps,
):
    """Advance the heat-bath chain by `steps` updates, skipping no-ops.

    Same law as running _glauber_steps for `steps` updates.  An update only
    changes the state when it lands on a free unblocked vertex with an
    insert draw (probability p_occ) or on an occupied vertex with a delete
    draw; everything else is a no-op, and the change probability q stays
    constant along a no-op run because the state does.  So the run length
    before the next change is geometric in q, the changed vertex is uniform
    over its class, and we can jump straight from change to change.  At the
    small activities the annealing schedule spends most of its time on, q
    is a couple of percent and this trades ~1/q cheap-but-wasted updates
    for one event.

    free_list/occ_list hold the free unblocked and the occupied vertices
    with swap-remove bookkeeping via the matching *_pos arrays (-1 when
    absent).  Returns the updated (n_free, n_occ); state, blocked and the
    four list arrays are maintained in place.
    """
    n = state.shape[0]
    remaining = steps
    while remaining > 0:
        w_ins = p_occ * n_free
        w_del = (1.0 - p_occ) * n_occ
        rate = w_ins + w_del
        if rate <= 0.0:
            break
        q = rate / n
        # no-op run length: P(K >= k) = (1-q)^k, via inverse transform on (0,1]
        t = np.log(1.0 - np.random.random()) / np.log1p(-q)
        if t >= remaining:
            break
        remaining -= np.int64(t) + 1
        if np.random.random() * rate < w_ins:
            idx = np.random.randint(0, n_free)
            v = free_list[idx]
            n_free -= 1
            moved = free_list[n_free]
            free_list[idx] = moved
            free_pos[moved] = idx
            free_pos[v] = -1
            state[v] = 1
            occ_list[n_occ] = v
            occ_pos[v] = n_occ
            n_occ += 1
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                blocked[u] += 1
                if blocked[u] == 1 and state[u] == 0:
                    j = free_pos[u]
                    n_free -= 1
                    moved = free_list[n_free]
                    free_list[j] = moved
                    free_pos[moved] = j
                    free_pos[u] = -1
        else:
            idx = np.random.randint(0, n_occ)
            v = occ_list[idx]
            n_occ -= 1
            moved = occ_list[n_occ]
            occ_list[idx] = moved
            occ_pos[moved] = idx
            occ_pos[v] = -1
            state[v] = 0
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                blocked[u] -= 1
                if blocked[u] == 0 and state[u] == 0:
                    free_pos[u] = n_free
                    free_list[n_free] = u
                    n_free += 1
            # an occupied vertex never has occupied neighbours, so v is
            # unblocked and becomes free the moment it empties
            free_pos[v] = n_free
            free_list[n_free] = v
            n_free += 1
    return n_free, n_occ


@njit(cache=True)
def glauber_final(indptr, indices, init, lam, steps, seed):
    """One chain from the given 0/1 state; returns the final state."""
    np.random.seed(seed)
    n = init.shape[0]
    state = init.copy()
    blocked = np.zeros(n, dtype=np.int32)
    for v in range(n):
        if state[v] == 1:
            for k in range(indptr[v], indptr[v + 1]):
                blocked[indices[k]] += 1
    _glauber_steps(indptr, indices, state, blocked, lam / (1.0 + lam), steps)
    return state


@njit(cache=True)
def glauber_batch_masks(indptr, indices, n, lam, steps, draws, seed):
    """Independent chains (fresh empty start each) packed as uint64 bitmasks.

    Requires n <= 64; used for distribution tests on small graphs.
    """
    np.random.seed(seed)
    out = np.empty(draws, dtype=np.uint64)
    state = np.zeros(n, dtype=np.uint8)
    blocked = np.zeros(n, dtype=np.int32)
    p_occ = lam / (1.0 + lam)
    for t in range(draws):
        state[:] = 0
        blocked[:] = 0
        _glauber_steps(indptr, indices, state, blocked, p_occ, steps)
        mask = np.uint64(0)
        for v in range(n):
            if state[v] == 1:
                mask |= np.uint64(1) << np.uint64(v)
        out[t] = mask
    return out


@njit(cache=True)
def glauber_event_masks(indptr, indices, n, lam, steps, draws, seed):
    """glauber_batch_masks, but driven by the no-op-skipping event chain.

    Exists so the event engine has its own distribution tests against the
    exact law and against the plain per-update kernel; the annealed
    estimator runs its stages on the same engine.
    """
    np.random.seed(seed)
    out = np.empty(draws, dtype=np.uint64)
    state = np.zeros(n, dtype=np.uint8)
    blocked = np.zeros(n, dtype=np.int32)
    free_list = np.empty(n, dtype=np.int64)
    free_pos = np.empty(n, dtype=np.int64)
    occ_list = np.empty(n, dtype=np.int64)
    occ_pos = np.empty(n, dtype=np.int64)
    p_occ = lam / (1.0 + lam)
    for t in range(draws):
        for v in range(n):
            state[v] = 0
            blocked[v] = 0
            free_list[v] = v
            free_pos[v] = v
            occ_pos[v] = -1
        _event_chain(
            indptr,
            indices,
            state,
            blocked,
            free_list,
            free_pos,
            occ_list,
            occ_pos,
            n,
            0,
            p_occ,
            steps,
        )
        mask = np.uint64(0)
        for v in range(n):
            if state[v] == 1:
                mask |= np.uint64(1) << np.uint64(v)
        out[t] = mask
    return out


@njit(cache=True)
def anneal_logweights(indptr, indices, n, sched, steps_per_stage, n_traj, seed):
    """Log-weights of annealed trajectories; exp-mean estimates Z(sched[-1]).

    sched holds the positive activity levels of the schedule. Each
    trajectory starts from a product-Bernoulli draw at sched[0] carrying the
    importance factor (1+sched[0])^n * 1{independent} — that factor times
    the proposal mass equals the unnormalised hard-core weight at sched[0],
    so the telescoping product over stages has expectation exactly Z at the
    final activity, for any number of heat-bath steps per stage. Dependent
    draws get weight 0 (-inf log-weight); at the tiny starting activities
    produced by the schedule this is astronomically rare.

    Stages run on the event chain (_event_chain), which has the same law as
    the per-update kernel, so the estimator's expectation and variance are
    untouched; only the wall clock changes.
    """
    np.random.seed(seed)
    out = np.empty(n_traj, dtype=np.float64)
    state = np.zeros(n, dtype=np.uint8)
    blocked = np.zeros(n, dtype=np.int32)
    free_list = np.empty(n, dtype=np.int64)
    free_pos = np.empty(n, dtype=np.int64)
    occ_list = np.empty(n, dtype=np.int64)
    occ_pos = np.empty(n, dtype=np.int64)
    m = sched.shape[0]
    logratio = np.empty(m - 1, dtype=np.float64)
    for j in range(m - 1):
        logratio[j] = np.log(sched[j + 1] / sched[j])
    lam0 = sched[0]
    p0 = lam0 / (1.0 + lam0)
    base = n * np.log1p(lam0)
    for t in range(n_traj):
        blocked[:] = 0
        for v in range(n):
            if np.random.random() < p0:
                state[v] = 1
                for k in range(indptr[v], indptr[v + 1]):
                    blocked[indices[k]] += 1
            else:
                state[v] = 0
        independent = True
        for v in range(n):
            if state[v] == 1 and blocked[v] > 0:
                independent = False
                break
        if not independent:
            out[t] = -np.inf
            continue
        n_free = 0
        n_occ = 0
        for v in range(n):
            if state[v] == 1:
                occ_pos[v] = n_occ
                occ_list[n_occ] = v
                n_occ += 1
                free_pos[v] = -1
            elif blocked[v] == 0:
                free_pos[v] = n_free
                free_list[n_free] = v
                n_free += 1
                occ_pos[v] = -1
            else:
                free_pos[v] = -1
                occ_pos[v] = -1
        logw = base
        for j in range(m - 1):
            lam = sched[j]
            n_free, n_occ = _event_chain(
                indptr,
                indices,
                state,
                blocked,
                free_list,
                free_pos,
                occ_list,
                occ_pos,
                n_free,
                n_occ,
                lam / (1.0 + lam),
                steps_per_stage,
            )
            logw += n_occ * logratio[j]
        out[t] = logw
    return out


@njit(cache=True)
def hs1d_alg1_batch(
    side,
    core,
    lam_n,
    n,
    steps,
    draws,
    seed,
    box_lo,
    box_hi,
    degree_cap,
):
    """End-to-end point-sampling batches for open 1D hard cores.

    Per draw: n uniform points on [0, side]; vertices whose separation is
    below ``core`` are adjacent (after sorting, neighbourhoods are
    contiguous index ranges, so no explicit graph is built). If the maximum
    degree reaches ``degree_cap`` the draw returns the empty configuration
    (degree-failure branch); otherwise a heat-bath chain at activity
    ``lam_n`` runs for ``steps`` updates from the empty state.

    Returns (counts, in_box, deg_failed, pair_violations):
      counts[t]      — number of retained points,
      in_box[t]      — 1 if some retained point lies in [box_lo, box_hi),
      deg_failed[t]  — 1 if the degree branch fired,
      pair_violations — total retained pairs closer than ``core`` (must be 0).
    """
    np.random.seed(seed)
    counts = np.zeros(draws, dtype=np.int32)
    in_box = np.zeros(draws, dtype=np.uint8)
    deg_failed = np.zeros(draws, dtype=np.uint8)
    violations = 0
    xs = np.empty(n, dtype=np.float64)
    lo = np.empty(n, dtype=np.int64)
    hi = np.empty(n, dtype=np.int64)
    state = np.empty(n, dtype=np.uint8)
    blocked = np.empty(n, dtype=np.int32)
    p_occ = lam_n / (1.0 + lam_n)
    for t in range(draws):
        for i in range(n):
            xs[i] = np.random.random() * side
        xs_sorted = np.sort(xs)
        # contiguous neighbourhood [lo[i], hi[i]] (inclusive, includes i)
        a = 0
        for i in range(n):
            while xs_sorted[a] <= xs_sorted[i] - core:
                a += 1
            lo[i] = a
        b = n - 1
        for i in range(n - 1, -1, -1):
            while xs_sorted[b] >= xs_sorted[i] + core:
                b -= 1
            hi[i] = b
        max_deg = 0
        for i in range(n):
            d = hi[i] - lo[i]
            if d > max_deg:
                max_deg = d
        if max_deg >= degree_cap:
            deg_failed[t] = 1
            continue  # empty configuration
        for i in range(n):
            state[i] = 0
            blocked[i] = 0
        occ = 0
        for _ in range(steps):
            v = np.random.randint(0, n)
            if blocked[v] > 0:
                continue
            if np.random.random() < p_occ:
                if state[v] == 0:
                    state[v] = 1
                    occ += 1
                    for j in range(lo[v], hi[v] + 1):
                        if j != v:
                            blocked[j] += 1
            else:
                if state[v] == 1:
                    state[v] = 0
                    occ -= 1
                    for j in range(lo[v], hi[v] + 1):
                        if j != v:
                            blocked[j] -= 1
        counts[t] = occ
        for v in range(n):
            if state[v] == 1:
                if blocked[v] > 0:
                    violations += 1
                if box_lo <= xs_sorted[v] < box_hi:
                    in_box[t] = 1
    return counts, in_box, deg_failed, violations


@njit(cache=True)
def layer_counts_dfs(indptr, indices, rank, adj_words, root, max_depth, node_budget, prune):
    """Count self-avoiding paths from ``root`` by length, optionally pruned.

    counts[k] = number of accepted paths with k edges (counts[0] = 1). With
    ``prune`` set, a path v_0..v_k only extends to u when, for every earlier
    vertex v_j (j <= k-1) adjacent to u, u ranks strictly after the
    successor v_{j+1} in v_j's neighbour ordering (``rank[v, u]`` is the
    1-based position of u among v's neighbours, 0 if not adjacent).

    Stops and reports truncation once more than ``node_budget`` paths have
    been accepted (root included), so callers can use the budget as an
    upper-bound test without paying for the full tree.
    """
    counts = np.zeros(max_depth + 1, dtype=np.int64)
    counts[0] = 1
    nodes = 1
    if max_depth == 0:
        return counts, False
    n_words = adj_words.shape[1]
    visited = np.zeros(n_words, dtype=np.uint64)
    path = np.empty(max_depth + 1, dtype=np.int64)
    cursor = np.empty(max_depth + 1, dtype=np.int64)
    depth = 0
    path[0] = root
    cursor[0] = indptr[root]
    visited[root >> 6] |= np.uint64(1) << np.uint64(root & 63)
    while depth >= 0:
        k = cursor[depth]
        if k >= indptr[path[depth] + 1]:
            v = path[depth]
            visited[v >> 6] &= ~(np.uint64(1) << np.uint64(v & 63))
            depth -= 1
            continue
        cursor[depth] = k + 1
        u = indices[k]
        if (visited[u >> 6] >> np.uint64(u & 63)) & np.uint64(1):
            continue
        if prune and depth >= 1:
            ok = True
            for j in range(depth):
                vj = path[j]
                if (adj_words[vj, u >> 6] >> np.uint64(u & 63)) & np.uint64(1):
                    if rank[vj, u] <= rank[vj, path[j + 1]]:
                        ok = False
                        break
            if not ok:
                continue
        nodes += 1
        counts[depth + 1] += 1
        if nodes > node_budget:
            return counts, True
        if depth + 1 < max_depth:
            depth += 1
            path[depth] = u
            cursor[depth] = indptr[u]
            visited[u >> 6] |= np.uint64(1) << np.uint64(u & 63)
    return counts, False
