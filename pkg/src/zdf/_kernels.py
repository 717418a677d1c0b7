"""Compiled inner loops for peeling and bit-wise decoding.

Bit-wise state per factor ``i`` and frame position ``q``:

    cnt[i, q]  number of neighbours whose shifted word is unknown at q
    acc[i, q]  memory XOR every known shifted neighbour bit at q
    ready[i]   number of positions q with cnt[i, q] == 1
    ready_pos[i, :ready_len[i]]
               those positions, plus stale ones (cnt dropped to 0) not yet
               compacted away; cnt only decreases, so a position enters at
               most once and one frame of capacity suffices

With these, the factor-node update of edge (i, j, shift) reduces to: for
each unknown position p of variable j, the factor pins it iff
``cnt[i, p + shift] == 1`` (j is the only unknown there), and the bit is
``acc[i, p + shift]``. Recovering a bit updates the caches of every factor
adjacent to j. This is exactly the composed pad/merge/window/fill map
evaluated on the current variable states.

Per-iteration records are rows of (stage, processes, updating, active).
"""
import numpy as np
from numba import njit

INFINITE = -1
NEVER = 1 << 62

# packet_wise_peel status codes
OK = 0
BAD_WINDOW = 1
BAD_RESIDUE = 2


@njit(cache=True)
def packet_wise_peel(fac_ptr, fac_var, fac_shift, edge_fac, var_ptr, var_edge, memory, ell,
                     resolved, values, alive):
    """Release variables from degree-1 factors until none remain.

    Mutates ``memory``, ``resolved``, ``values`` and ``alive``. Returns
    ``(status, factor)``; ``factor`` locates the inconsistency, if any.
    """
    F = len(fac_ptr) - 1
    frame = memory.shape[1]
    deg = np.zeros(F, dtype=np.int64)
    for e in range(len(fac_var)):
        if alive[e]:
            deg[edge_fac[e]] += 1
    queue = np.empty(F + len(fac_var), dtype=np.int64)
    head = 0
    tail = 0
    for i in range(F):
        if deg[i] == 1:
            queue[tail] = i
            tail += 1
    while head < tail:
        i = queue[head]
        head += 1
        if deg[i] != 1:
            continue
        e = fac_ptr[i]
        while not alive[e]:
            e += 1
        j = fac_var[e]
        s = fac_shift[e]
        for q in range(frame):
            if (q < s or q >= s + ell) and memory[i, q] != 0:
                return BAD_WINDOW, i
        for p in range(ell):
            values[j, p] = memory[i, s + p]
        resolved[j] = True
        for k in range(var_ptr[j], var_ptr[j + 1]):
            e2 = var_edge[k]
            if not alive[e2]:
                continue
            f = edge_fac[e2]
            s2 = fac_shift[e2]
            for p in range(ell):
                memory[f, s2 + p] ^= values[j, p]
            alive[e2] = False
            deg[f] -= 1
            if deg[f] == 1:
                queue[tail] = f
                tail += 1
            elif deg[f] == 0:
                for q in range(frame):
                    if memory[f, q] != 0:
                        return BAD_RESIDUE, f
    return OK, -1


@njit(cache=True)
def init_caches(fac_var, fac_shift, edge_fac, memory, known, value):
    F, frame = memory.shape
    ell = known.shape[1]
    cnt = np.zeros((F, frame), dtype=np.int32)
    acc = memory.copy()
    for e in range(len(fac_var)):
        i = edge_fac[e]
        j = fac_var[e]
        s = fac_shift[e]
        for p in range(ell):
            if known[j, p]:
                acc[i, p + s] ^= value[j, p]
            else:
                cnt[i, p + s] += 1
    ready = np.zeros(F, dtype=np.int64)
    ready_pos = np.empty((F, frame), dtype=np.int32)
    for i in range(F):
        for q in range(frame):
            if cnt[i, q] == 1:
                ready_pos[i, ready[i]] = q
                ready[i] += 1
    return cnt, acc, ready, ready_pos, ready.copy()


@njit(cache=True, inline="always")
def _phi(e, fac_var, fac_shift, edge_fac, var_ptr, var_edge, cnt, acc, ready, ready_pos,
         ready_len, known, value, ucount):
    """One decoding process on edge ``e``; returns the number of recovered bits."""
    j = fac_var[e]
    i = edge_fac[e]
    if ucount[j] == 0 or ready[i] == 0:
        return 0
    s = fac_shift[e]
    ell = known.shape[1]
    got = 0
    kept = 0
    for t in range(ready_len[i]):
        q = ready_pos[i, t]
        if cnt[i, q] != 1:
            continue
        p = q - s
        if 0 <= p < ell and known[j, p] == 0:
            bit = acc[i, q]
            known[j, p] = 1
            value[j, p] = bit
            got += 1
            # j occurs once per factor, so only factor i's own entry at q changes here
            for k in range(var_ptr[j], var_ptr[j + 1]):
                e2 = var_edge[k]
                f = edge_fac[e2]
                r = p + fac_shift[e2]
                c = cnt[f, r] - 1
                cnt[f, r] = c
                acc[f, r] ^= bit
                if c == 1:
                    ready[f] += 1
                    ready_pos[f, ready_len[f]] = r
                    ready_len[f] += 1
                elif c == 0:
                    ready[f] -= 1
            continue
        ready_pos[i, kept] = q
        kept += 1
    ready_len[i] = kept
    ucount[j] -= got
    return got


@njit(cache=True)
def _record(rec, n_rec, stage, processes, updating, active):
    if n_rec == rec.shape[0]:
        grown = np.empty((2 * rec.shape[0], 4), dtype=np.int64)
        grown[:n_rec] = rec[:n_rec]
        rec = grown
    rec[n_rec, 0] = stage
    rec[n_rec, 1] = processes
    rec[n_rec, 2] = updating
    rec[n_rec, 3] = active
    return rec, n_rec + 1


@njit(cache=True)
def _unknown_counts(known):
    n, ell = known.shape
    ucount = np.zeros(n, dtype=np.int64)
    for j in range(n):
        for p in range(ell):
            if known[j, p] == 0:
                ucount[j] += 1
    return ucount


@njit(cache=True)
def bitwise_original(fac_var, fac_shift, edge_fac, var_ptr, var_edge, cnt, acc, ready, ready_pos,
                     ready_len, known, value):
    """Full sweeps over every edge until a sweep recovers nothing."""
    E = len(fac_var)
    ucount = _unknown_counts(known)
    rec = np.empty((64, 4), dtype=np.int64)
    n_rec = 0
    if ucount.sum() == 0:
        return rec[:0]
    active = np.zeros(E, dtype=np.bool_)
    n_active = 0
    while True:
        updating = 0
        for e in range(E):
            if _phi(e, fac_var, fac_shift, edge_fac, var_ptr, var_edge, cnt, acc, ready,
                    ready_pos, ready_len, known, value, ucount):
                updating += 1
                if not active[e]:
                    active[e] = True
                    n_active += 1
        rec, n_rec = _record(rec, n_rec, 1, E, updating, n_active)
        if updating == 0:
            break
    return rec[:n_rec]


@njit(cache=True)
def bitwise_scheduled(fac_var, fac_shift, edge_fac, var_ptr, var_edge, cnt, acc, ready,
                      ready_pos, ready_len, known, value, t_a, t_b):
    """Three-stage schedule: full sweeps building the active set, replays of
    the active set building an ordered event list, then replays of that list
    with non-contributing entries dropped. ``t_a = INFINITE`` disables the
    first-stage deadline.

    Returns ``(records, restarts)``.
    """
    E = len(fac_var)
    n = known.shape[0]
    ucount = _unknown_counts(known)
    rec = np.empty((64, 4), dtype=np.int64)
    n_rec = 0
    if ucount.sum() == 0:
        return rec[:0], 0
    active = np.zeros(E, dtype=np.bool_)
    n_active = 0
    in_la = np.zeros(E, dtype=np.bool_)
    la = np.empty(E, dtype=np.int64)
    l_a = 0
    # every list-B entry recovered at least one residual bit
    lb = np.empty(ucount.sum() + 1, dtype=np.int64)
    l_b = 0
    v = np.zeros(n, dtype=np.bool_)
    tau = 0
    restarts = -1
    while True:
        # stage 1: full sweeps, collect contributing edges
        restarts += 1
        tau_m = tau + t_a if t_a != INFINITE else NEVER
        for j in range(n):
            v[j] = ucount[j] > 0
        halted = False
        while True:
            tau += 1
            updating = 0
            for e in range(E):
                if _phi(e, fac_var, fac_shift, edge_fac, var_ptr, var_edge, cnt, acc, ready,
                        ready_pos, ready_len, known, value, ucount):
                    updating += 1
                    v[fac_var[e]] = False
                    if not in_la[e]:
                        in_la[e] = True
                        la[l_a] = e
                        l_a += 1
                    if not active[e]:
                        active[e] = True
                        n_active += 1
            rec, n_rec = _record(rec, n_rec, 1, E, updating, n_active)
            pending = v.any()
            if updating == 0 or (tau >= tau_m and pending):
                halted = True
                break
            if not pending:
                break
        if halted:
            break

        # stage 2: replay the active set, log every contributing event
        tau_m = tau + t_b
        for j in range(n):
            v[j] = ucount[j] > 0
        restart = False
        while True:
            tau += 1
            updating = 0
            for q in range(l_a):
                e = la[q]
                if _phi(e, fac_var, fac_shift, edge_fac, var_ptr, var_edge, cnt, acc, ready,
                        ready_pos, ready_len, known, value, ucount):
                    updating += 1
                    v[fac_var[e]] = False
                    lb[l_b] = e
                    l_b += 1
                    if not active[e]:
                        active[e] = True
                        n_active += 1
            rec, n_rec = _record(rec, n_rec, 2, l_a, updating, n_active)
            if updating == 0 or (tau >= tau_m and v.any()):
                l_b = 0
                restart = True
                break
            if tau >= tau_m:
                break
        if restart:
            continue

        # stage 3: replay the event list, dropping entries that no longer help
        while True:
            tau += 1
            processes = l_b
            kept = 0
            for q in range(l_b):
                e = lb[q]
                if _phi(e, fac_var, fac_shift, edge_fac, var_ptr, var_edge, cnt, acc, ready,
                        ready_pos, ready_len, known, value, ucount):
                    lb[kept] = e
                    kept += 1
                    if not active[e]:
                        active[e] = True
                        n_active += 1
            l_b = kept
            rec, n_rec = _record(rec, n_rec, 3, processes, kept, n_active)
            if kept == 0:
                break
        if ucount.sum() == 0:
            break
    return rec[:n_rec], restarts
