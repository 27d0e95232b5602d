"""Hot array kernels.

Every kernel has a numba implementation (``*_nb``) and a pure-numpy one
(``*_np``).  The public names at the bottom of the module point at one of
them depending on :data:`peptile._jit.USE_NUMBA`.  Both paths return
identical arrays; ``tests/test_kernels.py`` checks that.

Bitsets are rows of ``uint64`` words, bit ``i`` of the set living in word
``i >> 6`` at position ``i & 63``.
"""
import numpy as np

from ._jit import USE_NUMBA, njit

N_SYMBOLS = 20
N_BITS = 5

# status codes returned by the subset-construction kernels
OK = 0
OVER_CAP = 1
OVER_BUDGET = 2


def n_words(n_items):
    return max(1, (n_items + 63) >> 6)


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------


@njit(cache=True)
def _ac_tables_nb(codes, offsets):
    n_pat = offsets.size - 1
    cap = offsets[-1] + 1
    child = np.full((cap, N_SYMBOLS), -1, np.int32)
    term = np.empty(n_pat, np.int32)
    n = 1
    for p in range(n_pat):
        s = 0
        for k in range(offsets[p], offsets[p + 1]):
            c = codes[k]
            if child[s, c] < 0:
                child[s, c] = n
                n += 1
            s = child[s, c]
        term[p] = s

    # renumber in BFS order, children visited by symbol code
    order = np.empty(n, np.int32)
    new_id = np.empty(n, np.int32)
    order[0] = 0
    new_id[0] = 0
    head = 0
    tail = 1
    while head < tail:
        s = order[head]
        head += 1
        for c in range(N_SYMBOLS):
            t = child[s, c]
            if t >= 0:
                new_id[t] = tail
                order[tail] = t
                tail += 1

    goto = np.full((n, N_SYMBOLS), -1, np.int32)
    for old in range(n):
        for c in range(N_SYMBOLS):
            t = child[old, c]
            if t >= 0:
                goto[new_id[old], c] = new_id[t]

    pw = max(1, (n_pat + 63) >> 6)
    out = np.zeros((n, pw), np.uint64)
    for p in range(n_pat):
        s = new_id[term[p]]
        out[s, p >> 6] |= np.uint64(1) << np.uint64(p & 63)

    fail = np.zeros(n, np.int32)
    depth = np.zeros(n, np.int32)
    dfa = np.empty((n, N_SYMBOLS), np.int32)
    # index order is BFS order, so fail[s] < s is always finished first
    for s in range(n):
        f = fail[s]
        if s > 0:
            for w in range(pw):
                out[s, w] |= out[f, w]
        for c in range(N_SYMBOLS):
            t = goto[s, c]
            if t >= 0:
                dfa[s, c] = t
                depth[t] = depth[s] + 1
                if s == 0:
                    fail[t] = 0
                else:
                    fail[t] = dfa[f, c]
            elif s == 0:
                dfa[s, c] = 0
            else:
                dfa[s, c] = dfa[f, c]
    return goto, fail, dfa, out, depth


@njit(cache=True)
def _hash_words(row):
    h = np.uint64(1469598103934665603)
    for w in range(row.size):
        h ^= row[w]
        h *= np.uint64(1099511628211)
    h ^= h >> np.uint64(29)
    return h


@njit(cache=True)
def _subset_nb(dfa, out, bit_index, cap_limit, budget_limit, want_tables):
    """Subset construction of one bit machine.

    Aborts as soon as the state count would exceed ``cap_limit`` (status
    OVER_CAP) or reach ``budget_limit`` (status OVER_BUDGET).  Negative
    limits are disabled.
    """
    S = dfa.shape[0]
    W = (S + 63) >> 6
    shift = 4 - bit_index
    one = np.uint64(1)
    succ = np.zeros((S, 2, W), np.uint64)
    for q in range(S):
        for c in range(N_SYMBOLS):
            b = (c >> shift) & 1
            t = dfa[q, c]
            succ[q, b, t >> 6] |= one << np.uint64(t & 63)

    cap = 64
    sets = np.zeros((cap, W), np.uint64)
    nxt = np.full((cap, 2), -1, np.int32)
    moff = np.zeros(cap + 1, np.int64)
    mem = np.empty(256, np.int32)
    hcap = 256
    table = np.full(hcap, -1, np.int32)

    sets[0, 0] = one
    mem[0] = 0
    moff[1] = 1
    table[np.int64(_hash_words(sets[0]) & np.uint64(hcap - 1))] = 0
    n = 1
    status = OK
    tmp = np.zeros(W, np.uint64)
    head = 0
    while head < n:
        for b in range(2):
            tmp[:] = 0
            for k in range(moff[head], moff[head + 1]):
                q = mem[k]
                for w in range(W):
                    tmp[w] |= succ[q, b, w]
            mask = np.uint64(hcap - 1)
            h = np.int64(_hash_words(tmp) & mask)
            found = -1
            while table[h] >= 0:
                idx = table[h]
                same = True
                for w in range(W):
                    if sets[idx, w] != tmp[w]:
                        same = False
                        break
                if same:
                    found = idx
                    break
                h = (h + 1) & (hcap - 1)
            if found >= 0:
                nxt[head, b] = found
                continue

            if cap_limit >= 0 and n + 1 > cap_limit:
                return n + 1, OVER_CAP, nxt[:0], np.zeros((0, 1), np.uint64), mem[:0], moff[:1]
            if budget_limit >= 0 and n + 1 >= budget_limit:
                return n + 1, OVER_BUDGET, nxt[:0], np.zeros((0, 1), np.uint64), mem[:0], moff[:1]

            if n == cap:
                cap *= 2
                sets2 = np.zeros((cap, W), np.uint64)
                sets2[:n] = sets[:n]
                sets = sets2
                nxt2 = np.full((cap, 2), -1, np.int32)
                nxt2[:n] = nxt[:n]
                nxt = nxt2
                moff2 = np.zeros(cap + 1, np.int64)
                moff2[: n + 1] = moff[: n + 1]
                moff = moff2
            if 2 * (n + 1) > hcap:
                hcap *= 2
                table = np.full(hcap, -1, np.int32)
                mask = np.uint64(hcap - 1)
                for i in range(n):
                    hh = np.int64(_hash_words(sets[i]) & mask)
                    while table[hh] >= 0:
                        hh = (hh + 1) & (hcap - 1)
                    table[hh] = i
                h = np.int64(_hash_words(tmp) & mask)
                while table[h] >= 0:
                    h = (h + 1) & (hcap - 1)

            sets[n] = tmp
            table[h] = n
            pos = moff[n]
            for w in range(W):
                word = tmp[w]
                if word == 0:
                    continue
                for bit in range(64):
                    if (word >> np.uint64(bit)) & one:
                        if pos == mem.size:
                            mem2 = np.empty(mem.size * 2, np.int32)
                            mem2[:pos] = mem[:pos]
                            mem = mem2
                        mem[pos] = w * 64 + bit
                        pos += 1
            moff[n + 1] = pos
            nxt[head, b] = n
            n += 1
        head += 1

    pw = out.shape[1]
    if want_tables:
        pmv = np.zeros((n, pw), np.uint64)
        for s in range(n):
            for k in range(moff[s], moff[s + 1]):
                q = mem[k]
                for w in range(pw):
                    pmv[s, w] |= out[q, w]
        return n, status, nxt[:n].copy(), pmv, mem[: moff[n]].copy(), moff[: n + 1].copy()
    return n, status, nxt[:0], np.zeros((0, pw), np.uint64), mem[:0], moff[:1]


@njit(cache=True)
def _run_table_nb(table, symbols):
    n = symbols.size
    states = np.empty(n, np.int32)
    s = 0
    for i in range(n):
        s = table[s, symbols[i]]
        states[i] = s
    return states


@njit(cache=True)
def _lockstep_nb(tables, wiring, codes):
    """Step five binary machines together, one residue per cycle.

    ``tables`` is (5, B_max, 2); machine j reads residue bit ``wiring[j]``
    (bit 0 = LSB of the code).  Returns the (n, 5) state trace.
    """
    n = codes.size
    m = tables.shape[0]
    trace = np.empty((n, m), np.int32)
    state = np.zeros(m, np.int32)
    for i in range(n):
        c = codes[i]
        for j in range(m):
            state[j] = tables[j, state[j], (c >> wiring[j]) & 1]
            trace[i, j] = state[j]
    return trace


@njit(cache=True)
def _tile_counts_nb(codes, offsets, base, max_delta, machine_cap, total_cap):
    """State counts of the five bit machines for one pattern set.

    ``base`` holds the per-machine counts of the set before the candidate
    was added; with ``max_delta >= 0`` the build stops once the summed
    growth reaches ``max_delta`` (the caller already has a candidate that
    good).  Returns (counts, status).
    """
    goto, fail, dfa, out, depth = _ac_tables_nb(codes, offsets)
    counts = np.zeros(N_BITS, np.int64)
    total = 0
    acc = 0
    for j in range(N_BITS):
        cap_limit = machine_cap
        if total_cap >= 0:
            # the remaining machines need at least one state each
            room = total_cap - total - (N_BITS - 1 - j)
            if cap_limit < 0 or room < cap_limit:
                cap_limit = room
        budget_limit = -1
        if max_delta >= 0:
            budget_limit = base[j] + max_delta - acc
        n, status, _, _, _, _ = _subset_nb(dfa, out, j, cap_limit, budget_limit, False)
        counts[j] = n
        if status != OK:
            return counts, status
        total += n
        acc += n - base[j]
    return counts, OK


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------


def trie_np(codes, offsets):
    """BFS-numbered keyword trie: (goto, terminal state of each pattern)."""
    n_pat = offsets.size - 1
    children = [{}]
    term = []
    codes_l = codes.tolist()
    for p in range(n_pat):
        s = 0
        for c in codes_l[offsets[p]:offsets[p + 1]]:
            t = children[s].get(c)
            if t is None:
                t = len(children)
                children[s][c] = t
                children.append({})
            s = t
        term.append(s)

    n = len(children)
    order = [0]
    new_id = np.empty(n, np.int64)
    new_id[0] = 0
    for s in order:
        for c in sorted(children[s]):
            t = children[s][c]
            new_id[t] = len(order)
            order.append(t)

    goto = np.full((n, N_SYMBOLS), -1, np.int32)
    for old in range(n):
        row = new_id[old]
        for c, t in children[old].items():
            goto[row, c] = new_id[t]
    return goto, new_id[np.asarray(term, dtype=np.int64)]


def terminal_outputs(term, n_states):
    n_pat = term.size
    out = np.zeros((n_states, n_words(n_pat)), np.uint64)
    if n_pat:
        p = np.arange(n_pat)
        bits = np.left_shift(np.uint64(1), (p & 63).astype(np.uint64))
        np.bitwise_or.at(out, (term, p >> 6), bits)
    return out


def _ac_tables_np(codes, offsets):
    goto, term = trie_np(codes, offsets)
    n = goto.shape[0]
    out = terminal_outputs(term, n)
    fail, depth = failure_links_np(goto)
    for s in range(1, n):
        out[s] |= out[fail[s]]
    dfa = dfa_np(goto, fail)
    return goto, fail, dfa, out, depth


def failure_links_np(goto):
    """Failure function and depth of a BFS-numbered keyword trie."""
    n = goto.shape[0]
    fail = np.zeros(n, np.int32)
    depth = np.zeros(n, np.int32)
    # dfa rows are needed for failure lookups; build them alongside
    dfa = np.zeros((n, N_SYMBOLS), np.int32)
    for s in range(n):
        row = goto[s]
        has = row >= 0
        if s == 0:
            dfa[0] = np.where(has, row, 0)
        else:
            dfa[s] = np.where(has, row, dfa[fail[s]])
        kids = row[has]
        depth[kids] = depth[s] + 1
        if s == 0:
            fail[kids] = 0
        else:
            fail[kids] = dfa[fail[s], np.flatnonzero(has)]
    return fail, depth


def dfa_np(goto, fail):
    n = goto.shape[0]
    dfa = np.zeros((n, N_SYMBOLS), np.int32)
    for s in range(n):
        row = goto[s]
        if s == 0:
            dfa[0] = np.where(row >= 0, row, 0)
        else:
            dfa[s] = np.where(row >= 0, row, dfa[fail[s]])
    return dfa


def _successor_masks(dfa, bit_index):
    S = dfa.shape[0]
    shift = 4 - bit_index
    codes = np.arange(N_SYMBOLS)
    masks = []
    for b in (0, 1):
        cols = codes[((codes >> shift) & 1) == b]
        m = np.zeros((S, S), dtype=bool)
        m[np.repeat(np.arange(S), cols.size), dfa[:, cols].ravel()] = True
        masks.append(m)
    return masks


def _subset_np(dfa, out, bit_index, cap_limit, budget_limit, want_tables):
    S = dfa.shape[0]
    succ = _successor_masks(dfa, bit_index)
    root = np.zeros(S, dtype=bool)
    root[0] = True
    index = {np.packbits(root).tobytes(): 0}
    members = [np.array([0], dtype=np.int32)]
    nxt = []
    head = 0
    empty = (np.zeros((0, 2), np.int32), np.zeros((0, out.shape[1]), np.uint64),
             np.zeros(0, np.int32), np.zeros(1, np.int64))
    while head < len(members):
        row = [-1, -1]
        for b in (0, 1):
            nm = succ[b][members[head]].any(axis=0)
            key = np.packbits(nm).tobytes()
            idx = index.get(key)
            if idx is None:
                n = len(members)
                if cap_limit >= 0 and n + 1 > cap_limit:
                    return (n + 1, OVER_CAP) + empty
                if budget_limit >= 0 and n + 1 >= budget_limit:
                    return (n + 1, OVER_BUDGET) + empty
                idx = n
                index[key] = idx
                members.append(np.flatnonzero(nm).astype(np.int32))
            row[b] = idx
        nxt.append(row)
        head += 1

    n = len(members)
    if not want_tables:
        return (n, OK) + empty
    nxt_a = np.asarray(nxt, dtype=np.int32).reshape(n, 2)
    pmv = np.stack([np.bitwise_or.reduce(out[m], axis=0) for m in members])
    moff = np.zeros(n + 1, np.int64)
    moff[1:] = np.cumsum([m.size for m in members])
    return n, OK, nxt_a, pmv, np.concatenate(members), moff


def _run_table_np(table, symbols):
    rows = table.tolist()
    states = []
    s = 0
    for c in symbols.tolist():
        s = rows[s][c]
        states.append(s)
    return np.asarray(states, dtype=np.int32)


def _lockstep_np(tables, wiring, codes):
    rows = [t.tolist() for t in tables]
    wires = [int(w) for w in wiring]
    state = [0] * len(rows)
    trace = []
    for c in codes.tolist():
        for j, (rj, wj) in enumerate(zip(rows, wires)):
            state[j] = rj[state[j]][(c >> wj) & 1]
        trace.append(list(state))
    return np.asarray(trace, dtype=np.int32).reshape(len(trace), len(rows))


def _tile_counts_np(codes, offsets, base, max_delta, machine_cap, total_cap):
    goto, fail, dfa, out, depth = _ac_tables_np(codes, offsets)
    counts = np.zeros(N_BITS, np.int64)
    total = 0
    acc = 0
    for j in range(N_BITS):
        cap_limit = machine_cap
        if total_cap >= 0:
            room = total_cap - total - (N_BITS - 1 - j)
            if cap_limit < 0 or room < cap_limit:
                cap_limit = room
        budget_limit = base[j] + max_delta - acc if max_delta >= 0 else -1
        n, status = _subset_np(dfa, out, j, cap_limit, budget_limit, False)[:2]
        counts[j] = n
        if status != OK:
            return counts, status
        total += n
        acc += n - base[j]
    return counts, OK


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if USE_NUMBA:
    ac_tables = _ac_tables_nb
    subset_construct = _subset_nb
    run_table = _run_table_nb
    lockstep = _lockstep_nb
    tile_counts = _tile_counts_nb
else:
    ac_tables = _ac_tables_np
    subset_construct = _subset_np
    run_table = _run_table_np
    lockstep = _lockstep_np
    tile_counts = _tile_counts_np

BACKEND = "numba" if USE_NUMBA else "numpy"


def flatten_codes(code_arrays):
    """Concatenate per-pattern code arrays into (codes, offsets)."""
    offsets = np.zeros(len(code_arrays) + 1, np.int64)
    if code_arrays:
        offsets[1:] = np.cumsum([len(c) for c in code_arrays])
        codes = np.concatenate(code_arrays).astype(np.int64)
    else:
        codes = np.zeros(0, np.int64)
    return codes, offsets
