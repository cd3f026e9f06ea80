"""Compiled inner loops: counter-based random streams and episode simulation.

Every episode draws its uniforms from a SplitMix64 sequence keyed by
``(seed, t, start_state)``, so results do not depend on the order or the
thread on which episodes run.  All uint64 arithmetic uses explicit uint64
operands; numba promotes mixed uint64/int64 expressions to float64.
"""

import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_T_SALT = np.uint64(0xD1B54A32D192ED03)
_I_SALT = np.uint64(0x8CB92BA72F3D8DD7)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

U64_MASK = (1 << 64) - 1


@nb.njit(cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(cache=True)
def stream_key(seed, t, i):
    """Initial stream state for episode ``t`` started in state ``i``."""
    z = mix64(seed + _GOLDEN)
    z = mix64(z ^ mix64(t * _T_SALT + _GOLDEN))
    return mix64(z ^ mix64(i * _I_SALT + _GOLDEN))


@nb.njit(cache=True)
def next_uniform(state):
    """Advance a stream; returns ``(new_state, u)`` with ``u`` in [0, 1)."""
    state = state + _GOLDEN
    return state, np.float64(mix64(state) >> _S11) * _INV53


@nb.njit(cache=True)
def uniforms(key, count):
    out = np.empty(count)
    state = key
    for k in range(count):
        state, out[k] = next_uniform(state)
    return out


@nb.njit(cache=True)
def episode(start, rows, indptr, indices, probs, term, costs, J, lam, key, cutoff,
            out_states, out_costs):
    """Simulate one episode from 0-based ``start`` under policy ``rows``.

    Successors are drawn by inverse CDF over the sparse row in ascending
    order, with the termination mass last.  If ``out_states`` is non-empty
    the visited 0-based states (``-1`` for termination) and step costs are
    written to the output buffers.  Returns ``(total_cost, td_target, steps,
    truncated)`` where ``td_target`` is the lambda-discounted sum of temporal
    differences against ``J``.
    """
    record = out_states.shape[0] > 0
    s = np.int64(start)
    state = key
    total = 0.0
    td = 0.0
    weight = 1.0
    steps = 0
    if record:
        out_states[0] = s
    while steps < cutoff:
        r = rows[s]
        state, u = next_uniform(state)
        lo = indptr[r]
        hi = indptr[r + 1]
        nxt = -1
        acc = 0.0
        for k in range(lo, hi):
            acc += probs[k]
            if u < acc:
                nxt = indices[k]
                break
        if nxt < 0 and term[r] == 0.0:
            # rounding left u above the accumulated row mass
            nxt = indices[hi - 1]
        c = costs[r]
        total += c
        j_next = J[nxt] if nxt >= 0 else 0.0
        td += weight * (c + j_next - J[s])
        weight *= lam
        if record:
            out_costs[steps] = c
            out_states[steps + 1] = nxt
        steps += 1
        if nxt < 0:
            return total, td, steps, False
        s = nxt
    return total, td, steps, True


@nb.njit(cache=True)
def sweep_serial(rows, indptr, indices, probs, term, costs, J, lam, seed, t, cutoff):
    """One episode from every state, streams keyed ``(seed, t, state label)``."""
    n = rows.shape[0]
    mc = np.empty(n)
    td = np.empty(n)
    steps = np.empty(n, dtype=np.int64)
    trunc = np.zeros(n, dtype=np.bool_)
    empty_s = np.empty(0, dtype=np.int64)
    empty_c = np.empty(0)
    for i in range(n):
        key = stream_key(seed, t, np.uint64(i + 1))
        mc[i], td[i], steps[i], trunc[i] = episode(
            i, rows, indptr, indices, probs, term, costs, J, lam, key, cutoff, empty_s, empty_c
        )
    return mc, td, steps, trunc


@nb.njit(cache=True, parallel=True)
def sweep_parallel(rows, indptr, indices, probs, term, costs, J, lam, seed, t, cutoff):
    n = rows.shape[0]
    mc = np.empty(n)
    td = np.empty(n)
    steps = np.empty(n, dtype=np.int64)
    trunc = np.zeros(n, dtype=np.bool_)
    for i in nb.prange(n):
        key = stream_key(seed, t, np.uint64(i + 1))
        a, b, c, d = episode(
            np.int64(i), rows, indptr, indices, probs, term, costs, J, lam, key, cutoff,
            np.empty(0, dtype=np.int64), np.empty(0),
        )
        mc[i] = a
        td[i] = b
        steps[i] = c
        trunc[i] = d
    return mc, td, steps, trunc


@nb.njit(cache=True)
def repeat_from(start, count, rows, indptr, indices, probs, term, costs, J, lam, seed, cutoff):
    """``count`` episodes from one state; episode ``k`` uses stream ``(seed, k, start + 1)``."""
    mc = np.empty(count)
    td = np.empty(count)
    steps = np.empty(count, dtype=np.int64)
    trunc = np.zeros(count, dtype=np.bool_)
    empty_s = np.empty(0, dtype=np.int64)
    empty_c = np.empty(0)
    label = np.uint64(start + 1)
    for k in range(count):
        key = stream_key(seed, np.uint64(k), label)
        mc[k], td[k], steps[k], trunc[k] = episode(
            start, rows, indptr, indices, probs, term, costs, J, lam, key, cutoff, empty_s, empty_c
        )
    return mc, td, steps, trunc


@nb.njit(cache=True)
def greedy_rows(row_start, indptr, indices, probs, costs, J):
    """Greedy row per state (lowest position on ties) and the values ``TJ``."""
    n = row_start.shape[0] - 1
    best_rows = np.empty(n, dtype=np.int64)
    tj = np.empty(n)
    for i in range(n):
        best = np.inf
        arg = -1
        for r in range(row_start[i], row_start[i + 1]):
            q = costs[r]
            for k in range(indptr[r], indptr[r + 1]):
                q += probs[k] * J[indices[k]]
            if q < best:
                best = q
                arg = r
        best_rows[i] = arg
        tj[i] = best
    return best_rows, tj


def as_u64(x: int) -> np.uint64:
    return np.uint64(int(x) & U64_MASK)
