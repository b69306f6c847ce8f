"""Hot loops for annealing and pivotal sampling.

These are plain-Python implementations compiled with numba when importable;
without numba the identical code runs uncompiled (slow but byte-for-byte the
same results).  The kernels hold no RNG state: all randomness arrives as
pre-drawn uniform arrays, so results do not depend on which backend ran.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


@njit(cache=True, nogil=True)
def _dist(X, i, j):
    s = 0.0
    for c in range(X.shape[1]):
        d = X[i, c] - X[j, c]
        s += d * d
    return np.sqrt(s)


@njit(cache=True, nogil=True)
def _swap_terms(X, order, a, b, ia, ib, t, w):
    # Contribution of the two neighbors at forward offset t from a and b.
    # The (a, b) pair itself is skipped: its term is invariant under the swap.
    N = order.shape[0]
    acc = 0.0
    r = a + t
    if r >= N:
        r -= N
    if r != b:
        ir = order[r]
        acc += w * (_dist(X, ib, ir) - _dist(X, ia, ir))
    r = b + t
    if r >= N:
        r -= N
    if r != a:
        ir = order[r]
        acc += w * (_dist(X, ia, ir) - _dist(X, ib, ir))
    return acc


@njit(cache=True, nogil=True)
def delta_r(X, order, n, a, b):
    """Change in the repulsion sum when positions a and b (0-based) swap.

    Visits only neighbors whose window weight is positive: forward offsets
    1..n-1 plus the wrapped offsets N-n+1..N-1, each with the exact count of
    size-n blocks containing the pair.  O(n p) work.
    """
    N = order.shape[0]
    ia = order[a]
    ib = order[b]
    acc = 0.0
    for t in range(1, n):
        w = float(n - t)
        extra = n - N + t
        if extra > 0:
            w += float(extra)
        acc += _swap_terms(X, order, a, b, ia, ib, t, w)
    lo = N - n + 1
    if lo < n:
        lo = n
    for t in range(lo, N):
        acc += _swap_terms(X, order, a, b, ia, ib, t, float(n - N + t))
    return acc


@njit(cache=True, nogil=True)
def sa_chain(X, order, best_order, n, c1, alpha, state, counts, randoms):
    """Advance the annealing chain by ``len(randoms) // 3`` iterations in place.

    state = [current objective, best objective, temperature];
    counts = [kept swaps, reverted swaps].  Each iteration consumes exactly
    three uniforms (positions a and b, acceptance draw) whether or not the
    acceptance draw is used, so the stream consumption is deterministic.
    """
    N = order.shape[0]
    e_cur = state[0]
    e_best = state[1]
    temp = state[2]
    iters = randoms.shape[0] // 3
    for k in range(iters):
        a = int(randoms[3 * k] * N)
        b = int(randoms[3 * k + 1] * (N - 1))
        if b >= a:
            b += 1
        e_new = e_cur - c1 * delta_r(X, order, n, a, b)
        if e_new < e_best:
            tmp = order[a]
            order[a] = order[b]
            order[b] = tmp
            for i in range(N):
                best_order[i] = order[i]
            e_cur = e_new
            e_best = e_new
            counts[0] += 1
        elif e_new >= e_cur and randoms[3 * k + 2] >= np.exp(-(e_new - e_cur) / temp):
            counts[1] += 1
        else:
            tmp = order[a]
            order[a] = order[b]
            order[b] = tmp
            e_cur = e_new
            counts[0] += 1
        temp *= alpha
        if temp < 1e-300:  # keep exp() well defined on both backends
            temp = 1e-300
    state[0] = e_cur
    state[1] = e_best
    state[2] = temp


@njit(cache=True, nogil=True)
def _nn_pos(X, und, n_und, ipos):
    # Nearest undecided neighbor of und[ipos]; ties go to the lowest unit id.
    i = und[ipos]
    best_pos = -1
    best_d = np.inf
    best_id = np.int64(2**62)
    for q in range(n_und):
        if q == ipos:
            continue
        j = und[q]
        s = 0.0
        for c in range(X.shape[1]):
            d = X[i, c] - X[j, c]
            s += d * d
        if s < best_d or (s == best_d and j < best_id):
            best_d = s
            best_id = j
            best_pos = q
    return best_pos


@njit(cache=True, nogil=True)
def _resolve(prob, unit, eps):
    p = prob[unit]
    if p < eps:
        prob[unit] = 0.0
        return True
    if p > 1.0 - eps:
        prob[unit] = 1.0
        return True
    return False


@njit(cache=True, nogil=True)
def lpm_chain(X, prob, und, state, randoms):
    """Run local-pivotal competition rounds until resolution or random exhaustion.

    und[0:state[0]] lists the undecided units.  Each round consumes two
    uniforms (unit pick, probability transfer) whether or not the mutual
    nearest-neighbor test passes.  Resolved units snap to exactly 0 or 1 and
    are swap-removed from the undecided list.
    """
    n_und = state[0]
    rounds = randoms.shape[0] // 2
    eps = 1e-9
    for s in range(rounds):
        if n_und <= 1:
            break
        ipos = int(randoms[2 * s] * n_und)
        u = randoms[2 * s + 1]
        jpos = _nn_pos(X, und, n_und, ipos)
        if und[_nn_pos(X, und, n_und, jpos)] != und[ipos]:
            continue
        i = und[ipos]
        j = und[jpos]
        pi = prob[i]
        pj = prob[j]
        ps = pi + pj
        if ps < 1.0:
            if u < pj / ps:
                prob[i] = 0.0
                prob[j] = ps
            else:
                prob[i] = ps
                prob[j] = 0.0
        else:
            if u < (1.0 - pj) / (2.0 - ps):
                prob[i] = 1.0
                prob[j] = ps - 1.0
            else:
                prob[i] = ps - 1.0
                prob[j] = 1.0
        hi = ipos if ipos > jpos else jpos
        lo = jpos if ipos > jpos else ipos
        if _resolve(prob, und[hi], eps):
            und[hi] = und[n_und - 1]
            n_und -= 1
        if _resolve(prob, und[lo], eps):
            und[lo] = und[n_und - 1]
            n_und -= 1
    state[0] = n_und
