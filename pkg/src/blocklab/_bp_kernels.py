"""Hot loops for asynchronous belief-propagation sweeps (numba).

One sweep visits every vertex in a caller-supplied order.  A vertex update
recomputes all of its outgoing messages from the *current* incoming ones,
refreshes the vertex marginal, and incrementally adjusts the global external
field.  Messages live in linear space with renormalization after every
product step; a vertex whose normalizers underflow (< 1e-300) is recomputed
in log space, and a genuinely contradictory vertex (all colors excluded by
hard zero affinities) falls back to a uniform message.

Kernels are single-threaded and avoid fastmath so results are bit-identical
for identical inputs.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_TINY = 1e-300


@njit(cache=True)
def _log_update_vertex(beg, d, q, rev, msgs, C, fr, raw, newmsg, max_delta):
    """Log-space recomputation of one vertex's outgoing messages.

    Returns the updated ``max_delta``; writes the vertex's new (linear,
    normalized) marginal direction into ``raw``.
    """
    lmk = np.empty((d, q))
    for t in range(d):
        src = msgs[rev[beg + t]]
        for r in range(q):
            v = 0.0
            for s in range(q):
                v += C[r, s] * src[s]
            lmk[t, r] = np.log(v) if v > 0.0 else -np.inf

    lpre = np.empty((d + 1, q))
    lsuf = np.empty((d + 1, q))
    for r in range(q):
        lpre[0, r] = np.log(fr[r])
        lsuf[d, r] = 0.0
    for t in range(d):
        for r in range(q):
            lpre[t + 1, r] = lpre[t, r] + lmk[t, r]
    for t in range(d - 1, -1, -1):
        for r in range(q):
            lsuf[t, r] = lsuf[t + 1, r] + lmk[t, r]

    for t in range(d):
        arc = beg + t
        mx = -np.inf
        for r in range(q):
            newmsg[r] = lpre[t, r] + lsuf[t + 1, r]
            if newmsg[r] > mx:
                mx = newmsg[r]
        if mx == -np.inf:
            for r in range(q):
                newmsg[r] = 1.0 / q
        else:
            z = 0.0
            for r in range(q):
                newmsg[r] = np.exp(newmsg[r] - mx)
                z += newmsg[r]
            for r in range(q):
                newmsg[r] /= z
        for r in range(q):
            diff = abs(newmsg[r] - msgs[arc, r])
            if diff > max_delta:
                max_delta = diff
            msgs[arc, r] = newmsg[r]

    mx = -np.inf
    for r in range(q):
        raw[r] = lpre[d, r]
        if raw[r] > mx:
            mx = raw[r]
    if mx == -np.inf:
        for r in range(q):
            raw[r] = 1.0 / q
    else:
        z = 0.0
        for r in range(q):
            raw[r] = np.exp(raw[r] - mx)
            z += raw[r]
        for r in range(q):
            raw[r] /= z
    return max_delta


@njit(cache=True)
def sweep(indptr, rev, msgs, marg, h, C, inv_n, use_field, perm, dmax):
    """One asynchronous sweep; returns the max message-component change."""
    n = indptr.shape[0] - 1
    q = C.shape[0]
    mk = np.empty((dmax, q))
    pre = np.empty((dmax + 1, q))
    suf = np.empty((dmax + 1, q))
    fr = np.empty(q)
    raw = np.empty(q)
    newmsg = np.empty(q)
    max_delta = 0.0

    for vi in range(n):
        i = perm[vi]
        beg = indptr[i]
        d = indptr[i + 1] - beg

        if use_field:
            hm = 0.0
            for r in range(q):
                hm += h[r]
            hm /= q
            for r in range(q):
                fr[r] = np.exp(-(h[r] - hm))
        else:
            for r in range(q):
                fr[r] = 1.0

        if d > 0:
            need_log = False
            for t in range(d):
                src = msgs[rev[beg + t]]
                z = 0.0
                for r in range(q):
                    v = 0.0
                    for s in range(q):
                        v += C[r, s] * src[s]
                    mk[t, r] = v
                    z += v
                if z < _TINY:
                    need_log = True
                    break
                for r in range(q):
                    mk[t, r] /= z

            if not need_log:
                z = 0.0
                for r in range(q):
                    pre[0, r] = fr[r]
                    z += fr[r]
                for r in range(q):
                    pre[0, r] /= z
                for t in range(d):
                    z = 0.0
                    for r in range(q):
                        pre[t + 1, r] = pre[t, r] * mk[t, r]
                        z += pre[t + 1, r]
                    if z < _TINY:
                        need_log = True
                        break
                    for r in range(q):
                        pre[t + 1, r] /= z

            if not need_log:
                for r in range(q):
                    suf[d, r] = 1.0
                for t in range(d - 1, -1, -1):
                    z = 0.0
                    for r in range(q):
                        suf[t, r] = suf[t + 1, r] * mk[t, r]
                        z += suf[t, r]
                    if z < _TINY:
                        need_log = True
                        break
                    for r in range(q):
                        suf[t, r] /= z

            if not need_log:
                for t in range(d):
                    arc = beg + t
                    z = 0.0
                    for r in range(q):
                        newmsg[r] = pre[t, r] * suf[t + 1, r]
                        z += newmsg[r]
                    if z < _TINY:
                        need_log = True
                        break
                    for r in range(q):
                        newmsg[r] /= z
                        diff = abs(newmsg[r] - msgs[arc, r])
                        if diff > max_delta:
                            max_delta = diff
                        msgs[arc, r] = newmsg[r]

            if need_log:
                max_delta = _log_update_vertex(
                    beg, d, q, rev, msgs, C, fr, raw, newmsg, max_delta)
            else:
                for r in range(q):
                    raw[r] = pre[d, r]
        else:
            z = 0.0
            for r in range(q):
                raw[r] = fr[r]
                z += fr[r]
            for r in range(q):
                raw[r] /= z

        # refresh the vertex marginal and fold the change into the field
        for r in range(q):
            acc = 0.0
            for s in range(q):
                acc += C[r, s] * (raw[s] - marg[i, s])
            h[r] += acc * inv_n
        for r in range(q):
            marg[i, r] = raw[r]

    return max_delta
