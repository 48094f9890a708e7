# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: exact greedy CART construction and MLP mini-batch Adam.

Semantics match :mod:`drcpd._fallback` exactly (same split order, same
tie-breaking, same accumulation order for split statistics); only speed
differs.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log as _log, sqrt, tanh

cnp.import_array()


def build_tree(const double[:, ::1] X, const cnp.int64_t[:, ::1] order,
               const double[:, ::1] sorted_vals, const double[::1] targets,
               const cnp.uint8_t[::1] in_sample, int max_depth, int min_leaf):
    """Grow one least-squares regression tree level by level.

    ``order[f]`` lists all rows sorted (stably) by feature ``f`` and
    ``sorted_vals[f]`` holds the matching values. Rows with ``in_sample == 0``
    are ignored. Returns ``(feature, threshold, left, right, value, count)``
    with ``feature == -1`` marking leaves; node 0 is the root and children are
    numbered breadth-first.
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t cap = (1 << (max_depth + 1)) - 1
    cdef Py_ssize_t i, r, f, s, node, depth, n_front, n_next, n_nodes, m, lo, hi, w, k

    feature_a = np.full(cap, -1, dtype=np.int64)
    threshold_a = np.zeros(cap, dtype=np.float64)
    left_a = np.full(cap, -1, dtype=np.int64)
    right_a = np.full(cap, -1, dtype=np.int64)
    value_a = np.zeros(cap, dtype=np.float64)
    count_a = np.zeros(cap, dtype=np.int64)
    cdef cnp.int64_t[::1] feature = feature_a
    cdef double[::1] threshold = threshold_a
    cdef cnp.int64_t[::1] left = left_a
    cdef cnp.int64_t[::1] right = right_a
    cdef double[::1] value = value_a
    cdef cnp.int64_t[::1] count = count_a

    # per-feature row order / values / targets, each node a contiguous segment
    cdef cnp.int64_t[:, ::1] idx = np.empty((d, n), dtype=np.int64)
    cdef double[:, ::1] vals = np.empty((d, n), dtype=np.float64)
    cdef double[:, ::1] tg = np.empty((d, n), dtype=np.float64)
    cdef cnp.int64_t[::1] tmp_i = np.empty(n, dtype=np.int64)
    cdef double[::1] tmp_v = np.empty(n, dtype=np.float64)
    cdef double[::1] tmp_t = np.empty(n, dtype=np.float64)
    cdef cnp.uint8_t[::1] go_left = np.zeros(n, dtype=np.uint8)
    cdef cnp.int64_t[::1] seg_lo = np.zeros(cap, dtype=np.int64)
    cdef cnp.int64_t[::1] seg_hi = np.zeros(cap, dtype=np.int64)
    cdef cnp.int64_t[::1] front = np.zeros(cap, dtype=np.int64)
    cdef cnp.int64_t[::1] nxt = np.zeros(cap, dtype=np.int64)

    cdef double v, prev, t, tot, totsq, sl, sr, gain, best_gain, thr, best_thr
    cdef cnp.int64_t c, nl, best_f, flag

    cdef double[::1] inv = np.empty(n + 1, dtype=np.float64)
    inv[0] = 0.0
    for i in range(1, n + 1):
        inv[i] = 1.0 / i

    m = 0
    for f in range(d):
        k = 0
        for i in range(n):
            r = order[f, i]
            if in_sample[r]:
                idx[f, k] = r
                vals[f, k] = sorted_vals[f, i]
                tg[f, k] = targets[r]
                k += 1
        m = k
    seg_lo[0] = 0
    seg_hi[0] = m
    front[0] = 0
    n_front = 1
    n_nodes = 1

    for depth in range(max_depth + 1):
        n_next = 0
        for s in range(n_front):
            node = front[s]
            lo = seg_lo[node]
            hi = seg_hi[node]
            c = hi - lo
            # node statistics accumulate in feature-0 order
            tot = 0.0
            totsq = 0.0
            for i in range(lo, hi):
                t = tg[0, i]
                tot += t
                totsq += t * t
            count[node] = c
            value[node] = tot / c if c > 0 else 0.0
            if depth == max_depth or c < 2 * min_leaf:
                continue
            # split score sl^2/nl + sr^2/nr must beat the parent's tot^2/c
            best_gain = tot * tot * inv[c] + 1e-12 * totsq
            best_f = -1
            best_thr = 0.0
            for f in range(d):
                sl = 0.0
                for i in range(lo, lo + min_leaf - 1):
                    sl += tg[f, i]
                for i in range(lo + min_leaf - 1, hi - min_leaf):
                    sl += tg[f, i]
                    v = vals[f, i + 1]
                    prev = vals[f, i]
                    if v > prev:
                        nl = i + 1 - lo
                        sr = tot - sl
                        gain = sl * sl * inv[nl] + sr * sr * inv[c - nl]
                        if gain > best_gain:
                            thr = 0.5 * (prev + v)
                            if thr >= v:
                                thr = prev
                            best_gain = gain
                            best_f = f
                            best_thr = thr
            if best_f < 0:
                continue
            feature[node] = best_f
            threshold[node] = best_thr
            left[node] = n_nodes
            right[node] = n_nodes + 1
            nxt[n_next] = n_nodes
            nxt[n_next + 1] = n_nodes + 1
            n_next += 2
            n_nodes += 2
            # stable partition of every feature's segment
            nl = 0
            for i in range(lo, hi):
                r = idx[best_f, i]
                go_left[r] = X[r, best_f] <= best_thr
                nl += go_left[r]
            seg_lo[n_nodes - 2] = lo
            seg_hi[n_nodes - 2] = lo + nl
            seg_lo[n_nodes - 1] = lo + nl
            seg_hi[n_nodes - 1] = hi
            for f in range(d):
                w = lo
                k = 0
                for i in range(lo, hi):
                    # branchless: write both destinations, advance one
                    r = idx[f, i]
                    v = vals[f, i]
                    t = tg[f, i]
                    flag = go_left[r]
                    idx[f, w] = r
                    vals[f, w] = v
                    tg[f, w] = t
                    tmp_i[k] = r
                    tmp_v[k] = v
                    tmp_t[k] = t
                    w += flag
                    k += 1 - flag
                for i in range(k):
                    idx[f, w + i] = tmp_i[i]
                    vals[f, w + i] = tmp_v[i]
                    tg[f, w + i] = tmp_t[i]
        for s in range(n_next):
            front[s] = nxt[s]
        n_front = n_next
        if n_front == 0:
            break

    # leaf segments are never touched after their creation
    leaf_a = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] leaf = leaf_a
    for node in range(n_nodes):
        if feature[node] < 0:
            for i in range(seg_lo[node], seg_hi[node]):
                leaf[idx[0, i]] = node

    return (feature_a[:n_nodes].copy(), threshold_a[:n_nodes].copy(), left_a[:n_nodes].copy(),
            right_a[:n_nodes].copy(), value_a[:n_nodes].copy(), count_a[:n_nodes].copy(), leaf_a)


def predict_forest(const double[:, ::1] X, const cnp.int64_t[::1] feature,
                   const double[::1] threshold, const cnp.int64_t[::1] left,
                   const cnp.int64_t[::1] right, const double[::1] value,
                   const cnp.int64_t[::1] offsets, double base, double scale):
    """base + scale * sum_m h_m(x); tree m occupies nodes offsets[m]:offsets[m+1]."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t n_trees = offsets.shape[0] - 1
    cdef Py_ssize_t i, m, off, node
    out_a = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_a
    cdef double acc
    for i in range(n):
        acc = base
        for m in range(n_trees):
            off = offsets[m]
            node = 0
            while feature[off + node] >= 0:
                if X[i, feature[off + node]] <= threshold[off + node]:
                    node = left[off + node]
                else:
                    node = right[off + node]
            acc += scale * value[off + node]
        out[i] = acc
    return out_a


cdef inline double _sigmoid(double z) nogil:
    cdef double e
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


cdef double _accumulate(const double[:, ::1] Xs, const cnp.int64_t[::1] idx, Py_ssize_t lo,
                        Py_ssize_t hi, int role, int kind, double alpha, double n_ref,
                        double n_test, double clip, const double[:, ::1] W1,
                        const double[::1] b1, const double[::1] w2, double b2,
                        double[:, ::1] gW1, double[::1] gb1, double[::1] gw2, double[::1] gb2,
                        double[::1] h) nogil:
    """Add one batch side's loss gradient into g*; return its loss contribution.

    role 0 = reference rows (label 0), 1 = test rows (label 1).
    """
    cdef Py_ssize_t H = W1.shape[0]
    cdef Py_ssize_t D = W1.shape[1]
    cdef Py_ssize_t q, j, a, r
    cdef double pre, out, g, p, pc, dpre, loss = 0.0
    for q in range(lo, hi):
        r = idx[q]
        out = b2
        for j in range(H):
            pre = b1[j]
            for a in range(D):
                pre += W1[j, a] * Xs[r, a]
            h[j] = tanh(pre)
            out += w2[j] * h[j]
        if kind == 0:
            if role == 0:
                loss += (1.0 - alpha) / (2.0 * n_ref) * out * out
                g = (1.0 - alpha) * out / n_ref
            else:
                loss += alpha / (2.0 * n_test) * out * out - out / n_test
                g = (alpha * out - 1.0) / n_test
        else:
            p = _sigmoid(out)
            pc = p
            if pc < clip:
                pc = clip
            elif pc > 1.0 - clip:
                pc = 1.0 - clip
            if role == 0:
                loss += -_log(1.0 - pc) / (n_ref + n_test)
                g = p / (n_ref + n_test)
            else:
                loss += -_log(pc) / (n_ref + n_test)
                g = (p - 1.0) / (n_ref + n_test)
            if p != pc:
                g = 0.0
        gb2[0] += g
        for j in range(H):
            gw2[j] += g * h[j]
            dpre = g * w2[j] * (1.0 - h[j] * h[j])
            gb1[j] += dpre
            for a in range(D):
                gW1[j, a] += dpre * Xs[r, a]
    return loss



def train_mlp(const double[:, ::1] Xr, const double[:, ::1] Xt,
              const cnp.int64_t[::1] ridx, const cnp.int64_t[::1] tidx,
              const cnp.int64_t[::1] bounds, int steps_per_epoch,
              double[:, ::1] W1, double[::1] b1, double[::1] w2, double[::1] b2,
              int kind, double alpha, double lr, double beta1, double beta2, double eps,
              double clip):
    """Mini-batch Adam on the RuLSIF (kind 0) or BCE (kind 1) loss, in place.

    Step s uses reference rows ridx[bounds[s]:bounds[s+1]] and test rows
    tidx[bounds[s]:bounds[s+1]]. Returns the mean batch loss of every epoch.
    """
    cdef Py_ssize_t H = W1.shape[0]
    cdef Py_ssize_t D = W1.shape[1]
    cdef Py_ssize_t n_steps = bounds.shape[0] - 1
    cdef Py_ssize_t n_epochs = n_steps // steps_per_epoch
    cdef Py_ssize_t s, j, a, lo, hi
    cdef double bsz, loss, c1, c2, step_t = 0.0

    gW1_a = np.zeros((H, D))
    cdef double[:, ::1] gW1 = gW1_a
    cdef double[::1] gb1 = np.zeros(H)
    cdef double[::1] gw2 = np.zeros(H)
    cdef double[::1] gb2 = np.zeros(1)
    cdef double[:, ::1] mW1 = np.zeros((H, D))
    cdef double[:, ::1] vW1 = np.zeros((H, D))
    cdef double[::1] mb1 = np.zeros(H)
    cdef double[::1] vb1 = np.zeros(H)
    cdef double[::1] mw2 = np.zeros(H)
    cdef double[::1] vw2 = np.zeros(H)
    cdef double[::1] mb2 = np.zeros(1)
    cdef double[::1] vb2 = np.zeros(1)
    cdef double[::1] h = np.zeros(H)
    losses_a = np.zeros(n_epochs)
    cdef double[::1] losses = losses_a

    for s in range(n_steps):
        lo = bounds[s]
        hi = bounds[s + 1]
        bsz = <double>(hi - lo)
        gW1[:, :] = 0.0
        gb1[:] = 0.0
        gw2[:] = 0.0
        gb2[0] = 0.0
        loss = _accumulate(Xr, ridx, lo, hi, 0, kind, alpha, bsz, bsz, clip,
                           W1, b1, w2, b2[0], gW1, gb1, gw2, gb2, h)
        loss += _accumulate(Xt, tidx, lo, hi, 1, kind, alpha, bsz, bsz, clip,
                            W1, b1, w2, b2[0], gW1, gb1, gw2, gb2, h)
        losses[s // steps_per_epoch] += loss / steps_per_epoch

        step_t += 1.0
        c1 = 1.0 - beta1 ** step_t
        c2 = 1.0 - beta2 ** step_t
        for j in range(H):
            for a in range(D):
                mW1[j, a] = beta1 * mW1[j, a] + (1.0 - beta1) * gW1[j, a]
                vW1[j, a] = beta2 * vW1[j, a] + (1.0 - beta2) * gW1[j, a] * gW1[j, a]
                W1[j, a] -= lr * (mW1[j, a] / c1) / (sqrt(vW1[j, a] / c2) + eps)
            mb1[j] = beta1 * mb1[j] + (1.0 - beta1) * gb1[j]
            vb1[j] = beta2 * vb1[j] + (1.0 - beta2) * gb1[j] * gb1[j]
            b1[j] -= lr * (mb1[j] / c1) / (sqrt(vb1[j] / c2) + eps)
            mw2[j] = beta1 * mw2[j] + (1.0 - beta1) * gw2[j]
            vw2[j] = beta2 * vw2[j] + (1.0 - beta2) * gw2[j] * gw2[j]
            w2[j] -= lr * (mw2[j] / c1) / (sqrt(vw2[j] / c2) + eps)
        mb2[0] = beta1 * mb2[0] + (1.0 - beta1) * gb2[0]
        vb2[0] = beta2 * vb2[0] + (1.0 - beta2) * gb2[0] * gb2[0]
        b2[0] -= lr * (mb2[0] / c1) / (sqrt(vb2[0] / c2) + eps)

    return losses_a
