"""Pure-numpy versions of the kernels in ``_core.pyx``.

Used when the compiled extension is missing or ``DRCPD_PURE_PYTHON=1``.
Trees come out identical to the compiled builder (same split scan order,
same sequential accumulation); MLP training agrees to rounding.
"""

import numpy as np


def _seq_sum(a):
    # left-to-right accumulation, matching the compiled loops bit for bit
    return float(np.cumsum(a)[-1]) if a.size else 0.0


def build_tree(X, order, sorted_vals, targets, in_sample, max_depth, min_leaf):
    n, d = X.shape
    cap = (1 << (max_depth + 1)) - 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    count = np.zeros(cap, dtype=np.int64)

    inv = np.zeros(n + 1)
    inv[1:] = 1.0 / np.arange(1, n + 1)
    row_node = np.where(np.asarray(in_sample, dtype=bool), 0, -1).astype(np.int64)
    leaf = np.full(n, -1, dtype=np.int64)
    front = [0]
    n_nodes = 1
    for depth in range(max_depth + 1):
        stats = {}
        o0 = order[0]
        nodes_o0 = row_node[o0]
        for node in front:
            members = o0[nodes_o0 == node]
            t = targets[members]
            cnt = members.size
            tot = _seq_sum(t)
            count[node] = cnt
            value[node] = tot / cnt if cnt > 0 else 0.0
            # [splittable, count, total, best_gain, best_feature, best_threshold]
            stats[node] = [depth < max_depth and cnt >= 2 * min_leaf, cnt, tot,
                           tot * tot * inv[cnt] + 1e-12 * _seq_sum(t * t), -1, 0.0]

        if depth < max_depth:
            for f in range(d):
                o = order[f]
                nodes_o = row_node[o]
                vals_f = sorted_vals[f]
                for node in front:
                    st = stats[node]
                    if not st[0]:
                        continue
                    mask = nodes_o == node
                    sel = o[mask]
                    vals = vals_f[mask]
                    c, tot = st[1], st[2]
                    csum = np.cumsum(targets[sel])
                    pos = np.arange(min_leaf, c - min_leaf + 1)
                    pos = pos[vals[pos] > vals[pos - 1]]
                    if pos.size == 0:
                        continue
                    sl = csum[pos - 1]
                    sr = tot - sl
                    gain = sl * sl * inv[pos] + sr * sr * inv[c - pos]
                    j = int(np.argmax(gain))
                    if gain[j] > st[3]:
                        lo, hi = vals[pos[j] - 1], vals[pos[j]]
                        thr = 0.5 * (lo + hi)
                        if thr >= hi:
                            thr = lo
                        st[3], st[4], st[5] = gain[j], f, thr

        nxt = []
        for node in front:
            st = stats[node]
            if st[4] >= 0:
                feature[node] = st[4]
                threshold[node] = st[5]
                left[node], right[node] = n_nodes, n_nodes + 1
                nxt += [n_nodes, n_nodes + 1]
                n_nodes += 2
        active = row_node >= 0
        idx = np.flatnonzero(active)
        nodes = row_node[idx]
        feats = feature[nodes]
        split = feats >= 0
        leaf[idx[~split]] = nodes[~split]
        go_left = np.zeros(idx.size, dtype=bool)
        go_left[split] = X[idx[split], feats[split]] <= threshold[nodes[split]]
        row_node[idx] = np.where(split, np.where(go_left, left[nodes], right[nodes]), -1)
        front = nxt
        if not front:
            break

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), count[:n_nodes].copy(), leaf)


def predict_forest(X, feature, threshold, left, right, value, offsets, base, scale):
    n = X.shape[0]
    out = np.full(n, float(base))
    rows = np.arange(n)
    for m in range(len(offsets) - 1):
        off = offsets[m]
        node = np.zeros(n, dtype=np.int64)
        while True:
            feat = feature[off + node]
            internal = feat >= 0
            if not internal.any():
                break
            go_left = X[rows, np.where(internal, feat, 0)] <= threshold[off + node]
            step = np.where(go_left, left[off + node], right[off + node])
            node = np.where(internal, step, node)
        out += scale * value[off + node]
    return out


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def mlp_forward(W1, b1, w2, b2, X):
    """Hidden activations and pre-sigmoid output for a batch."""
    hidden = np.tanh(X @ W1.T + b1)
    return hidden, hidden @ w2 + b2


def mlp_batch_grad(W1, b1, w2, b2, Xr, Xt, kind, alpha, clip=1e-7):
    """Loss and analytic gradients for one (reference, test) batch pair.

    kind 0: RuLSIF loss with linear output; kind 1: BCE with sigmoid output,
    reference rows labelled 0 and test rows 1, averaged over both batches.
    Returns ``(loss, gW1, gb1, gw2, gb2)``.
    """
    nr, nt = Xr.shape[0], Xt.shape[0]
    hr, outr = mlp_forward(W1, b1, w2, b2, Xr)
    ht, outt = mlp_forward(W1, b1, w2, b2, Xt)
    if kind == 0:
        loss = ((1 - alpha) / (2 * nr) * np.sum(outr * outr)
                + alpha / (2 * nt) * np.sum(outt * outt) - np.sum(outt) / nt)
        gr = (1 - alpha) * outr / nr
        gt = (alpha * outt - 1.0) / nt
    else:
        total = nr + nt
        pr, pt = _sigmoid(outr), _sigmoid(outt)
        pcr, pct = np.clip(pr, clip, 1 - clip), np.clip(pt, clip, 1 - clip)
        loss = (-np.sum(np.log(1 - pcr)) - np.sum(np.log(pct))) / total
        gr = np.where(pcr == pr, pr / total, 0.0)
        gt = np.where(pct == pt, (pt - 1.0) / total, 0.0)
    X = np.vstack([Xr, Xt])
    hidden = np.vstack([hr, ht])
    g = np.concatenate([gr, gt])
    dpre = g[:, None] * w2[None, :] * (1.0 - hidden * hidden)
    return float(loss), dpre.T @ X, dpre.sum(axis=0), hidden.T @ g, np.array([g.sum()])


def train_mlp(Xr, Xt, ridx, tidx, bounds, steps_per_epoch, W1, b1, w2, b2,
              kind, alpha, lr, beta1, beta2, eps, clip):
    params = [W1, b1, w2, b2]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    n_steps = len(bounds) - 1
    losses = np.zeros(n_steps // steps_per_epoch)
    for s in range(n_steps):
        lo, hi = bounds[s], bounds[s + 1]
        loss, *grads = mlp_batch_grad(W1, b1, w2, b2, Xr[ridx[lo:hi]], Xt[tidx[lo:hi]],
                                      kind, alpha, clip)
        losses[s // steps_per_epoch] += loss / steps_per_epoch
        c1 = 1.0 - beta1 ** (s + 1)
        c2 = 1.0 - beta2 ** (s + 1)
        for p, g, mp, vp in zip(params, grads, m, v):
            mp *= beta1
            mp += (1.0 - beta1) * g
            vp *= beta2
            vp += (1.0 - beta2) * g * g
            p -= lr * (mp / c1) / (np.sqrt(vp / c2) + eps)
    return losses
