"""Independent reference computations used by the test-suite.

Nothing here imports the code under test except where noted; each function
recomputes a quantity the slow, obvious way.
"""
from __future__ import annotations

import math

import numpy as np


def central_diff(f, arrays, eps=1e-5):
    """Central finite-difference gradient of scalar ``f()`` w.r.t. each array (mutated in place)."""
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = arr[idx]
            arr[idx] = old + eps
            up = f()
            arr[idx] = old - eps
            down = f()
            arr[idx] = old
            g[idx] = (up - down) / (2 * eps)
        grads.append(g)
    return grads


def rel_error(a, b, floor=1e-6):
    """Norm-wise relative error; gradients smaller than ``floor`` count as zero
    (central differences at step 1e-5 carry ~1e-10 of noise)."""
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return float(np.linalg.norm(a - b) / scale)


def conv1d_loop(x, kernels, bias):
    n, t, c = x.shape
    f, k, _ = kernels.shape
    out = np.zeros((n, t - k + 1, f))
    for a in range(n):
        for s in range(t - k + 1):
            for q in range(f):
                acc = bias[q]
                for j in range(k):
                    for ch in range(c):
                        acc += x[a, s + j, ch] * kernels[q, j, ch]
                out[a, s, q] = acc
    return out


def maxpool_loop(x, pool):
    n, t, c = x.shape
    t_out = -(-t // pool)
    out = np.zeros((n, t_out, c))
    for a in range(n):
        for w in range(t_out):
            for ch in range(c):
                best = -math.inf
                for s in range(w * pool, min(w * pool + pool, t)):
                    if x[a, s, ch] > best:
                        best = x[a, s, ch]
                out[a, w, ch] = best
    return out


def _sig(v):
    return 1.0 / (1.0 + math.exp(-v))


def lstm_step_scalar(x, h, c, weights, biases):
    """Element-by-element LSTM step over plain Python floats."""
    n, hidden = len(h), len(h[0])
    out_h = [[0.0] * hidden for _ in range(n)]
    out_c = [[0.0] * hidden for _ in range(n)]
    for a in range(n):
        z = list(h[a]) + list(x[a])
        for u in range(hidden):
            pre = []
            for w, b in zip(weights, biases):
                s = b[u]
                for j, zj in enumerate(z):
                    s += zj * w[j][u]
                pre.append(s)
            i_g, f_g, o_g = _sig(pre[0]), _sig(pre[1]), _sig(pre[2])
            cand = math.tanh(pre[3])
            cc = f_g * c[a][u] + i_g * cand
            out_c[a][u] = cc
            out_h[a][u] = o_g * math.tanh(cc)
    return np.array(out_h), np.array(out_c)


def weighted_metrics_oracle(cm):
    """Support-weighted precision/recall/F1 from a confusion matrix, by explicit loops."""
    cm = [list(map(int, row)) for row in cm]
    size = len(cm)
    total = sum(sum(r) for r in cm)
    per = []
    for k in range(size):
        tp = cm[k][k]
        fn = sum(cm[k]) - tp
        fp = sum(cm[r][k] for r in range(size)) - tp
        pre = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * pre * rec / (pre + rec) if pre + rec else 0.0
        per.append((pre, rec, f1, tp + fn))
    acc = sum(cm[k][k] for k in range(size)) / total
    wp = sum(p * s for p, _, _, s in per) / total
    wr = sum(r * s for _, r, _, s in per) / total
    wf = sum(f * s for _, _, f, s in per) / total
    return acc, wp, wr, wf, per


def welch_p_mpmath(a, b, dps=50):
    """Two-sided Welch p-value by direct quadrature of the Student-t density."""
    import mpmath as mp

    mp.mp.dps = dps
    a = [mp.mpf(v) for v in a]
    b = [mp.mpf(v) for v in b]
    na, nb = len(a), len(b)
    ma, mb = sum(a) / na, sum(b) / nb
    va = sum((v - ma) ** 2 for v in a) / (na - 1)
    vb = sum((v - mb) ** 2 for v in b) / (nb - 1)
    se2 = va / na + vb / nb
    t = (ma - mb) / mp.sqrt(se2)
    df = se2 ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    dens = lambda x: (mp.gamma((df + 1) / 2) / (mp.sqrt(df * mp.pi) * mp.gamma(df / 2))
                      * (1 + x * x / df) ** (-(df + 1) / 2))
    tail = mp.quad(dens, [abs(t), mp.inf])
    return float(t), float(2 * tail), float(df)


def _gini_py(counts):
    total = sum(counts)
    return 1.0 - sum((c / total) ** 2 for c in counts)


def gini_greedy_tree(rows, labels, depth, n_classes=2):
    """Greedy Gini tree by explicit enumeration of every (feature, threshold).

    Returns a predict function. Loops only; shares no code with the package.
    """
    def majority(ls):
        counts = [ls.count(k) for k in range(n_classes)]
        return counts.index(max(counts))

    def grow(idx, d):
        ls = [labels[i] for i in idx]
        if d == 0 or len(set(ls)) <= 1 or len(idx) < 2:
            return ("leaf", majority(ls))
        best = None
        for f in range(len(rows[0])):
            vals = sorted(set(rows[i][f] for i in idx))
            for a, b in zip(vals, vals[1:]):
                thr = (a + b) / 2
                left = [i for i in idx if rows[i][f] <= thr]
                right = [i for i in idx if rows[i][f] > thr]
                score = sum(len(part) / len(idx) * _gini_py(
                    [[labels[i] for i in part].count(k) for k in range(n_classes)])
                    for part in (left, right))
                if best is None or score < best[0] - 1e-12:
                    best = (score, f, thr, left, right)
        if best is None:
            return ("leaf", majority(ls))
        _, f, thr, left, right = best
        return ("split", f, thr, grow(left, d - 1), grow(right, d - 1))

    tree = grow(list(range(len(rows))), depth)

    def predict(row):
        node = tree
        while node[0] == "split":
            node = node[3] if row[node[1]] <= node[2] else node[4]
        return node[1]

    return predict


def best_accuracy_depth2(x, y):
    """Highest training accuracy any depth-2 axis-aligned tree can reach."""
    n, d = x.shape

    def best_stump(idx):
        ys = y[idx]
        best = np.bincount(ys).max() if idx.size else 0
        for f in range(d):
            for thr in np.unique(x[idx, f]):
                left = ys[x[idx, f] <= thr]
                right = ys[x[idx, f] > thr]
                acc = (np.bincount(left).max() if left.size else 0) + \
                      (np.bincount(right).max() if right.size else 0)
                best = max(best, acc)
        return best

    everything = np.arange(n)
    best = best_stump(everything)
    for f in range(d):
        for thr in np.unique(x[:, f]):
            mask = x[:, f] <= thr
            best = max(best, best_stump(everything[mask]) + best_stump(everything[~mask]))
    return best / n


def l1_hinge_grid_min(x, ypm, c, span=4.0, step=0.05, refine=4):
    """Minimum of ||w||_1 + C * sum hinge over (w1, w2, b) by nested grid search."""
    center = np.zeros(3)
    half = span
    best = None
    for _ in range(refine + 1):
        axis = np.arange(-half, half + step / 2, step)
        w1, w2, b = np.meshgrid(center[0] + axis, center[1] + axis, center[2] + axis,
                                indexing="ij")
        params = np.stack([w1.ravel(), w2.ravel(), b.ravel()], axis=1)
        obj = np.abs(params[:, :2]).sum(axis=1)
        for xi, yi in zip(x, ypm):
            obj = obj + c * np.maximum(0.0, 1.0 - yi * (params[:, :2] @ xi + params[:, 2]))
        i = int(np.argmin(obj))
        if best is None or obj[i] < best:
            best = float(obj[i])
            center = params[i]
        half, step = step * 4, step / 8
    return best
