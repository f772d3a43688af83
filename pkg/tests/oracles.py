"""Independent reference implementations shared by the test modules."""

import itertools

import numpy as np

from chseg.tcn import TCN, TCNConfig, loss_from_logits


def tiny_config(task="vad", **kw):
    base = dict(bottleneck_dim=6, hidden_dim=8, dtype="float64")
    base.update(kw)
    return TCNConfig.for_task(task, 4, **base)


def finite_difference_check(task, seed=0, n=2, t=12, eps=1e-6, rtol=1e-3, atol=1e-8):
    """Compare every analytic gradient entry with central differences.

    Returns ``(n_checked, n_failed, worst_relative_error)``.
    """
    rng = np.random.default_rng(seed)
    net = TCN(tiny_config(task), seed=seed)
    # perturb the norm parameters so their gradients are not trivially symmetric
    for k, w in net.weights.items():
        if k.endswith((".gamma", ".beta", ".b")):
            w += rng.normal(0, 0.1, w.shape)
    x = rng.standard_normal((n, t, 4))
    y = rng.integers(0, 2, (n, t)) if task != "scd" else rng.random((n, t))

    def value():
        return loss_from_logits(net.logits(x), y, task, net.config.head)[0]

    _, grads = net.loss_and_grads(x, y, task)
    checked = failed = 0
    worst = 0.0
    for name, w in net.weights.items():
        flat = w.reshape(-1)
        g = grads[name].reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            up = value()
            flat[i] = old - eps
            down = value()
            flat[i] = old
            fd = (up - down) / (2 * eps)
            err = abs(fd - g[i])
            scale = max(abs(fd), abs(g[i]))
            checked += 1
            if err > rtol * scale + atol:
                failed += 1
            if scale > atol:
                worst = max(worst, err / scale)
    return checked, failed, worst


def brute_force_ap(scores, labels):
    """AP by enumerating every score threshold: sum of precision * recall increment."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    n_pos = labels.sum()
    order = np.argsort(-scores, kind="stable")
    ap, prev_recall = 0.0, 0.0
    for k in range(1, len(scores) + 1):
        top = order[:k]
        tp = labels[top].sum()
        recall = tp / n_pos
        precision = tp / k
        ap += precision * (recall - prev_recall)
        prev_recall = recall
    return ap


def brute_force_purity_coverage(hyp_labels, ref_labels):
    """Purity and coverage from explicit segment-by-segment overlap counting."""
    hyp_labels = list(hyp_labels)
    ref_labels = list(ref_labels)
    n = len(hyp_labels)

    def runs(labels):
        out, start = [], 0
        for i in range(1, n + 1):
            if i == n or labels[i] != labels[i - 1]:
                out.append(set(range(start, i)))
                start = i
        return out

    hyp, ref = runs(hyp_labels), runs(ref_labels)
    purity = sum(max(len(h & r) for r in ref) for h in hyp) / n
    coverage = sum(max(len(r & h) for h in hyp) for r in ref) / n
    return 100 * purity, 100 * coverage


def best_f1_threshold(scores, labels, grid):
    best_t, best = None, -1.0
    for th in grid:
        pred = scores >= th
        tp = int(np.sum(pred & labels))
        fp = int(np.sum(pred & ~labels))
        fn = int(np.sum(~pred & labels))
        f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
        if f1 > best + 1e-12:
            best_t, best = th, f1
    return best_t, best


def all_binary(n):
    return (np.array(bits, dtype=bool) for bits in itertools.product([0, 1], repeat=n))
