"""Property audits bundled for the CLI: invariance, equivariance, rewrites.

Each check returns a pass flag and its worst observed deviation so failures
are diagnosable from the report alone.
"""

from __future__ import annotations

import numpy as np

from gdnn.model import (
    GDNNModel,
    apparent_weights,
    cpz_reparam_audit,
    forward,
    init_weights,
    invariance_deviation,
    naive_forward,
)


def run_all(arch, seed=0, n_inputs=20):
    model = GDNNModel(arch, strict=False)
    weights = init_weights(model, seed=seed)
    rng = np.random.default_rng(seed)
    xs = rng.normal(size=(n_inputs, model.block_width[0]))
    checks = _Checks()

    dev = invariance_deviation(model, weights, xs, generators_only=False)
    checks.append({"name": "invariance", "deviation": dev, "passed": dev <= 1e-9})

    ws = apparent_weights(model, weights)
    out1, _ = forward(model, weights, xs)
    out2 = naive_forward(ws, xs)
    dev = float(np.max(np.abs(out1 - out2)))
    checks.append({"name": "forward_consistency", "deviation": dev, "passed": dev <= 1e-8})

    # latent equivariance of materialized blocks, exact by construction
    worst = 0.0
    for i in range(1, model.depth + 1):
        layer = arch.layers[i - 1]
        for j in range(1, i + 1):
            V = model.dense_block(weights, i, j)
            for g in model.group.generator_indices:
                r_el = layer.evaluate(g)
                lhs = _act_rows(r_el, V, model.channel_counts[i])
                rhs = _act_cols_pi(model, arch, i, j, g, V)
                worst = max(worst, float(np.max(np.abs(lhs - rhs))) if V.size else 0.0)
    checks.append({"name": "latent_equivariance", "deviation": worst, "passed": worst == 0.0})

    # reparameterization invariance on a random draw per hidden layer
    worst = 0.0
    for layer_idx in range(1, model.depth):
        n = model.block_width[layer_idx]
        C = rng.uniform(0.5, 2.0, size=n)
        P = np.eye(n)[rng.permutation(n)]
        Z = rng.choice([-1.0, 1.0], size=n)
        worst = max(worst, cpz_reparam_audit(model, weights, layer_idx, C, P, Z, xs))
    checks.append({"name": "cpz_reparameterization", "deviation": worst, "passed": worst <= 1e-8})

    # gradient check on a few coordinates
    from gdnn.train import gradients, bce_with_logits

    if model.channel_counts[-1] == 1:
        ys = rng.integers(0, 2, size=n_inputs).astype(np.float64)
        loss, grads = gradients(model, weights, xs, ys)
        rel = _fd_check(model, weights, xs, ys, grads, rng, samples=20)
        checks.append({"name": "gradient_fd", "deviation": rel, "passed": rel <= 1e-5})

    return {"seed": seed, "checks": list(checks)}


class _Checks(list):
    def append(self, item):
        item["deviation"] = float(item["deviation"])
        item["passed"] = bool(item["passed"])
        super().append(item)


def _act_rows(el, V, k):
    n = el.degree
    out = np.empty_like(V)
    rows = V.reshape(n, k, -1)
    dst = np.empty_like(rows)
    for i in range(n):
        dst[el.perm[i]] = el.signs[i] * rows[i]
    return dst.reshape(V.shape)


def _act_cols_pi(model, arch, i, j, g, V):
    if j == 1:
        el = model.group.elements[g]
    else:
        from gdnn.group_core import GroupElement

        el = GroupElement(arch.layers[j - 2].evaluate(g).perm)
    k = model.channel_counts[j - 1]
    p = el.degree
    cols = V.reshape(V.shape[0], p, k)
    dst = np.empty_like(cols)
    # (V pi)[:, c] = pi.signs[c] * V[:, pi.perm[c]]
    for c in range(p):
        dst[:, c, :] = el.signs[c] * cols[:, el.perm[c], :]
    return dst.reshape(V.shape)


def _fd_check(model, weights, xs, ys, grads, rng, samples=20, h=1e-5):
    from gdnn.train import bce_with_logits
    from gdnn.model import forward as fwd

    worst = 0.0
    leaves = weights.flat()
    grad_leaves = dict(grads.flat())
    for name, arr in leaves:
        if arr.size == 0:
            continue
        garr = grad_leaves[name]
        for _ in range(max(1, samples // max(1, len(leaves)))):
            idx = tuple(rng.integers(0, s) for s in arr.shape)
            orig = arr[idx]
            arr[idx] = orig + h
            lp = bce_with_logits(fwd(model, weights, xs)[0], ys)
            arr[idx] = orig - h
            lm = bce_with_logits(fwd(model, weights, xs)[0], ys)
            arr[idx] = orig
            fd = (lp - lm) / (2 * h)
            g = garr[idx]
            denom = max(abs(fd), abs(g), 1e-8)
            worst = max(worst, abs(fd - g) / denom)
    return worst
