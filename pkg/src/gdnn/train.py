"""Training: reverse-mode gradients, Adam, and the binary product task.

Gradients are accumulated by hand through the fixed latent dataflow (the
forward recursion has a static graph, so no general autodiff machinery is
needed). The experiment trains the pair-product classifier of the m-bit
one-hot multiplication task and reports cross-entropy metrics per seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from gdnn.admissibility import ArchitectureSpec
from gdnn.group_core import GroupElement, SubgroupPair, Subgroup, binprod_group, named_group
from gdnn.model import GDNNModel, LatentWeights, ShapeMismatch, forward
from gdnn.reps import LayerRep, irrep, tunnel, unravel


class TrainError(Exception):
    pass


class BadDimension(TrainError):
    pass


@dataclass
class TrainConfig:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr_decay_per_step: float = 0.99
    batch_size: int = 64
    epochs: int = 5
    seed: int = 0
    split_fraction: float = 0.2
    stratified: bool = True

    def __post_init__(self):
        if self.lr <= 0:
            raise TrainError("lr must be positive")
        if not 0 < self.split_fraction < 1:
            raise TrainError("split_fraction must be in (0, 1)")


def bce_with_logits(logits, labels):
    """Mean binary cross-entropy on raw logits; labels in {0, 1}."""
    z = np.asarray(logits, dtype=np.float64).reshape(-1)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    # log(1 + exp(z)) - y z, computed stably
    loss = np.maximum(z, 0.0) - y * z + np.log1p(np.exp(-np.abs(z)))
    return float(loss.mean())


def bce_grad(logits, labels):
    z = np.asarray(logits, dtype=np.float64).reshape(-1)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    return (1.0 / (1.0 + np.exp(-z)) - y) / z.size


def gradients(model: GDNNModel, weights: LatentWeights, batch_x, batch_y):
    """Exact reverse-mode gradients of the mean BCE-with-logits loss.

    Returns (loss, grads) with grads congruent to the weight structure.
    The ReLU subgradient at exactly zero is zero.
    """
    xs = np.atleast_2d(np.asarray(batch_x, dtype=np.float64))
    if xs.shape[0] == 0:
        raise TrainError("batch must be nonempty")
    out, trace = forward(model, weights, xs, mode="train")
    if out.shape[1] != 1:
        raise ShapeMismatch("training expects a single output channel")
    loss = bce_with_logits(out, batch_y)
    dz = bce_grad(out, batch_y)[:, None]  # (B, 1)

    grads = model.zero_weights()
    d = model.depth
    denses = {i: model.dense_v(weights, i) for i in range(1, d + 1)}

    # output layer: out = h_d V_d^T + b_d
    h_d = trace.h_blocks[-1]
    dV = dz.T @ h_d
    _scatter_v_grad(model, grads, d, dV)
    grads.biases[d] += model.bias_grad_from_dense(dz.sum(axis=0), d)
    dh = dz @ denses[d]  # (B, N_d)

    for i in range(d - 1, 0, -1):
        top_width = model.block_width[i]
        dtop = dh[:, :top_width]
        dh_rest = dh[:, top_width:]
        mask = trace.relu_masks[i - 1]
        # top = relu(g + b) - g/2
        dpre = dtop * mask
        dg = dpre - 0.5 * dtop
        grads.biases[i] += model.bias_grad_from_dense(dpre.sum(axis=0), i)
        h_i = trace.h_blocks[i - 1]
        dV = dg.T @ h_i
        _scatter_v_grad(model, grads, i, dV)
        dh = dh_rest + dg @ denses[i]
    return loss, grads


def _scatter_v_grad(model, grads, i, dV):
    col = 0
    for j in range(i, 0, -1):
        w = model.block_width[j - 1]
        grads.coeffs[(i, j)] += model.coeff_grad_from_dense(dV[:, col : col + w], i, j)
        col += w


@dataclass
class AdamState:
    m: dict
    v: dict
    step: int = 0

    @staticmethod
    def for_weights(weights: LatentWeights):
        zeros = weights.copy()
        for k in zeros.coeffs:
            zeros.coeffs[k][:] = 0.0
        for k in zeros.biases:
            zeros.biases[k][:] = 0.0
        return AdamState(m=zeros, v=zeros.copy())


def adam_step(state: AdamState, weights: LatentWeights, grads: LatentWeights, config: TrainConfig):
    """One Adam update in place; effective lr decays by the configured factor."""
    state.step += 1
    t = state.step
    lr_t = config.lr * (config.lr_decay_per_step ** (t - 1))
    b1, b2 = config.beta1, config.beta2
    for group in ("coeffs", "biases"):
        ws = getattr(weights, group)
        gs = getattr(grads, group)
        ms = getattr(state.m, group)
        vs = getattr(state.v, group)
        for key in ws:
            g = gs[key]
            ms[key] = b1 * ms[key] + (1 - b1) * g
            vs[key] = b2 * vs[key] + (1 - b2) * g * g
            m_hat = ms[key] / (1 - b1**t)
            v_hat = vs[key] / (1 - b2**t)
            ws[key] -= lr_t * m_hat / (np.sqrt(v_hat) + config.eps)
    return weights


# -- the binary product task -------------------------------------------------


@dataclass
class BinProdTask:
    m: int
    inputs: np.ndarray  # (2^(m/2), m) rows of pairwise one-hot bits
    values: np.ndarray  # product in {-1, +1}
    labels: np.ndarray  # {0, 1}

    @staticmethod
    def build(m):
        if m < 8 or m & (m - 1):
            raise BadDimension(f"m must be a power of 2, m >= 8; got {m}")
        half = m // 2
        rows = []
        vals = []
        for bits in range(2**half):
            x = np.zeros(m)
            v = 1
            for i in range(half):
                b = (bits >> i) & 1
                # b = 1 encodes x_{2i} = 1 (difference +1), else x_{2i+1} = 1
                if b:
                    x[2 * i] = 1.0
                    v *= 1
                else:
                    x[2 * i + 1] = 1.0
                    v *= -1
            rows.append(x)
            vals.append(v)
        inputs = np.array(rows)
        values = np.array(vals, dtype=np.int64)
        labels = ((values + 1) // 2).astype(np.float64)
        return BinProdTask(m, inputs, values, labels)

    def stratified_split(self, fraction, seed):
        rng = np.random.default_rng(seed)
        train_idx = []
        for cls in (0.0, 1.0):
            idx = np.flatnonzero(self.labels == cls)
            rng.shuffle(idx)
            take = int(round(fraction * idx.size))
            train_idx.extend(idx[:take])
        train_idx = np.sort(np.array(train_idx))
        mask = np.zeros(self.labels.size, dtype=bool)
        mask[train_idx] = True
        return train_idx, np.flatnonzero(~mask)


def binprod_architectures(m):
    """The pair-product architectures: type2 per the recursive construction,
    type1 by tunneling, unraveled by unraveling; all end in the trivial rep.

    Layer-1 subgroups come from stabilizers of v_j = e_{4j-3} - e_{4j-2} +
    e_{4j-1} - e_{4j}; deeper K's are intersections of consecutive H's and
    deeper H's add the joint complement.
    """
    G = named_group(f"BinProd({m})")
    d = _log2(m)
    member_all = set(range(G.order))

    def stab(vec):
        out = []
        for gi in range(G.order):
            el = G.elements[gi]
            if el.apply(vec) == vec:
                out.append(gi)
        return Subgroup._trusted(G, out)

    def stab_pm(vec):
        out = []
        neg = tuple(-x for x in vec)
        for gi in range(G.order):
            el = G.elements[gi]
            img = el.apply(vec)
            if img == vec or img == neg:
                out.append(gi)
        return Subgroup._trusted(G, out)

    hks = []
    level = []
    for j in range(m // 4):
        full = [0] * m
        full[4 * j], full[4 * j + 1], full[4 * j + 2], full[4 * j + 3] = 1, -1, 1, -1
        K = stab(tuple(full))
        H = stab_pm(tuple(full))
        level.append((H, K))
    hks.append(level)
    for i in range(1, d - 1):
        prev = hks[-1]
        level = []
        for j in range(len(prev) // 2):
            H1 = set(prev[2 * j][0].members)
            H2 = set(prev[2 * j + 1][0].members)
            K = H1 & H2
            H = K | ((member_all - H1) & (member_all - H2))
            level.append((Subgroup._trusted(G, sorted(H)), Subgroup._trusted(G, sorted(K))))
        hks.append(level)

    trivial_layer = LayerRep([(irrep(SubgroupPair(G.full_subgroup(), G.full_subgroup())), 1)])

    def build(transform):
        layers = []
        for i, level in enumerate(hks):
            mult = 2 if i == d - 2 else 1
            merged = {}  # identical pairs collapse into multiplicities
            order = []
            for H, K in level:
                rep = transform(irrep(SubgroupPair(H, K)))
                key = rep.pair.key()
                if key in merged:
                    merged[key] = (merged[key][0], merged[key][1] + mult)
                else:
                    merged[key] = (rep, mult)
                    order.append(key)
            layers.append(LayerRep([merged[k] for k in order]))
        layers.append(trivial_layer)
        return ArchitectureSpec(G, layers)

    def unravel_single(rep):
        out = unravel(rep)
        if isinstance(out, LayerRep):
            raise TrainError("expected a type-2 irrep to unravel")
        return out

    return {
        "type2": build(lambda r: r),
        "type1": build(tunnel),
        "unraveled": build(unravel_single),
    }


def _log2(m):
    d = m.bit_length() - 1
    if 2**d != m:
        raise BadDimension(f"m must be a power of 2; got {m}")
    return d


def binprod_closed_form(model: GDNNModel):
    """Exact weights computing the pair product.

    Every layer's diagonal block is pinned by the weight vector of its lead
    row (the sum resp. difference pattern on one source pair-quadruple);
    equivariance forces the other rows, whatever sign convention the
    compiled realization uses. The second row of each two-dimensional block
    may come out negated relative to the textbook kernel, which leaves the
    computed function unchanged: relu(g) - g/2 = |g|/2 elementwise.
    """
    d = model.depth
    weights = model.zero_weights()
    for i in range(1, d):
        info = model.layer_info[i - 1]
        src_width = model.block_skeleton[i - 1] if i > 1 else model.group.degree
        targets = {}
        if i <= d - 2:
            for ci, (si, c, start, deg, typ) in enumerate(info.copies):
                lead = np.zeros(src_width)
                base = 4 * si
                lead[base : base + 4] = [1.0, -1.0, 1.0, -1.0]
                targets[start] = lead
        else:
            # penultimate layer: two copies of a scalar irrep, sum and diff rows
            (s0, c0, start0, _, _), (s1, c1, start1, _, _) = info.copies
            targets[start0] = np.array([1.0, -1.0, 1.0, -1.0])
            targets[start1] = np.array([1.0, -1.0, -1.0, 1.0])
        _fill_from_lead_rows(model, weights, i, i, targets)
    # final layer: free 1x2 block against the doubled trivial source
    out_basis = model.bases[(d, d)]
    final = np.array([[1.0, -1.0]])
    for b, mat in enumerate(out_basis.matrices):
        arr = np.array(mat, dtype=np.float64)
        nz = arr != 0
        vals = final[nz] * arr[nz]
        if vals.size and np.ptp(vals) <= 1e-12:
            weights.coeffs[(d, d)][b, 0, 0] = vals[0]
    return weights


def _fill_from_lead_rows(model, weights, i, j, lead_rows):
    """Set block (i, j) coefficients from prescribed rows; equivariance does
    the rest. ``lead_rows`` maps a row index to its target vector."""
    basis = model.bases[(i, j)]
    coef = weights.coeffs[(i, j)]
    for b, mat in enumerate(basis.matrices):
        value = None
        for r, target in lead_rows.items():
            row = np.array(mat[r], dtype=np.float64)
            nz = row != 0
            if not nz.any():
                continue
            vals = target[nz] * row[nz]
            if np.ptp(vals) > 1e-12:
                raise TrainError(f"lead row is not constant on a basis component at ({i}, {j})")
            if value is not None and abs(value - vals[0]) > 1e-12:
                raise TrainError(f"conflicting lead rows at block ({i}, {j})")
            value = vals[0]
        if value is not None:
            coef[b, 0, 0] = value
    # confirm the lead rows are reproduced exactly
    dense = model.dense_block(weights, i, j)
    for r, target in lead_rows.items():
        if np.max(np.abs(dense[r] - target)) > 1e-12:
            raise TrainError(f"lead row not reproduced at block ({i}, {j})")


def unravel_embedding(type2_model: GDNNModel, unraveled_model: GDNNModel, weights: LatentWeights):
    """Carry type-2 latent weights into the unraveled architecture.

    Rows double via the stacking [W; -W] of the doubled ordinary rep (with
    the coset relabeling identifying it with the (K, K) construction); source
    columns duplicate with weight 1/2 because both doubled coordinates carry
    the same post-ReLU value. The resulting network computes the identical
    function, bias-free.
    """
    from gdnn.reps import unravel_relabeling

    out = unraveled_model.zero_weights()
    d = type2_model.depth
    # per layer: sigma maps raw doubled indices (per copy) to the unraveled
    # model's positions inside that copy's block
    sigmas = []
    for li in range(d - 1):
        layer = type2_model.arch.layers[li]
        udla = unraveled_model.arch.layers[li]
        per_summand = []
        for (rep, mult), (urep, umult) in zip(layer.summands, udla.summands):
            if rep.type != 2:
                raise TrainError("embedding expects type-2 hidden summands")
            sigma, target = unravel_relabeling(rep)
            if target.pair.key() != urep.pair.key():
                raise TrainError("unraveled architecture does not match the doubling")
            per_summand.append(sigma)
        sigmas.append(per_summand)

    def doubled_rows(i):
        """(type2 copy row range, unraveled copy row start, sigma) per copy."""
        info2 = type2_model.layer_info[i - 1]
        infou = unraveled_model.layer_info[i - 1]
        pairs = []
        for (si, ci, start2, deg2, _), (_, _, startu, degu, _) in zip(info2.copies, infou.copies):
            pairs.append((start2, deg2, startu, sigmas[i - 1][si]))
        return pairs

    for i in range(1, d + 1):
        for j in range(1, i + 1):
            dense = type2_model.dense_block(weights, i, j)
            basis_u = unraveled_model.bases[(i, j)]
            target = np.zeros((basis_u.rows, basis_u.cols))
            # expand columns
            if j == 1:
                expanded = dense
            else:
                expanded = np.zeros((dense.shape[0], basis_u.cols))
                for s2, deg2, su, sigma in doubled_rows(j - 1):
                    for q in range(deg2):
                        col = dense[:, s2 + q]
                        expanded[:, su + sigma[q]] += 0.5 * col
                        expanded[:, su + sigma[deg2 + q]] += 0.5 * col
            # expand rows
            if i == d:
                target[:, :] = expanded
            else:
                for s2, deg2, su, sigma in doubled_rows(i):
                    for p in range(deg2):
                        target[su + sigma[p], :] += expanded[s2 + p, :]
                        target[su + sigma[deg2 + p], :] -= expanded[s2 + p, :]
            _project_dense(unraveled_model, out, i, j, target)
    return out


def _project_dense(model, weights, i, j, dense, tol=1e-9):
    basis = model.bases[(i, j)]
    coef = weights.coeffs[(i, j)]
    recon = np.zeros_like(dense)
    for b, mat in enumerate(basis.matrices):
        arr = np.array(mat, dtype=np.float64)
        nz = arr != 0
        vals = dense[nz] * arr[nz]
        if vals.size and np.ptp(vals) <= tol:
            coef[b, 0, 0] = vals[0]
            recon += coef[b, 0, 0] * arr
    if np.max(np.abs(recon - dense)) > tol:
        raise TrainError(f"doubled weights fall outside the unraveled span at ({i}, {j})")


@dataclass
class MetricsRow:
    architecture: str
    seed: int
    initial_train: float
    initial_val: float
    final_train: float
    final_val: float
    accuracy: float

    def as_csv(self):
        return (
            f"{self.architecture},{self.seed},{self.initial_train:.6f},{self.initial_val:.6f},"
            f"{self.final_train:.6f},{self.final_val:.6f},{self.accuracy:.4f}"
        )


def accuracy_of(logits, labels):
    pred = (np.asarray(logits).reshape(-1) > 0).astype(np.float64)
    return float((pred == np.asarray(labels).reshape(-1)).mean())


def train_binprod_once(model, task, config, seed, init=None, loss_tie_tol=1e-6):
    """Train one model on one split; returns a MetricsRow.

    Train and validation losses must agree (each class is one orbit on which
    an invariant network is constant), asserted at every evaluation.
    """
    train_idx, val_idx = task.stratified_split(config.split_fraction, seed)
    x_train, y_train = task.inputs[train_idx], task.labels[train_idx]
    x_val, y_val = task.inputs[val_idx], task.labels[val_idx]
    weights = init.copy() if init is not None else init_weights_for_experiment(model, seed)
    state = AdamState.for_weights(weights)

    def evaluate():
        out_t, _ = forward(model, weights, x_train)
        out_v, _ = forward(model, weights, x_val)
        lt = bce_with_logits(out_t, y_train)
        lv = bce_with_logits(out_v, y_val)
        if abs(lt - lv) > loss_tie_tol:
            raise TrainError(f"train/val loss mismatch: {lt} vs {lv}")
        return lt, lv, accuracy_of(np.concatenate([out_t.reshape(-1), out_v.reshape(-1)]),
                                   np.concatenate([y_train, y_val]))

    initial_train, initial_val, _ = evaluate()
    rng = np.random.default_rng(seed + 7919)
    for _ in range(config.epochs):
        order = rng.permutation(len(train_idx))
        for start in range(0, len(order), config.batch_size):
            sel = order[start : start + config.batch_size]
            loss, grads = gradients(model, weights, x_train[sel], y_train[sel])
            adam_step(state, weights, grads, config)
    final_train, final_val, acc = evaluate()
    return MetricsRow("", seed, initial_train, initial_val, final_train, final_val, acc), weights


def init_weights_for_experiment(model, seed):
    from gdnn.model import init_weights

    return init_weights(model, seed=seed, scheme="unit_normal")


def run_binprod_experiment(m=16, seeds=range(24), config=None, architectures=None, threads=None):
    """Train each architecture per seed; returns list of MetricsRow.

    The unraveled architecture is run twice: from its own random init and
    from the type-2 initialization carried through the doubling embedding.
    Runs are independent, so they may fan out over a bounded thread pool;
    results keep submission order either way.
    """
    config = config or TrainConfig()
    archs = binprod_architectures(m)
    task = BinProdTask.build(m)
    models = {}
    wanted = architectures or ["type2", "type1", "unraveled", "unraveled-type2init"]
    for name in wanted:
        base = "unraveled" if name.startswith("unraveled") else name
        if base not in models:
            # type1/unraveled are deliberately degenerate baselines
            models[base] = GDNNModel(archs[base], strict=(base == "type2"))
    jobs = []
    for name in wanted:
        base = "unraveled" if name.startswith("unraveled") else name
        model = models[base]
        for seed in seeds:
            init = None
            if name == "unraveled-type2init":
                t2 = models.get("type2") or GDNNModel(archs["type2"])
                models["type2"] = t2
                w2 = init_weights_for_experiment(t2, seed)
                init = unravel_embedding(t2, model, w2)
            jobs.append((name, model, seed, init))

    def run(job):
        name, model, seed, init = job
        row, _ = train_binprod_once(model, task, config, seed, init=init)
        row.architecture = name
        return row

    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, jobs))
    else:
        rows = [run(job) for job in jobs]
    return rows


def metrics_to_csv(rows):
    lines = ["architecture,seed,initial_train,initial_val,final_train,final_val,accuracy"]
    lines.extend(r.as_csv() for r in rows)
    return "\n".join(lines) + "\n"


def summary_to_csv(rows):
    """One aggregated row per architecture, mean and std across seeds."""
    agg = summarize(rows)
    cols = ["initial_train", "initial_val", "final_train", "final_val", "accuracy"]
    header = "architecture," + ",".join(f"{c}_mean,{c}_std" for c in cols) + ",seeds"
    lines = [header]
    for name in sorted(agg):
        stats = agg[name]
        cells = [name]
        for c in cols:
            mean, std = stats[c]
            cells.append(f"{mean:.6f}")
            cells.append(f"{std:.6f}")
        cells.append(str(stats["seeds"]))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def summarize(rows):
    """Aggregate mean and standard deviation across seeds per architecture."""
    by_arch = {}
    for r in rows:
        by_arch.setdefault(r.architecture, []).append(r)
    out = {}
    for name, group in by_arch.items():
        def ms(attr):
            vals = np.array([getattr(r, attr) for r in group])
            return float(vals.mean()), float(vals.std())

        out[name] = {
            "initial_train": ms("initial_train"),
            "initial_val": ms("initial_val"),
            "final_train": ms("final_train"),
            "final_val": ms("final_val"),
            "accuracy": ms("accuracy"),
            "seeds": len(group),
        }
    return out
