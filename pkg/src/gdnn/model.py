"""Compiled invariant networks: latent weights, forward pass, audits.

A model is compiled once from an architecture: every latent block (i, j)
gets an exact basis for rho^(i)(g) X = X pi^(j-1)(g), and the trainable
parameters are the per-basis coefficient matrices (output channels x input
channels) plus bias scalars on type-1 irrep copies. The forward pass is the
latent recursion

    h_1 = x,   g_i = V_i h_i,   h_{i+1} = [relu(g_i + b_i) - g_i / 2; h_i]

with output V_d h_d + b_d. Apparent weights W_i = V_i A_{i-1} are
reconstructed only for audits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from gdnn.admissibility import ArchitectureSpec, is_admissible
from gdnn.equivariant_basis import build_basis, verify_basis
from gdnn.group_core import GroupElement


class ModelError(Exception):
    pass


class NotAdmissible(ModelError):
    pass


class BasisEmpty(ModelError):
    pass


class ShapeMismatch(ModelError):
    pass


class NotEquivariant(ModelError):
    pass


class NotInSpan(ModelError):
    pass


class UnknownScheme(ModelError):
    pass


class InputRep:
    """The ambient representation pi^(0)(g) = g."""

    def __init__(self, group):
        self.group = group
        self.degree = group.degree

    def evaluate(self, g):
        if isinstance(g, GroupElement):
            return g
        return self.group.elements[g]


class UnsignedLayerRep:
    """The permutation factor pi of a layer's signed rep."""

    def __init__(self, layer_rep):
        self.layer = layer_rep
        self.degree = layer_rep.degree

    def evaluate(self, g):
        return GroupElement(self.layer.evaluate(g).perm)


@dataclass
class _LayerInfo:
    degree: int  # skeleton width (one channel)
    channels: int
    # per skeleton position: (summand index, copy index)
    position_owner: list
    # type-1 copies in order: list of (summand index, copy index)
    bias_slots: list
    # per copy: (summand index, copy index, start position, irrep degree, type)
    copies: list


class GDNNModel:
    """Architecture compiled to basis patterns and shape bookkeeping."""

    def __init__(self, arch: ArchitectureSpec, strict=True):
        report = is_admissible(arch)
        self.admissibility = report
        if strict and not report.admissible:
            raise NotAdmissible(f"architecture fails at layer/summand {report.failing}")
        self.arch = arch
        self.group = arch.group
        G = self.group
        d = arch.depth
        self.depth = d
        self.channel_counts = [arch.input_channels] + list(arch.channels)  # index 0 = input
        self.layer_info = []
        for li, layer in enumerate(arch.layers):
            owner = []
            copies = []
            slots = []
            pos = 0
            for si, (rep, mult) in enumerate(layer.summands):
                for c in range(mult):
                    copies.append((si, c, pos, rep.degree, rep.type))
                    if rep.type == 1:
                        slots.append((si, c))
                    owner.extend([(si, c)] * rep.degree)
                    pos += rep.degree
            self.layer_info.append(
                _LayerInfo(layer.degree, arch.channels[li], owner, slots, copies)
            )
        # block widths: block 0 = input, block j = output of layer j (j = 1..d-1)
        self.block_skeleton = [G.degree] + [arch.layers[j].degree for j in range(d - 1)]
        self.block_channels = [self.channel_counts[j] for j in range(d)]
        self.block_width = [s * c for s, c in zip(self.block_skeleton, self.block_channels)]
        self.input_rep = InputRep(G)
        self.bases = {}
        self.patterns = {}
        for i in range(1, d + 1):
            target = arch.layers[i - 1]
            nonzero = 0
            for j in range(1, i + 1):
                source = self.input_rep if j == 1 else UnsignedLayerRep(arch.layers[j - 2])
                basis = build_basis(target, source, G.generator_indices)
                if not verify_basis(basis, target, source, G):
                    raise ModelError(f"basis verification failed for block ({i}, {j})")
                self.bases[(i, j)] = basis
                self.patterns[(i, j)] = np.array(basis.matrices, dtype=np.float64).reshape(
                    len(basis), basis.rows, basis.cols
                ) if len(basis) else np.zeros((0, basis.rows, basis.cols))
                nonzero += len(basis)
            if nonzero == 0:
                raise BasisEmpty(f"layer {i} has no connection to any earlier block")

    # -- parameter structure -------------------------------------------------

    def zero_weights(self):
        coeffs = {}
        for (i, j), basis in self.bases.items():
            k_out = self.channel_counts[i]
            k_in = self.channel_counts[j - 1]
            coeffs[(i, j)] = np.zeros((len(basis), k_out, k_in))
        biases = {}
        for i in range(1, self.depth + 1):
            info = self.layer_info[i - 1]
            biases[i] = np.zeros((len(info.bias_slots), self.channel_counts[i]))
        return LatentWeights(coeffs, biases)

    def parameter_count(self):
        w = self.zero_weights()
        return sum(v.size for v in w.coeffs.values()) + sum(v.size for v in w.biases.values())

    def check_shapes(self, weights):
        ref = self.zero_weights()
        if set(ref.coeffs) != set(weights.coeffs) or set(ref.biases) != set(weights.biases):
            raise ShapeMismatch("weight structure does not match model")
        for key, v in ref.coeffs.items():
            if weights.coeffs[key].shape != v.shape:
                raise ShapeMismatch(f"coefficient block {key}: {weights.coeffs[key].shape} != {v.shape}")
        for key, v in ref.biases.items():
            if weights.biases[key].shape != v.shape:
                raise ShapeMismatch(f"bias block {key}: {weights.biases[key].shape} != {v.shape}")

    # -- materialization -----------------------------------------------------

    def dense_block(self, weights, i, j):
        """V^(i)_j as a dense (deg_i * k_i) x (width of block j-1) matrix."""
        basis = self.bases[(i, j)]
        pats = self.patterns[(i, j)]
        coef = weights.coeffs[(i, j)]
        k_out = self.channel_counts[i]
        k_in = self.channel_counts[j - 1]
        if len(basis) == 0:
            return np.zeros((basis.rows * k_out, basis.cols * k_in))
        out = np.einsum("bnp,bkc->nkpc", pats, coef)
        return out.reshape(basis.rows * k_out, basis.cols * k_in)

    def dense_v(self, weights, i):
        """V^(i) = [V_i ... V_1] in newest-block-first order."""
        blocks = [self.dense_block(weights, i, j) for j in range(i, 0, -1)]
        return np.concatenate(blocks, axis=1)

    def dense_bias(self, weights, i):
        """Bias vector over (positions x channels), type-1 copies only."""
        info = self.layer_info[i - 1]
        k = self.channel_counts[i]
        vec = np.zeros((info.degree, k))
        for slot, (si, ci) in enumerate(info.bias_slots):
            for s2, c2, start, deg, typ in info.copies:
                if (s2, c2) == (si, ci):
                    vec[start : start + deg, :] = weights.biases[i][slot][None, :]
        return vec.reshape(-1)

    def coeff_grad_from_dense(self, dV, i, j):
        """Adjoint of dense_block: fold a dense gradient back onto coefficients."""
        basis = self.bases[(i, j)]
        if len(basis) == 0:
            return np.zeros((0, self.channel_counts[i], self.channel_counts[j - 1]))
        k_out = self.channel_counts[i]
        k_in = self.channel_counts[j - 1]
        d4 = dV.reshape(basis.rows, k_out, basis.cols, k_in)
        return np.einsum("bnp,nkpc->bkc", self.patterns[(i, j)], d4)

    def bias_grad_from_dense(self, dvec, i):
        info = self.layer_info[i - 1]
        k = self.channel_counts[i]
        mat = dvec.reshape(info.degree, k)
        out = np.zeros((len(info.bias_slots), k))
        for slot, (si, ci) in enumerate(info.bias_slots):
            for s2, c2, start, deg, typ in info.copies:
                if (s2, c2) == (si, ci):
                    out[slot] = mat[start : start + deg, :].sum(axis=0)
        return out

    # -- group action on the input -------------------------------------------

    def act_on_input(self, g, x):
        """Apply the ambient matrix of g to inputs shaped (..., m * k0)."""
        el = self.group.elements[g] if not isinstance(g, GroupElement) else g
        m = self.group.degree
        k = self.channel_counts[0]
        xs = np.asarray(x, dtype=np.float64)
        shaped = xs.reshape(*xs.shape[:-1], m, k)
        out = np.empty_like(shaped)
        for i in range(m):
            out[..., el.perm[i], :] = el.signs[i] * shaped[..., i, :]
        return out.reshape(xs.shape)


@dataclass
class LatentWeights:
    """Trainable coefficients per (layer, source block, basis) plus biases."""

    coeffs: dict
    biases: dict

    def copy(self):
        return LatentWeights(
            {k: v.copy() for k, v in self.coeffs.items()},
            {k: v.copy() for k, v in self.biases.items()},
        )

    def flat(self):
        """Deterministic list of (name, array) leaves."""
        leaves = []
        for key in sorted(self.coeffs):
            leaves.append((f"coeff_{key[0]}_{key[1]}", self.coeffs[key]))
        for key in sorted(self.biases):
            leaves.append((f"bias_{key}", self.biases[key]))
        return leaves

    def to_json(self):
        return {
            "coeffs": {f"{i},{j}": v.tolist() for (i, j), v in self.coeffs.items()},
            "biases": {str(i): v.tolist() for i, v in self.biases.items()},
        }

    @staticmethod
    def from_json(obj):
        coeffs = {}
        for key, v in obj["coeffs"].items():
            i, j = key.split(",")
            coeffs[(int(i), int(j))] = np.array(v, dtype=np.float64)
        biases = {int(k): np.array(v, dtype=np.float64) for k, v in obj["biases"].items()}
        return LatentWeights(coeffs, biases)

    def save_npz(self, path):
        """Flat binary checkpoint; exact round trip of every tensor."""
        np.savez(path, **{name: arr for name, arr in self.flat()})

    @staticmethod
    def load_npz(path):
        data = np.load(path)
        coeffs = {}
        biases = {}
        for name in data.files:
            parts = name.split("_")
            if parts[0] == "coeff":
                coeffs[(int(parts[1]), int(parts[2]))] = data[name]
            else:
                biases[int(parts[1])] = data[name]
        return LatentWeights(coeffs, biases)


@dataclass
class BatchNormState:
    """Per-layer per-channel running statistics; affine fixed at identity."""

    running_mean: dict
    running_var: dict
    momentum: float = 0.9
    eps: float = 1e-5

    @staticmethod
    def for_model(model):
        mean = {}
        var = {}
        for i in range(1, model.depth):
            k = model.channel_counts[i]
            mean[i] = np.zeros(k)
            var[i] = np.ones(k)
        return BatchNormState(mean, var)


@dataclass
class ForwardTrace:
    h_blocks: list = field(default_factory=list)  # h_i block lists per layer
    preacts: list = field(default_factory=list)  # g_i per layer
    relu_masks: list = field(default_factory=list)
    bn_stats: list = field(default_factory=list)
    output: np.ndarray = None


def forward(model: GDNNModel, weights: LatentWeights, x, mode="eval", batchnorm=None):
    """Latent forward pass; returns (output, trace).

    ``x`` is (m * k0,) or (batch, m * k0); output is (batch, k_d). With
    ``batchnorm`` given, per-channel normalization runs immediately after
    each hidden ReLU (batch statistics in train mode, running in eval).
    """
    model.check_shapes(weights)
    xs = np.asarray(x, dtype=np.float64)
    single = xs.ndim == 1
    if single:
        xs = xs[None, :]
    if xs.shape[1] != model.block_width[0]:
        raise ShapeMismatch(f"input width {xs.shape[1]} != {model.block_width[0]}")
    trace = ForwardTrace()
    h = xs
    d = model.depth
    for i in range(1, d):
        V = model.dense_v(weights, i)
        g = h @ V.T
        b = model.dense_bias(weights, i)
        pre = g + b[None, :]
        mask = (pre > 0).astype(np.float64)
        r = pre * mask
        top = r - 0.5 * g
        if batchnorm is not None:
            # normalize the carried block: it transforms by plain position
            # permutations, so per-channel statistics are group-invariant
            # (normalizing the bare ReLU output would break the sign-flip
            # cancellation against the half-skip term)
            top, stats = _batchnorm_apply(model, batchnorm, i, top, mode)
            trace.bn_stats.append(stats)
        trace.preacts.append(g)
        trace.relu_masks.append(mask)
        trace.h_blocks.append(h)
        h = np.concatenate([top, h], axis=1)
    V = model.dense_v(weights, d)
    out = h @ V.T + model.dense_bias(weights, d)[None, :]
    trace.h_blocks.append(h)
    trace.output = out
    if single:
        out = out[0]
    return out, trace


def _batchnorm_apply(model, state, i, r, mode):
    k = model.channel_counts[i]
    deg = model.layer_info[i - 1].degree
    shaped = r.reshape(r.shape[0], deg, k)
    if mode == "train":
        mean = shaped.mean(axis=(0, 1))
        var = shaped.var(axis=(0, 1))
        state.running_mean[i] = state.momentum * state.running_mean[i] + (1 - state.momentum) * mean
        state.running_var[i] = state.momentum * state.running_var[i] + (1 - state.momentum) * var
    else:
        mean = state.running_mean[i]
        var = state.running_var[i]
    normed = (shaped - mean[None, None, :]) / np.sqrt(var[None, None, :] + state.eps)
    return normed.reshape(r.shape), (mean.copy(), var.copy())


def apparent_weights(model: GDNNModel, weights: LatentWeights):
    """W^(i) = V^(i) A^(i-1) and biases, reconstructed recursively."""
    d = model.depth
    ws = []
    a_prev = np.eye(model.block_width[0])
    for i in range(1, d + 1):
        V = model.dense_v(weights, i)
        W = V @ a_prev
        ws.append((W, model.dense_bias(weights, i)))
        if i < d:
            top_width = model.block_width[i]
            n_prev = a_prev.shape[0]
            a_new = np.zeros((top_width + n_prev, top_width + n_prev))
            a_new[:top_width, :top_width] = np.eye(top_width)
            a_new[:top_width, top_width:] = -0.5 * W
            a_new[top_width:, top_width:] = a_prev
            a_prev = a_new
    return ws


def naive_forward(ws, x):
    """Plain densely connected evaluation of Eq.-style apparent weights."""
    xs = np.asarray(x, dtype=np.float64)
    single = xs.ndim == 1
    if single:
        xs = xs[None, :]
    f = xs
    for W, b in ws[:-1]:
        pre = f @ W.T + b[None, :]
        f = np.concatenate([np.maximum(pre, 0.0), f], axis=1)
    W, b = ws[-1]
    out = f @ W.T + b[None, :]
    return out[0] if single else out


def cpz_reparam_audit(model, weights, layer, C, P, Z, xs):
    """Max |f_before - f_after| after the scaling/permutation/sign rewrite.

    C is a positive diagonal (vector), P a permutation matrix, Z a sign
    diagonal (vector), all of the layer's dense width; layer is 1-based and
    must have a successor. Because the rewritten activations ride along the
    skip connections, the compensating column transform applies to every
    deeper weight matrix, not only the immediate successor.
    """
    if not 1 <= layer <= model.depth - 1:
        raise ModelError("layer must have a following layer")
    ws = apparent_weights(model, weights)
    before = naive_forward(ws, xs)
    C = np.asarray(C, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    n = ws[layer - 1][0].shape[0]
    if C.shape != (n,) or Z.shape != (n,) or P.shape != (n, n):
        raise ShapeMismatch("C, P, Z must match the layer width")
    CPZ = (C[:, None] * P) * Z[None, :]
    W_i, b_i = ws[layer - 1]
    new_ws = list(ws)
    new_ws[layer - 1] = (CPZ @ W_i, CPZ @ b_i)
    heavi = (Z < 0).astype(np.float64)
    CP_inv = np.linalg.inv(C[:, None] * P)
    n_prev = W_i.shape[1]
    block = np.zeros((n + n_prev, n + n_prev))
    block[:n, :n] = CP_inv
    block[:n, n:] = heavi[:, None] * W_i
    block[n:, n:] = np.eye(n_prev)
    shift = np.concatenate([heavi * b_i, np.zeros(n_prev)])
    for j in range(layer, model.depth):
        W_j, b_j = ws[j]
        trailing = n + n_prev  # the f^(layer+1) suffix of every deeper input
        keep = W_j.shape[1] - trailing
        W_low = W_j[:, keep:]
        new_W = np.concatenate([W_j[:, :keep], W_low @ block], axis=1)
        new_ws[j] = (new_W, b_j + W_low @ shift)
    after = naive_forward(new_ws, xs)
    return float(np.max(np.abs(before - after)))


def import_crelu(model: GDNNModel, u_matrices, tol=1e-9):
    """Latent weights reproducing a bias-free concatenated-ReLU network.

    u_matrices[i] is the i-th layer matrix: layer 1 maps the input, deeper
    layers map the doubled (x, -x) activation of the previous layer. Each
    must be equivariant for the corresponding doubled representation.
    """
    arch = model.arch
    d = model.depth
    if any(k != 1 for k in model.channel_counts):
        raise ModelError("concatenated-ReLU import supports single-channel models")
    if len(u_matrices) != d:
        raise ShapeMismatch(f"expected {d} matrices, got {len(u_matrices)}")
    G = model.group
    us = [np.asarray(u, dtype=np.float64) for u in u_matrices]
    # equivariance check
    for i, U in enumerate(us):
        target = arch.layers[i]
        rows = target.degree
        if i == 0:
            cols = G.degree
        else:
            cols = 2 * arch.layers[i - 1].degree
        if U.shape != (rows, cols):
            raise ShapeMismatch(f"layer {i + 1} matrix must be {rows}x{cols}, got {U.shape}")
        for g in G.generator_indices:
            lhs = _apply_signed(target.evaluate(g), U)
            if i == 0:
                rhs = U @ np.array(G.elements[g].matrix(), dtype=np.float64)
            else:
                prev = arch.layers[i - 1]
                rhs = U @ _doubled_perm_matrix(prev, g)
            if np.max(np.abs(lhs - rhs)) > tol:
                raise NotEquivariant(f"layer {i + 1} matrix is not equivariant")
    # latent recursion V^(i+1) = [U1 + U2, (U1 - U2) V^(i) / 2]
    weights = model.zero_weights()
    V = us[0]
    _fill_from_dense(model, weights, V, 1)
    for i in range(1, d):
        n_prev = arch.layers[i - 1].degree
        U1 = us[i][:, :n_prev]
        U2 = us[i][:, n_prev:]
        V = np.concatenate([U1 + U2, 0.5 * (U1 - U2) @ V], axis=1)
        _fill_from_dense(model, weights, V, i + 1)
    return weights


def _doubled_perm_matrix(layer_rep, g):
    el = layer_rep.evaluate(g)
    n = el.degree
    out = np.zeros((2 * n, 2 * n))
    for i in range(n):
        j, s = el.perm[i], el.signs[i]
        if s == 1:
            out[j, i] = 1.0
            out[n + j, n + i] = 1.0
        else:
            out[n + j, i] = 1.0
            out[j, n + i] = 1.0
    return out


def _apply_signed(el, M):
    out = np.empty_like(M)
    for i in range(el.degree):
        out[el.perm[i], :] = el.signs[i] * M[i, :]
    return out


def _fill_from_dense(model, weights, V, i, tol=1e-9):
    """Project a dense latent matrix onto the block bases (disjoint support)."""
    col = 0
    blocks = []
    for j in range(i, 0, -1):
        w = model.block_width[j - 1]
        blocks.append((j, V[:, col : col + w]))
        col += w
    if col != V.shape[1]:
        raise ShapeMismatch("latent width mismatch during import")
    for j, sub in blocks:
        basis = model.bases[(i, j)]
        coef = np.zeros((len(basis), 1, 1))
        recon = np.zeros_like(sub)
        for b, mat in enumerate(basis.matrices):
            arr = np.array(mat, dtype=np.float64)
            nz = arr != 0
            if not nz.any():
                continue
            vals = sub[nz] * arr[nz]
            coef[b, 0, 0] = vals[0]
            recon += coef[b, 0, 0] * arr
        if np.max(np.abs(recon - sub)) > tol:
            raise NotInSpan(f"block ({i}, {j}) falls outside the equivariant span")
        weights.coeffs[(i, j)] = coef


def init_weights(model: GDNNModel, seed=0, scheme="fan_in_normal"):
    """Deterministic random init: coefficients ~ N(0, 1/fan_in), biases zero.

    fan_in counts the apparent-weight input width of the layer (all earlier
    blocks, channels included).
    """
    if scheme not in ("fan_in_normal", "unit_normal"):
        raise UnknownScheme(scheme)
    rng = np.random.default_rng(seed)
    weights = model.zero_weights()
    for i in range(1, model.depth + 1):
        fan_in = sum(model.block_width[j] for j in range(i))
        std = 1.0 if scheme == "unit_normal" else (1.0 / fan_in) ** 0.5
        for j in range(1, i + 1):
            shape = weights.coeffs[(i, j)].shape
            weights.coeffs[(i, j)] = rng.normal(0.0, std, size=shape)
    return weights


def invariance_deviation(model, weights, xs, mode="eval", batchnorm=None, generators_only=True):
    """max over generators g and rows x of |f(gx) - f(x)|."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    base, _ = forward(model, weights, xs, mode=mode, batchnorm=batchnorm)
    gens = model.group.generator_indices if generators_only else range(model.group.order)
    worst = 0.0
    for g in gens:
        gx = model.act_on_input(g, xs)
        out, _ = forward(model, weights, gx, mode=mode, batchnorm=batchnorm)
        worst = max(worst, float(np.max(np.abs(out - base))))
    return worst
