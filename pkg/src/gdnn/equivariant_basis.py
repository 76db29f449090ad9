"""Exact bases for equivariant-matrix spaces via signed graph 2-coloring.

The constraint rho(g) X = X pi(g) for generators g permutes (and possibly
flips) matrix entries; solutions are constant up to sign on connected
components of the induced arc graph. Components with a sign-inconsistent
cycle force zeros and contribute no basis matrix, so the basis is read off
without any numerical rank computation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from gdnn.group_core import GroupElement, _row_echelon


class BasisError(Exception):
    pass


class NotOrdinaryPerm(BasisError):
    pass


class SizeCap(BasisError):
    pass


ORACLE_ENTRY_CAP = 400


class _SignedUnionFind:
    """Union-find tracking a relative sign to each component root."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.sign = [1] * n  # sign of node relative to its parent
        self.ok = [True] * n  # component remains 2-colorable
        self.conflict = {}  # root -> an arc closing a negative cycle

    def find(self, i):
        if self.parent[i] == i:
            return i, 1
        root, s = self.find(self.parent[i])
        self.parent[i] = root
        self.sign[i] *= s
        return root, self.sign[i]

    def union(self, i, j, z):
        """Impose value(i) = z * value(j)."""
        ri, si = self.find(i)
        rj, sj = self.find(j)
        if ri == rj:
            if si != z * sj:
                if self.ok[ri]:
                    self.conflict[ri] = (i, j, z)
                self.ok[ri] = False
            return
        # attach rj under ri: sign(rj relative to ri) solves si = z * sj * s
        self.parent[rj] = ri
        if not self.ok[ri] and ri in self.conflict:
            pass  # keep the first witness
        elif not self.ok[rj] and rj in self.conflict:
            self.conflict[ri] = self.conflict[rj]
        self.sign[rj] = si * z * sj
        self.ok[ri] = self.ok[ri] and self.ok[rj]


@dataclass
class ArcGraph:
    """Signed entry-permutation graph of X -> rho(g) X pi(g)^T per generator."""

    rows: int
    cols: int
    arcs: list  # (from node, to node, sign)

    @staticmethod
    def build(rho_images, pi_images, rows, cols):
        arcs = []
        for r_el, p_el in zip(rho_images, pi_images):
            for i in range(rows):
                for j in range(cols):
                    # entry (i, j) lands at (rho.perm[i], pi.perm[j]) with sign product
                    arcs.append(
                        (
                            i * cols + j,
                            r_el.perm[i] * cols + p_el.perm[j],
                            r_el.signs[i] * p_el.signs[j],
                        )
                    )
        return ArcGraph(rows, cols, arcs)


@dataclass
class BasisSet:
    """Disjoint-support {-1,0,1} basis matrices for one equivariance block."""

    rows: int
    cols: int
    matrices: list  # list of tuple-of-row-tuples
    support: dict  # node index -> basis index
    zero_witnesses: list = None  # per collapsed component: an arc closing a negative cycle

    def __len__(self):
        return len(self.matrices)

    def to_sparse(self):
        """Per-matrix triplets (row, col, sign)."""
        out = []
        for mat in self.matrices:
            trips = []
            for i, row in enumerate(mat):
                for j, v in enumerate(row):
                    if v:
                        trips.append((i, j, v))
            out.append(trips)
        return out

    def to_json(self):
        return {"shape": [self.rows, self.cols], "matrices": self.to_sparse()}


def _rep_images(rep, generator_indices):
    return [rep.evaluate(g) for g in generator_indices]


def build_basis(rho, pi, generator_indices) -> BasisSet:
    """Basis of {X : rho(g) X = X pi(g) for all generators g}.

    ``rho`` and ``pi`` are reps with an ``evaluate`` method (irrep or layer
    rep); ``pi`` must evaluate to ordinary permutations. Components are
    explored from their smallest node index, which gets color +1, so the
    output is deterministic.
    """
    rho_images = _rep_images(rho, generator_indices)
    pi_images = _rep_images(pi, generator_indices)
    for el in pi_images:
        if not el.is_unsigned():
            raise NotOrdinaryPerm("pi must be an ordinary permutation representation")
    rows = rho_images[0].degree if rho_images else rho.degree
    cols = pi_images[0].degree if pi_images else pi.degree
    n = rows * cols
    uf = _SignedUnionFind(n)
    graph = ArcGraph.build(rho_images, pi_images, rows, cols)
    for a, b, z in graph.arcs:
        uf.union(a, b, z)
    comp_nodes = {}
    for node in range(n):
        root, _ = uf.find(node)
        comp_nodes.setdefault(root, []).append(node)
    matrices = []
    support = {}
    witnesses = []
    # deterministic order: components by smallest contained node
    for root, nodes in sorted(comp_nodes.items(), key=lambda kv: min(kv[1])):
        if not uf.ok[root]:
            witnesses.append(uf.conflict.get(root))
            continue
        anchor = min(nodes)
        _, anchor_sign = uf.find(anchor)
        mat = [[0] * cols for _ in range(rows)]
        for node in nodes:
            _, s = uf.find(node)
            mat[node // cols][node % cols] = s * anchor_sign  # anchor colored +1
        idx = len(matrices)
        matrices.append(tuple(tuple(r) for r in mat))
        for node in nodes:
            support[node] = idx
    return BasisSet(rows, cols, matrices, support, witnesses)


def oracle_basis_dim(rho, pi, generator_indices, cap=ORACLE_ENTRY_CAP) -> int:
    """Exact rational nullspace dimension of the stacked constraints.

    The rejected numerical path, kept as a test oracle: solves
    rho(g) X - X pi(g) = 0 as a linear system over the matrix entries.
    """
    rho_images = _rep_images(rho, generator_indices)
    pi_images = _rep_images(pi, generator_indices)
    rows = rho_images[0].degree
    cols = pi_images[0].degree
    n = rows * cols
    if n > cap:
        raise SizeCap(f"{rows}x{cols} exceeds oracle cap of {cap} entries")
    eqs = []
    for r_el, p_el in zip(rho_images, pi_images):
        rinv = r_el.inverse()
        for a in range(rows):
            i = rinv.perm[a]  # rho[a, i] = signs[i] is the only nonzero in row a
            for b in range(cols):
                row = [Fraction(0)] * n
                row[i * cols + b] += r_el.signs[i]
                # (X pi)[a, b] = X[a, pi.perm[b]] * pi.signs[b]
                row[a * cols + p_el.perm[b]] -= p_el.signs[b]
                eqs.append(row)
    pivots = _row_echelon(eqs)
    return n - len(pivots)


def verify_basis(basis: BasisSet, rho, pi, group, full_group=False) -> bool:
    """Check equivariance of every basis matrix and disjoint supports."""
    gens = (
        range(group.order)
        if full_group
        else group.generator_indices
    )
    seen = set()
    for mat in basis.matrices:
        for i, row in enumerate(mat):
            for j, v in enumerate(row):
                if v:
                    node = i * basis.cols + j
                    if node in seen:
                        return False
                    seen.add(node)
    for g in gens:
        r_el = rho.evaluate(g)
        p_el = pi.evaluate(g)
        for mat in basis.matrices:
            if not _equivariant_under(mat, r_el, p_el):
                return False
    return True


def _equivariant_under(mat, r_el, p_el):
    rows = len(mat)
    cols = len(mat[0])
    rinv = r_el.inverse()
    for a in range(rows):
        i = rinv.perm[a]  # (rho X)[a][b] = signs[i] * X[i][b]
        si = r_el.signs[i]
        for b in range(cols):
            lhs = si * mat[i][b]
            rhs = mat[a][p_el.perm[b]] * p_el.signs[b]
            if lhs != rhs:
                return False
    return True
