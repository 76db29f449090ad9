"""Signed permutation irreps rho_HK and layer representations.

An irrep is labeled by a pair K <= H <= G with |H:K| <= 2 and realized on a
fixed transversal of G/H (smallest element index per coset, identity first).
Type 1 (H = K) is the plain coset action; type 2 picks up a sign whenever the
action swaps the two K-cosets inside H.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from gdnn.group_core import (
    GroupElement,
    RationalMatrix,
    SubgroupPair,
    fixed_difference_matrix,
    pair_conjugacy_classes,
    projection,
)


class RepError(Exception):
    pass


class NotInFixedSpace(RepError):
    pass


class SignedPermIrrep:
    """The induced signed perm-irrep for a subgroup pair (H, K)."""

    def __init__(self, pair: SubgroupPair):
        self.pair = pair
        G = pair.parent
        self.group = G
        self.cosets = G.left_cosets(pair.H)  # sorted index tuples, identity coset first
        self.transversal = tuple(c[0] for c in self.cosets)
        self.degree = len(self.cosets)
        self.type = pair.index
        self._coset_of = G.coset_lookup(self.cosets)
        if self.type == 2:
            kset = set(pair.K.members)
            self.h_rep = min(x for x in pair.H.members if x not in kset)
        else:
            self.h_rep = None
        self._cache = {}

    @property
    def H(self):
        return self.pair.H

    @property
    def K(self):
        return self.pair.K

    def evaluate(self, g) -> GroupElement:
        """The signed permutation rho(g); g is an element index or GroupElement."""
        if isinstance(g, GroupElement):
            g = self.group.index_of(g)
        cached = self._cache.get(g)
        if cached is not None:
            return cached
        G = self.group
        n = self.degree
        perm = [0] * n
        signs = [1] * n
        kset = set(self.pair.K.members)
        for i, gi in enumerate(self.transversal):
            t = G.mult(g, gi)
            j = self._coset_of[t]
            perm[i] = j
            if self.type == 2:
                # g g_i K = g_j K gives +, g g_i K = g_j h K gives -
                rest = G.mult(G.inv(self.transversal[j]), t)
                if rest not in kset:
                    signs[i] = -1
        el = GroupElement(tuple(perm), tuple(signs))
        self._cache[g] = el
        return el

    def is_trivial(self):
        return self.degree == 1 and self.type == 1

    def fixed_space_dim(self):
        """1 for type 1 (the all-ones direction), 0 for type 2."""
        return 1 if self.type == 1 else 0

    def unsigned_part(self, g) -> GroupElement:
        """The permutation factor pi(g) of rho(g) = pi(g) zeta(g)."""
        el = self.evaluate(g)
        return GroupElement(el.perm)

    def key(self):
        return self.pair.key()

    def __repr__(self):
        return f"SignedPermIrrep(|H|={self.H.order}, |K|={self.K.order}, degree={self.degree}, type={self.type})"

    def to_json(self):
        return {
            "H": list(self.H.members),
            "K": list(self.K.members),
            "degree": self.degree,
            "type": self.type,
        }


def irrep(pair: SubgroupPair) -> SignedPermIrrep:
    return SignedPermIrrep(pair)


@dataclass
class LayerRep:
    """A direct sum of irreps with positive multiplicities."""

    summands: list  # list of (SignedPermIrrep, multiplicity)

    def __post_init__(self):
        if not self.summands:
            raise RepError("a layer needs at least one summand")
        for _, k in self.summands:
            if k < 1:
                raise RepError("multiplicities must be positive")
        for i in range(len(self.summands)):
            for j in range(i + 1, len(self.summands)):
                if equivalent(self.summands[i][0], self.summands[j][0]):
                    raise RepError("summand irreps must be pairwise inequivalent")

    @property
    def group(self):
        return self.summands[0][0].group

    @property
    def degree(self):
        return sum(rep.degree * k for rep, k in self.summands)

    def evaluate(self, g) -> GroupElement:
        """Block-diagonal signed permutation across all summand copies."""
        blocks = []
        for rep, k in self.summands:
            el = rep.evaluate(g)
            blocks.extend([el] * k)
        return _block_diag(blocks)

    def unsigned_part(self, g) -> GroupElement:
        el = self.evaluate(g)
        return GroupElement(el.perm)

    def irreps(self):
        return [rep for rep, _ in self.summands]

    def to_json(self):
        return [{"irrep": rep.to_json(), "multiplicity": k} for rep, k in self.summands]


def _block_diag(elements):
    perm = []
    signs = []
    offset = 0
    for el in elements:
        perm.extend(p + offset for p in el.perm)
        signs.extend(el.signs)
        offset += el.degree
    return GroupElement(tuple(perm), tuple(signs))


def evaluate(rep, g):
    """Uniform entry point for SignedPermIrrep and LayerRep."""
    return rep.evaluate(g)


def equivalent(a: SignedPermIrrep, b: SignedPermIrrep) -> bool:
    """True iff the subgroup pairs are simultaneously conjugate."""
    if a.group is not b.group:
        raise RepError("irreps live over different groups")
    if a.degree != b.degree or a.type != b.type:
        return False
    G = a.group
    target = b.pair.key()
    for g in range(G.order):
        if a.pair.conjugate(g).key() == target:
            return True
    return False


def unravel_raw(rep: SignedPermIrrep, g) -> GroupElement:
    """heaviside([[1,-1],[-1,1]] kron rho(g)): the doubled ordinary perm-rep.

    Index i < n is +e_i, index n + i is -e_i.
    """
    el = rep.evaluate(g)
    n = rep.degree
    perm = [0] * (2 * n)
    for i in range(n):
        j, s = el.perm[i], el.signs[i]
        if s == 1:
            perm[i] = j
            perm[n + i] = n + j
        else:
            perm[i] = n + j
            perm[n + i] = j
    return GroupElement(tuple(perm))


def unravel(rep: SignedPermIrrep):
    """Type 2 -> the irrep (K, K) of doubled degree; type 1 -> two copies of (H, H)."""
    G = rep.group
    if rep.type == 2:
        return irrep(SubgroupPair(rep.K, rep.K))
    base = irrep(SubgroupPair(rep.H, rep.H))
    return LayerRep([(base, 2)])


def unravel_relabeling(rep: SignedPermIrrep):
    """The index map identifying the raw doubled rep with irrep(K, K).

    Returns sigma with sigma[raw index] = coset position in irrep(K, K):
    raw index i < n is the coset g_i K, raw index n + i is g_i h K.
    Only meaningful for type-2 irreps.
    """
    if rep.type != 2:
        raise RepError("relabeling is defined for type-2 irreps")
    G = rep.group
    target = irrep(SubgroupPair(rep.K, rep.K))
    lookup = target._coset_of
    n = rep.degree
    sigma = [0] * (2 * n)
    for i, gi in enumerate(rep.transversal):
        sigma[i] = lookup[gi]
        sigma[n + i] = lookup[G.mult(gi, rep.h_rep)]
    return tuple(sigma), target


def tunnel(rep: SignedPermIrrep) -> SignedPermIrrep:
    """rho_HK -> rho_HH: the same-degree type-1 counterpart."""
    return irrep(SubgroupPair(rep.H, rep.H))


def fixed_space_membership(pair: SubgroupPair, w) -> bool:
    """Exact test w in ran(P_K - (|H:K|-1) P_H); the operator is idempotent."""
    M = fixed_difference_matrix(pair.H, pair.K)
    scale = pair.H.order * pair.K.order
    w = [Fraction(x) for x in w]
    img = [sum(Fraction(M[i][j]) * w[j] for j in range(len(w))) for i in range(len(w))]
    return all(img[i] == scale * w[i] for i in range(len(w)))


def orbit_weight_matrix(rep: SignedPermIrrep, w) -> RationalMatrix:
    """Stack the transversal orbit rows [g_1 w; ...; g_n w].

    Requires w nonzero and inside ran(P_K - (|H:K|-1) P_H), which makes the
    result satisfy rho(g) W = W g for all g.
    """
    w = tuple(Fraction(x) for x in w)
    if all(x == 0 for x in w):
        raise NotInFixedSpace("w must be nonzero")
    if not fixed_space_membership(rep.pair, w):
        raise NotInFixedSpace("w is outside the fixed difference space of (H, K)")
    G = rep.group
    rows = []
    for gi in rep.transversal:
        el = G.elements[gi]
        col = el.apply(w)  # acts as the matrix on the vector
        rows.append(col)
    W = RationalMatrix(rows)
    for g in G.generator_indices:
        lhs = W.signed_permute_rows(rep.evaluate(g))
        rhs = W @ RationalMatrix.from_element(G.elements[g])
        if lhs != rhs:
            raise RepError("orbit matrix failed the equivariance check")
    return W


def random_fixed_vector(pair: SubgroupPair, rng=None, max_tries=50):
    """A nonzero rational vector in ran(P_K - (|H:K|-1) P_H), if any exists."""
    import random as _random

    rng = rng or _random.Random(0)
    M = fixed_difference_matrix(pair.H, pair.K)
    m = len(M)
    for _ in range(max_tries):
        v = [rng.randint(-3, 3) for _ in range(m)]
        img = [sum(M[i][j] * v[j] for j in range(m)) for i in range(m)]
        if any(x != 0 for x in img):
            return tuple(Fraction(x, pair.H.order * pair.K.order) for x in img)
    return None


def check_orthogonality(H, K1, K2, w1, w2) -> bool:
    """diag(W1 W2^T) == 0 exactly, on the shared transversal of G/H."""
    p1 = SubgroupPair(H, K1)
    p2 = SubgroupPair(H, K2)
    r1 = irrep(p1)
    r2 = irrep(p2)
    if equivalent(r1, r2):
        raise RepError("pairs must be inequivalent for the orthogonality check")
    W1 = orbit_weight_matrix(r1, w1)
    W2 = orbit_weight_matrix(r2, w2)
    n = W1.shape[0]
    for i in range(n):
        dot = sum(a * b for a, b in zip(W1.row(i), W2.row(i)))
        if dot != 0:
            return False
    return True


def fixed_space_dim(rep: SignedPermIrrep) -> int:
    return rep.fixed_space_dim()


def layer_rep_from_json(G, obj):
    from gdnn.group_core import SubgroupPair as SP

    summands = []
    for entry in obj:
        data = entry["irrep"]
        H = G.subgroup(data["H"])
        K = G.subgroup(data["K"])
        summands.append((irrep(SP(H, K)), entry["multiplicity"]))
    return LayerRep(summands)
