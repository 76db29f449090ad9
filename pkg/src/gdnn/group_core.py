"""Exact finite signed-permutation matrix groups.

Everything in this module is integer/rational arithmetic only: group elements
are signed permutations stored as (perm, signs) pairs, subgroups are index
sets into a fixed element list, and projections are matrices of Fractions.
No floating point is used anywhere, so stabilizers and ranks are exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

DEFAULT_ORDER_CAP = 512


class GroupError(Exception):
    pass


class CapExceeded(GroupError):
    pass


class UnknownName(GroupError):
    pass


class PartitionInvalid(GroupError):
    pass


@total_ordering
class GroupElement:
    """A signed permutation matrix.

    The matrix has entry ``signs[i]`` at row ``perm[i]``, column ``i``
    (0-based internally; the JSON wire format is 1-based). Exactly one
    nonzero entry per row and column, so the matrix is orthogonal.
    """

    __slots__ = ("perm", "signs")

    def __init__(self, perm, signs=None):
        perm = tuple(perm)
        n = len(perm)
        if sorted(perm) != list(range(n)):
            raise ValueError(f"not a permutation of 0..{n-1}: {perm}")
        if signs is None:
            signs = (1,) * n
        else:
            signs = tuple(signs)
            if len(signs) != n or any(s not in (-1, 1) for s in signs):
                raise ValueError("signs must be a +-1 vector matching perm length")
        self.perm = perm
        self.signs = signs

    @property
    def degree(self):
        return len(self.perm)

    @staticmethod
    def identity(n):
        return GroupElement(tuple(range(n)))

    def __mul__(self, other):
        # Matrix product self @ other: column j of other hits row other.perm[j],
        # which self sends to row self.perm[other.perm[j]].
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        p, s = self.perm, self.signs
        q, t = other.perm, other.signs
        return GroupElement(
            tuple(p[q[j]] for j in range(len(q))),
            tuple(s[q[j]] * t[j] for j in range(len(q))),
        )

    def inverse(self):
        n = self.degree
        perm = [0] * n
        signs = [1] * n
        for i in range(n):
            perm[self.perm[i]] = i
            signs[self.perm[i]] = self.signs[i]
        return GroupElement(tuple(perm), tuple(signs))

    def is_identity(self):
        return self.perm == tuple(range(self.degree)) and all(s == 1 for s in self.signs)

    def is_unsigned(self):
        return all(s == 1 for s in self.signs)

    def matrix(self):
        """Dense {-1,0,1} matrix as a tuple of row tuples."""
        n = self.degree
        rows = [[0] * n for _ in range(n)]
        for i in range(n):
            rows[self.perm[i]][i] = self.signs[i]
        return tuple(tuple(r) for r in rows)

    def apply(self, vec):
        """Matrix-vector product on a length-``degree`` sequence."""
        n = self.degree
        out = [0] * n
        for i in range(n):
            out[self.perm[i]] = self.signs[i] * vec[i]
        return tuple(out)

    def __eq__(self, other):
        return isinstance(other, GroupElement) and self.perm == other.perm and self.signs == other.signs

    def __lt__(self, other):
        return (self.perm, self.signs) < (other.perm, other.signs)

    def __hash__(self):
        return hash((self.perm, self.signs))

    def __repr__(self):
        if self.is_unsigned():
            return f"GroupElement(perm={self.perm})"
        return f"GroupElement(perm={self.perm}, signs={self.signs})"

    def to_json(self):
        return {"perm": [p + 1 for p in self.perm], "signs": list(self.signs)}

    @staticmethod
    def from_json(obj):
        return GroupElement(tuple(p - 1 for p in obj["perm"]), tuple(obj.get("signs", [1] * len(obj["perm"]))))


class FiniteMatrixGroup:
    """The closed group generated by a set of signed permutations.

    Elements are ordered by breadth-first search from the identity with the
    generators applied in their declared order; every canonical choice made
    elsewhere (transversals, class representatives) derives from this listing,
    so results are reproducible run to run.
    """

    def __init__(self, degree, elements, generator_indices, name=None):
        self.degree = degree
        self.elements = tuple(elements)
        self.generator_indices = tuple(generator_indices)
        self.name = name
        self._index = {el: i for i, el in enumerate(self.elements)}
        n = len(self.elements)
        self.mult_table = [[0] * n for _ in range(n)]
        for i, a in enumerate(self.elements):
            row = self.mult_table[i]
            for j, b in enumerate(self.elements):
                row[j] = self._index[a * b]
        self.inverse_table = [self._index[a.inverse()] for a in self.elements]
        self._subgroups = None

    @property
    def order(self):
        return len(self.elements)

    @property
    def generators(self):
        return tuple(self.elements[i] for i in self.generator_indices)

    def index_of(self, element):
        return self._index[element]

    def mult(self, i, j):
        return self.mult_table[i][j]

    def inv(self, i):
        return self.inverse_table[i]

    def conj(self, g, x):
        """Index of g x g^-1."""
        return self.mult(self.mult(g, x), self.inv(g))

    def element(self, i):
        return self.elements[i]

    # -- subgroup machinery -------------------------------------------------

    def subgroup(self, members):
        members = tuple(sorted(set(members)))
        return Subgroup(self, members)

    def trivial_subgroup(self):
        return self.subgroup((0,))

    def full_subgroup(self):
        return self.subgroup(range(self.order))

    def closure(self, seed_indices):
        """Subgroup generated by the given element indices."""
        found = {0}
        frontier = [0]
        gens = [i for i in seed_indices if i != 0]
        for g in gens:
            if g not in found:
                found.add(g)
                frontier.append(g)
        while frontier:
            x = frontier.pop()
            for g in gens:
                for y in (self.mult(x, g), self.mult(g, x)):
                    if y not in found:
                        found.add(y)
                        frontier.append(y)
        return Subgroup._trusted(self, sorted(found))

    def subgroups(self):
        """Every subgroup exactly once, sorted by order then member indices.

        All cyclic subgroups first, then pairwise joins iterated to a
        fixpoint. Exponential in general; fine for the group sizes used here.
        """
        if self._subgroups is not None:
            return self._subgroups
        if self.order > DEFAULT_ORDER_CAP:
            raise CapExceeded(f"|G| = {self.order} exceeds cap {DEFAULT_ORDER_CAP}")
        found = {}
        for i in range(self.order):
            sub = self.closure([i])
            found[sub.members] = sub
        frontier = list(found.values())
        while frontier:
            new = []
            pool = list(found.values())
            for a in frontier:
                for b in pool:
                    if a.members == b.members:
                        continue
                    if set(a.members) <= set(b.members) or set(b.members) <= set(a.members):
                        continue
                    join = self.closure(a.members + b.members)
                    if join.members not in found:
                        found[join.members] = join
                        new.append(join)
            frontier = new
        subs = sorted(found.values(), key=lambda s: (s.order, s.members))
        self._subgroups = subs
        return subs

    def subgroup_pairs(self):
        """All pairs (H, K) with K <= H and |H:K| in {1, 2}."""
        pairs = []
        for h in self.subgroups():
            pairs.append(SubgroupPair(h, h))
            hset = set(h.members)
            for k in self.subgroups():
                if 2 * k.order == h.order and set(k.members) <= hset:
                    pairs.append(SubgroupPair(h, k))
        pairs.sort(key=lambda p: (p.H.order, p.H.members, p.K.members))
        return pairs

    # -- cosets and double cosets -------------------------------------------

    def left_cosets(self, sub):
        """Left cosets xJ as sorted index tuples, ordered by smallest member."""
        seen = set()
        cosets = []
        for x in range(self.order):
            if x in seen:
                continue
            coset = tuple(sorted(self.mult(x, j) for j in sub.members))
            seen.update(coset)
            cosets.append(coset)
        cosets.sort(key=lambda c: c[0])
        return cosets

    def coset_lookup(self, cosets):
        """Map element index -> coset position."""
        lookup = [0] * self.order
        for ci, coset in enumerate(cosets):
            for x in coset:
                lookup[x] = ci
        return lookup

    def coset_action(self, cosets, lookup=None):
        """Permutation action of every g on the coset list: act[g][c] -> c'."""
        if lookup is None:
            lookup = self.coset_lookup(cosets)
        act = []
        for g in range(self.order):
            act.append(tuple(lookup[self.mult(g, c[0])] for c in cosets))
        return act

    def double_cosets(self, K, J):
        """The partition of G/J into double cosets K\\G/J.

        Returns a list of (representative element index, block) where each
        block is a frozenset of coset positions in ``left_cosets(J)``.
        """
        cosets = self.left_cosets(J)
        lookup = self.coset_lookup(cosets)
        assigned = [None] * len(cosets)
        blocks = []
        for ci in range(len(cosets)):
            if assigned[ci] is not None:
                continue
            rep = cosets[ci][0]
            orbit = {ci}
            stack = [ci]
            while stack:
                c = stack.pop()
                x = cosets[c][0]
                for k in K.members:
                    c2 = lookup[self.mult(k, x)]
                    if c2 not in orbit:
                        orbit.add(c2)
                        stack.append(c2)
            for c in orbit:
                assigned[c] = len(blocks)
            blocks.append((rep, frozenset(orbit)))
        return blocks

    # -- serialization ------------------------------------------------------

    def to_json(self):
        obj = {
            "degree": self.degree,
            "generators": [[g.to_json()["perm"], g.to_json()["signs"]] for g in self.generators],
        }
        if self.name:
            obj["name"] = self.name
        return obj

    @staticmethod
    def from_json(obj):
        gens = [GroupElement(tuple(p - 1 for p in perm), tuple(signs)) for perm, signs in obj["generators"]]
        return from_generators(obj["degree"], gens, name=obj.get("name"))

    def __repr__(self):
        label = self.name or "group"
        return f"FiniteMatrixGroup({label}, degree={self.degree}, order={self.order})"


@dataclass(frozen=True)
class Subgroup:
    """A subgroup given by its sorted member indices into the parent listing."""

    parent: FiniteMatrixGroup
    members: tuple

    def __post_init__(self):
        mem = set(self.members)
        if 0 not in mem:
            raise ValueError("subgroup must contain the identity (index 0)")
        for a in self.members:
            for b in self.members:
                if self.parent.mult(a, b) not in mem:
                    raise ValueError("member set not closed under multiplication")

    @classmethod
    def _trusted(cls, parent, members):
        # skips the closure check; for sets that are subgroups by construction
        obj = object.__new__(cls)
        object.__setattr__(obj, "parent", parent)
        object.__setattr__(obj, "members", tuple(members))
        return obj

    @property
    def order(self):
        return len(self.members)

    def __contains__(self, idx):
        return idx in set(self.members)

    def member_set(self):
        return frozenset(self.members)

    def elements(self):
        return [self.parent.elements[i] for i in self.members]

    def conjugate(self, g):
        """The subgroup g self g^-1."""
        return Subgroup._trusted(self.parent, sorted(self.parent.conj(g, x) for x in self.members))

    def intersection(self, other):
        return Subgroup._trusted(self.parent, sorted(set(self.members) & set(other.members)))

    def is_subset_of(self, other):
        return set(self.members) <= set(other.members)

    def __le__(self, other):
        return self.is_subset_of(other)

    def to_json(self):
        return list(self.members)


@dataclass(frozen=True)
class SubgroupPair:
    """A pair K <= H with |H:K| <= 2; the label of a signed perm-irrep."""

    H: Subgroup
    K: Subgroup

    def __post_init__(self):
        if self.H.parent is not self.K.parent:
            raise ValueError("H and K must share a parent group")
        if not self.K.is_subset_of(self.H):
            raise ValueError("K must be contained in H")
        if self.H.order not in (self.K.order, 2 * self.K.order):
            raise ValueError("|H:K| must be 1 or 2")

    @property
    def parent(self):
        return self.H.parent

    @property
    def index(self):
        return self.H.order // self.K.order

    @property
    def rep_degree(self):
        return self.parent.order // self.H.order

    def key(self):
        return (self.H.members, self.K.members)

    def conjugate(self, g):
        return SubgroupPair(self.H.conjugate(g), self.K.conjugate(g))

    def to_json(self):
        return {"H": list(self.H.members), "K": list(self.K.members)}


@dataclass
class PairClass:
    """A conjugacy class of subgroup pairs under simultaneous conjugation."""

    representative: SubgroupPair
    members: list

    @property
    def size(self):
        return len(self.members)


def pair_conjugacy_classes(pairs):
    """Partition pairs under (H, K) -> (gHg^-1, gKg^-1).

    The canonical representative of each class is the lexicographically
    smallest (H members, K members) key. Input pairs must share a parent.
    """
    if not pairs:
        return []
    G = pairs[0].parent
    by_key = {p.key(): p for p in pairs}
    unseen = set(by_key)
    classes = []
    for p in sorted(pairs, key=lambda q: q.key()):
        if p.key() not in unseen:
            continue
        orbit = {}
        for g in range(G.order):
            q = p.conjugate(g)
            orbit[q.key()] = q
        members = sorted(orbit.values(), key=lambda q: q.key())
        rep = members[0]
        for q in members:
            unseen.discard(q.key())
        classes.append(PairClass(rep, members))
    classes.sort(key=lambda c: c.representative.key())
    return classes


def subgroup_conjugacy_classes(subs):
    """Conjugacy classes of subgroups; canonical rep = smallest member tuple."""
    if not subs:
        return []
    G = subs[0].parent
    unseen = {s.members: s for s in subs}
    classes = []
    for s in sorted(subs, key=lambda t: (t.order, t.members)):
        if s.members not in unseen:
            continue
        orbit = {}
        for g in range(G.order):
            c = s.conjugate(g)
            orbit[c.members] = c
        members = sorted(orbit.values(), key=lambda t: t.members)
        for c in members:
            unseen.pop(c.members, None)
        classes.append(members)
    return classes


# -- exact rational matrices ----------------------------------------------


class RationalMatrix:
    """Immutable dense matrix of Fractions with exact arithmetic."""

    __slots__ = ("rows",)

    def __init__(self, rows):
        self.rows = tuple(tuple(Fraction(x) for x in row) for row in rows)

    @property
    def shape(self):
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    @staticmethod
    def zeros(r, c):
        return RationalMatrix([[0] * c for _ in range(r)])

    @staticmethod
    def identity(n):
        return RationalMatrix([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @staticmethod
    def from_element(el):
        return RationalMatrix(el.matrix())

    def __add__(self, other):
        return RationalMatrix([[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)])

    def __sub__(self, other):
        return RationalMatrix([[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)])

    def scale(self, c):
        c = Fraction(c)
        return RationalMatrix([[c * a for a in row] for row in self.rows])

    def __matmul__(self, other):
        r, k = self.shape
        k2, c = other.shape
        if k != k2:
            raise ValueError("shape mismatch")
        cols = list(zip(*other.rows))
        return RationalMatrix([[sum(a * b for a, b in zip(row, col)) for col in cols] for row in self.rows])

    def transpose(self):
        return RationalMatrix(list(zip(*self.rows)))

    def signed_permute_rows(self, el):
        """Left-multiply by a signed permutation: row perm[i] gets signs[i]*row i."""
        r, _ = self.shape
        if el.degree != r:
            raise ValueError("degree mismatch")
        out = [None] * r
        for i in range(r):
            s = el.signs[i]
            out[el.perm[i]] = self.rows[i] if s == 1 else tuple(-x for x in self.rows[i])
        return RationalMatrix(out)

    def is_zero(self):
        return all(x == 0 for row in self.rows for x in row)

    def row(self, i):
        return self.rows[i]

    def __eq__(self, other):
        return isinstance(other, RationalMatrix) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return f"RationalMatrix({self.shape[0]}x{self.shape[1]})"

    def rank(self):
        return len(_row_echelon([list(r) for r in self.rows]))

    def nullspace_dim(self):
        return self.shape[1] - self.rank()

    def apply_to_vector(self, vec):
        return tuple(sum(a * b for a, b in zip(row, vec)) for row in self.rows)

    def to_float_list(self):
        return [[float(x) for x in row] for row in self.rows]


def _row_echelon(rows):
    """In-place fraction elimination; returns pivot column list."""
    if not rows:
        return []
    n_rows, n_cols = len(rows), len(rows[0])
    pivots = []
    r = 0
    for c in range(n_cols):
        pivot = None
        for i in range(r, n_rows):
            if rows[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pv = rows[r][c]
        for i in range(r + 1, n_rows):
            if rows[i][c] != 0:
                f = rows[i][c] / pv
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return pivots


# -- projections and stabilizers -------------------------------------------


def projection(sub):
    """P_Gamma = (1/|Gamma|) sum of the subgroup's matrices; exact, idempotent."""
    G = sub.parent
    m = G.degree
    acc = [[0] * m for _ in range(m)]
    for i in sub.members:
        el = G.elements[i]
        for col in range(m):
            acc[el.perm[col]][col] += el.signs[col]
    inv = Fraction(1, sub.order)
    return RationalMatrix([[inv * x for x in row] for row in acc])


def integer_projection_sum(sub):
    """|Gamma| * P_Gamma as integer row tuples (fast exact stabilizer input)."""
    G = sub.parent
    m = G.degree
    acc = [[0] * m for _ in range(m)]
    for i in sub.members:
        el = G.elements[i]
        for col in range(m):
            acc[el.perm[col]][col] += el.signs[col]
    return tuple(tuple(r) for r in acc)


def stabilizer_of_matrix(G, M):
    """st_G(M) = {g : gM = M}, decided by exact row comparison."""
    if isinstance(M, RationalMatrix):
        rows = M.rows
    else:
        rows = tuple(tuple(r) for r in M)
    members = []
    for gi in range(G.order):
        el = G.elements[gi]
        ok = True
        for i in range(len(rows)):
            target = rows[el.perm[i]]
            src = rows[i]
            if el.signs[i] == 1:
                if src != target:
                    ok = False
                    break
            else:
                if any(-a != b for a, b in zip(src, target)):
                    ok = False
                    break
        if ok:
            members.append(gi)
    return Subgroup._trusted(G, members)


def fixed_difference_matrix(H, K):
    """Integer-scaled P_K - (|H:K|-1) P_H in the parent's ambient representation.

    Scaled by |H|*|K| > 0, which leaves the stabilizer unchanged.
    """
    kappa = H.order // K.order - 1
    sk = integer_projection_sum(K)  # |K| P_K
    m = len(sk)
    if kappa == 0:
        scaled = [[H.order * sk[i][j] for j in range(m)] for i in range(m)]
    else:
        sh = integer_projection_sum(H)  # |H| P_H
        scaled = [[H.order * sk[i][j] - kappa * K.order * sh[i][j] for j in range(m)] for i in range(m)]
    return tuple(tuple(r) for r in scaled)


def partition_stabilizer(G, cosets, blocks):
    """{g : g B = B setwise for every block B} for G acting on G/J.

    ``blocks`` are sets of positions into ``cosets``; they must cover the
    coset list exactly once.
    """
    count = 0
    seen = set()
    for b in blocks:
        count += len(b)
        seen.update(b)
    if count != len(cosets) or seen != set(range(len(cosets))):
        raise PartitionInvalid("blocks must partition the coset list")
    lookup = G.coset_lookup(cosets)
    block_of = [None] * len(cosets)
    for bi, b in enumerate(blocks):
        for c in b:
            block_of[c] = bi
    members = []
    for g in range(G.order):
        ok = True
        for c in range(len(cosets)):
            c2 = lookup[G.mult(g, cosets[c][0])]
            if block_of[c2] != block_of[c]:
                ok = False
                break
        if ok:
            members.append(g)
    return Subgroup._trusted(G, members)


# -- construction ----------------------------------------------------------


def from_generators(degree, gens, name=None, cap=DEFAULT_ORDER_CAP):
    """Closure of the generators under multiplication.

    Elements are ordered by BFS from the identity, applying generators in
    the given order on the right.
    """
    for g in gens:
        if g.degree != degree:
            raise ValueError(f"generator degree {g.degree} != {degree}")
    ident = GroupElement.identity(degree)
    elements = [ident]
    index = {ident: 0}
    queue = [ident]
    while queue:
        nxt = []
        for x in queue:
            for g in gens:
                y = x * g
                if y not in index:
                    index[y] = len(elements)
                    elements.append(y)
                    nxt.append(y)
                    if len(elements) > cap:
                        raise CapExceeded(f"closure exceeded cap {cap}")
        queue = nxt
    gen_indices = []
    for g in gens:
        gi = index[g]
        if gi not in gen_indices:
            gen_indices.append(gi)
    if not gen_indices:
        gen_indices = [0]
    return FiniteMatrixGroup(degree, elements, gen_indices, name=name)


def _regular_representation(elements, mult, gens, name):
    """Left regular permutation representation of an abstract group.

    ``elements`` is an ordered list of labels with the identity first,
    ``mult`` a label-level product, ``gens`` a list of labels.
    """
    index = {e: i for i, e in enumerate(elements)}
    perm_gens = []
    for g in gens:
        perm = tuple(index[mult(g, x)] for x in elements)
        perm_gens.append(GroupElement(perm))
    return from_generators(len(elements), perm_gens, name=name)


def _even_permutations(n):
    import itertools

    perms = []
    for p in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if p[i] > p[j])
        if inv % 2 == 0:
            perms.append(p)
    return perms


def _icosahedral_group():
    """The order-60 rotation group realized on 12 points.

    Abstractly the alternating group on 5 symbols; the 12-point action is on
    cosets of a 5-element cyclic subgroup, which is the vertex action of the
    icosahedron up to relabeling. Keeps all arithmetic exact (no irrational
    vertex coordinates).
    """
    a5 = set(_even_permutations(5))

    def compose(p, q):  # x -> p[q[x]]
        return tuple(p[q[i]] for i in range(5))

    five = (1, 2, 3, 4, 0)
    three = (1, 2, 0, 3, 4)
    # closure just to order the abstract elements deterministically
    ident = tuple(range(5))
    elements = [ident]
    seen = {ident}
    queue = [ident]
    while queue:
        nxt = []
        for x in queue:
            for g in (five, three):
                y = compose(x, g)
                if y not in seen:
                    seen.add(y)
                    elements.append(y)
                    nxt.append(y)
        queue = nxt
    if len(elements) != 60 or seen != a5:
        raise AssertionError("expected the alternating group on 5 symbols")
    c5 = []
    p = ident
    while True:
        c5.append(p)
        p = compose(p, five)
        if p == ident:
            break
    # left cosets g C5, keyed by their lexicographically smallest member
    coset_key = {}
    for g in elements:
        key = min(compose(g, c) for c in c5)
        coset_key[g] = key
    keys = sorted(set(coset_key.values()))
    pos = {k: i for i, k in enumerate(keys)}
    perm_gens = []
    for g in (five, three):
        perm = [0] * len(keys)
        for k in keys:
            perm[pos[k]] = pos[coset_key[compose(g, k)]]
        perm_gens.append(GroupElement(tuple(perm)))
    return from_generators(len(keys), perm_gens, name="Icosahedral")


def binprod_group(m):
    """Even products of the pair transpositions (2i-1, 2i) on m points.

    Generated by t_1 t_j; the group of sign patterns with an even number of
    flips, order 2^(m/2 - 1).
    """
    if m < 8 or m & (m - 1):
        raise GroupError(f"m must be a power of 2, m >= 8; got {m}")
    half = m // 2

    def pair_swap(*pairs):
        perm = list(range(m))
        for i in pairs:
            perm[2 * i], perm[2 * i + 1] = perm[2 * i + 1], perm[2 * i]
        return GroupElement(tuple(perm))

    gens = [pair_swap(0, j) for j in range(1, half)]
    return from_generators(m, gens, name=f"BinProd({m})", cap=max(DEFAULT_ORDER_CAP, 2 ** (half - 1)))


def _named_builders():
    def c8():
        elems = list(range(8))
        return _regular_representation(elems, lambda a, b: (a + b) % 8, [1], "C8")

    def c2xc4():
        elems = [(a, b) for a in range(2) for b in range(4)]
        return _regular_representation(
            elems, lambda x, y: ((x[0] + y[0]) % 2, (x[1] + y[1]) % 4), [(1, 0), (0, 1)], "C2xC4"
        )

    def c2cubed():
        elems = [(a, b, c) for a in range(2) for b in range(2) for c in range(2)]
        return _regular_representation(
            elems,
            lambda x, y: tuple((xi + yi) % 2 for xi, yi in zip(x, y)),
            [(1, 0, 0), (0, 1, 0), (0, 0, 1)],
            "C2^3",
        )

    def d4():
        # (i, j) = r^i s^j with s r = r^-1 s
        elems = [(i, j) for j in range(2) for i in range(4)]

        def mult(x, y):
            i1, j1 = x
            i2, j2 = y
            i = (i1 + (i2 if j1 == 0 else -i2)) % 4
            return (i, (j1 + j2) % 2)

        return _regular_representation(elems, mult, [(1, 0), (0, 1)], "D4")

    def q8():
        # labels (letter, sign): letter in 1,i,j,k
        letters = ["1", "i", "j", "k"]
        table = {
            ("1", "1"): ("1", 1), ("1", "i"): ("i", 1), ("1", "j"): ("j", 1), ("1", "k"): ("k", 1),
            ("i", "1"): ("i", 1), ("i", "i"): ("1", -1), ("i", "j"): ("k", 1), ("i", "k"): ("j", -1),
            ("j", "1"): ("j", 1), ("j", "i"): ("k", -1), ("j", "j"): ("1", -1), ("j", "k"): ("i", 1),
            ("k", "1"): ("k", 1), ("k", "i"): ("j", 1), ("k", "j"): ("i", -1), ("k", "k"): ("1", -1),
        }
        elems = [(l, s) for s in (1, -1) for l in letters]

        def mult(x, y):
            l, s = table[(x[0], y[0])]
            return (l, s * x[1] * y[1])

        return _regular_representation(elems, mult, [("i", 1), ("j", 1)], "Q8")

    def z6():
        shift = GroupElement(tuple((i + 1) % 6 for i in range(6)))
        return from_generators(6, [shift], name="Z6_cyclic_perms")

    return {
        "C8": c8,
        "C2xC4": c2xc4,
        "C2^3": c2cubed,
        "D4": d4,
        "Q8": q8,
        "Z6_cyclic_perms": z6,
        "Icosahedral": _icosahedral_group,
    }


NAMED_GROUPS = ("C8", "C2xC4", "C2^3", "D4", "Q8", "Z6_cyclic_perms", "Icosahedral", "BinProd(16)")

_group_cache = {}


def named_group(name):
    """Construct one of the built-in groups by name (cached)."""
    if name in _group_cache:
        return _group_cache[name]
    builders = _named_builders()
    if name in builders:
        g = builders[name]()
    elif name.startswith("BinProd(") and name.endswith(")"):
        try:
            m = int(name[len("BinProd(") : -1])
        except ValueError:
            raise UnknownName(name) from None
        g = binprod_group(m)
    else:
        raise UnknownName(name)
    _group_cache[name] = g
    return g


def group_to_json_str(G):
    return json.dumps(G.to_json(), sort_keys=True)
