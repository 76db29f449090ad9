"""Admissibility calculus for layer sequences: theta, phi, and counting.

theta(H, K, J) is computed combinatorially from the double cosets K\\G/J
(production path); the definitional projection stabilizer over the coset
permutation representation pi_J is kept as an exact test oracle.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field

from gdnn.group_core import (
    FiniteMatrixGroup,
    Subgroup,
    SubgroupPair,
    fixed_difference_matrix,
    pair_conjugacy_classes,
    partition_stabilizer,
    stabilizer_of_matrix,
)
from gdnn.reps import LayerRep, SignedPermIrrep, irrep


class AdmissibilityError(Exception):
    pass


class InvalidPair(AdmissibilityError):
    pass


class PrefixNotAdmissible(AdmissibilityError):
    pass


def theta(H: Subgroup, K: Subgroup, J: Subgroup) -> Subgroup:
    """The subgroup stabilizing the K-block partition of G/J.

    Blocks are the double cosets KxJ viewed as sets of left J-cosets; when
    |H:K| = 2 the blocks fixed by the H-side sign flip (hx in KxJ) carry the
    value zero and are merged into one block before taking the stabilizer.
    """
    G = H.parent
    if not K.is_subset_of(H) or H.order not in (K.order, 2 * K.order):
        raise InvalidPair("need K <= H with |H:K| in {1, 2}")
    cosets = G.left_cosets(J)
    blocks = G.double_cosets(K, J)
    if H.order == 2 * K.order:
        kset = set(K.members)
        h = min(x for x in H.members if x not in kset)
        merged = frozenset()
        kept = []
        lookup = G.coset_lookup(cosets)
        for rep, block in blocks:
            # block is in S iff h·(rep coset) stays inside the block
            if lookup[G.mult(h, rep)] in block:
                merged = merged | block
            else:
                kept.append(block)
        parts = kept + ([merged] if merged else [])
    else:
        parts = [block for _, block in blocks]
    return partition_stabilizer(G, cosets, parts)


def theta_oracle(H: Subgroup, K: Subgroup, J: Subgroup) -> Subgroup:
    """Definitional theta: exact stabilizer of P_K - (|H:K|-1) P_H in pi_J.

    Integer-scaled projections of the coset permutation representation; used
    only to cross-check the double-coset implementation.
    """
    G = H.parent
    cosets = G.left_cosets(J)
    n = len(cosets)
    act = G.coset_action(cosets)

    def perm_sum(sub):
        acc = [[0] * n for _ in range(n)]
        for x in sub.members:
            p = act[x]
            for c in range(n):
                acc[p[c]][c] += 1
        return acc

    kappa = H.order // K.order - 1
    sk = perm_sum(K)  # |K| P_K in pi_J
    if kappa:
        sh = perm_sum(H)
        M = [[H.order * sk[i][j] - K.order * sh[i][j] for j in range(n)] for i in range(n)]
    else:
        M = [[H.order * sk[i][j] for j in range(n)] for i in range(n)]
    rows = tuple(tuple(r) for r in M)
    members = []
    for g in range(G.order):
        p = act[g]
        if all(rows[p[i]] == rows[i] for i in range(n)):
            members.append(g)
    return Subgroup._trusted(G, members)


def theta_conjugation_audit(H, K, J, g) -> bool:
    """Prop-style invariance checks for a single conjugator g."""
    G = H.parent
    base = theta(H, K, J)
    if theta(H, K, J.conjugate(g)).members != base.members:
        return False
    conj = theta(H.conjugate(g), K.conjugate(g), J)
    expected = base.conjugate(g)
    return conj.members == expected.members


def phi_first(G: FiniteMatrixGroup, H: Subgroup, K: Subgroup) -> Subgroup:
    """phi^(1)(H, K) = st_G(P_K - (|H:K|-1) P_H) in the ambient input matrices."""
    M = fixed_difference_matrix(H, K)
    return stabilizer_of_matrix(G, M)


def phi(prefix_h_subgroups, G, H, K) -> Subgroup:
    """phi after the given prefix: intersect phi^(1) with theta over each
    distinct previous-layer H (multiplicities do not matter)."""
    result = set(phi_first(G, H, K).members)
    seen = set()
    for J in prefix_h_subgroups:
        if J.members in seen:
            continue
        seen.add(J.members)
        result &= set(theta(H, K, J).members)
    return Subgroup._trusted(G, sorted(result))


# -- architectures -----------------------------------------------------------


@dataclass
class ArchitectureSpec:
    """A sequence of layer reps over one group; the last layer is trivial."""

    group: FiniteMatrixGroup
    layers: list  # list of LayerRep
    input_channels: int = 1
    channels: list = None  # per-layer output channel counts, default all 1
    batchnorm: bool = False

    def __post_init__(self):
        if self.channels is None:
            self.channels = [1] * len(self.layers)
        if len(self.channels) != len(self.layers):
            raise AdmissibilityError("channels must match layer count")
        last = self.layers[-1]
        if len(last.summands) != 1 or not last.summands[0][0].is_trivial():
            raise AdmissibilityError("final layer must be the trivial rep")
        for layer in self.layers:
            for rep, _ in layer.summands:
                if rep.group is not self.group:
                    raise AdmissibilityError("all irreps must live over the architecture group")

    @property
    def depth(self):
        return len(self.layers)

    def to_json(self):
        return {
            "group": self.group.name or self.group.to_json(),
            "input_channels": self.input_channels,
            "channels": list(self.channels),
            "batchnorm": self.batchnorm,
            "layers": [{"irreps": [
                {"H": list(rep.H.members), "K": list(rep.K.members), "mult": k}
                for rep, k in layer.summands
            ]} for layer in self.layers],
        }

    def to_json_str(self):
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")) + "\n"

    @staticmethod
    def from_json(obj, group=None):
        from gdnn.group_core import named_group, FiniteMatrixGroup as FMG

        if group is None:
            g = obj["group"]
            group = named_group(g) if isinstance(g, str) else FMG.from_json(g)
        layers = []
        for layer_obj in obj["layers"]:
            summands = []
            for entry in layer_obj["irreps"]:
                H = group.subgroup(entry["H"])
                K = group.subgroup(entry["K"])
                summands.append((irrep(SubgroupPair(H, K)), entry.get("mult", 1)))
            layers.append(LayerRep(summands))
        return ArchitectureSpec(
            group,
            layers,
            input_channels=obj.get("input_channels", 1),
            channels=obj.get("channels"),
            batchnorm=obj.get("batchnorm", False),
        )


@dataclass
class AdmissibilityReport:
    admissible: bool
    entries: list  # (layer index, summand index, phi members, expected K members)
    failing: tuple = None  # (layer, summand) or None
    condition2_ok: bool = True

    def to_json(self):
        return {
            "admissible": self.admissible,
            "condition2_ok": self.condition2_ok,
            "failing": list(self.failing) if self.failing else None,
            "layers": [
                {"layer": li, "summand": si, "phi": list(phi_m), "expected_K": list(k_m)}
                for li, si, phi_m, k_m in self.entries
            ],
        }


def is_admissible(arch: ArchitectureSpec) -> AdmissibilityReport:
    """Check phi^(i)(H, K) = K for every layer and summand, plus the
    first-layer nonvanishing condition."""
    G = arch.group
    entries = []
    failing = None
    condition2_ok = True
    from gdnn.group_core import integer_projection_sum

    for si, (rep, _) in enumerate(arch.layers[0].summands):
        if rep.H.order == G.order:
            pg = integer_projection_sum(G.full_subgroup())
            if all(x == 0 for row in pg for x in row):
                condition2_ok = False
                failing = (0, si)
    prefix_hs = []
    for li, layer in enumerate(arch.layers):
        for si, (rep, _) in enumerate(layer.summands):
            sub = phi(prefix_hs, G, rep.H, rep.K)
            entries.append((li, si, sub.members, rep.K.members))
            if sub.members != rep.K.members and failing is None:
                failing = (li, si)
        prefix_hs.extend(rep.H for rep, _ in layer.summands)
    ok = failing is None and condition2_ok
    return AdmissibilityReport(ok, entries, failing, condition2_ok)


# -- enumeration over pair classes -------------------------------------------


class PairTable:
    """Canonical pair classes of a group plus a memoized theta table.

    theta is invariant under conjugation of J and equivariant under
    conjugation of (H, K), so one value per (pair class, J class) suffices.
    The table optionally persists as JSON under GDNN_CACHE_DIR.
    """

    def __init__(self, G: FiniteMatrixGroup):
        self.G = G
        self.classes = pair_conjugacy_classes(G.subgroup_pairs())
        self._theta_memo = {}
        self._phi1_memo = {}
        self._lock = threading.Lock()
        self._j_class_key = {}
        from gdnn.group_core import subgroup_conjugacy_classes

        for cls in subgroup_conjugacy_classes(G.subgroups()):
            key = cls[0].members
            for sub in cls:
                self._j_class_key[sub.members] = key
        self._load_cache()

    def j_key(self, J: Subgroup):
        return self._j_class_key[J.members]

    def theta_for_class(self, pair: SubgroupPair, J: Subgroup) -> frozenset:
        """theta members for a canonical class representative pair."""
        key = (pair.key(), self.j_key(J))
        with self._lock:
            hit = self._theta_memo.get(key)
        if hit is not None:
            return hit
        value = frozenset(theta(pair.H, pair.K, J).members)
        with self._lock:
            self._theta_memo.setdefault(key, value)
        return value

    def phi1_for_class(self, pair: SubgroupPair) -> frozenset:
        key = pair.key()
        hit = self._phi1_memo.get(key)
        if hit is None:
            hit = frozenset(phi_first(self.G, pair.H, pair.K).members)
            self._phi1_memo[key] = hit
        return hit

    def _cache_path(self):
        root = os.environ.get("GDNN_CACHE_DIR")
        if not root or not self.G.name:
            return None
        return os.path.join(root, f"theta_{self.G.name.replace('/', '_')}.json")

    def _load_cache(self):
        path = self._cache_path()
        if not path or not os.path.exists(path):
            return
        try:
            with open(path) as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError):
            return
        for entry in data:
            key = (
                (tuple(entry["H"]), tuple(entry["K"])),
                tuple(entry["J"]),
            )
            self._theta_memo[key] = frozenset(entry["theta"])

    def save_cache(self):
        path = self._cache_path()
        if not path:
            return
        os.makedirs(os.path.dirname(path), exist_ok=True)
        data = [
            {"H": list(hk[0]), "K": list(hk[1]), "J": list(jk), "theta": sorted(v)}
            for (hk, jk), v in self._theta_memo.items()
        ]
        with open(path, "w") as f:
            json.dump(data, f)


_table_cache = {}


def pair_table(G) -> PairTable:
    key = id(G)
    if key not in _table_cache:
        _table_cache[key] = PairTable(G)
    return _table_cache[key]


def counting_units(G):
    """Enumeration units for architecture counting: one canonical pair class
    per unit, degree > 1 (the trivial final layer is implicit, and no
    nontrivial degree-1 rep can extend a strictly decreasing chain)."""
    table = pair_table(G)
    units = []
    for cls in table.classes:
        rep = cls.representative
        if rep.rep_degree <= 1:
            continue
        units.append((rep.rep_degree, rep, 1))
    units.sort(key=lambda u: (-u[0], u[1].key()))
    return units


def _passes_condition2(G, pair):
    if pair.H.order != G.order:
        return True
    from gdnn.group_core import integer_projection_sum

    pg = integer_projection_sum(G.full_subgroup())
    return any(x != 0 for row in pg for x in row)


def prefix_admissible(G, prefix_layers):
    """Check the phi condition on a builder prefix (no trivial cap needed)."""
    prefix_hs = []
    for layer in prefix_layers:
        for rep, _ in layer.summands:
            sub = phi(prefix_hs, G, rep.H, rep.K)
            if sub.members != rep.K.members:
                return False
        prefix_hs.extend(rep.H for rep, _ in layer.summands)
    return True


def admissible_next(prefix_layers, G, degree_filter=None, mode="gdnn"):
    """Canonical pair classes (H, K) with phi(H, K) = K after the prefix.

    ``prefix_layers`` is a list of LayerRep chosen so far (possibly empty);
    ``degree_filter`` bounds the degree strictly from above (strict-decrease
    counting). Results are ordered by degree descending then canonical key;
    degree-1 classes are included (the trivial rep terminates a build).
    """
    prefix_layers = prefix_layers or []
    if not prefix_admissible(G, prefix_layers):
        raise PrefixNotAdmissible("prefix fails the layerwise phi condition")
    prefix_h = [rep.H for layer in prefix_layers for rep, _ in layer.summands]
    table = pair_table(G)
    out = []
    for cls in table.classes:
        rep = cls.representative
        if degree_filter is not None and rep.rep_degree >= degree_filter:
            continue
        if not _passes_condition2(G, rep):
            continue
        if mode == "crelu" and prefix_h:
            value = table.theta_for_class(rep, prefix_h[-1])
            ok = value == frozenset(rep.K.members)
        else:
            members = table.phi1_for_class(rep)
            for J in prefix_h:
                members = members & table.theta_for_class(rep, J)
            ok = members == frozenset(rep.K.members)
        if ok:
            out.append(rep)
    out.sort(key=lambda p: (-p.rep_degree, p.key()))
    return out


@dataclass
class CountRow:
    depth: int
    admissible: int
    total: int
    mode: str


def count_architectures(G, mode="gdnn", max_depth=None, units=None):
    """Depth-indexed admissible/total counts over strictly decreasing degrees.

    Sequences are built from enumeration units (pair classes with counting
    multiplicities), one irrep per layer, capped by the trivial final layer.
    GDNN mode applies the full phi recursion; CReLU mode applies the one-step
    chain condition theta(H_{i+1}, K_{i+1}, H_i) = K_{i+1} together with the
    first-layer condition phi^(1)(H_1, K_1) = K_1.
    """
    table = pair_table(G)
    if units is None:
        units = counting_units(G)
    degrees = sorted({d for d, _, _ in units}, reverse=True)
    by_degree = {}
    for d, rep, mult in units:
        by_degree.setdefault(d, []).append((rep, mult))

    totals = {}
    admissibles = {}

    def recurse(start_deg_idx, depth, prefix, prefix_weight, admissible_so_far):
        # prefix: pair class representatives chosen so far, outermost first
        for di in range(start_deg_idx, len(degrees)):
            d = degrees[di]
            for rep, mult in by_degree[d]:
                weight = prefix_weight * mult
                new_depth = depth + 1
                totals[new_depth + 1] = totals.get(new_depth + 1, 0) + weight
                if admissible_so_far:
                    if mode == "crelu":
                        if prefix:
                            value = table.theta_for_class(rep, prefix[-1].H)
                            ok = value == frozenset(rep.K.members)
                        else:
                            ok = table.phi1_for_class(rep) == frozenset(rep.K.members)
                    else:
                        members = table.phi1_for_class(rep)
                        for q in prefix:
                            members = members & table.theta_for_class(rep, q.H)
                        ok = members == frozenset(rep.K.members)
                    ok = ok and _passes_condition2(G, rep)
                else:
                    ok = False
                if ok:
                    admissibles[new_depth + 1] = admissibles.get(new_depth + 1, 0) + weight
                if max_depth is None or new_depth + 1 < max_depth + 1:
                    recurse(di + 1, new_depth, prefix + [rep], weight, ok)

    recurse(0, 0, [], 1, True)
    rows = []
    for depth in sorted(totals):
        if max_depth is not None and depth > max_depth:
            continue
        rows.append(CountRow(depth, admissibles.get(depth, 0), totals[depth], mode))
    return rows


def count_rows_to_csv(rows):
    lines = ["depth,admissible,total,mode"]
    for r in rows:
        lines.append(f"{r.depth},{r.admissible},{r.total},{r.mode}")
    return "\n".join(lines) + "\n"
