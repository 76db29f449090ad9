import random
from fractions import Fraction

import pytest

from gdnn.group_core import (
    GroupElement,
    RationalMatrix,
    SubgroupPair,
    named_group,
    projection,
)
from gdnn.reps import (
    LayerRep,
    NotInFixedSpace,
    RepError,
    check_orthogonality,
    equivalent,
    fixed_space_dim,
    irrep,
    orbit_weight_matrix,
    random_fixed_vector,
    tunnel,
    unravel,
    unravel_raw,
    unravel_relabeling,
)


@pytest.fixture(scope="module")
def z6():
    return named_group("Z6_cyclic_perms")


@pytest.fixture(scope="module")
def z6_subs(z6):
    return {s.order: s for s in z6.subgroups()}


def z6_irrep(z6_subs, h, k):
    return irrep(SubgroupPair(z6_subs[h], z6_subs[k]))


class TestIrrepConstruction:
    def test_trivial(self, z6, z6_subs):
        rho = z6_irrep(z6_subs, 6, 6)
        assert rho.degree == 1 and rho.type == 1
        for g in range(z6.order):
            assert rho.evaluate(g) == GroupElement((0,))

    def test_sign_rep(self, z6, z6_subs):
        # (Z6, Z3): the generator maps to -1, so g -> (-1)^g
        rho = z6_irrep(z6_subs, 6, 3)
        assert rho.degree == 1 and rho.type == 2
        shift = z6.elements[1]
        assert shift.perm == tuple((i + 1) % 6 for i in range(6))
        for g in range(z6.order):
            power = z6.elements[g].perm[0]  # shift amount
            expected = 1 if power % 2 == 0 else -1
            assert rho.evaluate(g).signs[0] == expected

    def test_degree_three_type_two(self, z6, z6_subs):
        rho = z6_irrep(z6_subs, 2, 1)
        assert rho.degree == 3 and rho.type == 2

    def test_transversal_identity_first(self, z6, z6_subs):
        for h in (1, 2, 3, 6):
            rho = z6_irrep(z6_subs, h, h)
            assert rho.transversal[0] == 0

    def test_homomorphism_exhaustive(self, z6):
        for pair in z6.subgroup_pairs():
            rho = irrep(pair)
            for a in range(z6.order):
                for b in range(z6.order):
                    assert rho.evaluate(a) * rho.evaluate(b) == rho.evaluate(z6.mult(a, b))

    def test_homomorphism_binprod_sampled(self):
        G = named_group("BinProd(16)")
        # architecture pairs, exhaustive over all |G|^2 products
        from gdnn.train import binprod_architectures

        arch = binprod_architectures(16)["type2"]
        rng = random.Random(0)
        for layer in arch.layers:
            for rho, _ in layer.summands:
                for _ in range(400):
                    a = rng.randrange(G.order)
                    b = rng.randrange(G.order)
                    assert rho.evaluate(a) * rho.evaluate(b) == rho.evaluate(G.mult(a, b))

    def test_irreducibility_witness(self, z6):
        # for every i, j some g maps e_i to +-e_j
        for pair in z6.subgroup_pairs():
            rho = irrep(pair)
            n = rho.degree
            for i in range(n):
                for j in range(n):
                    assert any(rho.evaluate(g).perm[i] == j for g in range(z6.order))


class TestEvaluate:
    def test_identity(self, z6, z6_subs):
        for h, k in ((6, 6), (6, 3), (2, 1), (3, 3)):
            rho = z6_irrep(z6_subs, h, k)
            assert rho.evaluate(0).is_identity()

    def test_shift3_is_minus_identity(self, z6, z6_subs):
        rho = z6_irrep(z6_subs, 2, 1)
        el = rho.evaluate(3)  # BFS order: element 3 is shift-by-3
        assert z6.elements[3].perm[0] == 3
        assert el.perm == (0, 1, 2)
        assert el.signs == (-1, -1, -1)

    def test_layer_rep_block_diagonal(self, z6, z6_subs):
        a = z6_irrep(z6_subs, 2, 1)
        b = z6_irrep(z6_subs, 3, 3)
        layer = LayerRep([(a, 1), (b, 1)])
        g = 1
        el = layer.evaluate(g)
        ea, eb = a.evaluate(g), b.evaluate(g)
        assert el.perm[:3] == ea.perm
        assert tuple(p - 3 for p in el.perm[3:]) == eb.perm
        assert el.signs == ea.signs + eb.signs

    def test_layer_rep_multiplicity(self, z6, z6_subs):
        a = z6_irrep(z6_subs, 2, 1)
        layer = LayerRep([(a, 2)])
        assert layer.degree == 6


class TestEquivalence:
    def test_reflexive(self, z6, z6_subs):
        rho = z6_irrep(z6_subs, 2, 1)
        assert equivalent(rho, rho)

    def test_same_h_different_k(self, z6, z6_subs):
        assert not equivalent(z6_irrep(z6_subs, 2, 2), z6_irrep(z6_subs, 2, 1))

    def test_icosahedral_involutions(self):
        G = named_group("Icosahedral")
        c2s = [s for s in G.subgroups() if s.order == 2]
        a = irrep(SubgroupPair(c2s[0], c2s[0]))
        b = irrep(SubgroupPair(c2s[1], c2s[1]))
        assert equivalent(a, b)

    def test_inequivalent_summands_rejected(self, z6, z6_subs):
        a = z6_irrep(z6_subs, 2, 1)
        with pytest.raises(RepError):
            LayerRep([(a, 1), (z6_irrep(z6_subs, 2, 1), 1)])


class TestUnravel:
    def test_sign_rep_to_degree_two(self, z6, z6_subs):
        out = unravel(z6_irrep(z6_subs, 6, 3))
        assert out.degree == 2
        assert out.pair.H.order == 3 and out.pair.K.order == 3

    def test_degree_three_to_six(self, z6, z6_subs):
        out = unravel(z6_irrep(z6_subs, 2, 1))
        assert out.degree == 6
        assert out.pair.H.order == 1

    def test_trivial_unravels_to_two_copies(self, z6, z6_subs):
        out = unravel(z6_irrep(z6_subs, 6, 6))
        assert isinstance(out, LayerRep)
        assert out.degree == 2
        assert out.summands[0][1] == 2

    def test_raw_formula_is_permutation_homomorphism(self, z6):
        # doubled heaviside construction: permutation matrices, homomorphism
        for pair in z6.subgroup_pairs():
            rho = irrep(pair)
            for a in range(z6.order):
                ua = unravel_raw(rho, a)
                assert ua.is_unsigned()
                for b in range(z6.order):
                    assert ua * unravel_raw(rho, b) == unravel_raw(rho, z6.mult(a, b))

    def test_raw_formula_matches_coset_construction(self, z6):
        # the relabeling identifies the doubled rep with irrep(K, K) exactly
        for pair in z6.subgroup_pairs():
            if pair.index != 2:
                continue
            rho = irrep(pair)
            sigma, target = unravel_relabeling(rho)
            n = rho.degree
            for g in range(z6.order):
                raw = unravel_raw(rho, g)
                tgt = target.evaluate(g)
                for i in range(2 * n):
                    assert sigma[raw.perm[i]] == tgt.perm[sigma[i]]

    def test_stacking_equivariance(self, z6, z6_subs):
        # doubled rep applied to [W; -W] equals right-multiplication by g
        for (h, k) in ((2, 1), (6, 3), (3, 3)):
            rho = z6_irrep(z6_subs, h, k)
            w = random_fixed_vector(rho.pair)
            assert w is not None
            W = orbit_weight_matrix(rho, w)
            stacked = RationalMatrix(list(W.rows) + [[-x for x in row] for row in W.rows])
            for g in range(z6.order):
                lhs = stacked.signed_permute_rows(unravel_raw(rho, g))
                rhs = stacked @ RationalMatrix.from_element(z6.elements[g])
                assert lhs == rhs


class TestTunnel:
    def test_z6(self, z6, z6_subs):
        out = tunnel(z6_irrep(z6_subs, 2, 1))
        assert out.pair.H.order == 2 and out.pair.K.order == 2
        assert out.type == 1

    def test_type1_fixpoint(self, z6, z6_subs):
        rho = z6_irrep(z6_subs, 3, 3)
        assert tunnel(rho).pair.key() == rho.pair.key()


class TestOrbitWeights:
    def test_trivial_rep_single_row(self, z6, z6_subs):
        w = (1, 1, 1, 1, 1, 1)
        W = orbit_weight_matrix(z6_irrep(z6_subs, 6, 6), w)
        assert W.shape == (1, 6)
        assert W.rows[0] == tuple(Fraction(1) for _ in range(6))

    def test_rejects_outside_fixed_space(self, z6, z6_subs):
        with pytest.raises(NotInFixedSpace):
            orbit_weight_matrix(z6_irrep(z6_subs, 2, 1), (1, 0, 0, 0, 0, 0))

    def test_rejects_zero(self, z6, z6_subs):
        with pytest.raises(NotInFixedSpace):
            orbit_weight_matrix(z6_irrep(z6_subs, 2, 1), (0,) * 6)

    def test_equivariance_all_elements(self, z6):
        for pair in z6.subgroup_pairs():
            rho = irrep(pair)
            w = random_fixed_vector(pair)
            if w is None:
                continue
            W = orbit_weight_matrix(rho, w)
            for g in range(z6.order):
                lhs = W.signed_permute_rows(rho.evaluate(g))
                rhs = W @ RationalMatrix.from_element(z6.elements[g])
                assert lhs == rhs

    def test_alternating_pattern(self, z6, z6_subs):
        # the degree-3 type-2 pattern pairs column j with column j+3 negated
        pair = SubgroupPair(z6_subs[2], z6_subs[1])
        M = projection(z6_subs[1]) - projection(z6_subs[2])
        w = M.apply_to_vector((1, -1, 1, -1, 0, 0))
        W = orbit_weight_matrix(irrep(pair), w)
        for i in range(3):
            for j in range(3):
                assert W.rows[i][j] == -W.rows[i][j + 3]


class TestOrthogonality:
    def test_z6_h2(self, z6, z6_subs):
        H, K1, K2 = z6_subs[2], z6_subs[2], z6_subs[1]
        w1 = random_fixed_vector(SubgroupPair(H, K1))
        w2 = random_fixed_vector(SubgroupPair(H, K2))
        assert check_orthogonality(H, K1, K2, w1, w2)

    def test_identical_pairs_guarded(self, z6, z6_subs):
        H = z6_subs[2]
        w = random_fixed_vector(SubgroupPair(H, H))
        with pytest.raises(RepError):
            check_orthogonality(H, H, H, w, w)

    def test_binprod_first_layer(self):
        from gdnn.train import binprod_architectures

        arch = binprod_architectures(16)["type2"]
        rho = arch.layers[0].summands[0][0]
        H, K = rho.H, rho.K
        w1 = random_fixed_vector(SubgroupPair(H, H))
        w2 = random_fixed_vector(SubgroupPair(H, K))
        assert check_orthogonality(H, H, K, w1, w2)


class TestFixedSpaceDim:
    def test_type1_one(self, z6, z6_subs):
        assert fixed_space_dim(z6_irrep(z6_subs, 2, 2)) == 1
        assert fixed_space_dim(z6_irrep(z6_subs, 6, 6)) == 1

    def test_type2_zero(self, z6, z6_subs):
        assert fixed_space_dim(z6_irrep(z6_subs, 2, 1)) == 0
        assert fixed_space_dim(z6_irrep(z6_subs, 6, 3)) == 0
