import json
import os

import numpy as np
import pytest

from gdnn import admissibility as adm
from gdnn.group_core import SubgroupPair, named_group
from gdnn.model import GDNNModel, LatentWeights, init_weights
from gdnn.reps import LayerRep, irrep


class TestExhaustiveAxioms:
    @pytest.mark.parametrize(
        "name", ["Z6_cyclic_perms", "C8", "C2xC4", "C2^3", "D4", "Q8", "Icosahedral", "BinProd(16)"]
    )
    def test_axioms_all_elements(self, name):
        G = named_group(name)
        assert G.order <= 128 or name == "Icosahedral"
        for i in range(G.order):
            assert G.mult(0, i) == i and G.mult(i, 0) == i
            assert G.mult(i, G.inv(i)) == 0
            el = G.elements[i]
            m = el.matrix()
            for row in m:
                assert sum(abs(x) for x in row) == 1
            for col in zip(*m):
                assert sum(abs(x) for x in col) == 1

    def test_binprod_homomorphism_exhaustive(self):
        from gdnn.train import binprod_architectures

        G = named_group("BinProd(16)")
        arch = binprod_architectures(16)["type2"]
        irreps = [rho for layer in arch.layers for rho, _ in layer.summands]
        for rho in irreps:
            table = [rho.evaluate(g) for g in range(G.order)]
            for a in range(G.order):
                for b in range(G.order):
                    assert table[a] * table[b] == table[G.mult(a, b)]


class TestThetaCache:
    def test_cache_round_trip(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GDNN_CACHE_DIR", str(tmp_path))
        adm._table_cache.clear()
        G = named_group("Z6_cyclic_perms")
        table = adm.pair_table(G)
        subs = {s.order: s for s in G.subgroups()}
        pair = table.classes[0].representative
        value = table.theta_for_class(pair, subs[3])
        table.save_cache()
        path = tmp_path / "theta_Z6_cyclic_perms.json"
        assert path.exists()
        # a fresh table loads the memo from disk
        adm._table_cache.clear()
        table2 = adm.PairTable(G)
        key = (pair.key(), table2.j_key(subs[3]))
        assert table2._theta_memo.get(key) == value
        adm._table_cache.clear()


class TestCheckpoint:
    def test_npz_round_trip(self, tmp_path):
        z6 = named_group("Z6_cyclic_perms")
        subs = {s.order: s for s in z6.subgroups()}
        full = z6.full_subgroup()
        arch = adm.ArchitectureSpec(
            z6,
            [
                LayerRep([(irrep(SubgroupPair(subs[2], subs[1])), 1)]),
                LayerRep([(irrep(SubgroupPair(full, full)), 1)]),
            ],
        )
        model = GDNNModel(arch)
        w = init_weights(model, seed=4)
        path = tmp_path / "weights.npz"
        w.save_npz(path)
        again = LatentWeights.load_npz(path)
        for key in w.coeffs:
            assert np.array_equal(w.coeffs[key], again.coeffs[key])
        for key in w.biases:
            assert np.array_equal(w.biases[key], again.biases[key])
