import numpy as np
import pytest

from gdnn.group_core import named_group
from gdnn.model import GDNNModel, forward, init_weights
from gdnn.train import (
    AdamState,
    BadDimension,
    BinProdTask,
    TrainConfig,
    TrainError,
    accuracy_of,
    adam_step,
    bce_with_logits,
    binprod_architectures,
    binprod_closed_form,
    gradients,
    metrics_to_csv,
    run_binprod_experiment,
    summarize,
    train_binprod_once,
    unravel_embedding,
)


@pytest.fixture(scope="module")
def models16():
    archs = binprod_architectures(16)
    return {
        "type2": GDNNModel(archs["type2"]),
        "type1": GDNNModel(archs["type1"], strict=False),
        "unraveled": GDNNModel(archs["unraveled"], strict=False),
    }


@pytest.fixture(scope="module")
def task16():
    return BinProdTask.build(16)


class TestLoss:
    def test_bce_at_zero_logits(self):
        assert bce_with_logits(np.zeros(8), np.ones(8)) == pytest.approx(np.log(2))

    def test_accuracy(self):
        assert accuracy_of(np.array([1.0, -2.0, 3.0]), np.array([1.0, 0.0, 0.0])) == pytest.approx(2 / 3)


class TestGradients:
    def test_zero_weight_bias_gradient_closed_form(self, models16, task16):
        # at the origin the logit is 0, so the final-bias gradient is
        # mean(sigmoid(0) - y) = 0.5 - mean(y)
        model = models16["type2"]
        w = model.zero_weights()
        batch = task16.inputs[:10]
        labels = task16.labels[:10]
        loss, grads = gradients(model, w, batch, labels)
        expected = 0.5 - labels.mean()
        assert grads.biases[model.depth][0, 0] == pytest.approx(expected, abs=1e-12)

    def test_duplicated_batch_same_gradient(self, models16, task16):
        model = models16["type2"]
        w = init_weights(model, seed=1)
        x = task16.inputs[:1]
        y = task16.labels[:1]
        _, g1 = gradients(model, w, x, y)
        _, g2 = gradients(model, w, np.repeat(x, 4, axis=0), np.repeat(y, 4))
        for key in g1.coeffs:
            assert np.allclose(g1.coeffs[key], g2.coeffs[key])

    def test_empty_batch_rejected(self, models16, task16):
        model = models16["type2"]
        w = init_weights(model, seed=1)
        with pytest.raises(TrainError):
            gradients(model, w, np.zeros((0, 16)), np.zeros(0))

    @pytest.mark.parametrize("name", ["type2", "type1", "unraveled"])
    def test_finite_difference_agreement(self, models16, task16, name):
        model = models16[name]
        rng = np.random.default_rng(3)
        w = init_weights(model, seed=5, scheme="unit_normal")
        x = task16.inputs[rng.choice(256, size=16, replace=False)]
        y = task16.labels[rng.choice(256, size=16, replace=False)]
        loss, grads = gradients(model, w, x, y)
        h = 1e-5
        checked = 0
        for key in sorted(w.coeffs):
            arr = w.coeffs[key]
            if arr.size == 0:
                continue
            for _ in range(4):
                idx = tuple(rng.integers(0, s) for s in arr.shape)
                orig = arr[idx]
                arr[idx] = orig + h
                lp = bce_with_logits(forward(model, w, x)[0], y)
                arr[idx] = orig - h
                lm = bce_with_logits(forward(model, w, x)[0], y)
                arr[idx] = orig
                fd = (lp - lm) / (2 * h)
                g = grads.coeffs[key][idx]
                assert abs(fd - g) <= 1e-5 * max(1.0, abs(fd), abs(g))
                checked += 1
        assert checked >= 20


class TestAdam:
    def test_zero_gradient_no_update(self, models16):
        model = models16["type2"]
        w = init_weights(model, seed=2)
        before = w.copy()
        state = AdamState.for_weights(w)
        adam_step(state, w, model.zero_weights(), TrainConfig())
        for key in w.coeffs:
            assert np.allclose(w.coeffs[key], before.coeffs[key])

    def test_first_step_magnitude(self, models16):
        # Adam normalizes to unit scale, so the first update is about -lr
        model = models16["type2"]
        w = model.zero_weights()
        grads = model.zero_weights()
        grads.coeffs[(1, 1)][0, 0, 0] = 1.0
        state = AdamState.for_weights(w)
        cfg = TrainConfig(lr=0.01)
        adam_step(state, w, grads, cfg)
        assert w.coeffs[(1, 1)][0, 0, 0] == pytest.approx(-0.01, rel=1e-6)

    def test_lr_decay_schedule(self, models16):
        model = models16["type2"]
        w = model.zero_weights()
        cfg = TrainConfig(lr=0.01, lr_decay_per_step=0.99)
        state = AdamState.for_weights(w)
        grads = model.zero_weights()
        grads.coeffs[(1, 1)][0, 0, 0] = 1.0
        # steps-per-epoch for the configured split: ceil(0.2 * 2^8 / 64) = 1
        steps = 5
        for _ in range(steps):
            adam_step(state, w, grads, cfg)
        assert state.step == steps
        # effective lr for the next step would be lr * decay^steps
        assert cfg.lr * cfg.lr_decay_per_step**steps == pytest.approx(0.01 * 0.99**5)


class TestBinProdTask:
    def test_sizes(self, task16):
        assert task16.inputs.shape == (256, 16)
        assert np.all(task16.inputs.sum(axis=1) == 8)

    def test_classes_balanced(self, task16):
        assert task16.labels.sum() == 128

    def test_product_matches_construction(self, task16):
        for row, value in zip(task16.inputs[:32], task16.values[:32]):
            prod = 1
            for i in range(8):
                prod *= int(row[2 * i] - row[2 * i + 1])
            assert prod == value

    def test_bad_dimension(self):
        with pytest.raises(BadDimension):
            BinProdTask.build(12)

    def test_stratified_split(self, task16):
        train, val = task16.stratified_split(0.2, seed=0)
        assert len(train) + len(val) == 256
        labels = task16.labels[train]
        assert labels.sum() == len(train) / 2  # class balance preserved

    def test_orbit_classes(self, task16):
        # each class is a single group orbit
        G = named_group("BinProd(16)")
        plus = {tuple(r) for r, v in zip(task16.inputs, task16.values) if v == 1}
        x0 = next(iter(plus))
        orbit = {tuple(float(v) for v in G.elements[g].apply(x0)) for g in range(G.order)}
        assert orbit == plus


class TestBinProdGroupsAndArchs:
    def test_group_orders(self):
        assert named_group("BinProd(16)").order == 128
        assert named_group("BinProd(8)").order == 8

    def test_identity_in_group(self):
        G = named_group("BinProd(16)")
        assert G.elements[0].is_identity()

    def test_layer_degrees(self, models16):
        arch = models16["type2"].arch
        assert [layer.degree for layer in arch.layers] == [8, 4, 2, 1]
        for layer in arch.layers[:-1]:
            for rep, _ in layer.summands:
                assert rep.type == 2

    def test_unraveled_doubles(self, models16):
        arch = models16["unraveled"].arch
        assert [layer.degree for layer in arch.layers] == [16, 8, 4, 1]

    def test_hidden_parameter_ratio(self, models16):
        # free parameters in hidden layers: the doubled baseline carries
        # roughly 6.5x the type-2 count
        def hidden_params(model):
            total = 0
            for (i, j), basis in model.bases.items():
                if i < model.depth:
                    total += len(basis)
            return total

        r = hidden_params(models16["unraveled"]) / hidden_params(models16["type2"])
        assert 5.5 <= r <= 7.5

    def test_closed_form_all_inputs(self, models16, task16):
        w = binprod_closed_form(models16["type2"])
        out, _ = forward(models16["type2"], w, task16.inputs)
        assert np.array_equal(out.reshape(-1), task16.values.astype(np.float64))

    def test_closed_form_invariant(self, models16, task16):
        G = models16["type2"].group
        w = binprod_closed_form(models16["type2"])
        x = task16.inputs[7]
        base, _ = forward(models16["type2"], w, x)
        for g in (1, 5, 17, 99):
            gx = np.array(G.elements[g].apply(tuple(x)), dtype=np.float64)
            out, _ = forward(models16["type2"], w, gx)
            assert out == pytest.approx(base)

    def test_unravel_embedding_function_agreement(self, models16, task16):
        w = init_weights(models16["type2"], seed=4, scheme="unit_normal")
        wu = unravel_embedding(models16["type2"], models16["unraveled"], w)
        a, _ = forward(models16["type2"], w, task16.inputs)
        b, _ = forward(models16["unraveled"], wu, task16.inputs)
        assert np.max(np.abs(a - b)) <= 1e-9

    def test_closed_form_embedding_full_accuracy(self, models16, task16):
        w = binprod_closed_form(models16["type2"])
        wu = unravel_embedding(models16["type2"], models16["unraveled"], w)
        out, _ = forward(models16["unraveled"], wu, task16.inputs)
        assert accuracy_of(out, task16.labels) == 1.0


class TestTrainingLoop:
    def test_train_val_loss_tie(self, models16, task16):
        row, _ = train_binprod_once(models16["type2"], task16, TrainConfig(epochs=2), seed=0)
        assert abs(row.initial_train - row.initial_val) <= 1e-6
        assert abs(row.final_train - row.final_val) <= 1e-6

    def test_type1_accuracy_exactly_half(self, models16, task16):
        for seed in range(3):
            row, _ = train_binprod_once(models16["type1"], task16, TrainConfig(epochs=3), seed=seed)
            assert row.accuracy == 0.5

    def test_type1_transposition_invariance(self, models16, task16):
        # a single pair swap is outside the group, yet type-1 logits ignore it
        model = models16["type1"]
        w = init_weights(model, seed=8, scheme="unit_normal")
        x = task16.inputs[:20]
        xt = x.copy()
        xt[:, [2, 3]] = xt[:, [3, 2]]
        a, _ = forward(model, w, x)
        b, _ = forward(model, w, xt)
        assert np.max(np.abs(a - b)) <= 1e-9

    def test_logit_orbit_invariance(self, models16, task16):
        model = models16["type2"]
        w = init_weights(model, seed=9, scheme="unit_normal")
        G = model.group
        x = task16.inputs[:5]
        base, _ = forward(model, w, x)
        for g in G.generator_indices:
            gx = model.act_on_input(g, x)
            out, _ = forward(model, w, gx)
            assert np.max(np.abs(out - base)) <= 1e-9

    def test_zero_epochs_initial_equals_final(self, models16, task16):
        row, _ = train_binprod_once(models16["type2"], task16, TrainConfig(epochs=0), seed=1)
        assert row.initial_train == row.final_train

    def test_determinism(self, models16, task16):
        r1, _ = train_binprod_once(models16["type2"], task16, TrainConfig(epochs=3), seed=7)
        r2, _ = train_binprod_once(models16["type2"], task16, TrainConfig(epochs=3), seed=7)
        assert r1.final_train == r2.final_train
        assert r1.accuracy == r2.accuracy


class TestExperiment:
    def test_rows_and_csv(self):
        rows = run_binprod_experiment(
            m=16, seeds=range(2), config=TrainConfig(epochs=1), architectures=["type2", "type1"]
        )
        assert len(rows) == 4
        csv = metrics_to_csv(rows)
        assert csv.startswith("architecture,seed,")
        agg = summarize(rows)
        assert set(agg) == {"type2", "type1"}
        assert agg["type2"]["seeds"] == 2

    def test_type2init_matches_initial_loss(self):
        rows = run_binprod_experiment(
            m=16,
            seeds=range(2),
            config=TrainConfig(epochs=0),
            architectures=["type2", "unraveled-type2init"],
        )
        by = {}
        for r in rows:
            by.setdefault(r.architecture, {})[r.seed] = r
        for seed in range(2):
            # doubling embedding preserves the function, hence the loss
            assert by["type2"][seed].initial_train == pytest.approx(
                by["unraveled-type2init"][seed].initial_train, abs=1e-9
            )


class TestExtendedReproduction:
    """Qualitative separation of the three baselines under a schedule with
    enough optimizer movement (the pinned 5-epoch schedule leaves parameters
    essentially at initialization; see the acceptance notes)."""

    def test_type2_solves_task(self, models16, task16):
        cfg = TrainConfig(epochs=500, lr_decay_per_step=1.0)
        good = 0
        for seed in range(3):
            row, _ = train_binprod_once(models16["type2"], task16, cfg, seed)
            if row.final_train <= 0.01 and row.accuracy == 1.0:
                good += 1
        assert good == 3

    def test_unraveled_stuck_at_chance(self, models16, task16):
        cfg = TrainConfig(epochs=300)
        row, _ = train_binprod_once(models16["unraveled"], task16, cfg, seed=0)
        assert 0.6 <= row.final_train <= 0.8
        assert row.accuracy == 0.5
