"""Model assembly, structure accessors, pruning, checkpoints."""

import json

import numpy as np
import pytest

from collapse_lab.errors import ConfigError
from collapse_lab.net.layers import BatchNorm, Dense, LeakyReLU, ReLU
from collapse_lab.net.model import MLP, load_checkpoint, pruned_copy, save_checkpoint


def small_model(norm="bn", **kw) -> MLP:
    args = dict(in_dim=6, classes=3, hidden_width=8, hidden_layers=2, norm=norm)
    args.update(kw)
    return MLP.build(rng=np.random.default_rng(0), **args)


class TestBuild:
    def test_block_layout_with_norm(self):
        model = small_model()
        kinds = [type(b) for b in model.blocks]
        assert kinds == [Dense, BatchNorm, ReLU, Dense, BatchNorm, ReLU, Dense]
        assert model.chain_sizes() == [(6, 8), (8, 8), (8, 3)]

    def test_block_layout_without_norm(self):
        model = small_model(norm="none", activation="leaky")
        kinds = [type(b) for b in model.blocks]
        assert kinds == [Dense, LeakyReLU, Dense, LeakyReLU, Dense]

    def test_gamma_and_alpha_reach_layers(self):
        model = small_model(norm="psbn", alpha=0.2, gamma_init=0.5)
        for _, layer in model.norm_blocks():
            assert np.all(layer.state.gamma == 0.5)
            assert layer.state.alpha == 0.2

    @pytest.mark.parametrize(
        "kw",
        [
            dict(norm="layernorm"),
            dict(activation="gelu"),
            dict(norm="psbn", alpha=0.0),
            dict(norm="bn", alpha=0.1),
            dict(hidden_layers=0),
            dict(hidden_width=0),
        ],
    )
    def test_build_rejects(self, kw):
        with pytest.raises(ConfigError):
            small_model(**kw)


class TestStructureAccessors:
    def test_norm_blocks_boundaries(self):
        model = small_model()
        assert [b for b, _ in model.norm_blocks()] == [0, 1]

    def test_unit_scales_bn(self):
        model = small_model()
        model.norm_blocks()[1][1].state.gamma[:] = [-2, 1, 0, 1, 1, 1, 1, 1]
        scales = model.unit_scales()
        assert set(scales) == {0, 1}
        assert np.array_equal(scales[1], [2, 1, 0, 1, 1, 1, 1, 1])

    def test_unit_scales_none_is_incoming_l1(self):
        model = small_model(norm="none")
        scales = model.unit_scales()
        dense = model.dense_blocks()
        assert set(scales) == {0, 1}
        for k in (0, 1):
            assert np.array_equal(scales[k], np.sum(np.abs(dense[k].w), axis=0))

    def test_filter_matrix_rows_are_units(self):
        model = small_model()
        assert np.array_equal(model.filter_matrix(0), model.dense_blocks()[0].w.T)

    def test_state_arrays_keys(self):
        keys = set(small_model().state_arrays())
        assert keys == {
            "b0.w", "b0.b", "b3.w", "b3.b", "b6.w", "b6.b",
            "b1.gamma", "b1.beta", "b1.running_mean", "b1.running_var",
            "b4.gamma", "b4.beta", "b4.running_mean", "b4.running_var",
        }


class TestEvalMode:
    def test_output_is_batch_size_independent(self):
        model = small_model()
        x = np.random.default_rng(1).standard_normal((10, 6))
        full = model.forward(x, "eval")
        assert np.allclose(model.forward(x[:3], "eval"), full[:3], rtol=1e-12, atol=1e-14)
        assert np.allclose(model.forward(x[7:], "eval"), full[7:], rtol=1e-12, atol=1e-14)


class TestPrunedCopy:
    def test_exactly_dead_unit_is_removable(self):
        model = small_model()
        bn = model.norm_blocks()[0][1]
        bn.state.gamma[2] = 0.0
        bn.state.beta[2] = 0.0
        x = np.random.default_rng(2).standard_normal((5, 6))
        before = model.forward(x, "eval")
        pruned, n = pruned_copy(model, threshold=1e-3)
        assert n == 1
        assert np.array_equal(pruned.forward(x, "eval"), before)
        # removal zeroes the unit's outgoing rows, original untouched
        assert not pruned.dense_blocks()[1].w[2].any()
        assert model.dense_blocks()[1].w[2].any()

    def test_nothing_collapsed_nothing_changes(self):
        model = small_model()
        x = np.random.default_rng(3).standard_normal((4, 6))
        before = model.forward(x, "eval")
        pruned, n = pruned_copy(model)
        assert n == 0
        assert np.array_equal(pruned.forward(x, "eval"), before)

    def test_counts_all_boundaries(self):
        model = small_model()
        for _, layer in model.norm_blocks():
            layer.state.gamma[:2] = 1e-9
        _, n = pruned_copy(model)
        assert n == 4


class TestCheckpoint:
    def test_round_trip_bitwise(self, tmp_path):
        model = small_model(norm="psbn", alpha=0.1)
        rng = np.random.default_rng(5)
        model.loss_and_grad(rng.standard_normal((6, 6)), rng.integers(0, 3, 6))
        path = tmp_path / "ck.json"
        save_checkpoint(path, model, rng, extra={"round": 2})
        loaded, rng2, extra = load_checkpoint(path)
        assert loaded.arch == model.arch
        assert extra == {"round": 2}
        for key, arr in model.state_arrays().items():
            assert np.array_equal(loaded.state_arrays()[key], arr), key
        assert np.array_equal(rng2.standard_normal(5), rng.standard_normal(5))

    def test_rejects_unknown_version(self, tmp_path):
        path = tmp_path / "ck.json"
        save_checkpoint(path, small_model(), np.random.default_rng(0))
        payload = json.loads(path.read_text())
        payload["version"] = 999
        path.write_text(json.dumps(payload))
        with pytest.raises(ConfigError):
            load_checkpoint(path)

    def test_rejects_missing_key(self, tmp_path):
        path = tmp_path / "ck.json"
        save_checkpoint(path, small_model(), np.random.default_rng(0))
        payload = json.loads(path.read_text())
        del payload["params"]["b0.w"]
        path.write_text(json.dumps(payload))
        with pytest.raises(ConfigError):
            load_checkpoint(path)

    def test_rejects_shape_mismatch(self, tmp_path):
        path = tmp_path / "ck.json"
        save_checkpoint(path, small_model(), np.random.default_rng(0))
        payload = json.loads(path.read_text())
        payload["params"]["b0.b"]["shape"] = [4, 2]
        path.write_text(json.dumps(payload))
        with pytest.raises(ConfigError):
            load_checkpoint(path)
