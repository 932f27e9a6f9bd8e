"""Training loop behavior and checkpoint plumbing."""

import numpy as np
import pytest
import torch

from cnn_patchless import (Checkpoint, CheckpointError, ConfigurationError,
                           DivergenceError, TrainConfig, load_checkpoint,
                           save_checkpoint, train)


def _cfg(train_ds, **overrides):
    base = dict(dataset=str(train_ds), epochs=1, batch_size=4,
                base_channels=4, depth=1, seed=0)
    base.update(overrides)
    return TrainConfig(**base)


class TestConfigValidation:
    @pytest.mark.parametrize("field,value,pattern", [
        ("epochs", 0, "epochs"),
        ("batch_size", 0, "batch_size"),
        ("learning_rate", 0.0, "learning_rate"),
        ("learning_rate", -1e-3, "learning_rate"),
        ("optimizer", "sgd", "optimizer"),
        ("lr_schedule", "step", "lr_schedule"),
        ("backbone", "resnet", "backbone"),
        ("val_fraction", 1.0, "val_fraction"),
        ("val_fraction", -0.1, "val_fraction"),
    ])
    def test_out_of_range_rejected(self, field, value, pattern):
        with pytest.raises(ConfigurationError, match=pattern):
            TrainConfig(dataset="x", **{field: value})

    def test_defaults_are_valid(self):
        cfg = TrainConfig(dataset="x")
        assert cfg.optimizer == "radam"
        assert cfg.epochs == 200


class TestTrainLoop:
    def test_single_epoch_history(self, train_ds):
        ckpt = train(_cfg(train_ds))
        assert len(ckpt.history["train"]) == 1
        assert len(ckpt.history["val"]) == 1
        assert np.isfinite(ckpt.history["train"][0])
        assert ckpt.config["epochs"] == 1
        assert len(ckpt.train_fingerprint) == 10

    def test_seeded_runs_reproduce_history(self, train_ds):
        h1 = train(_cfg(train_ds, epochs=3)).history
        h2 = train(_cfg(train_ds, epochs=3)).history
        np.testing.assert_allclose(h1["train"], h2["train"], rtol=1e-12)
        np.testing.assert_allclose(h1["val"], h2["val"], rtol=1e-12)

    def test_loss_decreases_on_easy_run(self, train_ds):
        hist = train(_cfg(train_ds, epochs=15, base_channels=8)).history["train"]
        assert hist[-1] < hist[0]

    def test_validation_holdout_split(self, train_ds):
        ckpt = train(_cfg(train_ds, val_fraction=0.3, epochs=2))
        assert len(ckpt.history["val"]) == 2

    def test_runaway_learning_rate_aborts(self, train_ds):
        with pytest.raises(DivergenceError, match="learning rate") as info:
            train(_cfg(train_ds, learning_rate=1e8, epochs=30))
        assert info.value.epoch >= 1
        assert not np.isfinite(info.value.value)

    def test_missing_dataset_dir(self, tmp_path):
        from cnn_patchless import DatasetError
        with pytest.raises(DatasetError, match="manifest"):
            train(_cfg(tmp_path / "nowhere"))


class TestCheckpointIO:
    def test_round_trip(self, quick_ckpt, tmp_path):
        path = save_checkpoint(quick_ckpt, tmp_path / "w.pt")
        loaded = load_checkpoint(path)
        assert loaded.config == quick_ckpt.config
        assert loaded.history == quick_ckpt.history
        assert loaded.train_fingerprint == quick_ckpt.train_fingerprint
        for key, tensor in quick_ckpt.state_dict.items():
            assert torch.equal(loaded.state_dict[key], tensor)

    def test_no_temp_litter(self, quick_ckpt, tmp_path):
        save_checkpoint(quick_ckpt, tmp_path / "w.pt")
        assert [p.name for p in tmp_path.iterdir()] == ["w.pt"]

    def test_predict_without_dataset(self, quick_ckpt, tmp_path):
        """A saved checkpoint must be self-sufficient for inference."""
        path = save_checkpoint(quick_ckpt, tmp_path / "w.pt")
        loaded = load_checkpoint(path)
        pred = loaded.predict(np.random.default_rng(0).random((24, 16)) + 0.1)
        assert pred.shape == (24, 16)
        assert (pred > 0).all()

    def test_predict_pads_odd_dims(self, quick_ckpt):
        pred = quick_ckpt.predict(
            np.random.default_rng(1).random((25, 17)).astype(np.float32) + 0.1)
        assert pred.shape == (25, 17)

    def test_missing_fields_named(self, tmp_path):
        torch.save({"state_dict": {}}, tmp_path / "bad.pt")
        with pytest.raises(CheckpointError, match="config"):
            load_checkpoint(tmp_path / "bad.pt")

    def test_garbage_file(self, tmp_path):
        (tmp_path / "bad.pt").write_bytes(b"not a checkpoint")
        with pytest.raises(CheckpointError, match="unreadable"):
            load_checkpoint(tmp_path / "bad.pt")

    def test_absent_file_is_oserror(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_checkpoint(tmp_path / "absent.pt")

    def test_weights_config_mismatch(self, quick_ckpt):
        tampered = Checkpoint(
            state_dict=quick_ckpt.state_dict,
            config=dict(quick_ckpt.config, base_channels=16),
            history=quick_ckpt.history,
        )
        with pytest.raises(CheckpointError, match="fit"):
            tampered.model()
