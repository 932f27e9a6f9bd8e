"""Shared fixtures: simulator-generated datasets, built once per session.

Datasets come from the qushk CLI run as a subprocess, which keeps this
package on its own side of the file-format boundary while still testing
against the real producer.
"""

import json
import subprocess
import sys

import pytest

DATASET_SECTION = {
    "n_samples": 10,
    "canvas": [96, 64],
    "skip": [3, 3],
    "sigma_a_range": [1.5, 2.5],
    "sigma_l_range": [1.5, 2.5],
}


def simulate_dataset(out_dir, n_samples, seed):
    cfg = out_dir.parent / f"cfg_{out_dir.name}.json"
    cfg.write_text(json.dumps({"dataset": dict(DATASET_SECTION, n_samples=n_samples)}))
    subprocess.run(
        [sys.executable, "-m", "qushk.cli", "simulate",
         "--config", str(cfg), "--out", str(out_dir), "--seed", str(seed)],
        check=True, capture_output=True,
    )
    return out_dir


@pytest.fixture(scope="session")
def train_ds(tmp_path_factory):
    """10 labeled samples, 24x16 frames; drives the overfit checks."""
    return simulate_dataset(tmp_path_factory.mktemp("ds") / "train", 10, 77)


@pytest.fixture(scope="session")
def other_ds(tmp_path_factory):
    """3 samples from a different master seed; disjoint from train_ds."""
    return simulate_dataset(tmp_path_factory.mktemp("ds") / "other", 3, 5)


@pytest.fixture(scope="session")
def quick_ckpt(train_ds):
    """Small 1-epoch checkpoint for plumbing tests that need real weights."""
    from cnn_patchless import TrainConfig, train

    return train(TrainConfig(dataset=str(train_ds), epochs=1, batch_size=4,
                             base_channels=4, depth=1, seed=0))
