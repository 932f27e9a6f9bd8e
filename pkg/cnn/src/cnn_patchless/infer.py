"""Run a checkpoint over an envelope raster file."""

from __future__ import annotations

from pathlib import Path

from .raster import read_raster, write_raster
from .train import Checkpoint


def infer(ckpt: Checkpoint, input_path, output_path) -> Path:
    """Predict a density map and write it as a parametric raster.

    Output dims equal input dims regardless of network stride, so the
    map drops into the same aggregation and metric tooling as
    patch-based estimates.
    """
    raster = read_raster(input_path)
    if raster.kind != "envelope":
        raise ValueError(
            f"{input_path}: expected an envelope raster, got kind {raster.kind!r}"
        )
    pred = ckpt.predict(raster.data)
    provenance = {
        "model": ckpt.config.get("backbone", "encdec"),
        "epochs_trained": len(ckpt.history.get("train", [])),
        "source": Path(input_path).name,
    }
    return write_raster(output_path, pred, kind="parametric",
                        spacing=raster.spacing, provenance=provenance)
