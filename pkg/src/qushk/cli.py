"""The ``qus`` command line tool.

Subcommands: ``simulate`` (labeled dataset), ``estimate`` (parametric map
from an envelope raster), ``gain`` (reference-phantom normalization),
``uncertainty`` (multi-frame mean + coefficient of variation),
``correlation`` (lag-1 sample correlation), and ``hk sample|pdf``
(model diagnostics).

Exit codes are a stable scripting contract: 0 success, 2 configuration or
usage problems, 3 I/O problems, 4 degenerate data. All numeric output is
printed with 6 significant digits. Every subcommand accepts ``--seed``;
deterministic subcommands ignore it, and identical invocations produce
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .errors import (
    ConfigurationError,
    DegenerateDataError,
    EmptyMapError,
    FitError,
    InsufficientDataError,
    NumericalError,
    ParameterError,
    RasterFormatError,
)
from .field_simulator import EnvelopeFrame, generate_dataset, lag1_correlation
from .hk_model import HKParams, hk_pdf, hk_sample
from .parametric_imaging import (
    UncertaintyMap,
    ParametricMap,
    aggregate_frames,
    alpha_estimator,
    apply_gain,
    estimate_map,
    fit_gain,
)
from .raster import read_raster, write_raster


def _fmt(x: float) -> str:
    return f"{float(x):.6g}"


def _frame_from_raster(path) -> EnvelopeFrame:
    raster = read_raster(path)
    if raster.kind not in ("envelope", "rf"):
        raise ParameterError(
            f"{path}: expected an envelope raster, sidecar says kind={raster.kind!r}"
        )
    return EnvelopeFrame(
        data=np.asarray(raster.data, dtype=np.float64),
        spacing=raster.spacing,
        provenance=dict(raster.provenance),
    )


def _map_from_raster(path) -> ParametricMap:
    raster = read_raster(path)
    data = np.asarray(raster.data, dtype=np.float64)
    return ParametricMap(data=data, validity=np.isfinite(data))


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    ds_cfg = cfg.dataset_config(out_dir=args.out)

    def progress(entry):
        print(
            f"sample {entry['index'] + 1:>5}/{ds_cfg.n_samples}: "
            f"{entry['envelope']} {entry['density']}"
        )

    out = generate_dataset(ds_cfg, seed=args.seed, jobs=args.jobs, progress=progress)
    print(f"manifest: {out / 'manifest.json'}")
    return 0


def _cmd_estimate(args) -> int:
    cfg = load_config(args.config)
    patch_cfg = cfg.patch_config()
    solver_cfg = cfg.solver_config()
    frame = _frame_from_raster(args.input)
    pmap = estimate_map(frame, patch_cfg, alpha_estimator(solver_cfg))
    out = Path(args.out) if args.out else Path(args.input).with_name(
        Path(args.input).stem + "_alpha.qusr"
    )
    write_raster(
        out,
        pmap.data,
        kind="parametric",
        spacing=frame.spacing,
        provenance={"source": Path(args.input).name, "estimator": "xu-alpha",
                    "patch_extent": list(patch_cfg.patch_extent),
                    "overlap_fraction": patch_cfg.overlap_fraction},
    )
    n_windows = pmap.alignment["windows"]
    n_valid = pmap.alignment["valid_windows"]
    values = pmap.data[pmap.validity]
    print(
        f"valid patches {n_valid}/{n_windows} ({_fmt(n_valid / n_windows)}), "
        f"alpha range [{_fmt(values.min())}, {_fmt(values.max())}]"
    )
    print(f"map: {out}")
    return 0


def _cmd_gain(args) -> int:
    refs = [_frame_from_raster(p) for p in args.ref]
    target = _frame_from_raster(args.target)
    curve = fit_gain(refs)
    normalized = apply_gain(target, curve)
    prefix = Path(args.out) if args.out else Path(args.target).with_suffix("")
    out_raster = prefix.with_name(prefix.name + "_norm.qusr")
    out_csv = prefix.with_name(prefix.name + "_gain.csv")
    write_raster(
        out_raster,
        normalized.data,
        kind="envelope",
        spacing=normalized.spacing,
        provenance=normalized.provenance,
    )
    with open(out_csv, "w", encoding="utf-8") as fh:
        fh.write("depth,gain\n")
        for d, g in zip(curve.depth_axis, curve.fitted_values):
            fh.write(f"{int(d)},{g:.9g}\n")
    print(f"gain fit over {len(refs)} reference frame(s): "
          f"range [{_fmt(curve.fitted_values.min())}, {_fmt(curve.fitted_values.max())}]")
    print(f"normalized: {out_raster}")
    print(f"curve: {out_csv}")
    return 0


def _cmd_uncertainty(args) -> int:
    maps = [_map_from_raster(p) for p in args.maps]
    mean_map, unc_map = aggregate_frames(maps)
    prefix = Path(args.out)
    out_mean = prefix.with_name(prefix.name + "_mean.qusr")
    out_unc = prefix.with_name(prefix.name + "_uncertainty.qusr")
    provenance = {"sources": [Path(p).name for p in args.maps], "n_frames": len(maps)}
    write_raster(out_mean, mean_map.data, kind="parametric", provenance=provenance)
    write_raster(out_unc, unc_map.data, kind="uncertainty", provenance=provenance)
    valid = mean_map.validity
    print(
        f"aggregated {len(maps)} frame(s); "
        f"mean range [{_fmt(mean_map.data[valid].min())}, {_fmt(mean_map.data[valid].max())}], "
        f"uncertainty max {_fmt(unc_map.data[valid].max())}"
    )
    print(f"mean: {out_mean}")
    print(f"uncertainty: {out_unc}")
    return 0


def _cmd_correlation(args) -> int:
    frame = _frame_from_raster(args.input)
    print(f"lag1 correlation: {_fmt(lag1_correlation(frame))}")
    return 0


def _cmd_hk_sample(args) -> int:
    params = HKParams.from_alpha_k(args.alpha, args.k, args.mean_intensity)
    batch = hk_sample(params, args.n, args.seed)
    v = batch.values
    print(
        f"n {batch.count}, mean intensity {_fmt((v**2).mean())}, "
        f"mean amplitude {_fmt(v.mean())}, max {_fmt(v.max())}"
    )
    if args.out:
        write_raster(
            args.out,
            v.reshape(-1, 1),
            kind="envelope",
            provenance={"alpha": args.alpha, "k": args.k,
                        "mean_intensity": args.mean_intensity, "seed": args.seed},
        )
        print(f"samples: {args.out}")
    return 0


def _cmd_hk_pdf(args) -> int:
    params = HKParams.from_alpha_k(args.alpha, args.k, args.mean_intensity)
    a_max = args.a_max if args.a_max is not None else 4.0 * np.sqrt(args.mean_intensity)
    grid = np.linspace(0.0, a_max, args.points)
    dens = hk_pdf(grid, params)
    lines = [f"{a:.9g},{d:.9g}" for a, d in zip(grid, dens)]
    text = "amplitude,pdf\n" + "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"pdf: {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qus",
        description="Speckle simulation and homodyned-K parametric imaging.",
    )
    parser.add_argument("--version", action="version", version=f"qus {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed(p):
        p.add_argument("--seed", type=int, default=0,
                       help="RNG seed (deterministic subcommands ignore it)")

    p = sub.add_parser("simulate", help="generate a labeled speckle dataset")
    p.add_argument("--config", required=True, help="JSON config with a dataset section")
    p.add_argument("--out", default=None, help="output directory (overrides config)")
    p.add_argument("--jobs", type=int, default=1, help="parallel sample workers")
    add_seed(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="patch-based alpha map from an envelope raster")
    p.add_argument("input", help="envelope raster (.qusr)")
    p.add_argument("--config", required=True, help="JSON config with a patch section")
    p.add_argument("--out", default=None, help="output map raster path")
    add_seed(p)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("gain", help="fit reference gain and normalize a target frame")
    p.add_argument("target", help="target envelope raster")
    p.add_argument("--ref", action="append", required=True,
                   help="reference envelope raster (repeatable)")
    p.add_argument("--out", default=None, help="output prefix")
    add_seed(p)
    p.set_defaults(func=_cmd_gain)

    p = sub.add_parser("uncertainty", help="mean and uncertainty over map rasters")
    p.add_argument("maps", nargs="+", help="parametric map rasters")
    p.add_argument("--out", required=True, help="output prefix")
    add_seed(p)
    p.set_defaults(func=_cmd_uncertainty)

    p = sub.add_parser("correlation", help="print the lag-1 sample correlation")
    p.add_argument("input", help="envelope raster")
    add_seed(p)
    p.set_defaults(func=_cmd_correlation)

    p = sub.add_parser("hk", help="homodyned-K diagnostics")
    hk_sub = p.add_subparsers(dest="hk_command", required=True)

    q = hk_sub.add_parser("sample", help="draw samples and print summary stats")
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--k", type=float, required=True)
    q.add_argument("--mean-intensity", type=float, default=1.0, dest="mean_intensity")
    q.add_argument("--n", type=int, default=100000)
    q.add_argument("--out", default=None, help="write samples as an n x 1 raster")
    add_seed(q)
    q.set_defaults(func=_cmd_hk_sample)

    q = hk_sub.add_parser("pdf", help="print the density on an amplitude grid as CSV")
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--k", type=float, required=True)
    q.add_argument("--mean-intensity", type=float, default=1.0, dest="mean_intensity")
    q.add_argument("--points", type=int, default=200)
    q.add_argument("--a-max", type=float, default=None, dest="a_max")
    q.add_argument("--out", default=None)
    add_seed(q)
    q.set_defaults(func=_cmd_hk_pdf)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DegenerateDataError, InsufficientDataError, EmptyMapError,
            FitError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (RasterFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
