"""Grid-based speckle simulator with known scatterer number density.

A phantom is rasterized onto a fine grid where each point independently
holds at most one scatterer; the occupancy probability encodes the wanted
density per resolution cell. Convolving that tissue reflectivity function
with a cosine-modulated Gaussian point spread function yields RF, the
axial analytic-signal magnitude yields the envelope, and decimation
("sample skipping") trades resolution for decorrelation. Ground-truth
density maps stay aligned with the decimated frames, which is what makes
the output usable as labeled training data.

Conventions fixed here: arrays are (axial, lateral) with axial varying
fastest in files, and a resolution cell spans 3 sigma per direction, so a
cell covers G = (3 sigma_a) * (3 sigma_l) grid points. Ground truth is
only meaningful relative to that convention.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve, hilbert

from .errors import ConfigurationError, DegenerateDataError, ParameterError
from .raster import write_raster

REGION_KINDS = ("full", "rect", "ellipse")
DENSITY_RANGE = (1.0, 20.0)
AMP_RANGE = (1.0, 5.0)
# Amplitude jitter: variance is this fraction of the mean amplitude.
AMP_VARIANCE_FACTOR = 0.02
MIN_POST_SKIP = 8


@dataclass(frozen=True)
class PSFSpec:
    """Cosine-modulated Gaussian point spread function, in grid samples.

    ``fc_norm`` is the axial modulation frequency in cycles per sample.
    ``kernel_half_extent`` defaults to ceil(3 max(sigma)) and may only be
    widened, never narrowed below 3 sigma.
    """

    sigma_a: float
    sigma_l: float
    fc_norm: float = 0.25
    kernel_half_extent: int | None = None

    def __post_init__(self):
        if not (np.isfinite(self.sigma_a) and self.sigma_a > 0.0):
            raise ParameterError(f"sigma_a must be > 0, got {self.sigma_a}")
        if not (np.isfinite(self.sigma_l) and self.sigma_l > 0.0):
            raise ParameterError(f"sigma_l must be > 0, got {self.sigma_l}")
        if not (0.0 < self.fc_norm < 0.5):
            raise ParameterError(
                f"fc_norm must lie in (0, 0.5) cycles/sample, got {self.fc_norm}"
            )
        min_half = 3.0 * max(self.sigma_a, self.sigma_l)
        if self.kernel_half_extent is None:
            object.__setattr__(self, "kernel_half_extent", int(math.ceil(min_half)))
        elif self.kernel_half_extent < min_half:
            raise ParameterError(
                f"kernel_half_extent must be >= 3*max(sigma) = {min_half}, "
                f"got {self.kernel_half_extent}"
            )

    @property
    def resolution_cell_points(self) -> float:
        """Grid points per resolution cell: (3 sigma_a) * (3 sigma_l)."""
        return 9.0 * self.sigma_a * self.sigma_l


@dataclass(frozen=True)
class Region:
    """One phantom region: a density and mean amplitude over a shape.

    ``bounds`` is (a_min, l_min, a_max, l_max) for a rectangle (half-open,
    grid coordinates) or (center_a, center_l, radius_a, radius_l) for an
    ellipse; it must be None for the full background.
    """

    kind: str
    density: float
    amp_mean: float
    bounds: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        if self.kind not in REGION_KINDS:
            raise ParameterError(f"region kind must be one of {REGION_KINDS}, got {self.kind!r}")
        if not (DENSITY_RANGE[0] <= self.density <= DENSITY_RANGE[1]):
            raise ParameterError(
                f"density must lie in [{DENSITY_RANGE[0]:g}, {DENSITY_RANGE[1]:g}] "
                f"scatterers per resolution cell, got {self.density}"
            )
        if not (AMP_RANGE[0] <= self.amp_mean <= AMP_RANGE[1]):
            raise ParameterError(
                f"amp_mean must lie in [{AMP_RANGE[0]:g}, {AMP_RANGE[1]:g}], got {self.amp_mean}"
            )
        if self.kind == "full":
            if self.bounds is not None:
                raise ParameterError("full-background region takes no bounds")
            return
        if self.bounds is None or len(self.bounds) != 4:
            raise ParameterError(f"{self.kind} region needs 4 bounds values")
        b = tuple(float(v) for v in self.bounds)
        if self.kind == "rect" and not (b[0] < b[2] and b[1] < b[3]):
            raise ParameterError(f"rect bounds must satisfy a_min < a_max, l_min < l_max, got {b}")
        if self.kind == "ellipse" and not (b[2] > 0 and b[3] > 0):
            raise ParameterError(f"ellipse radii must be > 0, got {b}")
        object.__setattr__(self, "bounds", b)

    def mask(self, canvas: tuple[int, int]) -> np.ndarray:
        """Boolean membership mask on the given (axial, lateral) canvas."""
        n_a, n_l = canvas
        if self.kind == "full":
            return np.ones((n_a, n_l), dtype=bool)
        aa = np.arange(n_a, dtype=np.float64)[:, None]
        ll = np.arange(n_l, dtype=np.float64)[None, :]
        if self.kind == "rect":
            a0, l0, a1, l1 = self.bounds
            return (aa >= a0) & (aa < a1) & (ll >= l0) & (ll < l1)
        ca, cl, ra, rl = self.bounds
        return ((aa - ca) / ra) ** 2 + ((ll - cl) / rl) ** 2 <= 1.0


@dataclass(frozen=True)
class PhantomSpec:
    """Canvas dims (pre-skip) plus ordered regions; later regions win."""

    canvas: tuple[int, int]
    regions: tuple[Region, ...]

    def __post_init__(self):
        n_a, n_l = int(self.canvas[0]), int(self.canvas[1])
        if n_a < 1 or n_l < 1:
            raise ParameterError(f"canvas dims must be positive, got {self.canvas}")
        object.__setattr__(self, "canvas", (n_a, n_l))
        regions = tuple(self.regions)
        if not regions:
            raise ParameterError("phantom needs at least the background region")
        if regions[0].kind != "full":
            raise ParameterError("region 0 must be the full background")
        object.__setattr__(self, "regions", regions)

    def density_field(self) -> np.ndarray:
        """Per-grid-point density, later regions overwriting earlier ones."""
        return self._paint("density")

    def amp_field(self) -> np.ndarray:
        return self._paint("amp_mean")

    def _paint(self, attr: str) -> np.ndarray:
        out = np.empty(self.canvas, dtype=np.float64)
        out.fill(getattr(self.regions[0], attr))
        for region in self.regions[1:]:
            out[region.mask(self.canvas)] = getattr(region, attr)
        return out


@dataclass(frozen=True)
class TRFGrid:
    """Tissue reflectivity: amplitude raster plus occupancy mask."""

    amplitudes: np.ndarray
    occupancy: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.float64)
        occ = np.asarray(self.occupancy, dtype=bool)
        if amp.shape != occ.shape or amp.ndim != 2:
            raise ParameterError("amplitudes and occupancy must be matching 2D arrays")
        if np.any(amp[~occ] != 0.0):
            raise ParameterError("amplitudes must be zero where no scatterer sits")
        if np.any(amp[occ] <= 0.0):
            raise ParameterError("occupied amplitudes must be > 0")
        amp.flags.writeable = False
        occ.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "occupancy", occ)


@dataclass(frozen=True)
class EnvelopeFrame:
    """Nonnegative amplitude raster with sample spacing and provenance."""

    data: np.ndarray
    spacing: tuple[float, float] = (1.0, 1.0)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2:
            raise ParameterError(f"frame data must be 2D, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ParameterError("frame data must be finite")
        if d.size and d.min() < 0.0:
            raise ParameterError("envelope values must be >= 0")
        sp = (float(self.spacing[0]), float(self.spacing[1]))
        if sp[0] <= 0 or sp[1] <= 0:
            raise ParameterError(f"spacing must be positive, got {self.spacing}")
        d.flags.writeable = False
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "spacing", sp)

    @property
    def dims(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class DensityMap:
    """Ground-truth density raster aligned 1:1 with a post-skip frame."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2:
            raise ParameterError(f"density map must be 2D, got shape {d.shape}")
        if d.size and not (d.min() >= DENSITY_RANGE[0] and d.max() <= DENSITY_RANGE[1]):
            raise ParameterError(
                f"density values must lie in [{DENSITY_RANGE[0]:g}, {DENSITY_RANGE[1]:g}]"
            )
        d.flags.writeable = False
        object.__setattr__(self, "data", d)


def _as_rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def build_trf(phantom: PhantomSpec, psf: PSFSpec, seed) -> TRFGrid:
    """Scatter the phantom onto the grid, one scatterer per point at most.

    Each grid point holds a scatterer with probability p = density / G
    where G is the points-per-resolution-cell of ``psf``; amplitudes are
    Normal(amp_mean, 0.02 amp_mean) redrawn until positive. Deterministic
    given seed.
    """
    rng = _as_rng(seed)
    g = psf.resolution_cell_points
    density = phantom.density_field()
    p = density / g
    pmax = float(p.max())
    if pmax > 1.0:
        raise ConfigurationError(
            f"density {float(density.max()):g} exceeds grid capacity: "
            f"p = density/G = {pmax:g} > 1 with G = {g:g} points per cell; "
            "widen the PSF or lower the density"
        )
    occupancy = rng.random(phantom.canvas) < p
    amp_mean = phantom.amp_field()
    amplitudes = np.zeros(phantom.canvas, dtype=np.float64)
    means = amp_mean[occupancy]
    stds = np.sqrt(AMP_VARIANCE_FACTOR * means)
    draws = rng.normal(means, stds)
    bad = draws <= 0.0
    while np.any(bad):  # truncation at 0; hit with probability ~ 1e-12
        draws[bad] = rng.normal(means[bad], stds[bad])
        bad = draws <= 0.0
    amplitudes[occupancy] = draws
    return TRFGrid(amplitudes=amplitudes, occupancy=occupancy)


def psf_kernel(psf: PSFSpec) -> np.ndarray:
    """The kernel sampled on the symmetric grid, center at [half, half]."""
    half = psf.kernel_half_extent
    a = np.arange(-half, half + 1, dtype=np.float64)[:, None]
    l = np.arange(-half, half + 1, dtype=np.float64)[None, :]
    return np.exp(-0.5 * (a**2 / psf.sigma_a**2 + l**2 / psf.sigma_l**2)) * np.cos(
        2.0 * np.pi * psf.fc_norm * a
    )


def synthesize_rf(trf: TRFGrid, psf: PSFSpec) -> np.ndarray:
    """RF raster: linear 2D convolution of the reflectivity with the kernel,
    same-size output with zero padding."""
    kernel = psf_kernel(psf)
    if trf.amplitudes.shape[0] < kernel.shape[0] or trf.amplitudes.shape[1] < kernel.shape[1]:
        raise ConfigurationError(
            f"grid {trf.amplitudes.shape} smaller than PSF kernel {kernel.shape}"
        )
    return fftconvolve(trf.amplitudes, kernel, mode="same")


def detect_envelope(rf: np.ndarray, spacing: tuple[float, float] = (1.0, 1.0),
                    provenance: dict | None = None) -> EnvelopeFrame:
    """Axial analytic-signal magnitude of the RF raster."""
    rf = np.asarray(rf, dtype=np.float64)
    if rf.ndim != 2:
        raise ParameterError(f"rf must be 2D, got shape {rf.shape}")
    if not np.all(np.isfinite(rf)):
        raise ParameterError("rf must be finite")
    env = np.abs(hilbert(rf, axis=0))
    return EnvelopeFrame(data=env, spacing=spacing,
                         provenance=provenance if provenance is not None else {})


def skip_decimate(frame: EnvelopeFrame, skip_a: int, skip_l: int) -> EnvelopeFrame:
    """Keep every (skip+1)-th sample per direction; spacing scales to match."""
    skip_a = int(skip_a)
    skip_l = int(skip_l)
    if skip_a < 0 or skip_l < 0:
        raise ParameterError(f"skip factors must be >= 0, got {(skip_a, skip_l)}")
    data = frame.data[:: skip_a + 1, :: skip_l + 1]
    if data.shape[0] < MIN_POST_SKIP or data.shape[1] < MIN_POST_SKIP:
        raise ConfigurationError(
            f"post-skip dims {data.shape} fall below {MIN_POST_SKIP}x{MIN_POST_SKIP}"
        )
    provenance = dict(frame.provenance)
    provenance["skip"] = [skip_a, skip_l]
    return EnvelopeFrame(
        data=data.copy(),
        spacing=(frame.spacing[0] * (skip_a + 1), frame.spacing[1] * (skip_l + 1)),
        provenance=provenance,
    )


def lag1_correlation(frame: EnvelopeFrame) -> float:
    """Mean of the axial and lateral lag-1 Pearson coefficients."""
    data = frame.data
    if data.shape[0] < 2 or data.shape[1] < 2:
        raise ParameterError(f"frame must be at least 2x2, got {data.shape}")
    if data.max() == data.min():
        raise DegenerateDataError("constant frame has no defined correlation")
    coeffs = []
    for x, y in (
        (data[:-1, :], data[1:, :]),
        (data[:, :-1], data[:, 1:]),
    ):
        x = x.ravel()
        y = y.ravel()
        sx = x.std()
        sy = y.std()
        if sx == 0.0 or sy == 0.0:
            raise DegenerateDataError("frame constant along one direction")
        coeffs.append(float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy)))
    return 0.5 * (coeffs[0] + coeffs[1])


def density_ground_truth(
    phantom: PhantomSpec, psf: PSFSpec, skip_a: int, skip_l: int
) -> DensityMap:
    """Per-pixel true density at post-skip resolution.

    Same region-overwrite and decimation rules as the frame pipeline, so
    the map aligns 1:1 with the simulated envelope.
    """
    kernel_side = 2 * psf.kernel_half_extent + 1
    if phantom.canvas[0] < kernel_side or phantom.canvas[1] < kernel_side:
        raise ConfigurationError(
            f"canvas {phantom.canvas} smaller than PSF kernel ({kernel_side} per side)"
        )
    if float(phantom.density_field().max()) > psf.resolution_cell_points:
        raise ConfigurationError("density exceeds grid capacity for this PSF")
    skip_a = int(skip_a)
    skip_l = int(skip_l)
    if skip_a < 0 or skip_l < 0:
        raise ParameterError(f"skip factors must be >= 0, got {(skip_a, skip_l)}")
    dense = phantom.density_field()[:: skip_a + 1, :: skip_l + 1]
    if dense.shape[0] < MIN_POST_SKIP or dense.shape[1] < MIN_POST_SKIP:
        raise ConfigurationError(
            f"post-skip dims {dense.shape} fall below {MIN_POST_SKIP}x{MIN_POST_SKIP}"
        )
    return DensityMap(data=dense.copy())


def simulate_frame(phantom: PhantomSpec, psf: PSFSpec, skip: tuple[int, int], seed,
                   provenance: dict | None = None) -> tuple[EnvelopeFrame, DensityMap]:
    """Full single-frame pipeline: scatter, convolve, detect, decimate."""
    rng = _as_rng(seed)
    trf = build_trf(phantom, psf, rng)
    rf = synthesize_rf(trf, psf)
    prov = dict(provenance) if provenance else {}
    prov.update({"psf": {"sigma_a": psf.sigma_a, "sigma_l": psf.sigma_l,
                         "fc_norm": psf.fc_norm,
                         "kernel_half_extent": psf.kernel_half_extent}})
    env = detect_envelope(rf, provenance=prov)
    frame = skip_decimate(env, skip[0], skip[1])
    truth = density_ground_truth(phantom, psf, skip[0], skip[1])
    return frame, truth


@dataclass(frozen=True)
class DatasetConfig:
    """Knobs for labeled dataset generation.

    Per-sample PSF widths, region shapes, densities, and amplitudes are
    drawn uniformly inside the configured ranges from a seed derived per
    sample, so any single sample can be regenerated in isolation.
    """

    n_samples: int
    out_dir: str
    canvas: tuple[int, int] = (2048, 1024)
    skip: tuple[int, int] = (7, 7)
    sigma_a_range: tuple[float, float] = (2.0, 5.0)
    sigma_l_range: tuple[float, float] = (3.0, 8.0)
    fc_norm: float = 0.25
    density_range: tuple[float, float] = DENSITY_RANGE
    amp_range: tuple[float, float] = AMP_RANGE
    shape_count_range: tuple[int, int] = (1, 4)
    # Shape extent per dimension as a fraction of the canvas.
    shape_frac_range: tuple[float, float] = (0.10, 0.60)

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigurationError(f"n_samples must be >= 1, got {self.n_samples}")
        object.__setattr__(self, "out_dir", str(self.out_dir))
        canvas = (int(self.canvas[0]), int(self.canvas[1]))
        if canvas[0] < 1 or canvas[1] < 1:
            raise ConfigurationError(f"canvas dims must be positive, got {self.canvas}")
        object.__setattr__(self, "canvas", canvas)
        skip = (int(self.skip[0]), int(self.skip[1]))
        if skip[0] < 0 or skip[1] < 0:
            raise ConfigurationError(f"skip factors must be >= 0, got {self.skip}")
        object.__setattr__(self, "skip", skip)
        for name, rng_, lo, hi in (
            ("sigma_a_range", self.sigma_a_range, 1e-6, np.inf),
            ("sigma_l_range", self.sigma_l_range, 1e-6, np.inf),
            ("density_range", self.density_range, DENSITY_RANGE[0], DENSITY_RANGE[1]),
            ("amp_range", self.amp_range, AMP_RANGE[0], AMP_RANGE[1]),
            ("shape_frac_range", self.shape_frac_range, 0.01, 0.95),
        ):
            if not (lo <= rng_[0] <= rng_[1] <= hi):
                raise ConfigurationError(
                    f"{name} must be ordered and within [{lo:g}, {hi:g}], got {rng_}"
                )
        if not (0.0 < self.fc_norm < 0.5):
            raise ConfigurationError(f"fc_norm must lie in (0, 0.5), got {self.fc_norm}")
        if not (1 <= self.shape_count_range[0] <= self.shape_count_range[1]):
            raise ConfigurationError(
                f"shape_count_range must be ordered and >= 1, got {self.shape_count_range}"
            )
        post = (canvas[0] // (skip[0] + 1), canvas[1] // (skip[1] + 1))
        if post[0] < MIN_POST_SKIP or post[1] < MIN_POST_SKIP:
            raise ConfigurationError(
                f"post-skip dims {post} fall below {MIN_POST_SKIP}x{MIN_POST_SKIP}"
            )
        side = 2 * math.ceil(3.0 * max(self.sigma_a_range[1], self.sigma_l_range[1])) + 1
        if canvas[0] < side or canvas[1] < side:
            raise ConfigurationError(
                f"canvas {canvas} smaller than the largest PSF kernel ({side} per side)"
            )
        # Capacity: the densest phantom must still satisfy p <= 1.
        g_min = 9.0 * self.sigma_a_range[0] * self.sigma_l_range[0]
        if self.density_range[1] > g_min:
            raise ConfigurationError(
                f"density_range upper end {self.density_range[1]:g} exceeds the "
                f"smallest resolution cell ({g_min:g} grid points)"
            )


def _sample_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


def _draw_sample_spec(rng: np.random.Generator, cfg: DatasetConfig) -> tuple[PSFSpec, PhantomSpec]:
    """Draw one sample's PSF and phantom. Draw order is part of the format:
    changing it changes every dataset generated from an existing seed."""
    psf = PSFSpec(
        sigma_a=float(rng.uniform(*cfg.sigma_a_range)),
        sigma_l=float(rng.uniform(*cfg.sigma_l_range)),
        fc_norm=cfg.fc_norm,
    )
    n_a, n_l = cfg.canvas
    for _ in range(100):
        regions = [
            Region(
                kind="full",
                density=float(rng.uniform(*cfg.density_range)),
                amp_mean=float(rng.uniform(*cfg.amp_range)),
            )
        ]
        n_shapes = int(rng.integers(cfg.shape_count_range[0], cfg.shape_count_range[1] + 1))
        covered = np.zeros(cfg.canvas, dtype=bool)
        for _ in range(n_shapes):
            kind = "rect" if rng.random() < 0.5 else "ellipse"
            ext_a = rng.uniform(*cfg.shape_frac_range) * n_a
            ext_l = rng.uniform(*cfg.shape_frac_range) * n_l
            a0 = rng.uniform(0.0, n_a - ext_a)
            l0 = rng.uniform(0.0, n_l - ext_l)
            if kind == "rect":
                bounds = (a0, l0, a0 + ext_a, l0 + ext_l)
            else:
                bounds = (a0 + ext_a / 2.0, l0 + ext_l / 2.0, ext_a / 2.0, ext_l / 2.0)
            region = Region(
                kind=kind,
                density=float(rng.uniform(*cfg.density_range)),
                amp_mean=float(rng.uniform(*cfg.amp_range)),
                bounds=bounds,
            )
            covered |= region.mask(cfg.canvas)
            regions.append(region)
        if not covered.all():  # keep some visible background
            return psf, PhantomSpec(canvas=cfg.canvas, regions=tuple(regions))
    raise ConfigurationError("could not place shapes without occluding the background")


def _sample_filenames(index: int) -> tuple[str, str]:
    return f"env_{index:05d}.qusr", f"den_{index:05d}.qusr"


def _generate_one(cfg: DatasetConfig, master_seed: int, index: int) -> dict:
    """Worker for one dataset sample; returns its manifest entry."""
    out = Path(cfg.out_dir)
    env_name, den_name = _sample_filenames(index)
    seed_seq = _sample_seed(master_seed, index)
    rng = np.random.default_rng(seed_seq)
    psf, phantom = _draw_sample_spec(rng, cfg)
    entry = {
        "index": index,
        "envelope": env_name,
        "density": den_name,
        "spawn_key": [index],
        "psf": {
            "sigma_a": psf.sigma_a,
            "sigma_l": psf.sigma_l,
            "fc_norm": psf.fc_norm,
            "kernel_half_extent": psf.kernel_half_extent,
        },
        "regions": [
            {"kind": r.kind, "density": r.density, "amp_mean": r.amp_mean,
             "bounds": list(r.bounds) if r.bounds else None}
            for r in phantom.regions
        ],
    }
    env_path = out / env_name
    den_path = out / den_name
    if env_path.exists() and den_path.exists():
        return entry  # already on disk; spec draws above are deterministic
    provenance = {"master_seed": master_seed, "spawn_key": [index], "skip": list(cfg.skip)}
    frame, truth = simulate_frame(phantom, psf, cfg.skip, rng, provenance=provenance)
    write_raster(env_path, frame.data, kind="envelope", spacing=frame.spacing,
                 provenance=frame.provenance)
    write_raster(den_path, truth.data, kind="density", spacing=frame.spacing,
                 provenance=provenance)
    return entry


def generate_dataset(cfg: DatasetConfig, seed: int, jobs: int = 1,
                     progress=None) -> Path:
    """Write n_samples (envelope, density) raster pairs plus a manifest.

    Per-sample seeds derive from the master seed by spawn key, so samples
    are independent of generation order and the run can resume: existing
    pairs are not regenerated. Returns the dataset directory.
    """
    master_seed = int(seed)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    indices = list(range(cfg.n_samples))
    entries: dict[int, dict] = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for entry in pool.map(
                _generate_one, [cfg] * len(indices), [master_seed] * len(indices), indices
            ):
                entries[entry["index"]] = entry
                if progress is not None:
                    progress(entry)
    else:
        for index in indices:
            entry = _generate_one(cfg, master_seed, index)
            entries[entry["index"]] = entry
            if progress is not None:
                progress(entry)
    cfg_record = asdict(cfg)
    # The manifest sits inside out_dir; echoing the path back would make
    # otherwise identical datasets differ byte-for-byte.
    del cfg_record["out_dir"]
    manifest = {
        "master_seed": master_seed,
        "config": cfg_record,
        "samples": [entries[i] for i in indices],
    }
    manifest_path = out / "manifest.json"
    tmp = manifest_path.with_name(manifest_path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    os.replace(tmp, manifest_path)
    return out
