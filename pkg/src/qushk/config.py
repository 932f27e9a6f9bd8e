"""Run configuration: one JSON document, sections owned by the modules.

Recognized sections: ``psf``, ``phantom``, ``skip``, ``patch``, ``solver``,
``dataset``, ``io``. Each section is validated by constructing the owning
module's spec object, so the bounds live in exactly one place; validation
happens eagerly at load time, before any work starts, and failures name
the section and field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError, ParameterError
from .field_simulator import DatasetConfig, PhantomSpec, PSFSpec, Region
from .xu_estimator import SolverConfig
from .parametric_imaging import PatchConfig

_SECTIONS = ("psf", "phantom", "skip", "patch", "solver", "dataset", "io")


def _as_pair(value, name: str) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigurationError(f"{name} must be a pair, got {value!r}")
    return tuple(value)


@dataclass(frozen=True)
class RunConfig:
    """Parsed and validated configuration document."""

    raw: dict
    path: Path | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.raw, dict):
            raise ConfigurationError("config document must be a JSON object")
        unknown = set(self.raw) - set(_SECTIONS)
        if unknown:
            raise ConfigurationError(
                f"unknown config sections {sorted(unknown)}; known: {list(_SECTIONS)}"
            )
        # Validate everything present up front.
        for section in self.raw:
            self._build(section)

    def has(self, section: str) -> bool:
        return section in self.raw

    def _build(self, section: str):
        if section in self._cache:
            return self._cache[section]
        if section not in self.raw:
            raise ConfigurationError(f"config is missing the {section!r} section")
        body = self.raw[section]
        try:
            obj = getattr(self, f"_build_{section}")(body)
        except (ParameterError, ConfigurationError) as exc:
            raise ConfigurationError(f"{section}: {exc}") from exc
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"{section}: malformed section ({exc})") from exc
        self._cache[section] = obj
        return obj

    @staticmethod
    def _build_psf(body: dict) -> PSFSpec:
        return PSFSpec(
            sigma_a=float(body["sigma_a"]),
            sigma_l=float(body["sigma_l"]),
            fc_norm=float(body.get("fc_norm", 0.25)),
            kernel_half_extent=body.get("kernel_half_extent"),
        )

    @staticmethod
    def _build_phantom(body: dict) -> PhantomSpec:
        regions = []
        for i, reg in enumerate(body["regions"]):
            try:
                regions.append(
                    Region(
                        kind=reg["kind"],
                        density=float(reg["density"]),
                        amp_mean=float(reg["amp_mean"]),
                        bounds=tuple(reg["bounds"]) if reg.get("bounds") else None,
                    )
                )
            except (ParameterError, KeyError) as exc:
                raise ConfigurationError(f"regions[{i}]: {exc}") from exc
        canvas = _as_pair(body["canvas"], "canvas")
        return PhantomSpec(canvas=(int(canvas[0]), int(canvas[1])), regions=tuple(regions))

    @staticmethod
    def _build_skip(body) -> tuple[int, int]:
        pair = _as_pair(body, "skip")
        sa, sl = int(pair[0]), int(pair[1])
        if sa < 0 or sl < 0:
            raise ConfigurationError(f"skip factors must be >= 0, got {body!r}")
        return sa, sl

    @staticmethod
    def _build_patch(body: dict) -> PatchConfig:
        return PatchConfig(
            patch_extent=_as_pair(body["patch_extent"], "patch_extent"),
            overlap_fraction=float(body.get("overlap_fraction", 0.75)),
            min_valid_samples=int(body.get("min_valid_samples", 16)),
        )

    @staticmethod
    def _build_solver(body: dict) -> SolverConfig:
        kwargs = {}
        if "alpha_bounds" in body:
            kwargs["alpha_bounds"] = tuple(float(v) for v in _as_pair(body["alpha_bounds"], "alpha_bounds"))
        if "k_bounds" in body:
            kwargs["k_bounds"] = tuple(float(v) for v in _as_pair(body["k_bounds"], "k_bounds"))
        if "tolerance" in body:
            kwargs["tolerance"] = float(body["tolerance"])
        if "max_iterations" in body:
            kwargs["max_iterations"] = int(body["max_iterations"])
        return SolverConfig(**kwargs)

    @staticmethod
    def _build_dataset(body: dict) -> dict:
        # Keep as kwargs: out_dir may be overridden on the command line.
        kwargs = dict(body)
        kwargs.setdefault("out_dir", "")
        for key in (
            "canvas",
            "skip",
            "sigma_a_range",
            "sigma_l_range",
            "density_range",
            "amp_range",
            "shape_count_range",
            "shape_frac_range",
        ):
            if key in kwargs:
                kwargs[key] = tuple(_as_pair(kwargs[key], key))
        # Validate now with a placeholder path; a real path revalidates later.
        DatasetConfig(**{**kwargs, "out_dir": kwargs["out_dir"] or "."})
        return kwargs

    @staticmethod
    def _build_io(body: dict) -> dict:
        if not isinstance(body, dict):
            raise ConfigurationError(f"io section must be an object, got {body!r}")
        return dict(body)

    # Typed accessors; each raises ConfigurationError when the section is absent.
    def psf_spec(self) -> PSFSpec:
        return self._build("psf")

    def phantom_spec(self) -> PhantomSpec:
        return self._build("phantom")

    def skip_factors(self) -> tuple[int, int]:
        return self._build("skip")

    def patch_config(self) -> PatchConfig:
        return self._build("patch")

    def solver_config(self) -> SolverConfig:
        if not self.has("solver"):
            return SolverConfig()
        return self._build("solver")

    def dataset_config(self, out_dir: str | None = None) -> DatasetConfig:
        kwargs = dict(self._build("dataset"))
        if out_dir:
            kwargs["out_dir"] = str(out_dir)
        elif not kwargs.get("out_dir") and self.has("io"):
            kwargs["out_dir"] = self._build("io").get("out_dir", "")
        if not kwargs.get("out_dir"):
            raise ConfigurationError(
                "no output directory: set dataset.out_dir, io.out_dir, or pass --out"
            )
        return DatasetConfig(**kwargs)

    def io_options(self) -> dict:
        if not self.has("io"):
            return {}
        return self._build("io")


def load_config(path) -> RunConfig:
    """Parse and validate a JSON config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return RunConfig(raw=raw, path=path)
