"""Raster container format and the JSON run-config loader."""

import json
import struct

import numpy as np
import pytest

from qushk import load_config, read_raster, write_raster
from qushk.errors import ConfigurationError, ParameterError, RasterFormatError
from qushk.raster import sidecar_path


def _rand(shape, seed=0):
    return np.random.default_rng(seed).random(shape).astype(np.float32)


class TestRasterRoundTrip:
    def test_bit_exact(self, tmp_path):
        data = _rand((37, 21), seed=1)
        path = write_raster(tmp_path / "a.qusr", data, kind="envelope",
                            spacing=(0.5, 2.0), provenance={"note": "x"})
        raster = read_raster(path)
        np.testing.assert_array_equal(raster.data, data)
        assert raster.data.dtype == np.dtype("<f4")
        assert raster.kind == "envelope"
        assert raster.spacing == (0.5, 2.0)
        assert raster.provenance == {"note": "x"}

    def test_float64_is_narrowed_on_write(self, tmp_path):
        data = np.array([[1.0, 1.0 + 1e-12]])
        raster = read_raster(write_raster(tmp_path / "a.qusr", data, kind="rf"))
        assert raster.data[0, 0] == raster.data[0, 1]

    def test_header_layout(self, tmp_path):
        data = _rand((3, 5))
        blob = write_raster(tmp_path / "a.qusr", data, kind="density").read_bytes()
        assert len(blob) == 16 + 4 * 3 * 5
        magic, version, dtype_code, n_a, n_l = struct.unpack_from("<4sHHII", blob)
        assert (magic, version, dtype_code, n_a, n_l) == (b"QUSR", 1, 1, 3, 5)

    def test_payload_is_axial_major_little_endian(self, tmp_path):
        data = np.arange(6, dtype=np.float32).reshape(2, 3)
        blob = write_raster(tmp_path / "a.qusr", data, kind="envelope").read_bytes()
        payload = np.frombuffer(blob, dtype="<f4", offset=16)
        np.testing.assert_array_equal(payload, [0, 1, 2, 3, 4, 5])

    def test_sidecar_is_deterministic(self, tmp_path):
        prov = {"b": 1, "a": [2, 3]}
        p1 = write_raster(tmp_path / "a.qusr", _rand((4, 4)), kind="envelope",
                          provenance=prov)
        p2 = write_raster(tmp_path / "b.qusr", _rand((4, 4)), kind="envelope",
                          provenance=dict(reversed(prov.items())))
        assert sidecar_path(p1).read_bytes() == sidecar_path(p2).read_bytes()

    def test_missing_sidecar_defaults(self, tmp_path):
        path = write_raster(tmp_path / "a.qusr", _rand((4, 4)), kind="density",
                            spacing=(2.0, 2.0))
        sidecar_path(path).unlink()
        raster = read_raster(path)
        assert raster.kind == "envelope"
        assert raster.spacing == (1.0, 1.0)
        assert raster.provenance == {}

    def test_read_data_is_immutable(self, tmp_path):
        raster = read_raster(write_raster(tmp_path / "a.qusr", _rand((4, 4)),
                                          kind="envelope"))
        with pytest.raises(ValueError):
            raster.data[0, 0] = 9.0


class TestRasterValidation:
    def test_write_rejects_bad_inputs(self, tmp_path):
        with pytest.raises(ParameterError):
            write_raster(tmp_path / "a.qusr", np.ones(8), kind="envelope")
        with pytest.raises(ParameterError):
            write_raster(tmp_path / "a.qusr", np.ones((0, 4)), kind="envelope")
        with pytest.raises(ParameterError):
            write_raster(tmp_path / "a.qusr", np.ones((4, 4)), kind="bmode")

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_raster(tmp_path / "nope.qusr")

    def test_truncated_header(self, tmp_path):
        p = tmp_path / "a.qusr"
        p.write_bytes(b"QUS")
        with pytest.raises(RasterFormatError, match="too short"):
            read_raster(p)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "a.qusr"
        p.write_bytes(struct.pack("<4sHHII", b"NOPE", 1, 1, 1, 1) + b"\0" * 4)
        with pytest.raises(RasterFormatError, match="magic"):
            read_raster(p)

    def test_unsupported_version_and_dtype(self, tmp_path):
        p = tmp_path / "a.qusr"
        p.write_bytes(struct.pack("<4sHHII", b"QUSR", 2, 1, 1, 1) + b"\0" * 4)
        with pytest.raises(RasterFormatError, match="version"):
            read_raster(p)
        p.write_bytes(struct.pack("<4sHHII", b"QUSR", 1, 7, 1, 1) + b"\0" * 4)
        with pytest.raises(RasterFormatError, match="dtype"):
            read_raster(p)

    def test_payload_length_mismatch(self, tmp_path):
        p = tmp_path / "a.qusr"
        p.write_bytes(struct.pack("<4sHHII", b"QUSR", 1, 1, 2, 2) + b"\0" * 8)
        with pytest.raises(RasterFormatError, match="length"):
            read_raster(p)

    def test_zero_dims_in_header(self, tmp_path):
        p = tmp_path / "a.qusr"
        p.write_bytes(struct.pack("<4sHHII", b"QUSR", 1, 1, 0, 4))
        with pytest.raises(RasterFormatError, match="dims"):
            read_raster(p)

    def test_corrupt_sidecar(self, tmp_path):
        path = write_raster(tmp_path / "a.qusr", _rand((4, 4)), kind="envelope")
        sidecar_path(path).write_text("{not json")
        with pytest.raises(RasterFormatError, match="sidecar"):
            read_raster(path)


VALID_DOC = {
    "psf": {"sigma_a": 2.0, "sigma_l": 3.0, "fc_norm": 0.3},
    "phantom": {
        "canvas": [128, 64],
        "regions": [
            {"kind": "full", "density": 4.0, "amp_mean": 2.0},
            {"kind": "rect", "density": 8.0, "amp_mean": 2.0, "bounds": [0, 0, 64, 64]},
        ],
    },
    "skip": [3, 1],
    "patch": {"patch_extent": [32, 32], "overlap_fraction": 0.5},
    "solver": {"alpha_bounds": [1.0, 50.0], "tolerance": 0.002},
    "dataset": {"n_samples": 2, "canvas": [96, 64], "skip": [3, 3],
                "sigma_a_range": [1.5, 2.5], "sigma_l_range": [1.5, 2.5]},
    "io": {"out_dir": "somewhere"},
}


def _write_doc(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


class TestRunConfig:
    def test_typed_accessors(self, tmp_path):
        cfg = load_config(_write_doc(tmp_path, VALID_DOC))
        assert cfg.psf_spec().sigma_l == 3.0
        assert cfg.phantom_spec().regions[1].density == 8.0
        assert cfg.skip_factors() == (3, 1)
        assert cfg.patch_config().overlap_fraction == 0.5
        assert cfg.solver_config().alpha_bounds == (1.0, 50.0)
        assert cfg.solver_config().tolerance == 0.002
        assert cfg.io_options() == {"out_dir": "somewhere"}

    def test_solver_defaults_when_absent(self, tmp_path):
        cfg = load_config(_write_doc(tmp_path, {"skip": [0, 0]}))
        assert cfg.solver_config().alpha_bounds == (0.5, 100.0)

    def test_unknown_section_named(self, tmp_path):
        with pytest.raises(ConfigurationError, match="sidecar"):
            load_config(_write_doc(tmp_path, {"sidecar": {}}))

    def test_invalid_values_name_section_and_bound(self, tmp_path):
        doc = {"phantom": {"canvas": [64, 64],
                           "regions": [{"kind": "full", "density": 25.0,
                                        "amp_mean": 2.0}]}}
        with pytest.raises(ConfigurationError) as exc:
            load_config(_write_doc(tmp_path, doc))
        msg = str(exc.value)
        assert "phantom" in msg and "density" in msg and "20" in msg

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"skip": [0,\n 0', encoding="utf-8")
        with pytest.raises(ConfigurationError, match="line"):
            load_config(path)

    def test_document_must_be_object(self, tmp_path):
        with pytest.raises(ConfigurationError, match="object"):
            load_config(_write_doc(tmp_path, [1, 2, 3]))

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "nope.json")

    def test_missing_section_on_access(self, tmp_path):
        cfg = load_config(_write_doc(tmp_path, {"skip": [0, 0]}))
        with pytest.raises(ConfigurationError, match="patch"):
            cfg.patch_config()

    def test_dataset_out_dir_precedence(self, tmp_path):
        cfg = load_config(_write_doc(tmp_path, VALID_DOC))
        assert cfg.dataset_config().out_dir == "somewhere"
        assert cfg.dataset_config(out_dir="cli-wins").out_dir == "cli-wins"
        bare = {"dataset": dict(VALID_DOC["dataset"])}
        cfg2 = load_config(_write_doc(tmp_path, bare, "bare.json"))
        with pytest.raises(ConfigurationError, match="out"):
            cfg2.dataset_config()

    def test_negative_skip_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError, match="skip"):
            load_config(_write_doc(tmp_path, {"skip": [-1, 0]}))
