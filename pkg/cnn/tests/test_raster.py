"""File-format contract: header layout, sidecar rules, interop."""

import json
import struct

import numpy as np
import pytest

from cnn_patchless import Raster, RasterFormatError, read_raster, write_raster

HEADER = struct.Struct("<4sHHII")


def _write_valid(tmp_path, data=None, **meta):
    data = np.arange(12, dtype=np.float32).reshape(3, 4) if data is None else data
    return write_raster(tmp_path / "a.qusr", data, **meta)


class TestRoundTrip:
    def test_data_and_metadata_survive(self, tmp_path):
        data = np.linspace(0, 5, 15, dtype=np.float32).reshape(5, 3)
        path = _write_valid(tmp_path, data, kind="parametric",
                            spacing=(2.0, 3.5), provenance={"note": "x"})
        r = read_raster(path)
        np.testing.assert_array_equal(r.data, data)
        assert r.kind == "parametric"
        assert r.spacing == (2.0, 3.5)
        assert r.provenance == {"note": "x"}

    def test_float64_input_narrowed(self, tmp_path):
        path = _write_valid(tmp_path, np.ones((2, 2), dtype=np.float64))
        assert read_raster(path).data.dtype == np.float32

    def test_header_bytes(self, tmp_path):
        path = _write_valid(tmp_path)
        raw = path.read_bytes()
        assert HEADER.unpack_from(raw) == (b"QUSR", 1, 1, 3, 4)
        assert len(raw) == HEADER.size + 12 * 4

    def test_missing_sidecar_reads_with_defaults(self, tmp_path):
        path = _write_valid(tmp_path, kind="density")
        path.with_name(path.name + ".json").unlink()
        r = read_raster(path)
        assert (r.kind, r.spacing, r.provenance) == ("envelope", (1.0, 1.0), {})

    def test_read_data_is_immutable(self, tmp_path):
        r = read_raster(_write_valid(tmp_path))
        with pytest.raises(ValueError):
            r.data[0, 0] = 9.0

    def test_sidecar_is_sorted_compact_json(self, tmp_path):
        path = _write_valid(tmp_path, provenance={"z": 1, "a": 2})
        text = path.with_name(path.name + ".json").read_text()
        assert text == json.dumps(json.loads(text), sort_keys=True,
                                  separators=(",", ":")) + "\n"


class TestValidation:
    def test_write_rejects_non_2d(self, tmp_path):
        with pytest.raises(RasterFormatError, match="2-D"):
            write_raster(tmp_path / "b.qusr", np.zeros(5))

    def test_write_rejects_unknown_kind(self, tmp_path):
        with pytest.raises(RasterFormatError, match="kind"):
            write_raster(tmp_path / "b.qusr", np.zeros((2, 2)), kind="blob")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_raster(tmp_path / "absent.qusr")

    def test_short_header_names_file(self, tmp_path):
        p = tmp_path / "c.qusr"
        p.write_bytes(b"QUS")
        with pytest.raises(RasterFormatError, match="c.qusr"):
            read_raster(p)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "c.qusr"
        p.write_bytes(HEADER.pack(b"JUNK", 1, 1, 1, 1) + b"\0" * 4)
        with pytest.raises(RasterFormatError, match="magic"):
            read_raster(p)

    def test_future_version(self, tmp_path):
        p = tmp_path / "c.qusr"
        p.write_bytes(HEADER.pack(b"QUSR", 2, 1, 1, 1) + b"\0" * 4)
        with pytest.raises(RasterFormatError, match="version 2"):
            read_raster(p)

    def test_unknown_dtype_code(self, tmp_path):
        p = tmp_path / "c.qusr"
        p.write_bytes(HEADER.pack(b"QUSR", 1, 7, 1, 1) + b"\0" * 4)
        with pytest.raises(RasterFormatError, match="dtype"):
            read_raster(p)

    def test_truncated_payload(self, tmp_path):
        p = tmp_path / "c.qusr"
        p.write_bytes(HEADER.pack(b"QUSR", 1, 1, 2, 2) + b"\0" * 7)
        with pytest.raises(RasterFormatError, match="payload"):
            read_raster(p)

    def test_zero_dims(self, tmp_path):
        p = tmp_path / "c.qusr"
        p.write_bytes(HEADER.pack(b"QUSR", 1, 1, 0, 4))
        with pytest.raises(RasterFormatError, match="zero"):
            read_raster(p)

    def test_corrupt_sidecar(self, tmp_path):
        path = _write_valid(tmp_path)
        path.with_name(path.name + ".json").write_text("{nope")
        with pytest.raises(RasterFormatError, match="sidecar"):
            read_raster(path)

    def test_sidecar_unknown_kind(self, tmp_path):
        path = _write_valid(tmp_path)
        path.with_name(path.name + ".json").write_text('{"kind": "blob"}')
        with pytest.raises(RasterFormatError, match="blob"):
            read_raster(path)

    def test_sidecar_non_object(self, tmp_path):
        path = _write_valid(tmp_path)
        path.with_name(path.name + ".json").write_text("[1, 2]")
        with pytest.raises(RasterFormatError, match="object"):
            read_raster(path)


class TestToolkitInterop:
    """Both packages must agree on the bytes, not just the docs."""

    def test_reads_simulator_output(self, train_ds):
        r = read_raster(train_ds / "env_00000.qusr")
        assert isinstance(r, Raster)
        assert r.kind == "envelope"
        assert r.data.shape == (24, 16)
        assert r.spacing == (4.0, 4.0)
        assert r.provenance["master_seed"] == 77

    def test_own_output_readable_by_toolkit(self, tmp_path):
        qushk = pytest.importorskip("qushk")
        data = np.random.default_rng(1).random((6, 9)).astype(np.float32)
        path = write_raster(tmp_path / "m.qusr", data, kind="parametric",
                            spacing=(4.0, 4.0), provenance={"p": 1})
        r = qushk.read_raster(path)
        np.testing.assert_array_equal(r.data, data)
        assert r.kind == "parametric"
        assert r.spacing == (4.0, 4.0)
