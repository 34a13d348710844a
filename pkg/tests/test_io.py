import json

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from nlmaxwell import io
from nlmaxwell.fields import reconstruct
from nlmaxwell.grid import Field6, GridSpec

from conftest import kerr

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=25, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(data=arrays(np.float64, (6, 8, 8), elements=finite),
       side=st.floats(0.1, 1e3), k=st.floats(-10, 10).filter(lambda x: x != 0))
def test_field6_roundtrip_is_bit_exact(tmp_path, data, side, k):
    u = Field6(GridSpec(side, 8), data)
    path = tmp_path / "u.maxw6"
    io.write_field6(path, u, k)
    back, k2 = io.read_field6(path)
    assert k2 == k
    assert back.grid == u.grid
    assert np.array_equal(back.data, u.data)


def _good_file(tmp_path):
    u = Field6(GridSpec(2.0, 8), np.arange(384, dtype=float).reshape(6, 8, 8))
    path = tmp_path / "u.maxw6"
    io.write_field6(path, u, 1.0)
    return path, path.read_bytes()


def test_header_layout(tmp_path):
    _, raw = _good_file(tmp_path)
    lines = raw.decode().splitlines()
    assert lines[:5] == ["MAXW6", "n_points 8", "side_length 2.0", "k 1.0", "components U1 U2 U3 Ut1 Ut2 Ut3"]
    assert len(lines) == 5 + 64
    # row-major nodes: the second row is node (0, 1)
    assert lines[6].split()[0] == "1"


@pytest.mark.parametrize("mutate, expect_at", [
    (lambda raw: raw.replace(b"MAXW6", b"MAXW7"), lambda raw: 0),
    (lambda raw: raw.replace(b"side_length", b"side_lenght"), lambda raw: raw.index(b"side_len")),
    (lambda raw: raw.replace(b"Ut3", b"Ut9"), lambda raw: raw.index(b"components")),
    (lambda raw: raw.replace(b"\n17 ", b"\n1x7 ", 1), lambda raw: raw.index(b"1x7")),
    (lambda raw: raw.rsplit(b"\n", 2)[0] + b"\n", lambda raw: len(raw)),
    (lambda raw: raw + b"1 2 3 4 5 6\n", lambda raw: len(raw) - len(b"1 2 3 4 5 6\n")),
])
def test_malformed_files_report_byte_offset(tmp_path, mutate, expect_at):
    path, raw = _good_file(tmp_path)
    bad = mutate(raw)
    path.write_bytes(bad)
    with pytest.raises(io.FieldFileError) as exc:
        io.read_field6(path)
    assert exc.value.offset == expect_at(bad)
    assert f"byte {exc.value.offset}" in str(exc.value)


def test_short_row_reported(tmp_path):
    path, raw = _good_file(tmp_path)
    lines = raw.split(b"\n")
    lines[7] = b" ".join(lines[7].split()[:5])
    bad = b"\n".join(lines)
    path.write_bytes(bad)
    with pytest.raises(io.FieldFileError, match="has 5 values") as exc:
        io.read_field6(path)
    assert exc.value.offset == bad.index(lines[7])


def test_nonfinite_rejected(tmp_path):
    path, raw = _good_file(tmp_path)
    bad = raw.replace(b"\n17 ", b"\nnan ", 1)
    path.write_bytes(bad)
    with pytest.raises(io.FieldFileError, match="non-finite value in row 17") as exc:
        io.read_field6(path)
    assert exc.value.offset == bad.index(b"nan ")


def test_raster_roundtrip_and_errors(tmp_path):
    vals = np.random.default_rng(0).normal(size=(8, 8))
    path = tmp_path / "V.raster"
    io.write_raster(path, vals, 4.0)
    back, n, side = io.read_raster(path)
    assert n == 8 and side == 4.0 and np.array_equal(back, vals)
    path.write_text("8\n1\n")
    with pytest.raises(io.FieldFileError) as exc:
        io.read_raster(path)
    assert exc.value.offset == 0


def test_json_summary_is_canonical(tmp_path):
    s = {"b": np.float64(1.5), "a": [np.int64(2), True], "c": {"z": float("inf")}}
    text = io.summary_json(s)
    assert text == io.summary_json(dict(reversed(list(s.items()))))
    d = json.loads(text)
    assert d["schema"] == io.SCHEMA_VERSION
    assert d["a"] == [2, True] and d["c"]["z"] == "inf"
    io.write_json_summary(tmp_path / "s.json", s)
    assert (tmp_path / "s.json").read_text() == text


def test_vtk_and_csv_writers(tmp_path):
    mat = kerr(8.0, 8)
    u = Field6(mat.grid, np.random.default_rng(1).normal(size=(6, 8, 8)))
    snap = reconstruct(u, mat, 0.0, [0.0, 0.5])
    io.write_vtk(tmp_path / "f.vtk", snap)
    text = (tmp_path / "f.vtk").read_text().splitlines()
    assert text[0] == "# vtk DataFile Version 3.0"
    assert "DIMENSIONS 8 8 2" in text and "POINT_DATA 128" in text
    assert sum(ln.startswith("VECTORS") for ln in text) == 4
    # x fastest: the second E row is node (1, 0) at z = 0
    i = text.index("VECTORS E double")
    np.testing.assert_allclose([float(x) for x in text[i + 2].split()], snap.E[0, :, 1, 0], rtol=1e-9)
    with pytest.raises(ValueError):
        io.write_vtk(tmp_path / "g.vtk", reconstruct(u, mat, 0.0, [0.0, 0.1, 0.5]))
    io.write_fields_csv(tmp_path / "f.csv", snap)
    tab = np.loadtxt(tmp_path / "f.csv", delimiter=",", skiprows=1)
    assert tab.shape == (128, 3 + 12 + 1)


def test_diagnostics_csv(tmp_path):
    hist = [{"iteration": 0, "J_v": 1.0, "step": 0.5}, {"iteration": 1, "J_v": 0.9, "step": 0.25}]
    io.write_diagnostics_csv(tmp_path / "d.csv", hist)
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines == ["iteration,J_v,step", "0,1.0,0.5", "1,0.9,0.25"]
