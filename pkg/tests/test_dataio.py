import json

import numpy as np
import pytest

from expofuse import dataio
from expofuse.dataio import (CorruptImageError, ManifestError, ReportRow, UnsupportedFormatError, load_manifest,
                             parse_manifest, read_image, report_columns, write_image, write_report)


def test_pgm_bytes_scale(tmp_path):
    path = tmp_path / "a.pgm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 128, 255, 64]))
    np.testing.assert_array_equal(read_image(path), np.array([[0, 128 / 255], [1.0, 64 / 255]]))


def test_ppm_reads_rgb(tmp_path):
    path = tmp_path / "a.ppm"
    path.write_bytes(b"P6\n1 1\n255\n" + bytes([255, 0, 51]))
    np.testing.assert_array_equal(read_image(path), np.array([[[1.0, 0.0, 0.2]]]))


@pytest.mark.parametrize("suffix", [".png", ".pgm"])
def test_round_trip_is_bit_identical(tmp_path, rng, suffix):
    img = np.round(rng.random((9, 7)) * 255) / 255
    path = tmp_path / f"x{suffix}"
    write_image(path, img)
    np.testing.assert_array_equal(read_image(path), img)


def test_rgb_png_round_trip_and_idempotent_bytes(tmp_path, rng):
    img = rng.random((5, 6, 3))
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    write_image(a, img)
    write_image(b, read_image(a))
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("value, byte", [(0.5, 128), (1.0, 255), (0.0, 0)])
def test_write_quantization(tmp_path, value, byte):
    path = tmp_path / "q.pgm"
    write_image(path, np.full((2, 3), value))
    assert set(path.read_bytes()[-6:]) == {byte}


def test_truncated_file_is_corrupt(tmp_path, rng):
    path = tmp_path / "t.png"
    write_image(path, rng.random((32, 32)))
    path.write_bytes(path.read_bytes()[:40])
    with pytest.raises(CorruptImageError) as info:
        read_image(path)
    assert "t.png" in str(info.value)


def test_read_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_image(tmp_path / "missing.png")
    bad = tmp_path / "x.tiff"
    bad.write_bytes(b"II*\x00")
    with pytest.raises(UnsupportedFormatError):
        read_image(bad)


def test_mask_round_trip(tmp_path, rng):
    m = rng.random((6, 6)) > 0.5
    dataio.write_mask(tmp_path / "m.png", m)
    np.testing.assert_array_equal(dataio.read_mask(tmp_path / "m.png"), m)


def test_labels_keep_raw_values(tmp_path):
    labels = np.array([[0, 1], [2, 3]])
    write_image(tmp_path / "l.png", labels / 255)
    np.testing.assert_array_equal(dataio.read_labels(tmp_path / "l.png"), labels)


def entry(i, **kw):
    return {"id": i, "visible_path": f"{i}_vi.png", "infrared_path": f"{i}_ir.png", **kw}


def test_manifest_duplicate_id():
    with pytest.raises(ManifestError, match="duplicate"):
        parse_manifest({"entries": [entry("a"), entry("a")]})


def test_empty_manifest_is_valid():
    assert len(parse_manifest({"entries": []})) == 0


@pytest.mark.parametrize("doc", [
    {"entries": [{"id": "a", "visible_path": "v.png"}]},
    {"entries": [entry("")]},
    {"rows": []},
    [],
])
def test_manifest_validation(doc):
    with pytest.raises(ManifestError):
        parse_manifest(doc)


def test_manifest_paths_relative_to_file(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps({"entries": [entry("a", mask_path="a_m.png")]}))
    m = load_manifest(tmp_path / "m.json")
    e = m.entries[0]
    assert e.visible_path == tmp_path / "a_vi.png"
    assert e.mask_path == tmp_path / "a_m.png" and e.label_path is None
    dataio.dump_manifest(m, tmp_path / "n.json")
    assert load_manifest(tmp_path / "n.json") == m


def test_malformed_manifest(tmp_path):
    (tmp_path / "m.json").write_text("{entries: ")
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "m.json")


def test_one_row_csv_has_two_lines(tmp_path):
    write_report(tmp_path / "r.csv", [ReportRow("a", {"EN": 1.0})], "csv")
    assert (tmp_path / "r.csv").read_text().splitlines() == ["id,EN", "a,1.0"]


def test_column_order_is_fixed():
    values = {k: 0.0 for k in ("zeta_extra", "total", "SSIM", "in_mask", "EN", "Qabf", "MI", "VIF")}
    assert report_columns([ReportRow("a", values)]) == [
        "EN", "MI", "VIF", "Qabf", "SSIM", "in_mask", "total", "zeta_extra"]


def test_json_report_and_errors(tmp_path):
    rows = [ReportRow("a", {"SSIM": 0.5, "EN": 2.0}), ReportRow("b", {"SSIM": 0.25, "EN": 1.0})]
    write_report(tmp_path / "r.json", rows, "json")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert [list(d) for d in doc] == [["id", "EN", "SSIM"]] * 2
    with pytest.raises(ValueError):
        write_report(tmp_path / "r.x", rows, "xml")
    with pytest.raises(ValueError):
        report_columns([rows[0], ReportRow("c", {"EN": 1.0})])
