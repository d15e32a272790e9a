import json

import pytest

from capdyn import io
from capdyn.datasets import AdoptionRecord


@pytest.mark.parametrize("kind,n", [("pisa", 111), ("adoption", 105), ("benchmarks", 20), ("deskill", 4)])
def test_bundled_counts(kind, n):
    assert len(io.ingest_csv(kind)) == n


def write(tmp_path, text, name="x.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_bad_rows_reported_with_line_numbers(tmp_path):
    p = write(tmp_path, "country,year,fraction\nA,2003,0.5\nA,2006,1.5\nB,x,0.2\nB,2009\n")
    with pytest.raises(io.CsvValidationError) as exc:
        io.ingest_csv("adoption", p)
    diags = exc.value.diagnostics
    assert [d.split(":")[0] for d in diags] == ["line 3", "line 4", "line 5"]
    assert "fraction" in diags[0]


def test_duplicates_rejected(tmp_path):
    p = write(tmp_path, "country,year,score\nA,2003,500\nA,2003,490\n")
    with pytest.raises(io.CsvValidationError, match="duplicate"):
        io.ingest_csv("pisa", p)


def test_header_mismatch(tmp_path):
    p = write(tmp_path, "country,yr,score\nA,2003,500\n")
    with pytest.raises(io.CsvValidationError, match="line 1"):
        io.ingest_csv("pisa", p)


def test_empty_file(tmp_path):
    p = write(tmp_path, "domain,decline,duration,time_unit\n")
    with pytest.raises(io.CsvValidationError, match="no data"):
        io.ingest_csv("deskill", p)


def test_unknown_kind():
    with pytest.raises(ValueError):
        io.ingest_csv("weather")


def test_fraction_out_of_range_record():
    with pytest.raises(ValueError):
        AdoptionRecord("A", 2003, 1.5)


ROWS = [dict(name="a", value=0.1 + 0.2, flag=True, n=3), dict(name="b", value=float("nan"), flag=False, n=4)]


def test_csv_json_equivalence(tmp_path):
    io.emit_results({"t": ROWS}, tmp_path / "c", "csv")
    io.emit_results({"t": ROWS}, tmp_path / "j", "json")
    c = io.read_table(tmp_path / "c" / "t.csv")
    j = io.read_table(tmp_path / "j" / "t.json")
    assert c[0]["value"] == j[0]["value"] == pytest.approx(0.3)
    assert c[0]["flag"] == "true" and j[0]["flag"] is True
    assert j[1]["value"] is None


def test_csv_line_endings(tmp_path):
    io.emit_results({"t": ROWS}, tmp_path, "csv")
    assert (tmp_path / "t.csv").read_bytes().count(b"\r\n") == 3


def test_manifest_row_counts(tmp_path):
    m = io.emit_results({"a": ROWS, "b": ROWS[:1]}, tmp_path, "csv", {"seed": 1})
    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk == m
    assert m["files"] == [{"file": "a.csv", "rows": 2}, {"file": "b.csv", "rows": 1}]


def test_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(PermissionError):
        io.ensure_writable(blocker / "sub")


def test_empty_table_rejected(tmp_path):
    with pytest.raises(ValueError):
        io.emit_results({"t": []}, tmp_path)


def test_format_value():
    assert io.format_value(1 / 3) == "0.3333333333"
    assert io.format_value(None) == "" and io.format_value(7) == "7"
