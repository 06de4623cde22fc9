import math
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from pastfuture.report import (fmt_float, parse_float, read_correlations, read_null_histograms,
                               render_histogram, write_correlations, write_null_histograms,
                               write_quartile_csv)
from pastfuture.stats import (NEGATIVE, NONSIGNIFICANT, POSITIVE, UNDEFINED, CorrelationRecord,
                              aggregate_quartile)

SVG = "{http://www.w3.org/2000/svg}"


def _rec(author, r, cls):
    return CorrelationRecord(author, "ref_div->cit_div", 16, r,
                             None if r is None else (0.01 if cls in (POSITIVE, NEGATIVE) else 0.4),
                             cls)


def _bars(path):
    root = ET.parse(path).getroot()
    return [e for e in root.iter(f"{SVG}rect") if e.get("fill") != "white"]


def test_all_mass_at_one_single_right_bar(tmp_path):
    recs = [_rec(f"a{i}", 0.999, POSITIVE) for i in range(7)]
    rep = aggregate_quartile(recs, [r.author for r in recs], label="a")
    out = render_histogram(rep, tmp_path / "h.svg")
    bars = _bars(out)
    assert len(bars) == 1
    assert bars[0].get("fill") == "#f2c12e"
    right_edge = 520 - 16
    assert float(bars[0].get("x")) + float(bars[0].get("width")) == pytest.approx(right_edge, abs=0.05)


def test_null_only_curve_matches_bars(tmp_path):
    rng = np.random.default_rng(0)
    rs = np.clip(rng.normal(0, 0.3, 50), -0.99, 0.99)
    recs = [_rec(f"a{i}", float(r), NONSIGNIFICANT) for i, r in enumerate(rs)]
    hist = np.histogram(rs, np.linspace(-1, 1, 41))[0] / len(rs)
    rep = aggregate_quartile(recs, [r.author for r in recs],
                             null_hists={r.author: hist for r in recs})
    np.testing.assert_allclose(rep.null_counts, rep.counts, atol=1e-12)
    out = render_histogram(rep, tmp_path / "null.svg")
    root = ET.parse(out).getroot()
    points = next(root.iter(f"{SVG}polyline")).get("points").split()
    ys = [float(p.split(",")[1]) for p in points]
    tops = {}
    for bar in _bars(out):
        tops[round(float(bar.get("x")), 1)] = float(bar.get("y"))
    xs = [round(56 + i * (520 - 56 - 16) / 40, 1) for i in range(40)]
    for i, x in enumerate(xs):
        if rep.counts[i]:
            assert ys[i] == pytest.approx(tops[x], abs=0.02)


def test_q_annotation(tmp_path):
    recs = ([_rec(f"p{i}", 0.7, POSITIVE) for i in range(3)]
            + [_rec(f"n{i}", -0.7, NEGATIVE) for i in range(2)]
            + [_rec(f"z{i}", 0.0, NONSIGNIFICANT) for i in range(5)])
    rep = aggregate_quartile(recs, [r.author for r in recs])
    text = (tmp_path / "q.svg")
    render_histogram(rep, text)
    body = text.read_text()
    m = re.search(r"f\+ = ([\d.]+)\s+f- = ([\d.]+)\s+q = ([\d.]+|inf|undefined)", body)
    assert m
    assert float(m.group(3)) == pytest.approx(round(rep.f_plus / rep.f_minus, 2))
    assert float(m.group(1)) == pytest.approx(0.3) and float(m.group(2)) == pytest.approx(0.2)
    colors = {b.get("fill") for b in _bars(text)}
    assert colors == {"#2f6db5", "#f2c12e", "#9e9e9e"}


def test_empty_report_skipped(tmp_path, caplog):
    rep = aggregate_quartile([_rec("a", None, UNDEFINED)], ["a"])
    assert render_histogram(rep, tmp_path / "e.svg") is None
    assert not (tmp_path / "e.svg").exists()
    assert "skipping empty report" in caplog.text


def test_title_is_escaped(tmp_path):
    rep = aggregate_quartile([_rec("a", 0.5, POSITIVE)], ["a"])
    out = render_histogram(rep, tmp_path / "t.svg", title="a < b & c")
    assert ET.parse(out).getroot().tag == f"{SVG}svg"


def test_correlations_round_trip(tmp_path):
    recs = [_rec("a", 0.1234567890123, NONSIGNIFICANT), _rec("b", None, UNDEFINED),
            _rec("c", -1.0, NEGATIVE)]
    path = tmp_path / "c.csv"
    write_correlations(recs, path)
    assert read_correlations(path) == recs
    assert "NA" in path.read_text()


def test_null_histograms_round_trip(tmp_path):
    hists = {("a", "p"): np.array([3, 0, 7]) / 10, ("b", "p"): np.array([0, 10, 0]) / 10}
    path = tmp_path / "n.csv"
    write_null_histograms(hists, 10, path)
    back = read_null_histograms(path)
    for key, h in hists.items():
        assert np.array_equal(back[key], h)


def test_quartile_csv(tmp_path):
    recs = [_rec("a", 1.0, POSITIVE), _rec("b", -1.0, NEGATIVE)]
    rep = aggregate_quartile(recs, ["a", "b"], bins=2)
    path = tmp_path / "q.csv"
    write_quartile_csv(rep, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "bin_left,bin_right,count,positive_significant,negative_significant,null_average"
    assert lines[1:] == ["-1.0,0.0,1,0,1,0.0", "0.0,1.0,1,1,0,0.0"]


def test_float_format():
    assert fmt_float(None) == "NA" and fmt_float(math.nan) == "NA"
    assert fmt_float(math.inf) == "inf"
    assert parse_float(fmt_float(0.1 + 0.2)) == 0.1 + 0.2
    assert parse_float("NA") is None
