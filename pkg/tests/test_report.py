import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, strategies as st

from fleetbench.aggregate import FleetDistribution, SiteReport, SiteStats
from fleetbench.report import (BEST, MANIFEST, MISSING, EmptyDistribution, Table,
                               histogram_spec, nearest_rank, pie_spec, render_bars,
                               render_histogram, render_pie, render_table, write_report)
from fleetbench.results import read_text

SVG = "{http://www.w3.org/2000/svg}"
NS_KEY = ("op_latency", "int", "add")
BW_KEY = ("stream_bw", "", "copy")


def site(name, **means):
    stats = {}
    for key, unit, mean in ((NS_KEY, "ns", means.get("ns")), (BW_KEY, "MBps", means.get("bw"))):
        if mean is not None:
            stats[key] = SiteStats(name, key, unit, 2, mean, 0.1, mean - 0.1, mean + 0.1)
    return SiteReport(name, 2, stats, True, 0.0)


def wedges(svg):
    root = ET.fromstring(svg)
    return [e for e in root.iter() if e.get("class") == "wedge"]


# -- tables ---------------------------------------------------------------------------------

def test_table_best_markers():
    t = render_table([site("SB", ns=2.0, bw=500.0), site("SA", ns=1.0, bw=400.0)],
                     [NS_KEY, BW_KEY])
    assert [r[0] for r in t.rows] == ["SA", "SB"]
    assert t.rows[0][1].endswith(BEST) and not t.rows[1][1].endswith(BEST)
    assert t.rows[1][2].endswith(BEST) and not t.rows[0][2].endswith(BEST)
    assert t.footer == ["best", "SA", "SB"]
    assert "1 ± 0.1 (n=2)" in t.rows[0][1]


def test_table_missing_cell():
    t = render_table([site("SA", ns=3.0), site("SB", ns=4.0, bw=100.0)], [NS_KEY, BW_KEY])
    assert t.rows[0][2] == MISSING
    assert t.footer[2] == "SB"


def test_table_single_site_best_everywhere():
    t = render_table([site("SA", ns=3.0, bw=1.0)], [NS_KEY, BW_KEY])
    assert all(c.endswith(BEST) for c in t.rows[0][1:])


def test_table_ties_all_marked():
    t = render_table([site("SA", ns=1.0), site("SB", ns=1.0)], [NS_KEY])
    assert all(r[1].endswith(BEST) for r in t.rows) and t.footer[1] == "SA;SB"


def test_table_arity_and_forms():
    with pytest.raises(ValueError):
        Table("c", ["a", "b"], [["x"]])
    with pytest.raises(ValueError):
        render_table([], [NS_KEY])
    t = render_table([site("SA", ns=1.0)], [NS_KEY])
    assert t.to_csv().splitlines()[0] == "site,op_latency/int/add"
    assert t.to_text().splitlines()[0] == t.caption


# -- pies --------------------------------------------------------------------------------------

def test_pie_quarter_three_quarters():
    d = FleetDistribution("distro", "per_job", {"A": 0.25, "B": 0.75})
    spec = pie_spec(d)
    assert [(w.label, w.angle_degrees) for w in spec.wedges] == [("B", 270.0), ("A", 90.0)]
    svg = render_pie(d)
    assert [float(w.get("data-angle")) for w in wedges(svg)] == [270.0, 90.0]
    assert "B 75.0%" in svg and "A 25.0%" in svg


def test_pie_single_category():
    svg = render_pie(FleetDistribution("kernel_base", "per_site", {"2.6": 1.0}))
    (w,) = wedges(svg)
    assert w.tag == SVG + "circle" and float(w.get("data-angle")) == 360.0
    assert "100.0%" in svg


def test_pie_thirds_ordered_by_label():
    third = 1 / 3
    spec = pie_spec(FleetDistribution("x", "per_site", {"c": third, "a": third, "b": third}))
    assert [w.label for w in spec.wedges] == ["a", "b", "c"]
    assert all(w.angle_degrees == pytest.approx(120.0) for w in spec.wedges)


def test_pie_errors():
    with pytest.raises(EmptyDistribution):
        render_pie(FleetDistribution("x", "per_site", {}))
    with pytest.raises(ValueError):
        pie_spec(FleetDistribution("x", "per_site", {"a": 0.5}))


@st.composite
def distributions(draw):
    weights = draw(st.lists(st.integers(1, 1000), min_size=1, max_size=12))
    total = sum(weights)
    return FleetDistribution("attr", "per_job",
                             {f"c{i}": w / total for i, w in enumerate(weights)})


@given(distributions())
def test_pie_angles_sum_and_determinism(d):
    svg = render_pie(d)
    assert abs(sum(float(w.get("data-angle")) for w in wedges(svg)) - 360) <= 1e-6
    assert render_pie(d) == svg


def test_pie_escapes_labels():
    svg = render_pie(FleetDistribution("x", "per_site", {'<a&"b">': 1.0}))
    ET.fromstring(svg)


# -- histograms ----------------------------------------------------------------------------------

def test_histogram_no_zoom():
    spec = histogram_spec([1, 1, 2, 9], 2)
    assert spec.edges == (1, 5, 9) and spec.counts == (3, 1) and spec.overflow == 0


def test_histogram_zoom_75():
    assert nearest_rank([1, 1, 2, 9], 75) == 2
    spec = histogram_spec([1, 1, 2, 9], 2, 75)
    assert spec.zoom_upper == 2 and spec.overflow == 1
    assert spec.edges[-1] == 2 and sum(spec.counts) == 3
    svg = render_histogram([1, 1, 2, 9], 2, 75)
    root = ET.fromstring(svg)
    (note,) = [e for e in root.iter() if e.get("class") == "overflow"]
    assert note.get("data-overflow") == "1"


def test_histogram_all_equal():
    spec = histogram_spec([4, 4, 4], 5)
    assert spec.counts == (3,)


def test_histogram_preconditions():
    with pytest.raises(ValueError):
        histogram_spec([], 2)
    with pytest.raises(ValueError):
        histogram_spec([1], 0)
    with pytest.raises(ValueError):
        histogram_spec([1], 1, 0)
    with pytest.raises(ValueError):
        histogram_spec([1], 1, 101)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=80), st.integers(1, 20),
       st.one_of(st.none(), st.floats(1, 100)))
def test_histogram_conservation(values, bins, pct):
    spec = histogram_spec(values, bins, pct)
    assert sum(spec.counts) + spec.overflow == len(values)
    assert len(spec.counts) in (1, bins)
    if pct is not None:
        assert spec.edges[-1] <= spec.zoom_upper
    svg = render_histogram(spec)
    ET.fromstring(svg)
    assert svg == render_histogram(histogram_spec(values, bins, pct))


def test_bars_well_formed():
    svg = render_bars([("SA", 10), ("SB", 30)], "Jobslots", "slots")
    bars = [e for e in ET.fromstring(svg).iter() if e.get("class") == "bar"]
    assert [b.get("data-value") for b in bars] == ["10", "30"]


# -- writer -----------------------------------------------------------------------------------

def test_write_report_manifest_and_determinism(tmp_path):
    reports = [site("SA", ns=1.0, bw=400.0), site("SB", ns=2.0, bw=500.0)]
    dists = [FleetDistribution("distro", "per_site", {"A": 0.5, "B": 0.5})]
    run1 = write_report(tmp_path / "one", reports, dists, jobslots={"SA": 10, "SB": 30})
    run2 = write_report(tmp_path / "two", reports, dists, jobslots={"SA": 10, "SB": 30})
    listed = [line.split(",")[0] for line in
              read_text(tmp_path / "one" / MANIFEST).splitlines()[1:]]
    on_disk = sorted(p.name for p in (tmp_path / "one").iterdir() if p.name != MANIFEST)
    assert listed == on_disk
    assert "pie_distro_per_site.svg" in listed and "jobslots.svg" in listed
    assert "ranking.csv" in listed and "table_op_latency.txt" in listed
    for name in listed + [MANIFEST]:
        assert read_text(tmp_path / "one" / name) == read_text(tmp_path / "two" / name)
    assert len(run1.artifacts) == len(run2.artifacts)
    for name in listed:
        if name.endswith(".svg"):
            ET.fromstring(read_text(tmp_path / "one" / name))
