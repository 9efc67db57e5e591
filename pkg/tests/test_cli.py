import os
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from fleetbench.fleetctl import (CampaignConfig, ConfigError, JobPlan, collect_inbox,
                                 load_config, parse_config)
from fleetbench.fleetctl.campaign import CollectAborted, INGEST_FILE, MERGED_FILE, SITES_FILE
from fleetbench.fleetctl.cli import main
from fleetbench.report import MANIFEST
from fleetbench.results import HEADER, decode_csv, read_text

MOCK_INI = """\
[suite]
clock = mock
hostname = wn01
mem_sizes = 4096, 16384, 65536, 262144, 1048576, 4194304
mem_sweeps = 1
"""


@pytest.fixture
def mock_ini(tmp_path):
    path = tmp_path / "mock.ini"
    path.write_text(MOCK_INI)
    return path


@pytest.fixture
def inbox(tmp_path, fixtures):
    dest = tmp_path / "inbox"
    shutil.copytree(fixtures / "inbox", dest)
    return dest


def run(*argv):
    return main([str(a) for a in argv])


# -- usage -------------------------------------------------------------------------------

def test_unknown_subcommand(capsys):
    assert run("frobnicate") == 1
    err = capsys.readouterr().err
    assert "usage:" in err and "frobnicate" in err


def test_unknown_flag(capsys):
    assert run("collect", "--bogus") == 1
    assert "usage:" in capsys.readouterr().err


def test_no_subcommand(capsys):
    assert run() == 1


def test_help_exits_zero(capsys):
    assert run("--help") == 0
    assert "probe" in capsys.readouterr().out


def test_collect_without_inbox_is_usage_error(capsys, monkeypatch):
    monkeypatch.delenv("FLEETBENCH_CONFIG", raising=False)
    assert run("collect") == 1


# -- config ------------------------------------------------------------------------------

def test_config_parsing(tmp_path):
    cfg = parse_config("""
[campaign]
registry = reg.csv
inbox = in
output = out
strict = yes
cv_threshold = 0.1
[suite]
clock = mock
repetitions = 5
mem_sizes = 1024 2048, 4096
seed = 4
[hosts]
WN01 = SA
""", tmp_path)
    assert cfg.registry == tmp_path / "reg.csv" and cfg.strict and cfg.cv_threshold == 0.1
    assert cfg.plan.repetitions == 5 and cfg.suite.mem_sizes == [1024, 2048, 4096]
    assert cfg.suite.seed == 4 and cfg.host_sites == {"WN01": "SA"}
    assert cfg.with_seed(9).suite.seed == 9 and cfg.suite.seed == 4


@pytest.mark.parametrize("text", [
    "[suite]\nclock = sundial\n",
    "[suite]\nrepetitions = 4\n",
    "[suite]\nmem_sizes = 4096, 2048\n",
    "[suite]\nwhatever = 1\n",
    "[nonsense]\n",
    "[campaign]\ninbox = same\noutput = same\n",
    "[suite]\nepoch = yesterday\n",
])
def test_config_errors(text, tmp_path):
    with pytest.raises(ConfigError):
        parse_config(text, tmp_path)


def test_config_from_environment(mock_ini, monkeypatch):
    monkeypatch.setenv("FLEETBENCH_CONFIG", str(mock_ini))
    assert load_config().clock == "mock"
    monkeypatch.delenv("FLEETBENCH_CONFIG")
    assert load_config().clock == "real"


def test_bad_config_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[suite]\nclock = sundial\n")
    assert run("plan", "--config", bad) == 2
    assert "sundial" in capsys.readouterr().err


def test_campaign_config_paths_distinct(tmp_path):
    with pytest.raises(ConfigError):
        CampaignConfig(inbox=tmp_path, output=tmp_path)


# -- probe / bench -------------------------------------------------------------------------

def test_probe_fixtures_stdout(fixtures, capsys, mock_ini):
    assert run("probe", "--config", mock_ini, "--fixtures", fixtures / "node_sl3",
               "--site", "SA", "--hostname", "wn01") == 0
    records = decode_csv(capsys.readouterr().out)
    assert {r.metric for r in records} == {"inventory"}
    assert all(r.site == "SA" and r.hostname == "wn01" for r in records)
    assert not any("PROXY" in r.kind or "PASS" in r.kind for r in records)


def test_probe_missing_required_is_data_error(tmp_path, capsys):
    assert run("probe", "--fixtures", tmp_path) == 2


def test_bench_mock_twice_identical(tmp_path, mock_ini, capsys):
    assert run("bench", "--config", mock_ini, "--out", tmp_path / "d1", "--seed", 7) == 0
    assert run("bench", "--config", mock_ini, "--out", tmp_path / "d2", "--seed", 7) == 0
    (a,), (b,) = list((tmp_path / "d1").iterdir()), list((tmp_path / "d2").iterdir())
    assert a.name == b.name == "wn01-20070501T120000Z.csv"
    assert a.read_bytes() == b.read_bytes()
    seeds = {r.note for r in decode_csv(read_text(a)) if r.metric == "mem_latency"}
    assert seeds == {"stride=64;seed=7"}


def test_bench_with_inventory(tmp_path, mock_ini, fixtures, capsys):
    inv = tmp_path / "inv.csv"
    assert run("probe", "--config", mock_ini, "--fixtures", fixtures / "node_slc4",
               "--hostname", "wn09", "--out", inv) == 0
    assert run("bench", "--config", mock_ini, "--inventory", inv, "--site", "SB",
               "--out", tmp_path / "out") == 0
    (path,) = (tmp_path / "out").iterdir()
    records = decode_csv(read_text(path))
    assert records[0].metric == "inventory"
    assert {r.site for r in records} == {"SB"}


# -- collect -------------------------------------------------------------------------------

def test_collect_three_files(tmp_path, capsys):
    box = tmp_path / "box"
    box.mkdir()
    for host in ("c", "a", "b"):
        (box / f"{host}.csv").write_text(
            ",".join(HEADER) + "\n"
            f"{host}9,SX,2007-05-01T12:00:00Z,op_latency,int,add,2,ns,ok,\n"
            f"{host}1,SX,2007-05-01T12:00:00Z,op_latency,int,add,1,ns,ok,\n")
    assert run("collect", box, "--out", tmp_path / "col") == 0
    merged = decode_csv(read_text(tmp_path / "col" / MERGED_FILE))
    assert len(merged) == 6
    assert [r.hostname for r in merged] == sorted(r.hostname for r in merged)
    keys = [(r.site, r.hostname, r.timestamp, r.metric, r.klass, r.kind) for r in merged]
    assert keys == sorted(keys)


def test_collect_lenient_skips_bad_row(inbox, tmp_path, capsys):
    victim = inbox / "b1-20070501T120200Z.csv"
    lines = read_text(victim).splitlines(keepends=True)
    lines[3] = lines[3].replace(",ns,ok,", ",MBps,ok,") if ",ns,ok," in lines[3] else \
        "b1,SITE-B,2007-05-01T12:02:00Z,op_latency,int,add,zz,ns,ok,\n"
    victim.write_text("".join(lines))
    assert run("collect", inbox, "--out", tmp_path / "col") == 0
    ingest = read_text(tmp_path / "col" / INGEST_FILE)
    line = next(l for l in ingest.splitlines() if l.startswith(victim.name))
    assert "skipped_rows" in line and "row 4" in line
    assert "row 4" in capsys.readouterr().err


def test_collect_strict_aborts(inbox, tmp_path, capsys):
    victim = inbox / "b1-20070501T120200Z.csv"
    victim.write_text(read_text(victim) + "b1,SITE-B,when,op_latency,int,add,1,ns,ok,\n")
    assert run("collect", inbox, "--strict", "--out", tmp_path / "col") == 2
    assert not (tmp_path / "col").exists()
    with pytest.raises(CollectAborted):
        collect_inbox(inbox, strict=True)


def test_collect_rejects_foreign_file(inbox, tmp_path, capsys):
    (inbox / "junk.csv").write_text("name,age\nbob,3\n")
    records, report = collect_inbox(inbox)
    outcome = next(f for f in report.files if f.name == "junk.csv")
    assert outcome.status == "rejected" and len(records) == 48


def test_collect_empty_inbox(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert run("collect", tmp_path / "empty", "--out", tmp_path / "col") == 0
    assert read_text(tmp_path / "col" / MERGED_FILE) == ",".join(HEADER) + "\n"
    assert "no *.csv" in capsys.readouterr().err


def test_collect_hostname_mapping(tmp_path, capsys):
    box = tmp_path / "box"
    box.mkdir()
    (box / "x.csv").write_text(",".join(HEADER) + "\n"
                               "wn5,,2007-05-01T12:00:00Z,op_latency,int,add,2,ns,ok,\n")
    ini = tmp_path / "c.ini"
    ini.write_text("[hosts]\nwn5 = SITE-Q\n")
    assert run("collect", box, "--config", ini, "--out", tmp_path / "col") == 0
    assert decode_csv(read_text(tmp_path / "col" / MERGED_FILE))[0].site == "SITE-Q"
    assert read_text(tmp_path / "col" / SITES_FILE).splitlines()[1] == "SITE-Q,1,1"


def test_collect_missing_inbox_is_data_error(tmp_path, capsys):
    assert run("collect", tmp_path / "nope", "--out", tmp_path / "col") == 2


# -- aggregate / report ------------------------------------------------------------------------

def test_aggregate_registry_missing_site(inbox, tmp_path, fixtures, capsys):
    reg = tmp_path / "reg.csv"
    reg.write_text("site,jobslots,middleware\nSITE-A,10,g\nSITE-B,30,g\n")
    assert run("collect", inbox, "--out", tmp_path / "col") == 0
    assert run("aggregate", tmp_path / "col" / MERGED_FILE, "--registry", reg,
               "--out", tmp_path / "agg") == 0
    err = capsys.readouterr().err
    assert "SITE-C" in err
    dist = read_text(tmp_path / "agg" / "distributions.csv")
    per_job = [l for l in dist.splitlines() if l.startswith("distro,per_job")]
    assert len(per_job) == 2
    assert any(",0.75" in l and "SLC" in l for l in per_job)


def test_aggregate_bad_registry_is_data_error(inbox, tmp_path, capsys):
    reg = tmp_path / "reg.csv"
    reg.write_text("site,jobslots,middleware\nSITE-A,-1,\n")
    assert run("collect", inbox, "--out", tmp_path / "col") == 0
    assert run("aggregate", tmp_path / "col" / MERGED_FILE, "--registry", reg,
               "--out", tmp_path / "agg") == 2


def test_report_bad_zoom_is_usage(tmp_path, capsys):
    assert run("report", tmp_path, "--out", tmp_path / "r", "--zoom", "0") == 1


def test_config_driven_pipeline(inbox, tmp_path, fixtures, capsys):
    ini = tmp_path / "campaign.ini"
    shutil.copy(fixtures / "registry.csv", tmp_path / "registry.csv")
    ini.write_text("[campaign]\nregistry = registry.csv\ninbox = inbox\noutput = out\n")
    for step in ("collect", "aggregate", "report"):
        assert run(step, "--config", ini) == 0, step
    assert (tmp_path / "out" / "report" / MANIFEST).exists()


# -- plan ---------------------------------------------------------------------------------------

def test_plan_script_shape(capsys):
    plan = JobPlan(site="SA", seed=3, config_text="[suite]\nclock = mock\n")
    script = plan.script()
    assert script.startswith("#!/bin/sh\n")
    assert "probe --config" in script and "bench --config" in script
    assert script.index(" probe ") < script.index(" bench ")
    assert "--seed 3" in script and "--site SA" in script


def test_plan_executes_and_collects(tmp_path, mock_ini, capsys):
    job = tmp_path / "job.sh"
    assert run("plan", "--config", mock_ini, "--site", "SITE-X", "--seed", 2,
               "--out", job) == 0
    env = dict(os.environ, FLEETBENCH=f"{sys.executable} -m fleetbench")
    subprocess.run(["sh", str(job), str(tmp_path / "results")], check=True, env=env,
                   capture_output=True)
    produced = list((tmp_path / "results").iterdir())
    assert len(produced) == 1
    records, report = collect_inbox(tmp_path / "results")
    assert report.rejected_rows == 0 and [f.status for f in report.files] == ["ok"]
    assert {r.site for r in records} == {"SITE-X"}
    assert {"inventory", "op_latency", "stream_bw"} <= {r.metric for r in records}


# -- end-to-end determinism ----------------------------------------------------------------------

def _campaign(root: Path, fixtures: Path, mock_ini: Path):
    box = root / "inbox"
    for i, (node, site) in enumerate([("node_sl3", "SITE-A"), ("node_slc4", "SITE-B"),
                                      ("node_sl3", "SITE-C")]):
        inv = root / f"inv{i}.csv"
        assert run("probe", "--config", mock_ini, "--fixtures", fixtures / node,
                   "--hostname", f"wn{i}", "--site", site, "--out", inv) == 0
        assert run("bench", "--config", mock_ini, "--inventory", inv, "--site", site,
                   "--hostname", f"wn{i}", "--seed", 5, "--out", box) == 0
    assert run("collect", box, "--out", root / "col") == 0
    assert run("aggregate", root / "col" / MERGED_FILE, "--registry",
               fixtures / "registry.csv", "--out", root / "agg") == 0
    assert run("report", root / "agg", "--out", root / "rep") == 0
    return {p.name: p.read_bytes() for p in (root / "rep").iterdir()}


def test_end_to_end_byte_identical(tmp_path, fixtures, mock_ini, capsys):
    first = _campaign(tmp_path / "one", fixtures, mock_ini)
    second = _campaign(tmp_path / "two", fixtures, mock_ini)
    assert first == second
    assert MANIFEST in first and any(n.startswith("pie_") for n in first)
