"""
Tests for the epinet command line.
"""
import json
import shutil

import pytest
from typer.testing import CliRunner

from core.database import DatabaseManager
from core.snapshot import load
from ui.cli import EXIT_ENGINE, EXIT_IO, EXIT_PARSE, app

runner = CliRunner()


@pytest.fixture
def bcc_file(golden_dir, tmp_path):
    target = tmp_path / "bcc.epi"
    shutil.copy(golden_dir / "bcc.epi", target)
    return target


def test_run_prints_report(bcc_file):
    result = runner.invoke(app, ["run", str(bcc_file)])
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert len(report["digest"]) == 64
    assert [r["result"] for r in report["results"]][:2] == [True, True]


def test_run_is_byte_identical(bcc_file):
    first = runner.invoke(app, ["run", str(bcc_file)])
    second = runner.invoke(app, ["run", str(bcc_file)])
    assert first.stdout == second.stdout


def test_run_writes_snapshot_export_and_ledger(bcc_file, tmp_path):
    snap = tmp_path / "bcc.json"
    dot = tmp_path / "bcc.dot"
    ledger = tmp_path / "runs.db"
    result = runner.invoke(
        app,
        [
            "run", str(bcc_file),
            "--snapshot", str(snap),
            "--export", f"dot:knowledge_p(p):{dot}",
            "--db", str(ledger),
        ],
    )
    assert result.exit_code == 0
    net = load(snap.read_bytes())
    assert len(net.agents) == 3
    assert dot.read_text().startswith("digraph epinet {")
    runs = DatabaseManager(ledger).get_recent_runs()
    assert [r.scenario for r in runs] == ["bcc.epi"]
    assert runs[0].digest == json.loads(result.stdout)["digest"]


def test_query_against_snapshot(bcc_file, tmp_path):
    snap = tmp_path / "bcc.json"
    runner.invoke(app, ["run", str(bcc_file), "--snapshot", str(snap)])
    result = runner.invoke(app, ["query", str(snap), "holds", "K(charles, K(betty, p1))"])
    assert result.exit_code == 0
    assert json.loads(result.stdout)["result"] is True
    result = runner.invoke(app, ["query", str(snap), "state", "betty", "p1"])
    assert json.loads(result.stdout)["result"] == ["knows", "unaware"]


def test_check_counts_statements(golden_dir):
    result = runner.invoke(app, ["check", str(golden_dir / "reply_chain.epi")])
    assert result.exit_code == 0
    assert json.loads(result.stdout) == {"events": 10, "queries": 10, "statements": 24}


def test_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.epi"
    bad.write_text("agent a\nbogus\n")
    assert runner.invoke(app, ["run", str(bad)]).exit_code == EXIT_PARSE
    assert runner.invoke(app, ["check", str(bad)]).exit_code == EXIT_PARSE
    bad.write_bytes(b"\xff\xfeagent a\n")
    assert runner.invoke(app, ["check", str(bad)]).exit_code == EXIT_PARSE


def test_engine_error_exit_code(tmp_path):
    failing = tmp_path / "fail.epi"
    failing.write_text('agent a\nagent b\nprop p "x"\nevent ack_read from=b to=a p=p\n')
    assert runner.invoke(app, ["run", str(failing)]).exit_code == EXIT_ENGINE


def test_bad_export_target_is_an_engine_error(bcc_file):
    result = runner.invoke(app, ["run", str(bcc_file), "--export", "png:agents_trust"])
    assert result.exit_code == EXIT_ENGINE


def test_missing_file_exit_code(tmp_path):
    assert runner.invoke(app, ["run", str(tmp_path / "none.epi")]).exit_code == EXIT_IO
    assert runner.invoke(app, ["query", str(tmp_path / "none.json"), "state", "a", "p1"]).exit_code == EXIT_IO


def test_depth_option(tmp_path):
    deep = tmp_path / "deep.epi"
    deep.write_text(
        'agent a\nagent b\nprop p "x"\ntruth p true\n'
        "fact K(a, p)\nfact K(b, K(a, p))\n"
    )
    assert runner.invoke(app, ["run", str(deep)]).exit_code == 0
    assert runner.invoke(app, ["run", str(deep), "--max-depth", "1"]).exit_code == EXIT_ENGINE


def test_event_log_replays_onto_declarations(golden_dir, tmp_path):
    text = (golden_dir / "whatsapp.epi").read_text(encoding="utf-8")
    declarations = tmp_path / "declarations.epi"
    declarations.write_text(
        "\n".join(line for line in text.splitlines() if not line.startswith(("action", "query")))
    )
    scenario = tmp_path / "whatsapp.epi"
    scenario.write_text(text)
    base, log, final = tmp_path / "base.json", tmp_path / "events.jsonl", tmp_path / "final.json"

    assert runner.invoke(app, ["run", str(declarations), "--snapshot", str(base)]).exit_code == 0
    assert runner.invoke(app, ["run", str(scenario), "--events", str(log)]).exit_code == 0
    result = runner.invoke(app, ["replay", str(base), str(log), "--snapshot", str(final)])
    assert result.exit_code == 0
    summary = json.loads(result.stdout)
    assert summary["events"] == len(log.read_text().splitlines())
    assert summary["edges"] == 0
    result = runner.invoke(app, ["query", str(final), "holds", "K(wei, K(li, p1))"])
    assert json.loads(result.stdout)["result"] is True


def test_edge_list_and_conduit(tmp_path):
    scenario = tmp_path / "people.epi"
    scenario.write_text("agent ann\nagent bob\nagent cy\n")
    edges = tmp_path / "edges.csv"
    edges.write_text("from,to,kind\nbob,ann,full\ncy,bob,full\n")
    empty = tmp_path / "none.jsonl"
    empty.write_text("")
    base, trusted = tmp_path / "base.json", tmp_path / "trusted.json"
    runner.invoke(app, ["run", str(scenario), "--snapshot", str(base)])

    result = runner.invoke(
        app, ["replay", str(base), str(empty), "--edges", str(edges), "--snapshot", str(trusted)]
    )
    assert result.exit_code == 0
    assert json.loads(result.stdout)["edges"] == 2

    dot = tmp_path / "conduit.dot"
    result = runner.invoke(app, ["conduit", str(trusted), "ann", "cy", "--dot", str(dot)])
    assert result.exit_code == 0
    assert json.loads(result.stdout) == ["a1", "a2", "a3"]
    assert dot.read_text().startswith("digraph conduit {")
    result = runner.invoke(app, ["conduit", str(trusted), "cy", "ann"])
    assert json.loads(result.stdout) is None
    assert runner.invoke(app, ["conduit", str(trusted), "ann", "zed"]).exit_code == EXIT_ENGINE
