"""
Tests for the SQLite run ledger.
"""
import pytest

from core.database import DatabaseManager, get_connection, init_database
from core.scenario import parse_scenario, run_scenario
from core.snapshot import load, snapshot


@pytest.fixture
def ledger(tmp_path):
    path = tmp_path / "ledger" / "runs.db"
    init_database(path)
    return DatabaseManager(path)


@pytest.fixture
def bcc_run(golden_dir):
    return run_scenario(parse_scenario((golden_dir / "bcc.epi").read_text(encoding="utf-8")))


def test_init_creates_tables(tmp_path):
    path = tmp_path / "nested" / "runs.db"
    init_database(path)
    init_database(path)
    with get_connection(path) as conn:
        names = {row["name"] for row in conn.execute("SELECT name FROM sqlite_master WHERE type='table'")}
    assert {"runs", "run_events", "run_snapshots"} <= names


def test_record_and_read_back(ledger, bcc_run):
    report = bcc_run.report.to_json()
    run_id = ledger.record_run("bcc.epi", bcc_run.report.digest, report, bcc_run.events, snapshot(bcc_run.net))
    stored = ledger.get_run(run_id)
    assert stored.scenario == "bcc.epi"
    assert stored.digest == bcc_run.report.digest
    assert [r["result"] for r in stored.report["results"]][:2] == [True, True]
    assert ledger.get_run_events(run_id) == bcc_run.events
    assert snapshot(load(ledger.get_snapshot(run_id))) == snapshot(bcc_run.net)


def test_recent_runs_newest_first(ledger, bcc_run):
    ids = [
        ledger.record_run(f"run{i}.epi", bcc_run.report.digest, bcc_run.report.to_json(), [], snapshot(bcc_run.net))
        for i in range(3)
    ]
    recent = ledger.get_recent_runs(limit=2)
    assert [r.id for r in recent] == [ids[2], ids[1]]


def test_missing_run(ledger):
    assert ledger.get_run("nope") is None
    assert ledger.get_snapshot("nope") is None
    assert ledger.get_run_events("nope") == []


def test_sample_data_records_every_scenario(tmp_path, golden_dir):
    from sample_data import create_sample_data

    path = tmp_path / "sample.db"
    run_ids = create_sample_data(path)
    assert len(run_ids) == len(list(golden_dir.glob("*.epi")))
    scenarios = {r.scenario for r in DatabaseManager(path).get_recent_runs(limit=50)}
    assert "bcc.epi" in scenarios
