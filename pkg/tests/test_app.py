"""
Checks that the explorer app and its tabs can be built.
"""
import json

import pytest

gr = pytest.importorskip("gradio")

from app import build_app  # noqa: E402
from ui.analytics import build_knowledge_map  # noqa: E402
from ui.dashboard import EXAMPLE, recent_runs_table, run_scenario_text  # noqa: E402


def test_gradio_app():
    """The app can be created without errors."""
    demo = build_app()
    assert isinstance(demo, gr.Blocks)
    assert len(demo.blocks) > 0


def test_run_scenario_text():
    report, frame, digest = run_scenario_text(EXAMPLE)
    assert len(digest) == 64
    assert json.loads(report)["digest"] == digest
    assert frame["result"].tolist() == ["true", '["knows", "unaware"]', "1"]


def test_run_scenario_text_reports_errors():
    report, frame, message = run_scenario_text("agent a\nbogus\n")
    assert report == "{}"
    assert frame.empty
    assert message.startswith("ParseError:")


def test_knowledge_map():
    fig, table = build_knowledge_map(EXAMPLE, "p")
    assert fig.layout.title.text == "Knowledge of p"
    assert "distributed" in table["Kind"].tolist()
    fig, table = build_knowledge_map(EXAMPLE, "nope")
    assert table.empty


def test_recent_runs_table_columns():
    assert list(recent_runs_table().columns) == ["Created", "Scenario", "Results", "Digest"]
