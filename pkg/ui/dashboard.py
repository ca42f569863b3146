"""
Scenario Runner tab: paste a scenario, run it, inspect the report.
"""
import json
from typing import Tuple

import gradio as gr
import pandas as pd

from core.database import db
from core.errors import EpinetError
from core.scenario import parse_scenario, run_scenario
from utils.export import results_frame

EXAMPLE = """# Alan emails Betty and blind-copies Charles
agent alan
agent betty
agent charles
prop p "the offer is final"
truth p true
event direct_message from=alan to=betty hidden=charles p=p
query holds K(charles, ~K(betty, K(charles, p)))
query state betty p
query level p alan,betty
"""


def run_scenario_text(text: str) -> Tuple[str, pd.DataFrame, str]:
    """Run scenario text; returns (report JSON, results table, digest or error)."""
    try:
        outcome = run_scenario(parse_scenario(text))
    except EpinetError as exc:
        return "{}", results_frame({}), f"{type(exc).__name__}: {exc}"
    report = json.loads(outcome.report.to_json())
    return json.dumps(report, indent=2, sort_keys=True), results_frame(report), outcome.report.digest


def recent_runs_table(limit: int = 10) -> pd.DataFrame:
    """Runs recorded in the ledger, newest first."""
    try:
        runs = db.get_recent_runs(limit=limit)
    except Exception:  # no ledger yet
        runs = []
    return pd.DataFrame(
        [
            {
                "Created": r.created_at.strftime("%Y-%m-%d %H:%M:%S"),
                "Scenario": r.scenario,
                "Results": len(r.report.get("results", [])),
                "Digest": r.digest[:16] + "...",
            }
            for r in runs
        ],
        columns=["Created", "Scenario", "Results", "Digest"],
    )


def create_dashboard():
    """Create the scenario runner interface."""
    with gr.Column():
        gr.Markdown("## Scenario Runner")

        scenario_box = gr.Textbox(
            label="Scenario",
            value=EXAMPLE,
            lines=16,
        )
        run_btn = gr.Button("Run Scenario", variant="primary")

        with gr.Row():
            with gr.Column(scale=1):
                report_view = gr.Code(label="Report", language="json")
            with gr.Column(scale=1):
                digest_box = gr.Textbox(label="Snapshot digest", interactive=False)
                results_table = gr.Dataframe(
                    label="Query results",
                    headers=["line", "at", "query", "result"],
                    interactive=False,
                    wrap=True,
                )

        gr.Markdown("### Recorded Runs")
        runs_table = gr.Dataframe(
            label="Run ledger",
            headers=["Created", "Scenario", "Results", "Digest"],
            interactive=False,
        )
        refresh_btn = gr.Button("Refresh Runs")

        run_btn.click(
            fn=run_scenario_text,
            inputs=[scenario_box],
            outputs=[report_view, results_table, digest_box],
        )
        refresh_btn.click(fn=recent_runs_table, outputs=[runs_table])
