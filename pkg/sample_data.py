"""
Script to record the bundled scenarios in the run ledger, so the explorer
has runs to show.
"""
from pathlib import Path
from typing import List, Optional

from core.database import DatabaseManager, init_database
from core.scenario import parse_scenario, run_scenario
from core.snapshot import snapshot

SCENARIO_DIR = Path(__file__).parent / "scenarios"


def create_sample_data(db_path: Optional[Path] = None) -> List[str]:
    """Run every bundled scenario and record it; returns the run ids."""
    print("Recording sample runs...")

    init_database(db_path)
    ledger = DatabaseManager(db_path)

    run_ids = []
    for path in sorted(SCENARIO_DIR.glob("*.epi")):
        outcome = run_scenario(
            parse_scenario(path.read_text(encoding="utf-8")), base_dir=path.parent
        )
        run_id = ledger.record_run(
            path.name,
            outcome.report.digest,
            outcome.report.to_json(),
            outcome.events,
            snapshot(outcome.net),
        )
        print(f"  {path.name}: {len(outcome.report.results)} results, digest {outcome.report.digest[:12]}")
        run_ids.append(run_id)

    print(f"Recorded {len(run_ids)} runs")
    return run_ids


if __name__ == "__main__":
    create_sample_data()
