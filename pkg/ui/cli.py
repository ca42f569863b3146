"""
Command-line front end: run scenarios, query snapshots, check syntax.

Reports go to stdout as JSON; tables, logs and errors go to stderr.
Exit codes: 0 ok, 1 parse error, 2 engine error, 3 I/O error.
"""
import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import typer

from core.database import DatabaseManager, init_database
from core.epinet import Epinet
from core.errors import EpinetError, ParseError
from core.models import ConduitKind, Directionality, EpinetConfig
from core.scenario import Names, ScenarioParser, evaluate_query, parse_scenario, run_scenario
from core.snapshot import canonical_json, load, snapshot
from core.trust import find_conduit
from integrations.edge_list import import_edges
from integrations.event_log import export_events, import_events, replay
from utils.export import conduit_dot, conduit_json, export_graph, parse_mode, results_frame
from utils.logging import setup_logging
from utils.security import digest

logger = logging.getLogger(__name__)

EXIT_PARSE = 1
EXIT_ENGINE = 2
EXIT_IO = 3

app = typer.Typer(
    name="epinet",
    help="Epistemic network engine: scenarios, queries and graph exports.",
    no_args_is_help=True,
    add_completion=False,
)


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Map engine errors onto process exit codes."""
    try:
        yield
    except ParseError as exc:
        typer.echo(f"parse error: {exc}", err=True)
        raise typer.Exit(EXIT_PARSE)
    except EpinetError as exc:
        typer.echo(f"engine error: {exc}", err=True)
        raise typer.Exit(EXIT_ENGINE)
    except OSError as exc:
        typer.echo(f"i/o error: {exc}", err=True)
        raise typer.Exit(EXIT_IO)


def _read_text(path: Path) -> str:
    data = path.read_bytes()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not UTF-8: {exc.reason}") from exc


def _export_target(value: str) -> Tuple[str, Path]:
    """`dot:<mode>:<path>` -> (mode, path)."""
    fmt, _, rest = value.partition(":")
    mode, _, path = rest.rpartition(":")
    if fmt != "dot" or not mode or not path:
        raise EpinetError(f"bad export target {value!r}; expected dot:<mode>:<path>")
    return mode, Path(path)


def _display_names(net: Epinet) -> Names:
    """Bind every unique display name that does not shadow a prop id."""
    names = Names()
    displays = [net.agents[a].display_name for a in net.agents]
    for agent_id, agent in net.agents.items():
        if displays.count(agent.display_name) == 1 and agent.display_name not in net.props:
            names.bind_agent(agent.display_name, agent_id)
    return names


def _config(max_depth: Optional[int], no_factivity: bool) -> EpinetConfig:
    config = EpinetConfig(factivity_enforced=not no_factivity)
    if max_depth is not None:
        config = config.model_copy(update={"max_depth": max_depth})
    return config


@app.command()
def run(
    scenario_file: Path = typer.Argument(..., help="Scenario file to run"),
    pretty: bool = typer.Option(False, "--pretty", help="Print a results table on stderr"),
    snapshot_out: Optional[Path] = typer.Option(None, "--snapshot", help="Write the final snapshot here"),
    export: List[str] = typer.Option([], "--export", help="dot:<mode>:<path>, repeatable"),
    db_path: Optional[Path] = typer.Option(None, "--db", help="Record the run in this ledger"),
    events_out: Optional[Path] = typer.Option(None, "--events", help="Write the event log (JSON lines) here"),
    max_depth: Optional[int] = typer.Option(None, "--max-depth", min=1),
    no_factivity: bool = typer.Option(False, "--no-factivity"),
    verbose: bool = typer.Option(False, "--verbose", "-v"),
) -> None:
    """Run a scenario and print its report as JSON."""
    setup_logging(verbose)
    with _exit_codes():
        text = _read_text(scenario_file)
        scenario = parse_scenario(text)
        outcome = run_scenario(
            scenario, _config(max_depth, no_factivity), base_dir=scenario_file.parent
        )
        report = outcome.report.to_json()
        typer.echo(report.decode("utf-8"))

        if pretty:
            frame = results_frame(json.loads(report))
            typer.echo(frame.to_string(index=False), err=True)
            typer.echo(f"digest: {outcome.report.digest}", err=True)
        final = snapshot(outcome.net)
        if snapshot_out is not None:
            snapshot_out.write_bytes(final)
        names: Names = outcome.names
        for item in export:
            mode, target = _export_target(item)
            kind, prop = parse_mode(mode)
            resolved = f"{kind}({names.prop(prop)})" if prop else kind
            target.write_text(export_graph(outcome.net, resolved), encoding="utf-8")
        if events_out is not None:
            export_events(outcome.events, events_out)
        if db_path is not None:
            init_database(db_path)
            DatabaseManager(db_path).record_run(
                scenario_file.name, outcome.report.digest, report, outcome.events, final
            )


@app.command()
def query(
    snapshot_file: Path = typer.Argument(..., help="Snapshot written by `run --snapshot`"),
    words: List[str] = typer.Argument(..., help="Query, e.g. holds 'K(a1, p1)'"),
    verbose: bool = typer.Option(False, "--verbose", "-v"),
) -> None:
    """Evaluate one query against a saved snapshot."""
    setup_logging(verbose)
    with _exit_codes():
        net = load(snapshot_file.read_bytes())
        names = _display_names(net)
        parser = ScenarioParser()
        parser.agents = set(net.agents) | set(names.agent_ids)
        parser.props = set(net.props)
        parser.channels = set(net.channels)
        statement = parser.parse("query " + " ".join(words)).statements[0]
        result = evaluate_query(net, names, statement)
        typer.echo(canonical_json({"query": " ".join(words), "result": result}).decode("utf-8"))


@app.command("replay")
def replay_log(
    snapshot_file: Path = typer.Argument(..., help="Snapshot to start from"),
    events_file: Path = typer.Argument(..., help="Event log written by `run --events`"),
    edges: Optional[Path] = typer.Option(None, "--edges", help="CSV trust edge list applied first"),
    snapshot_out: Optional[Path] = typer.Option(None, "--snapshot", help="Write the final snapshot here"),
    verbose: bool = typer.Option(False, "--verbose", "-v"),
) -> None:
    """Replay an event log onto a snapshot and print the resulting digest."""
    setup_logging(verbose)
    with _exit_codes():
        net = load(snapshot_file.read_bytes())
        applied_edges = 0
        if edges is not None:
            applied_edges = import_edges(net, edges, _display_names(net).agent_ids)
        applied = replay(net, import_events(events_file))
        final = snapshot(net)
        if snapshot_out is not None:
            snapshot_out.write_bytes(final)
        summary = {"edges": applied_edges, "events": len(applied), "digest": digest(final)}
        typer.echo(canonical_json(summary).decode("utf-8"))


@app.command()
def conduit(
    snapshot_file: Path = typer.Argument(..., help="Snapshot written by `run --snapshot`"),
    source: str = typer.Argument(..., help="Agent the information starts from"),
    target: str = typer.Argument(..., help="Agent it should reach"),
    kind: ConduitKind = typer.Option(ConduitKind.TRUST, "--kind"),
    corridor: bool = typer.Option(False, "--corridor", help="Require trust both ways on every hop"),
    dot: Optional[Path] = typer.Option(None, "--dot", help="Write the trust graph with the conduit here"),
    verbose: bool = typer.Option(False, "--verbose", "-v"),
) -> None:
    """Print the shortest conduit between two agents as a JSON path (or null)."""
    setup_logging(verbose)
    with _exit_codes():
        net = load(snapshot_file.read_bytes())
        names = _display_names(net)
        direction = Directionality.CORRIDOR if corridor else Directionality.ONE_WAY
        found = find_conduit(net, names.agent(source), names.agent(target), kind, direction)
        if found is None:
            typer.echo("null")
            return
        typer.echo(conduit_json(found))
        if dot is not None:
            dot.write_text(conduit_dot(net, found), encoding="utf-8")


@app.command()
def check(
    scenario_file: Path = typer.Argument(..., help="Scenario file to parse"),
    verbose: bool = typer.Option(False, "--verbose", "-v"),
) -> None:
    """Parse a scenario without running it."""
    setup_logging(verbose)
    with _exit_codes():
        scenario = parse_scenario(_read_text(scenario_file))
        summary = {
            "statements": len(scenario.statements),
            "events": len(scenario.events),
            "queries": len(scenario.queries),
        }
        typer.echo(canonical_json(summary).decode("utf-8"))


if __name__ == "__main__":
    app()
