"""
Tests for event-log replay and trust edge lists.
"""
import io

import pytest

from core.errors import MalformedEvent, ParseError, SelfTrust
from core.models import TrustKind
from core.scenario import parse_scenario, run_scenario
from core.trust import has_full_trust, has_trust
from integrations.edge_list import edges_frame, import_edges, read_edge_list
from integrations.event_log import (
    dumps_events,
    export_events,
    import_events,
    loads_events,
    replay,
)

from tests.conftest import add_agents, message, true_prop


# --------------------------------------------------------------------------
# Event logs
# --------------------------------------------------------------------------


def test_event_lines_are_canonical(bcc):
    a, b = bcc["alan"], bcc["betty"]
    line = dumps_events([message(a, [b], bcc["p"], hidden=[bcc["charles"]])]).strip()
    assert line.startswith('{"flags":')
    assert '"hidden":["a3"]' in line and '"visible":["a2"]' in line
    assert "thread" not in line


def test_replay_reproduces_the_run(golden_dir, tmp_path):
    text = (golden_dir / "whatsapp.epi").read_text(encoding="utf-8")
    outcome = run_scenario(parse_scenario(text))
    log = tmp_path / "events.jsonl"
    export_events(outcome.events, log)

    declarations = "\n".join(
        line for line in text.splitlines() if not line.startswith(("action", "query"))
    )
    base = run_scenario(parse_scenario(declarations)).net
    replayed = replay(base, import_events(log))
    assert [e.kind for e in replayed] == [e.kind for e in outcome.events]
    assert base.facts == outcome.net.facts
    assert base.threads == outcome.net.threads
    assert base.provenance == outcome.net.provenance


def test_replay_stops_at_a_bad_event(net):
    a, b = add_agents(net, "A", "B")
    p = true_prop(net)
    events = loads_events(
        dumps_events([message(a, [b], p), message(a, [a], p)])
    )
    with pytest.raises(MalformedEvent):
        replay(net, events)
    assert len(net.threads) == 1


def test_bad_event_line_reports_its_number():
    with pytest.raises(ParseError) as info:
        loads_events('\n{"kind": "broadcast", "sender": "a1", "payload": "p1"}\n{"kind": "shout"}\n')
    assert info.value.line == 3


# --------------------------------------------------------------------------
# Edge lists
# --------------------------------------------------------------------------


def test_edge_list_with_and_without_header():
    with_header = read_edge_list(io.StringIO("from,to,kind\na1,a2,full\n"))
    without = read_edge_list(io.StringIO("a1, a2, full\n"))
    assert with_header.to_dict("records") == without.to_dict("records")
    assert read_edge_list(io.StringIO("")).empty


def test_edge_list_errors():
    with pytest.raises(ParseError) as info:
        read_edge_list(io.StringIO("a1,a2,full\na2,a1,love\n"))
    assert info.value.line == 2
    with pytest.raises(ParseError) as info:
        read_edge_list(io.StringIO("from,to,kind\na1,a2,full\na2,a1,love\n"))
    assert info.value.line == 3
    with pytest.raises(ParseError):
        read_edge_list(io.StringIO("a1,a2\n"))


def test_import_edges_by_display_name(net):
    ids = dict(zip(["ann", "bob", "cy"], add_agents(net, "ann", "bob", "cy")))
    source = io.StringIO("from,to,kind\nbob,ann,full\ncy,bob,competence\ncy,bob,integrity_weak\n")
    assert import_edges(net, source, ids) == 3
    assert has_full_trust(net, ids["bob"], ids["ann"])
    assert has_trust(net, ids["cy"], ids["bob"], TrustKind.COMPETENCE)
    frame = edges_frame(net)
    assert list(frame.columns) == ["from", "to", "kind", "origin"]
    assert set(frame["origin"]) == {"declared"}
    with pytest.raises(SelfTrust):
        import_edges(net, io.StringIO("ann,ann,full\n"), ids)
