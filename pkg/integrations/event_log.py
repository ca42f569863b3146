"""
Event logs: one JSON object per line with `kind`, `sender`, `visible`,
`hidden`, `payload`, `thread`, `channel` and `flags`.
"""
import json
import logging
from pathlib import Path
from typing import Iterable, List, Union

from pydantic import ValidationError

from core.epinet import Epinet
from core.errors import ParseError
from core.models import Event
from core.platforms import apply_event, stamp_event

logger = logging.getLogger(__name__)


def event_to_line(event: Event) -> str:
    data = event.model_dump(mode="json", by_alias=True, exclude_none=True)
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def dumps_events(events: Iterable[Event]) -> str:
    return "".join(event_to_line(e) + "\n" for e in events)


def loads_events(text: str) -> List[Event]:
    """Parse a JSON-lines event log; blank lines are skipped."""
    events: List[Event] = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            events.append(Event.model_validate_json(line))
        except ValidationError as exc:
            first = exc.errors()[0]
            where = ".".join(str(part) for part in first["loc"])
            raise ParseError(f"bad event ({where}): {first['msg']}", line=number) from exc
    return events


def export_events(events: Iterable[Event], path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_events(events), encoding="utf-8")


def import_events(path: Union[str, Path]) -> List[Event]:
    return loads_events(Path(path).read_text(encoding="utf-8"))


def replay(net: Epinet, events: Iterable[Event]) -> List[Event]:
    """Apply logged events in order; returns them with ids assigned."""
    applied: List[Event] = []
    for event in events:
        event = stamp_event(net, event)
        apply_event(net, event)
        applied.append(event)
    logger.info("replayed %d event(s)", len(applied))
    return applied
