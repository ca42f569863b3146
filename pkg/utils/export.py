"""
Exports: DOT graphs of an Epinet, conduit overlays and tabular reports.
"""
import json
import re
from typing import Any, Dict, Iterable, List, Optional, Tuple

import pandas as pd

from core.epinet import Epinet
from core.errors import EpinetError
from core.models import Conduit, Directionality, EdgeOrigin, TrustKind, id_key, sorted_ids
from core.regimes import find_neighborhoods

_MODE = re.compile(r"^(\w+)(?:\((.+)\))?$")

STATE_COLORS = {
    "knows": "palegreen",
    "believes": "khaki",
    "ignorant": "lightgray",
    "heedful": "lightblue",
    "oblivious": "white",
}


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def parse_mode(mode: str) -> Tuple[str, Optional[str]]:
    """`knowledge_p(p1)` -> ("knowledge_p", "p1")."""
    match = _MODE.match(mode.strip())
    if not match:
        raise EpinetError(f"bad export mode: {mode}")
    return match.group(1), match.group(2)


def _nodes(net: Epinet) -> List[str]:
    return [
        f"  {_quote(agent)} [label={_quote(net.display(agent))}];"
        for agent in sorted_ids(net.agents)
    ]


def _trust_edges(net: Epinet, highlight: Iterable[Tuple[str, str]] = ()) -> List[str]:
    marked = set(highlight)
    pairs: Dict[Tuple[str, str], List[Any]] = {}
    for (source, target, _kind), edge in net.trust.items():
        pairs.setdefault((source, target), []).append(edge)
    lines = []
    for source, target in sorted(pairs, key=lambda k: (id_key(k[0]), id_key(k[1]))):
        edges = pairs[(source, target)]
        kinds = sorted(e.kind.value for e in edges)
        style = []
        if any(e.kind is TrustKind.FULL for e in edges):
            style.append("style=bold")
            if all(e.origin is EdgeOrigin.DERIVED for e in edges if e.kind is TrustKind.FULL):
                style[-1] = "style=dashed"
        if (source, target) in marked:
            style.append("color=red, penwidth=2")
        attrs = ", ".join([f"label={_quote(','.join(kinds))}"] + style)
        lines.append(f"  {_quote(source)} -> {_quote(target)} [{attrs}];")
    return lines


def _agents_trust(net: Epinet) -> List[str]:
    return _nodes(net) + _trust_edges(net)


def _knowledge(net: Epinet, prop_id: str) -> List[str]:
    agents = sorted_ids(net.agents)
    lines = []
    for agent in agents:
        labels = sorted(net.epistemic_state(agent, prop_id))
        color = next((STATE_COLORS[s] for s in labels if s in STATE_COLORS), "white")
        text = f"{net.display(agent)}: {', '.join(labels)}"
        lines.append(f"  {_quote(agent)} [label={_quote(text)}, style=filled, fillcolor={color}];")
    for x in agents:
        for y in agents:
            if x != y and net.chain_holds((x, y), prop_id):
                lines.append(f"  {_quote(x)} -> {_quote(y)} [label=\"knows knows\"];")
    return lines


def _neighborhoods(net: Epinet, prop_id: str) -> List[str]:
    lines: List[str] = []
    index = 0
    for kind in ("common", "mutual"):
        for hood in find_neighborhoods(net, prop_id, kind):
            lines.append(f"  subgraph cluster_{index} {{")
            lines.append(f"    label={_quote(f'{kind} (level {hood.level})')};")
            lines.extend(f"    {_quote(m)};" for m in hood.members)
            lines.append("  }")
            index += 1
    return lines + _nodes(net)


def export_graph(net: Epinet, mode: str) -> str:
    """DOT text for `agents_trust`, `knowledge_p(<prop>)` or
    `neighborhoods(<prop>)`."""
    name, prop_id = parse_mode(mode)
    if name == "agents_trust":
        body = _agents_trust(net)
    elif name in ("knowledge_p", "neighborhoods"):
        if prop_id is None:
            raise EpinetError(f"{name} export needs a prop: {name}(<prop>)")
        net.require_prop(prop_id)
        body = _knowledge(net, prop_id) if name == "knowledge_p" else _neighborhoods(net, prop_id)
    else:
        raise EpinetError(
            f"unknown export mode {name!r}; use agents_trust, knowledge_p(<prop>) or neighborhoods(<prop>)"
        )
    return "digraph epinet {\n" + "".join(line + "\n" for line in body) + "}\n"


def conduit_json(conduit: Conduit) -> str:
    return json.dumps(conduit.path)


def conduit_dot(net: Epinet, conduit: Conduit) -> str:
    """Trust graph with the conduit's hops drawn in red. Hops point along the
    trust relation, from each successor to its predecessor."""
    hops = [(b, a) for a, b in zip(conduit.path, conduit.path[1:])]
    if conduit.directionality is Directionality.CORRIDOR:
        hops += [(a, b) for a, b in zip(conduit.path, conduit.path[1:])]
    body = _nodes(net) + _trust_edges(net, hops)
    return "digraph conduit {\n" + "".join(line + "\n" for line in body) + "}\n"


def results_frame(report: Dict[str, Any]) -> pd.DataFrame:
    """Query results of a report as a table."""
    rows = [
        {
            "line": r["line"],
            "at": "" if r.get("at") is None else r["at"],
            "query": r["query"],
            "result": json.dumps(r["result"], sort_keys=True),
        }
        for r in report.get("results", [])
    ]
    return pd.DataFrame(rows, columns=["line", "at", "query", "result"])
