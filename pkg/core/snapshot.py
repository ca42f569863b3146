"""
Canonical JSON snapshots of an Epinet.

Key order and every set-valued field are canonicalized so identical nets
produce byte-identical snapshots.
"""
import json
from typing import Any, Dict, List

from pydantic import BaseModel, Field, ValidationError

from .epinet import Epinet
from .errors import EpinetError, ParseError
from .models import (
    Agent,
    Channel,
    EpinetConfig,
    Formula,
    GroupCK,
    Petition,
    Prop,
    ProvenanceChain,
    Thread,
    TrustEdge,
    id_key,
    sorted_ids,
)


class _CKEntry(BaseModel):
    group: List[str]
    prop: str


class Snapshot(BaseModel):
    """Wire shape of a snapshot document."""
    agents: List[Agent] = Field(default_factory=list)
    props: List[Prop] = Field(default_factory=list)
    world: List[str] = Field(default_factory=list)
    facts: List[Formula] = Field(default_factory=list)
    group_ck: List[_CKEntry] = Field(default_factory=list)
    provenance: List[ProvenanceChain] = Field(default_factory=list)
    trust: List[TrustEdge] = Field(default_factory=list)
    channels: List[Channel] = Field(default_factory=list)
    threads: List[Thread] = Field(default_factory=list)
    petitions: List[Petition] = Field(default_factory=list)
    counters: Dict[str, int] = Field(default_factory=dict)
    config: EpinetConfig = Field(default_factory=EpinetConfig)


def canonical_json(payload: Any) -> bytes:
    return json.dumps(
        payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def formula_json(formula: Formula) -> Dict[str, Any]:
    return formula.model_dump(mode="json")


def _formula_key(formula: Formula) -> bytes:
    return canonical_json(formula_json(formula))


def to_document(net: Epinet) -> Dict[str, Any]:
    """Plain-JSON document with every collection in canonical order."""
    channels = []
    for channel in sorted(net.channels.values(), key=lambda c: id_key(c.id)):
        data = channel.model_dump(mode="json")
        data["members"] = sorted_ids(channel.members)
        data["host_group"] = sorted_ids(channel.host_group)
        channels.append(data)
    return {
        "agents": [
            net.agents[a].model_dump(mode="json") for a in sorted_ids(net.agents)
        ],
        "props": [net.props[p].model_dump(mode="json") for p in sorted_ids(net.props)],
        "world": sorted_ids(net.world.truths),
        "facts": [formula_json(f) for f in sorted(net.facts, key=_formula_key)],
        "group_ck": sorted(
            ({"group": sorted_ids(r.group), "prop": r.prop} for r in net.group_ck),
            key=lambda r: (id_key(r["prop"]), [id_key(a) for a in r["group"]]),
        ),
        "provenance": [
            net.provenance[k].model_dump(mode="json")
            for k in sorted(net.provenance, key=lambda k: (id_key(k[0]), id_key(k[1])))
        ],
        "trust": [
            net.trust[k].model_dump(mode="json", by_alias=True)
            for k in sorted(net.trust, key=lambda k: (id_key(k[0]), id_key(k[1]), k[2].value))
        ],
        "channels": channels,
        "threads": [
            net.threads[t].model_dump(mode="json") for t in sorted_ids(net.threads)
        ],
        "petitions": [
            net.petitions[p].model_dump(mode="json") for p in sorted_ids(net.petitions)
        ],
        "counters": dict(net.counters),
        "config": net.config.model_dump(mode="json"),
    }


def snapshot(net: Epinet) -> bytes:
    return canonical_json(to_document(net))


def load(data: bytes) -> Epinet:
    """Rebuild an Epinet from snapshot bytes."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"snapshot is not UTF-8: {exc.reason}", column=exc.start) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed snapshot: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    try:
        doc = Snapshot.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        raise ParseError(f"invalid snapshot field {where}: {first['msg']}") from exc

    net = Epinet(doc.config)
    net.agents = {a.id: a for a in doc.agents}
    net.props = {p.id: p for p in doc.props}
    net.world.truths = set(doc.world)
    net.counters.update(doc.counters)
    try:
        for fact in doc.facts:
            net.check_formula(fact)
        net.facts = set(doc.facts)
        net.group_ck = {
            GroupCK(group=frozenset(net.require_agents(e.group)), prop=net.require_prop(e.prop))
            for e in doc.group_ck
        }
    except (EpinetError, ValidationError) as exc:
        raise ParseError(f"snapshot references unregistered data: {exc}") from exc
    net.provenance = {(c.holder, c.prop): c for c in doc.provenance}
    net.trust = {edge.key: edge for edge in doc.trust}
    net.channels = {c.id: c for c in doc.channels}
    net.threads = {t.id: t for t in doc.threads}
    net.petitions = {p.prop: p for p in doc.petitions}
    return net


def clone(net: Epinet) -> Epinet:
    return load(snapshot(net))
