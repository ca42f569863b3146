"""
Trust calculus: edges and their closure, trust and security neighborhoods,
conduit search, credible propagation, fact/rumor classification,
authentication and breach discovery.
"""
import logging
from collections import deque
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from .epinet import Epinet
from .errors import (
    EpinetError,
    GroupTooSmall,
    NoInformation,
    NotAMember,
    NotAuthenticatable,
    NotSecurityEligible,
    NotShared,
    OriginIgnorant,
    SelfTrust,
)
from .formulas import believes, knows
from .models import (
    INFINITY,
    Atom,
    Authentication,
    Conduit,
    ConduitKind,
    Directionality,
    EdgeOrigin,
    Formula,
    GroupCK,
    InformationClass,
    Neighborhood,
    TrustEdge,
    TrustKind,
    id_key,
    sorted_ids,
)
from .regimes import commonality_level, covert, maximal_sets

logger = logging.getLogger(__name__)

_SHORT = {
    TrustKind.INTEGRITY_WEAK: "weak",
    TrustKind.INTEGRITY_STRONG: "strong",
    TrustKind.COMPETENCE: "competence",
    TrustKind.FULL: "full",
}

MEMBERSHIP_PREFIXES = ("conduit:", "secure:")


def trust_prop_key(source: str, target: str, kind: Union[TrustKind, str]) -> str:
    return f"trust:{source}>{target}:{_SHORT[TrustKind(kind)]}"


def secure_prop_key(members: Iterable[str]) -> str:
    return "secure:" + ".".join(sorted_ids(members))


def conduit_prop_key(path: Sequence[str]) -> str:
    return "conduit:" + ">".join(path)


def breach_prop_key(leaker: str, prop_id: str) -> str:
    return f"breach:{leaker}:{prop_id}"


def has_trust(net: Epinet, source: str, target: str, kind: TrustKind) -> bool:
    return (source, target, kind) in net.trust


def has_full_trust(net: Epinet, source: str, target: str) -> bool:
    return has_trust(net, source, target, TrustKind.FULL)


def mutual_weak(net: Epinet, x: str, y: str) -> bool:
    """Integrity (either form) and competence trust in both directions."""
    def one_way(a: str, b: str) -> bool:
        integrity = has_trust(net, a, b, TrustKind.INTEGRITY_WEAK) or has_trust(
            net, a, b, TrustKind.INTEGRITY_STRONG
        )
        return integrity and has_trust(net, a, b, TrustKind.COMPETENCE)

    return one_way(x, y) and one_way(y, x)


def mutual_strong(net: Epinet, x: str, y: str) -> bool:
    return has_full_trust(net, x, y) and has_full_trust(net, y, x)


def _record_edge(net: Epinet, source: str, target: str, kind: TrustKind, origin: EdgeOrigin) -> None:
    if (source, target, kind) in net.trust:
        return
    net.trust[(source, target, kind)] = TrustEdge(
        source=source, target=target, kind=kind, origin=origin
    )
    statement = (
        f"{net.display(source)} trusts {net.display(target)} ({_SHORT[kind]})"
    )
    prop_id = net.add_prop(statement, key=trust_prop_key(source, target, kind))
    net.world.truths.add(prop_id)


def set_trust(net: Epinet, source: str, target: str, kind: Union[TrustKind, str]) -> Epinet:
    """Declare that `source` trusts `target`; full trust is kept in step with
    its strong-integrity and competence components."""
    net.require_agent(source)
    net.require_agent(target)
    if source == target:
        raise SelfTrust(f"{source} cannot hold trust in itself")
    trust_kind = TrustKind(kind)
    if trust_kind is TrustKind.FULL:
        for component in (TrustKind.INTEGRITY_STRONG, TrustKind.COMPETENCE):
            _record_edge(net, source, target, component, EdgeOrigin.DECLARED)
    _record_edge(net, source, target, trust_kind, EdgeOrigin.DECLARED)
    if has_trust(net, source, target, TrustKind.INTEGRITY_STRONG) and has_trust(
        net, source, target, TrustKind.COMPETENCE
    ):
        _record_edge(net, source, target, TrustKind.FULL, EdgeOrigin.DECLARED)
    net._invalidate()
    logger.debug("trust %s -> %s (%s)", source, target, trust_kind.value)
    return net


def full_trust_graph(net: Epinet) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(sorted_ids(net.agents))
    graph.add_edges_from(
        (s, t) for (s, t, kind) in net.trust if kind is TrustKind.FULL
    )
    return graph


def trust_closure(net: Epinet) -> Epinet:
    """Close full trust under transitivity; new edges are marked derived."""
    closure = nx.transitive_closure(full_trust_graph(net), reflexive=None)
    added = 0
    for source, target in sorted(closure.edges(), key=lambda e: (id_key(e[0]), id_key(e[1]))):
        if source == target or has_full_trust(net, source, target):
            continue
        for component in (TrustKind.INTEGRITY_STRONG, TrustKind.COMPETENCE, TrustKind.FULL):
            _record_edge(net, source, target, component, EdgeOrigin.DERIVED)
        added += 1
    net._invalidate()
    logger.debug("trust closure added %d full edge(s)", added)
    return net


# --------------------------------------------------------------------------
# Neighborhoods
# --------------------------------------------------------------------------


def _pair_cliques(net: Epinet, linked) -> List[FrozenSet[str]]:  # type: ignore[no-untyped-def]
    graph = nx.Graph()
    ordered = sorted_ids(net.agents)
    graph.add_nodes_from(ordered)
    for i, x in enumerate(ordered):
        for y in ordered[i + 1:]:
            if linked(net, x, y):
                graph.add_edge(x, y)
    return [frozenset(c) for c in nx.find_cliques(graph) if len(c) >= 2]


def _canonical(groups: Iterable[FrozenSet[str]]) -> List[FrozenSet[str]]:
    return sorted(groups, key=lambda g: [id_key(m) for m in sorted_ids(g)])


def trust_neighborhoods(net: Epinet) -> List[Neighborhood]:
    """Maximal cliques sharing mutual integrity and competence trust."""
    return [
        Neighborhood(members=list(group), kind="trust")
        for group in _canonical(_pair_cliques(net, mutual_weak))
    ]


def is_strong_clique(net: Epinet, members: Iterable[str]) -> bool:
    ordered = sorted_ids(members)
    return len(ordered) >= 2 and all(
        mutual_strong(net, x, y) for i, x in enumerate(ordered) for y in ordered[i + 1:]
    )


def derive_security_ck(net: Epinet, clique: Iterable[str]) -> Epinet:
    """Make a mutual full-trust clique's trust status common knowledge in it."""
    members = net.require_agents(clique)
    if not is_strong_clique(net, members):
        raise NotSecurityEligible(
            f"{', '.join(sorted_ids(members))} is not a mutual full-trust clique"
        )
    edge_props = [
        trust_prop_key(x, y, TrustKind.FULL)
        for x in sorted_ids(members)
        for y in sorted_ids(members)
        if x != y
    ]
    false_props = [p for p in edge_props if not net.is_true(p)]
    if false_props:
        raise NotSecurityEligible(f"trust status not true: {', '.join(false_props)}")
    names = ", ".join(net.display(m) for m in sorted_ids(members))
    status = net.add_prop(f"{names} form a security clique", key=secure_prop_key(members))
    net.world.truths.add(status)
    records = [GroupCK(group=members, prop=p) for p in [status] + edge_props]
    net.commit([], records)
    logger.debug("security common knowledge for %s", sorted_ids(members))
    return net


def security_neighborhoods(net: Epinet, derive: bool = False) -> List[Neighborhood]:
    """Maximal strong cliques whose security status is common knowledge."""
    if derive:
        for group in _canonical(_pair_cliques(net, mutual_strong)):
            if not net.ck_covers(secure_prop_key(group), group):
                derive_security_ck(net, group)
    candidates = [
        record.group
        for record in net.group_ck
        if record.prop.startswith("secure:") and is_strong_clique(net, record.group)
    ]
    return [
        Neighborhood(members=list(group), kind="security", level=INFINITY)
        for group in _canonical(maximal_sets(candidates, lambda s: True))
    ]


# --------------------------------------------------------------------------
# Conduits
# --------------------------------------------------------------------------


def _hop_ok(net: Epinet, x: str, y: str, directionality: Directionality) -> bool:
    if not has_full_trust(net, y, x):
        return False
    return directionality is Directionality.ONE_WAY or has_full_trust(net, x, y)


def _shortest_path(
    net: Epinet,
    start: str,
    goal: str,
    directionality: Directionality,
    allowed: Optional[FrozenSet[str]] = None,
) -> Optional[List[str]]:
    """BFS with sorted expansion: the lexicographically smallest shortest path."""
    nodes = sorted_ids(allowed if allowed is not None else net.agents)
    parent: Dict[str, Optional[str]] = {start: None}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        if current == goal:
            break
        for nxt in nodes:
            if nxt not in parent and _hop_ok(net, current, nxt, directionality):
                parent[nxt] = current
                queue.append(nxt)
    if goal not in parent:
        return None
    path: List[str] = []
    node: Optional[str] = goal
    while node is not None:
        path.append(node)
        node = parent[node]
    return list(reversed(path))


def membership_groups(net: Epinet) -> List[FrozenSet[str]]:
    return [
        record.group
        for record in net.group_ck
        if record.prop.startswith(MEMBERSHIP_PREFIXES)
    ]


def find_conduit(
    net: Epinet,
    source: str,
    target: str,
    kind: Union[ConduitKind, str] = ConduitKind.TRUST,
    directionality: Union[Directionality, str] = Directionality.ONE_WAY,
) -> Optional[Conduit]:
    """Shortest path from source to target along which each successor fully
    trusts its predecessor."""
    net.require_agent(source)
    net.require_agent(target)
    conduit_kind = ConduitKind(kind)
    direction = Directionality(directionality)
    if source == target:
        return None
    if conduit_kind is ConduitKind.TRUST:
        path = _shortest_path(net, source, target, direction)
    else:
        paths = [
            p
            for group in membership_groups(net)
            if source in group and target in group
            for p in [_shortest_path(net, source, target, direction, group)]
            if p is not None
        ]
        path = min(paths, key=lambda p: (len(p), [id_key(a) for a in p]), default=None)
    if path is None:
        return None
    return Conduit(path=path, kind=conduit_kind, directionality=direction)


def declare_conduit(net: Epinet, path: Sequence[str]) -> Epinet:
    """Make a trust conduit's membership common knowledge along it."""
    members = list(path)
    net.require_agents(members)
    if len(members) < 2 or len(set(members)) != len(members):
        raise GroupTooSmall("a conduit needs at least two distinct agents")
    broken = [
        (x, y) for x, y in zip(members, members[1:]) if not has_full_trust(net, y, x)
    ]
    if broken:
        x, y = broken[0]
        raise NotSecurityEligible(f"{y} does not fully trust {x}")
    names = " > ".join(net.display(m) for m in members)
    prop_id = net.add_prop(f"conduit {names}", key=conduit_prop_key(members))
    net.world.truths.add(prop_id)
    net.commit([], [GroupCK(group=frozenset(members), prop=prop_id)])
    return net


# --------------------------------------------------------------------------
# Propagation and classification
# --------------------------------------------------------------------------


def propagate_assertion(
    net: Epinet,
    origin: str,
    prop_id: str,
    audience: Optional[Iterable[str]] = None,
) -> Epinet:
    """Spread the origin's knowledge breadth-first to agents that fully trust
    the agent they hear it from."""
    net.require_agent(origin)
    net.require_prop(prop_id)
    scope = net.require_agents(audience) if audience is not None else None
    p = Atom(prop=prop_id)
    if not net.holds(knows(origin, p)):
        raise OriginIgnorant(f"{origin} does not know {prop_id}")

    event_id = net.next_id("event", "e")
    reached: List[Tuple[str, str]] = []
    visited: Set[str] = {origin}
    queue = deque([origin])
    ordered = sorted_ids(net.agents)
    while queue:
        sender = queue.popleft()
        for receiver in ordered:
            if receiver in visited or not has_full_trust(net, receiver, sender):
                continue
            if scope is not None and receiver not in scope:
                continue
            visited.add(receiver)
            reached.append((receiver, sender))
            queue.append(receiver)

    informed = {r: net.informed(r, prop_id) for r, _ in reached}
    batch: List[Formula] = []
    for receiver, sender in reached:
        batch.extend([knows(receiver, p), knows(receiver, knows(sender, p))])
    net.commit(batch)
    for receiver, sender in reached:
        net.record_delivery(receiver, prop_id, sender, event_id, True, informed[receiver])
    logger.debug("propagated %s from %s to %d agent(s)", prop_id, origin, len(reached))
    return net


def classify_information(net: Epinet, holder: str, prop_id: str) -> InformationClass:
    net.require_agent(holder)
    net.require_prop(prop_id)
    if not net.informed(holder, prop_id):
        raise NoInformation(f"{holder} holds nothing about {prop_id}")
    chain = net.provenance.get((holder, prop_id))
    if chain is None or not chain.hops:
        return InformationClass.ORIGIN
    if all(hop.trusted for hop in chain.hops):
        return InformationClass.FACT
    return InformationClass.RUMOR


def authenticate(net: Epinet, clique: Iterable[str], claimant: str) -> Authentication:
    """Insider iff the claimant belongs to the security neighborhood."""
    members = net.require_agents(clique)
    net.require_agent(claimant)
    current = {frozenset(n.members) for n in security_neighborhoods(net)}
    if members not in current:
        raise NotAuthenticatable(
            f"{', '.join(sorted_ids(members))} is not a security neighborhood"
        )
    return Authentication.INSIDER if claimant in members else Authentication.OUTSIDER


def record_breach(
    net: Epinet,
    leaker: str,
    outsider: str,
    prop_id: str,
    sg: Iterable[str],
    event_id: Optional[str] = None,
) -> Epinet:
    """Deliver p outside the subnetwork and make the breach known inside it."""
    members = net.require_agents(sg)
    net.require_agent(leaker)
    net.require_agent(outsider)
    net.require_prop(prop_id)
    if leaker not in members:
        raise NotAMember(f"{leaker} is not in the subnetwork")
    if outsider in members:
        raise NotAMember(f"{outsider} is already in the subnetwork")
    shared = covert(net, prop_id, members, net.agents) or (
        len(members) >= 2 and commonality_level(net, members, prop_id).reaches(2)
    )
    if not shared:
        raise NotShared(f"{prop_id} is neither covert nor mutual within the subnetwork")

    p = Atom(prop=prop_id)
    trusted = has_full_trust(net, outsider, leaker)
    credible = trusted and (net.is_true(prop_id) or not net.config.factivity_enforced)
    previously = net.informed(outsider, prop_id)
    names = ", ".join(net.display(m) for m in sorted_ids(members))
    rollback = (dict(net.props), set(net.world.truths))
    try:
        breach = net.add_prop(
            f"{net.display(leaker)} disclosed {prop_id} outside {names}",
            key=breach_prop_key(leaker, prop_id),
        )
        net.world.truths.add(breach)
        batch: List[Formula] = [knows(outsider, p) if credible else believes(outsider, p)]
        batch.extend(knows(m, Atom(prop=breach)) for m in sorted_ids(members))
        net.commit(batch)
    except EpinetError:
        net.props, net.world.truths = rollback
        net._invalidate()
        raise
    net.record_delivery(
        outsider, prop_id, leaker, event_id or net.next_id("event", "e"), trusted, previously
    )
    logger.debug("breach of %s by %s to %s", prop_id, leaker, outsider)
    return net


# --------------------------------------------------------------------------
# Connection radius
# --------------------------------------------------------------------------


def connection_graph(net: Epinet) -> nx.Graph:
    """Undirected graph linking agents with a trust edge either way."""
    graph = nx.Graph()
    graph.add_nodes_from(sorted_ids(net.agents))
    graph.add_edges_from((s, t) for (s, t, _kind) in net.trust)
    return graph


def visible_agents(net: Epinet, agent: str, radius: int) -> List[str]:
    net.require_agent(agent)
    if radius < 1:
        return []
    reach = nx.single_source_shortest_path_length(connection_graph(net), agent, cutoff=radius)
    return sorted_ids(a for a in reach if a != agent)


def connection_degree(net: Epinet, a: str, b: str) -> Optional[str]:
    """LinkedIn-style degree label, None when unconnected."""
    net.require_agent(a)
    net.require_agent(b)
    if a == b:
        return None
    try:
        hops = nx.shortest_path_length(connection_graph(net), a, b)
    except nx.NetworkXNoPath:
        return None
    return {1: "1st", 2: "2nd", 3: "3rd"}.get(hops, "3rd+")
