"""
Knowledge-regime queries: distribution, level-n commonality, covertness,
neighborhood detection and the mobilization check. All read-only.
"""
from typing import Callable, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Set, Tuple, Union

import networkx as nx

from .epinet import Epinet
from .errors import BadScope, EmptyScope, EpinetError, GroupTooSmall, IncompleteCommitments
from .formulas import knows
from .models import (
    INFINITY,
    Atom,
    CommonalityReport,
    Distribution,
    EpistemicLabel,
    Neighborhood,
    NeighborhoodKind,
    id_key,
    sorted_ids,
)

KindSpec = Union[str, NeighborhoodKind]


def distribution(net: Epinet, prop_id: str, scope: Optional[Iterable[str]] = None) -> Distribution:
    """How many agents in `scope` (default: all) know the prop."""
    net.require_prop(prop_id)
    members = net.require_agents(scope if scope is not None else net.agents)
    if not members:
        raise EmptyScope("distribution needs a non-empty scope")
    count = sum(1 for a in members if net.holds(knows(a, Atom(prop=prop_id))))
    return Distribution(count=count, ratio=count / len(members))


def alternating_chains(members: List[str], length: int) -> Iterator[Tuple[str, ...]]:
    """Every agent sequence of `length` over members with distinct neighbours."""
    def extend(prefix: Tuple[str, ...]) -> Iterator[Tuple[str, ...]]:
        if len(prefix) == length:
            yield prefix
            return
        for agent in members:
            if not prefix or prefix[-1] != agent:
                yield from extend(prefix + (agent,))

    if length > 0:
        yield from extend(())


def commonality_level(net: Epinet, group: Iterable[str], prop_id: str) -> CommonalityReport:
    """Largest depth d at which every alternating chain over the group holds."""
    members = sorted_ids(net.require_agents(group))
    net.require_prop(prop_id)
    if len(members) < 2:
        raise GroupTooSmall("commonality needs at least two agents")
    if net.ck_covers(prop_id, members):
        return CommonalityReport(group=members, prop=prop_id, level=INFINITY)

    longest = max((len(c) for c in net.knows_chains(prop_id)), default=0)
    bound = max(longest, len(members))
    level = 0
    for d in range(1, bound + 1):
        if all(net.chain_holds(chain, prop_id) for chain in alternating_chains(members, d)):
            level = d
        else:
            break
    return CommonalityReport(group=members, prop=prop_id, level=level)


def covert(net: Epinet, prop_id: str, sg: Iterable[str], g: Iterable[str]) -> bool:
    """Fully shared inside `sg` while every other member of `g` is oblivious."""
    inner = net.require_agents(sg)
    outer = net.require_agents(g)
    if not inner or not inner < outer:
        raise BadScope("subnetwork must be a non-empty proper subset of the network")
    if distribution(net, prop_id, inner).ratio < 1.0:
        return False
    oblivious = EpistemicLabel.OBLIVIOUS.value
    return all(oblivious in net.epistemic_state(a, prop_id) for a in outer - inner)


def parse_kind(kind: KindSpec, n: Optional[int] = None) -> Tuple[NeighborhoodKind, Optional[int]]:
    """Normalize `level_3`, `mutual`, (`level_n`, 3) into (kind, level)."""
    text = kind.value if isinstance(kind, NeighborhoodKind) else str(kind)
    if text.startswith("level_") and text != NeighborhoodKind.LEVEL_N.value:
        try:
            n = int(text[len("level_"):])
        except ValueError as exc:
            raise EpinetError(f"bad neighborhood kind: {text}") from exc
        text = NeighborhoodKind.LEVEL_N.value
    parsed = NeighborhoodKind(text)
    if parsed is NeighborhoodKind.MUTUAL:
        return NeighborhoodKind.MUTUAL, 2
    if parsed is NeighborhoodKind.LEVEL_N:
        if n is None or n < 2:
            raise EpinetError("level_n neighborhoods need n >= 2")
        return (NeighborhoodKind.MUTUAL, 2) if n == 2 else (parsed, n)
    return parsed, None


def maximal_sets(
    candidates: Iterable[FrozenSet[str]],
    qualifies: Callable[[FrozenSet[str]], bool],
    min_size: int = 2,
) -> List[FrozenSet[str]]:
    """Maximal qualifying sets of a downward-closed family, searched top-down
    from the candidate supersets."""
    found: List[FrozenSet[str]] = []
    seen: Set[FrozenSet[str]] = set()
    frontier = sorted(set(candidates), key=lambda s: (-len(s), sorted_ids(s)))
    while frontier:
        current = frontier.pop(0)
        if current in seen or len(current) < min_size:
            continue
        seen.add(current)
        if any(current <= f for f in found):
            continue
        if qualifies(current):
            found.append(current)
            continue
        for agent in sorted_ids(current):
            smaller = current - {agent}
            if len(smaller) >= min_size and smaller not in seen:
                frontier.append(smaller)
        frontier.sort(key=lambda s: (-len(s), sorted_ids(s)))
    return [f for f in found if not any(f < other for other in found)]


def _canonical(hoods: List[Neighborhood]) -> List[Neighborhood]:
    return sorted(hoods, key=lambda h: [id_key(m) for m in h.members])


def find_neighborhoods(
    net: Epinet, prop_id: str, kind: KindSpec, n: Optional[int] = None
) -> List[Neighborhood]:
    """All maximal agent sets satisfying the regime for the prop."""
    net.require_prop(prop_id)
    parsed, threshold = parse_kind(kind, n)
    p = Atom(prop=prop_id)
    knowers = frozenset(a for a in net.agents if net.holds(knows(a, p)))

    if parsed is NeighborhoodKind.DISTRIBUTED:
        if not knowers:
            return []
        return [Neighborhood(members=list(knowers), prop=prop_id, kind=parsed.value)]

    if parsed is NeighborhoodKind.COVERT:
        everyone = frozenset(net.agents)
        if knowers and knowers < everyone and covert(net, prop_id, knowers, everyone):
            return [Neighborhood(members=list(knowers), prop=prop_id, kind=parsed.value)]
        return []

    if parsed is NeighborhoodKind.COMMON:
        groups = maximal_sets(
            (frozenset(g) for g in net.ck_groups(prop_id)), lambda s: True
        )
        return _canonical(
            [
                Neighborhood(members=list(g), prop=prop_id, kind=parsed.value, level=INFINITY)
                for g in groups
            ]
        )

    assert threshold is not None
    levels: Dict[FrozenSet[str], CommonalityReport] = {}

    def qualifies(members: FrozenSet[str]) -> bool:
        if members not in levels:
            levels[members] = commonality_level(net, members, prop_id)
        return levels[members].reaches(threshold)

    pairs = nx.Graph()
    pairs.add_nodes_from(sorted_ids(knowers))
    ordered = sorted_ids(knowers)
    for i, x in enumerate(ordered):
        for y in ordered[i + 1:]:
            if qualifies(frozenset((x, y))):
                pairs.add_edge(x, y)
    cliques = [frozenset(c) for c in nx.find_cliques(pairs) if len(c) >= 2]
    hoods = [
        Neighborhood(
            members=list(members),
            prop=prop_id,
            kind=parsed.value,
            level=levels[members].level,
        )
        for members in maximal_sets(cliques, qualifies)
    ]
    return _canonical(hoods)


def mobilization_possible(
    net: Epinet, group: Iterable[str], p_commit: Mapping[str, str]
) -> bool:
    """Each member knows every other member's conditional commitment."""
    members = sorted_ids(net.require_agents(group))
    missing = [m for m in members if m not in p_commit]
    if missing:
        raise IncompleteCommitments(f"no commitment prop for: {', '.join(missing)}")
    for prop_id in p_commit.values():
        net.require_prop(prop_id)
    return all(
        net.holds(knows(x, Atom(prop=p_commit[y])))
        for x in members
        for y in members
        if x != y
    )
