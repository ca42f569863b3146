"""
Shared fixtures: the bcc net, thread builders and seeded random nets.
"""
import random
from itertools import product
from pathlib import Path
from typing import Dict, Iterator, List, Sequence, Tuple

import pytest

from core.epinet import Epinet
from core.formulas import atom, knows_chain, unfoldings
from core.models import INFINITY, Atom, Event, EventKind
from core.platforms import apply_event, reply_in_thread
from core.trust import set_trust

SCENARIO_DIR = Path(__file__).parent.parent / "scenarios"


def add_agents(net: Epinet, *names: str) -> List[str]:
    return [net.add_agent(name) for name in names]


def true_prop(net: Epinet, statement: str = "p") -> str:
    prop_id = net.add_prop(statement)
    net.set_world_truth(prop_id, True)
    return prop_id


def message(sender: str, to: List[str], payload: str, hidden: List[str] = (), thread=None) -> Event:
    return Event(
        kind=EventKind.DIRECT_MESSAGE,
        sender=sender,
        visible=frozenset(to),
        hidden=frozenset(hidden),
        payload=payload,
        thread=thread,
    )


def build_thread(net: Epinet, a: str, b: str, p: str, messages: int, thread: str = "t1") -> None:
    """Alternate `messages` emails between a and b in one thread."""
    apply_event(net, message(a, [b], p, thread=thread))
    for i in range(1, messages):
        sender, receiver = (b, a) if i % 2 else (a, b)
        reply_in_thread(net, thread, sender, receiver, p)


def random_trust_net(rng: random.Random, size: int, density: float) -> Tuple[Epinet, List[str]]:
    """Net of `size` agents with random full-trust edges."""
    net = Epinet()
    agents = add_agents(net, *[f"agent{i}" for i in range(size)])
    for x in agents:
        for y in agents:
            if x != y and rng.random() < density:
                set_trust(net, x, y, "full")
    return net, agents


def random_knowledge_net(
    rng: random.Random, size: int, max_depth: int = 6
) -> Tuple[Epinet, List[str], str]:
    """Net with random Knows-chains over one true prop, plus an occasional
    common-knowledge record."""
    net = Epinet()
    agents = add_agents(net, *[f"agent{i}" for i in range(size)])
    p = true_prop(net)
    chains = []
    for _ in range(rng.randint(1, 3 * size)):
        length = rng.randint(1, max_depth)
        chains.append(knows_chain([rng.choice(agents) for _ in range(length)], Atom(prop=p)))
    net.commit(chains)
    if rng.random() < 0.3:
        group = rng.sample(agents, rng.randint(2, size))
        net.add_common_knowledge(group, p)
    return net, agents, p


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240611)


@pytest.fixture
def net() -> Epinet:
    return Epinet()


@pytest.fixture
def bcc() -> Dict[str, str]:
    """Alan emails Betty and blind-copies Charles; returns net and ids."""
    net = Epinet()
    alan, betty, charles = add_agents(net, "Alan", "Betty", "Charles")
    p = true_prop(net, "the offer is final")
    apply_event(net, message(alan, [betty], p, hidden=[charles]))
    return {"net": net, "alan": alan, "betty": betty, "charles": charles, "p": p}


@pytest.fixture
def golden_dir() -> Path:
    return SCENARIO_DIR


# --------------------------------------------------------------------------
# Independent commonality oracle
# --------------------------------------------------------------------------


def oracle_chains(members: Sequence[str], depth: int) -> Iterator[Tuple[str, ...]]:
    """Agent sequences of `depth` over members with no agent twice in a row."""
    for chain in product(sorted(members), repeat=depth):
        if all(x != y for x, y in zip(chain, chain[1:])):
            yield chain


def oracle_derived(net: Epinet) -> set:
    derived = set()
    for fact in net.facts:
        derived.add(fact)
        derived.update(unfoldings(fact))
    return derived


def oracle_chain_holds(net: Epinet, chain: Sequence[str], p: str, derived=None) -> bool:
    """K-chain over p, checked against stored facts, their unfoldings and records."""
    if derived is None:
        derived = oracle_derived(net)
    if knows_chain(list(chain), atom(p)) in derived:
        return True
    return any(set(chain) <= g for g in net.ck_groups(p))


def oracle_level(net: Epinet, members: List[str], p: str):
    """Commonality computed straight from the stored facts and records."""
    if any(set(members) <= g for g in net.ck_groups(p)):
        return INFINITY
    derived = oracle_derived(net)
    level = 0
    for d in range(1, net.config.max_depth + 1):
        if all(oracle_chain_holds(net, c, p, derived) for c in oracle_chains(members, d)):
            level = d
        else:
            break
    return level
