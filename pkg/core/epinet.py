"""
The epinet store: agents, props, world truth, held facts, common-knowledge
records and the provenance ledger, with factivity-based derivation.

Derivation rules for `holds` are deliberately thin: a formula holds if it is
stored, if it is obtained from a stored fact by stripping outer Knows
operators, or if a common-knowledge record entails it. There is no
introspection closure.
"""
import logging
import threading
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

from .errors import (
    DepthExceeded,
    FactivityViolation,
    GroupTooSmall,
    InvalidName,
    NoSuchFact,
    NoSuchProp,
    UnknownAgent,
)
from .formulas import (
    agents_in,
    aware,
    check_structure,
    depth,
    knows,
    leaf,
    mentions_prop,
    neg,
    props_in,
    root_agent,
    split_knows,
    unfoldings,
    would_know,
)
from .models import (
    Agent,
    Atom,
    Believes,
    Channel,
    EpinetConfig,
    EpistemicLabel,
    Formula,
    GroupCK,
    Knows,
    Not,
    Petition,
    Prop,
    ProvenanceChain,
    ProvenanceHop,
    Thread,
    TrustEdge,
    TrustKind,
    WorldState,
)

logger = logging.getLogger(__name__)

TrustKey = Tuple[str, str, TrustKind]


class Epinet:
    """Epistemic network G. Single writer, any number of concurrent readers."""

    def __init__(self, config: Optional[EpinetConfig] = None):
        self.config = config or EpinetConfig()
        self.agents: Dict[str, Agent] = {}
        self.props: Dict[str, Prop] = {}
        self.world = WorldState()
        self.facts: Set[Formula] = set()
        self.group_ck: Set[GroupCK] = set()
        self.provenance: Dict[Tuple[str, str], ProvenanceChain] = {}
        self.trust: Dict[TrustKey, TrustEdge] = {}
        self.channels: Dict[str, Channel] = {}
        self.threads: Dict[str, Thread] = {}
        self.petitions: Dict[str, Petition] = {}
        self.counters: Dict[str, int] = {"agent": 0, "prop": 0, "event": 0, "thread": 0}
        self._lock = threading.RLock()
        self._derived: Optional[Set[Formula]] = None
        self._chains: Optional[Dict[str, Set[Tuple[str, ...]]]] = None

    # ------------------------------------------------------------------
    # Registration
    # ------------------------------------------------------------------

    def next_id(self, counter: str, prefix: str) -> str:
        self.counters[counter] = self.counters.get(counter, 0) + 1
        return f"{prefix}{self.counters[counter]}"

    def add_agent(self, name: str) -> str:
        """Register an agent; display names may repeat, ids never do."""
        if not name or not name.strip():
            raise InvalidName("agent name must be non-empty")
        agent_id = self.next_id("agent", "a")
        self.agents[agent_id] = Agent(id=agent_id, display_name=name.strip())
        logger.debug("registered agent %s (%s)", agent_id, name)
        return agent_id

    def add_prop(self, statement: str, key: Optional[str] = None) -> str:
        """Register an atomic prop. Engine-owned props pass a canonical key."""
        if not statement or not statement.strip():
            raise InvalidName("prop statement must be non-empty")
        if key is not None:
            if key not in self.props:
                self.props[key] = Prop(id=key, statement=statement)
            return key
        prop_id = self.next_id("prop", "p")
        self.props[prop_id] = Prop(id=prop_id, statement=statement)
        return prop_id

    def require_agent(self, agent_id: str) -> str:
        if agent_id not in self.agents:
            raise UnknownAgent(agent_id)
        return agent_id

    def require_agents(self, agent_ids: Iterable[str]) -> FrozenSet[str]:
        return frozenset(self.require_agent(a) for a in agent_ids)

    def require_prop(self, prop_id: str) -> str:
        if prop_id not in self.props:
            raise NoSuchProp(prop_id)
        return prop_id

    def display(self, agent_id: str) -> str:
        agent = self.agents.get(agent_id)
        return agent.display_name if agent else agent_id

    def is_true(self, prop_id: str) -> bool:
        return prop_id in self.world.truths

    # ------------------------------------------------------------------
    # Derivation caches
    # ------------------------------------------------------------------

    def _invalidate(self) -> None:
        with self._lock:
            self._derived = None
            self._chains = None

    def derived(self) -> Set[Formula]:
        """Stored facts plus everything reachable by stripping outer Knows."""
        with self._lock:
            if self._derived is None:
                closure: Set[Formula] = set()
                for fact in self.facts:
                    closure.add(fact)
                    closure.update(unfoldings(fact))
                self._derived = closure
            return self._derived

    def knows_chains(self, prop_id: str) -> Set[Tuple[str, ...]]:
        """Agent sequences whose Knows-chain over Atom(prop) is derivable."""
        with self._lock:
            if self._chains is None:
                index: Dict[str, Set[Tuple[str, ...]]] = {}
                for formula in self.derived():
                    agents, rest = split_knows(formula)
                    if agents and isinstance(rest, Atom):
                        index.setdefault(rest.prop, set()).add(agents)
                self._chains = index
            return self._chains.get(prop_id, set())

    def ck_groups(self, prop_id: str) -> List[FrozenSet[str]]:
        return [record.group for record in self.group_ck if record.prop == prop_id]

    def ck_covers(self, prop_id: str, members: Iterable[str]) -> bool:
        wanted = set(members)
        return any(wanted <= group for group in self.ck_groups(prop_id))

    def chain_holds(self, agents: Sequence[str], prop_id: str) -> bool:
        """Knows-chain over `agents` ending in Atom(prop) holds."""
        chain = tuple(agents)
        if not chain:
            return self.holds(Atom(prop=prop_id))
        if chain in self.knows_chains(prop_id):
            return True
        if any(a == b for a, b in zip(chain, chain[1:])):
            return False
        return self.ck_covers(prop_id, chain)

    # ------------------------------------------------------------------
    # Queries
    # ------------------------------------------------------------------

    def holds(self, formula: Formula) -> bool:
        """Binary evaluation; negation is closed-world absence of derivation."""
        if isinstance(formula, Not):
            return not self.holds(formula.inner)
        if isinstance(formula, Atom):
            if formula.prop in self.world.truths:
                return True
            if self.config.factivity_enforced:
                return False
            return formula in self.derived() or bool(self.ck_groups(formula.prop))
        if formula in self.derived():
            return True
        agents, rest = split_knows(formula)
        if agents and isinstance(rest, Atom):
            return self.chain_holds(agents, rest.prop)
        return False

    def awareness_level(self, agent_id: str, prop_id: str) -> int:
        """Largest n with Akⁿp; 0 when the agent does not know p."""
        level = 0
        while level < self.config.max_depth and self.holds(aware(agent_id, prop_id, level + 1)):
            level += 1
        return level

    def formulas_of(self, agent_id: str) -> List[Formula]:
        """Derivable formulas rooted at the agent."""
        return [f for f in self.derived() if root_agent(f) == agent_id]

    def mentions(self, agent_id: str, prop_id: str) -> bool:
        return any(mentions_prop(f, prop_id) for f in self.formulas_of(agent_id))

    def informed(self, agent_id: str, prop_id: str) -> bool:
        """Agent knows or believes the prop."""
        p = Atom(prop=prop_id)
        return self.holds(knows(agent_id, p)) or self.holds(Believes(agent=agent_id, inner=p))

    def epistemic_state(self, agent_id: str, prop_id: str) -> Set[str]:
        """Label set for the agent's stance toward the prop."""
        self.require_agent(agent_id)
        self.require_prop(prop_id)
        p = Atom(prop=prop_id)
        confident = self.holds(knows(agent_id, would_know(agent_id, prop_id)))
        labels: Set[str] = set()
        if self.holds(knows(agent_id, p)):
            labels.add(EpistemicLabel.KNOWS.value)
            level = self.awareness_level(agent_id, prop_id)
            if level >= 2:
                labels.add(f"aware_{level}")
            else:
                labels.add(EpistemicLabel.UNAWARE.value)
            if confident:
                labels.add(EpistemicLabel.CONFIDENT.value)
            return labels
        if self.holds(knows(agent_id, neg(knows(agent_id, p)))):
            return {EpistemicLabel.IGNORANT.value}
        if not self.mentions(agent_id, prop_id):
            return {EpistemicLabel.OBLIVIOUS.value}
        if self.holds(Believes(agent=agent_id, inner=p)):
            labels.add(EpistemicLabel.BELIEVES.value)
        if confident:
            labels.add(EpistemicLabel.CONFIDENT.value)
        return labels or {EpistemicLabel.HEEDFUL.value}

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------

    def check_formula(self, formula: Formula) -> None:
        check_structure(formula)
        d = depth(formula)
        if d > self.config.max_depth:
            raise DepthExceeded(d, self.config.max_depth)
        for agent_id in agents_in(formula):
            self.require_agent(agent_id)
        for prop_id in props_in(formula):
            self.require_prop(prop_id)

    def violations(self) -> List[Union[Formula, GroupCK]]:
        """Stored facts and records whose factivity leaf does not hold."""
        if not self.config.factivity_enforced:
            return []
        bad: List[Union[Formula, GroupCK]] = []
        for fact in self.facts:
            if isinstance(fact, Not):
                if self.holds(fact.inner):
                    bad.append(fact)
                continue
            if not isinstance(fact, Knows):
                continue
            rest = leaf(fact)
            if isinstance(rest, Atom) and rest.prop not in self.world.truths:
                bad.append(fact)
            elif isinstance(rest, Not) and self.holds(rest.inner):
                bad.append(fact)
        for record in self.group_ck:
            if record.prop not in self.world.truths:
                bad.append(record)
        return bad

    def _guard(self, snapshot: Tuple[Set[Formula], Set[GroupCK], Set[str]], reason: str) -> None:
        bad = self.violations()
        if bad:
            self.facts, self.group_ck, self.world.truths = snapshot
            self._invalidate()
            logger.warning("rejected change (%s): %d violation(s)", reason, len(bad))
            raise FactivityViolation(sorted(bad, key=str), reason)

    def _state(self) -> Tuple[Set[Formula], Set[GroupCK], Set[str]]:
        return set(self.facts), set(self.group_ck), set(self.world.truths)

    # ------------------------------------------------------------------
    # Mutations
    # ------------------------------------------------------------------

    def set_world_truth(self, prop_id: str, value: bool) -> "Epinet":
        self.require_prop(prop_id)
        before = self._state()
        if value:
            self.world.truths.add(prop_id)
        else:
            self.world.truths.discard(prop_id)
        self._invalidate()
        self._guard(before, f"set {prop_id}={'true' if value else 'false'}")
        return self

    def assert_fact(self, formula: Formula) -> "Epinet":
        """Store a fact; Knows-unfoldings must already hold when factivity is on."""
        self.check_formula(formula)
        if formula in self.facts:
            return self
        if self.config.factivity_enforced:
            unsupported = [u for u in unfoldings(formula) if not self.holds(u)]
            if unsupported:
                logger.warning("rejected assertion %s", formula)
                raise FactivityViolation(unsupported, f"asserting {formula}")
        before = self._state()
        self.facts.add(formula)
        self._invalidate()
        self._guard(before, f"asserting {formula}")
        logger.debug("asserted %s", formula)
        return self

    def commit(
        self,
        formulas: Iterable[Formula],
        records: Iterable[GroupCK] = (),
    ) -> List[Formula]:
        """Add an event's facts as one batch; checked at the leaves only."""
        batch = list(dict.fromkeys(formulas))
        for formula in batch:
            self.check_formula(formula)
        records = list(records)
        for record in records:
            self.require_agents(record.group)
            self.require_prop(record.prop)
        before = self._state()
        added = [f for f in batch if f not in self.facts]
        self.facts.update(added)
        self.group_ck.update(records)
        self._invalidate()
        self._guard(before, "event batch")
        return added

    def retract_fact(self, formula: Union[Formula, Sequence[Formula]]) -> "Epinet":
        """Remove one fact, or a batch of facts retracted together."""
        targets: List[Formula] = list(formula) if isinstance(formula, (list, tuple)) else [formula]  # type: ignore[list-item]
        missing = [t for t in targets if t not in self.facts]
        if missing:
            raise NoSuchFact(f"not stored: {', '.join(str(m) for m in missing)}")
        before = self._state()
        self.facts.difference_update(targets)
        self._invalidate()
        if self.config.factivity_enforced:
            surviving = [t for t in targets if self.holds(t)]
            if surviving:
                supporters = sorted(
                    (f for f in self.facts if any(u in surviving for u in unfoldings(f))),
                    key=str,
                )
                self.facts, self.group_ck, self.world.truths = before
                self._invalidate()
                raise FactivityViolation(
                    supporters or surviving, "retracted fact still derivable"
                )
        for target in targets:
            self._mark_stale(target)
        logger.debug("retracted %d fact(s)", len(targets))
        return self

    def add_common_knowledge(self, group: Iterable[str], prop_id: str) -> "Epinet":
        members = self.require_agents(group)
        if len(members) < 2:
            raise GroupTooSmall("common knowledge needs at least two members")
        self.require_prop(prop_id)
        self.commit([], [GroupCK(group=members, prop=prop_id)])
        return self

    # ------------------------------------------------------------------
    # Provenance ledger
    # ------------------------------------------------------------------

    def record_delivery(
        self,
        holder: str,
        prop_id: str,
        sender: str,
        event_id: str,
        trusted: bool,
        previously_informed: bool,
    ) -> None:
        """Extend the sender's chain by one hop into the holder's ledger entry."""
        existing = self.provenance.get((holder, prop_id))
        if existing is None and previously_informed:
            return
        upstream = self.provenance.get((sender, prop_id))
        hops = list(upstream.hops) if upstream and not upstream.stale else []
        hops.append(ProvenanceHop(sender=sender, event=event_id, trusted=trusted))
        chain = ProvenanceChain(prop=prop_id, holder=holder, hops=hops)
        if existing is not None and not existing.stale:
            upgrade = all(h.trusted for h in hops) and not all(h.trusted for h in existing.hops)
            if not upgrade:
                return
        self.provenance[(holder, prop_id)] = chain

    def _mark_stale(self, formula: Formula) -> None:
        if isinstance(formula, (Knows, Believes)) and isinstance(formula.inner, Atom):
            chain = self.provenance.get((formula.agent, formula.inner.prop))
            if chain is not None:
                chain.stale = True
