"""
Tests for the Epinet store: registration, derivation, factivity and states.
"""
import pytest

from core.epinet import Epinet
from core.errors import (
    DepthExceeded,
    FactivityViolation,
    GroupTooSmall,
    InvalidName,
    NoSuchFact,
    NoSuchProp,
    UnknownAgent,
)
from core.formulas import agents_in, atom, believes, knows, neg, would_know
from core.models import EpinetConfig
from core.snapshot import snapshot

from tests.conftest import add_agents, true_prop


def test_agent_ids_are_unique():
    net = Epinet()
    ids = {net.add_agent("same name") for _ in range(1000)}
    assert len(ids) == 1000


def test_empty_names_rejected(net):
    with pytest.raises(InvalidName):
        net.add_agent("  ")
    with pytest.raises(InvalidName):
        net.add_prop("")


def test_engine_keys_register_once(net):
    first = net.add_prop("status", key="premium:a1")
    second = net.add_prop("status again", key="premium:a1")
    assert first == second == "premium:a1"
    assert net.props["premium:a1"].statement == "status"


def test_unknown_names_rejected(net):
    a, = add_agents(net, "A")
    with pytest.raises(UnknownAgent):
        net.assert_fact(knows("a9", atom("p1")))
    with pytest.raises(NoSuchProp):
        net.assert_fact(knows(a, atom("p7")))


def test_factivity_blocks_knowledge_of_falsehood(net):
    a, = add_agents(net, "A")
    p = net.add_prop("p")
    with pytest.raises(FactivityViolation):
        net.assert_fact(knows(a, atom(p)))
    assert not net.facts
    net.assert_fact(believes(a, atom(p)))
    assert net.holds(believes(a, atom(p)))


def test_factivity_off_lets_knowledge_imply_truth():
    net = Epinet(EpinetConfig(factivity_enforced=False))
    a, = add_agents(net, "A")
    p = net.add_prop("p")
    net.assert_fact(knows(a, atom(p)))
    assert net.holds(atom(p))


def test_assertion_needs_its_unfoldings_first(net):
    a, b = add_agents(net, "A", "B")
    p = true_prop(net)
    with pytest.raises(FactivityViolation) as info:
        net.assert_fact(knows(b, knows(a, atom(p))))
    assert knows(a, atom(p)) in info.value.offending
    net.assert_fact(knows(a, atom(p)))
    net.assert_fact(knows(b, knows(a, atom(p))))


def test_nested_fact_derives_inner_knowledge(net):
    a, b = add_agents(net, "A", "B")
    p = true_prop(net)
    net.commit([knows(b, knows(a, atom(p)))])
    assert net.holds(knows(a, atom(p)))
    assert net.holds(atom(p))


def test_negation_is_closed_world(net):
    a, = add_agents(net, "A")
    p = true_prop(net)
    assert net.holds(neg(knows(a, atom(p))))
    net.assert_fact(knows(a, atom(p)))
    assert not net.holds(neg(knows(a, atom(p))))


def test_queries_do_not_mutate(bcc):
    net = bcc["net"]
    before = snapshot(net)
    for agent in (bcc["alan"], bcc["betty"], bcc["charles"]):
        net.holds(knows(agent, atom(bcc["p"])))
        net.epistemic_state(agent, bcc["p"])
        net.awareness_level(agent, bcc["p"])
    assert snapshot(net) == before


def test_depth_limit():
    net = Epinet(EpinetConfig(max_depth=2))
    a, b = add_agents(net, "A", "B")
    p = true_prop(net)
    with pytest.raises(DepthExceeded) as info:
        net.commit([knows(a, knows(b, knows(a, atom(p))))])
    assert info.value.depth == 3


def test_retract_rejected_while_still_derivable(net):
    a, b = add_agents(net, "A", "B")
    p = true_prop(net)
    inner = knows(a, atom(p))
    outer = knows(b, inner)
    net.assert_fact(inner)
    net.assert_fact(outer)
    with pytest.raises(FactivityViolation):
        net.retract_fact(inner)
    assert inner in net.facts
    net.retract_fact([inner, outer])
    assert not net.holds(inner)


def test_retract_unknown_fact(net):
    a, = add_agents(net, "A")
    p = true_prop(net)
    with pytest.raises(NoSuchFact):
        net.retract_fact(knows(a, atom(p)))


def test_falsifying_a_known_prop_is_rejected(net):
    a, = add_agents(net, "A")
    p = true_prop(net)
    net.assert_fact(knows(a, atom(p)))
    with pytest.raises(FactivityViolation):
        net.set_world_truth(p, False)
    assert net.is_true(p)


def test_common_knowledge_entails_alternating_chains(net):
    a, b, c = add_agents(net, "A", "B", "C")
    p = true_prop(net)
    net.add_common_knowledge([a, b, c], p)
    assert net.holds(knows(a, knows(b, knows(c, knows(a, atom(p))))))
    assert not net.holds(knows(a, knows(a, atom(p))))
    with pytest.raises(GroupTooSmall):
        net.add_common_knowledge([a], p)


def test_common_knowledge_needs_truth(net):
    a, b = add_agents(net, "A", "B")
    p = net.add_prop("p")
    with pytest.raises(FactivityViolation):
        net.add_common_knowledge([a, b], p)
    assert not net.group_ck


class TestEpistemicState:

    def test_oblivious_by_default(self, net):
        a, = add_agents(net, "A")
        p = true_prop(net)
        assert net.epistemic_state(a, p) == {"oblivious"}

    def test_knows_but_unaware(self, net):
        a, = add_agents(net, "A")
        p = true_prop(net)
        net.assert_fact(knows(a, atom(p)))
        assert net.epistemic_state(a, p) == {"knows", "unaware"}

    def test_awareness_level(self, net):
        a, = add_agents(net, "A")
        p = true_prop(net)
        net.commit([knows(a, knows(a, knows(a, atom(p))))])
        assert net.awareness_level(a, p) == 3
        assert net.epistemic_state(a, p) == {"knows", "aware_3"}

    def test_believes(self, net):
        a, = add_agents(net, "A")
        p = net.add_prop("p")
        net.assert_fact(believes(a, atom(p)))
        assert net.epistemic_state(a, p) == {"believes"}

    def test_ignorant(self, net):
        a, = add_agents(net, "A")
        p = true_prop(net)
        net.commit([knows(a, neg(knows(a, atom(p))))])
        assert net.epistemic_state(a, p) == {"ignorant"}

    def test_confident_with_knowledge(self, net):
        a, = add_agents(net, "A")
        p = true_prop(net)
        net.commit([knows(a, atom(p)), knows(a, would_know(a, p))])
        assert net.epistemic_state(a, p) == {"knows", "unaware", "confident"}

    def test_heedful_residue(self, net):
        a, b = add_agents(net, "A", "B")
        p = true_prop(net)
        net.assert_fact(believes(a, knows(b, atom(p))))
        assert net.epistemic_state(a, p) == {"heedful"}


class TestBccExample:
    """The ten facts of the blind-copy email."""

    def test_fact_list(self, bcc):
        net, alan, betty, charles, p = (
            bcc["net"], bcc["alan"], bcc["betty"], bcc["charles"], bcc["p"],
        )
        P = atom(p)
        unseen = neg(knows(betty, knows(charles, P)))
        assert net.holds(knows(alan, P))
        assert net.holds(believes(alan, knows(betty, P)))
        assert net.holds(knows(betty, knows(alan, P)))
        assert net.holds(knows(betty, P))
        assert net.holds(believes(alan, knows(charles, P)))
        assert net.holds(knows(charles, knows(alan, P)))
        assert net.holds(knows(charles, P))
        assert not net.holds(knows(betty, knows(charles, P)))
        assert net.holds(knows(charles, knows(betty, P)))
        assert net.holds(knows(charles, unseen))
        assert net.holds(knows(charles, knows(alan, unseen)))
        assert not net.holds(knows(betty, unseen))

    def test_betty_holds_nothing_about_charles(self, bcc):
        net = bcc["net"]
        for formula in net.formulas_of(bcc["betty"]):
            assert bcc["charles"] not in agents_in(formula)

    def test_no_violations(self, bcc):
        assert bcc["net"].violations() == []
