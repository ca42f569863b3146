"""
Tests for platform events and presets.
"""
import json

import pytest

from core.epinet import Epinet
from core.errors import (
    BadScope,
    InvalidName,
    MalformedEvent,
    NoSuchAction,
    NoSuchChannel,
    NoSuchThread,
    NotAMember,
    ParseError,
)
from core.formulas import agents_in, atom, believes, knows, neg
from core.models import INFINITY, EpinetConfig, Event, EventFlags, EventKind, TrustKind
from core.platforms import (
    apply_event,
    builtin_presets,
    expand_action,
    parse_preset,
    register_channel,
    reply_in_thread,
    run_preset_action,
    set_premium,
    support_prop_key,
)
from core.regimes import commonality_level, covert, mobilization_possible
from core.snapshot import snapshot
from core.trust import breach_prop_key, has_trust, set_trust

from tests.conftest import add_agents, build_thread, message, true_prop

PRESETS = builtin_presets()


def event(kind: EventKind, sender: str, payload: str, to=(), hidden=(), **extra) -> Event:
    return Event(
        kind=kind,
        sender=sender,
        visible=frozenset(to),
        hidden=frozenset(hidden),
        payload=payload,
        **extra,
    )


# --------------------------------------------------------------------------
# Validation and atomicity
# --------------------------------------------------------------------------


def test_overlapping_recipients_rejected(net):
    a, b = add_agents(net, "A", "B")
    p = true_prop(net)
    with pytest.raises(MalformedEvent):
        apply_event(net, message(a, [b], p, hidden=[b]))
    with pytest.raises(MalformedEvent):
        apply_event(net, message(a, [a], p))


def test_failed_event_leaves_net_unchanged(net):
    a, b, c = add_agents(net, "A", "B", "C")
    p = true_prop(net)
    register_channel(net, "ops", [a, b], [a, b, c])
    before = snapshot(net)
    with pytest.raises(NotAMember):
        apply_event(net, event(EventKind.CHANNEL_POST, c, p, channel="ops"))
    with pytest.raises(NoSuchChannel):
        apply_event(net, event(EventKind.CHANNEL_POST, a, p, channel="dev"))
    with pytest.raises(MalformedEvent):
        apply_event(net, event(EventKind.PETITION_SIGN, a, p))
    assert snapshot(net) == before


# --------------------------------------------------------------------------
# Direct messages and threads
# --------------------------------------------------------------------------


def test_false_payload_is_believed(net):
    a, b = add_agents(net, "A", "B")
    p = net.add_prop("rumour")
    apply_event(net, message(a, [b], p))
    assert net.holds(believes(b, atom(p)))
    assert not net.holds(knows(b, atom(p)))


def test_trust_gated_messages():
    net = Epinet(EpinetConfig(trust_gated_messages=True))
    a, b, c = add_agents(net, "A", "B", "C")
    p = true_prop(net)
    set_trust(net, c, a, "full")
    apply_event(net, message(a, [b, c], p))
    assert net.holds(believes(b, atom(p)))
    assert net.holds(knows(c, atom(p)))


def test_bcc_asymmetry_over_random_sequences(rng):
    for _ in range(40):
        net = Epinet()
        senders = add_agents(net, "S1", "S2")
        visible = add_agents(net, "V1", "V2", "V3")
        hidden = add_agents(net, "H1", "H2")
        props = [true_prop(net, "p"), true_prop(net, "q")]
        threads = {}
        for _ in range(rng.randint(1, 8)):
            p = rng.choice(props)
            to = rng.sample(visible, rng.randint(1, 3))
            bcc = rng.sample(hidden, rng.randint(1, 2))
            sender = rng.choice(senders)
            thread = threads.get(p) if rng.random() < 0.5 else None
            apply_event(net, message(sender, to, p, hidden=bcc, thread=thread))
            if thread is None:
                threads[p] = max(net.threads, key=lambda t: int(t[1:]))
            for v in visible:
                for formula in net.formulas_of(v):
                    assert not agents_in(formula) & set(hidden)


def test_reply_by_non_participant(net):
    a, b, c = add_agents(net, "A", "B", "C")
    p = true_prop(net)
    build_thread(net, a, b, p, 1)
    with pytest.raises(NoSuchThread):
        reply_in_thread(net, "t1", c, a, p)
    with pytest.raises(NoSuchThread):
        reply_in_thread(net, "t9", a, b, p)


def test_bcc_recipient_is_not_a_participant(net):
    a, b, c = add_agents(net, "A", "B", "C")
    p = true_prop(net)
    apply_event(net, message(a, [b], p, hidden=[c], thread="t1"))
    assert net.threads["t1"].participants == [a, b]
    with pytest.raises(NoSuchThread):
        reply_in_thread(net, "t1", c, a, p)


def test_reply_chain_levels(net):
    a, b = add_agents(net, "A", "B")
    p = true_prop(net)
    build_thread(net, a, b, p, 1)
    assert commonality_level(net, [a, b], p).level == 1
    reply_in_thread(net, "t1", b, a, p)
    assert commonality_level(net, [a, b], p).level == 2


def test_named_thread_does_not_collide_with_generated_ids(net):
    a, b = add_agents(net, "A", "B")
    p = true_prop(net)
    apply_event(net, message(a, [b], p, thread="t1"))
    apply_event(net, message(b, [a], p))
    assert sorted(net.threads) == ["t1", "t2"]


# --------------------------------------------------------------------------
# Read receipts, broadcasts, reactions
# --------------------------------------------------------------------------


def test_ack_read_makes_knowledge_mutual(net):
    a, b = add_agents(net, "A", "B")
    p = true_prop(net)
    apply_event(net, message(a, [b], p))
    apply_event(net, event(EventKind.ACK_READ, b, p, to=[a]))
    assert net.holds(knows(a, knows(b, atom(p))))
    assert commonality_level(net, [a, b], p).level == 2


def test_every_recipient_can_acknowledge(net):
    a, b, c = add_agents(net, "A", "B", "C")
    p = true_prop(net)
    apply_event(net, message(a, [b, c], p, thread="t1"))
    assert [m[2] for m in net.threads["t1"].messages] == [b, c]
    apply_event(net, event(EventKind.ACK_READ, b, p, to=[a]))
    apply_event(net, event(EventKind.ACK_READ, c, p, to=[a], thread="t1"))
    assert net.holds(knows(a, knows(b, atom(p))))
    assert net.holds(knows(a, knows(c, atom(p))))
    assert commonality_level(net, [a, c], p).level == 2


def test_ack_read_without_message(net):
    a, b = add_agents(net, "A", "B")
    p = true_prop(net)
    with pytest.raises(NoSuchThread):
        apply_event(net, event(EventKind.ACK_READ, b, p, to=[a]))
    apply_event(net, message(a, [b], p))
    with pytest.raises(NoSuchThread):
        apply_event(net, event(EventKind.ACK_READ, b, p, to=[a], thread="t9"))


def test_broadcast_reaches_everyone(net):
    a, b, c = add_agents(net, "A", "B", "C")
    p = true_prop(net)
    apply_event(net, event(EventKind.BROADCAST, a, p))
    assert net.holds(knows(b, knows(a, atom(p))))
    assert net.holds(knows(c, atom(p)))
    assert not net.holds(knows(a, knows(b, atom(p))))


def test_acknowledged_broadcast_automates_discovery(net):
    a, b = add_agents(net, "A", "B")
    p = true_prop(net)
    apply_event(
        net, event(EventKind.BROADCAST, a, p, to=[b], flags=EventFlags(acknowledged=True))
    )
    assert net.holds(knows(a, knows(b, atom(p))))
    assert commonality_level(net, [a, b], p).level == 2


def test_reaction_informs_owner(net):
    owner, fan = add_agents(net, "Owner", "Fan")
    p = true_prop(net)
    apply_event(net, event(EventKind.REACTION, fan, p, to=[owner]))
    assert net.holds(knows(owner, knows(fan, atom(p))))
    assert net.holds(knows(fan, knows(owner, knows(fan, atom(p)))))
    with pytest.raises(MalformedEvent):
        apply_event(net, event(EventKind.REACTION, fan, p))


# --------------------------------------------------------------------------
# Group presence, channels, recordings
# --------------------------------------------------------------------------


def test_co_presence_is_common_knowledge(net):
    a, b, c = add_agents(net, "A", "B", "C")
    p = true_prop(net)
    apply_event(net, event(EventKind.CO_PRESENCE, a, p, to=[b, c]))
    assert commonality_level(net, [a, b, c], p).level == INFINITY
    with pytest.raises(MalformedEvent):
        apply_event(net, event(EventKind.CO_PRESENCE, a, p, to=[b], hidden=[c]))


def test_channel_registration_rules(net):
    a, b, c = add_agents(net, "A", "B", "C")
    register_channel(net, "ops", [a, b], [a, b, c], covert=True)
    with pytest.raises(InvalidName):
        register_channel(net, "ops", [a], [a, b])
    with pytest.raises(BadScope):
        register_channel(net, "all", [a, b, c], [a, b, c], covert=True)
    with pytest.raises(BadScope):
        register_channel(net, "odd", [c], [a, b])


def test_covert_channel_post(net):
    a, b, c, d = add_agents(net, "A", "B", "C", "D")
    p = true_prop(net)
    register_channel(net, "core", [a, b, c], [a, b, c, d], covert=True)
    apply_event(net, event(EventKind.CHANNEL_POST, a, p, channel="core"))
    assert covert(net, p, [a, b, c], [a, b, c, d])
    assert net.provenance[(b, p)].hops[0].sender == a


def test_recording_with_consent(net):
    host, guest, viewer = add_agents(net, "Host", "Guest", "Viewer")
    p = true_prop(net)
    apply_event(
        net,
        event(
            EventKind.RECORDING, host, p, to=[guest], hidden=[viewer],
            flags=EventFlags(consent=True), id="e7",
        ),
    )
    assert net.holds(knows(guest, atom("recording:e7")))
    assert net.epistemic_state(guest, "audience:e7") == {"ignorant"}
    assert net.holds(knows(viewer, atom(p)))


def test_secret_recording(net):
    host, guest, viewer = add_agents(net, "Host", "Guest", "Viewer")
    p = true_prop(net)
    apply_event(net, event(EventKind.RECORDING, host, p, to=[guest], hidden=[viewer]))
    assert net.holds(knows(viewer, atom(p)))
    assert net.epistemic_state(guest, p) == {"oblivious"}
    assert not any(k.startswith("recording:") for k in net.props)


def test_profile_view_and_premium(net):
    viewer, owner = add_agents(net, "Viewer", "Owner")
    profile = true_prop(net, "owner's profile")
    apply_event(net, event(EventKind.PROFILE_VIEW, viewer, profile, to=[owner]))
    assert not net.holds(knows(owner, knows(viewer, atom(profile))))
    premium = set_premium(net, owner)
    apply_event(net, event(EventKind.PROFILE_VIEW, viewer, profile, to=[owner]))
    assert net.holds(knows(owner, knows(viewer, atom(profile))))
    assert not net.holds(knows(viewer, knows(owner, knows(viewer, atom(profile)))))
    net.assert_fact(knows(viewer, atom(premium)))
    apply_event(net, event(EventKind.PROFILE_VIEW, viewer, profile, to=[owner]))
    assert net.holds(knows(viewer, knows(owner, knows(viewer, atom(profile)))))


def test_profile_view_of_an_untrue_prop_is_a_belief(net):
    viewer, owner = add_agents(net, "Viewer", "Owner")
    profile = net.add_prop("owner's profile")
    set_premium(net, owner)
    apply_event(net, event(EventKind.PROFILE_VIEW, viewer, profile, to=[owner]))
    assert net.holds(believes(viewer, atom(profile)))
    assert net.holds(believes(owner, believes(viewer, atom(profile))))
    assert not net.holds(knows(viewer, atom(profile)))
    assert net.epistemic_state(viewer, profile) == {"believes"}


def test_petition_signing(net):
    ira, jo, kim = add_agents(net, "Ira", "Jo", "Kim")
    p = true_prop(net, "the park stays open")
    apply_event(net, event(EventKind.PETITION_SIGN, jo, p, to=[ira]))
    apply_event(net, event(EventKind.PETITION_SIGN, kim, p))
    s_jo, s_kim = support_prop_key(jo, p), support_prop_key(kim, p)
    assert net.holds(knows(kim, knows(jo, atom(s_jo))))
    assert net.holds(knows(jo, knows(kim, atom(s_kim))))
    assert net.petitions[p].signers == [jo, kim]
    with pytest.raises(MalformedEvent):
        apply_event(net, event(EventKind.PETITION_SIGN, kim, p))


def test_leak_from_the_largest_group(net):
    a, b, c, d = add_agents(net, "A", "B", "C", "D")
    p = true_prop(net)
    net.add_common_knowledge([a, b, c], p)
    apply_event(net, event(EventKind.LEAK, b, p, to=[d]))
    assert net.holds(knows(c, atom(breach_prop_key(b, p))))
    assert net.holds(believes(d, atom(p)))
    with pytest.raises(MalformedEvent):
        apply_event(net, event(EventKind.LEAK, d, p, to=[a]))


# --------------------------------------------------------------------------
# Presets
# --------------------------------------------------------------------------


def test_builtin_presets():
    assert {"email", "whatsapp", "twitter", "youtube", "zoom", "slack", "linkedin",
            "facebook", "quora", "change_org"} <= set(PRESETS)


def test_preset_validation():
    with pytest.raises(ParseError):
        parse_preset(json.dumps({"name": "x", "actions": {"go": [{"kind": "teleport"}]}}))
    with pytest.raises(ParseError):
        parse_preset("{}")


def test_expand_action_placeholders():
    expanded = expand_action(PRESETS["email"], "send", {"from": "a1", "to": "a2", "p": "p1"})
    assert expanded == [
        {"kind": "direct_message", "sender": "a1", "visible": ["a2"], "hidden": [], "payload": "p1"}
    ]
    with pytest.raises(MalformedEvent):
        expand_action(PRESETS["email"], "send", {"from": "a1", "p": "p1"})
    with pytest.raises(NoSuchAction):
        expand_action(PRESETS["email"], "forward", {})


def test_whatsapp_send_is_mutual(net):
    a, b = add_agents(net, "A", "B")
    p = true_prop(net)
    events = run_preset_action(net, PRESETS["whatsapp"], "send", {"from": a, "to": b, "p": p})
    assert [e.kind for e in events] == ["direct_message", "ack_read"]
    assert commonality_level(net, [a, b], p).level == 2


def test_preset_action_reports_each_event(net):
    a, b = add_agents(net, "A", "B")
    p = true_prop(net)
    levels = []
    run_preset_action(
        net,
        PRESETS["whatsapp"],
        "send",
        {"from": a, "to": b, "p": p},
        on_event=lambda e: levels.append((e.kind, commonality_level(net, [a, b], p).level)),
    )
    assert levels == [("direct_message", 1), ("ack_read", 2)]


def test_email_send_leaves_sender_believing(net):
    a, b = add_agents(net, "A", "B")
    p = true_prop(net)
    run_preset_action(net, PRESETS["email"], "send", {"from": a, "to": b, "p": p})
    assert net.holds(believes(a, knows(b, atom(p))))
    assert not net.holds(knows(a, knows(b, atom(p))))
    assert commonality_level(net, [a, b], p).level == 1


def test_linkedin_connect_declares_trust(net):
    a, b = add_agents(net, "A", "B")
    events = run_preset_action(net, PRESETS["linkedin"], "connect", {"a": a, "b": b})
    assert events == []
    assert has_trust(net, a, b, TrustKind.COMPETENCE)
    assert has_trust(net, b, a, TrustKind.INTEGRITY_WEAK)


def test_slack_covert_channel_until_a_leak(rng):
    for _ in range(100):
        net = Epinet()
        org = add_agents(net, *[f"member{i}" for i in range(6)])
        members = org[:3]
        plans = [true_prop(net, "plan"), true_prop(net, "budget")]
        register_channel(net, "inner", members, org, covert=True)
        posted = set()
        for _ in range(rng.randint(1, 6)):
            p = rng.choice(plans)
            sender = rng.choice(members)
            if rng.random() < 0.6 or p not in posted:
                run_preset_action(
                    net, PRESETS["slack"], "post", {"from": sender, "channel": "inner", "p": p}
                )
                posted.add(p)
            else:
                other = rng.choice([m for m in members if m != sender])
                run_preset_action(net, PRESETS["slack"], "dm", {"from": sender, "to": other, "p": p})
            for q in posted:
                assert covert(net, q, members, org)
        p = rng.choice(sorted(posted))
        leaker, outsider = rng.choice(members), rng.choice(org[3:])
        run_preset_action(
            net, PRESETS["slack"], "leak",
            {"from": leaker, "to": outsider, "channel": "inner", "p": p},
        )
        assert not covert(net, p, members, org)
        breach = breach_prop_key(leaker, p)
        assert all(net.holds(knows(m, atom(breach))) for m in members)


def test_change_org_round_enables_mobilization(net):
    ira, jo, kim = add_agents(net, "Ira", "Jo", "Kim")
    p = true_prop(net, "the park stays open")
    goes = {a: true_prop(net, f"{a} goes if the others go") for a in (ira, jo, kim)}
    assert not mobilization_possible(net, [ira, jo, kim], goes)
    sign = PRESETS["change_org"]
    run_preset_action(net, sign, "sign", {"signer": jo, "initiator": ira, "p": p})
    run_preset_action(net, sign, "sign", {"signer": kim, "p": p})
    run_preset_action(net, sign, "sign", {"signer": ira, "p": p})
    support = {a: support_prop_key(a, p) for a in (ira, jo, kim)}
    assert mobilization_possible(net, [ira, jo, kim], support)
    assert commonality_level(net, [ira, jo, kim], support[kim]).level == 2


def test_zoom_meeting_is_common_knowledge(net):
    host, a, b = add_agents(net, "Host", "A", "B")
    p = true_prop(net)
    run_preset_action(net, PRESETS["zoom"], "meet", {"host": host, "attendees": [a, b], "p": p})
    assert commonality_level(net, [host, a, b], p).level == INFINITY
    assert not net.holds(neg(knows(a, knows(b, atom(p)))))
