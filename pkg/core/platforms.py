"""
Platform primitives and presets.

Each event kind translates one platform action into a batch of facts and
common-knowledge records committed atomically against the Epinet. Presets
map user-facing actions (send, reply, post, sign ...) onto templates of
these primitives and are plain JSON documents.
"""
import logging
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Union

from pydantic import ValidationError

from .epinet import Epinet
from .errors import (
    BadScope,
    EpinetError,
    InvalidName,
    MalformedEvent,
    NoSuchAction,
    NoSuchChannel,
    NoSuchThread,
    NotAMember,
    ParseError,
)
from .formulas import believes, knows, neg, split_knows
from .models import (
    Atom,
    Channel,
    Event,
    EventKind,
    Formula,
    GroupCK,
    Petition,
    PlatformPreset,
    Thread,
    id_key,
    sorted_ids,
)
from .trust import has_full_trust, record_breach, set_trust

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).parent / "presets"
PSEUDO_PRIMITIVES = {"trust"}


# --------------------------------------------------------------------------
# Registration helpers
# --------------------------------------------------------------------------


def register_channel(
    net: Epinet,
    name: str,
    members: Iterable[str],
    host_group: Iterable[str],
    covert: bool = False,
) -> str:
    """Register a group channel inside an organization; returns its id."""
    if not name or not name.strip():
        raise InvalidName("channel name must be non-empty")
    if name in net.channels:
        raise InvalidName(f"channel already registered: {name}")
    inside = net.require_agents(members)
    host = net.require_agents(host_group)
    if not inside or not inside <= host:
        raise BadScope("channel members must be a non-empty subset of the host group")
    if covert and inside == host:
        raise BadScope("a covert channel must leave part of the host group outside")
    net.channels[name] = Channel(id=name, members=inside, covert=covert, host_group=host)
    logger.debug("registered %s channel %s", "covert" if covert else "open", name)
    return name


def premium_prop_key(owner: str) -> str:
    return f"premium:{owner}"


def support_prop_key(signer: str, prop_id: str) -> str:
    return f"support:{signer}:{prop_id}"


def set_premium(net: Epinet, owner: str) -> str:
    """Mark a profile owner as a premium account; returns the status prop."""
    net.require_agent(owner)
    prop_id = net.add_prop(
        f"{net.display(owner)} has a premium account", key=premium_prop_key(owner)
    )
    net.set_world_truth(prop_id, True)
    return prop_id


def stamp_event(net: Epinet, event: Event) -> Event:
    """Give the event an id if it has none."""
    if event.id:
        return event
    return event.model_copy(update={"id": net.next_id("event", "e")})


# --------------------------------------------------------------------------
# Event application
# --------------------------------------------------------------------------


class _Batch:
    """Facts, records and ledger deliveries produced by one event."""

    def __init__(self, net: Epinet, event: Event):
        self.net = net
        self.event = event
        self.formulas: List[Formula] = []
        self.records: List[GroupCK] = []
        self.deliveries: List[tuple] = []

    def add(self, *formulas: Formula) -> None:
        self.formulas.extend(formulas)

    def deliver(self, receiver: str, sender: str) -> None:
        prop_id = self.event.payload
        self.deliveries.append(
            (
                receiver,
                sender,
                has_full_trust(self.net, receiver, sender),
                self.net.informed(receiver, prop_id),
            )
        )

    def commit(self) -> None:
        self.net.commit(self.formulas, self.records)
        for receiver, sender, trusted, previously in self.deliveries:
            self.net.record_delivery(
                receiver, self.event.payload, sender, str(self.event.id), trusted, previously
            )


def _credible(net: Epinet, prop_id: str) -> bool:
    return net.is_true(prop_id) or not net.config.factivity_enforced


def _single(event: Event, role: str) -> str:
    if len(event.visible_recipients) != 1:
        raise MalformedEvent(f"{event.kind} needs exactly one visible recipient ({role})")
    return next(iter(event.visible_recipients))


def _validate(net: Epinet, event: Event) -> None:
    net.require_agent(event.sender)
    net.require_agents(event.visible_recipients)
    net.require_agents(event.hidden_recipients)
    net.require_prop(event.payload)
    if event.sender in event.visible_recipients or event.sender in event.hidden_recipients:
        raise MalformedEvent("sender cannot also be a recipient")
    overlap = event.visible_recipients & event.hidden_recipients
    if overlap:
        raise MalformedEvent(f"recipients both visible and hidden: {', '.join(sorted_ids(overlap))}")
    if event.channel is not None and event.channel not in net.channels:
        raise NoSuchChannel(f"unknown channel: {event.channel}")
    if event.kind == EventKind.CHANNEL_POST.value and event.channel is None:
        raise NoSuchChannel("channel_post needs a channel")


def _sender_chains(net: Epinet, sender: str, prop_id: str, pending: Sequence[Formula]) -> List[Formula]:
    """Sender-rooted Knows chains ending in the payload, existing or pending."""
    allowed = net.config.max_depth - 1
    found = {}
    for formula in list(net.derived()) + list(pending):
        agents, rest = split_knows(formula)
        if agents and agents[0] == sender and rest == Atom(prop=prop_id) and len(agents) <= allowed:
            found[agents] = formula
    return [found[k] for k in sorted(found, key=lambda a: (len(a), [id_key(x) for x in a]))]


def _thread_for(net: Epinet, event: Event) -> Thread:
    if event.thread is not None and event.thread in net.threads:
        thread = net.threads[event.thread]
        if thread.payload != event.payload:
            raise MalformedEvent(f"thread {thread.id} carries {thread.payload}, not {event.payload}")
        return thread
    thread_id = event.thread
    while thread_id is None or thread_id in net.threads:
        thread_id = net.next_id("thread", "t")
    return Thread(id=thread_id, payload=event.payload)


def _direct_message(net: Epinet, event: Event, batch: _Batch) -> None:
    sender, prop_id = event.sender, event.payload
    p = Atom(prop=prop_id)
    visible = sorted_ids(event.visible_recipients)
    hidden = sorted_ids(event.hidden_recipients)
    if not visible and not hidden:
        raise MalformedEvent("direct_message needs at least one recipient")
    thread = _thread_for(net, event)
    credible = _credible(net, prop_id)

    if credible:
        batch.add(knows(sender, p))
    for recipient in visible + hidden:
        batch.add(believes(sender, knows(recipient, p)))
    context = [
        f for f in _sender_chains(net, sender, prop_id, batch.formulas)
        if set(split_knows(f)[0]) <= set(thread.participants) | {sender, *visible}
    ]

    def accepts(recipient: str) -> bool:
        if not credible:
            return False
        return not net.config.trust_gated_messages or has_full_trust(net, recipient, sender)

    for recipient in visible + hidden:
        if accepts(recipient):
            batch.add(knows(recipient, p))
            batch.add(*(knows(recipient, f) for f in context))
        else:
            batch.add(believes(recipient, p))
        batch.deliver(recipient, sender)

    for h in hidden:
        if not accepts(h):
            continue
        batch.add(knows(h, knows(sender, p)))
        for r in visible:
            unseen = neg(knows(r, knows(h, p)))
            batch.add(knows(h, knows(r, p)), knows(h, unseen), knows(h, knows(sender, unseen)))

    participants = list(dict.fromkeys(thread.participants + [sender] + visible))
    delivered = [(str(event.id), sender, r) for r in sorted_ids(visible + hidden)]
    net.threads[thread.id] = thread.model_copy(
        update={
            "participants": sorted_ids(participants),
            "messages": thread.messages + delivered,
        }
    )


def _ack_read(net: Epinet, event: Event, batch: _Batch) -> None:
    reader, prop_id = event.sender, event.payload
    original = _single(event, "original sender")
    p = Atom(prop=prop_id)
    if event.thread is not None:
        thread = net.threads.get(event.thread)
        if thread is None or not any(m[1] == original and m[2] == reader for m in thread.messages):
            raise NoSuchThread(f"no message from {original} to {reader} in {event.thread}")
    else:
        matching = [
            t for t in net.threads.values()
            if t.payload == prop_id and any(m[1] == original and m[2] == reader for m in t.messages)
        ]
        if not matching:
            raise NoSuchThread(f"no message from {original} to {reader} carrying {prop_id}")
    if net.holds(knows(reader, p)):
        batch.add(knows(original, knows(reader, p)), knows(reader, knows(original, knows(reader, p))))
    else:
        batch.add(believes(original, believes(reader, p)))


def _broadcast(net: Epinet, event: Event, batch: _Batch) -> None:
    sender, prop_id = event.sender, event.payload
    p = Atom(prop=prop_id)
    audience = event.visible_recipients | event.hidden_recipients
    if not audience:
        audience = frozenset(a for a in net.agents if a != sender)
    credible = _credible(net, prop_id)
    if credible:
        batch.add(knows(sender, p))
    for viewer in sorted_ids(audience):
        if credible:
            batch.add(knows(viewer, p), knows(viewer, knows(sender, p)))
            if event.flags.acknowledged:
                batch.add(knows(sender, knows(viewer, p)))
        else:
            batch.add(believes(viewer, p))
        batch.deliver(viewer, sender)


def _reaction(net: Epinet, event: Event, batch: _Batch) -> None:
    reactor, prop_id = event.sender, event.payload
    owner = _single(event, "content owner")
    p = Atom(prop=prop_id)
    if _credible(net, prop_id):
        batch.add(
            knows(reactor, p),
            knows(owner, knows(reactor, p)),
            knows(reactor, knows(owner, knows(reactor, p))),
        )
    else:
        batch.add(believes(reactor, p), believes(owner, believes(reactor, p)))


def _co_presence(net: Epinet, event: Event, batch: _Batch) -> None:
    if event.hidden_recipients:
        raise MalformedEvent("co_presence has no hidden participants")
    attendees = frozenset({event.sender}) | event.visible_recipients
    if len(attendees) < 2:
        raise MalformedEvent("co_presence needs at least one other attendee")
    batch.records.append(GroupCK(group=attendees, prop=event.payload))
    for attendee in sorted_ids(event.visible_recipients):
        batch.deliver(attendee, event.sender)


def _channel_post(net: Epinet, event: Event, batch: _Batch) -> None:
    channel = net.channels[str(event.channel)]
    if event.sender not in channel.members:
        raise NotAMember(f"{event.sender} is not a member of {channel.id}")
    if len(channel.members) >= 2:
        batch.records.append(GroupCK(group=channel.members, prop=event.payload))
    else:
        batch.add(knows(event.sender, Atom(prop=event.payload)))
    for member in sorted_ids(channel.members - {event.sender}):
        batch.deliver(member, event.sender)


def _recording(net: Epinet, event: Event, batch: _Batch) -> None:
    recorder, prop_id = event.sender, event.payload
    p = Atom(prop=prop_id)
    attendees = sorted_ids(event.visible_recipients)
    viewers = sorted_ids(event.hidden_recipients)
    if event.flags.consent:
        exists = net.add_prop(f"meeting {event.id} is being recorded", key=f"recording:{event.id}")
        audience = net.add_prop(f"audience of recording {event.id}", key=f"audience:{event.id}")
        net.world.truths.update({exists, audience})
        batch.add(knows(recorder, Atom(prop=exists)))
        for attendee in attendees:
            batch.add(
                knows(attendee, Atom(prop=exists)),
                knows(attendee, neg(knows(attendee, Atom(prop=audience)))),
            )
    for viewer in viewers:
        batch.add(knows(viewer, p) if _credible(net, prop_id) else believes(viewer, p))
        batch.deliver(viewer, recorder)


def _profile_view(net: Epinet, event: Event, batch: _Batch) -> None:
    viewer, prop_id = event.sender, event.payload
    owner = _single(event, "profile owner")
    p = Atom(prop=prop_id)
    credible = _credible(net, prop_id)
    seen = knows(viewer, p) if credible else believes(viewer, p)
    batch.add(seen)
    premium = premium_prop_key(owner)
    if premium in net.props and net.is_true(premium):
        if credible:
            batch.add(knows(owner, seen))
            if net.holds(knows(viewer, Atom(prop=premium))):
                batch.add(knows(viewer, knows(owner, seen)))
        else:
            batch.add(believes(owner, seen))


def _petition_sign(net: Epinet, event: Event, batch: _Batch) -> None:
    signer, prop_id = event.sender, event.payload
    petition = net.petitions.get(prop_id)
    if petition is None:
        petition = Petition(prop=prop_id, initiator=_single(event, "initiator"))
    if signer in petition.signers:
        raise MalformedEvent(f"{signer} already signed {prop_id}")
    support = net.add_prop(
        f"{net.display(signer)} supports {prop_id}", key=support_prop_key(signer, prop_id)
    )
    net.world.truths.add(support)
    s_new = Atom(prop=support)
    circle = sorted_ids({petition.initiator, signer, *petition.signers})
    for x in circle:
        batch.add(knows(x, s_new))
        batch.add(*(knows(x, knows(y, s_new)) for y in circle if y != x))
    for prior in petition.signers:
        s_prior = Atom(prop=support_prop_key(prior, prop_id))
        batch.add(knows(signer, s_prior), knows(signer, knows(prior, s_prior)))
    net.petitions[prop_id] = petition.model_copy(
        update={"signers": petition.signers + [signer]}
    )


def _leak(net: Epinet, event: Event) -> None:
    outsider = _single(event, "outsider")
    if event.channel is not None:
        sg = net.channels[event.channel].members
    else:
        groups = [g for g in net.ck_groups(event.payload) if event.sender in g]
        if not groups:
            raise MalformedEvent(f"{event.sender} shares {event.payload} in no group")
        sg = min(groups, key=lambda g: (-len(g), [id_key(m) for m in sorted_ids(g)]))
    record_breach(net, event.sender, outsider, event.payload, sg, event_id=event.id)


_HANDLERS = {
    EventKind.DIRECT_MESSAGE.value: _direct_message,
    EventKind.ACK_READ.value: _ack_read,
    EventKind.BROADCAST.value: _broadcast,
    EventKind.REACTION.value: _reaction,
    EventKind.CO_PRESENCE.value: _co_presence,
    EventKind.CHANNEL_POST.value: _channel_post,
    EventKind.RECORDING.value: _recording,
    EventKind.PROFILE_VIEW.value: _profile_view,
    EventKind.PETITION_SIGN.value: _petition_sign,
}


def apply_event(net: Epinet, event: Event) -> Epinet:
    """Apply one platform event. All-or-nothing: a failed event leaves the
    net unchanged."""
    _validate(net, event)
    rollback = (
        dict(net.props),
        set(net.world.truths),
        dict(net.threads),
        dict(net.petitions),
        dict(net.counters),
    )
    try:
        event = stamp_event(net, event)
        if event.kind == EventKind.LEAK.value:
            _leak(net, event)
        else:
            batch = _Batch(net, event)
            _HANDLERS[str(event.kind)](net, event, batch)
            batch.commit()
    except EpinetError:
        net.props, net.world.truths, net.threads, net.petitions, net.counters = rollback
        net._invalidate()
        logger.warning("rejected %s event from %s", event.kind, event.sender)
        raise
    logger.debug("applied %s %s from %s", event.kind, event.id, event.sender)
    return net


def reply_in_thread(net: Epinet, thread: str, sender: str, recipient: str, prop_id: str) -> Epinet:
    """Reply inside an existing thread; only participants may reply."""
    existing = net.threads.get(thread)
    if existing is None:
        raise NoSuchThread(f"unknown thread: {thread}")
    if sender not in existing.participants:
        raise NoSuchThread(f"{sender} is not a participant of {thread}")
    if prop_id != existing.payload:
        raise MalformedEvent(f"thread {thread} carries {existing.payload}, not {prop_id}")
    event = Event(
        kind=EventKind.DIRECT_MESSAGE,
        sender=sender,
        visible=frozenset({recipient}),
        payload=prop_id,
        thread=thread,
    )
    return apply_event(net, event)


# --------------------------------------------------------------------------
# Presets
# --------------------------------------------------------------------------


def _validate_preset(preset: PlatformPreset) -> PlatformPreset:
    known = {k.value for k in EventKind} | PSEUDO_PRIMITIVES
    for action, templates in preset.actions.items():
        if not templates:
            raise ParseError(f"preset {preset.name}: action {action} has no templates")
        for template in templates:
            if template.get("kind") not in known:
                raise ParseError(
                    f"preset {preset.name}: action {action} uses unknown primitive "
                    f"{template.get('kind')!r}",
                    expected=sorted(known),
                )
    return preset


def parse_preset(text: str) -> PlatformPreset:
    try:
        preset = PlatformPreset.model_validate_json(text)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ParseError(f"invalid preset: {first['msg']}") from exc
    return _validate_preset(preset)


def load_preset(path: Union[str, Path]) -> PlatformPreset:
    return parse_preset(Path(path).read_text(encoding="utf-8"))


def builtin_presets() -> Dict[str, PlatformPreset]:
    """Presets shipped with the engine, keyed by name."""
    presets = {}
    for path in sorted(PRESET_DIR.glob("*.json")):
        preset = load_preset(path)
        presets[preset.name] = preset
    return presets


ArgValue = Union[str, Sequence[str], None]


def _substitute(value: Any, args: Mapping[str, ArgValue]) -> Any:
    """Replace `{name}` / `{name?}` placeholders in one template value."""
    if isinstance(value, dict):
        return {k: _substitute(v, args) for k, v in value.items()}
    if isinstance(value, list):
        out: List[Any] = []
        for item in value:
            sub = _substitute(item, args)
            if isinstance(sub, list):
                out.extend(sub)
            elif sub is not None:
                out.append(sub)
        return out
    if not isinstance(value, str) or not (value.startswith("{") and value.endswith("}")):
        return value
    name = value[1:-1]
    optional = name.endswith("?")
    name = name.rstrip("?")
    if name not in args or args[name] is None:
        if optional:
            return None
        raise MalformedEvent(f"missing action argument: {name}")
    return args[name]


def _as_set(value: Any) -> frozenset:
    if value is None:
        return frozenset()
    if isinstance(value, str):
        return frozenset(v for v in value.split(",") if v)
    return frozenset(value)


def expand_action(
    preset: PlatformPreset, action: str, args: Mapping[str, ArgValue]
) -> List[Dict[str, Any]]:
    """Templates of an action with every placeholder filled in."""
    templates = preset.actions.get(action)
    if templates is None:
        raise NoSuchAction(f"{preset.name} has no action {action!r}")
    expanded = []
    for template in templates:
        data = _substitute(template, args)
        for field in ("visible", "hidden"):
            data[field] = sorted_ids(_as_set(data.get(field)))
        expanded.append({k: v for k, v in data.items() if v is not None})
    return expanded


def run_preset_action(
    net: Epinet,
    preset: PlatformPreset,
    action: str,
    args: Mapping[str, ArgValue],
    on_event: Optional[Callable[[Event], None]] = None,
) -> List[Event]:
    """Run a preset action; returns the primitive events it applied.

    `on_event` is called after each primitive event is applied, before the
    next one runs.
    """
    applied: List[Event] = []
    for data in expand_action(preset, action, args):
        if data["kind"] == "trust":
            set_trust(net, data["from"], data["to"], data["trust"])
            continue
        try:
            event = Event.model_validate(data)
        except ValidationError as exc:
            raise MalformedEvent(f"{preset.name}.{action}: {exc.errors()[0]['msg']}") from exc
        event = stamp_event(net, event)
        apply_event(net, event)
        applied.append(event)
        if on_event is not None:
            on_event(event)
    logger.debug("%s.%s expanded to %d event(s)", preset.name, action, len(applied))
    return applied
