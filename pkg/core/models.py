"""
Pydantic data models for the epinet engine.
"""
import re
from datetime import datetime
from enum import Enum
from typing import Annotated, Any, Dict, FrozenSet, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator

INFINITY = "INFINITY"
Level = Union[int, Literal["INFINITY"]]

_DIGITS = re.compile(r"(\d+)")


def id_key(token: str) -> Tuple[Any, ...]:
    """Natural sort key for generated ids, so a2 sorts before a10."""
    return tuple(int(part) if part.isdigit() else part for part in _DIGITS.split(token))


def sorted_ids(tokens: Any) -> List[str]:
    """Canonical ordering for any collection of ids."""
    return sorted(tokens, key=id_key)


# --------------------------------------------------------------------------
# Registry types
# --------------------------------------------------------------------------


class Agent(BaseModel):
    """Agent registered in an epinet; compared by id only."""
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., description="Unique agent identifier")
    display_name: str = Field(..., description="Human readable name")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Agent) and other.id == self.id

    def __hash__(self) -> int:
        return hash(self.id)


class Prop(BaseModel):
    """Atomic proposition."""
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., description="Unique prop identifier")
    statement: str = Field(..., description="Opaque statement text")


class WorldState(BaseModel):
    """Truth assignment: a prop is true iff its id is in `truths`."""
    truths: set[str] = Field(default_factory=set)


# --------------------------------------------------------------------------
# Formula algebra
# --------------------------------------------------------------------------


class _FormulaBase(BaseModel):
    model_config = ConfigDict(frozen=True)

    def __str__(self) -> str:
        from .formulas import render

        return render(self)  # type: ignore[arg-type]


class Atom(_FormulaBase):
    op: Literal["atom"] = "atom"
    prop: str


class Knows(_FormulaBase):
    op: Literal["K"] = "K"
    agent: str
    inner: "Formula"


class Believes(_FormulaBase):
    op: Literal["B"] = "B"
    agent: str
    inner: "Formula"


class Not(_FormulaBase):
    op: Literal["not"] = "not"
    inner: "Formula"


class WouldKnowIfTrue(_FormulaBase):
    """Quoted subjunctive: `agent` would know `prop` were it true."""
    op: Literal["W"] = "W"
    agent: str
    prop: str


Formula = Annotated[
    Union[Atom, Knows, Believes, Not, WouldKnowIfTrue], Field(discriminator="op")
]

Knows.model_rebuild()
Believes.model_rebuild()
Not.model_rebuild()


class EpinetConfig(BaseModel):
    """Engine configuration, carried inside every snapshot."""
    max_depth: int = Field(default=12, ge=1)
    factivity_enforced: bool = Field(default=True)
    trust_gated_messages: bool = Field(
        default=False,
        description="Untrusted direct messages are stored as beliefs",
    )


class GroupCK(BaseModel):
    """Compact common-knowledge record: `prop` is common knowledge in `group`."""
    model_config = ConfigDict(frozen=True)

    group: FrozenSet[str]
    prop: str

    @field_validator("group")
    @classmethod
    def _at_least_two(cls, value: FrozenSet[str]) -> FrozenSet[str]:
        if len(value) < 2:
            raise ValueError("common knowledge groups need at least two members")
        return value

    @field_serializer("group")
    def _sorted_group(self, value: FrozenSet[str]) -> List[str]:
        return sorted_ids(value)


class ProvenanceHop(BaseModel):
    model_config = ConfigDict(frozen=True)

    sender: str
    event: str
    trusted: bool = Field(
        default=False, description="Receiver held full trust in sender at delivery"
    )


class ProvenanceChain(BaseModel):
    """How `holder` came to hold `prop`; empty hops means origin knowledge."""
    prop: str
    holder: str
    hops: List[ProvenanceHop] = Field(default_factory=list)
    stale: bool = False


# --------------------------------------------------------------------------
# Trust
# --------------------------------------------------------------------------


class TrustKind(str, Enum):
    """Trust edge kinds."""
    INTEGRITY_WEAK = "integrity_weak"
    INTEGRITY_STRONG = "integrity_strong"
    COMPETENCE = "competence"
    FULL = "full"


class EdgeOrigin(str, Enum):
    DECLARED = "declared"
    DERIVED = "derived"


class TrustEdge(BaseModel):
    """Directed trust relation: `source` trusts `target`."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    source: str = Field(..., alias="from")
    target: str = Field(..., alias="to")
    kind: TrustKind
    origin: EdgeOrigin = EdgeOrigin.DECLARED

    @property
    def key(self) -> Tuple[str, str, TrustKind]:
        return (self.source, self.target, self.kind)


class ConduitKind(str, Enum):
    TRUST = "trust"
    SECURITY = "security"


class Directionality(str, Enum):
    ONE_WAY = "one_way"
    CORRIDOR = "corridor"


class Conduit(BaseModel):
    """Path along which information flows credibly: path[i+1] trusts path[i]."""
    path: List[str] = Field(..., min_length=2)
    kind: ConduitKind
    directionality: Directionality


class InformationClass(str, Enum):
    FACT = "fact"
    RUMOR = "rumor"
    ORIGIN = "origin"


class Authentication(str, Enum):
    INSIDER = "insider"
    OUTSIDER = "outsider"


# --------------------------------------------------------------------------
# Regimes
# --------------------------------------------------------------------------


class EpistemicLabel(str, Enum):
    """Fixed epistemic-state labels; awareness is reported as `aware_<n>`."""
    KNOWS = "knows"
    UNAWARE = "unaware"
    BELIEVES = "believes"
    CONFIDENT = "confident"
    IGNORANT = "ignorant"
    OBLIVIOUS = "oblivious"
    HEEDFUL = "heedful"


class NeighborhoodKind(str, Enum):
    DISTRIBUTED = "distributed"
    MUTUAL = "mutual"
    LEVEL_N = "level_n"
    COMMON = "common"
    COVERT = "covert"


class Neighborhood(BaseModel):
    """Maximal agent set satisfying a knowledge or trust regime."""
    members: List[str] = Field(..., min_length=1)
    prop: Optional[str] = None
    kind: str
    level: Optional[Level] = None

    @field_validator("members")
    @classmethod
    def _canonical(cls, value: List[str]) -> List[str]:
        return sorted_ids(set(value))


class CommonalityReport(BaseModel):
    group: List[str]
    prop: str
    level: Level

    def reaches(self, n: int) -> bool:
        return self.level == INFINITY or int(self.level) >= n


class Distribution(BaseModel):
    count: int = Field(..., ge=0)
    ratio: float = Field(..., ge=0.0, le=1.0)


# --------------------------------------------------------------------------
# Platform events
# --------------------------------------------------------------------------


class EventKind(str, Enum):
    """Platform communication primitives."""
    DIRECT_MESSAGE = "direct_message"
    ACK_READ = "ack_read"
    BROADCAST = "broadcast"
    REACTION = "reaction"
    CO_PRESENCE = "co_presence"
    CHANNEL_POST = "channel_post"
    RECORDING = "recording"
    PROFILE_VIEW = "profile_view"
    PETITION_SIGN = "petition_sign"
    LEAK = "leak"


class EventFlags(BaseModel):
    model_config = ConfigDict(frozen=True)

    covert: bool = False
    acknowledged: bool = False
    consent: bool = False


class Event(BaseModel):
    """One platform action; serialized as one JSON line in event logs."""
    model_config = ConfigDict(frozen=True, populate_by_name=True, use_enum_values=True)

    id: Optional[str] = None
    kind: EventKind
    sender: str
    visible_recipients: FrozenSet[str] = Field(default_factory=frozenset, alias="visible")
    hidden_recipients: FrozenSet[str] = Field(default_factory=frozenset, alias="hidden")
    payload: str
    thread: Optional[str] = None
    channel: Optional[str] = None
    flags: EventFlags = Field(default_factory=EventFlags)

    @field_serializer("visible_recipients", "hidden_recipients")
    def _sorted_recipients(self, value: FrozenSet[str]) -> List[str]:
        return sorted_ids(value)


class Channel(BaseModel):
    """Persistent group channel inside an organization (`host_group`)."""
    id: str
    members: FrozenSet[str]
    covert: bool = False
    host_group: FrozenSet[str]

    @field_serializer("members", "host_group")
    def _sorted_members(self, value: FrozenSet[str]) -> List[str]:
        return sorted_ids(value)


class Thread(BaseModel):
    """Message thread: a payload exchanged among participants."""
    id: str
    payload: str
    participants: List[str] = Field(default_factory=list)
    messages: List[Tuple[str, str, str]] = Field(
        default_factory=list, description="(event id, sender, recipient), one entry per recipient"
    )


class Petition(BaseModel):
    prop: str
    initiator: str
    signers: List[str] = Field(default_factory=list)


class PlatformPreset(BaseModel):
    """Named platform: user actions mapped to primitive event templates."""
    name: str
    actions: Dict[str, List[Dict[str, Any]]] = Field(default_factory=dict)


# --------------------------------------------------------------------------
# Run ledger
# --------------------------------------------------------------------------


class RunRecord(BaseModel):
    """A recorded scenario run."""
    id: str
    scenario: str
    digest: str
    created_at: datetime = Field(default_factory=datetime.now)
    report: Dict[str, Any] = Field(default_factory=dict)
