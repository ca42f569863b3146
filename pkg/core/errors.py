"""
Exception hierarchy for the epinet engine.

Every rejected operation raises a subclass of EpinetError. Mutating
operations validate before they commit, so a raised error leaves the
Epinet untouched.
"""
from typing import Any, Iterable, List, Optional, Sequence


class EpinetError(Exception):
    """Base class for all engine errors."""


class InvalidName(EpinetError):
    """An agent name or prop statement is empty."""


class UnknownAgent(EpinetError):
    """An agent id is not registered in the net."""

    def __init__(self, agent_id: str):
        super().__init__(f"unknown agent: {agent_id}")
        self.agent_id = agent_id


class NoSuchProp(EpinetError):
    """A prop id is not registered in the net."""

    def __init__(self, prop_id: str):
        super().__init__(f"unknown prop: {prop_id}")
        self.prop_id = prop_id


class MalformedFormula(EpinetError):
    """A formula breaks the structural rules (negation placement, quoting)."""


class DepthExceeded(EpinetError):
    """A formula nests more Knows/Believes operators than max_depth allows."""

    def __init__(self, depth: int, max_depth: int):
        super().__init__(f"formula depth {depth} exceeds max_depth {max_depth}")
        self.depth = depth
        self.max_depth = max_depth


class FactivityViolation(EpinetError):
    """Knowledge without truth: the listed formulas would be known but false."""

    def __init__(self, offending: Iterable[Any], reason: str = ""):
        self.offending: List[Any] = list(offending)
        rendered = ", ".join(str(f) for f in self.offending)
        message = f"factivity violation: {rendered}"
        if reason:
            message = f"{message} ({reason})"
        super().__init__(message)


class NoSuchFact(EpinetError):
    """Retraction of a formula that is not stored."""


class ParseError(EpinetError):
    """Malformed input text; carries the position of the failure."""

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        column: Optional[int] = None,
        expected: Sequence[str] = (),
    ):
        self.line = line
        self.column = column
        self.expected = sorted(expected)
        where = ""
        if line is not None:
            where = f" at line {line}" + (f", column {column}" if column else "")
        hint = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message}{where}{hint}")
        self.message = message


class UndeclaredName(ParseError):
    """A scenario statement references a name that was not declared before."""


class EmptyScope(EpinetError):
    """A regime query was given an empty agent scope."""


class GroupTooSmall(EpinetError):
    """Commonality needs a group of at least two agents."""


class BadScope(EpinetError):
    """Subnetwork scope is not a proper subset of the enclosing network."""


class IncompleteCommitments(EpinetError):
    """A mobilization group member has no commitment prop."""


class SelfTrust(EpinetError):
    """Reflexive trust edges are not defined."""


class NotSecurityEligible(EpinetError):
    """The clique lacks mutual strong full trust or true trust-status props."""


class OriginIgnorant(EpinetError):
    """Propagation origin does not know the prop it is asserting."""


class NoInformation(EpinetError):
    """Holder has neither knowledge nor belief about the prop."""


class NotAuthenticatable(EpinetError):
    """The group is not a security neighborhood and cannot authenticate."""


class NotAMember(EpinetError):
    """Breach leaker outside the subnetwork, or outsider inside it."""


class NotShared(EpinetError):
    """The prop is not covert, mutual or common inside the subnetwork."""


class NoSuchChannel(EpinetError):
    """Event references an unregistered channel."""


class MalformedEvent(EpinetError):
    """Event fields are inconsistent (overlapping recipients, missing args)."""


class NoSuchThread(EpinetError):
    """Thread is unknown, or the replying agent is not a participant."""


class NoSuchAction(EpinetError):
    """Preset does not define the requested action."""


class ScenarioError(EpinetError):
    """Engine error raised while running a scenario statement."""

    def __init__(self, line: int, cause: EpinetError):
        super().__init__(f"line {line}: {type(cause).__name__}: {cause}")
        self.line = line
        self.cause = cause
