"""
Scenario files: a line-oriented language that declares a net, drives
events through it and asks queries.

    # comment
    agent alan
    prop p "the meeting moved to 3pm"
    truth p true
    event direct_message from=alan to=betty hidden=charles p=p
    query holds K(charles, ~K(betty, K(charles, p)))
    query@1 level p alan,betty

Statements run in file order. `query@k` is evaluated right after the k-th
primitive event (k = 0: before the first one); plain queries run at the end.
"""
import logging
import re
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Set, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

from .epinet import Epinet
from .errors import EpinetError, ParseError, ScenarioError, UndeclaredName
from .formulas import parse_formula, render
from .models import (
    ConduitKind,
    Directionality,
    EpinetConfig,
    Event,
    EventFlags,
    EventKind,
    Formula,
    NeighborhoodKind,
    PlatformPreset,
    TrustKind,
    sorted_ids,
)
from .platforms import (
    apply_event,
    builtin_presets,
    load_preset,
    register_channel,
    reply_in_thread,
    run_preset_action,
    set_premium,
    stamp_event,
)
from .regimes import commonality_level, covert, distribution, find_neighborhoods, mobilization_possible
from .snapshot import canonical_json, snapshot
from .trust import (
    authenticate,
    classify_information,
    connection_degree,
    declare_conduit,
    derive_security_ck,
    find_conduit,
    propagate_assertion,
    security_neighborhoods,
    set_trust,
    trust_closure,
    trust_neighborhoods,
    visible_agents,
)
from utils.security import digest

logger = logging.getLogger(__name__)

KEYWORDS = [
    "action", "agent", "channel", "ck", "closure", "conduit", "config",
    "derive_security", "event", "fact", "premium", "preset", "prop",
    "propagate", "query", "retract", "trust", "truth",
]
EVENT_KINDS = sorted([k.value for k in EventKind] + ["reply"])
EVENT_KEYS = ["acknowledged", "channel", "consent", "covert", "from", "hidden", "p", "thread", "to"]
FLAG_KEYS = {"acknowledged", "consent", "covert"}
QUERY_KINDS = [
    "authenticate", "awareness", "classify", "conduit", "covert", "degree",
    "distribution", "holds", "level", "mobilization", "neighborhoods",
    "security_neighborhoods", "state", "trust_neighborhoods", "visible",
]
CONFIG_KEYS = ["factivity", "max_depth", "trust_gated"]
ENGINE_PREFIXES = {
    "audience", "breach", "conduit", "premium", "recording", "secure", "support", "trust",
}

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_TOKEN = re.compile(r'"(?:[^"\\]|\\.)*"|"[^"]*$|[^\s"]+')
_KEY_PIECES = re.compile(r"([:>.])")


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


class Statement(BaseModel):
    """One scenario line. Names are kept as written; ids are bound at run time."""
    model_config = ConfigDict(frozen=True)

    line: int
    keyword: str
    at: Optional[int] = None
    args: List[str] = Field(default_factory=list)
    options: Dict[str, List[str]] = Field(default_factory=dict)
    text: Optional[str] = None
    formula: Optional[Formula] = None


class Scenario(BaseModel):
    statements: List[Statement] = Field(default_factory=list)

    @property
    def events(self) -> List[Statement]:
        return [s for s in self.statements if s.keyword in ("event", "action")]

    @property
    def queries(self) -> List[Statement]:
        return [s for s in self.statements if s.keyword == "query"]


class QueryResult(BaseModel):
    line: int
    query: str
    at: Optional[int] = None
    result: Any = None


class Report(BaseModel):
    results: List[QueryResult] = Field(default_factory=list)
    digest: str

    def to_json(self) -> bytes:
        return canonical_json(self.model_dump(mode="json"))


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------


class _Token(BaseModel):
    text: str
    column: int
    quoted: bool = False


def _tokenize(line: str, number: int) -> List[_Token]:
    tokens: List[_Token] = []
    for match in _TOKEN.finditer(line):
        raw = match.group(0)
        column = match.start() + 1
        if raw.startswith("#"):
            break
        if raw.startswith('"'):
            if len(raw) < 2 or not raw.endswith('"'):
                raise ParseError("unterminated string", line=number, column=column, expected=['"'])
            tokens.append(_Token(text=raw[1:-1].replace('\\"', '"'), column=column, quoted=True))
        else:
            if "#" in raw:
                raw = raw[: raw.index("#")]
                if raw:
                    tokens.append(_Token(text=raw, column=column))
                break
            tokens.append(_Token(text=raw, column=column))
    return tokens


def _strip_comment(text: str) -> str:
    return text.split("#", 1)[0].rstrip()


class ScenarioParser:
    """Single-pass parser that also checks every name is declared before use."""

    def __init__(self) -> None:
        self.agents: Set[str] = set()
        self.props: Set[str] = set()
        self.channels: Set[str] = set()
        self.presets: Set[str] = set(builtin_presets())
        self.declared_agent = False
        self.number = 0
        self.line = ""

    # -- helpers -------------------------------------------------------

    def error(self, message: str, column: Optional[int] = None, expected: Any = ()) -> ParseError:
        return ParseError(message, line=self.number, column=column, expected=list(expected))

    def undeclared(self, kind: str, name: str, column: Optional[int]) -> UndeclaredName:
        return UndeclaredName(f"undeclared {kind} {name!r}", line=self.number, column=column)

    def agent(self, token: _Token, name: Optional[str] = None) -> str:
        name = name if name is not None else token.text
        if name not in self.agents:
            raise self.undeclared("agent", name, token.column)
        return name

    def prop(self, token: _Token, name: Optional[str] = None) -> str:
        name = name if name is not None else token.text
        if name in self.props:
            return name
        if ":" in name and name.split(":", 1)[0] in ENGINE_PREFIXES:
            return name
        raise self.undeclared("prop", name, token.column)

    def agent_list(self, token: _Token, values: List[str]) -> List[str]:
        return [self.agent(token, v) for v in values]

    def new_name(self, token: _Token) -> str:
        if token.quoted or not _NAME.match(token.text):
            raise self.error(f"invalid name {token.text!r}", token.column, ["NAME"])
        if token.text in self.agents or token.text in self.props:
            raise self.error(f"name already declared: {token.text}", token.column)
        return token.text

    def need(self, tokens: List[_Token], count: int, usage: str) -> None:
        if len(tokens) < count:
            words = usage.split()
            missing = words[min(len(tokens) + 1, len(words) - 1)]
            raise self.error(f"incomplete statement, usage: {usage}", len(self.line) + 1, [missing])

    def split(self, tokens: List[_Token]) -> Tuple[List[_Token], Dict[str, Tuple[_Token, List[str]]]]:
        positional: List[_Token] = []
        options: Dict[str, Tuple[_Token, List[str]]] = {}
        for token in tokens:
            if not token.quoted and "=" in token.text:
                key, _, value = token.text.partition("=")
                options[key] = (token, [v for v in value.split(",") if v])
            else:
                positional.append(token)
        return positional, options

    def formula(self, keyword_end: int) -> Formula:
        raw = self.line[keyword_end:]
        text = _strip_comment(raw)
        if not text.strip():
            raise self.error("missing formula", len(self.line) + 1, ["FORMULA"])
        offset = keyword_end + (len(text) - len(text.lstrip()))

        def locate(name: str) -> _Token:
            return _Token(text=name, column=self.line.find(name, keyword_end) + 1)

        return parse_formula(
            text.strip(),
            agent=lambda n: self.agent(locate(n)),
            prop=lambda n: self.prop(locate(n)),
            line=self.number,
            column_offset=offset,
        )

    # -- statements ----------------------------------------------------

    def parse(self, text: str) -> Scenario:
        statements: List[Statement] = []
        for number, line in enumerate(text.splitlines(), start=1):
            self.number, self.line = number, line
            tokens = _tokenize(line, number)
            if not tokens:
                continue
            head = tokens[0]
            keyword, _, at_text = head.text.partition("@")
            if keyword not in KEYWORDS or head.quoted:
                raise self.error(f"unknown statement {head.text!r}", head.column, KEYWORDS)
            at: Optional[int] = None
            if at_text or head.text.endswith("@"):
                if keyword != "query" or not at_text.isdigit():
                    raise self.error(f"bad query position {head.text!r}", head.column, ["query@<k>"])
                at = int(at_text)
            handler: Callable[..., Statement] = getattr(self, f"_{keyword}")
            statements.append(handler(head, tokens[1:], at))
        return Scenario(statements=statements)

    def _stmt(self, keyword: str, **fields: Any) -> Statement:
        return Statement(line=self.number, keyword=keyword, **fields)

    def _config(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        if self.declared_agent:
            raise self.error("config must come before any agent", head.column)
        self.need(tokens, 2, "config KEY VALUE")
        key, value = tokens[0], tokens[1]
        if key.text not in CONFIG_KEYS:
            raise self.error(f"unknown config key {key.text!r}", key.column, CONFIG_KEYS)
        if key.text == "max_depth":
            if not value.text.isdigit() or int(value.text) < 1:
                raise self.error("max_depth must be a positive integer", value.column, ["INT"])
        elif value.text not in ("on", "off"):
            raise self.error(f"expected on|off, got {value.text!r}", value.column, ["off", "on"])
        return self._stmt("config", args=[key.text, value.text])

    def _agent(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        self.need(tokens, 1, "agent NAME")
        name = self.new_name(tokens[0])
        self.agents.add(name)
        self.declared_agent = True
        return self._stmt("agent", args=[name])

    def _prop(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        self.need(tokens, 2, 'prop NAME "STATEMENT"')
        name = self.new_name(tokens[0])
        if not tokens[1].quoted:
            raise self.error("prop statement must be quoted", tokens[1].column, ['"STATEMENT"'])
        self.props.add(name)
        return self._stmt("prop", args=[name], text=tokens[1].text)

    def _truth(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        self.need(tokens, 2, "truth PROP VALUE")
        if tokens[1].text not in ("true", "false"):
            raise self.error(f"expected true|false, got {tokens[1].text!r}", tokens[1].column, ["false", "true"])
        return self._stmt("truth", args=[self.prop(tokens[0]), tokens[1].text])

    def _trust(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        self.need(tokens, 3, "trust FROM TO KIND")
        kinds = [k.value for k in TrustKind]
        if tokens[2].text not in kinds:
            raise self.error(f"unknown trust kind {tokens[2].text!r}", tokens[2].column, kinds)
        return self._stmt(
            "trust", args=[self.agent(tokens[0]), self.agent(tokens[1]), tokens[2].text]
        )

    def _channel(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        positional, options = self.split(tokens)
        self.need(positional, 2, "channel NAME MODE host=AGENTS members=AGENTS")
        name, mode = positional[0], positional[1]
        if not _NAME.match(name.text) or name.text in self.channels:
            raise self.error(f"invalid or duplicate channel name {name.text!r}", name.column)
        if mode.text not in ("open", "covert"):
            raise self.error(f"expected open|covert, got {mode.text!r}", mode.column, ["covert", "open"])
        for key in ("host", "members"):
            if key not in options:
                raise self.error(f"channel needs {key}=", len(self.line) + 1, [f"{key}="])
        unknown = set(options) - {"host", "members"}
        if unknown:
            token = options[sorted(unknown)[0]][0]
            raise self.error(f"unknown channel option {token.text!r}", token.column, ["host=", "members="])
        self.channels.add(name.text)
        return self._stmt(
            "channel",
            args=[name.text, mode.text],
            options={k: self.agent_list(*options[k]) for k in ("host", "members")},
        )

    def _preset(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        self.need(tokens, 2, "preset NAME PATH")
        if not _NAME.match(tokens[0].text):
            raise self.error(f"invalid preset name {tokens[0].text!r}", tokens[0].column, ["NAME"])
        self.presets.add(tokens[0].text)
        return self._stmt("preset", args=[tokens[0].text, tokens[1].text])

    def _ck(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        self.need(tokens, 3, "ck PROP AGENT AGENT")
        return self._stmt(
            "ck", args=[self.prop(tokens[0])] + [self.agent(t) for t in tokens[1:]]
        )

    def _fact(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        return self._stmt("fact", formula=self.formula(head.column - 1 + len(head.text)))

    def _retract(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        return self._stmt("retract", formula=self.formula(head.column - 1 + len(head.text)))

    def _closure(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        return self._stmt("closure")

    def _derive_security(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        self.need(tokens, 2, "derive_security AGENT AGENT")
        return self._stmt("derive_security", args=[self.agent(t) for t in tokens])

    def _conduit(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        self.need(tokens, 2, "conduit AGENT AGENT")
        return self._stmt("conduit", args=[self.agent(t) for t in tokens])

    def _premium(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        self.need(tokens, 1, "premium AGENT")
        return self._stmt("premium", args=[self.agent(tokens[0])])

    def _propagate(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        positional, options = self.split(tokens)
        self.need(positional, 2, "propagate ORIGIN PROP")
        extra = set(options) - {"audience"}
        if extra:
            token = options[sorted(extra)[0]][0]
            raise self.error(f"unknown option {token.text!r}", token.column, ["audience="])
        resolved = {k: self.agent_list(*v) for k, v in options.items()}
        return self._stmt(
            "propagate",
            args=[self.agent(positional[0]), self.prop(positional[1])],
            options=resolved,
        )

    def _event(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        positional, options = self.split(tokens)
        self.need(positional, 1, "event KIND key=value")
        kind = positional[0]
        if kind.text not in EVENT_KINDS:
            raise self.error(f"unknown event kind {kind.text!r}", kind.column, EVENT_KINDS)
        if len(positional) > 1:
            raise self.error(f"unexpected argument {positional[1].text!r}", positional[1].column, ["key=value"])
        resolved: Dict[str, List[str]] = {}
        for key, (token, values) in options.items():
            if key not in EVENT_KEYS:
                raise self.error(f"unknown event option {key!r}", token.column, [f"{k}=" for k in EVENT_KEYS])
            if key in ("from", "to", "hidden"):
                resolved[key] = self.agent_list(token, values)
            elif key == "p":
                resolved[key] = [self.prop(token, v) for v in values]
            elif key == "channel":
                for value in values:
                    if value not in self.channels:
                        raise self.undeclared("channel", value, token.column)
                resolved[key] = values
            elif key in FLAG_KEYS:
                if values not in (["true"], ["false"]):
                    raise self.error(f"{key} must be true|false", token.column, ["false", "true"])
                resolved[key] = values
            else:
                resolved[key] = values
        required = ["from", "p"] + (["thread", "to"] if kind.text == "reply" else [])
        for key in required:
            if len(resolved.get(key, [])) != 1:
                raise self.error(f"{kind.text} needs exactly one {key}=", len(self.line) + 1, [f"{key}="])
        return self._stmt("event", args=[kind.text], options=resolved)

    def _action(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        positional, options = self.split(tokens)
        self.need(positional, 2, "action PRESET ACTION key=value")
        preset = positional[0]
        if preset.text not in self.presets:
            raise self.undeclared("preset", preset.text, preset.column)
        resolved = {}
        for key, (token, values) in options.items():
            for value in values:
                known = value in self.agents or value in self.props or value in self.channels
                if not known and _NAME.match(value) is None and ":" not in value:
                    raise self.undeclared("name", value, token.column)
            resolved[key] = values
        return self._stmt("action", args=[preset.text, positional[1].text], options=resolved)

    def _query(self, head: _Token, tokens: List[_Token], at: Optional[int]) -> Statement:
        self.need(tokens, 1, "query KIND ARGS")
        kind = tokens[0]
        if kind.text not in QUERY_KINDS:
            raise self.error(f"unknown query kind {kind.text!r}", kind.column, QUERY_KINDS)
        rest = tokens[1:]
        if kind.text == "holds":
            formula = self.formula(kind.column - 1 + len(kind.text))
            return self._stmt("query", at=at, args=["holds"], formula=formula)
        positional, options = self.split(rest)
        check = getattr(self, f"_query_{kind.text}")
        args, resolved = check(positional, options)
        return self._stmt("query", at=at, args=[kind.text] + args, options=resolved)

    # -- query argument checks -----------------------------------------

    def _query_state(self, pos: List[_Token], opts: Dict) -> Tuple[List[str], Dict]:
        self.need(pos, 2, "state AGENT PROP")
        return [self.agent(pos[0]), self.prop(pos[1])], {}

    _query_awareness = _query_state

    def _query_classify(self, pos: List[_Token], opts: Dict) -> Tuple[List[str], Dict]:
        self.need(pos, 2, "classify HOLDER PROP")
        return [self.agent(pos[0]), self.prop(pos[1])], {}

    def _query_distribution(self, pos: List[_Token], opts: Dict) -> Tuple[List[str], Dict]:
        self.need(pos, 1, "distribution PROP")
        agents = [a for t in pos[1:] for a in self.agent_list(t, t.text.split(","))]
        return [self.prop(pos[0])] + agents, {}

    def _query_level(self, pos: List[_Token], opts: Dict) -> Tuple[List[str], Dict]:
        self.need(pos, 2, "level PROP AGENTS")
        agents = [a for t in pos[1:] for a in self.agent_list(t, t.text.split(","))]
        return [self.prop(pos[0])] + agents, {}

    def _query_covert(self, pos: List[_Token], opts: Dict) -> Tuple[List[str], Dict]:
        self.need(pos, 1, "covert PROP sg=AGENTS g=AGENTS")
        for key in ("sg", "g"):
            if key not in opts:
                raise self.error(f"covert needs {key}=", len(self.line) + 1, [f"{key}="])
        return [self.prop(pos[0])], {k: self.agent_list(*opts[k]) for k in ("g", "sg")}

    def _query_neighborhoods(self, pos: List[_Token], opts: Dict) -> Tuple[List[str], Dict]:
        self.need(pos, 2, "neighborhoods PROP KIND")
        kind = pos[1].text
        plain = [k.value for k in NeighborhoodKind if k is not NeighborhoodKind.LEVEL_N]
        level = re.match(r"^level_(\d+)$", kind)
        if kind not in plain and not (level and int(level.group(1)) >= 2):
            raise self.error(f"unknown neighborhood kind {kind!r}", pos[1].column, plain + ["level_<n>"])
        return [self.prop(pos[0]), kind], {}

    def _query_mobilization(self, pos: List[_Token], opts: Dict) -> Tuple[List[str], Dict]:
        if not opts:
            raise self.error("mobilization needs agent=prop pairs", len(self.line) + 1, ["AGENT=PROP"])
        resolved = {}
        for key, (token, values) in opts.items():
            if len(values) != 1:
                raise self.error("one commitment prop per agent", token.column)
            resolved[self.agent(token, key)] = [self.prop(token, values[0])]
        return [], resolved

    def _query_trust_neighborhoods(self, pos: List[_Token], opts: Dict) -> Tuple[List[str], Dict]:
        return [], {}

    _query_security_neighborhoods = _query_trust_neighborhoods

    def _query_conduit(self, pos: List[_Token], opts: Dict) -> Tuple[List[str], Dict]:
        self.need(pos, 2, "conduit FROM TO")
        kind = pos[2].text if len(pos) > 2 else ConduitKind.TRUST.value
        direction = pos[3].text if len(pos) > 3 else Directionality.ONE_WAY.value
        kinds = [k.value for k in ConduitKind]
        directions = [d.value for d in Directionality]
        if kind not in kinds:
            raise self.error(f"unknown conduit kind {kind!r}", pos[2].column, kinds)
        if direction not in directions:
            raise self.error(f"unknown directionality {direction!r}", pos[3].column, directions)
        return [self.agent(pos[0]), self.agent(pos[1]), kind, direction], {}

    def _query_authenticate(self, pos: List[_Token], opts: Dict) -> Tuple[List[str], Dict]:
        self.need(pos, 3, "authenticate CLAIMANT MEMBERS")
        members = [a for t in pos[1:] for a in self.agent_list(t, t.text.split(","))]
        return [self.agent(pos[0])] + members, {}

    def _query_visible(self, pos: List[_Token], opts: Dict) -> Tuple[List[str], Dict]:
        self.need(pos, 2, "visible AGENT RADIUS")
        if not pos[1].text.isdigit():
            raise self.error("radius must be a non-negative integer", pos[1].column, ["INT"])
        return [self.agent(pos[0]), pos[1].text], {}

    def _query_degree(self, pos: List[_Token], opts: Dict) -> Tuple[List[str], Dict]:
        self.need(pos, 2, "degree AGENT AGENT")
        return [self.agent(pos[0]), self.agent(pos[1])], {}


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; raises ParseError / UndeclaredName with positions."""
    return ScenarioParser().parse(text)


def _quote(text: str) -> str:
    return '"' + text.replace('"', '\\"') + '"'


def print_statement(statement: Statement) -> str:
    head = statement.keyword + (f"@{statement.at}" if statement.at is not None else "")
    if statement.keyword in ("fact", "retract"):
        return f"{head} {render(statement.formula)}"  # type: ignore[arg-type]
    if statement.keyword == "query" and statement.args[:1] == ["holds"]:
        return f"{head} holds {render(statement.formula)}"  # type: ignore[arg-type]
    parts = [head] + statement.args
    if statement.text is not None:
        parts.append(_quote(statement.text))
    parts.extend(f"{k}={','.join(v)}" for k, v in sorted(statement.options.items()))
    return " ".join(parts)


def print_scenario(scenario: Scenario) -> str:
    """Canonical text for a parsed scenario; parses back to an equal AST."""
    return "".join(print_statement(s) + "\n" for s in scenario.statements)


# --------------------------------------------------------------------------
# Running
# --------------------------------------------------------------------------


class Names:
    """Two-way mapping between scenario names and engine ids."""

    def __init__(self) -> None:
        self.agent_ids: Dict[str, str] = {}
        self.prop_ids: Dict[str, str] = {}
        self.back: Dict[str, str] = {}

    def bind_agent(self, name: str, agent_id: str) -> None:
        self.agent_ids[name] = agent_id
        self.back[agent_id] = name

    def bind_prop(self, name: str, prop_id: str) -> None:
        self.prop_ids[name] = prop_id
        self.back[prop_id] = name

    def agent(self, name: str) -> str:
        return self.agent_ids.get(name, name)

    def agents(self, names: List[str]) -> List[str]:
        return [self.agent(n) for n in names]

    def prop(self, name: str) -> str:
        if name in self.prop_ids:
            return self.prop_ids[name]
        if ":" in name:
            pieces = _KEY_PIECES.split(name)
            return "".join(
                self.agent_ids.get(p, self.prop_ids.get(p, p)) if i else p
                for i, p in enumerate(pieces)
            )
        return name

    def value(self, token: str) -> str:
        """Action argument: agent, prop or literal."""
        if token in self.agent_ids:
            return self.agent_ids[token]
        return self.prop(token)

    def name(self, engine_id: str) -> str:
        if engine_id in self.back:
            return self.back[engine_id]
        if ":" in engine_id:
            pieces = _KEY_PIECES.split(engine_id)
            return "".join(self.back.get(p, p) if i else p for i, p in enumerate(pieces))
        return engine_id

    def names(self, ids: Any) -> List[str]:
        return [self.name(i) for i in sorted_ids(ids)]

    def formula(self, formula: Formula) -> Formula:
        return parse_formula(render(formula), agent=self.agent, prop=self.prop)


class Run(BaseModel):
    """Outcome of running a scenario: the final net, the report and the
    primitive events applied, in order."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    net: Any
    report: Report
    events: List[Event] = Field(default_factory=list)
    names: Any = None


def _flag(options: Dict[str, List[str]], key: str) -> bool:
    return options.get(key, ["false"]) == ["true"]


class ScenarioRunner:
    """Drives an Epinet through a parsed scenario."""

    def __init__(
        self,
        scenario: Scenario,
        config: Optional[EpinetConfig] = None,
        base_dir: Optional[Union[str, Path]] = None,
    ):
        self.scenario = scenario
        self.net = Epinet(config)
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        self.names = Names()
        self.presets: Dict[str, PlatformPreset] = builtin_presets()
        self.events: List[Event] = []
        self.results: List[QueryResult] = []
        self.pending: Dict[int, List[Statement]] = {}

    def run(self) -> Run:
        plain: List[Statement] = []
        for query in self.scenario.queries:
            if query.at is None:
                plain.append(query)
            else:
                self.pending.setdefault(query.at, []).append(query)
        for statement in self.scenario.statements:
            if statement.keyword == "query":
                continue
            if statement.keyword in ("event", "action") and not self.events:
                self._flush(0)
            self._execute(statement)
        self._flush(len(self.events))
        beyond = sorted(k for k in self.pending if k > len(self.events))
        if beyond:
            first = self.pending[beyond[0]][0]
            raise ScenarioError(
                first.line,
                EpinetError(f"query@{beyond[0]} but only {len(self.events)} event(s) ran"),
            )
        for query in plain:
            self._evaluate(query)
        self.results.sort(key=lambda r: r.line)
        digest = _digest(self.net)
        logger.info(
            "scenario ran %d statement(s), %d event(s), digest %s",
            len(self.scenario.statements), len(self.events), digest[:12],
        )
        return Run(
            net=self.net,
            report=Report(results=self.results, digest=digest),
            events=self.events,
            names=self.names,
        )

    def _flush(self, upto: int) -> None:
        for k in sorted(k for k in self.pending if k <= upto):
            for query in self.pending.pop(k):
                self._evaluate(query)

    def _execute(self, statement: Statement) -> None:
        try:
            getattr(self, f"_do_{statement.keyword}")(statement)
        except ParseError as exc:
            if exc.line is not None:
                raise
            raise ParseError(
                exc.message, line=statement.line, column=exc.column, expected=exc.expected
            ) from exc
        except EpinetError as exc:
            logger.warning("line %d: %s", statement.line, exc)
            raise ScenarioError(statement.line, exc) from exc

    # -- declarations --------------------------------------------------

    def _do_config(self, s: Statement) -> None:
        key, value = s.args
        if key == "max_depth":
            update: Dict[str, Any] = {"max_depth": int(value)}
        elif key == "factivity":
            update = {"factivity_enforced": value == "on"}
        else:
            update = {"trust_gated_messages": value == "on"}
        self.net.config = self.net.config.model_copy(update=update)

    def _do_agent(self, s: Statement) -> None:
        self.names.bind_agent(s.args[0], self.net.add_agent(s.args[0]))

    def _do_prop(self, s: Statement) -> None:
        self.names.bind_prop(s.args[0], self.net.add_prop(s.text or ""))

    def _do_truth(self, s: Statement) -> None:
        self.net.set_world_truth(self.names.prop(s.args[0]), s.args[1] == "true")

    def _do_trust(self, s: Statement) -> None:
        set_trust(self.net, self.names.agent(s.args[0]), self.names.agent(s.args[1]), s.args[2])

    def _do_channel(self, s: Statement) -> None:
        register_channel(
            self.net,
            s.args[0],
            self.names.agents(s.options["members"]),
            self.names.agents(s.options["host"]),
            covert=s.args[1] == "covert",
        )

    def _do_preset(self, s: Statement) -> None:
        path = Path(s.args[1])
        if not path.is_absolute():
            path = self.base_dir / path
        self.presets[s.args[0]] = load_preset(path)

    def _do_ck(self, s: Statement) -> None:
        self.net.add_common_knowledge(self.names.agents(s.args[1:]), self.names.prop(s.args[0]))

    def _do_fact(self, s: Statement) -> None:
        self.net.assert_fact(self.names.formula(s.formula))  # type: ignore[arg-type]

    def _do_retract(self, s: Statement) -> None:
        self.net.retract_fact(self.names.formula(s.formula))  # type: ignore[arg-type]

    def _do_closure(self, s: Statement) -> None:
        trust_closure(self.net)

    def _do_derive_security(self, s: Statement) -> None:
        derive_security_ck(self.net, self.names.agents(s.args))

    def _do_conduit(self, s: Statement) -> None:
        declare_conduit(self.net, self.names.agents(s.args))

    def _do_premium(self, s: Statement) -> None:
        set_premium(self.net, self.names.agent(s.args[0]))

    def _do_propagate(self, s: Statement) -> None:
        audience = s.options.get("audience")
        propagate_assertion(
            self.net,
            self.names.agent(s.args[0]),
            self.names.prop(s.args[1]),
            self.names.agents(audience) if audience is not None else None,
        )

    # -- events --------------------------------------------------------

    def _record(self, events: List[Event]) -> None:
        for event in events:
            self.events.append(event)
            self._flush(len(self.events))

    def _do_event(self, s: Statement) -> None:
        o = s.options
        kind = s.args[0]
        sender = self.names.agent(o["from"][0])
        payload = self.names.prop(o["p"][0])
        if kind == "reply":
            thread = o["thread"][0]
            recipient = self.names.agent(o["to"][0])
            reply_in_thread(self.net, thread, sender, recipient, payload)
            event_id = self.net.threads[thread].messages[-1][0]
            self._record(
                [
                    Event(
                        id=event_id,
                        kind=EventKind.DIRECT_MESSAGE,
                        sender=sender,
                        visible=frozenset({recipient}),
                        payload=payload,
                        thread=thread,
                    )
                ]
            )
            return
        event = stamp_event(
            self.net,
            Event(
                kind=EventKind(kind),
                sender=sender,
                visible=frozenset(self.names.agents(o.get("to", []))),
                hidden=frozenset(self.names.agents(o.get("hidden", []))),
                payload=payload,
                thread=o["thread"][0] if "thread" in o else None,
                channel=o["channel"][0] if "channel" in o else None,
                flags=EventFlags(
                    covert=_flag(o, "covert"),
                    acknowledged=_flag(o, "acknowledged"),
                    consent=_flag(o, "consent"),
                ),
            ),
        )
        apply_event(self.net, event)
        self._record([event])

    def _do_action(self, s: Statement) -> None:
        preset = self.presets[s.args[0]]
        args: Dict[str, Any] = {}
        for key, values in s.options.items():
            resolved = [self.names.value(v) for v in values]
            args[key] = resolved if len(resolved) != 1 else resolved[0]
        run_preset_action(
            self.net, preset, s.args[1], args, on_event=lambda event: self._record([event])
        )

    # -- queries -------------------------------------------------------

    def _evaluate(self, query: Statement) -> None:
        try:
            result = evaluate_query(self.net, self.names, query)
        except EpinetError as exc:
            logger.warning("query on line %d failed: %s", query.line, exc)
            raise ScenarioError(query.line, exc) from exc
        self.results.append(
            QueryResult(line=query.line, query=print_statement(query), at=query.at, result=result)
        )


def _hood_json(names: Names, hood: Any) -> Dict[str, Any]:
    return {
        "members": names.names(hood.members),
        "prop": names.name(hood.prop) if hood.prop else None,
        "kind": hood.kind,
        "level": hood.level,
    }


def evaluate_query(net: Epinet, names: Names, query: Statement) -> Any:
    """JSON-ready result of one query statement."""
    kind, args, opts = query.args[0], query.args[1:], query.options
    if kind == "holds":
        return net.holds(names.formula(query.formula))  # type: ignore[arg-type]
    if kind == "state":
        return sorted(net.epistemic_state(names.agent(args[0]), names.prop(args[1])))
    if kind == "awareness":
        return net.awareness_level(names.agent(args[0]), names.prop(args[1]))
    if kind == "distribution":
        scope = names.agents(args[1:]) if args[1:] else None
        return distribution(net, names.prop(args[0]), scope).model_dump()
    if kind == "level":
        return commonality_level(net, names.agents(args[1:]), names.prop(args[0])).level
    if kind == "covert":
        return covert(net, names.prop(args[0]), names.agents(opts["sg"]), names.agents(opts["g"]))
    if kind == "neighborhoods":
        hoods = find_neighborhoods(net, names.prop(args[0]), args[1])
        return [_hood_json(names, h) for h in hoods]
    if kind == "mobilization":
        commitments = {names.agent(a): names.prop(p[0]) for a, p in opts.items()}
        return mobilization_possible(net, list(commitments), commitments)
    if kind == "trust_neighborhoods":
        return [_hood_json(names, h) for h in trust_neighborhoods(net)]
    if kind == "security_neighborhoods":
        return [_hood_json(names, h) for h in security_neighborhoods(net)]
    if kind == "conduit":
        found = find_conduit(net, names.agent(args[0]), names.agent(args[1]), args[2], args[3])
        if found is None:
            return None
        return {
            "path": [names.name(a) for a in found.path],
            "kind": found.kind.value,
            "directionality": found.directionality.value,
        }
    if kind == "classify":
        return classify_information(net, names.agent(args[0]), names.prop(args[1])).value
    if kind == "authenticate":
        return authenticate(net, names.agents(args[1:]), names.agent(args[0])).value
    if kind == "visible":
        return [names.name(a) for a in visible_agents(net, names.agent(args[0]), int(args[1]))]
    if kind == "degree":
        return connection_degree(net, names.agent(args[0]), names.agent(args[1]))
    raise EpinetError(f"unknown query kind: {kind}")


def _digest(net: Epinet) -> str:
    return digest(snapshot(net))


def run_scenario(
    scenario: Scenario,
    config: Optional[EpinetConfig] = None,
    base_dir: Optional[Union[str, Path]] = None,
) -> Run:
    return ScenarioRunner(scenario, config, base_dir).run()


def run(scenario: Scenario, config: Optional[EpinetConfig] = None) -> Report:
    """Apply a scenario to a fresh net and report its query results."""
    return run_scenario(scenario, config).report

