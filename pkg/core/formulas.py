"""
Formula construction, structural scans and the textual formula grammar.

Text syntax:  p | K(agent, φ) | B(agent, φ) | ~φ | W(agent, p) | (φ)
"""
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from lark import Lark, Transformer, v_args
from lark.exceptions import (
    LarkError,
    UnexpectedCharacters,
    UnexpectedInput,
    UnexpectedToken,
    VisitError,
)

from .errors import MalformedFormula, ParseError
from .models import Atom, Believes, Formula, Knows, Not, WouldKnowIfTrue


def atom(prop: str) -> Atom:
    return Atom(prop=prop)


def knows(agent: str, inner: Formula) -> Knows:
    return Knows(agent=agent, inner=inner)


def believes(agent: str, inner: Formula) -> Believes:
    return Believes(agent=agent, inner=inner)


def neg(inner: Formula) -> Not:
    return Not(inner=inner)


def would_know(agent: str, prop: str) -> WouldKnowIfTrue:
    return WouldKnowIfTrue(agent=agent, prop=prop)


def knows_chain(agents: Sequence[str], leaf: Formula) -> Formula:
    """K(agents[0], K(agents[1], ... leaf))."""
    formula = leaf
    for agent in reversed(agents):
        formula = Knows(agent=agent, inner=formula)
    return formula


def aware(agent: str, prop: str, n: int) -> Formula:
    """Akⁿp: agent knows p and knows it knows it, to n levels."""
    return knows_chain([agent] * n, Atom(prop=prop))


# --------------------------------------------------------------------------
# Structural scans
# --------------------------------------------------------------------------


def depth(formula: Formula) -> int:
    """Number of nested Knows/Believes operators."""
    count = 0
    node: Formula = formula
    while True:
        if isinstance(node, (Knows, Believes)):
            count += 1
            node = node.inner
        elif isinstance(node, Not):
            node = node.inner
        else:
            return count


def check_structure(formula: Formula) -> None:
    """Reject negation anywhere but immediately around Knows/Believes/Atom."""
    node: Formula = formula
    while True:
        if isinstance(node, Not):
            if not isinstance(node.inner, (Knows, Believes, Atom)):
                raise MalformedFormula(f"negation must wrap K, B or an atom: {formula}")
            node = node.inner
        elif isinstance(node, (Knows, Believes)):
            node = node.inner
        else:
            return


def split_knows(formula: Formula) -> Tuple[Tuple[str, ...], Formula]:
    """Peel the outer Knows operators: (agents, remainder)."""
    agents: List[str] = []
    node: Formula = formula
    while isinstance(node, Knows):
        agents.append(node.agent)
        node = node.inner
    return tuple(agents), node


def unfoldings(formula: Formula) -> Iterator[Formula]:
    """Everything factivity lets us strip a formula down to (excluding itself)."""
    node: Formula = formula
    while isinstance(node, Knows):
        node = node.inner
        yield node


def root_agent(formula: Formula) -> Optional[str]:
    """The agent holding the formula: outermost Knows/Believes only."""
    if isinstance(formula, (Knows, Believes)):
        return formula.agent
    return None


def agents_in(formula: Formula) -> set[str]:
    found: set[str] = set()
    node: Formula = formula
    while True:
        if isinstance(node, (Knows, Believes)):
            found.add(node.agent)
            node = node.inner
        elif isinstance(node, Not):
            node = node.inner
        elif isinstance(node, WouldKnowIfTrue):
            found.add(node.agent)
            return found
        else:
            return found


def props_in(formula: Formula) -> set[str]:
    node: Formula = formula
    while isinstance(node, (Knows, Believes, Not)):
        node = node.inner
    if isinstance(node, (Atom, WouldKnowIfTrue)):
        return {node.prop}
    return set()


def mentions_prop(formula: Formula, prop: str) -> bool:
    return prop in props_in(formula)


def leaf(formula: Formula) -> Formula:
    """The part left once all outer Knows operators are stripped."""
    return split_knows(formula)[1]


# --------------------------------------------------------------------------
# Rendering
# --------------------------------------------------------------------------


def render(formula: Formula, names: Optional[Dict[str, str]] = None) -> str:
    """Text form of a formula; `names` maps ids to display tokens."""
    def name(token: str) -> str:
        return names.get(token, token) if names else token

    if isinstance(formula, Atom):
        return name(formula.prop)
    if isinstance(formula, Knows):
        return f"K({name(formula.agent)}, {render(formula.inner, names)})"
    if isinstance(formula, Believes):
        return f"B({name(formula.agent)}, {render(formula.inner, names)})"
    if isinstance(formula, Not):
        return f"~{render(formula.inner, names)}"
    return f"W({name(formula.agent)}, {name(formula.prop)})"


# --------------------------------------------------------------------------
# Grammar
# --------------------------------------------------------------------------

FORMULA_GRAMMAR = r"""
?start: formula

?formula: NEGATION formula                      -> negation
    | KNOWS "(" NAME "," formula ")"            -> knows
    | BELIEVES "(" NAME "," formula ")"         -> believes
    | WOULD "(" NAME "," NAME ")"               -> would_know
    | NAME                                      -> atom
    | "(" formula ")"

NEGATION: "~" | "!" | "¬"
KNOWS.2: /K(?=\s*\()/
BELIEVES.2: /B(?=\s*\()/
WOULD.2: /W(?=\s*\()/
NAME: /[A-Za-z_][A-Za-z0-9_\-:.>]*[A-Za-z0-9_]|[A-Za-z_]/

%import common.WS
%ignore WS
"""

_parser = Lark(FORMULA_GRAMMAR, parser="lalr", start="start")


@v_args(inline=True)
class _FormulaBuilder(Transformer):  # type: ignore[type-arg]
    """Turn the parse tree into Formula models, resolving names on the way."""

    def __init__(
        self,
        agent: Callable[[str], str],
        prop: Callable[[str], str],
    ):
        super().__init__()
        self._agent = agent
        self._prop = prop

    def negation(self, _op, inner):  # type: ignore[no-untyped-def]
        return Not(inner=inner)

    def knows(self, _op, agent, inner):  # type: ignore[no-untyped-def]
        return Knows(agent=self._agent(str(agent)), inner=inner)

    def believes(self, _op, agent, inner):  # type: ignore[no-untyped-def]
        return Believes(agent=self._agent(str(agent)), inner=inner)

    def would_know(self, _op, agent, prop):  # type: ignore[no-untyped-def]
        return WouldKnowIfTrue(agent=self._agent(str(agent)), prop=self._prop(str(prop)))

    def atom(self, prop):  # type: ignore[no-untyped-def]
        return Atom(prop=self._prop(str(prop)))


def _identity(token: str) -> str:
    return token


def parse_formula(
    text: str,
    agent: Callable[[str], str] = _identity,
    prop: Callable[[str], str] = _identity,
    line: Optional[int] = None,
    column_offset: int = 0,
) -> Formula:
    """Parse formula text; `agent`/`prop` resolve names to ids."""
    try:
        tree = _parser.parse(text)
    except UnexpectedToken as exc:
        raise ParseError(
            f"unexpected token {exc.token!r} in formula",
            line=line if line is not None else exc.line,
            column=column_offset + exc.column,
            expected=sorted(exc.expected),
        ) from exc
    except UnexpectedCharacters as exc:
        raise ParseError(
            f"unexpected character {text[exc.pos_in_stream]!r} in formula",
            line=line if line is not None else exc.line,
            column=column_offset + exc.column,
            expected=sorted(exc.allowed or ()),
        ) from exc
    except UnexpectedInput as exc:
        raise ParseError(
            "incomplete formula",
            line=line if line is not None else exc.line,
            column=column_offset + exc.column,
        ) from exc
    except LarkError as exc:
        raise ParseError(f"cannot parse formula: {exc}", line=line) from exc
    try:
        result: Formula = _FormulaBuilder(agent, prop).transform(tree)
    except VisitError as exc:
        raise exc.orig_exc from None
    check_structure(result)
    return result
