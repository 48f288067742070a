"""Parser and compiler for ``.rfs`` scenario files.

The language is line oriented; see docs/grammar.ebnf. A small example::

    system S1
    observer A1
    prepare ghz S1 S2 S3
    interact A1 S1 in Y
    undo A1 S1
    context C {
      measure A1 as A1^W after 1
    }
    constraint i: B1*B2*B3 = +1

``parse`` checks syntax, declaration order and duplicates. ``compile`` checks
meaning (what may interact with what, undo matching, measurement targets)
and produces the scenario, perspective and assignment objects.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterator, Union

from .assignments import LABELS, Constraint
from .perspective import Context, PointerMeasurement
from .scenario import (
    Direction,
    Encoding,
    Interaction,
    RegisterLayout,
    Schedule,
    SystemLabel,
    inverse_of,
    last_touching,
)
from .statevec import Basis


class ScenarioError(Exception):
    """Error tied to a position in scenario source."""

    kind = "error"

    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


class ParseError(ScenarioError):
    kind = "syntax"

    def __init__(self, line: int, column: int, message: str, expected: list[str] | None = None):
        self.expected = list(expected or [])
        if self.expected:
            message = f"{message} (expected {', '.join(self.expected)})"
        super().__init__(line, column, message)


class SemanticError(ScenarioError):
    kind = "semantic"


@dataclass(frozen=True)
class Span:
    line: int
    column: int


def _span():
    return field(default=Span(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class SystemDecl:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class ObserverDecl:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class Prepare:
    systems: tuple[str, ...]
    span: Span = _span()


@dataclass(frozen=True)
class Interact:
    agent: str
    target: str
    basis: str
    span: Span = _span()


@dataclass(frozen=True)
class Undo:
    agent: str
    target: str
    span: Span = _span()


@dataclass(frozen=True)
class Measure:
    memory: str
    label: str
    after: int | None  # None: after the last event
    span: Span = _span()


@dataclass(frozen=True)
class ContextBlock:
    name: str
    measures: tuple[Measure, ...]
    span: Span = _span()


@dataclass(frozen=True)
class ConstraintDecl:
    name: str
    labels: tuple[str, ...]
    parity: int
    span: Span = _span()


Node = Union[SystemDecl, ObserverDecl, Prepare, Interact, Undo, ContextBlock, ConstraintDecl]


@dataclass(frozen=True)
class ScenarioAst:
    declarations: tuple[Node, ...] = ()

    def of_type(self, cls) -> list:
        return [d for d in self.declarations if isinstance(d, cls)]


# -- lexing ------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t]+)|(?P<comment>#[^\n]*)|(?P<PARITY>[+-]1(?![0-9A-Za-z_]))"
    r"|(?P<INT>[0-9]+)|(?P<IDENT>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<LBRACE>\{)|(?P<RBRACE>\})|(?P<COLON>:)|(?P<STAR>\*)|(?P<EQUALS>=)|(?P<CARET>\^)"
)

_DESCRIBE = {
    "NEWLINE": "end of line",
    "EOF": "end of file",
    "IDENT": "identifier",
    "INT": "integer",
    "PARITY": "'+1' or '-1'",
    "LBRACE": "'{'",
    "RBRACE": "'}'",
    "COLON": "':'",
    "STAR": "'*'",
    "EQUALS": "'='",
    "CARET": "'^'",
}


def tokenize(source: str) -> Iterator[Token]:
    if source.startswith("\ufeff"):
        source = source[1:]
    lines = source.replace("\r\n", "\n").split("\n")
    for lineno, text in enumerate(lines, start=1):
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                raise ParseError(lineno, pos + 1, f"unexpected character {text[pos]!r}")
            kind = m.lastgroup
            if kind not in ("ws", "comment"):
                yield Token(kind, m.group(), lineno, pos + 1)
            pos = m.end()
        if lineno < len(lines):
            yield Token("NEWLINE", "\n", lineno, len(text) + 1)
    yield Token("EOF", "", len(lines), len(lines[-1]) + 1)


# -- parsing -----------------------------------------------------------------

STATEMENT_KEYWORDS = ("system", "observer", "prepare", "interact", "undo", "context", "constraint")


class _Parser:
    def __init__(self, source: str):
        self.tokens = list(tokenize(source))
        self.pos = 0
        self.names: dict[str, str] = {}  # declared system/observer -> kind
        self.contexts: set[str] = set()
        self.constraints: set[str] = set()

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, expected: list[str] | None = None, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(tok.line, tok.column, message, expected)

    def unexpected(self, *expected: str) -> ParseError:
        found = _DESCRIBE.get(self.tok.kind, self.tok.kind) if self.tok.kind in ("NEWLINE", "EOF") else repr(self.tok.text)
        return self.error(f"unexpected {found}", list(expected))

    def expect(self, kind: str) -> Token:
        if self.tok.kind != kind:
            raise self.unexpected(_DESCRIBE[kind])
        tok = self.tok
        self.pos += 1
        return tok

    def keyword(self, *words: str) -> Token:
        if self.tok.kind != "IDENT" or self.tok.text not in words:
            raise self.unexpected(*(f"'{w}'" for w in words))
        tok = self.tok
        self.pos += 1
        return tok

    def end_of_statement(self) -> None:
        if self.tok.kind == "EOF":
            return
        self.expect("NEWLINE")

    def skip_newlines(self) -> None:
        while self.tok.kind == "NEWLINE":
            self.pos += 1

    def reference(self) -> str:
        tok = self.expect("IDENT")
        if tok.text not in self.names:
            raise self.error(f"unknown identifier {tok.text!r}", tok=tok)
        return tok.text

    def declare(self, tok: Token, kind: str) -> None:
        if tok.text in self.names:
            raise self.error(f"duplicate declaration of {tok.text!r}", tok=tok)
        self.names[tok.text] = kind

    def parse(self) -> ScenarioAst:
        decls = []
        self.skip_newlines()
        while self.tok.kind != "EOF":
            decls.append(self.statement())
            self.skip_newlines()
        return ScenarioAst(tuple(decls))

    def statement(self) -> Node:
        start = self.tok
        word = self.keyword(*STATEMENT_KEYWORDS).text
        span = Span(start.line, start.column)
        node = getattr(self, f"_{word}")(span)
        self.end_of_statement()
        return node

    def _system(self, span: Span) -> SystemDecl:
        tok = self.expect("IDENT")
        self.declare(tok, "system")
        return SystemDecl(tok.text, span)

    def _observer(self, span: Span) -> ObserverDecl:
        tok = self.expect("IDENT")
        self.declare(tok, "observer")
        return ObserverDecl(tok.text, span)

    def _prepare(self, span: Span) -> Prepare:
        self.keyword("ghz")
        systems = [self.reference()]
        while self.tok.kind == "IDENT":
            systems.append(self.reference())
        return Prepare(tuple(systems), span)

    def _interact(self, span: Span) -> Interact:
        agent = self.reference()
        target = self.reference()
        self.keyword("in")
        basis = self.keyword("X", "Y").text
        return Interact(agent, target, basis, span)

    def _undo(self, span: Span) -> Undo:
        agent = self.reference()
        target = self.reference()
        return Undo(agent, target, span)

    def _context(self, span: Span) -> ContextBlock:
        tok = self.expect("IDENT")
        if tok.text in self.contexts:
            raise self.error(f"duplicate declaration of context {tok.text!r}", tok=tok)
        self.contexts.add(tok.text)
        self.expect("LBRACE")
        self.expect("NEWLINE")
        measures: list[Measure] = []
        labels: set[str] = set()
        self.skip_newlines()
        while self.tok.kind != "RBRACE":
            start = self.tok
            self.keyword("measure")
            memory = self.reference()
            self.keyword("as")
            label_tok = self.tok
            label = self.label()
            if label in labels:
                raise self.error(f"duplicate declaration of label {label!r}", tok=label_tok)
            labels.add(label)
            self.keyword("after")
            if self.tok.kind == "INT":
                after = int(self.expect("INT").text)
            elif self.tok.kind == "IDENT" and self.tok.text == "end":
                self.pos += 1
                after = None
            else:
                raise self.unexpected(_DESCRIBE["INT"], "'end'")
            measures.append(Measure(memory, label, after, Span(start.line, start.column)))
            self.expect("NEWLINE")
            self.skip_newlines()
            if self.tok.kind == "EOF":
                raise self.unexpected("'measure'", "'}'")
        self.expect("RBRACE")
        return ContextBlock(tok.text, tuple(measures), span)

    def label(self) -> str:
        text = self.expect("IDENT").text
        if self.tok.kind == "CARET":
            self.pos += 1
            text += "^" + self.expect("IDENT").text
        return text

    def _constraint(self, span: Span) -> ConstraintDecl:
        tok = self.expect("IDENT")
        if tok.text in self.constraints:
            raise self.error(f"duplicate declaration of constraint {tok.text!r}", tok=tok)
        self.constraints.add(tok.text)
        self.expect("COLON")
        labels = [self.reference()]
        for _ in range(2):
            self.expect("STAR")
            labels.append(self.reference())
        self.expect("EQUALS")
        parity = int(self.expect("PARITY").text)
        return ConstraintDecl(tok.text, tuple(labels), parity, span)


def parse(source: str) -> ScenarioAst:
    """Parse scenario text; raises ParseError at the first problem."""
    return _Parser(source).parse()


def format_ast(ast: ScenarioAst) -> str:
    """Render an AST back to canonical source text."""
    out = []
    for d in ast.declarations:
        if isinstance(d, SystemDecl):
            out.append(f"system {d.name}")
        elif isinstance(d, ObserverDecl):
            out.append(f"observer {d.name}")
        elif isinstance(d, Prepare):
            out.append("prepare ghz " + " ".join(d.systems))
        elif isinstance(d, Interact):
            out.append(f"interact {d.agent} {d.target} in {d.basis}")
        elif isinstance(d, Undo):
            out.append(f"undo {d.agent} {d.target}")
        elif isinstance(d, ContextBlock):
            out.append(f"context {d.name} {{")
            for m in d.measures:
                after = "end" if m.after is None else str(m.after)
                out.append(f"  measure {m.memory} as {m.label} after {after}")
            out.append("}")
        elif isinstance(d, ConstraintDecl):
            out.append(f"constraint {d.name}: {'*'.join(d.labels)} = {d.parity:+d}")
    return "".join(line + "\n" for line in out)


# -- compiling ---------------------------------------------------------------

def _label_for(name: str, span: Span, kinds: str) -> SystemLabel:
    try:
        label = SystemLabel.parse(name)
    except ValueError:
        label = None
    if label is None or label.kind not in kinds:
        allowed = " or ".join(f"{k}1..{k}3" for k in kinds)
        raise SemanticError(span.line, span.column, f"{name!r} must be named {allowed}")
    return label


def compile(ast: ScenarioAst, encoding: Encoding = Encoding.LITERAL) -> tuple[Schedule, list[Context], list[Constraint]]:
    """Turn a parsed scenario into a schedule, its contexts and its constraints."""
    labels: dict[str, SystemLabel] = {}
    prepare: Prepare | None = None
    events: list[Interaction] = []
    record_basis: dict[SystemLabel, Basis] = {}
    blocks: list[ContextBlock] = []
    constraints: list[Constraint] = []

    def err(node, message: str) -> SemanticError:
        return SemanticError(node.span.line, node.span.column, message)

    for d in ast.declarations:
        if isinstance(d, SystemDecl):
            labels[d.name] = _label_for(d.name, d.span, "S")
        elif isinstance(d, ObserverDecl):
            labels[d.name] = _label_for(d.name, d.span, "AB")
        elif isinstance(d, Prepare):
            if prepare is not None:
                raise err(d, "the state is already prepared")
            if events:
                raise err(d, "prepare must come before any interaction")
            systems = [labels[s] for s in d.systems]
            if len(systems) != 3 or len(set(systems)) != 3 or any(s.kind != "S" for s in systems):
                raise err(d, "prepare ghz needs three distinct systems")
            prepare = d
        elif isinstance(d, (Interact, Undo)):
            if prepare is None:
                raise err(d, "interaction before 'prepare ghz'")
            agent, target = labels[d.agent], labels[d.target]
            if not agent.is_memory:
                raise err(d, f"{d.agent} is a system, not an observer")
            if target.kind != "S":
                raise err(d, f"{d.target} is an observer, not a system")
            if agent.index != target.index:
                raise err(d, f"{d.agent} can only interact with S{agent.index}")
            if isinstance(d, Interact):
                basis = Basis(d.basis)
                if record_basis.setdefault(agent, basis) is not basis:
                    raise err(d, f"{d.agent} already records in {record_basis[agent].value}")
                events.append(Interaction(agent, target, basis))
            else:
                prior = last_touching(events, (agent, target))
                e = events[prior] if prior is not None else None
                if e is None or e.direction is not Direction.FORWARD or (e.agent, e.target) != (agent, target):
                    raise err(d, f"undo {d.agent} {d.target} does not follow a matching interaction")
                events.append(inverse_of(e))
        elif isinstance(d, ContextBlock):
            blocks.append(d)
        elif isinstance(d, ConstraintDecl):
            names = []
            for name in d.labels:
                if labels[name].kind not in ("A", "B") or name not in LABELS:
                    raise err(d, f"{name!r} is not an outcome label")
                names.append(name)
            if len(set(names)) != 3:
                raise err(d, "constraint labels must be distinct")
            constraints.append(Constraint(tuple(names), d.parity, d.name))

    if prepare is None:
        span = ast.declarations[0].span if ast.declarations else Span(1, 1)
        raise SemanticError(span.line, span.column, "scenario has no 'prepare ghz' statement")
    declared_systems = {l for l in labels.values() if l.kind == "S"}
    if declared_systems != {labels[s] for s in prepare.systems}:
        raise err(prepare, "every declared system must be part of the GHZ preparation")

    schedule = Schedule(
        RegisterLayout(tuple(labels.values())),
        tuple(events),
        encoding,
        tuple(labels[s] for s in prepare.systems),
    )
    contexts = []
    for block in blocks:
        seen: set[SystemLabel] = set()
        ms = []
        for m in block.measures:
            target = labels[m.memory]
            if not target.is_memory:
                raise err(m, f"Wigner can only measure observer memories, not system {m.memory}")
            if target in seen:
                raise err(m, f"{m.memory} is already measured in context {block.name}")
            seen.add(target)
            after = len(events) if m.after is None else m.after
            if after > len(events):
                raise err(m, f"'after {after}' is past the last event ({len(events)})")
            ms.append(PointerMeasurement(target, after, m.label))
        contexts.append(Context(block.name, schedule, tuple(ms)))
    return schedule, contexts, constraints


def builtin_source() -> str:
    return resources.files("relfacts").joinpath("data/ghz3.rfs").read_text(encoding="utf-8")


def load(path, encoding: Encoding = Encoding.LITERAL):
    with open(path, encoding="utf-8", newline="") as f:
        return compile(parse(f.read()), encoding)
