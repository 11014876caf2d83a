"""ASCII concrete syntax: formulas, categories and indentation-scoped scripts.

Formula grammar::

    formula  := item | item '<=>' item
    item     := NAME arglists? | quant | '(' formula ')'
    arglists := ( '(' formula (',' formula)* ')' )+
    quant    := '[' binder (' ' binder)* ']' '(' formula ')'
    binder   := NAME (':' category)?

Scripts are line oriented; two spaces of indentation per scope level.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Union

from .errors import ParseError
from .syntax import (
    BASE, Apply, Base, Binder, Category, Const, Equiv, Formula, Functor, Quant, Var, view,
)

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t]+)
  | (?P<string>"[^"\n]*")
  | (?P<word>[A-Za-z0-9_][A-Za-z0-9_.']*)
  | (?P<punct><=>|:=|[()\[\],;:/])
""", re.VERBOSE)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str          # 'word', 'string', 'punct', 'eof'
    text: str
    line: int
    col: int


def tokenize(text: str, line: int = 1, col0: int = 1) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col0 + pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), line, col0 + pos))
        pos = m.end()
    tokens.append(Token("eof", "", line, col0 + pos))
    return tokens


class _Stream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "word") and self.tok.text == text

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def fail(self, message: str, expected: Iterable[str] = ()):
        t = self.tok
        got = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"{message}, got {got}", t.line, t.col, frozenset(expected))

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}", (text,))
        return self.advance()

    def name(self, what: str = "name") -> Token:
        t = self.tok
        if t.kind != "word" or not NAME_RE.match(t.text):
            self.fail(f"expected {what}", ("NAME",))
        return self.advance()


# -- categories ---------------------------------------------------------------

def _category(s: _Stream) -> Category:
    if s.at("("):
        s.advance()
        cat = _category(s)
        s.expect(")")
    elif s.at("s"):
        s.advance()
        cat = BASE
    else:
        s.fail("expected a category", ("s", "("))
    while s.at("/"):
        s.advance()
        s.expect("(")
        args = [_category(s)]
        while s.at(","):
            s.advance()
            args.append(_category(s))
        s.expect(")")
        cat = Functor(cat, tuple(args))
    return cat


def parse_category(text: str) -> Category:
    s = _Stream(tokenize(text))
    cat = _category(s)
    if s.tok.kind != "eof":
        s.fail("trailing input after category", ("end of input",))
    return cat


# -- formulas -----------------------------------------------------------------

def _formula(s: _Stream) -> Formula:
    left = _item(s)
    if s.at("<=>"):
        s.advance()
        right = _item(s)
        if s.at("<=>"):
            s.fail("chained '<=>' needs parentheses", (")",))
        return Equiv(left, right)
    return left


def _item(s: _Stream) -> Formula:
    if s.at("("):
        s.advance()
        f = _formula(s)
        s.expect(")")
        return f
    if s.at("["):
        return _quant(s)
    tok = s.tok
    if tok.kind != "word" or not NAME_RE.match(tok.text):
        s.fail("expected a formula", ("NAME", "[", "("))
    s.advance()
    f: Formula = Var(tok.text)
    while s.at("("):
        s.advance()
        args = [_formula(s)]
        while s.at(","):
            s.advance()
            args.append(_formula(s))
        s.expect(")")
        f = Apply(f, tuple(args))
    return f


def _binder(s: _Stream) -> Binder:
    name = s.name("binder name").text
    if s.at(":"):
        s.advance()
        return Binder(name, _category(s))
    return Binder(name)


def _quant(s: _Stream) -> Formula:
    open_tok = s.expect("[")
    binders = [_binder(s)]
    while not s.at("]"):
        if s.tok.kind == "eof":
            s.fail("unterminated binder list", ("]",))
        binders.append(_binder(s))
    s.advance()
    names = [b.name for b in binders]
    if len(set(names)) != len(names):
        raise ParseError("repeated binder in quantifier", open_tok.line, open_tok.col)
    s.expect("(")
    body = _formula(s)
    s.expect(")")
    return Quant(tuple(binders), body)


def _mark_constants(f: Formula, constants: frozenset[str], bound: frozenset[str]) -> Formula:
    if isinstance(f, Var):
        return Const(f.name) if f.name in constants and f.name not in bound else f
    if isinstance(f, Equiv):
        return Equiv(_mark_constants(f.left, constants, bound),
                     _mark_constants(f.right, constants, bound))
    if isinstance(f, Apply):
        return Apply(_mark_constants(f.head, constants, bound),
                     tuple(_mark_constants(a, constants, bound) for a in f.args))
    if isinstance(f, Quant):
        return Quant(f.binders, _mark_constants(f.body, constants, bound | set(f.names)))
    return f


def parse_formula(text: str, constants: Iterable[str] = ()) -> Formula:
    """Parse a formula. Names are variables unless listed in ``constants``
    and free at their position."""
    s = _Stream(tokenize(text))
    f = _formula(s)
    if s.tok.kind != "eof":
        s.fail("trailing input after formula", ("<=>", "end of input"))
    constants = frozenset(constants)
    return _mark_constants(f, constants, frozenset()) if constants else f


# -- printing -----------------------------------------------------------------

def print_category(c: Category) -> str:
    return str(c)


def print_formula(f: Formula) -> str:
    return _show(f, wrapped=False)


def _show(f: Formula, wrapped: bool) -> str:
    # ``wrapped``: the caller already supplies delimiters (argument list or
    # quantifier body), so a biconditional needs no parentheses of its own.
    f = view(f)
    if isinstance(f, (Var, Const)):
        return f.name
    if isinstance(f, Equiv):
        inner = f"{_show(f.left, False)} <=> {_show(f.right, False)}"
        return inner if wrapped else f"({inner})"
    if isinstance(f, Apply):
        return f"{_show(f.head, False)}({', '.join(_show(a, True) for a in f.args)})"
    binders = " ".join(b.name if b.annotation is None else f"{b.name}:{b.annotation}"
                       for b in f.binders)
    return f"[{binders}]({_show(f.body, True)})"


# -- script AST ---------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Span:
    line: int
    col: int


@dataclass(frozen=True, slots=True)
class SubStep:
    pairs: tuple[tuple[str, Formula], ...]


@dataclass(frozen=True, slots=True)
class AssGStep:
    pass


@dataclass(frozen=True, slots=True)
class EqEStep:
    ref: str


@dataclass(frozen=True, slots=True)
class UseStep:
    rule: str
    refs: tuple[str, ...]


Step = Union[SubStep, AssGStep, EqEStep, UseStep]


@dataclass(frozen=True, slots=True)
class Chain:
    seed: str
    steps: tuple[Step, ...] = ()


@dataclass(frozen=True, slots=True)
class EqI:
    ref1: str
    ref2: str


@dataclass(frozen=True, slots=True)
class Gen:
    ref: str


@dataclass(frozen=True, slots=True)
class Def:
    pass


@dataclass(frozen=True, slots=True)
class Use:
    rule: str
    refs: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class Raa:
    ref: str


Justification = Union[Chain, EqI, Gen, Def, Use, Raa]


@dataclass(frozen=True, slots=True)
class LineItem:
    label: str
    formula: Formula
    just: Justification
    span: Span
    thm: bool = False


@dataclass(frozen=True, slots=True)
class DeriveItem:
    name: str
    label: str
    span: Span


@dataclass(frozen=True, slots=True)
class HypScopeItem:
    label: str
    formula: Formula
    body: tuple["ScriptItem", ...]
    span: Span


@dataclass(frozen=True, slots=True)
class QuantScopeItem:
    label: str
    binders: tuple[Binder, ...]
    body: tuple["ScriptItem", ...]
    span: Span


ScriptItem = Union[LineItem, DeriveItem, HypScopeItem, QuantScopeItem]


@dataclass(frozen=True, slots=True)
class ScriptAst:
    name: str | None
    items: tuple[ScriptItem, ...]


# -- script parsing -----------------------------------------------------------

_LABEL_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.']*\Z")


def _label(s: _Stream) -> str:
    t = s.tok
    if t.kind != "word" or not _LABEL_RE.match(t.text):
        s.fail("expected a line label", ("LABEL",))
    return s.advance().text


def _refs(s: _Stream) -> tuple[str, ...]:
    refs = []
    while s.tok.kind == "word":
        refs.append(_label(s))
    return tuple(refs)


def _step(s: _Stream) -> Step:
    if s.at("sub"):
        s.advance()
        pairs = []
        while True:
            name = s.name("binder name").text
            s.expect(":=")
            pairs.append((name, _formula(s)))
            if not s.at(","):
                break
            s.advance()
        return SubStep(tuple(pairs))
    if s.at("assg"):
        s.advance()
        return AssGStep()
    if s.at("eqe"):
        s.advance()
        return EqEStep(_label(s))
    if s.at("use"):
        s.advance()
        rule = s.name("rule name").text
        return UseStep(rule, _refs(s))
    s.fail("expected a justification step", ("sub", "assg", "eqe", "use"))


def _justification(s: _Stream) -> Justification:
    if s.at("eqi"):
        s.advance()
        return EqI(_label(s), _label(s))
    if s.at("gen"):
        s.advance()
        return Gen(_label(s))
    if s.at("def"):
        s.advance()
        return Def()
    if s.at("raa"):
        s.advance()
        return Raa(_label(s))
    if s.at("use"):
        s.advance()
        rule = s.name("rule name").text
        return Use(rule, _refs(s))
    seed = _label(s)
    steps = []
    while s.at(";"):
        s.advance()
        steps.append(_step(s))
    return Chain(seed, tuple(steps))


def _end(s: _Stream):
    if s.tok.kind != "eof":
        s.fail("unexpected trailing input", ("end of line",))


@dataclass
class _Raw:
    kind: str                 # 'line', 'thm', 'derive', 'hyp', 'quant'
    depth: int
    span: Span
    data: dict = field(default_factory=dict)
    children: list = field(default_factory=list)


def _parse_line(text: str, lineno: int, depth: int) -> _Raw:
    col0 = depth * 2 + 1
    s = _Stream(tokenize(text, lineno, col0))
    span = Span(lineno, col0)
    if s.at("derive") and s.peek().kind == "word" and s.peek(2).text == "from":
        s.advance()
        name = s.name("rule name").text
        s.expect("from")
        label = _label(s)
        _end(s)
        return _Raw("derive", depth, span, {"name": name, "label": label})
    thm = False
    if s.at("thm") and s.peek().kind == "word" and s.peek(2).text == ":":
        s.advance()
        thm = True
        span = Span(lineno, s.tok.col)
    label = _label(s)
    s.expect(":")
    if not thm and s.at("quant") and s.peek().kind == "word":
        s.advance()
        binders = [_binder(s)]
        while s.tok.kind == "word":
            binders.append(_binder(s))
        names = [b.name for b in binders]
        if len(set(names)) != len(names):
            s.fail("repeated binder in quantifier scope")
        _end(s)
        return _Raw("quant", depth, span, {"label": label, "binders": tuple(binders)})
    if not thm and s.at("hyp"):
        s.advance()
        f = _formula(s)
        _end(s)
        return _Raw("hyp", depth, span, {"label": label, "formula": f})
    f = _formula(s)
    s.expect("by")
    just = _justification(s)
    _end(s)
    return _Raw("thm" if thm else "line", depth, span,
                {"label": label, "formula": f, "just": just})


def _strip_comment(line: str) -> str:
    # '#' never occurs inside the grammar except in a dev-name string
    out, in_str = [], False
    for ch in line:
        if ch == '"':
            in_str = not in_str
        elif ch == "#" and not in_str:
            break
        out.append(ch)
    return "".join(out).rstrip()


def parse_script(text: str) -> ScriptAst:
    name = None
    roots: list[_Raw] = []
    stack: list[_Raw] = []        # open scopes; stack[i] has depth i
    expect_child = False
    labels: dict[str, int] = {}
    seen_item = False

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw_line)
        if not line.strip():
            continue
        if "\t" in line[: len(line) - len(line.lstrip())]:
            raise ParseError("tabs are not allowed in indentation", lineno, 1)
        indent = len(line) - len(line.lstrip(" "))
        if indent % 2:
            raise ParseError("indentation must be a multiple of two spaces", lineno, indent + 1)
        depth = indent // 2
        body = line.strip()

        if body.startswith("dev ") or body == "dev":
            if seen_item or name is not None or depth:
                raise ParseError("'dev' header must come first", lineno, indent + 1)
            s = _Stream(tokenize(body, lineno, indent + 1))
            s.advance()
            if s.tok.kind != "string":
                s.fail("expected a quoted development name", ("STRING",))
            name = s.advance().text[1:-1]
            _end(s)
            continue
        seen_item = True

        if expect_child:
            if depth != len(stack):
                raise ParseError("scope opener must be followed by an indented body",
                                 lineno, indent + 1)
        elif depth > len(stack):
            raise ParseError("unexpected indentation (no scope is open here)",
                             lineno, indent + 1)
        del stack[depth:]

        item = _parse_line(body, lineno, depth)
        label = item.data.get("label") if item.kind != "derive" else None
        if label is not None:
            if label in labels:
                raise ParseError(f"duplicate label {label!r} (first used on line "
                                 f"{labels[label]})", lineno, item.span.col)
            labels[label] = lineno
        if depth == 0 and item.kind == "line":
            raise ParseError("main-stroke lines must start with 'thm'", lineno, 1)
        if depth > 0 and item.kind == "thm":
            raise ParseError("'thm' is only allowed on the main stroke", lineno, indent + 1)

        (stack[-1].children if stack else roots).append(item)
        expect_child = item.kind in ("hyp", "quant")
        if expect_child:
            stack.append(item)

    if expect_child:
        last = stack[-1]
        raise ParseError("scope opener must be followed by an indented body",
                         last.span.line, last.span.col)
    return ScriptAst(name, tuple(_build(r) for r in roots))


def _build(r: _Raw) -> ScriptItem:
    d = r.data
    if r.kind in ("line", "thm"):
        return LineItem(d["label"], d["formula"], d["just"], r.span, r.kind == "thm")
    if r.kind == "derive":
        return DeriveItem(d["name"], d["label"], r.span)
    body = tuple(_build(c) for c in r.children)
    if r.kind == "hyp":
        return HypScopeItem(d["label"], d["formula"], body, r.span)
    return QuantScopeItem(d["label"], d["binders"], body, r.span)


def print_justification(j: Justification) -> str:
    if isinstance(j, EqI):
        return f"eqi {j.ref1} {j.ref2}"
    if isinstance(j, Gen):
        return f"gen {j.ref}"
    if isinstance(j, Def):
        return "def"
    if isinstance(j, Raa):
        return f"raa {j.ref}"
    if isinstance(j, Use):
        return " ".join(("use", j.rule) + j.refs)
    parts = [j.seed]
    for st in j.steps:
        if isinstance(st, SubStep):
            parts.append("sub " + ", ".join(f"{n} := {print_formula(d)}" for n, d in st.pairs))
        elif isinstance(st, AssGStep):
            parts.append("assg")
        elif isinstance(st, EqEStep):
            parts.append(f"eqe {st.ref}")
        else:
            parts.append(" ".join(("use", st.rule) + st.refs))
    return "; ".join(parts)


__all__ = [
    "Base", "Token", "tokenize", "parse_category", "parse_formula", "parse_script",
    "print_formula", "print_category", "print_justification", "ScriptAst", "LineItem",
    "DeriveItem", "HypScopeItem", "QuantScopeItem", "Chain", "EqI", "Gen", "Def", "Use",
    "Raa", "SubStep", "AssGStep", "EqEStep", "UseStep", "Span",
]
