"""Contextual categorial grammar.

A formula is well formed only relative to a signature (the constants
introduced so far) and a context (categories of the free variables).
Binder categories are never declared in the source; they are solved from
their occurrences by first-order unification over category trees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, Union

from .errors import AmbiguousCategory, CategoryError, UnifyFailure, UnknownName
from .syntax import (
    BASE, BICOND_CATEGORY, EQUIV, Apply, Base, Binder, Category, Const, Equiv, Formula,
    Functor, Var,
)


# -- unification --------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class CatVar:
    """An inference variable standing for an unknown category."""
    id: int

    def __str__(self) -> str:
        return f"?{self.id}"


CatTerm = Union[Base, Functor, CatVar]
Unifier = dict[int, CatTerm]


def walk(t: CatTerm, subst: Mapping[int, CatTerm]) -> CatTerm:
    while isinstance(t, CatVar) and t.id in subst:
        t = subst[t.id]
    return t


def apply_subst(t: CatTerm, subst: Mapping[int, CatTerm]) -> CatTerm:
    t = walk(t, subst)
    if isinstance(t, Functor):
        return Functor(apply_subst(t.result, subst),
                       tuple(apply_subst(a, subst) for a in t.args))
    return t


def _occurs(v: CatVar, t: CatTerm, subst) -> bool:
    t = walk(t, subst)
    if t == v:
        return True
    if isinstance(t, Functor):
        return _occurs(v, t.result, subst) or any(_occurs(v, a, subst) for a in t.args)
    return False


def _unify_into(a: CatTerm, b: CatTerm, subst: Unifier) -> None:
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x, y = walk(x, subst), walk(y, subst)
        if x == y:
            continue
        if isinstance(y, CatVar) and not isinstance(x, CatVar):
            x, y = y, x
        if isinstance(x, CatVar):
            if _occurs(x, y, subst):
                raise UnifyFailure(f"occurs check: {x} in {apply_subst(y, subst)}")
            subst[x.id] = y
            continue
        if isinstance(x, Functor) and isinstance(y, Functor) and len(x.args) == len(y.args):
            stack.append((x.result, y.result))
            stack.extend(zip(x.args, y.args))
            continue
        raise UnifyFailure(f"cannot unify {apply_subst(x, subst)} with {apply_subst(y, subst)}")


def unify(c1: CatTerm, c2: CatTerm) -> Unifier:
    """Most general unifier of two category terms, fully resolved (idempotent)."""
    subst: Unifier = {}
    _unify_into(c1, c2, subst)
    return {k: apply_subst(v, subst) for k, v in subst.items()}


def is_ground(t: CatTerm) -> bool:
    if isinstance(t, CatVar):
        return False
    if isinstance(t, Functor):
        return is_ground(t.result) and all(is_ground(a) for a in t.args)
    return True


# -- signature ----------------------------------------------------------------

@dataclass(frozen=True)
class DefRecord:
    """How a defined constant was introduced."""
    name: str
    params: tuple[tuple[str, Category], ...]
    arglists: tuple[tuple[str, ...], ...]
    definiens: Formula
    thesis: Formula
    label: str


@dataclass(frozen=True)
class Signature:
    """Insertion-ordered, append-only map from constant names to categories."""
    cats: Mapping[str, Category] = field(
        default_factory=lambda: MappingProxyType({EQUIV: BICOND_CATEGORY}))
    defs: Mapping[str, DefRecord] = field(default_factory=lambda: MappingProxyType({}))

    def __contains__(self, name: object) -> bool:
        return name in self.cats

    def __len__(self) -> int:
        return len(self.cats)

    def __iter__(self):
        return iter(self.cats)

    def category(self, name: str) -> Category:
        return self.cats[name]

    def extend(self, name: str, cat: Category, record: DefRecord | None = None) -> "Signature":
        if name in self.cats:
            raise ValueError(f"{name!r} is already in the signature")
        cats = dict(self.cats)
        cats[name] = cat
        defs = dict(self.defs)
        if record is not None:
            defs[name] = record
        return Signature(MappingProxyType(cats), MappingProxyType(defs))


CatAssignment = dict[str, Category]


# -- inference ----------------------------------------------------------------

class _Inference:
    def __init__(self, sig: Signature):
        self.sig = sig
        self.subst: Unifier = {}
        self.counter = 0
        self.binder_vars: list[tuple[Binder, CatTerm]] = []

    def fresh(self) -> CatVar:
        self.counter += 1
        return CatVar(self.counter)

    def unify(self, a: CatTerm, b: CatTerm, where: Formula) -> None:
        try:
            _unify_into(a, b, self.subst)
        except UnifyFailure as exc:
            from .parser import print_formula
            raise CategoryError(f"ill-categorised {print_formula(where)}: {exc}") from None

    def visit(self, f: Formula, env: Mapping[str, CatTerm]) -> CatTerm:
        if isinstance(f, Var):
            if f.name in env:
                return env[f.name]
            if f.name in self.sig:
                return self.sig.category(f.name)
            raise UnknownName(f"unknown name {f.name!r}")
        if isinstance(f, Const):
            if f.name in self.sig:
                return self.sig.category(f.name)
            raise UnknownName(f"unknown constant {f.name!r}")
        if isinstance(f, Equiv):
            self.unify(self.visit(f.left, env), BASE, f)
            self.unify(self.visit(f.right, env), BASE, f)
            return BASE
        if isinstance(f, Apply):
            head = self.visit(f.head, env)
            args = tuple(self.visit(a, env) for a in f.args)
            result = self.fresh()
            self.unify(head, Functor(result, args), f)
            return result
        inner = dict(env)
        for b in f.binders:
            v = b.annotation if b.annotation is not None else self.fresh()
            inner[b.name] = v
            self.binder_vars.append((b, v))
        self.unify(self.visit(f.body, inner), BASE, f)
        return BASE

    def resolved(self, t: CatTerm) -> CatTerm:
        return apply_subst(t, self.subst)

    def check_nested_ground(self) -> None:
        for b, v in self.binder_vars:
            if not is_ground(self.resolved(v)):
                raise AmbiguousCategory(
                    f"category of bound variable {b.name!r} is not determined by its context")


def infer_binders(binders: Sequence[Binder], body: Formula | Sequence[Formula],
                  sig: Signature, ctx: Mapping[str, Category] | None = None,
                  tolerant: bool = False) -> CatAssignment:
    """Solve the categories of ``binders`` so that ``body`` is a proposition.

    ``body`` may be a list of formulas that must all be propositions. With
    ``tolerant`` set, bodies that fail to check are skipped instead of
    aborting, so a single bad line does not poison a whole scope.
    """
    bodies = [body] if not isinstance(body, (list, tuple)) else list(body)
    inf = _Inference(sig)
    env: dict[str, CatTerm] = dict(ctx or {})
    own: dict[str, CatTerm] = {}
    for b in binders:
        own[b.name] = b.annotation if b.annotation is not None else inf.fresh()
    env.update(own)

    for f in bodies:
        saved = (dict(inf.subst), inf.counter, len(inf.binder_vars))
        try:
            inf.unify(inf.visit(f, env), BASE, f)
        except (CategoryError, UnknownName):
            if not tolerant:
                raise
            inf.subst, inf.counter = saved[0], saved[1]
            del inf.binder_vars[saved[2]:]
    if not tolerant:
        inf.check_nested_ground()

    out: CatAssignment = {}
    for b in binders:
        cat = inf.resolved(own[b.name])
        if not is_ground(cat):
            raise AmbiguousCategory(
                f"category of {b.name!r} is not determined by its context; "
                f"annotate it as {b.name}:<category>")
        out[b.name] = cat
    return out


def check_wff(f: Formula, sig: Signature, ctx: Mapping[str, Category] | None = None) -> Category:
    """Category of ``f`` under ``sig`` and ``ctx``."""
    inf = _Inference(sig)
    cat = inf.resolved(inf.visit(f, dict(ctx or {})))
    inf.check_nested_ground()
    if not is_ground(cat):
        raise AmbiguousCategory("category of the formula is not determined by its context")
    return cat


def arglist_category(arglists: Iterable[Sequence[Category]], result: Category = BASE) -> Category:
    """Category of a head that, applied to ``arglists`` in turn, yields ``result``."""
    cat = result
    for args in reversed(list(arglists)):
        cat = Functor(cat, tuple(args))
    return cat
