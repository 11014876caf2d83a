"""The trusted checker for PND developments.

A development is processed top to bottom. Each labelled line gets a
verdict; a failing line records its error and checking carries on, so
lines that cite it fail with ``UnknownRef`` while independent lines are
still verified.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterator

from .categories import (
    DefRecord, Signature, arglist_category, check_wff, infer_binders,
)
from .errors import (
    CategoryError, DefError, PNDError, RuleDisabled, RuleMismatch, ScopeError, UnknownRef,
    UnknownRule,
)
from .parser import (
    AssGStep, Chain, Def, DeriveItem, EqEStep, EqI, Gen, HypScopeItem, LineItem,
    QuantScopeItem, Raa, ScriptAst, Span, SubStep, Use, print_formula,
)
from .syntax import (
    BASE, Apply, Binder, Category, Const, Equiv, Formula, Quant, Var, alpha_eq, free_vars,
    resolve, substitute_many, view,
)

DEFAULT_ORACLE_CAP = 2 ** 20


def _default_cap() -> int:
    env = os.environ.get("PND_ORACLE_CAP")
    return int(env) if env else DEFAULT_ORACLE_CAP


@dataclass(frozen=True)
class Options:
    allow_raa: bool = False
    oracle_cap: int = field(default_factory=_default_cap)
    replay: bool = False     # expand every derived-rule use through its sub-deduction
    nested: bool = False     # set inside a replay; derive lines are not re-registered


# -- development state --------------------------------------------------------

@dataclass(eq=False)
class Scope:
    kind: str                           # 'root', 'quant' or 'hyp'
    label: str | None
    parent: "Scope | None"
    binders: tuple[Binder, ...] = ()
    cats: dict[str, Category] = field(default_factory=dict)
    hyp: "LineRecord | None" = None
    items: list = field(default_factory=list)
    item: object = None
    closed: bool = False
    failed: bool = False

    def ancestors(self) -> Iterator["Scope"]:
        s: Scope | None = self
        while s is not None:
            yield s
            s = s.parent

    def context(self) -> dict[str, Category]:
        ctx: dict[str, Category] = {}
        for s in reversed(list(self.ancestors())):
            if s.kind == "quant":
                ctx.update(s.cats)
        return ctx

    @property
    def depth(self) -> int:
        return sum(1 for _ in self.ancestors()) - 1

    def walk(self) -> Iterator["LineRecord | Scope"]:
        """Every record and nested scope below this one, in source order."""
        if self.hyp is not None:
            yield self.hyp
        for it in self.items:
            yield it
            if isinstance(it, Scope):
                yield from it.walk()


@dataclass(frozen=True)
class RuleApplication:
    rule: str
    premises: tuple[Formula, ...]
    conclusion: Formula
    sigma: dict[str, Formula]
    ctx: dict[str, Category]
    label: str


@dataclass(eq=False)
class LineRecord:
    label: str
    kind: str                           # 'thm', 'def', 'line', 'hyp', 'quant', 'derive'
    scope: Scope
    span: Span
    formula: Formula | None = None
    item: object = None
    status: str = "verified"
    error: str | None = None
    code: str | None = None
    message: str = ""
    trace: list[Formula] = field(default_factory=list)
    cites: list[str] = field(default_factory=list)
    deltas: list[Formula] = field(default_factory=list)
    applications: list[RuleApplication] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == "verified"

    def fail(self, exc: PNDError) -> None:
        self.status = "failed"
        self.error = exc.kind
        self.code = exc.code
        self.message = exc.message


@dataclass(eq=False)
class Development:
    name: str | None = None
    options: Options = field(default_factory=Options)
    signature: Signature = field(default_factory=Signature)
    theorems: dict[str, Formula] = field(default_factory=dict)
    rules: dict = field(default_factory=dict)
    records: list[LineRecord] = field(default_factory=list)
    lines: dict[str, LineRecord] = field(default_factory=dict)
    scopes: dict[str, Scope] = field(default_factory=dict)
    root: Scope = field(default_factory=lambda: Scope("root", None, None, closed=False))

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.records)

    @property
    def failures(self) -> list[LineRecord]:
        return [r for r in self.records if not r.ok]

    def is_theorem(self, label: str) -> bool:
        return label in self.theorems

    def record(self, label: str) -> LineRecord:
        return next(r for r in self.records if r.label == label)


# -- primitive rules (pure) ---------------------------------------------------

def apply_eqe(bicond: Formula, side: Formula) -> Formula:
    """Biconditional elimination in either orientation."""
    b = view(bicond)
    if not isinstance(b, Equiv):
        raise RuleMismatch(f"{print_formula(bicond)} is not a biconditional")
    if alpha_eq(side, b.left):
        return b.right
    if alpha_eq(side, b.right):
        return b.left
    raise RuleMismatch(f"{print_formula(side)} matches neither side of {print_formula(bicond)}")


def apply_assg(f: Formula) -> Formula:
    """(a <=> (b <=> c))  to  ((a <=> b) <=> c)."""
    g = view(f)
    if isinstance(g, Equiv):
        inner = view(g.right)
        if isinstance(inner, Equiv):
            return Equiv(Equiv(g.left, inner.left), inner.right)
    raise RuleMismatch(f"assg needs the shape (a <=> (b <=> c)), got {print_formula(f)}")


def apply_sub(quantified: Formula, pairs, sig: Signature,
              ctx: dict[str, Category] | None = None) -> Formula:
    """Instantiate binders of the main quantifier.

    ``pairs`` is a sequence of (binder name, formula); all pairs are
    substituted simultaneously and the instantiated binders are removed
    from the prefix, which disappears when it becomes empty.
    """
    ctx = ctx or {}
    if isinstance(pairs, tuple) and len(pairs) == 2 and isinstance(pairs[0], str):
        pairs = (pairs,)
    if not isinstance(quantified, Quant):
        raise RuleMismatch(f"sub needs a quantified formula, got {print_formula(quantified)}")
    names = [v for v, _ in pairs]
    if len(set(names)) != len(names):
        raise RuleMismatch(f"binder instantiated twice in sub {names}")
    missing = [v for v in names if v not in quantified.names]
    if missing:
        raise RuleMismatch(f"{', '.join(missing)} not bound by the main quantifier of "
                           f"{print_formula(quantified)}")
    cats = infer_binders(quantified.binders, quantified.body, sig, ctx)
    for v, delta in pairs:
        got = check_wff(delta, sig, ctx)
        if got != cats[v]:
            raise CategoryError(f"{print_formula(delta)} has category {got} but {v} has "
                                f"category {cats[v]}")
    remaining = tuple(b for b in quantified.binders if b.name not in names)
    target = Quant(remaining, quantified.body) if remaining else quantified.body
    return substitute_many(target, dict(pairs))


def _scope_conclusion(s: Scope) -> LineRecord:
    last = s.items[-1] if s.items else None
    if not isinstance(last, LineRecord):
        raise RuleMismatch(f"sub-deduction {s.label} does not end with a line at its own level")
    if not last.ok:
        raise UnknownRef(f"last line {last.label} of {s.label} was not verified")
    return last


def build_eqi(sub1: Scope, sub2: Scope) -> tuple[Formula, Formula]:
    """Biconditional introduction; returns both acceptable orientations."""
    h1, c1 = sub1.hyp.formula, _scope_conclusion(sub1).formula
    h2, c2 = sub2.hyp.formula, _scope_conclusion(sub2).formula
    if not (alpha_eq(c1, h2) and alpha_eq(c2, h1)):
        raise RuleMismatch(
            f"sub-deductions do not cross-match: {sub1.label} proves "
            f"{print_formula(h1)} |- {print_formula(c1)}, {sub2.label} proves "
            f"{print_formula(h2)} |- {print_formula(c2)}")
    return Equiv(h1, c1), Equiv(h2, c2)


def close_gen(scope: Scope, at: Scope) -> Formula:
    """Generalisation over a closed quantifier scope cited from ``at``."""
    if any(s.kind == "hyp" for s in at.ancestors()):
        raise RuleMismatch("gen is not allowed under a hypothesis")
    concl = _scope_conclusion(scope).formula
    out = Quant(scope.binders, concl) if scope.binders else concl
    if at.kind == "root" and free_vars(out):
        raise RuleMismatch(f"generalised formula {print_formula(out)} is not closed")
    return out


_FALSUM_SHAPE = Quant((Binder("p"),), Var("p"))


def find_falsum_negation(sig: Signature) -> tuple[str, str]:
    """Names of a defined falsum ([p](p)) and a negation defined from it."""
    falsum = [d.name for d in sig.defs.values()
              if not d.params and alpha_eq(d.definiens, _FALSUM_SHAPE)]
    for d in sig.defs.values():
        if len(d.params) == 1 and d.arglists == ((d.params[0][0],),) and d.params[0][1] == BASE:
            x = d.params[0][0]
            for c in falsum:
                if alpha_eq(d.definiens, Equiv(Var(x), Const(c))):
                    return c, d.name
    raise RuleMismatch("raa needs definitions of falsum as [p](p) and of negation "
                       "as [p](N(p) <=> (p <=> falsum))")


def check_raa(scope: Scope, sig: Signature, options: Options) -> Formula:
    if not options.allow_raa:
        raise RuleDisabled("the reductio meta-rule is disabled (use --allow-raa)")
    falsum, neg = find_falsum_negation(sig)
    concl = _scope_conclusion(scope).formula
    if not alpha_eq(concl, Const(falsum)):
        raise RuleMismatch(f"sub-deduction {scope.label} ends with {print_formula(concl)}, "
                           f"not {falsum}")
    return Apply(Const(neg), (scope.hyp.formula,))


# -- the checker --------------------------------------------------------------

class Kernel:
    def __init__(self, options: Options | None = None, dev: Development | None = None):
        self.dev = dev or Development(options=options or Options())
        if options is not None:
            self.dev.options = options

    @property
    def sig(self) -> Signature:
        return self.dev.signature

    # registration ------------------------------------------------------------

    def _new_record(self, label, kind, scope, span, item=None) -> LineRecord:
        rec = LineRecord(label, kind, scope, span, item=item)
        self.dev.records.append(rec)
        return rec

    def _mark_failed(self, scope: Scope) -> None:
        for s in scope.ancestors():
            if s.kind != "root":
                s.failed = True

    def _fail(self, rec: LineRecord, exc: PNDError) -> None:
        rec.fail(exc)
        self._mark_failed(rec.scope)

    def _skip(self, items, scope: Scope, reason: str) -> None:
        for it in items:
            if isinstance(it, DeriveItem):
                rec = self._new_record(it.name, "derive", scope, it.span, it)
                rec.fail(UnknownRef(reason))
                continue
            kind = {LineItem: "line", HypScopeItem: "hyp", QuantScopeItem: "quant"}[type(it)]
            rec = self._new_record(it.label, kind, scope, it.span, it)
            rec.fail(UnknownRef(reason))
            if isinstance(it, (HypScopeItem, QuantScopeItem)):
                self._skip(it.body, scope, reason)

    # driving -----------------------------------------------------------------

    def run(self, script: ScriptAst) -> Development:
        if script.name is not None:
            self.dev.name = script.name
        self._items(script.items, self.dev.root)
        return self.dev

    def _items(self, items, scope: Scope) -> None:
        for it in items:
            if isinstance(it, LineItem):
                self._line(it, scope)
            elif isinstance(it, HypScopeItem):
                self._hyp_scope(it, scope)
            elif isinstance(it, QuantScopeItem):
                self._quant_scope(it, scope)
            else:
                self._derive(it, scope)

    def _resolve(self, f: Formula, ctx) -> Formula:
        return resolve(f, self.sig, frozenset(ctx))

    def _check_prop(self, f: Formula, ctx) -> None:
        cat = check_wff(f, self.sig, ctx)
        if cat != BASE:
            raise CategoryError(f"{print_formula(f)} has category {cat}, not s")

    def _line(self, it: LineItem, scope: Scope) -> None:
        kind = "thm" if scope.kind == "root" else "line"
        if isinstance(it.just, Def):
            kind = "def" if scope.kind == "root" else "line"
        rec = self._new_record(it.label, kind, scope, it.span, it)
        try:
            if isinstance(it.just, Def):
                if scope.kind != "root":
                    raise DefError("definitions must be stated on the main stroke",
                                   "not-main-stroke")
                self._def(it, rec)
            else:
                ctx = scope.context()
                stated = self._resolve(it.formula, ctx)
                self._check_prop(stated, ctx)
                rec.formula = stated
                candidates = self._evaluate(it.just, scope, stated, rec)
                if not any(alpha_eq(c, stated) for c in candidates):
                    got = " or ".join(print_formula(c) for c in candidates)
                    raise RuleMismatch(f"justification yields {got}, "
                                       f"not the stated {print_formula(stated)}")
                if scope.kind == "root":
                    self.dev.theorems[it.label] = stated
        except PNDError as exc:
            self._fail(rec, exc)
        scope.items.append(rec)
        self.dev.lines[it.label] = rec

    def _hyp_scope(self, it: HypScopeItem, scope: Scope) -> None:
        new = Scope("hyp", it.label, scope, item=it)
        rec = self._new_record(it.label, "hyp", new, it.span, it)
        new.hyp = rec
        scope.items.append(new)
        self.dev.scopes[it.label] = new
        self.dev.lines[it.label] = rec
        try:
            ctx = scope.context()
            f = self._resolve(it.formula, ctx)
            self._check_prop(f, ctx)
            rec.formula = f
        except PNDError as exc:
            self._fail(rec, exc)
            self._skip(it.body, new, f"hypothesis {it.label} was rejected")
            new.closed = True
            return
        self._items(it.body, new)
        new.closed = True

    def _quant_scope(self, it: QuantScopeItem, scope: Scope) -> None:
        new = Scope("quant", it.label, scope, binders=it.binders, item=it)
        rec = self._new_record(it.label, "quant", scope, it.span, it)
        scope.items.append(new)
        self.dev.scopes[it.label] = new
        try:
            outer = scope.context()
            bound = frozenset(outer) | {b.name for b in it.binders}
            formulas = [resolve(f, self.sig, bound) for f in _scope_formulas(it.body)]
            new.cats = infer_binders(it.binders, formulas, self.sig, outer, tolerant=True)
        except PNDError as exc:
            self._fail(rec, exc)
            self._skip(it.body, new, f"quantifier scope {it.label} was rejected")
            new.closed = True
            return
        self._items(it.body, new)
        new.closed = True

    def _derive(self, it: DeriveItem, scope: Scope) -> None:
        from .derived import extract_rule
        from .errors import ExtractError

        rec = self._new_record(it.name, "derive", scope, it.span, it)
        try:
            if self.options.nested:
                return
            if it.name in self.dev.rules:
                raise ExtractError(f"rule {it.name!r} is already registered")
            target = self.dev.scopes.get(it.label)
            if target is None:
                raise UnknownRef(f"no sub-deduction labelled {it.label!r}")
            if not target.closed:
                raise ScopeError(f"sub-deduction {it.label} is still open here")
            if target.failed:
                raise UnknownRef(f"sub-deduction {it.label} contains unverified lines")
            self.dev.rules[it.name] = extract_rule(self.dev, it.label, it.name)
        except PNDError as exc:
            self._fail(rec, exc)

    @property
    def options(self) -> Options:
        return self.dev.options

    # definitions -------------------------------------------------------------

    def _def(self, it: LineItem, rec: LineRecord) -> None:
        f = it.formula
        binders, body = (f.binders, f.body) if isinstance(f, Quant) else ((), f)
        body = view(body)
        if not isinstance(body, Equiv):
            raise DefError("a definition must be a (quantified) biconditional", "bad-shape")
        dd, dn = body.left, body.right
        arglists: list[tuple[Formula, ...]] = []
        head = dd
        while isinstance(head, Apply):
            arglists.insert(0, head.args)
            head = head.head
        if not isinstance(head, (Var, Const)):
            raise DefError("the definiendum must be headed by a single new constant",
                           "bad-shape")
        name = head.name
        bnames = [b.name for b in binders]
        if name in bnames:
            raise DefError(f"definiendum head {name!r} is a quantified variable", "bad-shape")
        if name in self.sig:
            raise DefError(f"{name!r} is already used in the development", "existing-symbol")
        arg_names: list[str] = []
        for al in arglists:
            for a in al:
                if not isinstance(a, Var) or a.name not in bnames:
                    raise DefError("definiendum arguments must be the quantified variables",
                                   "bad-shape")
                arg_names.append(a.name)
        if len(set(arg_names)) != len(arg_names):
            raise DefError("a variable occurs more than once in the definiendum",
                           "repeated-symbol")
        if set(arg_names) != set(bnames):
            raise DefError("definiendum and quantifier bind different variables",
                           "free-var-mismatch")
        definiens = resolve(dn, self.sig, frozenset(bnames))
        unknown = free_vars(definiens) - set(bnames)
        if unknown:
            raise DefError(f"definiens uses unavailable symbols {sorted(unknown)}",
                           "unknown-symbol-in-definiens")
        if free_vars(definiens) != set(bnames):
            missing = sorted(set(bnames) - free_vars(definiens))
            raise DefError(f"variables {missing} do not occur free in the definiens",
                           "free-var-mismatch")
        cats = infer_binders(binders, definiens, self.sig, {})
        cat = arglist_category([[cats[a.name] for a in al] for al in arglists])
        thesis = Quant(binders, Equiv(resolve(dd, {name}, frozenset(bnames)), definiens)) \
            if binders else Equiv(Const(name), definiens)
        record = DefRecord(
            name=name,
            params=tuple((b, cats[b]) for b in bnames),
            arglists=tuple(tuple(a.name for a in al) for al in arglists),
            definiens=definiens,
            thesis=thesis,
            label=it.label,
        )
        new_sig = self.sig.extend(name, cat, record)
        if check_wff(thesis, new_sig, {}) != BASE:
            raise CategoryError("definition thesis is not a proposition")
        self.dev.signature = new_sig
        rec.formula = thesis
        self.dev.theorems[it.label] = thesis

    # citations ---------------------------------------------------------------

    def check_citation(self, at: Scope, ref: str) -> Formula:
        rec = self.dev.lines.get(ref)
        if rec is None:
            if ref in self.dev.scopes:
                raise ScopeError(f"{ref} is a quantifier scope, not a line")
            raise UnknownRef(f"no verified line labelled {ref!r} precedes this one")
        if not rec.ok or rec.formula is None:
            raise UnknownRef(f"cited line {ref} was not verified")
        chain = list(at.ancestors())
        if rec.scope not in chain:
            raise ScopeError(f"line {ref} lies inside a closed sub-deduction")
        fv = free_vars(rec.formula)
        for s in chain:
            if s is rec.scope:
                break
            if s.kind == "quant":
                clash = fv & {b.name for b in s.binders}
                if clash:
                    raise ScopeError(
                        f"reiterating {ref} into scope {s.label} would capture "
                        f"{', '.join(sorted(clash))}")
        return rec.formula

    def _sibling(self, at: Scope, ref: str, kind: str) -> Scope:
        s = self.dev.scopes.get(ref)
        if s is None:
            if ref in self.dev.lines:
                raise ScopeError(f"{ref} is a line, not a sub-deduction")
            raise UnknownRef(f"no sub-deduction labelled {ref!r}")
        if s.kind != kind:
            what = "hypothesis" if kind == "hyp" else "quantifier"
            raise ScopeError(f"{ref} is not a {what} sub-deduction")
        if not s.closed or s.parent is not at:
            raise ScopeError(f"sub-deduction {ref} is not a closed scope at this level")
        if s.failed:
            raise UnknownRef(f"sub-deduction {ref} contains unverified lines")
        return s

    # justifications ----------------------------------------------------------

    def _evaluate(self, just, scope: Scope, stated: Formula, rec: LineRecord) -> list[Formula]:
        ctx = scope.context()

        def cite(ref: str) -> Formula:
            rec.cites.append(ref)
            return self.check_citation(scope, ref)

        if isinstance(just, Chain):
            running = cite(just.seed)
            rec.trace.append(running)
            for i, step in enumerate(just.steps):
                last = i == len(just.steps) - 1
                if isinstance(step, SubStep):
                    pairs = tuple((v, self._resolve(d, ctx)) for v, d in step.pairs)
                    rec.deltas.extend(d for _, d in step.pairs)
                    running = apply_sub(running, pairs, self.sig, ctx)
                elif isinstance(step, AssGStep):
                    running = apply_assg(running)
                elif isinstance(step, EqEStep):
                    other = cite(step.ref)
                    try:
                        running = apply_eqe(running, other)
                    except RuleMismatch:
                        running = apply_eqe(other, running)
                else:
                    premises = [running] + [cite(r) for r in step.refs]
                    running = self._apply_derived(step.rule, premises,
                                                  stated if last else None, ctx, rec)
                self._check_prop(running, ctx)
                rec.trace.append(running)
            return [running]
        if isinstance(just, Use):
            premises = [cite(r) for r in just.refs]
            out = self._apply_derived(just.rule, premises, stated, ctx, rec)
            rec.trace.append(out)
            return [out]
        if isinstance(just, EqI):
            rec.cites += [just.ref1, just.ref2]
            s1 = self._sibling(scope, just.ref1, "hyp")
            s2 = self._sibling(scope, just.ref2, "hyp")
            return list(build_eqi(s1, s2))
        if isinstance(just, Gen):
            rec.cites.append(just.ref)
            return [close_gen(self._sibling(scope, just.ref, "quant"), scope)]
        if isinstance(just, Raa):
            rec.cites.append(just.ref)
            if not self.options.allow_raa:
                raise RuleDisabled("the reductio meta-rule is disabled (use --allow-raa)")
            return [check_raa(self._sibling(scope, just.ref, "hyp"), self.sig, self.options)]
        raise RuleMismatch(f"unsupported justification {just!r}")

    def _apply_derived(self, name: str, premises, conclusion, ctx, rec: LineRecord) -> Formula:
        from .derived import check_instantiable, expand_derived, match_schema

        schema = self.dev.rules.get(name)
        if schema is None:
            raise UnknownRule(f"no derived rule named {name!r} is registered here")
        sigma, result = match_schema(
            schema, premises, conclusion,
            category_of=lambda f: check_wff(f, self.sig, ctx))
        check_instantiable(schema, sigma)
        if self.options.replay:
            expand_derived(self.dev, name, sigma, ctx, result)
        rec.applications.append(RuleApplication(
            name, tuple(premises), result, dict(sigma), dict(ctx), rec.label))
        return result


def _scope_formulas(items) -> Iterator[Formula]:
    """Stated formulas below a quantifier scope that constrain its binders.

    Nested quantifier scopes are skipped: their own binders may shadow.
    """
    for it in items:
        if isinstance(it, LineItem):
            yield it.formula
        elif isinstance(it, HypScopeItem):
            yield it.formula
            yield from _scope_formulas(it.body)


def check_development(script: ScriptAst, options: Options | None = None,
                      base: Development | None = None) -> Development:
    return Kernel(options, base).run(script)


def check_text(text: str, options: Options | None = None) -> Development:
    from .parser import parse_script
    return check_development(parse_script(text), options)


__all__ = [
    "Options", "Development", "Scope", "LineRecord", "RuleApplication", "Kernel",
    "apply_eqe", "apply_assg", "apply_sub", "build_eqi", "close_gen", "check_raa",
    "check_development", "check_text", "DEFAULT_ORACLE_CAP",
]
