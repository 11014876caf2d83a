"""Derived rules: schemas extracted from closed sub-deductions.

A sub-deduction whose free variables are the binders of its enclosing
quantifier scopes proves a schema: from instances of its hypotheses infer
the same instance of its last line. Applications are checked by rigid
matching against the schema; ``expand_derived`` re-checks the original
sub-deduction under the instantiation and serves as an independent oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .errors import CaptureError, ExtractError, PNDError, ReplayError, RuleMismatch
from .parser import (
    Chain, DeriveItem, HypScopeItem, LineItem, QuantScopeItem, Span, SubStep, print_formula,
)
from .syntax import (
    Apply, Binder, Category, Const, Equiv, Formula, Var, alpha_eq, free_vars, names_in,
    substitute_many, view,
)


@dataclass(frozen=True)
class Provenance:
    scope_label: str
    theorem_deps: tuple[str, ...]
    premise_labels: tuple[str, ...]
    conclusion_label: str
    formulas: tuple[Formula, ...]           # everything a replay substitutes into
    extras: tuple[tuple[str, Category], ...]  # free in the deduction but not in the schema
    nested_binders: frozenset[str]
    scope: object                           # kernel Scope, used for replay


@dataclass(frozen=True)
class RuleSchema:
    name: str
    params: tuple[tuple[str, Category], ...]
    premises: tuple[Formula, ...]
    conclusion: Formula
    provenance: Provenance | None = None

    @property
    def param_names(self) -> frozenset[str]:
        return frozenset(n for n, _ in self.params)

    def __str__(self) -> str:
        prem = ", ".join(print_formula(p) for p in self.premises)
        return f"{self.name}: {prem} |- {print_formula(self.conclusion)}"


# -- extraction ---------------------------------------------------------------

def extract_rule(dev, label: str, name: str) -> RuleSchema:
    from .kernel import LineRecord, Scope

    scope = dev.scopes.get(label)
    if scope is None:
        raise ExtractError(f"no sub-deduction labelled {label!r}")
    if not scope.closed:
        raise ExtractError(f"sub-deduction {label} is still open")

    env: dict[str, Category] = {}
    for s in reversed(list(scope.ancestors())):
        if s.kind == "quant":
            env.update(s.cats)

    cur = scope
    premises: list[Formula] = []
    premise_labels: list[str] = []
    if cur.kind == "hyp":
        premises.append(cur.hyp.formula)
        premise_labels.append(cur.label)
    while (len(cur.items) == 1 and isinstance(cur.items[0], Scope)
           and cur.items[0].kind == "hyp"):
        cur = cur.items[0]
        premises.append(cur.hyp.formula)
        premise_labels.append(cur.label)
    last = cur.items[-1] if cur.items else None
    if not isinstance(last, LineRecord):
        raise ExtractError(f"sub-deduction {label} is not a hypothesis chain ending in a line")

    inside = {label}
    records: list[LineRecord] = []
    nested: set[str] = set()
    for node in scope.walk():
        if isinstance(node, Scope):
            inside.add(node.label)
            if node.kind == "quant":
                nested |= {b.name for b in node.binders}
        else:
            inside.add(node.label)
            records.append(node)
    deps: list[str] = []
    for rec in records:
        if not rec.ok:
            raise ExtractError(f"line {rec.label} of {label} was not verified")
        for ref in rec.cites:
            if ref in inside:
                continue
            if dev.is_theorem(ref) and dev.lines[ref].scope.kind == "root":
                if ref not in deps:
                    deps.append(ref)
                continue
            raise ExtractError(f"line {rec.label} cites {ref}, which lies outside {label} "
                               "and is not a thesis; the rule would not be replayable")

    pattern_fv = free_vars(last.formula)
    for p in premises:
        pattern_fv |= free_vars(p)
    if pattern_fv & nested:
        raise ExtractError(f"a nested scope of {label} rebinds a schema variable")
    params = tuple((n, c) for n, c in env.items() if n in pattern_fv)

    formulas: list[Formula] = []
    for rec in records:
        if rec.formula is not None:
            formulas.append(rec.formula)
        formulas.extend(rec.trace)
        formulas.extend(rec.deltas)
    internal_fv: set[str] = set()
    for f in formulas:
        internal_fv |= free_vars(f)
    extras = tuple((n, c) for n, c in env.items()
                   if n in internal_fv and n not in pattern_fv and n not in nested)

    return RuleSchema(
        name=name,
        params=params,
        premises=tuple(premises),
        conclusion=last.formula,
        provenance=Provenance(label, tuple(deps), tuple(premise_labels), last.label,
                              tuple(formulas), extras, frozenset(nested), scope),
    )


# -- matching -----------------------------------------------------------------

class _NoMatch(Exception):
    pass


def _match(pat, tgt, params, bp: dict, bt: dict, depth: int, sigma: dict) -> None:
    pat, tgt = view(pat), view(tgt)
    if isinstance(pat, Var) and pat.name in params and pat.name not in bp:
        if free_vars(tgt) & set(bt):
            raise _NoMatch
        if pat.name in sigma:
            if not alpha_eq(sigma[pat.name], tgt):
                raise _NoMatch
        else:
            sigma[pat.name] = tgt
        return
    if type(pat) is not type(tgt):
        raise _NoMatch
    if isinstance(pat, Var):
        ip, it = bp.get(pat.name), bt.get(tgt.name)
        if ip != it or (ip is None and pat.name != tgt.name):
            raise _NoMatch
    elif isinstance(pat, Const):
        if pat.name != tgt.name:
            raise _NoMatch
    elif isinstance(pat, Equiv):
        _match(pat.left, tgt.left, params, bp, bt, depth, sigma)
        _match(pat.right, tgt.right, params, bp, bt, depth, sigma)
    elif isinstance(pat, Apply):
        if len(pat.args) != len(tgt.args):
            raise _NoMatch
        _match(pat.head, tgt.head, params, bp, bt, depth, sigma)
        for a, b in zip(pat.args, tgt.args):
            _match(a, b, params, bp, bt, depth, sigma)
    else:
        if len(pat.binders) != len(tgt.binders):
            raise _NoMatch
        bp, bt = dict(bp), dict(bt)
        for i, (x, y) in enumerate(zip(pat.binders, tgt.binders)):
            bp[x.name] = depth + i
            bt[y.name] = depth + i
        _match(pat.body, tgt.body, params, bp, bt, depth + len(pat.binders), sigma)


def match_pattern(pattern: Formula, target: Formula, params, sigma: dict | None = None) -> dict:
    """Extend ``sigma`` so that ``pattern`` instantiated is ``target``."""
    sigma = dict(sigma or {})
    try:
        _match(pattern, target, frozenset(params), {}, {}, 0, sigma)
    except _NoMatch:
        raise RuleMismatch(f"{print_formula(target)} is not an instance of "
                           f"{print_formula(pattern)}") from None
    return sigma


def match_schema(schema: RuleSchema, stated_premises: Sequence[Formula],
                 stated_conclusion: Formula | None = None,
                 category_of: Callable[[Formula], Category] | None = None,
                 ) -> tuple[dict[str, Formula], Formula]:
    """Find an instantiation of ``schema`` for the given premises.

    Premises may be supplied in any order. When ``stated_conclusion`` is
    None the premises alone must determine the conclusion. Returns the
    substitution and the instantiated conclusion.
    """
    if len(stated_premises) != len(schema.premises):
        raise RuleMismatch(f"rule {schema.name} takes {len(schema.premises)} premise(s), "
                           f"got {len(stated_premises)}")
    params = schema.param_names
    cats = dict(schema.params)
    last_error = "no premise order matches"
    for order in itertools.permutations(stated_premises):
        try:
            sigma: dict[str, Formula] = {}
            for pat, tgt in zip(schema.premises, order):
                sigma = match_pattern(pat, tgt, params, sigma)
            if stated_conclusion is not None:
                sigma = match_pattern(schema.conclusion, stated_conclusion, params, sigma)
            unbound = (free_vars(schema.conclusion) & params) - set(sigma)
            if unbound:
                raise RuleMismatch(
                    f"premises of {schema.name} do not determine {', '.join(sorted(unbound))}; "
                    "state the conclusion on its own line")
            if category_of is not None:
                for n, value in sigma.items():
                    got = category_of(value)
                    if got != cats[n]:
                        raise RuleMismatch(f"{print_formula(value)} has category {got}, "
                                           f"but {n} has category {cats[n]}")
            conclusion = substitute_many(schema.conclusion, sigma)
            for pat, tgt in zip(schema.premises, order):
                if not alpha_eq(substitute_many(pat, sigma), tgt):
                    raise RuleMismatch("instantiated premise differs from the cited one")
            return sigma, conclusion
        except (RuleMismatch, CaptureError) as exc:
            last_error = exc.message
    raise RuleMismatch(f"rule {schema.name} does not apply: {last_error}")


def check_instantiable(schema: RuleSchema, sigma: Mapping[str, Formula]) -> None:
    """Reject instantiations under which the sub-deduction itself would capture."""
    prov = schema.provenance
    if prov is None:
        return
    for f in prov.formulas:
        substitute_many(f, sigma)
    loose = set()
    for v in sigma.values():
        loose |= free_vars(v)
    clash = loose & prov.nested_binders
    if clash:
        raise CaptureError(f"instantiating {schema.name} would capture "
                           f"{', '.join(sorted(clash))} in a nested scope")


# -- replay -------------------------------------------------------------------

def _fresh(base: str, taken: set[str]) -> str:
    name = base
    while name in taken:
        name += "'"
    taken.add(name)
    return name


def _transport_formula(f: Formula, mapping: Mapping[str, Formula], shadow: frozenset) -> Formula:
    m = {k: v for k, v in mapping.items() if k not in shadow}
    return substitute_many(f, m)


def _transport_just(just, mapping, shadow):
    if isinstance(just, Chain):
        steps = []
        for st in just.steps:
            if isinstance(st, SubStep):
                st = SubStep(tuple((v, _transport_formula(d, mapping, shadow))
                                   for v, d in st.pairs))
            steps.append(st)
        return Chain(just.seed, tuple(steps))
    return just


def _transport_items(items, mapping, shadow: frozenset) -> tuple:
    out = []
    for it in items:
        if isinstance(it, DeriveItem):
            continue
        if isinstance(it, LineItem):
            out.append(LineItem(it.label, _transport_formula(it.formula, mapping, shadow),
                                _transport_just(it.just, mapping, shadow), it.span))
        elif isinstance(it, HypScopeItem):
            out.append(HypScopeItem(it.label, _transport_formula(it.formula, mapping, shadow),
                                    _transport_items(it.body, mapping, shadow), it.span))
        else:
            inner = shadow | {b.name for b in it.binders}
            out.append(QuantScopeItem(it.label, it.binders,
                                      _transport_items(it.body, mapping, inner), it.span))
    return tuple(out)


def expand_derived(dev, name: str, sigma: Mapping[str, Formula],
                   ctx: Mapping[str, Category] | None = None,
                   stated: Formula | None = None) -> list[tuple[str, Formula]]:
    """Re-check the sub-deduction behind ``name`` under ``sigma``.

    The replay runs the kernel on the transported sub-deduction inside a
    scope binding the use-site context; nested derived-rule uses are
    expanded recursively. Returns the replayed (label, formula) lines.
    """
    from .kernel import Development, Kernel, LineRecord, Options

    schema = dev.rules.get(name)
    if schema is None or schema.provenance is None:
        raise ReplayError(f"rule {name!r} has no recorded sub-deduction")
    prov = schema.provenance
    ctx = dict(ctx or {})

    taken = set(ctx) | set(dev.signature) | _item_names(prov.scope.item)
    for v in sigma.values():
        taken |= names_in(v)
    mapping: dict[str, Formula] = dict(sigma)
    replay_ctx = dict(ctx)
    for n, c in prov.extras:
        fresh = _fresh(n, taken)
        mapping[n] = Var(fresh)
        replay_ctx[fresh] = c

    item = prov.scope.item
    if isinstance(item, QuantScopeItem):
        body = _transport_items(item.body, mapping, frozenset())
    else:
        body = _transport_items((item,), mapping, frozenset())

    holder = QuantScopeItem("__replay__", tuple(Binder(n, c) for n, c in replay_ctx.items()),
                            body, Span(0, 0))

    sub = Development(name=dev.name, options=Options(allow_raa=dev.options.allow_raa,
                                                     oracle_cap=dev.options.oracle_cap,
                                                     replay=True, nested=True))
    sub.signature = dev.signature
    sub.rules = dev.rules
    for label, f in dev.theorems.items():
        rec = LineRecord(label, "thm", sub.root, Span(0, 0), formula=f)
        sub.lines[label] = rec
        sub.theorems[label] = f
    kernel = Kernel(dev=sub)
    try:
        kernel._items((holder,), sub.root)
    except PNDError as exc:
        raise ReplayError(f"replay of {name} aborted: {exc.message}") from None

    bad = [r for r in sub.records if not r.ok]
    if bad:
        r = bad[0]
        raise ReplayError(f"replay of {name} failed at {r.label}: {r.error}: {r.message}")

    expected = substitute_many(schema.conclusion, sigma)
    got = sub.lines[prov.conclusion_label].formula
    if not alpha_eq(got, expected):
        raise ReplayError(f"replay of {name} ends in {print_formula(got)}, "
                          f"expected {print_formula(expected)}")
    if stated is not None and not alpha_eq(got, stated):
        raise ReplayError(f"replay of {name} ends in {print_formula(got)}, "
                          f"but the line states {print_formula(stated)}")
    for lbl, pat in zip(prov.premise_labels, schema.premises):
        if not alpha_eq(sub.lines[lbl].formula, substitute_many(pat, sigma)):
            raise ReplayError(f"replayed hypothesis {lbl} differs from the premise instance")
    return [(r.label, r.formula) for r in sub.records
            if r.kind not in ("quant", "derive") and r.formula is not None]


def _item_names(item) -> set[str]:
    out: set[str] = set()
    if isinstance(item, (LineItem, HypScopeItem)):
        out |= names_in(item.formula)
    if isinstance(item, QuantScopeItem):
        out |= {b.name for b in item.binders}
    if isinstance(item, LineItem) and isinstance(item.just, Chain):
        for st in item.just.steps:
            if isinstance(st, SubStep):
                for _, d in st.pairs:
                    out |= names_in(d)
    for child in getattr(item, "body", ()):
        out |= _item_names(child)
    return out

