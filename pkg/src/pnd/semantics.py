"""Two-valued standard model, evaluated by exhaustive enumeration.

``s`` denotes {0, 1}; a functor category denotes every function from the
product of its argument domains to its result domain. A function is stored
as a tuple indexed by the lexicographic position of its argument tuple.
Quantifiers are universal. Defined constants are tabulated from their
definiens on first use.

This is test tooling, not part of the trusted path.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from .categories import Signature, infer_binders
from .errors import OracleCapExceeded
from .syntax import (
    BASE, EQUIV, Apply, Base, Category, Const, Equiv, Formula, Functor, Quant, Var, free_vars,
)

DEFAULT_CAP = 2 ** 20
_MAX_BITS = 4096

Element = Any    # 0/1 for s, nested tuples for functors


def domain_size(c: Category) -> int | None:
    """Exact number of elements, or None when astronomically large."""
    bits = _log2_size(c)
    if bits > _MAX_BITS:
        return None
    if isinstance(c, Base):
        return 2
    n = math.prod(domain_size(a) for a in c.args)
    return domain_size(c.result) ** n


def _log2_size(c: Category) -> float:
    if isinstance(c, Base):
        return 1.0
    n_bits = sum(_log2_size(a) for a in c.args)
    if n_bits > 64:
        return math.inf
    return (2.0 ** n_bits) * _log2_size(c.result)


@dataclass(frozen=True)
class Domain:
    category: Category
    elements: tuple[Element, ...]
    index: Mapping[Element, int] = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.elements)


def _enumerate(c: Category, cache: dict) -> Domain:
    if c in cache:
        return cache[c]
    if isinstance(c, Base):
        elems: tuple = (0, 1)
    else:
        res = _enumerate(c.result, cache)
        n = math.prod(len(_enumerate(a, cache)) for a in c.args)
        elems = tuple(itertools.product(res.elements, repeat=n))
    dom = Domain(c, elems, {e: i for i, e in enumerate(elems)})
    cache[c] = dom
    return dom


def domain_of(c: Category, cap: int = DEFAULT_CAP, _cache: dict | None = None) -> Domain:
    size = domain_size(c)
    if size is None or size > cap:
        shown = "more than 2^4096" if size is None else str(size)
        raise OracleCapExceeded(f"domain of {c} has {shown} elements (cap {cap})", size)
    return _enumerate(c, {} if _cache is None else _cache)


class Evaluator:
    """Evaluates formulas of one signature; memo tables live on the instance."""

    def __init__(self, sig: Signature, cap: int = DEFAULT_CAP):
        self.sig = sig
        self.cap = cap
        self._domains: dict = {}
        self._tables: dict[str, Element] = {}
        self._binder_cats: dict[int, tuple[Quant, dict]] = {}

    def domain(self, c: Category) -> Domain:
        return domain_of(c, self.cap, self._domains)

    def _arg_index(self, cats, values) -> int:
        flat = 0
        for c, v in zip(cats, values):
            dom = self.domain(c)
            flat = flat * len(dom) + dom.index[v]
        return flat

    def constant(self, name: str) -> tuple[Category, Element]:
        cat = self.sig.category(name)
        if name == EQUIV:
            return cat, (1, 0, 0, 1)
        if name not in self._tables:
            d = self.sig.defs[name]
            params = dict(d.params)
            self._tables[name] = self._tabulate(d, params, 0, {})
        return cat, self._tables[name]

    def _tabulate(self, d, params, level, env) -> Element:
        if level == len(d.arglists):
            return self.value(d.definiens, env)
        names = d.arglists[level]
        doms = [self.domain(params[n]) for n in names]
        if math.prod(len(x) for x in doms) > self.cap:
            raise OracleCapExceeded(f"tabulating {d.name} exceeds the cap {self.cap}")
        out = []
        for combo in itertools.product(*(x.elements for x in doms)):
            inner = dict(env)
            for n, v in zip(names, combo):
                inner[n] = (params[n], v)
            out.append(self._tabulate(d, params, level + 1, inner))
        return tuple(out)

    def eval(self, f: Formula, env: Mapping[str, tuple[Category, Element]]
             ) -> tuple[Category, Element]:
        if isinstance(f, Var):
            return env[f.name]
        if isinstance(f, Const):
            return self.constant(f.name)
        if isinstance(f, Equiv):
            return BASE, int(self.value(f.left, env) == self.value(f.right, env))
        if isinstance(f, Apply):
            hcat, hval = self.eval(f.head, env)
            assert isinstance(hcat, Functor), hcat
            values = [self.eval(a, env)[1] for a in f.args]
            return hcat.result, hval[self._arg_index(hcat.args, values)]
        cats = self._quant_cats(f, env)
        doms = [self.domain(cats[n]) for n in f.names]
        for combo in itertools.product(*(d.elements for d in doms)):
            inner = dict(env)
            for n, v in zip(f.names, combo):
                inner[n] = (cats[n], v)
            if self.value(f.body, inner) == 0:
                return BASE, 0
        return BASE, 1

    def value(self, f: Formula, env) -> Element:
        return self.eval(f, env)[1]

    def _quant_cats(self, q: Quant, env) -> dict:
        hit = self._binder_cats.get(id(q))
        if hit is not None and hit[0] is q:
            return hit[1]
        ctx = {n: env[n][0] for n in free_vars(q) if n in env}
        cats = infer_binders(q.binders, q.body, self.sig, ctx)
        self._binder_cats[id(q)] = (q, cats)
        return cats


def eval_formula(f: Formula, sig: Signature, val: Mapping[str, tuple[Category, Element]] | None = None,
                 cap: int = DEFAULT_CAP) -> Element:
    """Value of ``f``; ``val`` maps each free variable to (category, element)."""
    return Evaluator(sig, cap).value(f, dict(val or {}))


def find_countermodel(f: Formula, sig: Signature, cap: int = DEFAULT_CAP) -> dict | None:
    """Assignment to the outer binders of closed ``f`` that falsifies its body."""
    ev = Evaluator(sig, cap)
    if not isinstance(f, Quant):
        return None if ev.value(f, {}) == 1 else {}
    cats = infer_binders(f.binders, f.body, sig, {})
    doms = [ev.domain(cats[n]) for n in f.names]
    for combo in itertools.product(*(d.elements for d in doms)):
        env = {n: (cats[n], v) for n, v in zip(f.names, combo)}
        if ev.value(f.body, env) == 0:
            return {n: v for n, v in zip(f.names, combo)}
    return None


@dataclass
class OracleReport:
    checked: int = 0
    failed: list[str] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failed


def validate_development(dev, cap: int = DEFAULT_CAP) -> OracleReport:
    """Evaluate every main-stroke thesis of a checked development."""
    report = OracleReport()
    ev = Evaluator(dev.signature, cap)
    for label, thesis in dev.theorems.items():
        try:
            v = ev.value(thesis, {})
        except OracleCapExceeded as exc:
            report.skipped.append((label, exc.message))
            continue
        report.checked += 1
        if v != 1:
            report.failed.append(label)
    return report
