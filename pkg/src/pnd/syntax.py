"""Categories, formula trees and the structural operations on them.

Formulas are immutable. The biconditional has its own node (``Equiv``) but
is interchangeable with ``Apply(Const(EQUIV), (a, b))``; every comparison
in this module treats the two spellings as the same formula.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

EQUIV = "<=>"


# -- categories ---------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Base:
    """The category of propositions, written ``s``."""

    def __str__(self) -> str:
        return "s"


@dataclass(frozen=True, slots=True)
class Functor:
    result: "Category"
    args: tuple["Category", ...]

    def __post_init__(self):
        if not self.args:
            raise ValueError("functor category needs at least one argument")

    def __str__(self) -> str:
        res = f"({self.result})" if isinstance(self.result, Functor) else str(self.result)
        return f"{res}/({','.join(str(a) for a in self.args)})"


Category = Union[Base, Functor]
BASE = Base()
BICOND_CATEGORY = Functor(BASE, (BASE, BASE))


# -- formulas -----------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class Const:
    name: str


@dataclass(frozen=True, slots=True)
class Apply:
    head: "Formula"
    args: tuple["Formula", ...]

    def __post_init__(self):
        if not self.args:
            raise ValueError("application needs at least one argument")
        if isinstance(self.head, (Equiv, Quant)):
            raise ValueError("application head must be a name or an application")


@dataclass(frozen=True, slots=True)
class Equiv:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Binder:
    name: str
    annotation: Category | None = None


@dataclass(frozen=True, slots=True)
class Quant:
    binders: tuple[Binder, ...]
    body: "Formula"

    def __post_init__(self):
        if not self.binders:
            raise ValueError("quantifier needs at least one binder")
        names = [b.name for b in self.binders]
        if len(set(names)) != len(names):
            raise ValueError(f"repeated binder in {names}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.binders)


Formula = Union[Var, Const, Apply, Equiv, Quant]


def view(f: Formula) -> Formula:
    """Collapse ``Apply(Const('<=>'), (a, b))`` to ``Equiv(a, b)``."""
    if (isinstance(f, Apply) and f.head == Const(EQUIV) and len(f.args) == 2):
        return Equiv(f.args[0], f.args[1])
    return f


# -- comparison ---------------------------------------------------------------

def alpha_eq(a: Formula, b: Formula) -> bool:
    """Equality up to consistent renaming of bound variables.

    Binder annotations are ignored: they only constrain inference and do not
    change which formula is denoted once categories are fixed.
    """
    return _aeq(a, b, {}, {}, 0)


def _aeq(a, b, env_a, env_b, depth) -> bool:
    a, b = view(a), view(b)
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        ia, ib = env_a.get(a.name), env_b.get(b.name)
        if ia is None and ib is None:
            return a.name == b.name
        return ia == ib
    if isinstance(a, Const):
        return a.name == b.name
    if isinstance(a, Equiv):
        return (_aeq(a.left, b.left, env_a, env_b, depth)
                and _aeq(a.right, b.right, env_a, env_b, depth))
    if isinstance(a, Apply):
        return (len(a.args) == len(b.args)
                and _aeq(a.head, b.head, env_a, env_b, depth)
                and all(_aeq(x, y, env_a, env_b, depth) for x, y in zip(a.args, b.args)))
    # Quant
    if len(a.binders) != len(b.binders):
        return False
    env_a = dict(env_a)
    env_b = dict(env_b)
    for i, (x, y) in enumerate(zip(a.binders, b.binders)):
        env_a[x.name] = depth + i
        env_b[y.name] = depth + i
    return _aeq(a.body, b.body, env_a, env_b, depth + len(a.binders))


# -- variables ----------------------------------------------------------------

def free_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, Var):
        return frozenset((f.name,))
    if isinstance(f, Const):
        return frozenset()
    if isinstance(f, Equiv):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, Apply):
        out = free_vars(f.head)
        for a in f.args:
            out |= free_vars(a)
        return out
    return free_vars(f.body) - frozenset(f.names)


def names_in(f: Formula) -> frozenset[str]:
    """Every identifier mentioned anywhere in ``f``, bound or free."""
    if isinstance(f, (Var, Const)):
        return frozenset((f.name,))
    if isinstance(f, Equiv):
        return names_in(f.left) | names_in(f.right)
    if isinstance(f, Apply):
        out = names_in(f.head)
        for a in f.args:
            out |= names_in(a)
        return out
    return names_in(f.body) | frozenset(f.names)


class _Capture(Exception):
    pass


def substitute(body: Formula, v: str, delta: Formula) -> Formula:
    """Replace the free occurrences of ``v`` in ``body`` by ``delta``.

    Raises CaptureError instead of renaming when a free variable of
    ``delta`` would end up bound.
    """
    return substitute_many(body, {v: delta})


def substitute_many(body: Formula, mapping: Mapping[str, Formula]) -> Formula:
    """Simultaneous capture-checked substitution."""
    from .errors import CaptureError

    fvs = {k: free_vars(d) for k, d in mapping.items()}
    try:
        return _subst(body, dict(mapping), fvs)
    except _Capture as exc:
        raise CaptureError(str(exc)) from None


def _subst(f, m, fvs):
    if not m:
        return f
    if isinstance(f, Var):
        return m.get(f.name, f)
    if isinstance(f, Const):
        return f
    if isinstance(f, Equiv):
        return Equiv(_subst(f.left, m, fvs), _subst(f.right, m, fvs))
    if isinstance(f, Apply):
        return Apply(_subst(f.head, m, fvs), tuple(_subst(a, m, fvs) for a in f.args))
    bound = set(f.names)
    body_free = free_vars(f.body)
    active = {k: d for k, d in m.items() if k not in bound and k in body_free}
    if not active:
        return f
    for k in active:
        clash = fvs[k] & bound
        if clash:
            raise _Capture(
                f"substituting for {k} would capture {', '.join(sorted(clash))} "
                f"under the quantifier binding {' '.join(f.names)}")
    return Quant(f.binders, _subst(f.body, active, fvs))


def resolve(f: Formula, constants, bound=frozenset()) -> Formula:
    """Turn free names that are constants into ``Const`` nodes.

    Names bound by an enclosing quantifier or listed in ``bound`` stay
    variables, so variables shadow constants.
    """
    if isinstance(f, Var):
        if f.name not in bound and f.name in constants:
            return Const(f.name)
        return f
    if isinstance(f, Const):
        return f
    if isinstance(f, Equiv):
        return Equiv(resolve(f.left, constants, bound), resolve(f.right, constants, bound))
    if isinstance(f, Apply):
        return Apply(resolve(f.head, constants, bound),
                     tuple(resolve(a, constants, bound) for a in f.args))
    inner = frozenset(bound) | frozenset(f.names)
    return Quant(f.binders, resolve(f.body, constants, inner))


def constants_in(f: Formula) -> frozenset[str]:
    f = view(f)
    if isinstance(f, Const):
        return frozenset((f.name,))
    if isinstance(f, Var):
        return frozenset()
    if isinstance(f, Equiv):
        return constants_in(f.left) | constants_in(f.right)
    if isinstance(f, Apply):
        out = constants_in(f.head)
        for a in f.args:
            out |= constants_in(a)
        return out
    return constants_in(f.body)
