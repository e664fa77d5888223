"""
Failure-time algebra.

Failure instants are extended reals: a finite nonnegative float, or INF for a
block that never fails. Structure functions are immutable expression trees
whose evaluation applies the operator tables:

    AND (·)          min(X, Y)
    OR (+)           max(X, Y)
    AFTER (▷)        X if X > Y else INF
    SIMULT (Δ)       X if X == Y else INF
    INCL_AFTER (⊵)   X if X >= Y else INF

Spare constructs read a SpareDraw for their spare block: the time the spare
would fail while dormant, and its residual lifetime once activated.
"""
import math
from collections import Counter
from dataclasses import dataclass
from functools import reduce
from typing import Dict, Iterator, List, Mapping, NamedTuple, Tuple, Union

from drbd.errors import DomainError, ModelError

INF = math.inf

# A failure instant: finite float >= 0, or INF
ExtTime = float

ALWAYS_TIME: ExtTime = 0.0
NEVER_TIME: ExtTime = INF


def ext_time(value: float) -> ExtTime:
    """Validate and return a failure instant."""
    v = float(value)
    if math.isnan(v):
        raise DomainError("failure time is NaN")
    if v < 0.0:
        raise DomainError(f"failure time must be >= 0, got {v}")
    return v


def ext_min(a: ExtTime, b: ExtTime) -> ExtTime:
    return a if a <= b else b


def ext_max(a: ExtTime, b: ExtTime) -> ExtTime:
    return a if a >= b else b


def after(x: ExtTime, y: ExtTime) -> ExtTime:
    return x if x > y else INF


def simult(x: ExtTime, y: ExtTime) -> ExtTime:
    return x if x == y else INF


def incl_after(x: ExtTime, y: ExtTime) -> ExtTime:
    return x if x >= y else INF


# ============ Expression tree ============

class _Ops:
    """Infix sugar: a * b is AND, a + b is OR, a >> b is AFTER."""

    def __mul__(self, other: "Expr") -> "And":
        return And(self, other)

    def __add__(self, other: "Expr") -> "Or":
        return Or(self, other)

    def __rshift__(self, other: "Expr") -> "After":
        return After(self, other)


@dataclass(frozen=True)
class Var(_Ops):
    name: str


@dataclass(frozen=True)
class Always(_Ops):
    pass


@dataclass(frozen=True)
class Never(_Ops):
    pass


@dataclass(frozen=True)
class And(_Ops):
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or(_Ops):
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class After(_Ops):
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Simult(_Ops):
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class InclAfter(_Ops):
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Wsp(_Ops):
    main: "Expr"
    spare: str


@dataclass(frozen=True)
class Csp(_Ops):
    main: "Expr"
    spare: str


@dataclass(frozen=True)
class Hsp(_Ops):
    main: "Expr"
    spare: str


@dataclass(frozen=True)
class NaryAnd(_Ops):
    args: Tuple["Expr", ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ModelError("NaryAnd needs at least one argument")


@dataclass(frozen=True)
class NaryOr(_Ops):
    args: Tuple["Expr", ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ModelError("NaryOr needs at least one argument")


Expr = Union[Var, Always, Never, And, Or, After, Simult, InclAfter, Wsp, Csp, Hsp, NaryAnd, NaryOr]

BINARY = (And, Or, After, Simult, InclAfter)
SPARES = (Wsp, Csp, Hsp)
NARY = (NaryAnd, NaryOr)
COMMUTATIVE = (And, Or, Simult)
TEMPORAL = (After, Simult, InclAfter)

# Constructor tags, also the secondary sort key of the canonical order
TAGS: Dict[type, str] = {
    Always: "always",
    Never: "never",
    Var: "var",
    And: "and",
    Or: "or",
    After: "after",
    Simult: "simult",
    InclAfter: "incl_after",
    Wsp: "wsp",
    Csp: "csp",
    Hsp: "hsp",
    NaryAnd: "nary_and",
    NaryOr: "nary_or",
}


class SpareDraw(NamedTuple):
    """Sampled state of a spare block."""
    dormant: ExtTime
    offset: float


# block-id -> failure instant, or SpareDraw for spare blocks
Sample = Mapping[str, Union[ExtTime, SpareDraw]]


def children(e: Expr) -> Tuple[Expr, ...]:
    if isinstance(e, BINARY):
        return (e.left, e.right)
    if isinstance(e, SPARES):
        return (e.main,)
    if isinstance(e, NARY):
        return e.args
    return ()


def rebuild(e: Expr, kids: Tuple[Expr, ...]) -> Expr:
    """Same node kind as e over new children."""
    if isinstance(e, BINARY):
        return type(e)(kids[0], kids[1])
    if isinstance(e, SPARES):
        return type(e)(kids[0], e.spare)
    if isinstance(e, NARY):
        return type(e)(tuple(kids))
    return e


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def size(e: Expr) -> int:
    return sum(1 for _ in walk(e))


def block_occurrences(e: Expr) -> Counter:
    """Count of every block reference (variables and spare ids)."""
    counts: Counter = Counter()
    for node in walk(e):
        if isinstance(node, Var):
            counts[node.name] += 1
        elif isinstance(node, SPARES):
            counts[node.spare] += 1
    return counts


def variables(e: Expr) -> List[str]:
    return sorted(n.name for n in walk(e) if isinstance(n, Var))


def spare_refs(e: Expr) -> List[str]:
    return sorted(n.spare for n in walk(e) if isinstance(n, SPARES))


def canonical_key(e: Expr) -> tuple:
    """Constants first, then variables by name, then compound nodes by tag."""
    if isinstance(e, (Always, Never)):
        return (0, TAGS[type(e)])
    if isinstance(e, Var):
        return (1, e.name)
    extra = (e.spare,) if isinstance(e, SPARES) else ()
    return (2, TAGS[type(e)], tuple(canonical_key(k) for k in children(e))) + extra


# ============ Evaluation ============

def _lookup(s: Sample, block: str):
    try:
        return s[block]
    except KeyError:
        raise ModelError(f"block '{block}' is not bound in the sample") from None


def _spare_draw(s: Sample, block: str) -> SpareDraw:
    value = _lookup(s, block)
    if not isinstance(value, SpareDraw):
        raise ModelError(f"block '{block}' is used as a spare but is not declared as one")
    return value


def wsp_time(y: ExtTime, draw: SpareDraw) -> ExtTime:
    """(X_a ▷ Y) · (Y ▷ X_d) with fresh-start activation."""
    x_d = draw.dormant
    x_a = y + draw.offset if x_d > y else INF
    return ext_min(after(x_a, y), after(y, x_d))


def csp_time(y: ExtTime, draw: SpareDraw) -> ExtTime:
    x = y + draw.offset
    return x if y < x else INF


def hsp_time(y: ExtTime, draw: SpareDraw) -> ExtTime:
    return ext_max(y, draw.offset)


_BINARY_OPS = {
    And: ext_min,
    Or: ext_max,
    After: after,
    Simult: simult,
    InclAfter: incl_after,
}

_SPARE_OPS = {
    Wsp: wsp_time,
    Csp: csp_time,
    Hsp: hsp_time,
}


def eval_expr(e: Expr, s: Sample) -> ExtTime:
    """Failure instant of structure function e on sample s."""
    if isinstance(e, Var):
        value = _lookup(s, e.name)
        if isinstance(value, SpareDraw):
            raise ModelError(f"spare block '{e.name}' referenced outside a spare construct")
        return value
    if isinstance(e, Always):
        return ALWAYS_TIME
    if isinstance(e, Never):
        return NEVER_TIME
    if isinstance(e, BINARY):
        return _BINARY_OPS[type(e)](eval_expr(e.left, s), eval_expr(e.right, s))
    if isinstance(e, SPARES):
        return _SPARE_OPS[type(e)](eval_expr(e.main, s), _spare_draw(s, e.spare))
    if isinstance(e, NaryAnd):
        return reduce(ext_min, (eval_expr(a, s) for a in e.args), NEVER_TIME)
    if isinstance(e, NaryOr):
        return reduce(ext_max, (eval_expr(a, s) for a in e.args), ALWAYS_TIME)
    raise ModelError(f"not an expression: {e!r}")


def survives(e: Expr, s: Sample, t: float) -> bool:
    """Membership of s in the DRBD event {s | Q(s) > t}."""
    return eval_expr(e, s) > t
