"""
Series / parallel structures and their nested hierarchies.

A NestedIndex describes a hierarchy of index sets: the outer set J, then one
family per deeper level mapping each index to the set of its children
(A(j), L(a), s(l) for the four-level case). Levels alternate between series
and parallel, starting from the top polarity. The leaves are the indices of
the last level.
"""
import enum
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Hashable, Iterable, List, Mapping, Sequence, Tuple, TypeVar, Union

from drbd.algebra import ExtTime, Expr, NaryAnd, NaryOr, Var
from drbd.errors import StructureError

T = TypeVar("T")

LEVEL_NAMES = {1: ("J",), 2: ("J", "s"), 4: ("J", "A", "L", "s")}


class Polarity(enum.Enum):
    SERIES = "series"
    PARALLEL = "parallel"

    def flip(self) -> "Polarity":
        return Polarity.PARALLEL if self is Polarity.SERIES else Polarity.SERIES


def order_key(index: Hashable) -> tuple:
    """Numbers first in numeric order, everything else by its text."""
    if isinstance(index, (int, float)) and not isinstance(index, bool):
        return (0, index, "")
    return (1, 0, str(index))


def ordered(ids: Iterable[Hashable]) -> List[Hashable]:
    return sorted(ids, key=order_key)


@dataclass(frozen=True)
class NestedIndex:
    top: Polarity
    outer: FrozenSet[Hashable]
    families: Tuple[Mapping[Hashable, FrozenSet[Hashable]], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "outer", frozenset(self.outer))
        object.__setattr__(
            self,
            "families",
            tuple({k: frozenset(v) for k, v in fam.items()} for fam in self.families),
        )
        self._validate()

    @property
    def depth(self) -> int:
        return 1 + len(self.families)

    def _validate(self) -> None:
        if self.depth not in LEVEL_NAMES:
            raise StructureError(f"nesting depth must be 1, 2 or 4, got {self.depth}")
        names = LEVEL_NAMES[self.depth]
        if not self.outer:
            raise StructureError(f"index set {names[0]} is empty")
        parents: Sequence[Hashable] = ordered(self.outer)
        for level, family in enumerate(self.families, start=1):
            name = names[level]
            seen: Dict[Hashable, Hashable] = {}
            children: List[Hashable] = []
            for p in parents:
                if p not in family:
                    raise StructureError(f"index set {name}({p}) is not defined")
                members = family[p]
                if not members:
                    raise StructureError(f"index set {name}({p}) is empty")
                for m in ordered(members):
                    if m in seen:
                        raise StructureError(
                            f"index sets {name}({seen[m]}) and {name}({p}) overlap on {m!r}"
                        )
                    seen[m] = p
                    children.append(m)
            parents = children

    def polarity_at(self, level: int) -> Polarity:
        return self.top if level % 2 == 0 else self.top.flip()

    def leaves(self) -> List[Hashable]:
        """All leaf indices, in hierarchy order."""
        current = ordered(self.outer)
        for family in self.families:
            current = [m for p in current for m in ordered(family[p])]
        return current

    # ---- constructors ----

    @classmethod
    def series(cls, ids: Iterable[Hashable]) -> "NestedIndex":
        return cls(Polarity.SERIES, frozenset(ids))

    @classmethod
    def parallel(cls, ids: Iterable[Hashable]) -> "NestedIndex":
        return cls(Polarity.PARALLEL, frozenset(ids))

    @classmethod
    def series_parallel(cls, J: Iterable[Hashable], s: Mapping[Hashable, Iterable[Hashable]]) -> "NestedIndex":
        return cls(Polarity.SERIES, frozenset(J), (_family(s),))

    @classmethod
    def parallel_series(cls, J: Iterable[Hashable], s: Mapping[Hashable, Iterable[Hashable]]) -> "NestedIndex":
        return cls(Polarity.PARALLEL, frozenset(J), (_family(s),))

    @classmethod
    def nested(
        cls,
        J: Iterable[Hashable],
        A: Mapping[Hashable, Iterable[Hashable]],
        L: Mapping[Hashable, Iterable[Hashable]],
        s: Mapping[Hashable, Iterable[Hashable]],
        top: Polarity = Polarity.SERIES,
    ) -> "NestedIndex":
        """Four levels: series-parallel-series-parallel by default."""
        return cls(top, frozenset(J), (_family(A), _family(L), _family(s)))


def _family(m: Mapping[Hashable, Iterable[Hashable]]) -> Dict[Hashable, FrozenSet[Hashable]]:
    return {k: frozenset(v) for k, v in m.items()}


def fold_nested(
    idx: NestedIndex,
    leaf: Callable[[Hashable], T],
    series: Callable[[List[T]], T],
    parallel: Callable[[List[T]], T],
) -> T:
    """Evaluate the hierarchy bottom-up with the given leaf and combinators."""

    def go(level: int, ids: Iterable[Hashable]) -> T:
        combine = series if idx.polarity_at(level) is Polarity.SERIES else parallel
        if level == idx.depth - 1:
            return combine([leaf(i) for i in ordered(ids)])
        family = idx.families[level]
        return combine([go(level + 1, family[i]) for i in ordered(ids)])

    return go(0, idx.outer)


# ============ Expression builders ============

def _blocks(ids: Iterable[str], kind: str) -> List[Var]:
    ids = list(ids)
    if not ids:
        raise StructureError(f"{kind} structure needs a nonempty set of blocks")
    if len(set(ids)) != len(ids):
        raise StructureError(f"{kind} structure lists a block twice")
    return [Var(b) for b in ordered(ids)]


def series(block_ids: Iterable[str]) -> NaryAnd:
    return NaryAnd(tuple(_blocks(block_ids, "series")))


def parallel(block_ids: Iterable[str]) -> NaryOr:
    return NaryOr(tuple(_blocks(block_ids, "parallel")))


def _join(kind: type, parts: List[Expr]) -> Expr:
    """n-ary node over parts; singletons collapse and same-kind children flatten."""
    flat: List[Expr] = []
    for p in parts:
        if isinstance(p, kind):
            flat.extend(p.args)
        else:
            flat.append(p)
    if len(flat) == 1:
        return flat[0]
    return kind(tuple(flat))


def build_nested(idx: NestedIndex, leaf: Union[Mapping[Hashable, Expr], Callable[[Hashable], Expr]]) -> Expr:
    """Alternating NaryAnd/NaryOr tree of the hierarchy over leaf sub-expressions."""
    lookup = leaf.__getitem__ if isinstance(leaf, Mapping) else leaf

    def leaf_expr(i: Hashable) -> Expr:
        try:
            return lookup(i)
        except KeyError:
            raise StructureError(f"no leaf expression for index {i!r}") from None

    return fold_nested(
        idx,
        leaf_expr,
        lambda parts: _join(NaryAnd, parts),
        lambda parts: _join(NaryOr, parts),
    )


def event_holds(idx: NestedIndex, leaf_times: Mapping[Hashable, ExtTime], t: float) -> bool:
    """Set-semantics membership: intersections/unions of the leaf events {X_i > t}."""
    return fold_nested(idx, lambda i: leaf_times[i] > t, all, any)
