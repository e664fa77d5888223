"""
Built-in case studies.

dbw          drive-by-wire: TF · EF · BCU · wsp(PC, SC) · TS · BS
sen          shuffle-exchange network, terminal reliability with warm spares
             on the source and destination switches
sen-nospare  the same network with plain source and destination switches

DBW rates default to 1e-4 for every block and 0.5 for the spare dormancy;
override them with rates=/dormancy=.
"""
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional

from drbd.algebra import Expr, NaryAnd, Var, Wsp
from drbd.distributions import Exponential, SpareSpec
from drbd.errors import DomainError, ModelError
from drbd.models import BlockLaw, DrbdModel
from drbd.structures import NestedIndex, Polarity, build_nested

DBW_RATE = 1e-4
DBW_DORMANCY = 0.5
DBW_BLOCKS = ("TF", "EF", "BCU", "PC", "TS", "BS")

SEN_RATE = 1e-5
SEN_PATH_LENGTH = 16
SEN_DORMANCY = 0.1


class Grid(NamedTuple):
    t0: float
    t1: float
    steps: int


def dbw(
    rates: Optional[Mapping[str, float]] = None,
    dormancy: Optional[Mapping[str, float]] = None,
    rate: float = DBW_RATE,
    alpha: float = DBW_DORMANCY,
) -> DrbdModel:
    """Series of throttle, engine, brake control, warm-spared processor and two sensors."""
    blocks: Dict[str, BlockLaw] = {b: Exponential(rate) for b in DBW_BLOCKS}
    blocks["SC"] = SpareSpec.exponential(rate, alpha)
    root = NaryAnd((
        Var("TF"),
        Var("EF"),
        Var("BCU"),
        Wsp(Var("PC"), "SC"),
        Var("TS"),
        Var("BS"),
    ))
    return DrbdModel(blocks, root, name="dbw").with_rates(rates, dormancy)


def _path(k: int, n: int) -> List[str]:
    width = len(str(n))
    return [f"L{k}_{i:0{width}d}" for i in range(1, n + 1)]


def sen_index(n: int = SEN_PATH_LENGTH) -> NestedIndex:
    """
    Four-level hierarchy of the network: a series of source, the two redundant
    paths, and destination. The innermost parallel sets are singletons.
    """
    if n < 1:
        raise DomainError(f"path length must be >= 1, got {n}")
    paths = {"P1": _path(1, n), "P2": _path(2, n)}
    A = {"src": ["src"], "net": ["P1", "P2"], "dst": ["dst"]}
    L = {"src": ["Y"], "dst": ["Z"], **paths}
    s = {leaf: [leaf] for leaf in ["Y", "Z"] + paths["P1"] + paths["P2"]}
    return NestedIndex.nested(["src", "net", "dst"], A, L, s, top=Polarity.SERIES)


def _sen(n: int, rate: float, alpha: Optional[float]) -> DrbdModel:
    idx = sen_index(n)
    blocks: Dict[str, BlockLaw] = {leaf: Exponential(rate) for leaf in idx.leaves()}

    def leaf(i: str) -> Expr:
        if alpha is not None and i in ("Y", "Z"):
            return Wsp(Var(i), f"{i}s")
        return Var(i)

    if alpha is not None:
        blocks["Ys"] = SpareSpec.exponential(rate, alpha)
        blocks["Zs"] = SpareSpec.exponential(rate, alpha)
    name = "sen" if alpha is not None else "sen-nospare"
    return DrbdModel(blocks, build_nested(idx, leaf), name=name)


def sen(
    rates: Optional[Mapping[str, float]] = None,
    dormancy: Optional[Mapping[str, float]] = None,
    n: int = SEN_PATH_LENGTH,
    rate: float = SEN_RATE,
    alpha: float = SEN_DORMANCY,
) -> DrbdModel:
    return _sen(n, rate, alpha).with_rates(rates, dormancy)


def sen_nospare(
    rates: Optional[Mapping[str, float]] = None,
    dormancy: Optional[Mapping[str, float]] = None,
    n: int = SEN_PATH_LENGTH,
    rate: float = SEN_RATE,
) -> DrbdModel:
    return _sen(n, rate, None).with_rates(rates, dormancy)


CASE_STUDIES: Dict[str, Callable[..., DrbdModel]] = {
    "dbw": dbw,
    "sen": sen,
    "sen-nospare": sen_nospare,
}

DEFAULT_GRIDS: Dict[str, Grid] = {
    "dbw": Grid(0.0, 10_000.0, 20),
    "sen": Grid(0.0, 200_000.0, 20),
    "sen-nospare": Grid(0.0, 200_000.0, 20),
}


def case_study(
    name: str,
    rates: Optional[Mapping[str, float]] = None,
    dormancy: Optional[Mapping[str, float]] = None,
) -> DrbdModel:
    try:
        build = CASE_STUDIES[name]
    except KeyError:
        raise ModelError(
            f"unknown case study '{name}'", hint=f"choose one of {', '.join(CASE_STUDIES)}"
        ) from None
    return build(rates=rates, dormancy=dormancy)
