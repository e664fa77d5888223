"""
Reliability evaluation: Rel(t) = P(Q > t).

Closed forms for basic blocks and the series/parallel families; quadrature
for the after operator and the spare constructs. Spare activation is
fresh-start: once the main block fails at y the spare's residual life follows
its active law from y, so f(X_a | Y=y)(x) = f_active(x - y).

rel_expr composes these over a read-once structure function, the structural
form of the independence hypotheses behind the product formulas.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Hashable, Iterable, List, Mapping, Sequence, Union

import numpy as np

from drbd.algebra import (
    TEMPORAL,
    After,
    Always,
    And,
    Csp,
    Expr,
    Hsp,
    NaryAnd,
    NaryOr,
    Never,
    Or,
    Var,
    Wsp,
    block_occurrences,
)
from drbd.distributions import Distribution, SpareSpec
from drbd.errors import (
    DomainError,
    IndependenceError,
    PreconditionError,
    StructureError,
    UnsupportedCompositionError,
)
from drbd.models import DrbdModel
from drbd.structures import NestedIndex, fold_nested
from drbd.utils.quadrature import dyadic_points, quadrature

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
# Products longer than this are summed in log space
LOG_PRODUCT_THRESHOLD = 32


def _check_time(t: float) -> None:
    if math.isnan(t) or t < 0.0:
        raise DomainError(f"time must be >= 0, got {t}")


def _check_tol(tol: float) -> None:
    if not tol > 0.0:
        raise PreconditionError(f"tolerance must be > 0, got {tol}")


def _clamp(p: float) -> float:
    return min(1.0, max(0.0, p))


def _product(values: Sequence[float]) -> float:
    if len(values) <= LOG_PRODUCT_THRESHOLD:
        return math.prod(values)
    if any(v == 0.0 for v in values):
        return 0.0
    return math.exp(math.fsum(math.log(v) for v in values))


def _check_rels(rels: Sequence[float], kind: str) -> List[float]:
    rels = list(rels)
    if not rels:
        raise StructureError(f"{kind} reliability needs a nonempty list")
    for r in rels:
        if not (0.0 <= r <= 1.0):
            raise DomainError(f"reliability {r} outside [0, 1]")
    return rels


# ============ Basic blocks and structures ============

def rel_basic(d: Distribution, t: float) -> float:
    """1 - F(t)."""
    _check_time(t)
    return _clamp(d.sf(t))


def rel_series(rels: Sequence[float]) -> float:
    return _product(_check_rels(rels, "series"))


def rel_parallel(rels: Sequence[float]) -> float:
    rels = _check_rels(rels, "parallel")
    return _clamp(1.0 - _product([1.0 - r for r in rels]))


def rel_nested(idx: NestedIndex, leaf_rels: Mapping[Hashable, float]) -> float:
    """Alternating product / complement-product over the hierarchy."""

    def leaf(i: Hashable) -> float:
        try:
            return leaf_rels[i]
        except KeyError:
            raise StructureError(f"no leaf reliability for index {i!r}") from None

    return fold_nested(idx, leaf, rel_series, rel_parallel)


# ============ Temporal operator and spares ============

def _against_density(
    law: Distribution,
    h: Callable[[float], float],
    t: float,
    tol: float,
) -> float:
    """
    ∫₀ᵗ f(y) h(y) dy for the law's density f, integrated in probability space:
    y = F⁻¹(u) over u in [0, F(t)]. The integrand is bounded by h, so
    densities peaked far below t or singular at 0 cost nothing extra.
    """
    top = law.cdf(t)
    if top <= 0.0:
        return 0.0
    return quadrature(lambda u: h(min(law.ppf(u), t)), 0.0, top, tol).value


def rel_after(
    f_x: Union[Distribution, Callable[[float], float]],
    F_y: Union[Distribution, Callable[[float], float]],
    t: float,
    tol: float = DEFAULT_TOL,
) -> float:
    """
    Rel(X ▷ Y)(t) = 1 - ∫₀ᵗ f_X(x) F_Y(x) dx.

    f_x is X's law or its density; F_y is Y's law or its CDF. A bare density
    is integrated piecewise over dyadic subintervals of [0, t].
    """
    _check_time(t)
    _check_tol(tol)
    cdf_y = F_y.cdf if isinstance(F_y, Distribution) else F_y
    if isinstance(f_x, Distribution):
        return _clamp(1.0 - _against_density(f_x, cdf_y, t, tol))

    def integrand(x: float) -> float:
        p = cdf_y(x)
        return f_x(x) * p if p > 0.0 else 0.0

    res = quadrature(integrand, 0.0, t, tol, points=dyadic_points(t))
    return _clamp(1.0 - res.value)


def _fails_within(active: Distribution, length: float) -> float:
    """P(active residual life <= length)."""
    return active.cdf(length) if length > 0.0 else 0.0


def rel_wsp(main: Distribution, spare: SpareSpec, t: float, tol: float = DEFAULT_TOL) -> float:
    """
    Warm spare:
        1 - ∫₀ᵗ f_Y(y)(1 - F_Xd(y)) F_active(t - y) dy - ∫₀ᵗ f_Y(y) F_Xd(y) dy

    The first term is the active route (spare survived dormancy to y, then
    failed within t - y of activation); the second the dormant route. Both
    share the main density and are integrated together.
    """
    _check_time(t)
    _check_tol(tol)
    dormant = spare.dormant
    active = spare.active

    def routes(y: float) -> float:
        return dormant.sf(y) * _fails_within(active, t - y) + dormant.cdf(y)

    return _clamp(1.0 - _against_density(main, routes, t, tol))


def rel_csp(main: Distribution, active: Distribution, t: float, tol: float = DEFAULT_TOL) -> float:
    """Cold spare: 1 - ∫₀ᵗ f_Y(y) F_active(t - y) dy."""
    _check_time(t)
    _check_tol(tol)
    return _clamp(1.0 - _against_density(main, lambda y: _fails_within(active, t - y), t, tol))


def rel_hsp(main: Distribution, active: Distribution, t: float) -> float:
    """Hot spare behaves as OR of main and spare."""
    return rel_parallel([rel_basic(main, t), rel_basic(active, t)])


# ============ Composition ============

def check_read_once(e: Expr) -> None:
    for block, count in sorted(block_occurrences(e).items()):
        if count > 1:
            raise IndependenceError(block)


def rel_expr(model: DrbdModel, t: float, tol: float = DEFAULT_TOL) -> float:
    """Compositional Rel(t) of the model's read-once root."""
    _check_time(t)
    _check_tol(tol)
    check_read_once(model.root)
    return _rel(model, model.root, t, tol)


def _spare_main(model: DrbdModel, e) -> Distribution:
    if not isinstance(e.main, Var):
        raise UnsupportedCompositionError(
            "spare constructs over a compound main structure have no closed composition"
        )
    return model.law(e.main.name)


def _rel(model: DrbdModel, e: Expr, t: float, tol: float) -> float:
    if isinstance(e, Var):
        return rel_basic(model.law(e.name), t)
    if isinstance(e, Always):
        return 0.0
    if isinstance(e, Never):
        return 1.0
    if isinstance(e, And):
        return rel_series([_rel(model, e.left, t, tol), _rel(model, e.right, t, tol)])
    if isinstance(e, Or):
        return rel_parallel([_rel(model, e.left, t, tol), _rel(model, e.right, t, tol)])
    if isinstance(e, NaryAnd):
        return rel_series([_rel(model, a, t, tol) for a in e.args])
    if isinstance(e, NaryOr):
        return rel_parallel([_rel(model, a, t, tol) for a in e.args])
    if isinstance(e, Wsp):
        return rel_wsp(_spare_main(model, e), model.spare(e.spare), t, tol)
    if isinstance(e, Csp):
        return rel_csp(_spare_main(model, e), model.spare(e.spare).active, t, tol)
    if isinstance(e, Hsp):
        return rel_hsp(_spare_main(model, e), model.spare(e.spare).active, t)
    if isinstance(e, TEMPORAL):
        name = "after" if isinstance(e, After) else type(e).__name__.lower()
        raise UnsupportedCompositionError(
            f"temporal operator '{name}' outside a spare construct has no compositional formula"
        )
    raise UnsupportedCompositionError(f"cannot evaluate {e!r}")


def time_grid(t0: float, t1: float, steps: int) -> List[float]:
    """steps + 1 strictly increasing points from t0 to t1."""
    if t0 < 0.0:
        raise DomainError(f"grid start must be >= 0, got {t0}")
    if not t1 > t0:
        raise DomainError(f"grid end must exceed start, got [{t0}, {t1}]")
    if steps < 1:
        raise PreconditionError(f"grid needs at least one step, got {steps}")
    return [float(x) for x in np.linspace(t0, t1, steps + 1)]


def rel_curve(model: DrbdModel, grid: Iterable[float], tol: float = DEFAULT_TOL, workers: int = 1) -> List[float]:
    """rel_expr over a time grid; points fan out across threads."""
    grid = list(grid)
    check_read_once(model.root)
    if workers <= 1 or len(grid) <= 1:
        return [rel_expr(model, t, tol) for t in grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: rel_expr(model, t, tol), grid))
