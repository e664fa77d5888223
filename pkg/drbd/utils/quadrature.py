"""Adaptive Simpson integration with an error estimate and a hard depth cap."""
import logging
from collections.abc import Callable, Iterable
from typing import List, NamedTuple

from drbd.errors import NumericError, PreconditionError

logger = logging.getLogger(__name__)

MAX_DEPTH = 50
MIN_DEPTH = 3
# Halvings of [0, b] in dyadic_points; b * 2^-52 is below double resolution of b
DYADIC_LEVELS = 52


class QuadResult(NamedTuple):
    value: float
    error: float


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    """h/3 * (f(a) + 4 f(m) + f(b)) with h the half-width."""
    return h / 3.0 * (fa + 4.0 * fm + fb)


def dyadic_points(b: float, levels: int = DYADIC_LEVELS) -> List[float]:
    """Breakpoints b/2, b/4, ... b/2^levels inside [0, b]."""
    return [b / 2.0 ** k for k in range(1, levels + 1)]


def quadrature(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-9,
    max_depth: int = MAX_DEPTH,
    points: Iterable[float] = (),
) -> QuadResult:
    """Integrate f over [a, b] to absolute tolerance tol.

    Args:
        f: Integrand, finite on [a, b].
        a: Lower bound.
        b: Upper bound, b >= a.
        tol: Absolute error tolerance.
        max_depth: Subdivision depth cap.
        points: Breakpoints. Each piece of [a, b] between them is integrated
            on its own with an equal share of tol, so a feature narrower than
            the first sampling grid is still seen when a point sits near it.

    Returns:
        QuadResult(value, error) with error the summed Richardson estimate.

    Raises:
        PreconditionError: If a > b or tol <= 0.
        NumericError: If some subinterval still misses its tolerance at max_depth.
    """
    if not tol > 0.0:
        raise PreconditionError(f"quadrature tolerance must be > 0, got {tol}")
    if a > b:
        raise PreconditionError(f"quadrature bounds out of order: [{a}, {b}]")
    if a == b:
        return QuadResult(0.0, 0.0)

    edges = [a] + sorted({p for p in points if a < p < b}) + [b]
    piece_tol = tol / (len(edges) - 1)
    intervals = 0

    def _adaptive(a: float, b: float, fa: float, fm: float, fb: float,
                  whole: float, tol: float, depth: int) -> QuadResult:
        nonlocal intervals
        intervals += 1
        m = (a + b) / 2.0
        h = (b - a) / 2.0
        lm = (a + m) / 2.0
        rm = (m + b) / 2.0
        flm = f(lm)
        frm = f(rm)
        left = _simpson(fa, flm, fm, h / 2.0)
        right = _simpson(fm, frm, fb, h / 2.0)
        delta = (left + right - whole) / 15.0

        if depth >= MIN_DEPTH and abs(delta) <= tol:
            return QuadResult(left + right + delta, abs(delta))
        if depth >= max_depth or lm <= a or rm >= b:
            raise NumericError(
                f"adaptive Simpson did not reach tolerance {tol:.3g} on [{a}, {b}] at depth {depth}",
                estimate=abs(delta),
            )
        lv, le = _adaptive(a, m, fa, flm, fm, left, tol / 2.0, depth + 1)
        rv, re = _adaptive(m, b, fm, frm, fb, right, tol / 2.0, depth + 1)
        return QuadResult(lv + rv, le + re)

    value = error = 0.0
    fb = f(edges[0])
    for lo, hi in zip(edges, edges[1:]):
        fa, fb = fb, f(hi)
        m = (lo + hi) / 2.0
        fm = f(m)
        piece = _adaptive(lo, hi, fa, fm, fb, _simpson(fa, fm, fb, (hi - lo) / 2.0), piece_tol, 0)
        value += piece.value
        error += piece.error
    logger.debug("quadrature [%g, %g]: %d pieces, %d intervals, error %.3g",
                 a, b, len(edges) - 1, intervals, error)
    return QuadResult(value, error)
