"""
Monte Carlo oracle for Rel(t).

Sample indices are cut into fixed-size chunks. Every (chunk, block, component)
triple owns a Philox counter-based stream derived from the root seed, so the
draws for a sample index never depend on how chunks are spread over workers.
Workers only return integer tallies, which are summed.
"""
import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import norm

from drbd.algebra import (
    After,
    Always,
    And,
    Csp,
    Expr,
    Hsp,
    InclAfter,
    NaryAnd,
    NaryOr,
    Never,
    Or,
    Simult,
    SpareDraw,
    Var,
    Wsp,
)
from drbd.distributions import Distribution, SpareSpec
from drbd.errors import ModelError, PreconditionError, SamplingError
from drbd.models import DrbdModel

logger = logging.getLogger(__name__)

DEFAULT_CHUNK = 8192
CI_LEVELS = (0.95, 0.99)
DORMANT, ACTIVE = 0, 1

_SEED_MASK = (1 << 64) - 1


class SpareBatch(NamedTuple):
    dormant: np.ndarray
    offset: np.ndarray


# block-id -> array of failure instants, or SpareBatch for spare blocks
Batch = Mapping[str, Union[np.ndarray, SpareBatch]]


@dataclass(frozen=True)
class McConfig:
    n: int
    seed: int
    ci_level: float = 0.99
    workers: int = 1
    chunk: int = DEFAULT_CHUNK

    def __post_init__(self):
        if self.n < 1:
            raise PreconditionError(f"sample count must be >= 1, got {self.n}")
        if self.ci_level not in CI_LEVELS:
            raise PreconditionError(f"confidence level must be one of {CI_LEVELS}, got {self.ci_level}")
        if self.workers < 1:
            raise PreconditionError(f"workers must be >= 1, got {self.workers}")
        if self.chunk < 1:
            raise PreconditionError(f"chunk size must be >= 1, got {self.chunk}")

    @property
    def z(self) -> float:
        return float(norm.ppf(0.5 + self.ci_level / 2.0))


@dataclass(frozen=True)
class McEstimate:
    rel_hat: float
    half_width: float
    n_effective: int


# ============ Streams and sampling ============

def _block_key(block: str) -> int:
    return int.from_bytes(hashlib.blake2b(block.encode("utf-8"), digest_size=8).digest(), "little")


def block_stream(seed: int, chunk: int, block: str, component: int = 0) -> np.random.Generator:
    """Counter-based stream for one block's draws within one chunk."""
    ss = np.random.SeedSequence(entropy=seed & _SEED_MASK, spawn_key=(chunk, _block_key(block), component))
    return np.random.Generator(np.random.Philox(ss))


def _checked(block: str, values: np.ndarray, n: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != (n,):
        raise SamplingError(block, f"returned shape {values.shape}, expected ({n},)")
    if np.isnan(values).any():
        raise SamplingError(block, "returned NaN")
    if (values < 0.0).any():
        raise SamplingError(block, "returned a negative failure time")
    return values


def _draw_law(block: str, law: Distribution, rng: np.random.Generator, n: int) -> np.ndarray:
    try:
        values = law.sample(rng, n)
    except SamplingError:
        raise
    except Exception as e:
        raise SamplingError(block, f"raised {e}") from e
    return _checked(block, values, n)


def draw_sample(model: DrbdModel, rng: np.random.Generator) -> Dict[str, Union[float, SpareDraw]]:
    """One sample: a draw per block, a (dormant, active-offset) pair per spare."""
    sample: Dict[str, Union[float, SpareDraw]] = {}
    for block in model.block_ids:
        law = model.blocks[block]
        if isinstance(law, SpareSpec):
            dormant = _draw_law(block, law.dormant, rng, 1)[0]
            offset = _draw_law(block, law.active, rng, 1)[0]
            sample[block] = SpareDraw(float(dormant), float(offset))
        else:
            sample[block] = float(_draw_law(block, law, rng, 1)[0])
    return sample


def draw_batch(model: DrbdModel, seed: int, chunk: int, n: int) -> Dict[str, Union[np.ndarray, SpareBatch]]:
    """n draws per block for the given chunk index."""
    batch: Dict[str, Union[np.ndarray, SpareBatch]] = {}
    for block in model.block_ids:
        law = model.blocks[block]
        if isinstance(law, SpareSpec):
            batch[block] = SpareBatch(
                _draw_law(block, law.dormant, block_stream(seed, chunk, block, DORMANT), n),
                _draw_law(block, law.active, block_stream(seed, chunk, block, ACTIVE), n),
            )
        else:
            batch[block] = _draw_law(block, law, block_stream(seed, chunk, block), n)
    return batch


def sample_at(batch: Batch, i: int) -> Dict[str, Union[float, SpareDraw]]:
    """Row i of a batch as a Sample."""
    out: Dict[str, Union[float, SpareDraw]] = {}
    for block, values in batch.items():
        if isinstance(values, SpareBatch):
            out[block] = SpareDraw(float(values.dormant[i]), float(values.offset[i]))
        else:
            out[block] = float(values[i])
    return out


# ============ Vectorized structure function ============

def _after(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.where(x > y, x, np.inf)


def _simult(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.where(x == y, x, np.inf)


def _incl_after(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.where(x >= y, x, np.inf)


def _wsp(y: np.ndarray, d: SpareBatch) -> np.ndarray:
    x_a = np.where(d.dormant > y, y + d.offset, np.inf)
    return np.minimum(_after(x_a, y), _after(y, d.dormant))


def _csp(y: np.ndarray, d: SpareBatch) -> np.ndarray:
    x = y + d.offset
    return np.where(y < x, x, np.inf)


def _hsp(y: np.ndarray, d: SpareBatch) -> np.ndarray:
    return np.maximum(y, d.offset)


_VEC_BINARY: Dict[type, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    And: np.minimum,
    Or: np.maximum,
    After: _after,
    Simult: _simult,
    InclAfter: _incl_after,
}

_VEC_SPARE = {Wsp: _wsp, Csp: _csp, Hsp: _hsp}


def _batch_len(batch: Batch) -> int:
    for values in batch.values():
        return len(values.dormant) if isinstance(values, SpareBatch) else len(values)
    return 0


def eval_batch(e: Expr, batch: Batch) -> np.ndarray:
    """Vectorized counterpart of algebra.eval_expr over a batch of samples."""
    if isinstance(e, Var):
        values = batch.get(e.name)
        if values is None:
            raise ModelError(f"block '{e.name}' is not bound in the sample")
        if isinstance(values, SpareBatch):
            raise ModelError(f"spare block '{e.name}' referenced outside a spare construct")
        return values
    if isinstance(e, Always):
        return np.zeros(_batch_len(batch))
    if isinstance(e, Never):
        return np.full(_batch_len(batch), np.inf)
    op = _VEC_BINARY.get(type(e))
    if op is not None:
        return op(eval_batch(e.left, batch), eval_batch(e.right, batch))
    spare_op = _VEC_SPARE.get(type(e))
    if spare_op is not None:
        draw = batch.get(e.spare)
        if not isinstance(draw, SpareBatch):
            raise ModelError(f"block '{e.spare}' is used as a spare but is not declared as one")
        return spare_op(eval_batch(e.main, batch), draw)
    if isinstance(e, NaryAnd):
        return reduce(np.minimum, (eval_batch(a, batch) for a in e.args))
    if isinstance(e, NaryOr):
        return reduce(np.maximum, (eval_batch(a, batch) for a in e.args))
    raise ModelError(f"not an expression: {e!r}")


# ============ Estimation ============

def chunk_bounds(cfg: McConfig) -> List[Tuple[int, int]]:
    """(chunk index, chunk length) covering sample indices 0..n-1."""
    full, rest = divmod(cfg.n, cfg.chunk)
    out = [(c, cfg.chunk) for c in range(full)]
    if rest:
        out.append((full, rest))
    return out


def _map_chunks(cfg: McConfig, work: Callable[[int, int], np.ndarray]) -> np.ndarray:
    """Run work(chunk, length) over all chunks and sum the integer tallies."""
    chunks = chunk_bounds(cfg)
    if cfg.workers <= 1 or len(chunks) <= 1:
        tallies = [work(c, m) for c, m in chunks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            tallies = list(pool.map(lambda cm: work(*cm), chunks))
    return np.sum(np.stack(tallies), axis=0)


def confidence(successes: int, n: int, cfg: McConfig) -> McEstimate:
    """Normal-approximation interval; Wilson near 0 and 1."""
    p = successes / n
    z = cfg.z
    if p <= 10.0 / n or p >= 1.0 - 10.0 / n:
        z2n = z * z / n
        center = (p + z2n / 2.0) / (1.0 + z2n)
        half = z / (1.0 + z2n) * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n))
        hw = max(p - (center - half), (center + half) - p)
        logger.debug("wilson interval at p=%g, n=%d: half-width %g", p, n, hw)
    else:
        hw = z * math.sqrt(p * (1.0 - p) / n)
    return McEstimate(rel_hat=p, half_width=hw, n_effective=n)


def estimate_curve(model: DrbdModel, grid: Sequence[float], cfg: McConfig) -> List[McEstimate]:
    """Rel(t) estimates on a grid, all from the same samples."""
    model.check_expr(model.root)
    ts = np.asarray(list(grid), dtype=float)
    if ts.size and (np.isnan(ts).any() or (ts < 0.0).any()):
        raise PreconditionError("estimation times must be >= 0")

    def work(chunk: int, m: int) -> np.ndarray:
        times = eval_batch(model.root, draw_batch(model, cfg.seed, chunk, m))
        return np.array([np.count_nonzero(times > t) for t in ts], dtype=np.int64)

    tallies = _map_chunks(cfg, work)
    logger.debug("estimated %s over %d samples at %d times", model.name, cfg.n, len(ts))
    return [confidence(int(k), cfg.n, cfg) for k in tallies]


def estimate_rel(model: DrbdModel, t: float, cfg: McConfig) -> McEstimate:
    """Fraction of samples whose system failure time exceeds t."""
    return estimate_curve(model, [t], cfg)[0]


@dataclass(frozen=True)
class Comparison:
    t: float
    algebraic: float
    mc: McEstimate
    z_score: float
    consistent: bool


def compare(
    model: DrbdModel,
    t: float,
    tol_sigmas: float,
    cfg: McConfig,
    formula: Optional[Callable[[DrbdModel, float], float]] = None,
) -> Comparison:
    """Algebraic Rel(t) against the oracle within tol_sigmas standard errors."""
    if formula is None:
        from drbd.reliability import rel_expr as formula
    algebraic = formula(model, t)
    est = estimate_rel(model, t, cfg)
    sigma = est.half_width / cfg.z
    diff = algebraic - est.rel_hat
    if sigma > 0.0:
        z_score = diff / sigma
    else:
        z_score = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return Comparison(
        t=t,
        algebraic=algebraic,
        mc=est,
        z_score=z_score,
        consistent=abs(diff) <= tol_sigmas * sigma,
    )


class RouteTally(NamedTuple):
    dormant: int
    active: int
    both: int
    n: int


def spare_routes(model: DrbdModel, node: Wsp, t: float, cfg: McConfig) -> RouteTally:
    """How warm-spare failures by t split between the dormant and active routes."""
    model.check_expr(node)

    def work(chunk: int, m: int) -> np.ndarray:
        batch = draw_batch(model, cfg.seed, chunk, m)
        y = eval_batch(node.main, batch)
        d = batch[node.spare]
        x_a = np.where(d.dormant > y, y + d.offset, np.inf)
        active = _after(x_a, y) <= t
        dormant = _after(y, d.dormant) <= t
        return np.array(
            [np.count_nonzero(dormant), np.count_nonzero(active), np.count_nonzero(dormant & active)],
            dtype=np.int64,
        )

    tally = _map_chunks(cfg, work)
    return RouteTally(int(tally[0]), int(tally[1]), int(tally[2]), cfg.n)
