"""
Simplification of structure functions.

Rules are equations between patterns over metavariables. simplify rewrites the
innermost-leftmost redex with the first matching rule, canonicalizes, and
repeats until no rule applies. Commutativity, associativity and idempotence of
AND/OR chains are realized by the canonical form instead of by rewriting:
same-operator chains are flattened, deduplicated, sorted by canonical_key and
rebuilt right-nested.

Matching on And, Or and Simult nodes tries both argument orders.
"""
import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from drbd.algebra import (
    BINARY,
    COMMUTATIVE,
    NARY,
    SPARES,
    After,
    Always,
    And,
    Expr,
    InclAfter,
    NaryAnd,
    NaryOr,
    Never,
    Or,
    Simult,
    Var,
    _Ops,
    canonical_key,
    children,
    rebuild,
    size,
)
from drbd.distributions import Exponential, Weibull
from drbd.errors import ModelError, NonConvergenceError, PreconditionError
from drbd.models import DrbdModel
from drbd.montecarlo import Batch, McConfig, chunk_bounds, draw_batch, eval_batch, sample_at

logger = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 10_000


@dataclass(frozen=True)
class Meta(_Ops):
    """Pattern metavariable."""
    name: str


Pattern = Union[Expr, Meta]
Bindings = Dict[str, Expr]


class RuleMode(enum.Enum):
    REDUCE = "reduce"
    EXPAND = "expand"


# ============ Side conditions ============
# Sample-level predicates over the metavariable values; True where the
# sample satisfies the condition. Only sampled soundness checks consult
# them: the rules stay sound on tied and infinite values as well.

def _nonnegative(values: Dict[str, np.ndarray]) -> np.ndarray:
    mask = np.ones(len(next(iter(values.values()))), dtype=bool)
    for v in values.values():
        mask &= v >= 0.0
    return mask


def _distinct(values: Dict[str, np.ndarray]) -> np.ndarray:
    arrays = list(values.values())
    mask = np.ones(len(arrays[0]), dtype=bool)
    for i, a in enumerate(arrays):
        for b in arrays[i + 1:]:
            mask &= a != b
    return mask


SIDE_CONDITIONS: Dict[str, Callable[[Dict[str, np.ndarray]], np.ndarray]] = {
    "nonnegative": _nonnegative,
    "distinct": _distinct,
}


# ============ Rules ============

def metavariables(p: Pattern) -> List[str]:
    if isinstance(p, Meta):
        return [p.name]
    names: List[str] = []
    for k in children(p):
        for n in metavariables(k):
            if n not in names:
                names.append(n)
    return names


@dataclass(frozen=True)
class RewriteRule:
    name: str
    lhs: Pattern
    rhs: Pattern
    mode: RuleMode = RuleMode.REDUCE
    side_condition: Optional[str] = None
    # realized by canonicalization rather than fired as a rewrite
    structural: bool = False

    def __post_init__(self):
        missing = set(metavariables(self.rhs)) - set(metavariables(self.lhs))
        if missing:
            raise ModelError(f"rule {self.name}: rhs metavariables {sorted(missing)} not bound by lhs")
        if self.side_condition is not None and self.side_condition not in SIDE_CONDITIONS:
            raise ModelError(f"rule {self.name}: unknown side condition '{self.side_condition}'")

    def apply(self, e: Expr) -> Optional[Expr]:
        for bindings in match(self.lhs, e, {}):
            return instantiate(self.rhs, bindings)
        return None

    def describe(self) -> str:
        from drbd.dsl import format_expr

        cond = f"  [{self.side_condition}]" if self.side_condition else ""
        return f"{self.name}: {format_expr(self.lhs)} = {format_expr(self.rhs)}{cond}"


@dataclass(frozen=True)
class RuleSet:
    rules: Tuple[RewriteRule, ...]
    mode: RuleMode = RuleMode.REDUCE

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if self.mode is RuleMode.REDUCE:
            for r in self.rules:
                if size(r.rhs) > size(r.lhs):
                    raise ModelError(f"rule {r.name} grows terms and cannot join a reduce rule set")

    def __iter__(self) -> Iterator[RewriteRule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def names(self) -> List[str]:
        return [r.name for r in self.rules]

    def get(self, name: str) -> RewriteRule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)


X, Y, Z = Meta("X"), Meta("Y"), Meta("Z")
ALWAYS, NEVER = Always(), Never()

REDUCE_RULES: Tuple[RewriteRule, ...] = (
    RewriteRule("and_always", X * ALWAYS, ALWAYS, side_condition="nonnegative"),
    RewriteRule("and_assoc", (X * Y) * Z, X * (Y * Z), structural=True),
    RewriteRule("and_comm", X * Y, Y * X, structural=True),
    RewriteRule("and_idem", X * X, X),
    RewriteRule("and_never", X * NEVER, X),
    RewriteRule("or_always", X + ALWAYS, X, side_condition="nonnegative"),
    RewriteRule("or_assoc", (X + Y) + Z, X + (Y + Z), structural=True),
    RewriteRule("or_comm", X + Y, Y + X, structural=True),
    RewriteRule("or_idem", X + X, X),
    RewriteRule("or_never", X + NEVER, NEVER),
    RewriteRule("absorb", X + (X * Y), X),
    RewriteRule("after_swap_never", (X >> Y) + (Y >> X), NEVER, side_condition="distinct"),
    RewriteRule("simult_comm", Simult(X, Y), Simult(Y, X), structural=True),
)

# Factoring orientation of OR-over-AND keeps it from undoing AND-over-OR.
EXPAND_RULES: Tuple[RewriteRule, ...] = (
    RewriteRule("after_after", X >> (Y >> Z), ((X >> Y) + (X >> Z)) + (Y >> Z), RuleMode.EXPAND),
    RewriteRule("after_and", X >> (Y * Z), (X >> Y) * (X >> Z), RuleMode.EXPAND),
    RewriteRule("or_and_distrib", (X + Y) * (X + Z), X + (Y * Z), RuleMode.EXPAND),
    RewriteRule("and_or_distrib", X * (Y + Z), (X * Y) + (X * Z), RuleMode.EXPAND),
    RewriteRule("incl_after_split", InclAfter(X, Y), (X >> Y) * Simult(X, Y), RuleMode.EXPAND),
    RewriteRule("after_or", X >> (Y + Z), (X >> Y) + (X >> Z), RuleMode.EXPAND),
)

# Candidates that join a rule set only after passing verify_gated_rules.
GATED_RULES: Tuple[RewriteRule, ...] = (
    RewriteRule("after_after_and", X >> (Y >> Z), ((X >> Y) + (X >> Z)) * (Y >> Z), RuleMode.EXPAND),
)


def builtin_rules(mode: RuleMode = RuleMode.REDUCE, gate: Optional["GateReport"] = None) -> RuleSet:
    """The simplification catalogue for a mode.

    REDUCE holds only the size-decreasing rows plus the structural ones; EXPAND
    holds every row. Gated candidates are added when gate reports them sound.
    """
    rules = list(REDUCE_RULES)
    if mode is RuleMode.EXPAND:
        rules.extend(EXPAND_RULES)
        for candidate in GATED_RULES:
            if gate is not None and gate.passed(candidate.name):
                rules.append(candidate)
            elif gate is not None:
                logger.warning("rule %s failed its equivalence gate and is excluded", candidate.name)
    return RuleSet(tuple(rules), mode)


# ============ Matching ============

def match(p: Pattern, e: Expr, bindings: Bindings) -> Iterator[Bindings]:
    """All ways pattern p matches e extending bindings."""
    if isinstance(p, Meta):
        bound = bindings.get(p.name)
        if bound is None:
            yield {**bindings, p.name: e}
        elif bound == e:
            yield bindings
        return
    if type(p) is not type(e):
        return
    if isinstance(p, BINARY):
        orders = [(e.left, e.right)]
        if isinstance(p, COMMUTATIVE) and e.left != e.right:
            orders.append((e.right, e.left))
        for left, right in orders:
            for b in match(p.left, left, bindings):
                yield from match(p.right, right, b)
        return
    if isinstance(p, SPARES):
        if p.spare == e.spare:
            yield from match(p.main, e.main, bindings)
        return
    if isinstance(p, NARY):
        if len(p.args) != len(e.args):
            return
        yield from _match_seq(p.args, e.args, bindings)
        return
    if p == e:
        yield bindings


def _match_seq(ps, es, bindings: Bindings) -> Iterator[Bindings]:
    if not ps:
        yield bindings
        return
    for b in match(ps[0], es[0], bindings):
        yield from _match_seq(ps[1:], es[1:], b)


def instantiate(p: Pattern, bindings: Bindings) -> Expr:
    if isinstance(p, Meta):
        return bindings[p.name]
    kids = children(p)
    if not kids:
        return p
    return rebuild(p, tuple(instantiate(k, bindings) for k in kids))


# ============ Canonical form ============

_IDENTITY = {NaryAnd: Never, NaryOr: Always}
_ABSORBING = {NaryAnd: Always, NaryOr: Never}


def _chain(kind: type, e: Expr) -> List[Expr]:
    if isinstance(e, kind):
        return _chain(kind, e.left) + _chain(kind, e.right)
    return [e]


def _dedupe_sorted(items: List[Expr]) -> List[Expr]:
    unique: List[Expr] = []
    for i in items:
        if i not in unique:
            unique.append(i)
    return sorted(unique, key=canonical_key)


def canonicalize(e: Expr) -> Expr:
    """Canonical argument order and chain shape; never grows the term."""
    if isinstance(e, (And, Or)):
        kind = type(e)
        operands = _dedupe_sorted([canonicalize(a) for a in _chain(kind, e)])
        out = operands[-1]
        for a in reversed(operands[:-1]):
            out = kind(a, out)
        return out
    if isinstance(e, Simult):
        a, b = sorted((canonicalize(e.left), canonicalize(e.right)), key=canonical_key)
        return Simult(a, b)
    if isinstance(e, NARY):
        kind = type(e)
        flat: List[Expr] = []
        for a in e.args:
            a = canonicalize(a)
            flat.extend(a.args if isinstance(a, kind) else [a])
        if any(isinstance(a, _ABSORBING[kind]) for a in flat):
            return _ABSORBING[kind]()
        args = _dedupe_sorted([a for a in flat if not isinstance(a, _IDENTITY[kind])])
        if not args:
            return _IDENTITY[kind]()
        if len(args) == 1:
            return args[0]
        return kind(tuple(args))
    kids = children(e)
    if not kids:
        return e
    return rebuild(e, tuple(canonicalize(k) for k in kids))


# ============ Rewriting ============

def _step(e: Expr, rules: List[RewriteRule]) -> Optional[Tuple[Expr, str]]:
    """Rewrite the innermost-leftmost redex once; None at a normal form."""
    kids = children(e)
    for i, k in enumerate(kids):
        inner = _step(k, rules)
        if inner is not None:
            new, name = inner
            return rebuild(e, kids[:i] + (new,) + kids[i + 1:]), name
    for rule in rules:
        out = rule.apply(e)
        if out is not None:
            return out, rule.name
    return None


def simplify(e: Expr, rules: Optional[RuleSet] = None, max_steps: int = DEFAULT_MAX_STEPS) -> Expr:
    """Rewrite e to its normal form under rules (REDUCE catalogue by default).

    Raises:
        PreconditionError: If max_steps < 1.
        NonConvergenceError: If the step budget runs out; carries the partial term.
    """
    if max_steps < 1:
        raise PreconditionError(f"max_steps must be >= 1, got {max_steps}")
    if rules is None:
        rules = builtin_rules()
    active = [r for r in rules if not r.structural]

    current = canonicalize(e)
    steps = 0
    while True:
        result = _step(current, active)
        if result is None:
            logger.debug("normal form after %d steps (size %d)", steps, size(current))
            return current
        if steps >= max_steps:
            raise NonConvergenceError(
                f"no normal form within {max_steps} rewrite steps", partial=current
            )
        steps += 1
        current = canonicalize(result[0])
        logger.debug("step %d: %s", steps, result[1])


# ============ Sampled equivalence ============

@dataclass(frozen=True)
class Equivalent:
    n_checked: int
    n_excluded: int = 0

    @property
    def equivalent(self) -> bool:
        return True


@dataclass(frozen=True)
class Counterexample:
    sample: Dict[str, object]
    lhs: float
    rhs: float
    index: int

    @property
    def equivalent(self) -> bool:
        return False


EquivVerdict = Union[Equivalent, Counterexample]


def check_equiv(
    e1: Expr,
    e2: Expr,
    model: DrbdModel,
    n: int,
    seed: int,
    where: Optional[Callable[[Batch], np.ndarray]] = None,
) -> EquivVerdict:
    """Compare e1 and e2 on n samples drawn from the model's laws.

    where, if given, masks the samples to check; the others count as excluded.
    Samples come in the same chunked streams as the Monte Carlo estimator.
    """
    if n < 1:
        raise PreconditionError(f"sample count must be >= 1, got {n}")
    model.check_expr(e1)
    model.check_expr(e2)
    cfg = McConfig(n=n, seed=seed)
    excluded = 0
    offset = 0
    for chunk, m in chunk_bounds(cfg):
        batch = draw_batch(model, seed, chunk, m)
        a = eval_batch(e1, batch)
        b = eval_batch(e2, batch)
        differs = a != b
        if where is not None:
            keep = where(batch)
            excluded += int(np.count_nonzero(~keep))
            differs &= keep
        hits = np.flatnonzero(differs)
        if hits.size:
            i = int(hits[0])
            return Counterexample(sample_at(batch, i), float(a[i]), float(b[i]), offset + i)
        offset += m
    return Equivalent(n_checked=n - excluded, n_excluded=excluded)


# Distribution models for soundness checks over the metavariables X, Y, Z.
GATE_MODELS: Dict[str, Dict[str, object]] = {
    "exp(1)": {"X": Exponential(1.0), "Y": Exponential(1.0), "Z": Exponential(1.0)},
    "exp(0.1)/exp(10)": {"X": Exponential(0.1), "Y": Exponential(10.0), "Z": Exponential(0.1)},
    "weibull(2,1)": {"X": Weibull(2.0, 1.0), "Y": Weibull(2.0, 1.0), "Z": Weibull(2.0, 1.0)},
}


def _as_expr(p: Pattern) -> Expr:
    return instantiate(p, {name: Var(name) for name in metavariables(p)})


def check_rule(rule: RewriteRule, model_name: str, n: int, seed: int) -> EquivVerdict:
    """Sampled soundness of one rule under one of the GATE_MODELS."""
    lhs, rhs = _as_expr(rule.lhs), _as_expr(rule.rhs)
    model = DrbdModel(GATE_MODELS[model_name], Never(), name=model_name)
    where = None
    if rule.side_condition is not None:
        names = metavariables(rule.lhs)
        predicate = SIDE_CONDITIONS[rule.side_condition]

        def where(batch: Batch) -> np.ndarray:
            return predicate({name: batch[name] for name in names})

    return check_equiv(lhs, rhs, model, n, seed, where=where)


@dataclass(frozen=True)
class GateReport:
    n: int
    seed: int
    verdicts: Dict[str, Dict[str, EquivVerdict]] = field(default_factory=dict)

    def passed(self, rule_name: str) -> bool:
        results = self.verdicts.get(rule_name)
        return bool(results) and all(v.equivalent for v in results.values())


def verify_gated_rules(n: int = 1_000_000, seed: int = 0) -> GateReport:
    """Run every gated candidate through check_rule under all GATE_MODELS."""
    verdicts: Dict[str, Dict[str, EquivVerdict]] = {}
    for rule in GATED_RULES:
        verdicts[rule.name] = {m: check_rule(rule, m, n, seed) for m in GATE_MODELS}
        logger.info(
            "gate %s: %s",
            rule.name,
            ", ".join(f"{m}={'pass' if v.equivalent else 'fail'}" for m, v in verdicts[rule.name].items()),
        )
    return GateReport(n=n, seed=seed, verdicts=verdicts)
