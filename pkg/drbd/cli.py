"""
Command-line surface.

    python manage.py rel model.drbd --t1 1000 --steps 10
    python manage.py simplify model.drbd --expand
    python manage.py simulate model.drbd --t1 1000 --samples 1000000 --workers 8
    python manage.py compare model.drbd --t 500 --sigmas 3
    python manage.py equiv model.drbd "X + Y" "Y + X"
    python manage.py rules --verify
    python manage.py casestudy sen --rate L1_01=2e-5

CSV goes to standard output, diagnostics to standard error. Exit codes: 0 ok,
2 parse/semantic/model error, 3 numeric error, 4 oracle discrepancy or
counterexample.
"""
import csv
import io
import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import click
from flask.cli import NoAppException, ScriptInfo

from drbd.casestudies import CASE_STUDIES, DEFAULT_GRIDS, case_study
from drbd.dsl import format_expr, parse, parse_expr
from drbd.errors import ParseError
from drbd.models import DrbdModel
from drbd.montecarlo import McConfig, compare, estimate_curve
from drbd.reliability import rel_curve, rel_expr, time_grid
from drbd.rewrite import (
    GATE_MODELS,
    RuleMode,
    builtin_rules,
    check_equiv,
    check_rule,
    simplify as simplify_expr,
    verify_gated_rules,
)
from drbd.utils.config import Settings, get_settings
from drbd.utils.decorators import handle_errors

logger = logging.getLogger(__name__)

DISCREPANCY_EXIT = 4
CI_CHOICES = {"95": 0.95, "99": 0.99}


def fmt(x: float) -> str:
    """Nine significant digits; integers print without a decimal point."""
    return f"{x:.9g}"


def write_csv(header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    click.echo(buf.getvalue(), nl=False)


def _assignments(ctx, param, values: Tuple[str, ...]) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for item in values:
        block, sep, number = item.partition("=")
        if not sep or not block:
            raise click.BadParameter(f"expected <id>=<value>, got '{item}'")
        try:
            value = float(number)
        except ValueError:
            raise click.BadParameter(f"'{number}' is not a number") from None
        if param.name == "rate" and not value > 0.0:
            raise click.BadParameter(f"rate for {block} must be positive")
        out[block] = value
    return out


def _settings(ctx: click.Context) -> Settings:
    settings = ctx.meta.get("drbd.settings")
    if settings is None:
        info = ctx.find_object(ScriptInfo)
        if info is not None:
            try:
                settings = Settings.from_mapping(info.load_app().config)
            except NoAppException:
                settings = None
        settings = settings or get_settings()
        ctx.meta["drbd.settings"] = settings
    return settings


def _mc_config(ctx: click.Context, samples, seed, ci, workers) -> McConfig:
    s = _settings(ctx)
    return McConfig(
        n=samples if samples is not None else s.samples,
        seed=seed if seed is not None else s.seed,
        ci_level=CI_CHOICES[ci] if ci is not None else s.ci_level,
        workers=workers if workers is not None else s.workers,
        chunk=s.chunk,
    )


def _read(model_file) -> str:
    try:
        return model_file.read()
    except UnicodeDecodeError as exc:
        before = exc.object[:exc.start]
        line = before.count(b"\n") + 1
        column = exc.start - (before.rfind(b"\n") + 1) + 1
        raise ParseError(f"model file is not valid UTF-8 ({exc.reason})", line, column) from None


def _load(model_file, rate: Dict[str, float], dormancy: Dict[str, float]) -> DrbdModel:
    model = parse(_read(model_file)).to_model()
    return model.with_rates(rate, dormancy)


# ---- shared options ----

def grid_options(f):
    f = click.option("--steps", type=int, default=10, show_default=True, help="Grid intervals.")(f)
    f = click.option("--t1", type=float, required=True, help="Grid end.")(f)
    f = click.option("--t0", type=float, default=0.0, show_default=True, help="Grid start.")(f)
    return f


def mc_options(f):
    f = click.option("--workers", type=int, default=None, help="Worker threads.")(f)
    f = click.option("--ci", type=click.Choice(sorted(CI_CHOICES)), default=None, help="Confidence level (%).")(f)
    f = click.option("--seed", type=int, default=None, envvar="DRBD_SEED", help="Root seed [env DRBD_SEED].")(f)
    f = click.option("--samples", type=int, default=None, help="Monte Carlo sample count.")(f)
    return f


def override_options(f):
    f = click.option("--dormancy", multiple=True, callback=_assignments, metavar="ID=ALPHA",
                     help="Dormancy factor override for a spare.")(f)
    f = click.option("--rate", multiple=True, callback=_assignments, metavar="ID=LAMBDA",
                     help="Exponential rate override for a block.")(f)
    return f


@click.group(name="drbd")
@click.option("-v", "--verbose", count=True, help="Log to stderr (-v info, -vv debug).")
@click.pass_context
def cli(ctx, verbose):
    """DRBD structure functions: reliability, simplification and simulation."""
    if verbose:
        logging.basicConfig(
            level=logging.DEBUG if verbose > 1 else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
        )


def _curve_rows(model: DrbdModel, grid: List[float], tol: float, workers: int,
                mc: Optional[McConfig]) -> Tuple[List[str], List[List[float]]]:
    rels = rel_curve(model, grid, tol, workers)
    if mc is None:
        return ["t", "rel"], [[t, r] for t, r in zip(grid, rels)]
    ests = estimate_curve(model, grid, mc)
    return (
        ["t", "rel", "mc_rel", "mc_halfwidth"],
        [[t, r, e.rel_hat, e.half_width] for t, r, e in zip(grid, rels, ests)],
    )


@cli.command()
@click.argument("model_file", type=click.File("r", encoding="utf-8"))
@grid_options
@click.option("--tol", type=float, default=None, help="Absolute quadrature tolerance.")
@click.option("--mc", is_flag=True, help="Add Monte Carlo columns.")
@mc_options
@override_options
@click.pass_context
@handle_errors
def rel(ctx, model_file, t0, t1, steps, tol, mc, samples, seed, ci, workers, rate, dormancy):
    """Reliability curve of a read-once model as CSV."""
    s = _settings(ctx)
    model = _load(model_file, rate, dormancy)
    grid = time_grid(t0, t1, steps)
    cfg = _mc_config(ctx, samples, seed, ci, workers) if mc else None
    header, rows = _curve_rows(model, grid, tol or s.tol, workers or s.workers, cfg)
    write_csv(header, rows)


@cli.command()
@click.argument("model_file", type=click.File("r", encoding="utf-8"), required=False)
@click.option("-e", "--expr", "expr_text", default=None, help="Simplify a bare expression instead.")
@click.option("--expand", is_flag=True, help="Also apply the distributive expansion rules.")
@click.option("--max-steps", type=int, default=None, help="Rewrite step budget.")
@click.pass_context
@handle_errors
def simplify(ctx, model_file, expr_text, expand, max_steps):
    """Print the normal form of the system expression."""
    if (model_file is None) == (expr_text is None):
        raise click.UsageError("give either MODEL_FILE or --expr")
    root = parse_expr(expr_text) if expr_text is not None else parse(_read(model_file)).system
    rules = builtin_rules(RuleMode.EXPAND if expand else RuleMode.REDUCE)
    result = simplify_expr(root, rules, max_steps or _settings(ctx).max_steps)
    click.echo(format_expr(result))


@cli.command()
@click.argument("model_file", type=click.File("r", encoding="utf-8"))
@grid_options
@mc_options
@override_options
@click.pass_context
@handle_errors
def simulate(ctx, model_file, t0, t1, steps, samples, seed, ci, workers, rate, dormancy):
    """Monte Carlo reliability curve as CSV; any model, read-once or not."""
    model = _load(model_file, rate, dormancy)
    cfg = _mc_config(ctx, samples, seed, ci, workers)
    grid = time_grid(t0, t1, steps)
    ests = estimate_curve(model, grid, cfg)
    write_csv(["t", "mc_rel", "mc_halfwidth"], [[t, e.rel_hat, e.half_width] for t, e in zip(grid, ests)])


@cli.command(name="compare")
@click.argument("model_file", type=click.File("r", encoding="utf-8"))
@click.option("--t", "times", type=float, multiple=True, help="Comparison time (repeatable).")
@click.option("--t0", type=float, default=0.0, show_default=True)
@click.option("--t1", type=float, default=None)
@click.option("--steps", type=int, default=10, show_default=True)
@click.option("--sigmas", type=float, default=3.0, show_default=True, help="Gate in standard errors.")
@click.option("--tol", type=float, default=None)
@mc_options
@override_options
@click.pass_context
@handle_errors
def compare_cmd(ctx, model_file, times, t0, t1, steps, sigmas, tol, samples, seed, ci, workers, rate, dormancy):
    """Algebraic reliability against the Monte Carlo oracle; exit 4 on discrepancy."""
    s = _settings(ctx)
    model = _load(model_file, rate, dormancy)
    cfg = _mc_config(ctx, samples, seed, ci, workers)
    if times:
        grid = sorted(set(times))
    elif t1 is not None:
        grid = time_grid(t0, t1, steps)
    else:
        raise click.UsageError("give --t or --t1")
    tol = tol or s.tol

    rows = []
    failed = 0
    for t in grid:
        c = compare(model, t, sigmas, cfg, formula=lambda m, at: rel_expr(m, at, tol))
        failed += not c.consistent
        rows.append([t, c.algebraic, c.mc.rel_hat, c.mc.half_width, c.z_score,
                     "consistent" if c.consistent else "discrepancy"])
    write_csv(["t", "rel", "mc_rel", "mc_halfwidth", "z", "verdict"], rows)
    if failed:
        click.echo(f"{failed} of {len(grid)} points outside {sigmas:g} sigma", err=True)
        ctx.exit(DISCREPANCY_EXIT)


@cli.command()
@click.argument("model_file", type=click.File("r", encoding="utf-8"))
@click.argument("lhs")
@click.argument("rhs")
@click.option("--samples", type=int, default=None)
@click.option("--seed", type=int, default=None, envvar="DRBD_SEED")
@click.pass_context
@handle_errors
def equiv(ctx, model_file, lhs, rhs, samples, seed):
    """Sampled equivalence of two expressions over the model's blocks."""
    s = _settings(ctx)
    model = parse(_read(model_file)).to_model()
    blocks = [b for b in model.block_ids if b not in model.spare_ids]
    e1 = parse_expr(lhs, blocks, model.spare_ids)
    e2 = parse_expr(rhs, blocks, model.spare_ids)
    n = samples or s.samples
    verdict = check_equiv(e1, e2, model, n, seed if seed is not None else s.seed)
    if verdict.equivalent:
        click.echo(f"equivalent on {verdict.n_checked} samples")
        return
    values = ", ".join(f"{k}={v}" for k, v in sorted(verdict.sample.items()))
    click.echo(f"counterexample at sample {verdict.index}: lhs={verdict.lhs!r} rhs={verdict.rhs!r}")
    click.echo(f"  {values}")
    ctx.exit(DISCREPANCY_EXIT)


@cli.command()
@click.option("--verify", is_flag=True, help="Check every rule by sampling, and rerun the gate.")
@click.option("--samples", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=None, envvar="DRBD_SEED")
@click.pass_context
@handle_errors
def rules(ctx, verify, samples, seed):
    """List the simplification rules."""
    catalogue = builtin_rules(RuleMode.EXPAND)
    if not verify:
        for r in catalogue:
            click.echo(f"{r.mode.value:<7} {r.describe()}")
        return

    seed = seed if seed is not None else _settings(ctx).seed
    unsound = 0
    rows = []
    for r in catalogue:
        for m in GATE_MODELS:
            v = check_rule(r, m, samples, seed)
            unsound += not v.equivalent
            rows.append([r.name, m, "pass" if v.equivalent else "fail"])
    report = verify_gated_rules(samples, seed)
    for name, verdicts in report.verdicts.items():
        for m, v in verdicts.items():
            rows.append([f"{name} (gated)", m, "pass" if v.equivalent else "fail"])
    write_csv(["rule", "model", "verdict"], rows)
    if unsound:
        ctx.exit(DISCREPANCY_EXIT)


@cli.command()
@click.argument("name", type=click.Choice(sorted(CASE_STUDIES)))
@click.option("--t0", type=float, default=None)
@click.option("--t1", type=float, default=None)
@click.option("--steps", type=int, default=None)
@click.option("--tol", type=float, default=None)
@click.option("--mc", is_flag=True, help="Add Monte Carlo columns.")
@mc_options
@override_options
@click.pass_context
@handle_errors
def casestudy(ctx, name, t0, t1, steps, tol, mc, samples, seed, ci, workers, rate, dormancy):
    """Reliability curve of a built-in case study as CSV."""
    s = _settings(ctx)
    model = case_study(name, rate, dormancy)
    default = DEFAULT_GRIDS[name]
    grid = time_grid(
        default.t0 if t0 is None else t0,
        default.t1 if t1 is None else t1,
        default.steps if steps is None else steps,
    )
    cfg = _mc_config(ctx, samples, seed, ci, workers) if mc else None
    header, rows = _curve_rows(model, grid, tol or s.tol, workers or s.workers, cfg)
    write_csv(header, rows)
