"""
API Blueprint - JSON endpoints over the engine
"""
import math
from typing import Any, Dict, List

from flask import Blueprint, current_app, jsonify, request

from drbd.dsl import format_expr, parse, parse_expr
from drbd.errors import PreconditionError
from drbd.montecarlo import McConfig, compare, estimate_curve
from drbd.reliability import rel_curve, time_grid
from drbd.rewrite import RuleMode, builtin_rules, check_equiv, simplify
from drbd.utils.config import Settings
from drbd.utils.decorators import json_errors

api_bp = Blueprint('api', __name__)


# ============ Helper Functions ============

def _payload() -> Dict[str, Any]:
    return request.get_json(silent=True) or {}


def _settings() -> Settings:
    return Settings.from_mapping(current_app.config)


def _number(value: float) -> Any:
    """JSON has no infinity; never-failing times and infinite z-scores go out as strings."""
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _model(payload: Dict[str, Any]):
    text = (payload.get("model") or "").strip()
    if not text:
        raise PreconditionError("Missing model")
    model = parse(text).to_model()
    return model.with_rates(payload.get("rates"), payload.get("dormancy"))


def _grid(payload: Dict[str, Any]) -> List[float]:
    if "t" in payload:
        return [float(payload["t"])]
    return time_grid(
        float(payload.get("t0", 0.0)),
        float(payload.get("t1", 0.0)),
        int(payload.get("steps", 10)),
    )


def _mc_config(payload: Dict[str, Any]) -> McConfig:
    s = _settings()
    n = int(payload.get("samples", s.samples))
    if n > current_app.config.get("API_MAX_SAMPLES", s.samples):
        raise PreconditionError(f"samples must be <= {current_app.config['API_MAX_SAMPLES']}")
    ci = payload.get("ci", s.ci_level)
    return McConfig(
        n=n,
        seed=int(payload.get("seed", s.seed)),
        ci_level=float(ci) / 100.0 if float(ci) > 1.0 else float(ci),
        workers=s.workers,
        chunk=s.chunk,
    )


# ============ Routes ============

@api_bp.route("/rel", methods=["POST"])
@json_errors
def rel():
    payload = _payload()
    model = _model(payload)
    grid = _grid(payload)
    s = _settings()
    rels = rel_curve(model, grid, float(payload.get("tol", s.tol)), s.workers)
    return jsonify({"ok": True, "model": model.name,
                    "rows": [{"t": t, "rel": r} for t, r in zip(grid, rels)]}), 200


@api_bp.route("/simplify", methods=["POST"])
@json_errors
def simplify_route():
    payload = _payload()
    if payload.get("expr"):
        root = parse_expr(payload["expr"])
    else:
        root = _model(payload).root
    mode = RuleMode.EXPAND if payload.get("expand") else RuleMode.REDUCE
    result = simplify(root, builtin_rules(mode), int(payload.get("max_steps", _settings().max_steps)))
    return jsonify({"ok": True, "input": format_expr(root), "result": format_expr(result)}), 200


@api_bp.route("/simulate", methods=["POST"])
@json_errors
def simulate():
    payload = _payload()
    model = _model(payload)
    cfg = _mc_config(payload)
    grid = _grid(payload)
    ests = estimate_curve(model, grid, cfg)
    return jsonify({
        "ok": True,
        "samples": cfg.n,
        "seed": cfg.seed,
        "rows": [{"t": t, "mc_rel": e.rel_hat, "mc_halfwidth": e.half_width} for t, e in zip(grid, ests)],
    }), 200


@api_bp.route("/compare", methods=["POST"])
@json_errors
def compare_route():
    payload = _payload()
    model = _model(payload)
    cfg = _mc_config(payload)
    sigmas = float(payload.get("sigmas", 3.0))
    rows = []
    for t in _grid(payload):
        c = compare(model, t, sigmas, cfg)
        rows.append({
            "t": t,
            "rel": c.algebraic,
            "mc_rel": c.mc.rel_hat,
            "mc_halfwidth": c.mc.half_width,
            "z": _number(c.z_score),
            "verdict": "consistent" if c.consistent else "discrepancy",
        })
    return jsonify({"ok": True, "consistent": all(r["verdict"] == "consistent" for r in rows),
                    "rows": rows}), 200


@api_bp.route("/equiv", methods=["POST"])
@json_errors
def equiv():
    payload = _payload()
    model = _model(payload)
    lhs, rhs = (payload.get("lhs") or "").strip(), (payload.get("rhs") or "").strip()
    if not lhs or not rhs:
        raise PreconditionError("Missing lhs or rhs")
    blocks = [b for b in model.block_ids if b not in model.spare_ids]
    s = _settings()
    verdict = check_equiv(
        parse_expr(lhs, blocks, model.spare_ids),
        parse_expr(rhs, blocks, model.spare_ids),
        model,
        int(payload.get("samples", s.samples)),
        int(payload.get("seed", s.seed)),
    )
    if verdict.equivalent:
        return jsonify({"ok": True, "equivalent": True, "samples": verdict.n_checked}), 200
    sample: Dict[str, Any] = {}
    for block, value in verdict.sample.items():
        if isinstance(value, tuple):
            sample[block] = {"dormant": _number(value.dormant), "offset": _number(value.offset)}
        else:
            sample[block] = _number(value)
    return jsonify({
        "ok": True,
        "equivalent": False,
        "index": verdict.index,
        "lhs": _number(verdict.lhs),
        "rhs": _number(verdict.rhs),
        "sample": sample,
    }), 200


@api_bp.route("/rules", methods=["GET"])
def rules():
    out: List[Dict[str, Any]] = []
    for r in builtin_rules(RuleMode.EXPAND):
        out.append({
            "name": r.name,
            "mode": r.mode.value,
            "lhs": format_expr(r.lhs),
            "rhs": format_expr(r.rhs),
            "side_condition": r.side_condition,
            "structural": r.structural,
        })
    return jsonify({"ok": True, "rules": out}), 200
