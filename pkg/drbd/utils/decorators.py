"""Shared decorators for the CLI and the HTTP API."""
import logging
from functools import wraps

import click
from flask import current_app, jsonify

from drbd.errors import DrbdError, NonConvergenceError

logger = logging.getLogger(__name__)


def handle_errors(f):
    """Report engine errors on stderr and exit with their code"""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except DrbdError as e:
            click.echo(f"error: {e}", err=True)
            if isinstance(e, NonConvergenceError) and e.partial is not None:
                from drbd.dsl import format_expr
                click.echo(f"partial: {format_expr(e.partial)}", err=True)
            click.get_current_context().exit(e.exit_code)
    return decorated_function


def json_errors(f):
    """Turn engine errors into the {"ok": false, ...} envelope"""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except DrbdError as e:
            current_app.logger.info("%s failed: %s", f.__name__, e)
            return jsonify(e.to_dict()), 422 if e.exit_code == 3 else 400
        except (TypeError, ValueError) as e:
            return jsonify({"ok": False, "error": f"Bad request: {e}", "kind": "request"}), 400
    return decorated_function
