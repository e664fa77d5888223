"""
DRBD algebra engine: application factory
"""
import logging
import os
from datetime import datetime, timezone

from flask import Flask, jsonify

from config import config

# Version info
APP_VERSION = os.environ.get("APP_VERSION", "2026.10")
BUILD_TIME = os.environ.get("BUILD_TIME", "")
GIT_COMMIT = os.environ.get("GIT_COMMIT", "")


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logging.getLogger("drbd").setLevel(getattr(logging, str(level).upper(), logging.INFO))


def create_app(config_name='default'):
    app = Flask(__name__)
    app.config.from_object(config[config_name])
    configure_logging(app.config.get("LOG_LEVEL", "INFO"))

    # Register blueprints
    from drbd.api import api_bp
    app.register_blueprint(api_bp)

    # Register CLI commands (flask drbd ... / python manage.py ...)
    from drbd.cli import cli
    app.cli.add_command(cli)

    @app.route('/healthz')
    def healthz():
        """Health check for load balancers and monitoring"""
        return jsonify({
            "status": "ok",
            "version": APP_VERSION,
            "timestamp": datetime.now(timezone.utc).isoformat()
        })

    @app.route('/version')
    def version():
        """Version and build info"""
        from drbd.rewrite import RuleMode, builtin_rules
        return jsonify({
            "version": APP_VERSION,
            "build_time": BUILD_TIME,
            "git_commit": GIT_COMMIT,
            "features": {
                "rules": len(builtin_rules(RuleMode.EXPAND)),
                "distributions": ["exp", "weibull"],
                "case_studies": ["dbw", "sen", "sen-nospare"],
                "monte_carlo": True,
            }
        })

    return app
