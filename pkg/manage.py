import os

from dotenv import load_dotenv
from flask.cli import ScriptInfo

load_dotenv()

from drbd import create_app  # noqa: E402
from drbd.cli import cli  # noqa: E402

env = os.environ.get("FLASK_ENV") or os.environ.get("ENV") or "production"
app = create_app(env)

if __name__ == "__main__":
    # commands read their settings from this app's config
    cli(obj=ScriptInfo(create_app=lambda: app))
