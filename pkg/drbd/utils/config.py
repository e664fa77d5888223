"""
Typed runtime settings resolved from the environment config classes.

CLI flags override these; the seed falls back to DRBD_SEED.
"""
import os
from dataclasses import dataclass, replace
from typing import Any, Mapping, Optional

from config import config


@dataclass(frozen=True)
class Settings:
    seed: int
    tol: float
    samples: int
    workers: int
    ci_level: float
    max_steps: int
    chunk: int
    log_level: str = "INFO"

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "Settings":
        """Build from a Flask config or any mapping with the DRBD_* keys."""
        return cls(
            seed=int(values["DRBD_SEED"]),
            tol=float(values["DRBD_TOL"]),
            samples=int(values["DRBD_SAMPLES"]),
            workers=int(values["DRBD_WORKERS"]),
            ci_level=float(values["DRBD_CI"]),
            max_steps=int(values["DRBD_MAX_STEPS"]),
            chunk=int(values["DRBD_CHUNK"]),
            log_level=str(values.get("LOG_LEVEL", "INFO")),
        )

    def override(self, **values: Any) -> "Settings":
        """Copy with every non-None keyword applied."""
        return replace(self, **{k: v for k, v in values.items() if v is not None})


def get_settings(env: Optional[str] = None) -> Settings:
    """Settings for an environment name (FLASK_ENV, else development)."""
    env = env or os.environ.get('FLASK_ENV', 'development')
    cls = config.get(env, config['default'])
    return Settings.from_mapping({k: getattr(cls, k) for k in dir(cls) if k.isupper()})
