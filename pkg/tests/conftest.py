"""
Pytest fixtures for the DRBD engine tests
"""
import math

import pytest

from drbd import create_app
from drbd.algebra import And, Var, Wsp
from drbd.casestudies import dbw, sen, sen_nospare
from drbd.distributions import Exponential, SpareSpec, Weibull
from drbd.models import DrbdModel

SERIES_TEXT = """\
# two exponential blocks in series
A ~ exp(0.1)
B ~ exp(0.2)
system = A * B
"""

WSP_TEXT = """\
spare S ~ exp(1.0) dormancy 0.5
Y ~ exp(1.0)
system = wsp(Y, S)
"""

REPEATED_TEXT = """\
A ~ exp(0.1)
B ~ exp(0.2)
system = A * (A + B)
"""


@pytest.fixture(scope='session')
def app():
    """Create application for testing."""
    app = create_app('testing')
    yield app


@pytest.fixture
def client(app):
    """Create test client."""
    return app.test_client()


@pytest.fixture
def runner(app):
    """Create CLI runner."""
    return app.test_cli_runner()


@pytest.fixture
def series_model():
    """A ~ exp(0.1) AND B ~ exp(0.2)."""
    return DrbdModel({"A": Exponential(0.1), "B": Exponential(0.2)}, And(Var("A"), Var("B")), name="series")


@pytest.fixture
def weibull_model():
    return DrbdModel({"W": Weibull(2.0, 1.0)}, Var("W"), name="weibull")


@pytest.fixture
def wsp_model():
    """Warm spare over exp(1) blocks, dormancy 0.5."""
    return DrbdModel(
        {"Y": Exponential(1.0), "S": SpareSpec.exponential(1.0, 0.5)},
        Wsp(Var("Y"), "S"),
        name="wsp",
    )


@pytest.fixture
def dbw_model():
    return dbw()


@pytest.fixture
def sen_model():
    return sen()


@pytest.fixture
def sen_nospare_model():
    return sen_nospare()


@pytest.fixture
def write_model(tmp_path):
    """Write model text to a file and return its path."""
    def _write(text, name="model.drbd"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write


def wsp_exact(rate, alpha, t):
    """Warm spare over exponential laws: e^(-λt) (1 + (1 - e^(-αλt)) / α), α > 0."""
    if alpha == 0.0:
        return math.exp(-rate * t) * (1.0 + rate * t)
    return math.exp(-rate * t) * (1.0 + (1.0 - math.exp(-alpha * rate * t)) / alpha)
