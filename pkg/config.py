"""Configuration for different environments"""
import os


def _env_float(name, default):
    value = os.environ.get(name)
    return float(value) if value not in (None, '') else default


def _env_int(name, default):
    value = os.environ.get(name)
    return int(value) if value not in (None, '') else default


class Config:
    """Base configuration"""

    # Logging
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')

    # Numerics
    DRBD_TOL = _env_float('DRBD_TOL', 1e-9)
    DRBD_MAX_STEPS = _env_int('DRBD_MAX_STEPS', 10_000)

    # Monte Carlo
    DRBD_SEED = _env_int('DRBD_SEED', 20190101)
    DRBD_SAMPLES = _env_int('DRBD_SAMPLES', 100_000)
    DRBD_WORKERS = _env_int('DRBD_WORKERS', 1)
    DRBD_CI = _env_float('DRBD_CI', 0.99)
    # Sample-index chunk; part of the stream derivation, so changing it changes results
    DRBD_CHUNK = _env_int('DRBD_CHUNK', 8192)

    # Largest sample count the HTTP API accepts per request
    API_MAX_SAMPLES = _env_int('API_MAX_SAMPLES', 1_000_000)


class DevelopmentConfig(Config):
    """Development configuration"""
    DEBUG = True
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'DEBUG')


class ProductionConfig(Config):
    """Production configuration"""
    DEBUG = False
    DRBD_WORKERS = _env_int('DRBD_WORKERS', os.cpu_count() or 1)


class TestingConfig(Config):
    """Testing configuration"""
    DEBUG = True
    TESTING = True
    DRBD_SEED = 12345
    DRBD_SAMPLES = 20_000
    API_MAX_SAMPLES = 200_000


config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}
