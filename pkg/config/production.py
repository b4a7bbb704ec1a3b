import os
from dataclasses import dataclass

from dotenv import load_dotenv

load_dotenv()


class ProductionConfig:
    """Production configuration for the coordinate certification service"""

    # Basic Flask configuration
    DEBUG = False
    TESTING = False
    SECRET_KEY = os.environ.get('SECRET_KEY') or os.environ.get('SESSION_SECRET')

    # Request limits
    MAX_CONTENT_LENGTH = 8 * 1024 * 1024  # certificates with long rewrite traces

    # Logging configuration
    LOG_LEVEL = 'INFO'
    LOG_FILE = os.environ.get('LOG_FILE', 'logs/coordcert.log')
    LOG_MAX_BYTES = 10 * 1024 * 1024  # 10MB
    LOG_BACKUP_COUNT = 5

    # Celery configuration (for background certification)
    REDIS_URL = os.environ.get('REDIS_URL', 'redis://localhost:6379')
    CELERY_BROKER_URL = os.environ.get('REDIS_URL', 'redis://localhost:6379')
    CELERY_RESULT_BACKEND = os.environ.get('REDIS_URL', 'redis://localhost:6379')
    CELERY_TASK_SERIALIZER = 'json'
    CELERY_RESULT_SERIALIZER = 'json'
    CELERY_ACCEPT_CONTENT = ['json']
    CELERY_TIMEZONE = 'UTC'
    CELERY_ENABLE_UTC = True

    # Caching and rate limiting
    CACHE_TYPE = 'RedisCache'
    CACHE_DEFAULT_TIMEOUT = 3600
    RATELIMIT_STORAGE_URI = os.environ.get('REDIS_URL', 'redis://localhost:6379')
    TALISMAN_CONFIG = {
        'force_https': True,
        'content_security_policy': {'default-src': "'none'"},
    }

    # Engine tuning
    SIGMA_BOX_EXHAUSTIVE_LIMIT = int(os.environ.get('SIGMA_BOX_EXHAUSTIVE_LIMIT', 4096))
    SIGMA_BOX_SAMPLES = int(os.environ.get('SIGMA_BOX_SAMPLES', 64))
    RANDOM_SEED = int(os.environ.get('RANDOM_SEED', 0))
    MT2_MAX_ITERATIONS = int(os.environ.get('MT2_MAX_ITERATIONS', 64))

    # Feature flags
    ENABLE_STEP_LOG = True

    @staticmethod
    def validate_config():
        """Validate that required configuration is present"""
        required_vars = []

        secret_key = os.environ.get('SECRET_KEY') or os.environ.get('SESSION_SECRET')
        if not secret_key:
            required_vars.append('SECRET_KEY or SESSION_SECRET')

        if required_vars:
            raise ValueError(f"Missing required environment variables: {', '.join(required_vars)}")

        if ProductionConfig.SIGMA_BOX_SAMPLES < 1 or ProductionConfig.MT2_MAX_ITERATIONS < 1:
            raise ValueError("SIGMA_BOX_SAMPLES and MT2_MAX_ITERATIONS must be positive")

        return True


class DevelopmentConfig:
    """Development configuration"""
    DEBUG = True
    TESTING = False
    SECRET_KEY = os.environ.get('SESSION_SECRET', 'dev-secret-key')

    # Logging
    LOG_LEVEL = 'DEBUG'
    LOG_FILE = os.environ.get('LOG_FILE', 'logs/coordcert.log')
    LOG_MAX_BYTES = 1024 * 1024
    LOG_BACKUP_COUNT = 2

    REDIS_URL = os.environ.get('REDIS_URL', 'redis://localhost:6379')
    CACHE_TYPE = 'SimpleCache'

    SIGMA_BOX_EXHAUSTIVE_LIMIT = 4096
    SIGMA_BOX_SAMPLES = 64
    RANDOM_SEED = 0
    MT2_MAX_ITERATIONS = 64

    ENABLE_STEP_LOG = True


class TestingConfig(DevelopmentConfig):
    """Configuration used by the test suite"""
    TESTING = True
    LOG_LEVEL = 'WARNING'
    LOG_FILE = None
    RATELIMIT_ENABLED = False

    # Keep sampled checks small and deterministic
    SIGMA_BOX_EXHAUSTIVE_LIMIT = 512
    SIGMA_BOX_SAMPLES = 16


def get_config():
    """Get configuration based on environment"""
    env = os.environ.get('FLASK_ENV', 'development')  # Default to development

    if env == 'production':
        return ProductionConfig
    elif env == 'testing':
        return TestingConfig
    else:
        return DevelopmentConfig


@dataclass(frozen=True)
class ReductionSettings:
    """Engine knobs read off a config class; passed explicitly into the pipelines."""

    sigma_box_exhaustive_limit: int = 4096
    sigma_box_samples: int = 64
    random_seed: int = 0
    mt2_max_iterations: int = 64
    enable_step_log: bool = True

    @classmethod
    def from_config(cls, config=None) -> 'ReductionSettings':
        config = config or get_config()
        return cls(
            sigma_box_exhaustive_limit=getattr(config, 'SIGMA_BOX_EXHAUSTIVE_LIMIT', 4096),
            sigma_box_samples=getattr(config, 'SIGMA_BOX_SAMPLES', 64),
            random_seed=getattr(config, 'RANDOM_SEED', 0),
            mt2_max_iterations=getattr(config, 'MT2_MAX_ITERATIONS', 64),
            enable_step_log=getattr(config, 'ENABLE_STEP_LOG', True),
        )
