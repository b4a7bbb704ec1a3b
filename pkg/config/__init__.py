# Configuration module for different environments
from config.production import ReductionSettings, get_config

__all__ = ['ReductionSettings', 'get_config']
