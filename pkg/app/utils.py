import os
import sys
import json
import logging
from datetime import datetime
from functools import lru_cache

# Create a global logger for use throughout the package
logger = logging.getLogger("polymatrix_ce")

# Every tunable constant of the toolkit; config/settings.json may override any of them
DEFAULT_SETTINGS = {
    "enumeration_guard": 10_000_000,  # profiles, brute force
    "explicit_guard": 100_000,  # profiles, explicit CE LP
    "sorted_linear_k_max": 3,
    "lp_max_rows": 2_000,
    "lp_max_cols": 20_000,
    "lp_tolerance": 1e-9,
    "constraint_tolerance": 1e-7,
    "identity_tolerance": 1e-8,
    "stationary_tolerance": 1e-9,
    "sat_max_variables": 24,
    "mixture_max_rounds": 200,
    "mixture_cuts_per_round": 32,
    "default_eps": 1e-6,
    "regret_workers": 1,
    "log_level": "WARNING",
}


def setup_logging(level=None, log_file=True):
    """Set up logging for the toolkit"""
    if level is None:
        level = get_setting("log_level")
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.WARNING)

    handlers = [logging.StreamHandler()]
    if log_file:
        log_dir = get_logs_dir()
        os.makedirs(log_dir, exist_ok=True)
        log_path = os.path.join(log_dir, f"polymatrix_ce_{datetime.now().strftime('%Y%m%d')}.log")
        handlers.append(logging.FileHandler(log_path))

    # basicConfig is a no-op once the root logger has handlers
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers
    )
    logging.getLogger().setLevel(level)
    return logger


def get_app_root():
    """Get the application root directory"""
    if getattr(sys, 'frozen', False):
        return os.path.dirname(sys.executable)
    return os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def get_config_dir():
    """Get the configuration directory path"""
    return os.path.join(get_app_root(), "config")


def get_logs_dir():
    """Get the logs directory path"""
    return os.path.join(get_app_root(), "logs")


def ensure_app_directories():
    """Ensure the config and logs directories exist"""
    config_dir = get_config_dir()
    logs_dir = get_logs_dir()
    os.makedirs(config_dir, exist_ok=True)
    os.makedirs(logs_dir, exist_ok=True)
    return config_dir, logs_dir


@lru_cache(maxsize=1)
def load_settings():
    """Load toolkit settings from config/settings.json merged over the defaults"""
    settings = dict(DEFAULT_SETTINGS)
    settings_file = os.path.join(get_config_dir(), "settings.json")

    if not os.path.exists(settings_file):
        return settings

    try:
        with open(settings_file, 'r', encoding='utf-8') as f:
            overrides = json.load(f)
        if not isinstance(overrides, dict):
            raise ValueError("settings file must hold a JSON object")
        for key, value in overrides.items():
            if key not in DEFAULT_SETTINGS:
                logger.warning(f"Ignoring unknown setting '{key}' in {settings_file}")
                continue
            settings[key] = value
        logger.info(f"Loaded {len(overrides)} setting overrides from {settings_file}")
    except Exception as e:
        logger.error(f"Error loading settings, using defaults: {e}")
        settings = dict(DEFAULT_SETTINGS)

    return settings


def reload_settings():
    """Drop the cached settings so the next read hits the file again"""
    load_settings.cache_clear()
    return load_settings()


def get_setting(name):
    """Read one setting value"""
    return load_settings()[name]


def resolve(value, name):
    """Return value unless it is None, in which case the named setting"""
    return get_setting(name) if value is None else value


def save_settings(overrides):
    """Save setting overrides to config/settings.json"""
    config_dir, _ = ensure_app_directories()
    settings_file = os.path.join(config_dir, "settings.json")

    try:
        with open(settings_file, 'w', encoding='utf-8') as f:
            json.dump(overrides, f, indent=2)
        logger.info(f"Saved {len(overrides)} setting overrides")
        reload_settings()
        return True
    except Exception as e:
        logger.error(f"Error saving settings: {e}")
        return False
