"""
Django settings for the qborelsum project.

The project hosts no web surface: Django provides configuration, logging,
the ``qsum`` management command and the test runner.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
from pathlib import Path


def strtobool(val: str | int | bool) -> bool:
    """Convert an environment string to bool."""
    if isinstance(val, bool):
        return val
    if isinstance(val, str):
        return val.lower() in ["true", "1", "t", "y", "yes"]
    if isinstance(val, int):
        return val == 1
    return bool(val)


BASE_DIR = Path(__file__).resolve().parent.parent.absolute()

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"  # noqa: N806

USE_TIMED_TESTRUNNER = strtobool(os.getenv("USE_TIMED_TESTRUNNER", "False"))
if USE_TIMED_TESTRUNNER:
    TEST_RUNNER = "commons.tests.runners.TimedTestRunner"  # noqa: N806
# JUnit XML test reports for CI
USE_XML_TESTRUNNER = strtobool(os.getenv("USE_XML_TESTRUNNER", "False"))
if not USE_TIMED_TESTRUNNER and USE_XML_TESTRUNNER:
    TEST_RUNNER = "commons.tests.runners.XMLTestRunnerForCI"  # noqa: N806
    TEST_OUTPUT_DIR = "test-reports"  # noqa: N806
    TEST_OUTPUT_FILE_NAME = "results.xml"  # noqa: N806

SECRET_KEY = os.getenv("DJANGO_SECRET_KEY", "qborelsum-local-only-not-a-secret")  # noqa: S105

DEBUG = bool(strtobool(os.getenv("DEBUG", "False")))

ALLOWED_HOSTS: list[str] = []

INSTALLED_APPS = [
    "commons",
    "qseries",
]

# not used at runtime; kept so the django test runner has a default connection
DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": Path(os.getenv("SQLITE_DB_PATH", str(BASE_DIR / "db.sqlite3"))),
    }
}

USE_TZ = True
TIME_ZONE = "UTC"  # noqa: N806

QSUM_LOG_LEVEL = os.getenv("QSUM_LOG_LEVEL", "INFO")
DJANGO_CORE_LOG_LEVEL = os.getenv("DJANGO_CORE_LOG_LEVEL", "WARNING")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "standard": {
            "format": "{asctime} [{levelname:5}] ({name}) {funcName}: {message}",
            "style": "{",
        }
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "standard",
        },
    },
    "loggers": {
        "django": {
            "handlers": ["console"],
            "level": DJANGO_CORE_LOG_LEVEL,
        },
        "commons": {
            "handlers": ["console"],
            "level": QSUM_LOG_LEVEL,
            "propagate": True,
        },
        "qseries": {
            "handlers": ["console"],
            "level": QSUM_LOG_LEVEL,
            "propagate": True,
        },
    },
}

# --- numerics ---
# hard cap on the number of terms of any single series or infinite product
DEFAULT_QSUM_MAX_TERMS = 1_000_000
QSUM_MAX_TERMS = int(os.getenv("QSUM_MAX_TERMS", DEFAULT_QSUM_MAX_TERMS))

DEFAULT_QSUM_TOL = 1e-10
QSUM_DEFAULT_TOL = float(os.getenv("QSUM_DEFAULT_TOL", DEFAULT_QSUM_TOL))

QSUM_SPIRAL_TOL = float(os.getenv("QSUM_SPIRAL_TOL", "1e-9"))
QSUM_POLE_TOL = float(os.getenv("QSUM_POLE_TOL", "1e-6"))
QSUM_JACKSON_MAX_WINDOW = int(os.getenv("QSUM_JACKSON_MAX_WINDOW", "400"))
QSUM_BOREL_INNER_RADIUS = float(os.getenv("QSUM_BOREL_INNER_RADIUS", "0.6"))
QSUM_BOREL_OUTER_SWITCH = float(os.getenv("QSUM_BOREL_OUTER_SWITCH", "0.9"))

# thread pool size used by the qsum command for independent points
QSUM_WORKERS = int(os.getenv("QSUM_WORKERS", "1"))
