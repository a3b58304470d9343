"""Pytest wiring for the Django test suite under qborelsum/.

The tests import the project apps as top-level modules (``qseries``, ``commons``)
and subclass ``django.test.TestCase``, the same way ``manage.py test`` runs them.
"""

import os
import sys
from pathlib import Path

PROJECT_DIR = Path(__file__).resolve().parent / "qborelsum"
if str(PROJECT_DIR) not in sys.path:
    sys.path.insert(0, str(PROJECT_DIR))

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "qborelsum.settings")

_runner_state = {}


def pytest_configure(config):  # noqa: ARG001
    import django
    from django.test.runner import DiscoverRunner
    from django.test.utils import setup_test_environment

    django.setup()
    setup_test_environment()
    runner = DiscoverRunner(verbosity=0, interactive=False)
    _runner_state["runner"] = runner
    _runner_state["old_config"] = runner.setup_databases()


def pytest_unconfigure(config):  # noqa: ARG001
    from django.test.utils import teardown_test_environment

    runner = _runner_state.pop("runner", None)
    if runner is not None:
        runner.teardown_databases(_runner_state.pop("old_config"))
        teardown_test_environment()
