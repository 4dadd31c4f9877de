# -*- coding: utf-8 -*-
"""
lgt-cli tests
"""

from typing import Any

import pytest
from _pytest.config import Config as PytestConfig
from _pytest.logging import LogCaptureHandler
from _pytest.nodes import Item

from lgtcli.config import config

from . import SLOW_TESTS


def emit(*args: Any, **kwargs: Any) -> None:
	pass


LogCaptureHandler.emit = emit  # type: ignore[assignment]


@pytest.fixture(autouse=True)
def reset_config() -> None:
	for item in config.get_config_items():
		item.reset()


@pytest.hookimpl()
def pytest_configure(config: PytestConfig) -> None:
	# register custom markers
	config.addinivalue_line("markers", "slow: long Monte Carlo runs, enabled with LGTCLI_SLOW_TESTS=1")


def pytest_runtest_setup(item: Item) -> None:
	for marker in item.iter_markers():
		if marker.name == "slow" and not SLOW_TESTS:
			pytest.skip("Slow test, set LGTCLI_SLOW_TESTS=1 to run")
			return
