"""Pytest configuration for all tests."""

from typing import Any

import pytest


def pytest_addoption(parser: Any) -> None:
    """Add custom command line options."""
    parser.addoption(
        "--run-acceptance",
        action="store_true",
        default=False,
        help="Run the multi-seed acceptance experiments (slow)",
    )


def pytest_configure(config: Any) -> None:
    config.addinivalue_line("markers", "acceptance: multi-seed directional experiment, needs --run-acceptance")


def pytest_collection_modifyitems(config: Any, items: list[Any]) -> None:
    if config.getoption("--run-acceptance"):
        return
    skip_acceptance = pytest.mark.skip(reason="needs --run-acceptance")
    for item in items:
        if "acceptance" in item.keywords:
            item.add_marker(skip_acceptance)
