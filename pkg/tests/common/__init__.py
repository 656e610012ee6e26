"""Common utilities for the test suites."""
