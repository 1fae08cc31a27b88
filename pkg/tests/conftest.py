"""Shared fixtures: paths into the test data directory."""

import os

import pytest

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture
def reference_counts_path():
    return os.path.join(DATA_DIR, "reference_counts.csv")
