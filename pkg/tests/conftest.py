from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from fuzzanon import DataTable, Schema, load_csv, load_schema
from fuzzanon.datasets import sample_path, sample_schema_path


@pytest.fixture(scope="session")
def adults_schema() -> Schema:
    return load_schema(sample_schema_path("adults"))


@pytest.fixture(scope="session")
def bank_schema() -> Schema:
    return load_schema(sample_schema_path("bank"))


@pytest.fixture(scope="session")
def adults_sample(adults_schema) -> DataTable:
    return load_csv(sample_path("adults"), adults_schema)


@pytest.fixture(scope="session")
def bank_sample(bank_schema) -> DataTable:
    return load_csv(sample_path("bank"), bank_schema)
