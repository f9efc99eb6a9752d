import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from faultline import Session
from faultline.fixtures import KeyValueClient, DocumentClient, SqlClient
from faultline.fixtures.scenarios import PROFILE_SEED, KV_CATALOG, DOC_CATALOG, SQL_CATALOG
from faultline.fixtures.clients import load_seed


@pytest.fixture
def session():
    return Session("tests")


@pytest.fixture
def kv():
    return KeyValueClient(load_seed(PROFILE_SEED))


@pytest.fixture
def docs():
    return DocumentClient({"profiles": {"john_doe": {"name": "John"}}})


@pytest.fixture
def sql():
    return SqlClient({"users": {"columns": ["name", "verified"], "rows": [["john_doe", True]]}})


@pytest.fixture
def kv_catalog_path():
    return KV_CATALOG


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS, key=str):
        ok, title = mod.RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {title}")
