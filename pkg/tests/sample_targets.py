"""Importable targets for ``faultline --test MODULE:ATTR``."""

from faultline import create_interceptor
from faultline.fixtures import KeyValueClient
from faultline.fixtures.scenarios import two_sites

_kv = KeyValueClient({"k": "v"})


def lookup(session):
    assert create_interceptor(_kv, "redis://x", session).get("k") == "v"


TWO_SITES = two_sites()
