"""In-memory stand-in clients, their catalogs, and demo scenarios."""

from .clients import DocumentClient, KeyValueClient, SqlClient, SqlError, load_seed
from .scenarios import SCENARIOS, Scenario, get_scenario

__all__ = [
    "DocumentClient", "KeyValueClient", "SqlClient", "SqlError", "load_seed",
    "SCENARIOS", "Scenario", "get_scenario",
]
