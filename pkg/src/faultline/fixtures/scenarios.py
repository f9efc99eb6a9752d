"""Shipped demo scenarios.

``profile_login`` is the user-profile login flow: a sync read of the user document,
an async read of the last visited profile, resolve, assert. The other
scenarios exist to exercise specific explorer behaviour (fallback paths,
independent sites, failing baselines).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Optional

from ..explorer import ExplorationConfig, run_exploration, was_fault_injected, was_fault_injected_on
from ..faults import InjectedException
from ..intercept import Session, create_interceptor
from .clients import DocumentClient, KeyValueClient, SqlClient, load_seed

DATA = resources.files(__package__) / "data"


def data_path(name: str) -> Path:
    return Path(str(DATA / name))


KV_CATALOG = data_path("kv_client.catalog")
DOC_CATALOG = data_path("doc_client.catalog")
SQL_CATALOG = data_path("sql_client.catalog")
PROFILE_SEED = data_path("profile_seed.json")

REDIS_URL = "redis://localhost:6379"
DYNAMO_URL = "http://localhost:8000"
PG_URL = "postgresql://localhost:5432/app"


@dataclass
class Scenario:
    name: str
    test: Callable[[Session], Any]
    fixtures: dict = field(default_factory=dict)
    catalog_paths: list = field(default_factory=list)
    description: str = ""

    def setup(self) -> None:
        for client in self.fixtures.values():
            client.reset()

    def config(self, **overrides) -> ExplorationConfig:
        overrides.setdefault("catalog_paths", [str(p) for p in self.catalog_paths])
        return ExplorationConfig(**overrides)

    def explore(self, config: Optional[ExplorationConfig] = None, **kwargs):
        return run_exploration(self.test, config or self.config(), name=self.name,
                               setup=self.setup, **kwargs)


def profile_login(seed_path=PROFILE_SEED) -> Scenario:
    kv = KeyValueClient(load_seed(seed_path))

    def test(session: Session) -> None:
        redis = create_interceptor(kv, REDIS_URL, session)
        user = redis.get("john_doe")
        f_last_visited = redis.async_get(user["last_visited_profile"])
        last_visited = f_last_visited.get()
        assert last_visited == "joe_bloggs", f"expected joe_bloggs, got {last_visited!r}"

    return Scenario("profile_login", test, {"kv": kv}, [KV_CATALOG],
                    "login flow: sync get of the user, async get of the last visited profile")


def profile_login_resilient(seed_path=PROFILE_SEED) -> Scenario:
    """The profile_login flow written defensively, with predicate-guarded assertions."""
    kv = KeyValueClient(load_seed(seed_path))

    def test(session: Session) -> None:
        redis = create_interceptor(kv, REDIS_URL, session)
        try:
            user = redis.get("john_doe")
        except InjectedException:
            assert was_fault_injected_on("KeyValueCommands/get")
            return
        profile = user.get("last_visited_profile") if isinstance(user, dict) else None
        if not isinstance(profile, str):
            assert was_fault_injected()
            return
        try:
            last_visited = redis.async_get(profile).get()
        except InjectedException:
            assert was_fault_injected_on("KeyValueCommands/async_get")
            return
        if not was_fault_injected():
            assert last_visited == "joe_bloggs"

    return Scenario("profile_login_resilient", test, {"kv": kv}, [KV_CATALOG],
                    "profile_login with graceful degradation under faults")


def cache_fallback() -> Scenario:
    """Read through a cache, falling back to the document store on error or miss."""
    cache = KeyValueClient({"profile:john_doe": "cached"})
    docs = DocumentClient({"profiles": {"john_doe": {"name": "John", "verified": True}}})

    def test(session: Session) -> None:
        redis = create_interceptor(cache, REDIS_URL, session)
        dynamo = create_interceptor(docs, DYNAMO_URL, session)
        try:
            value = redis.get("profile:john_doe")
        except InjectedException:
            value = None
        if value is None:
            doc = dynamo.fetch("profiles", "john_doe")
            value = doc["name"] if doc else None
        assert value is not None

    return Scenario("cache_fallback", test, {"cache": cache, "docs": docs},
                    [KV_CATALOG, DOC_CATALOG], "cache read with document-store fallback")


def two_sites() -> Scenario:
    kv = KeyValueClient({"a": "xy", "b": True})

    def test(session: Session) -> None:
        redis = create_interceptor(kv, REDIS_URL, session)
        a = redis.get("a")
        b = redis.get("b")
        assert (a, b) == ("xy", True)

    return Scenario("two_sites", test, {"kv": kv}, [KV_CATALOG], "two independent reads")


def sql_report() -> Scenario:
    db = SqlClient({"users": {"columns": ["name", "verified"],
                              "rows": [["john_doe", True], ["joe_bloggs", False]]}})

    def test(session: Session) -> None:
        pg = create_interceptor(db, PG_URL, session)
        rows = pg.execute("SELECT name FROM users WHERE verified = ?", [True])
        assert rows == [["john_doe"]]

    return Scenario("sql_report", test, {"db": db}, [SQL_CATALOG], "one parameterized query")


def failing_baseline() -> Scenario:
    kv = KeyValueClient({"k": "v"})

    def test(session: Session) -> None:
        assert create_interceptor(kv, REDIS_URL, session).get("k") == "not v"

    return Scenario("failing_baseline", test, {"kv": kv}, [KV_CATALOG],
                    "asserts the wrong value even without faults")


def no_calls() -> Scenario:
    return Scenario("no_calls", lambda session: None, {}, [], "makes no database calls")


SCENARIOS: dict[str, Callable[[], Scenario]] = {
    "profile_login": profile_login,
    "profile_login_resilient": profile_login_resilient,
    "cache_fallback": cache_fallback,
    "two_sites": two_sites,
    "sql_report": sql_report,
    "failing_baseline": failing_baseline,
    "no_calls": no_calls,
}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]()
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(SCENARIOS)}") from None
