"""In-memory stand-in database clients.

They cover only the API surface the demo scenarios and tests use. Each
client counts its own invocations (``counters`` per method, ``calls`` as
an ordered log) so tests can prove that a faulted call never reached the
backend. ``reset()`` restores the seeded state and clears both.

Asynchronous methods return an already-completed
:class:`concurrent.futures.Future`; the interception layer decides when a
fault surfaces.
"""

from __future__ import annotations

import copy
import json
import re
import threading
from collections import Counter
from concurrent.futures import Future
from typing import Any, Optional

from ..interfaces import client_interface

OK = "OK"

KV_INTERFACE = "KeyValueCommands"
DOC_INTERFACE = "DocumentCommands"
SQL_INTERFACE = "SqlCommands"


def _done(value: Any) -> Future:
    fut: Future = Future()
    fut.set_result(value)
    return fut


class _Fixture:
    def __init__(self, seed: Optional[dict] = None):
        self._lock = threading.RLock()
        self._seed = copy.deepcopy(seed or {})
        self.counters: Counter = Counter()
        self.calls: list = []
        self.reset()

    def reset(self) -> None:
        with self._lock:
            self._data = copy.deepcopy(self._seed)
            self.counters.clear()
            self.calls.clear()

    def _hit(self, method: str, *args: Any) -> None:
        self.counters[method] += 1
        self.calls.append((method, args))

    def hits(self, method: str, *args: Any) -> int:
        return sum(1 for m, a in self.calls if m == method and a == args)


@client_interface(KV_INTERFACE, sync=("get", "set", "delete"), async_=("async_get", "async_set"))
class KeyValueClient(_Fixture):
    """Redis-like string commands; values may be strings or documents."""

    def get(self, key: str) -> Any:
        with self._lock:
            self._hit("get", key)
            return copy.deepcopy(self._data.get(key))

    def set(self, key: str, value: Any) -> str:
        with self._lock:
            self._hit("set", key, value)
            self._data[key] = copy.deepcopy(value)
            return OK

    def delete(self, key: str) -> int:
        with self._lock:
            self._hit("delete", key)
            return 1 if self._data.pop(key, None) is not None else 0

    def async_get(self, key: str) -> Future:
        with self._lock:
            self._hit("async_get", key)
            return _done(copy.deepcopy(self._data.get(key)))

    def async_set(self, key: str, value: Any) -> Future:
        with self._lock:
            self._hit("async_set", key, value)
            self._data[key] = copy.deepcopy(value)
            return _done(OK)

    def snapshot(self) -> dict:
        with self._lock:
            return copy.deepcopy(self._data)


@client_interface(DOC_INTERFACE, sync=("fetch", "store"), async_=("async_fetch", "async_store"))
class DocumentClient(_Fixture):
    """DynamoDB-like document store keyed by (collection, key)."""

    def fetch(self, collection: str, key: str) -> Optional[dict]:
        with self._lock:
            self._hit("fetch", collection, key)
            return copy.deepcopy(self._data.get(collection, {}).get(key))

    def store(self, collection: str, key: str, document: dict) -> str:
        with self._lock:
            self._hit("store", collection, key, document)
            self._data.setdefault(collection, {})[key] = copy.deepcopy(document)
            return OK

    def async_fetch(self, collection: str, key: str) -> Future:
        with self._lock:
            self._hit("async_fetch", collection, key)
            return _done(copy.deepcopy(self._data.get(collection, {}).get(key)))

    def async_store(self, collection: str, key: str, document: dict) -> Future:
        with self._lock:
            self._hit("async_store", collection, key, document)
            self._data.setdefault(collection, {})[key] = copy.deepcopy(document)
            return _done(OK)

    def snapshot(self) -> dict:
        with self._lock:
            return copy.deepcopy(self._data)


_CREATE = re.compile(r"^\s*CREATE\s+TABLE\s+(\w+)\s*\(([^)]*)\)\s*$", re.I)
_INSERT = re.compile(r"^\s*INSERT\s+INTO\s+(\w+)\s+VALUES\s*\(([^)]*)\)\s*$", re.I)
_SELECT = re.compile(r"^\s*SELECT\s+(\*|[\w\s,]+?)\s+FROM\s+(\w+)(?:\s+WHERE\s+(\w+)\s*=\s*\?)?\s*$", re.I)
_DELETE = re.compile(r"^\s*DELETE\s+FROM\s+(\w+)(?:\s+WHERE\s+(\w+)\s*=\s*\?)?\s*$", re.I)


class SqlError(Exception):
    """Malformed statement passed to the fixture (a test bug, not a fault)."""


@client_interface(SQL_INTERFACE, sync=("execute",), async_=("async_execute",))
class SqlClient(_Fixture):
    """A tiny relational store.

    Understands ``CREATE TABLE t (a, b)``, ``INSERT INTO t VALUES (?, ?)``,
    ``SELECT * | cols FROM t [WHERE c = ?]`` and ``DELETE FROM t [WHERE c = ?]``.
    Seed format: ``{table: {"columns": [...], "rows": [[...], ...]}}``.
    Rows come back as lists in insertion order.
    """

    def execute(self, query_text: str, params: Optional[list] = None) -> list:
        with self._lock:
            self._hit("execute", query_text, tuple(params or ()))
            return self._run(query_text, list(params or ()))

    def async_execute(self, query_text: str, params: Optional[list] = None) -> Future:
        with self._lock:
            self._hit("async_execute", query_text, tuple(params or ()))
            return _done(self._run(query_text, list(params or ())))

    def _table(self, name: str) -> dict:
        try:
            return self._data[name]
        except KeyError:
            raise SqlError(f"no such table: {name}") from None

    def _run(self, sql: str, params: list) -> list:
        if m := _CREATE.match(sql):
            cols = [c.strip() for c in m.group(2).split(",") if c.strip()]
            self._data[m.group(1)] = {"columns": cols, "rows": []}
            return []
        if m := _INSERT.match(sql):
            table = self._table(m.group(1))
            if len(params) != len(table["columns"]):
                raise SqlError("parameter count does not match column count")
            table["rows"].append(copy.deepcopy(params))
            return []
        if m := _SELECT.match(sql):
            table = self._table(m.group(2))
            rows = self._where(table, m.group(3), params)
            if m.group(1).strip() == "*":
                return copy.deepcopy(rows)
            idx = [table["columns"].index(c.strip()) for c in m.group(1).split(",")]
            return [[row[i] for i in idx] for row in rows]
        if m := _DELETE.match(sql):
            table = self._table(m.group(1))
            doomed = self._where(table, m.group(2), params)
            table["rows"] = [r for r in table["rows"] if r not in doomed]
            return []
        raise SqlError(f"unsupported statement: {sql!r}")

    @staticmethod
    def _where(table: dict, column: Optional[str], params: list) -> list:
        if column is None:
            return list(table["rows"])
        i = table["columns"].index(column)
        return [r for r in table["rows"] if r[i] == params[0]]

    def snapshot(self) -> dict:
        with self._lock:
            return copy.deepcopy(self._data)


def load_seed(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
