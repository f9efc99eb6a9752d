import json

import pytest

from faultline import (CallDescriptor, ExceptionFault, FaultAssignment, InjectedException,
                       SchemaError, UnknownMethod, enumerate_exception_faults,
                       fabricate_exception, load_catalog)
from faultline.faults import exception_class, fault_from_dict
from faultline.fixtures.scenarios import DOC_CATALOG, KV_CATALOG, SQL_CATALOG

from oracles import catalog_exception_count

TIMEOUT_MSG = "Command timed out after 100 millisecond(s)"


def desc(method):
    return CallDescriptor(method, "d", "[]", 0)


def test_shipped_kv_catalog_has_timeout_on_get():
    cat = load_catalog(KV_CATALOG)
    faults = enumerate_exception_faults("s", desc("KeyValueCommands/get"), cat)
    assert faults == [ExceptionFault("RedisCommandTimeoutException", TIMEOUT_MSG)]


@pytest.mark.parametrize("path", [KV_CATALOG, DOC_CATALOG, SQL_CATALOG])
def test_shipped_catalogs_load(path):
    assert load_catalog(path).entries


def test_empty_catalog_is_valid():
    cat = load_catalog({"client_interface": "KeyValueCommands", "entries": []})
    assert enumerate_exception_faults("s", desc("KeyValueCommands/get"), cat) == []


def test_unknown_method_rejected():
    doc = {"client_interface": "KeyValueCommands", "entries": [
        {"method": "KeyValueCommands/nonexistent",
         "exceptions": [{"name": "X", "message": "m", "async_capable": False}]}]}
    with pytest.raises(UnknownMethod):
        load_catalog(doc)


def test_method_of_other_interface_rejected():
    doc = {"client_interface": "KeyValueCommands", "entries": [
        {"method": "DocumentCommands/fetch", "exceptions": []}]}
    with pytest.raises(UnknownMethod):
        load_catalog(doc)


@pytest.mark.parametrize("doc", [
    {"entries": []},
    {"client_interface": "KeyValueCommands", "entries": [{"method": "KeyValueCommands/get"}]},
    {"client_interface": "KeyValueCommands", "entries": [
        {"method": "KeyValueCommands/get", "exceptions": [{"name": "X"}]}]},
])
def test_malformed_catalog_schema_error(doc):
    with pytest.raises(SchemaError):
        load_catalog(doc)


def test_invalid_json_file(tmp_path):
    p = tmp_path / "bad.catalog"
    p.write_text("{nope")
    with pytest.raises(SchemaError):
        load_catalog(p)


def test_throwable_restriction_enforced():
    from faultline.interfaces import InterfaceRegistry, client_interface

    reg = InterfaceRegistry()

    @client_interface("Strict", sync=("get",), throws={"get": ["Timeout"]}, registry=reg)
    class Strict:
        def get(self, k):
            return k

    ok = {"client_interface": "Strict", "entries": [{"method": "Strict/get", "exceptions": [
        {"name": "Timeout", "message": "t", "async_capable": False}]}]}
    assert load_catalog(ok, reg)
    bad = json.loads(json.dumps(ok))
    bad["entries"][0]["exceptions"][0]["name"] = "Other"
    with pytest.raises(SchemaError):
        load_catalog(bad, reg)


def test_enumeration_in_catalog_order_matches_raw_document():
    cat = load_catalog(SQL_CATALOG)
    faults = enumerate_exception_faults("s", desc("SqlCommands/execute"), cat)
    raw = json.loads(SQL_CATALOG.read_text())["entries"][0]["exceptions"]
    assert [(f.exception_name, f.code, f.message) for f in faults] == \
        [(e["name"], e.get("code"), e["message"]) for e in raw]


def test_async_method_only_async_capable_entries():
    cat = load_catalog(KV_CATALOG)
    faults = enumerate_exception_faults("s", desc("KeyValueCommands/async_set"), cat)
    assert len(faults) == catalog_exception_count(KV_CATALOG, "KeyValueCommands/async_set", True) == 1
    sync = enumerate_exception_faults("s", desc("KeyValueCommands/set"), cat)
    assert len(sync) == catalog_exception_count(KV_CATALOG, "KeyValueCommands/set", False) == 2


def test_method_without_entries():
    cat = load_catalog(KV_CATALOG)
    assert enumerate_exception_faults("s", desc("KeyValueCommands/delete"), cat) == []


def test_fabricated_exception_rendering():
    f = ExceptionFault("RedisCommandTimeoutException", TIMEOUT_MSG)
    exc = fabricate_exception(f)
    assert isinstance(exc, InjectedException)
    assert type(exc).__name__ == "RedisCommandTimeoutException"
    assert str(exc) == TIMEOUT_MSG
    rendering = exc.render()
    assert TIMEOUT_MSG in rendering
    assert "code = undefined" in rendering
    assert "cause_message = undefined" in rendering
    assert "description = undefined" in rendering


def test_fabrication_deterministic():
    f = ExceptionFault("PSQLException", "closed", code="08003")
    a, b = fabricate_exception(f), fabricate_exception(f)
    assert type(a) is type(b) is exception_class("PSQLException")
    assert a.render() == b.render()
    assert "code = 08003" in a.render()


def test_exception_fault_dict_round_trip():
    f = ExceptionFault("E", "m", "c", "cm", "d")
    assert fault_from_dict(json.loads(json.dumps(f.to_dict()))) == f


def test_assignment_rejects_two_faults_on_one_site():
    f = ExceptionFault("E", "m")
    a = FaultAssignment().with_fault("s", f, desc("KeyValueCommands/get"))
    with pytest.raises(ValueError):
        a.with_fault("s", f, desc("KeyValueCommands/get"))
    assert not FaultAssignment()
    assert a.targets_method("KeyValueCommands/get")
