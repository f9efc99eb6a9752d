import threading

import pytest
from hypothesis import given, settings, strategies as st

from faultline import (ByzantineFault, CallDescriptor, CallKind, ExceptionFault, FaultAssignment,
                       InjectedException, Session, StaleHandle, UnknownInterface,
                       create_interceptor, resolve_call_site_id, resolve_deferred)
from faultline.fixtures import KeyValueClient
from faultline.intercept import args_digest, test_block_digest
from faultline.transformers import TransformerState

TIMEOUT = ExceptionFault("RedisCommandTimeoutException",
                         "Command timed out after 100 millisecond(s)")

# computed with coreutils before the build:
#   printf '["john_doe"]' | sha256sum
#   printf 'KeyValueCommands/get\x1f<args digest>\x1f0' | sha256sum
JOHN_DOE_ARGS_DIGEST = "382da798e3a1b8eb5e7a71750d19ede55f3e694b46e988bd35849393b2d22c74"
JOHN_DOE_SITE = "4d6f63a8d5520580f21398344515ddd320a726b17dc16bec59d23ffb99b9a0ce"


def site_for(method, *args, ordinal=0):
    return resolve_call_site_id(CallDescriptor(method, args_digest(args), "", ordinal))


def assign(method, fault, *args, ordinal=0):
    site = site_for(method, *args, ordinal=ordinal)
    return FaultAssignment({site: fault}, {site: CallDescriptor(method, args_digest(args), "",
                                                                ordinal)})


# -- call-site identity ----------------------------------------------------------------

def test_site_id_matches_external_digest_oracle():
    assert args_digest(("john_doe",)) == JOHN_DOE_ARGS_DIGEST
    d = CallDescriptor("KeyValueCommands/get", JOHN_DOE_ARGS_DIGEST, "[john_doe]", 0)
    assert resolve_call_site_id(d) == JOHN_DOE_SITE


def test_site_id_deterministic_and_ordinal_sensitive():
    d0 = CallDescriptor("KeyValueCommands/get", "x", "", 0)
    assert resolve_call_site_id(d0) == resolve_call_site_id(CallDescriptor("KeyValueCommands/get", "x", "p", 0))
    assert resolve_call_site_id(d0) != resolve_call_site_id(CallDescriptor("KeyValueCommands/get", "x", "", 1))


def test_args_digest_ignores_dict_order():
    assert args_digest(({"a": 1, "b": 2},)) == args_digest(({"b": 2, "a": 1},))


def test_test_block_digest_is_sha1_hex():
    assert test_block_digest("profile_login") == "046f2b4c31fc341220622ee2f6168886a2d5e2f1"


def test_repeated_calls_get_distinct_ordinals(kv, session):
    c = create_interceptor(kv, "redis://x", session)
    with session.iteration():
        c.get("john_doe")
        c.get("john_doe")
        trace = session.current_trace()
    assert [r.descriptor.ordinal for r in trace.records] == [0, 1]
    assert trace.records[0].site != trace.records[1].site


# -- facade behaviour --------------------------------------------------------------------

def test_unregistered_target_rejected(session):
    with pytest.raises(UnknownInterface):
        create_interceptor(object(), "x", session)


def test_no_fault_forwards_and_records(kv, session):
    c = create_interceptor(kv, "redis://x", session)
    with session.iteration():
        assert c.get("john_doe") == kv.snapshot()["john_doe"]
        trace = session.current_trace()
    assert [r.kind for r in trace.records] == [CallKind.SYNC]
    assert kv.counters["get"] == 1


def test_calls_outside_iteration_pass_through(kv, session):
    c = create_interceptor(kv, "redis://x", session)
    assert c.get("joe_bloggs") == "joe_bloggs"


def test_non_interface_attributes_pass_through(kv, session):
    c = create_interceptor(kv, "redis://x", session)
    assert c.counters is kv.counters
    assert c.connection_string == "redis://x"


def test_sync_exception_never_reaches_backend(kv, session):
    c = create_interceptor(kv, "redis://x", session)
    with session.iteration(assign("KeyValueCommands/get", TIMEOUT, "john_doe")):
        with pytest.raises(InjectedException) as ei:
            c.get("john_doe")
        trace = session.current_trace()
    assert type(ei.value).__name__ == "RedisCommandTimeoutException"
    assert kv.counters["get"] == 0
    assert trace.records[0].fault.kind == "exception"


def test_sync_byzantine_returns_corruption_without_backend_read(kv, session):
    doc = kv.snapshot()["john_doe"]
    fault = ByzantineFault("structured", TransformerState(doc, 10))
    c = create_interceptor(kv, "redis://x", session)
    with session.iteration(assign("KeyValueCommands/get", fault, "john_doe")):
        got = c.get("john_doe")
    assert got == {**doc, "is_verified": False}
    assert kv.hits("get", "john_doe") == 0


def test_async_exception_surfaces_at_resolution(kv, session):
    c = create_interceptor(kv, "redis://x", session)
    with session.iteration(assign("KeyValueCommands/async_get", TIMEOUT, "joe_bloggs")):
        handle = c.async_get("joe_bloggs")  # must not raise here
        assert handle.state == "Pending"
        trace = session.current_trace()
        assert [r.kind for r in trace.records] == [CallKind.ASYNC]
        with pytest.raises(InjectedException, match=r"^Command timed out after 100 millisecond\(s\)$"):
            resolve_deferred(handle)
        assert handle.state == "Faulted"
        trace = session.current_trace()
    assert [r.kind for r in trace.records] == [CallKind.ASYNC, CallKind.DEFERRED]
    assert trace.records[1].origin == trace.records[0].site
    assert kv.counters["async_get"] == 0


def test_resolution_is_idempotent(kv, session):
    c = create_interceptor(kv, "redis://x", session)
    with session.iteration(assign("KeyValueCommands/async_get", TIMEOUT, "joe_bloggs")):
        h = c.async_get("joe_bloggs")
        errs = []
        for _ in range(2):
            with pytest.raises(InjectedException) as ei:
                h.get()
            errs.append(ei.value)
        trace = session.current_trace()
    assert errs[0] is errs[1]
    assert len(trace.records) == 2


def test_unfaulted_async_resolves_to_backend_value(kv, session):
    c = create_interceptor(kv, "redis://x", session)
    with session.iteration():
        h = c.async_get("joe_bloggs")
        assert h.get() == "joe_bloggs" and h.get() == "joe_bloggs"
        trace = session.current_trace()
    assert [r.kind for r in trace.records] == [CallKind.ASYNC, CallKind.DEFERRED]
    assert trace.records[1].fault is None


def test_async_byzantine_delivered_at_resolution(kv, session):
    fault = ByzantineFault("string_mutate", TransformerState("joe_bloggs", 0))
    c = create_interceptor(kv, "redis://x", session)
    with session.iteration(assign("KeyValueCommands/async_get", fault, "joe_bloggs")):
        assert c.async_get("joe_bloggs").get() == "koe_bloggs"
        trace = session.current_trace()
    assert trace.records[1].fault is not None
    assert kv.counters["async_get"] == 0


def test_stale_handle(kv, session):
    c = create_interceptor(kv, "redis://x", session)
    with session.iteration():
        h = c.async_get("joe_bloggs")
    with pytest.raises(StaleHandle):
        h.get()


def test_resolution_on_another_thread(kv, session):
    c = create_interceptor(kv, "redis://x", session)
    with session.iteration(assign("KeyValueCommands/async_get", TIMEOUT, "joe_bloggs")):
        h = c.async_get("joe_bloggs")
        seen = []

        def worker():
            try:
                h.get()
            except InjectedException as e:
                seen.append(str(e))

        threads = [threading.Thread(target=worker) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        trace = session.current_trace()
    assert seen == ["Command timed out after 100 millisecond(s)"] * 4
    assert len(trace.records) == 2


def test_concurrent_calls_all_recorded(session):
    kv = KeyValueClient({f"k{i}": str(i) for i in range(50)})
    c = create_interceptor(kv, "redis://x", session)
    with session.iteration():
        threads = [threading.Thread(target=c.get, args=(f"k{i}",)) for i in range(50)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        trace = session.current_trace()
    assert len(trace.records) == 50
    assert [r.seq for r in trace.records] == sorted(r.seq for r in trace.records)


# -- transparency ------------------------------------------------------------------------

keys = st.sampled_from(["a", "b", "john_doe", "missing"])
values = st.one_of(st.text(max_size=5), st.dictionaries(st.text(max_size=3), st.booleans(), max_size=3))
ops = st.lists(st.one_of(
    st.tuples(st.just("get"), keys),
    st.tuples(st.just("set"), keys, values),
    st.tuples(st.just("delete"), keys),
    st.tuples(st.just("async_get"), keys),
    st.tuples(st.just("async_set"), keys, values),
), max_size=20)


def run_ops(client, seq):
    out = []
    for name, *args in seq:
        r = getattr(client, name)(*args)
        out.append(r.result() if hasattr(r, "result") else r)
    return out


@settings(max_examples=100, deadline=None)
@given(ops)
def test_transparency_with_empty_assignment(seq):
    seed = {"a": "1", "john_doe": {"x": True}}
    bare, wrapped = KeyValueClient(seed), KeyValueClient(seed)
    session = Session("transparency")
    c = create_interceptor(wrapped, "redis://x", session)
    with session.iteration():
        got = run_ops(c, seq)
        trace = session.current_trace()
    assert got == run_ops(bare, seq)
    assert wrapped.snapshot() == bare.snapshot()
    assert len(trace.calls()) == len(seq)
