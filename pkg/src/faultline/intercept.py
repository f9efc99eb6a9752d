"""Interception facade around database clients.

:func:`create_interceptor` wraps a client whose type is registered in an
:class:`~faultline.interfaces.InterfaceRegistry`. Every call to a declared
method is recorded into the session's current trace. If the active fault
assignment targets the call site, the real client is never invoked: a
synchronous method raises the fabricated exception (or returns the
corrupted value) at once, while an asynchronous method returns a
:class:`DeferredHandle` that delivers the fault when resolved.
"""

from __future__ import annotations

import contextlib
import enum
import hashlib
import itertools
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

from ._codec import canonical_bytes, preview, sha256_hex
from .errors import OutsideIteration, StaleHandle
from .faults import (ByzantineFault, ExceptionFault, FaultAssignment, FaultSpec,
                     fabricate_exception)
from .interfaces import DEFAULT_INTERFACES, ClientInterface, InterfaceRegistry, MethodSpec
from .transformers import TransformerRegistry

CallSiteId = str

RESOLUTION_FQN = "Future/get"


class CallKind(str, enum.Enum):
    SYNC = "SyncCall"
    ASYNC = "AsyncCall"
    DEFERRED = "DeferredResolution"


@dataclass(frozen=True)
class CallDescriptor:
    method_fqn: str
    args_digest: str
    args_preview: str
    ordinal: int = 0


def args_digest(args: tuple, kwargs: Optional[dict] = None) -> str:
    payload: Any = list(args)
    if kwargs:
        payload = {"args": list(args), "kwargs": kwargs}
    return sha256_hex(canonical_bytes(payload))


def args_preview(args: tuple, kwargs: Optional[dict] = None) -> str:
    parts = [preview(a) for a in args]
    parts += [f"{k}={preview(v)}" for k, v in (kwargs or {}).items()]
    return "[" + ", ".join(parts) + "]"


def resolve_call_site_id(descriptor: CallDescriptor) -> CallSiteId:
    raw = "\x1f".join(
        (descriptor.method_fqn, descriptor.args_digest, str(descriptor.ordinal))
    ).encode("utf-8")
    return sha256_hex(raw)


def test_block_digest(test_name: str) -> str:
    return hashlib.sha1(test_name.encode("utf-8")).hexdigest()


test_block_digest.__test__ = False  # keep pytest from collecting it


@dataclass(frozen=True)
class FaultRecord:
    kind: str  # "exception" | "byzantine"
    spec: FaultSpec
    rendering: str


@dataclass
class InvocationRecord:
    seq: int
    site: CallSiteId
    descriptor: CallDescriptor
    kind: CallKind
    response_preview: str
    fault: Optional[FaultRecord] = None
    origin: Optional[CallSiteId] = None  # originating AsyncCall for DeferredResolution
    response: Any = field(default=None, compare=False, repr=False)
    resolved: bool = field(default=False, compare=False, repr=False)


@dataclass
class ExecutionTrace:
    test_block_digest: str
    records: list = field(default_factory=list)

    def calls(self) -> list:
        return [r for r in self.records if r.kind is not CallKind.DEFERRED]


class _Iteration:
    def __init__(self, ident: int, assignment):
        self.ident = ident
        self.assignment = assignment
        self.records: list[InvocationRecord] = []
        self.ordinals: Counter = Counter()
        self.seq = itertools.count()
        self.reached: set = set()
        self.open = True


class Session:
    """One exploration session: owns the current iteration and its trace.

    Iterations never overlap; within one iteration the interceptors may be
    called from several threads.
    """

    def __init__(self, test_name: str = "", interfaces: InterfaceRegistry = DEFAULT_INTERFACES,
                 transformers: Optional[TransformerRegistry] = None):
        self.test_name = test_name
        self.test_block_digest = test_block_digest(test_name)
        self.interfaces = interfaces
        self.transformers = transformers or TransformerRegistry()
        self._lock = threading.RLock()
        self._iteration: Optional[_Iteration] = None
        self._counter = itertools.count()

    # -- iteration lifecycle -------------------------------------------------

    def begin_iteration(self, assignment=None) -> int:
        with self._lock:
            if self._iteration is not None and self._iteration.open:
                raise RuntimeError("an iteration is already running")
            self._iteration = _Iteration(next(self._counter), assignment or FaultAssignment())
            return self._iteration.ident

    def end_iteration(self) -> tuple[ExecutionTrace, set]:
        with self._lock:
            it = self._require()
            it.open = False
            records = sorted(it.records, key=lambda r: r.seq)
            return ExecutionTrace(self.test_block_digest, records), set(it.reached)

    @contextlib.contextmanager
    def iteration(self, assignment=None) -> Iterator["Session"]:
        self.begin_iteration(assignment)
        try:
            yield self
        finally:
            if self._iteration is not None and self._iteration.open:
                self.end_iteration()

    @property
    def active(self) -> bool:
        it = self._iteration
        return it is not None and it.open

    @property
    def assignment(self):
        return self._require().assignment

    def current_trace(self) -> ExecutionTrace:
        """Snapshot of the running iteration's records."""
        with self._lock:
            it = self._require()
            return ExecutionTrace(self.test_block_digest, sorted(it.records, key=lambda r: r.seq))

    def _require(self) -> _Iteration:
        it = self._iteration
        if it is None or not it.open:
            raise OutsideIteration("no iteration is running")
        return it

    # -- predicates ------------------------------------------------------------

    def was_fault_injected(self) -> bool:
        return bool(self._require().assignment)

    def was_fault_injected_on(self, method_fqn: str) -> bool:
        return self._require().assignment.targets_method(method_fqn)

    # -- used by the facade ------------------------------------------------------

    def _open_call(self, method_fqn: str, args: tuple, kwargs: dict):
        with self._lock:
            it = self._iteration
            if it is None or not it.open:
                return None
            digest = args_digest(args, kwargs)
            key = (method_fqn, digest)
            ordinal = it.ordinals[key]
            it.ordinals[key] += 1
            desc = CallDescriptor(method_fqn, digest, args_preview(args, kwargs), ordinal)
            site = resolve_call_site_id(desc)
            fault = it.assignment.get(site)
            if fault is not None:
                it.reached.add(site)
            return it, next(it.seq), desc, site, fault

    def _append(self, it: _Iteration, record: InvocationRecord) -> None:
        with self._lock:
            it.records.append(record)

    def fault_record(self, fault: FaultSpec) -> FaultRecord:
        if isinstance(fault, ExceptionFault):
            return FaultRecord(fault.kind, fault, fault.render())
        return FaultRecord(fault.kind, fault, fault.render(self.transformers))


_NOTHING = object()


class DeferredHandle:
    """Placeholder returned by an intercepted asynchronous method.

    Resolution (:meth:`result`, alias :meth:`get`) appends exactly one
    ``DeferredResolution`` record however many times it is called.
    """

    def __init__(self, session: Session, iteration: _Iteration, site: CallSiteId,
                 *, future: Any = None, value: Any = _NOTHING,
                 fault: Optional[FaultSpec] = None):
        self.site = site
        self._session = session
        self._iteration = iteration
        self._future = future
        self._preset = value
        self._fault = fault
        self._lock = threading.Lock()
        self._state = "Pending"
        self._value: Any = None
        self._error: Optional[BaseException] = None

    @property
    def state(self) -> str:
        return self._state

    def result(self) -> Any:
        with self._lock:
            if not self._iteration.open:
                raise StaleHandle(f"handle for site {self.site[:12]} outlived its iteration")
            if self._state == "Pending":
                self._settle()
        if self._state == "Faulted":
            raise self._error
        return self._value

    get = result

    def _settle(self) -> None:
        session, it = self._session, self._iteration
        opened = session._open_call(RESOLUTION_FQN, (), {})
        _, seq, desc, _, _ = opened
        record = None
        if isinstance(self._fault, ExceptionFault):
            self._error = fabricate_exception(self._fault)
            self._state = "Faulted"
            record = InvocationRecord(seq, self.site, desc, CallKind.DEFERRED,
                                      self._fault.render(), session.fault_record(self._fault),
                                      origin=self.site)
        elif self._preset is not _NOTHING:
            self._value, self._state = self._preset, "Resolved"
            record = InvocationRecord(seq, self.site, desc, CallKind.DEFERRED,
                                      preview(self._value), session.fault_record(self._fault),
                                      origin=self.site, response=self._value, resolved=True)
        else:
            try:
                value = self._future.result() if hasattr(self._future, "result") else self._future
            except Exception as e:
                self._error, self._state = e, "Faulted"
                record = InvocationRecord(seq, self.site, desc, CallKind.DEFERRED,
                                          f"{type(e).__name__}: {e}", origin=self.site)
            else:
                self._value, self._state = value, "Resolved"
                record = InvocationRecord(seq, self.site, desc, CallKind.DEFERRED,
                                          preview(value), origin=self.site,
                                          response=value, resolved=True)
        session._append(it, record)

    def __repr__(self) -> str:
        return f"DeferredHandle(site={self.site[:12]}, state={self._state})"


def resolve_deferred(handle: DeferredHandle) -> Any:
    return handle.result()


class Interceptor:
    """Facade standing in for a wrapped client.

    Attributes that are not declared interface methods pass straight
    through to the target unrecorded.
    """

    def __init__(self, target: Any, connection_string: str, session: Session,
                 interface: ClientInterface):
        self._target = target
        self._connection_string = connection_string
        self._session = session
        self._interface = interface

    @property
    def connection_string(self) -> str:
        return self._connection_string

    @property
    def target(self) -> Any:
        return self._target

    def __getattr__(self, name: str) -> Any:
        attr = getattr(self._target, name)
        spec = self._interface.methods.get(name)
        if spec is None or not callable(attr):
            return attr

        def method(*args, **kwargs):
            return self._invoke(spec, attr, args, kwargs)

        method.__name__ = name
        method.__doc__ = getattr(attr, "__doc__", None)
        return method

    def __repr__(self) -> str:
        return f"Interceptor({self._interface.name}, {self._connection_string!r})"

    def _invoke(self, spec: MethodSpec, real, args: tuple, kwargs: dict) -> Any:
        session = self._session
        opened = session._open_call(self._interface.fqn(spec.name), args, kwargs)
        if opened is None:
            return real(*args, **kwargs)
        it, seq, desc, site, fault = opened
        kind = CallKind.ASYNC if spec.is_async else CallKind.SYNC

        if fault is None:
            try:
                value = real(*args, **kwargs)
            except Exception as e:
                session._append(it, InvocationRecord(seq, site, desc, kind,
                                                     f"{type(e).__name__}: {e}"))
                raise
            if spec.is_async:
                handle = DeferredHandle(session, it, site, future=value)
                session._append(it, InvocationRecord(seq, site, desc, kind, repr(handle),
                                                     response=handle))
                return handle
            session._append(it, InvocationRecord(seq, site, desc, kind, preview(value),
                                                 response=value, resolved=True))
            return value

        frec = session.fault_record(fault)
        if spec.is_async:
            if isinstance(fault, ByzantineFault):
                handle = DeferredHandle(session, it, site, value=fault.apply(session.transformers),
                                        fault=fault)
            else:
                handle = DeferredHandle(session, it, site, fault=fault)
            session._append(it, InvocationRecord(seq, site, desc, kind, repr(handle), frec,
                                                 response=handle))
            return handle
        if isinstance(fault, ExceptionFault):
            session._append(it, InvocationRecord(seq, site, desc, kind, fault.render(), frec))
            raise fabricate_exception(fault)
        value = fault.apply(session.transformers)
        session._append(it, InvocationRecord(seq, site, desc, kind, preview(value), frec,
                                             response=value, resolved=True))
        return value


def create_interceptor(target: Any, connection_string: str, session: Session) -> Interceptor:
    """Return a recording, fault-injecting facade for ``target``.

    Raises :class:`~faultline.errors.UnknownInterface` when the target's
    type was never registered.
    """
    return Interceptor(target, connection_string, session, session.interfaces.for_object(target))
