"""Fault vocabulary: catalog-constrained exceptions and Byzantine corruptions."""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional, Union

import jsonschema

from ._codec import from_jsonable, to_jsonable
from .errors import SchemaError, UnknownMethod
from .interfaces import DEFAULT_INTERFACES, InterfaceRegistry, split_fqn
from .transformers import TransformerRegistry, TransformerState

UNDEFINED = "undefined"

CATALOG_SCHEMA = {
    "type": "object",
    "required": ["client_interface", "entries"],
    "additionalProperties": False,
    "properties": {
        "client_interface": {"type": "string", "minLength": 1},
        "entries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["method", "exceptions"],
                "additionalProperties": False,
                "properties": {
                    "method": {"type": "string", "minLength": 1},
                    "exceptions": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["name", "message", "async_capable"],
                            "additionalProperties": False,
                            "properties": {
                                "name": {"type": "string", "minLength": 1},
                                "code": {"type": ["string", "null"]},
                                "message": {"type": "string"},
                                "cause_message": {"type": ["string", "null"]},
                                "description": {"type": ["string", "null"]},
                                "async_capable": {"type": "boolean"},
                            },
                        },
                    },
                },
            },
        },
    },
}


@dataclass(frozen=True)
class ExceptionFault:
    exception_name: str
    message: str
    code: Optional[str] = None
    cause_message: Optional[str] = None
    description: Optional[str] = None

    kind = "exception"

    def identity(self) -> tuple:
        return ("exception", self.exception_name, self.message, self.code,
                self.cause_message, self.description)

    def render(self) -> str:
        return (
            f"{self.exception_name} code = {self.code or UNDEFINED}"
            f" message = {self.message}"
            f" cause_message = {self.cause_message or UNDEFINED}"
            f" description = {self.description or UNDEFINED}"
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "exception_name": self.exception_name,
            "message": self.message,
            "code": self.code,
            "cause_message": self.cause_message,
            "description": self.description,
        }


@dataclass(frozen=True)
class ByzantineFault:
    transformer_id: str
    state: TransformerState

    kind = "byzantine"

    def identity(self) -> tuple:
        return ("byzantine", self.transformer_id, self.state.context)

    def apply(self, registry: TransformerRegistry) -> Any:
        return registry.get(self.transformer_id).step(self.state)[0]

    def accumulator(self, registry: TransformerRegistry) -> dict:
        return registry.get(self.transformer_id).accumulator(self.state)

    def render(self, registry: TransformerRegistry) -> str:
        return json.dumps(self.accumulator(registry), ensure_ascii=False)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "transformer_id": self.transformer_id,
            "reference_value": to_jsonable(self.state.reference_value),
            "context": self.state.context,
            "exhausted": self.state.exhausted,
        }


FaultSpec = Union[ExceptionFault, ByzantineFault]


def fault_from_dict(doc: Mapping) -> FaultSpec:
    if doc["kind"] == "exception":
        return ExceptionFault(doc["exception_name"], doc["message"], doc.get("code"),
                              doc.get("cause_message"), doc.get("description"))
    if doc["kind"] == "byzantine":
        state = TransformerState(from_jsonable(doc["reference_value"]), doc["context"],
                                 doc.get("exhausted", False))
        return ByzantineFault(doc["transformer_id"], state)
    raise SchemaError(f"unknown fault kind {doc['kind']!r}")


@dataclass(frozen=True)
class CatalogEntry:
    exception_name: str
    message: str
    code: Optional[str] = None
    cause_message: Optional[str] = None
    description: Optional[str] = None
    async_capable: bool = False

    def to_fault(self) -> ExceptionFault:
        return ExceptionFault(self.exception_name, self.message, self.code,
                              self.cause_message, self.description)


@dataclass(frozen=True)
class FaultCatalog:
    client_interface: str
    entries: Mapping[str, tuple] = field(default_factory=dict)
    source: Optional[str] = None

    def contains(self, method_fqn: str, fault: ExceptionFault) -> bool:
        return any(e.to_fault() == fault for e in self.entries.get(method_fqn, ()))


def load_catalog(source: Union[str, os.PathLike, Mapping],
                 interfaces: InterfaceRegistry = DEFAULT_INTERFACES) -> FaultCatalog:
    """Load and validate a catalog from a path or an already-parsed document.

    Raises :class:`SchemaError` for malformed documents and
    :class:`UnknownMethod` for entries naming methods the interface lacks.
    """
    origin = None
    if isinstance(source, Mapping):
        doc = source
    else:
        origin = os.fspath(source)
        try:
            with open(origin, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{origin}: not valid JSON: {e}") from e
    try:
        jsonschema.validate(doc, CATALOG_SCHEMA)
    except jsonschema.ValidationError as e:
        raise SchemaError(f"{origin or 'catalog'}: {e.message}") from e

    iface_name = doc["client_interface"]
    iface = interfaces.by_name(iface_name)
    if iface is None:
        raise UnknownMethod(f"client interface {iface_name!r} is not registered")

    entries: dict[str, tuple] = {}
    for entry in doc["entries"]:
        fqn = entry["method"]
        try:
            owner, method = split_fqn(fqn)
        except ValueError as e:
            raise SchemaError(str(e)) from e
        if owner != iface_name or method not in iface.methods:
            raise UnknownMethod(f"{fqn} is not a method of {iface_name}")
        spec = iface.methods[method]
        items = []
        for exc in entry["exceptions"]:
            if spec.throws is not None and exc["name"] not in spec.throws:
                raise SchemaError(f"{exc['name']} is not throwable by {fqn}")
            items.append(CatalogEntry(exc["name"], exc["message"], exc.get("code"),
                                      exc.get("cause_message"), exc.get("description"),
                                      exc["async_capable"]))
        entries[fqn] = entries.get(fqn, ()) + tuple(items)
    return FaultCatalog(iface_name, entries, origin)


def catalogs_by_interface(catalogs: Iterable[FaultCatalog]) -> dict[str, FaultCatalog]:
    out: dict[str, FaultCatalog] = {}
    for cat in catalogs:
        if cat.client_interface in out:
            raise SchemaError(f"two catalogs for interface {cat.client_interface!r}")
        out[cat.client_interface] = cat
    return out


def enumerate_exception_faults(site: str, descriptor, catalog: FaultCatalog,
                               interfaces: InterfaceRegistry = DEFAULT_INTERFACES
                               ) -> list[ExceptionFault]:
    entries = catalog.entries.get(descriptor.method_fqn, ())
    spec = interfaces.method(descriptor.method_fqn)
    if spec is not None and spec.is_async:
        entries = [e for e in entries if e.async_capable]
    return [e.to_fault() for e in entries]


class InjectedException(Exception):
    """Base class of every fabricated client exception.

    Tests that want to survive injected faults catch this (or the specific
    fabricated class, reachable via :func:`exception_class`).
    """

    def __init__(self, fault: ExceptionFault):
        super().__init__(fault.message)
        self.fault = fault
        self.code = fault.code
        self.cause_message = fault.cause_message
        self.description = fault.description

    def render(self) -> str:
        return self.fault.render()


_classes: dict[str, type] = {}
_classes_lock = threading.Lock()


def exception_class(name: str) -> type:
    """Return the (cached) fabricated exception class called ``name``."""
    with _classes_lock:
        cls = _classes.get(name)
        if cls is None:
            cls = type(name, (InjectedException,), {"__module__": "faultline.injected"})
            _classes[name] = cls
        return cls


def fabricate_exception(fault: ExceptionFault) -> InjectedException:
    return exception_class(fault.exception_name)(fault)


@dataclass(frozen=True)
class FaultAssignment:
    """Call site -> fault for one iteration; empty means the baseline.

    ``descriptors`` keeps each targeted site's call descriptor so
    predicates and reports can name the method without re-deriving it.
    """

    faults: Mapping[str, FaultSpec] = field(default_factory=dict)
    descriptors: Mapping[str, Any] = field(default_factory=dict)

    def get(self, site: str) -> Optional[FaultSpec]:
        return self.faults.get(site)

    def __bool__(self) -> bool:
        return bool(self.faults)

    def __len__(self) -> int:
        return len(self.faults)

    def __iter__(self):
        return iter(self.faults)

    def items(self):
        return self.faults.items()

    def targets_method(self, method_fqn: str) -> bool:
        return any(d.method_fqn == method_fqn for d in self.descriptors.values())

    def signature(self) -> tuple:
        return tuple(sorted((site, f.identity()) for site, f in self.faults.items()))

    def with_fault(self, site: str, fault: FaultSpec, descriptor: Any) -> "FaultAssignment":
        if site in self.faults:
            raise ValueError("at most one fault per call site")
        return FaultAssignment({**self.faults, site: fault},
                               {**self.descriptors, site: descriptor})
