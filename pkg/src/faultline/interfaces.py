"""Registry of client interfaces the interceptor knows how to wrap.

Whether a method returns a deferred handle is declared here rather than
inferred at runtime, so one facade works for any client type.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .errors import UnknownInterface


@dataclass(frozen=True)
class MethodSpec:
    name: str
    is_async: bool = False
    # None means "no restriction declared"
    throws: Optional[frozenset] = None


@dataclass(frozen=True)
class ClientInterface:
    name: str
    methods: Mapping[str, MethodSpec] = field(default_factory=dict)

    def fqn(self, method: str) -> str:
        return f"{self.name}/{method}"


def split_fqn(method_fqn: str) -> tuple[str, str]:
    interface, sep, method = method_fqn.partition("/")
    if not sep or not interface or not method:
        raise ValueError(f"not a fully qualified method name: {method_fqn!r}")
    return interface, method


class InterfaceRegistry:
    def __init__(self):
        self._by_type: dict[type, ClientInterface] = {}
        self._by_name: dict[str, ClientInterface] = {}

    def register(self, cls: type, interface: ClientInterface) -> None:
        self._by_type[cls] = interface
        self._by_name[interface.name] = interface

    def for_object(self, target: object) -> ClientInterface:
        for klass in type(target).__mro__:
            if klass in self._by_type:
                return self._by_type[klass]
        raise UnknownInterface(
            f"{type(target).__qualname__} has no registered client interface"
        )

    def by_name(self, name: str) -> Optional[ClientInterface]:
        return self._by_name.get(name)

    def method(self, method_fqn: str) -> Optional[MethodSpec]:
        try:
            iface_name, method = split_fqn(method_fqn)
        except ValueError:
            return None
        iface = self._by_name.get(iface_name)
        return None if iface is None else iface.methods.get(method)


DEFAULT_INTERFACES = InterfaceRegistry()


def client_interface(name: str, sync: Iterable[str] = (), async_: Iterable[str] = (),
                     throws: Optional[Mapping[str, Iterable[str]]] = None,
                     registry: InterfaceRegistry = DEFAULT_INTERFACES):
    """Class decorator declaring which methods form an interceptable interface.

    ``throws`` optionally restricts, per method, which exception names a
    catalog may attach to it.
    """
    throws = throws or {}

    def wrap(cls: type) -> type:
        methods = {}
        for m in sync:
            methods[m] = MethodSpec(m, False, frozenset(throws[m]) if m in throws else None)
        for m in async_:
            methods[m] = MethodSpec(m, True, frozenset(throws[m]) if m in throws else None)
        registry.register(cls, ClientInterface(name, methods))
        return cls

    return wrap
