"""Byzantine transformers: exhaustively iterable corruptions of response values.

A transformer describes a finite corruption space over a reference value.
``space(reference)`` is the number of distinct corruptions and
``corrupt(reference, context)`` produces the one selected by ``context``.
The generic :meth:`Transformer.step` drives that space one corruption at a
time and enforces the contract (in-range context, output differs from the
reference).

Structured documents (dicts and lists) are handled by
:class:`StructuredTransform`, which walks leaves depth-first in declaration
order, exhausts each leaf's own transformer before moving on, and reports
its progress as a nested ``referenceValue``/``context`` accumulator.
"""

from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Optional, Sequence

from ._codec import from_jsonable, to_jsonable
from .errors import ContractViolation, Exhausted

# printable ASCII without space; a char outside the cycle maps to its first element
ALPHABET = "".join(chr(c) for c in range(0x21, 0x7F))

DEFAULT_BYTE_FLIP_CAP = 64

TYPE_TAGS = ("string", "boolean", "byte-array", "structured-document", "number")


@dataclass(frozen=True)
class TransformerState:
    reference_value: Any
    context: int = 0
    exhausted: bool = False


def _same(a: Any, b: Any) -> bool:
    return type(a) is type(b) and a == b


class Transformer:
    """Base class for corruption spaces.

    Subclasses set ``transformer_id`` and implement :meth:`space` and
    :meth:`corrupt`. ``has_context`` is False for spaces of size one, where
    the reference value alone determines the corruption.
    """

    transformer_id: str = ""
    has_context: bool = True

    def space(self, reference: Any) -> int:
        raise NotImplementedError

    def corrupt(self, reference: Any, context: int) -> Any:
        raise NotImplementedError

    def _checked_space(self, reference: Any) -> int:
        n = self.space(reference)
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise ContractViolation(
                f"{self.transformer_id}: space must be a non-negative int, got {n!r}"
            )
        return n

    def start(self, reference: Any) -> TransformerState:
        return TransformerState(reference, 0, self._checked_space(reference) == 0)

    def step(self, state: TransformerState) -> tuple[Any, TransformerState]:
        if state.exhausted:
            raise Exhausted(f"{self.transformer_id}: no corruption left")
        n = self._checked_space(state.reference_value)
        c = state.context
        if not 0 <= c < n:
            raise ContractViolation(
                f"{self.transformer_id}: context {c} outside declared space {n}"
            )
        out = self.corrupt(state.reference_value, c)
        if _same(out, state.reference_value):
            raise ContractViolation(
                f"{self.transformer_id}: step {c} returned the reference value unchanged"
            )
        return out, dataclasses.replace(state, context=c + 1, exhausted=c + 1 >= n)

    def iterate(self, reference: Any) -> Iterator[tuple[Any, TransformerState]]:
        """Yield ``(corruption, state_that_produced_it)`` until exhausted."""
        state = self.start(reference)
        while not state.exhausted:
            out, nxt = self.step(state)
            yield out, state
            state = nxt

    def accumulator(self, state: TransformerState) -> dict:
        doc: dict = {"referenceValue": to_jsonable(state.reference_value)}
        if self.has_context:
            doc["context"] = state.context
        return doc

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.transformer_id}>"


class StringMutate(Transformer):
    transformer_id = "string_mutate"

    def space(self, reference: str) -> int:
        return len(reference)

    def corrupt(self, reference: str, context: int) -> str:
        ch = reference[context]
        i = ALPHABET.find(ch)
        new = ALPHABET[(i + 1) % len(ALPHABET)] if i >= 0 else ALPHABET[0]
        return reference[:context] + new + reference[context + 1:]


class BoolNegate(Transformer):
    transformer_id = "bool_negate"
    has_context = False

    def space(self, reference: bool) -> int:
        return 1

    def corrupt(self, reference: bool, context: int) -> bool:
        return not reference


class ByteFlip(Transformer):
    """Flip one bit per step, MSB-first within each byte.

    When ``8 * len`` exceeds ``cap`` only ``cap`` bit positions are visited,
    evenly strided over the whole array.
    """

    transformer_id = "byte_flip"

    def __init__(self, cap: int = DEFAULT_BYTE_FLIP_CAP):
        if cap < 1:
            raise ValueError("byte_flip cap must be positive")
        self.cap = cap

    def space(self, reference: bytes) -> int:
        return min(8 * len(reference), self.cap)

    def bit_position(self, reference: bytes, context: int) -> int:
        nbits = 8 * len(reference)
        if nbits <= self.cap:
            return context
        return context * nbits // self.cap

    def corrupt(self, reference: bytes, context: int) -> bytes:
        pos = self.bit_position(reference, context)
        buf = bytearray(reference)
        buf[pos // 8] ^= 0x80 >> (pos % 8)
        return type(reference)(buf)


class CacheMiss(Transformer):
    """Replace the whole response with a cache-miss marker.

    Order is null, empty string, empty list; markers equal to the reference
    are dropped so every step is a real corruption.
    """

    transformer_id = "cache_miss"
    MISSES: tuple = (None, "", [])

    def _options(self, reference: Any) -> list:
        return [m for m in self.MISSES if not _same(m, reference)]

    def space(self, reference: Any) -> int:
        return len(self._options(reference))

    def corrupt(self, reference: Any, context: int) -> Any:
        return copy.copy(self._options(reference)[context])


class FunctionTransformer(Transformer):
    """Transformer built from an ordered list of corruption functions.

    >>> t = FunctionTransformer("number_negate_zero", [lambda x: -x, lambda x: 0])
    >>> [out for out, _ in t.iterate(5)]
    [-5, 0]
    """

    def __init__(self, transformer_id: str, functions: Sequence[Callable[[Any], Any]],
                 has_context: bool = True):
        self.transformer_id = transformer_id
        self.functions = list(functions)
        self.has_context = has_context

    def space(self, reference: Any) -> int:
        return len(self.functions)

    def corrupt(self, reference: Any, context: int) -> Any:
        return self.functions[context](copy.deepcopy(reference))


@dataclass(frozen=True)
class Leaf:
    path: tuple
    value: Any
    transformer: Transformer
    size: int


def _children(node: Any) -> Iterator[tuple[Any, Any]]:
    if isinstance(node, dict):
        yield from node.items()
    else:
        yield from enumerate(node)


def _set_path(doc: Any, path: tuple, value: Any) -> None:
    for key in path[:-1]:
        doc = doc[key]
    doc[path[-1]] = value


class StructuredTransform(Transformer):
    """Corrupt one leaf of a nested document per step."""

    transformer_id = "structured"

    def __init__(self, registry: "TransformerRegistry"):
        self.registry = registry

    def walk(self, reference: Any) -> tuple[list[Leaf], list[tuple]]:
        """Return ``(leaves, skipped_paths)`` in depth-first declaration order.

        Null leaves and leaves with no registered transformer are skipped;
        the latter are returned so callers can warn about them.
        """
        leaves: list[Leaf] = []
        skipped: list[tuple] = []

        def visit(node: Any, path: tuple) -> None:
            for key, value in _children(node):
                p = path + (key,)
                if isinstance(value, (dict, list)):
                    visit(value, p)
                    continue
                if value is None:
                    continue
                t = self.registry.for_value(value)
                if t is None:
                    skipped.append(p)
                    continue
                n = t._checked_space(value)
                if n:
                    leaves.append(Leaf(p, value, t, n))

        visit(reference, ())
        return leaves, skipped

    def space(self, reference: Any) -> int:
        return sum(leaf.size for leaf in self.walk(reference)[0])

    def _locate(self, leaves: list[Leaf], context: int) -> tuple[int, int]:
        offset = 0
        for i, leaf in enumerate(leaves):
            if context < offset + leaf.size:
                return i, context - offset
            offset += leaf.size
        raise Exhausted(f"structured: context {context} past the last leaf")

    def corrupt(self, reference: Any, context: int) -> Any:
        leaves, _ = self.walk(reference)
        i, local = self._locate(leaves, context)
        leaf = leaves[i]
        out = copy.deepcopy(reference)
        _set_path(out, leaf.path, leaf.transformer.step(TransformerState(leaf.value, local))[0])
        return out

    def accumulator(self, state: TransformerState) -> dict:
        leaves, _ = self.walk(state.reference_value)
        i, local = self._locate(leaves, state.context)
        touched = []
        for j, leaf in enumerate(leaves[: i + 1]):
            ctx = local if j == i else leaf.size - 1
            touched.append((leaf.path, leaf.transformer.accumulator(TransformerState(leaf.value, ctx))))
        return _nest(state.reference_value, touched)


def _nest(reference: Any, touched: list[tuple[tuple, dict]]) -> dict:
    entries = []
    k = 0
    while k < len(touched):
        key = touched[k][0][0]
        group = []
        # DFS order keeps leaves under the same key contiguous
        while k < len(touched) and touched[k][0][0] == key:
            group.append(touched[k])
            k += 1
        if len(group) == 1 and len(group[0][0]) == 1:
            value = group[0][1]
        else:
            value = _nest(reference[key], [(p[1:], d) for p, d in group])
        entries.append({"key": key, "value": value})
    return {"referenceValue": to_jsonable(reference), "context": entries}


class TransformerRegistry:
    """Routes a value's type tag to the transformer that corrupts it.

    ``number`` has no built-in; register one to make numeric leaves
    corruptible. ``cache_miss`` is not type-routed and is always available
    through :meth:`get`.
    """

    def __init__(self, byte_flip_cap: int = DEFAULT_BYTE_FLIP_CAP):
        self.byte_flip_cap = byte_flip_cap
        self.cache_miss = CacheMiss()
        self._by_tag: dict[str, Transformer] = {
            "string": StringMutate(),
            "boolean": BoolNegate(),
            "byte-array": ByteFlip(byte_flip_cap),
            "structured-document": StructuredTransform(self),
        }

    @staticmethod
    def type_tag_of(value: Any) -> Optional[str]:
        if isinstance(value, bool):
            return "boolean"
        if isinstance(value, (int, float)):
            return "number"
        if isinstance(value, str):
            return "string"
        if isinstance(value, (bytes, bytearray)):
            return "byte-array"
        if isinstance(value, (dict, list)):
            return "structured-document"
        return None

    def register(self, type_tag: str, implementation: Transformer) -> "TransformerRegistry":
        if type_tag not in TYPE_TAGS:
            raise ValueError(f"unknown type tag {type_tag!r}; expected one of {TYPE_TAGS}")
        if not isinstance(implementation, Transformer):
            raise TypeError("implementation must be a Transformer")
        if isinstance(implementation, StructuredTransform):
            implementation.registry = self
        self._by_tag[type_tag] = implementation
        return self

    def for_tag(self, type_tag: str) -> Optional[Transformer]:
        return self._by_tag.get(type_tag)

    def for_value(self, value: Any) -> Optional[Transformer]:
        tag = self.type_tag_of(value)
        return None if tag is None else self._by_tag.get(tag)

    def get(self, transformer_id: str) -> Transformer:
        if transformer_id == self.cache_miss.transformer_id:
            return self.cache_miss
        for t in self._by_tag.values():
            if t.transformer_id == transformer_id:
                return t
        raise KeyError(f"no transformer with id {transformer_id!r}")

    def copy(self) -> "TransformerRegistry":
        new = TransformerRegistry(self.byte_flip_cap)
        for tag, t in self._by_tag.items():
            if not isinstance(t, StructuredTransform):
                new._by_tag[tag] = t
        return new


def register_transformer(registry: TransformerRegistry, type_tag: str,
                         implementation: Transformer) -> TransformerRegistry:
    return registry.register(type_tag, implementation)


def replay(accumulator: dict, registry: TransformerRegistry,
           transformer_id: Optional[str] = None) -> Any:
    """Rebuild the corrupted value an accumulator describes.

    The last ``context`` entry at each level is the active leaf; earlier
    entries are history and are not re-applied.
    """
    reference = from_jsonable(accumulator["referenceValue"])
    ctx = accumulator.get("context")
    if isinstance(ctx, list):
        if not ctx:
            raise ValueError("accumulator has no active leaf")
        active = ctx[-1]
        out = copy.deepcopy(reference)
        out[active["key"]] = replay(active["value"], registry)
        return out
    t = registry.get(transformer_id) if transformer_id else registry.for_value(reference)
    if t is None:
        raise KeyError(f"no transformer for {type(reference).__name__}")
    return t.corrupt(reference, ctx if ctx is not None else 0)
