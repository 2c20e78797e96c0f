"""
Semantic domains: Value = Int + Bool + String, Memory = Ide -> [Value + {unbound}],
State = Memory x Input x Output, plus the error elements.
"""
from __future__ import annotations

import math
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from typing import Union

from src.language.syntax import Ident, encode_string


# --- Values (disjunctive sum, each value carries its tag) ---

@dataclass(frozen=True)
class IntV:
    value: int

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            raise ValueError(f"IntV expects an int, got {self.value!r}")


@dataclass(frozen=True)
class BoolV:
    value: bool

    def __post_init__(self):
        if not isinstance(self.value, bool):
            raise ValueError(f"BoolV expects a bool, got {self.value!r}")


@dataclass(frozen=True)
class StrV:
    value: str

    def __post_init__(self):
        if not isinstance(self.value, str):
            raise ValueError(f"StrV expects a str, got {self.value!r}")


Value = Union[IntV, BoolV, StrV]

_TAGS = {IntV: "Int", BoolV: "Bool", StrV: "Str"}


def tag_of(v: Value) -> str:
    """Name of the sum component a value belongs to: Int, Bool or Str."""
    return _TAGS[type(v)]


# --- Bindings ---

@dataclass(frozen=True)
class Bound:
    value: Value


@dataclass(frozen=True)
class Unbound:
    pass


Binding = Union[Bound, Unbound]

UNBOUND = Unbound()


class MemoryMap(Mapping[Ident, Value]):
    """
    Finitely supported memory. Identifiers absent from the map are unbound;
    the map itself only ever stores values.

    A map is a shared base dict plus a small delta of recent bindings. `bind`
    copies only the delta and folds it into a new base once it outgrows
    roughly the square root of the base, so a trace of n stores keeps
    O(n^1.5) entries instead of O(n^2). Neither dict is mutated after
    construction.
    """

    __slots__ = ("_base", "_delta", "_size", "_hash")

    def __init__(self, entries: Mapping[Ident, Value] | None = None):
        self._base = dict(entries or {})
        self._delta: dict = {}
        self._size = len(self._base)
        self._hash = None

    @classmethod
    def _layered(cls, base: dict, delta: dict) -> "MemoryMap":
        m = cls.__new__(cls)
        m._base = base
        m._delta = delta
        m._size = len(base) + sum(1 for k in delta if k not in base)
        m._hash = None
        return m

    def _merged(self) -> dict:
        return {**self._base, **self._delta} if self._delta else self._base

    def __getitem__(self, key: Ident) -> Value:
        if key in self._delta:
            return self._delta[key]
        return self._base[key]

    def __contains__(self, key) -> bool:
        return key in self._delta or key in self._base

    def __iter__(self) -> Iterator[Ident]:
        return iter(sorted(self._merged()))

    def __len__(self) -> int:
        return self._size

    def __eq__(self, other) -> bool:
        if isinstance(other, MemoryMap):
            return self._merged() == other._merged()
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._merged().items()))
        return self._hash

    def __repr__(self) -> str:
        return f"MemoryMap({format_memory(self)})"

    def bind(self, id: Ident, v: Value) -> "MemoryMap":
        delta = dict(self._delta)
        delta[id] = v
        if len(delta) > max(_MIN_DELTA, math.isqrt(len(self._base))):
            return MemoryMap._layered({**self._base, **delta}, {})
        return MemoryMap._layered(self._base, delta)


_MIN_DELTA = 16


EMPTY_MEMORY = MemoryMap()


def lookup(m: MemoryMap, id: Ident) -> Binding:
    """Total lookup: Bound(v) for a bound identifier, Unbound otherwise."""
    v = m.get(id)
    return UNBOUND if v is None else Bound(v)


@dataclass(frozen=True)
class State:
    memory: MemoryMap = field(default_factory=MemoryMap)
    input: tuple[Value, ...] = ()
    output: tuple[Value, ...] = ()

    def __post_init__(self):
        # Normalizamos listas a tuplas para que la igualdad sea estructural
        object.__setattr__(self, "input", tuple(self.input))
        object.__setattr__(self, "output", tuple(self.output))

    @classmethod
    def empty(cls) -> "State":
        return cls(EMPTY_MEMORY, (), ())


def bind_value(s: State, id: Ident, v: Value) -> State:
    """m[v/I]: same state with `id` rebound to `v`."""
    return State(s.memory.bind(id, v), s.input, s.output)


# --- Errors ---

@dataclass(frozen=True)
class UnboundIdentifier:
    id: Ident


@dataclass(frozen=True)
class TypeMismatch:
    expected: str
    got: str
    site: str


@dataclass(frozen=True)
class InputExhausted:
    id: Ident


@dataclass(frozen=True)
class StepLimitExceeded:
    limit: int


ErrorKind = Union[UnboundIdentifier, TypeMismatch, InputExhausted, StepLimitExceeded]


# --- Canonical text forms ---

def format_value(v: Value) -> str:
    if isinstance(v, BoolV):
        return "true" if v.value else "false"
    if isinstance(v, IntV):
        return str(v.value)
    return encode_string(v.value)


def format_values(values) -> str:
    return ",".join(format_value(v) for v in values)


def format_memory(m: MemoryMap) -> str:
    return "mem{" + ",".join(f"{k}={format_value(m[k])}" for k in m) + "}"


def format_state(s: State) -> str:
    """e.g. `mem{x=0,y=true} in[] out[]`, keys sorted."""
    return f"{format_memory(s.memory)} in[{format_values(s.input)}] out[{format_values(s.output)}]"


def format_error(e: ErrorKind) -> str:
    if isinstance(e, UnboundIdentifier):
        return f"UnboundIdentifier({e.id})"
    if isinstance(e, TypeMismatch):
        return f"TypeMismatch(expected={e.expected}, got={e.got}, site={e.site})"
    if isinstance(e, InputExhausted):
        return f"InputExhausted({e.id})"
    if isinstance(e, StepLimitExceeded):
        return f"StepLimitExceeded({e.limit})"
    raise TypeError(f"not an error kind: {e!r}")
