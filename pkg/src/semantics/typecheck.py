"""
Type expressions built from the four domain constructors (function space,
product, sequence, disjunctive sum) over the atomic domains Int, Bool, Str,
and the checker that matches composite content values against them.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import lark
from lark import Lark, v_args
from lark.visitors import Transformer_NonRecursive

from src.language.syntax import ParseError
from src.semantics.domains import BoolV, IntV, StrV, Value, format_value


# --- Type expressions ---

@dataclass(frozen=True)
class IntT:
    pass


@dataclass(frozen=True)
class BoolT:
    pass


@dataclass(frozen=True)
class StrT:
    pass


@dataclass(frozen=True)
class Product:
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("Product needs at least one component")


@dataclass(frozen=True)
class SequenceT:
    element: "TypeExpr"


@dataclass(frozen=True)
class Sum:
    alternatives: tuple

    def __post_init__(self):
        object.__setattr__(self, "alternatives", tuple(self.alternatives))
        if not self.alternatives:
            raise ValueError("Sum needs at least one alternative")


@dataclass(frozen=True)
class FunctionT:
    dom: "TypeExpr"
    cod: "TypeExpr"


TypeExpr = Union[IntT, BoolT, StrT, Product, SequenceT, Sum, FunctionT]

ATOMIC_TYPES = (IntT, BoolT, StrT)


def is_atomic_type(t: TypeExpr) -> bool:
    return isinstance(t, ATOMIC_TYPES)


# --- Content values ---

@dataclass(frozen=True)
class Atom:
    value: Value


@dataclass(frozen=True)
class TupleValue:
    items: tuple

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise ValueError("a tuple needs at least one item")


@dataclass(frozen=True)
class ListValue:
    items: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))


@dataclass(frozen=True)
class Inj:
    index: int
    payload: "ContentValue"

    def __post_init__(self):
        if isinstance(self.index, bool) or not isinstance(self.index, int) or self.index < 1:
            raise ValueError(f"injection index must be a positive integer, got {self.index!r}")


ContentValue = Union[Atom, TupleValue, ListValue, Inj]


# --- Atomic predicates ---

def is_num(v: Value) -> bool:
    return isinstance(v, IntV)


def is_bool(v: Value) -> bool:
    return isinstance(v, BoolV)


def is_str(v: Value) -> bool:
    return isinstance(v, StrV)


_PREDICATES = {IntT: (is_num, "Int"), BoolT: (is_bool, "Bool"), StrT: (is_str, "Str")}


# --- Checking ---

@dataclass(frozen=True)
class Accept:
    pass


@dataclass(frozen=True)
class Reject:
    reason: str
    path: str


CheckResult = Union[Accept, Reject]

ACCEPT = Accept()


def _child(path: str, index: int) -> str:
    return f"/{index}" if path == "/" else f"{path}/{index}"


def check(t: TypeExpr, cv: ContentValue, path: str = "/") -> CheckResult:
    """
    Structural check of a content value against a type expression.

    Atoms go through IsNum/IsBool/IsStr; composite types combine the checks
    of their components. Reject paths index components from 1, and the first
    failure in left-to-right order is the one reported.
    """
    pending = [(t, cv, path)]
    while pending:
        t, cv, path = pending.pop()

        if isinstance(t, ATOMIC_TYPES):
            predicate, name = _PREDICATES[type(t)]
            if not (isinstance(cv, Atom) and predicate(cv.value)):
                return Reject(f"expected {name}", path)

        elif isinstance(t, Product):
            if not isinstance(cv, TupleValue):
                return Reject("expected tuple", path)
            if len(cv.items) != len(t.components):
                return Reject(f"arity mismatch: expected {len(t.components)}, got {len(cv.items)}", path)
            for i in range(len(cv.items), 0, -1):
                pending.append((t.components[i - 1], cv.items[i - 1], _child(path, i)))

        elif isinstance(t, SequenceT):
            if not isinstance(cv, ListValue):
                return Reject("expected list", path)
            for i in range(len(cv.items), 0, -1):
                pending.append((t.element, cv.items[i - 1], _child(path, i)))

        elif isinstance(t, Sum):
            if not isinstance(cv, Inj):
                return Reject("expected injection", path)
            if not 1 <= cv.index <= len(t.alternatives):
                return Reject("index out of range", path)
            pending.append((t.alternatives[cv.index - 1], cv.payload, _child(path, cv.index)))

        elif isinstance(t, FunctionT):
            return Reject("function types uninhabited by content", path)

        else:
            raise TypeError(f"not a type expression: {t!r}")
    return ACCEPT


# --- Concrete syntax: int, bool, str, prod<...>, seq<t>, sum<...>, fn<t1,t2> ---

TYPE_GRAMMAR = r"""
type: "int"                        -> int_t
    | "bool"                       -> bool_t
    | "str"                        -> str_t
    | "prod" "<" type ("," type)* ">"  -> prod_t
    | "seq" "<" type ">"           -> seq_t
    | "sum" "<" type ("," type)* ">"   -> sum_t
    | "fn" "<" type "," type ">"   -> fn_t

%import common.WS
%ignore WS
"""

_type_parser = Lark(TYPE_GRAMMAR, start="type", parser="lalr", lexer="basic")


@v_args(inline=True)
class _ToType(Transformer_NonRecursive):
    def int_t(self):
        return IntT()

    def bool_t(self):
        return BoolT()

    def str_t(self):
        return StrT()

    def prod_t(self, *components):
        return Product(components)

    def seq_t(self, element):
        return SequenceT(element)

    def sum_t(self, *alternatives):
        return Sum(alternatives)

    def fn_t(self, dom, cod):
        return FunctionT(dom, cod)


def parse_type(source: str) -> TypeExpr:
    try:
        tree = _type_parser.parse(source)
    except lark.exceptions.UnexpectedInput as err:
        line = getattr(err, "line", 1)
        column = getattr(err, "column", 1)
        if not isinstance(line, int) or line < 1:
            line, column = 1, len(source) + 1
        expected = getattr(err, "expected", None) or getattr(err, "allowed", None) or ()
        raise ParseError(f"bad type syntax {source!r}", line, column, sorted(expected)) from None
    return _ToType().transform(tree)


def format_type(t: TypeExpr) -> str:
    if isinstance(t, IntT):
        return "int"
    if isinstance(t, BoolT):
        return "bool"
    if isinstance(t, StrT):
        return "str"
    if isinstance(t, Product):
        return "prod<" + ",".join(format_type(c) for c in t.components) + ">"
    if isinstance(t, SequenceT):
        return f"seq<{format_type(t.element)}>"
    if isinstance(t, Sum):
        return "sum<" + ",".join(format_type(a) for a in t.alternatives) + ">"
    if isinstance(t, FunctionT):
        return f"fn<{format_type(t.dom)},{format_type(t.cod)}>"
    raise TypeError(f"not a type expression: {t!r}")


def format_content(cv: ContentValue) -> str:
    """Content-file literal syntax for a value (quoted strings, injection indexes kept)."""
    if isinstance(cv, Atom):
        return format_value(cv.value)
    if isinstance(cv, TupleValue):
        return "(" + ", ".join(format_content(i) for i in cv.items) + ")"
    if isinstance(cv, ListValue):
        return "[" + "; ".join(format_content(i) for i in cv.items) + "]"
    if isinstance(cv, Inj):
        return f"inj {cv.index} {format_content(cv.payload)}"
    raise TypeError(f"not a content value: {cv!r}")
