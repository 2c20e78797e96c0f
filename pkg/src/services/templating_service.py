"""
Servicio de plantillas: convierte plantillas de página en páginas.

A template is literal text with typed slots `{{name:type}}`. Content records
bind slot names to content values. Atomic slots are bound by compiling an
assignment program and running it on the machine; composite slots are
type-checked and substituted from a side table.
"""
from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass
from typing import Mapping, Optional, Union

import lark
from lark import Lark, v_args
from lark.visitors import Transformer_NonRecursive

from src.language.syntax import (
    Assign, Com, FalseLit, Ident, IntLit, ParseError, Seq, StrLit, TrueLit, decode_string,
)
from src.semantics.denotational import Done
from src.semantics.domains import BoolV, Bound, EMPTY_MEMORY, IntV, State, StrV, Value, format_error, lookup
from src.semantics.machine import IDENTITY, compile_com, run_machine
from src.semantics.typecheck import (
    Atom, ContentValue, Inj, ListValue, Reject, TupleValue, TypeExpr, check, is_atomic_type, parse_type,
)

logger = logging.getLogger(__name__)


# --- Types ---

@dataclass(frozen=True)
class Literal:
    text: str


@dataclass(frozen=True)
class Slot:
    name: Ident
    ty: TypeExpr


Segment = Union[Literal, Slot]


@dataclass(frozen=True)
class Template:
    segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        names = [s.name for s in self.segments if isinstance(s, Slot)]
        if len(names) != len(set(names)):
            raise ValueError("slot names must be unique within a template")

    @property
    def slots(self) -> tuple:
        return tuple(s for s in self.segments if isinstance(s, Slot))


@dataclass(frozen=True)
class ContentRecord:
    entries: Mapping[Ident, ContentValue]

    def __post_init__(self):
        object.__setattr__(self, "entries", dict(self.entries))

    def __hash__(self):
        return hash(frozenset(self.entries.items()))


@dataclass(frozen=True)
class Page:
    text: str


class BindErrorKind(str, enum.Enum):
    UNBOUND = "UNBOUND"
    TYPE_MISMATCH = "TYPE MISMATCH"


class BindError(Exception):
    """A slot that cannot be bound: no content, or content of the wrong type."""

    def __init__(self, kind: BindErrorKind, slot: Ident, reason: str = "", path: str = "/"):
        self.kind = kind
        self.slot = slot
        self.reason = reason
        self.path = path
        detail = f" {reason} at {path}" if kind is BindErrorKind.TYPE_MISMATCH else ""
        super().__init__(f"{slot}: {kind.value}{detail}")


class RenderError(Exception):
    """The binding program faulted on the machine. Unreachable for checked content."""


# --- Template parsing ---

_PLACEHOLDER_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*:(.*)\Z", re.S)


def _position(source: str, offset: int) -> tuple[int, int]:
    line = source.count("\n", 0, offset) + 1
    column = offset - (source.rfind("\n", 0, offset) + 1) + 1
    return line, column


def parse_template(source: str) -> Template:
    """
    Parsea una plantilla con huecos tipados.

    Args:
        source: texto de la plantilla; `\\{` es una llave literal, así que `\\{{` escribe `{{`
            y `\\{{{n:int}}` pone una llave delante del hueco

    Returns:
        Template: segmentos literales y huecos, en orden

    Raises:
        ParseError: hueco mal formado, tipo inválido o nombre repetido
    """
    segments: list[Segment] = []
    buffer: list[str] = []
    seen: set[Ident] = set()
    i = 0
    while i < len(source):
        if source.startswith("\\{", i):
            buffer.append("{")
            i += 2
            continue
        if not source.startswith("{{", i):
            buffer.append(source[i])
            i += 1
            continue

        line, column = _position(source, i)
        end = source.find("}}", i + 2)
        if end < 0:
            raise ParseError("unterminated placeholder", line, column, ("}}",))
        match = _PLACEHOLDER_RE.match(source, i + 2, end)
        if not match:
            raise ParseError("malformed placeholder, expected {{name:type}}", line, column, ("name:type",))
        try:
            name = Ident(match.group(1))
        except ValueError as exc:
            raise ParseError(str(exc), line, column) from None
        if name in seen:
            raise ParseError(f'duplicate slot "{name}"', line, column)
        try:
            ty = parse_type(match.group(2).strip())
        except ParseError as exc:
            raise ParseError(exc.message, line, column, exc.expected) from None

        if buffer:
            segments.append(Literal("".join(buffer)))
            buffer = []
        segments.append(Slot(name, ty))
        seen.add(name)
        i = end + 2

    if buffer:
        segments.append(Literal("".join(buffer)))
    return Template(tuple(segments))


# --- Content parsing ---

CONTENT_GRAMMAR = r"""
lit: INT                               -> int
   | "true"                            -> true
   | "false"                           -> false
   | STRING                            -> string
   | "(" lit ("," lit)* ")"            -> tuple
   | "[" (lit (";" lit)*)? "]"         -> list
   | "inj" INT lit                     -> inj

INT: /-?[0-9]+/
STRING: /"(?:[^"\\\n]|\\.)*"/
COMMENT: /#[^\n]*/

%import common.WS_INLINE
%ignore WS_INLINE
%ignore COMMENT
"""

_content_parser = Lark(CONTENT_GRAMMAR, start="lit", parser="lalr", lexer="basic")

_ENTRY_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*=")


@v_args(inline=True)
class _ToContent(Transformer_NonRecursive):
    def int(self, token):
        return Atom(IntV(int(token)))

    def true(self):
        return Atom(BoolV(True))

    def false(self):
        return Atom(BoolV(False))

    def string(self, token):
        return Atom(StrV(decode_string(str(token))))

    def tuple(self, *items):
        return TupleValue(items)

    def list(self, *items):
        return ListValue(items)

    def inj(self, index, payload):
        return Inj(int(index), payload)


def parse_content(source: str) -> ContentRecord:
    """
    Parsea un fichero de contenido línea a línea (`name = literal`).
    Acepta finales de línea \\n, \\r\\n y \\r.

    Raises:
        ParseError: con número de línea; también para claves duplicadas
    """
    entries: dict[Ident, ContentValue] = {}
    source = source.replace("\r\n", "\n").replace("\r", "\n")
    for number, raw in enumerate(source.split("\n"), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        match = _ENTRY_RE.match(raw)
        if not match:
            raise ParseError("expected `name = literal`", number, 1, ("name",))
        try:
            name = Ident(match.group(1))
        except ValueError as exc:
            raise ParseError(str(exc), number, match.start(1) + 1) from None
        if name in entries:
            raise ParseError(f'duplicate key "{name}"', number, match.start(1) + 1)

        offset = match.end()
        try:
            tree = _content_parser.parse(raw[offset:])
            entries[name] = _ToContent().transform(tree)
        except lark.exceptions.UnexpectedInput as err:
            column = getattr(err, "column", None)
            column = offset + column if isinstance(column, int) and column > 0 else len(raw) + 1
            expected = getattr(err, "expected", None) or getattr(err, "allowed", None) or ()
            raise ParseError(f"bad literal for {name}", number, column, sorted(expected)) from None
        except lark.exceptions.VisitError as err:
            raise ParseError(str(err.orig_exc), number, offset + 1) from None
    return ContentRecord(entries)


# --- Binding ---

@dataclass(frozen=True)
class SlotReport:
    slot: Ident
    error: Optional[BindError] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def describe(self) -> str:
        if self.error is None:
            return f"{self.slot}: OK"
        return str(self.error)


def _check_slot(slot: Slot, content: ContentRecord) -> Optional[BindError]:
    if slot.name not in content.entries:
        # El hueco queda como variable libre
        return BindError(BindErrorKind.UNBOUND, slot.name)
    result = check(slot.ty, content.entries[slot.name])
    if isinstance(result, Reject):
        return BindError(BindErrorKind.TYPE_MISMATCH, slot.name, result.reason, result.path)
    return None


def check_slots(t: Template, c: ContentRecord) -> list[SlotReport]:
    """Un informe por hueco, en el orden de la plantilla."""
    return [SlotReport(slot.name, _check_slot(slot, c)) for slot in t.slots]


def _literal_of(v: Value):
    if isinstance(v, BoolV):
        return TrueLit() if v.value else FalseLit()
    if isinstance(v, IntV):
        return IntLit(v.value)
    return StrLit(v.value)


def compile_binding(t: Template, c: ContentRecord) -> Optional[Com]:
    """
    Compila las asignaciones de los huecos atómicos.

    Args:
        t: plantilla
        c: registro de contenido

    Returns:
        Optional[Com]: Seq anidado a la derecha de Assign, o None si no hay huecos atómicos

    Raises:
        BindError: el primer hueco (en orden) sin contenido o con tipo incorrecto
    """
    assigns = []
    for slot in t.slots:
        error = _check_slot(slot, c)
        if error is not None:
            raise error
        if is_atomic_type(slot.ty):
            assigns.append(Assign(slot.name, _literal_of(c.entries[slot.name].value)))
        else:
            logger.debug("slot %s bound through the side table", slot.name)

    if not assigns:
        return None
    program = assigns[-1]
    for assign in reversed(assigns[:-1]):
        program = Seq(assign, program)
    return program


def render_value(cv: ContentValue) -> str:
    parts = []
    # Pila de valores por pintar y de separadores ya resueltos
    pending: list = [cv]
    while pending:
        item = pending.pop()
        if isinstance(item, str):
            parts.append(item)
        elif isinstance(item, Atom):
            v = item.value
            if isinstance(v, BoolV):
                parts.append("true" if v.value else "false")
            elif isinstance(v, IntV):
                parts.append(str(v.value))
            else:
                parts.append(v.value)
        elif isinstance(item, (TupleValue, ListValue)):
            opener, separator, closer = ("(", ", ", ")") if isinstance(item, TupleValue) else ("[", "; ", "]")
            pending.append(closer)
            for i in range(len(item.items) - 1, -1, -1):
                pending.append(item.items[i])
                if i:
                    pending.append(separator)
            pending.append(opener)
        elif isinstance(item, Inj):
            # El índice es metadato de tipo, no contenido de la página
            pending.append(item.payload)
        else:
            raise TypeError(f"not a content value: {item!r}")
    return "".join(parts)


def render(t: Template, c: ContentRecord) -> Page:
    """
    Maps a template and its content to a page.

    Raises:
        BindError: some slot has no content or content of the wrong type
    """
    program = compile_binding(t, c)
    code = compile_com(program) if program is not None else IDENTITY
    outcome, _ = run_machine(code, State(EMPTY_MEMORY, (), ()))
    if not isinstance(outcome, Done):
        raise RenderError(format_error(outcome.error))

    memory = outcome.state.memory
    parts = []
    for segment in t.segments:
        if isinstance(segment, Literal):
            parts.append(segment.text)
        elif is_atomic_type(segment.ty):
            binding = lookup(memory, segment.name)
            if not isinstance(binding, Bound):
                raise RenderError(f"slot {segment.name} left unbound by the binding program")
            parts.append(render_value(Atom(binding.value)))
        else:
            parts.append(render_value(c.entries[segment.name]))
    return Page("".join(parts))
