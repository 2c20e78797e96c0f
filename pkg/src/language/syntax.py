"""
Lexing, parsing and pretty-printing of the AMCM language.

Expressions:  E ::= true | false | <int> | "<str>" | I
Commands:     C ::= I = E | if (E) C else C | C ; C | read I | write E | { C }

Strict mode accepts only the illustrative grammar: literals 0, 1, true, false,
identifiers, assignment, conditional and sequencing. Braces are pure grouping
and allowed in both modes.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import lark
from lark import Lark, Token, Tree, v_args
from lark.visitors import Transformer_NonRecursive

logger = logging.getLogger(__name__)

RESERVED_WORDS = frozenset({"true", "false", "if", "else", "read", "write"})
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ParseError(Exception):
    """Syntax error with a 1-based position and the set of expected tokens."""

    def __init__(self, message: str, line: int, column: int, expected: Iterable[str] = ()):
        self.message = message
        self.line = line
        self.column = column
        self.expected = frozenset(expected)
        super().__init__(f"line {line}, column {column}: {message}")

    def __eq__(self, other):
        return (
            type(other) is type(self)
            and (self.message, self.line, self.column, self.expected)
            == (other.message, other.line, other.column, other.expected)
        )

    def __hash__(self):
        return hash((type(self), self.message, self.line, self.column))


class StrictModeError(ParseError):
    """Well-formed in extended mode, but outside the strict grammar."""


@dataclass(frozen=True, order=True)
class Ident:
    name: str

    def __post_init__(self):
        if not isinstance(self.name, str) or not _IDENT_RE.match(self.name):
            raise ValueError(f"invalid identifier: {self.name!r}")
        if self.name in RESERVED_WORDS:
            raise ValueError(f"reserved word used as identifier: {self.name!r}")

    def __str__(self) -> str:
        return self.name


# --- Expressions ---

@dataclass(frozen=True)
class TrueLit:
    pass


@dataclass(frozen=True)
class FalseLit:
    pass


@dataclass(frozen=True)
class IntLit:
    value: int

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            raise ValueError(f"IntLit expects an int, got {self.value!r}")


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class Var:
    id: Ident


Exp = Union[TrueLit, FalseLit, IntLit, StrLit, Var]


# --- Commands ---

@dataclass(frozen=True)
class Assign:
    id: Ident
    rhs: Exp


@dataclass(frozen=True)
class If:
    cond: Exp
    then: "Com"
    els: "Com"


@dataclass(frozen=True)
class Seq:
    first: "Com"
    second: "Com"


@dataclass(frozen=True)
class Read:
    id: Ident


@dataclass(frozen=True)
class Write:
    rhs: Exp


Com = Union[Assign, If, Seq, Read, Write]


# --- Grammar ---

GRAMMAR = r"""
program: com?
com: stmt (";" stmt)*

stmt: IDENT "=" exp                          -> assign
    | "if" "(" exp ")" stmt "else" stmt      -> if_
    | "read" IDENT                           -> read
    | "write" exp                            -> write
    | "{" com "}"                            -> block

exp: literal
   | IDENT                                   -> var

literal: "true"                              -> true
       | "false"                             -> false
       | INT                                 -> int
       | STRING                              -> string

literals: (literal ("," literal)*)?

IDENT: /[A-Za-z_][A-Za-z0-9_]*/
INT: /-?[0-9]+/
STRING: /"(?:[^"\\\n]|\\.)*"/
COMMENT: /\/\/[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""

_parser = Lark(
    GRAMMAR,
    start=["program", "com", "exp", "literals"],
    parser="lalr",
    # basic lexer: keywords are reserved in every parser state
    lexer="basic",
    propagate_positions=True,
)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}
_ESCAPE_RE = re.compile(r"\\(.)", re.S)


def decode_string(token: str) -> str:
    """Turns a quoted string token into its text. Unknown escapes keep the character."""
    return _ESCAPE_RE.sub(lambda m: _ESCAPES.get(m.group(1), m.group(1)), token[1:-1])


def encode_string(text: str) -> str:
    out = text.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
    return f'"{out}"'


@v_args(inline=True)
class _ToAst(Transformer_NonRecursive):
    def program(self, com=None):
        return com

    def com(self, *stmts):
        # ';' es asociativo a la derecha: a; b; c => Seq(a, Seq(b, c))
        result = stmts[-1]
        for stmt in reversed(stmts[:-1]):
            result = Seq(stmt, result)
        return result

    def block(self, com):
        return com

    def assign(self, name, rhs):
        return Assign(Ident(str(name)), rhs)

    def if_(self, cond, then, els):
        return If(cond, then, els)

    def read(self, name):
        return Read(Ident(str(name)))

    def write(self, rhs):
        return Write(rhs)

    def exp(self, literal):
        return literal

    def var(self, name):
        return Var(Ident(str(name)))

    def true(self):
        return TrueLit()

    def false(self):
        return FalseLit()

    def int(self, token):
        return IntLit(int(token))

    def string(self, token):
        return StrLit(decode_string(str(token)))

    def literals(self, *items):
        return tuple(items)


def _end_position(source: str) -> tuple[int, int]:
    lines = source.split("\n")
    return len(lines), len(lines[-1]) + 1


def _convert_error(err: lark.exceptions.UnexpectedInput, source: str) -> ParseError:
    line = getattr(err, "line", None)
    column = getattr(err, "column", None)
    if not isinstance(line, int) or line < 1:
        line, column = _end_position(source)

    if isinstance(err, lark.exceptions.UnexpectedCharacters):
        expected = err.allowed or set()
        char = source[err.pos_in_stream] if err.pos_in_stream < len(source) else "<eof>"
        message = f"unexpected character {char!r}"
    elif isinstance(err, lark.exceptions.UnexpectedToken):
        expected = err.expected or set()
        found = "end of input" if err.token.type == "$END" else repr(str(err.token))
        message = f"unexpected {found}"
    else:
        expected = getattr(err, "expected", None) or set()
        message = "unexpected end of input"

    return ParseError(message, line, column, sorted(expected))


def _check_strict(tree: Tree) -> None:
    """Rejects everything the strict grammar does not contain."""
    for node in tree.iter_subtrees_topdown():
        if node.data in ("read", "write"):
            raise StrictModeError(
                f"'{node.data}' is not part of the strict grammar",
                node.meta.line, node.meta.column, (),
            )
        if node.data == "string":
            raise StrictModeError(
                "string literals are not part of the strict grammar",
                node.meta.line, node.meta.column, (),
            )
        if node.data == "int":
            token: Token = node.children[0]
            if str(token) not in ("0", "1"):
                raise StrictModeError(
                    f"integer literal {token} is not part of the strict grammar (only 0 and 1)",
                    token.line, token.column, ("0", "1"),
                )


def _parse(source: str, start: str, strict: bool):
    try:
        tree = _parser.parse(source, start=start)
    except lark.exceptions.UnexpectedInput as err:
        raise _convert_error(err, source) from None
    if strict:
        _check_strict(tree)
    try:
        result = _ToAst().transform(tree)
    except lark.exceptions.VisitError as err:
        meta = getattr(err.obj, "meta", None)
        line = getattr(meta, "line", 1)
        column = getattr(meta, "column", 1)
        raise ParseError(str(err.orig_exc), line, column) from None
    logger.debug("parsed %s: %s", start, type(result).__name__)
    return result


def parse_exp(source: str, strict: bool = False) -> Exp:
    """
    Parses a single expression.

    Raises:
        ParseError: malformed input, with position and expected tokens
        StrictModeError: input outside the strict grammar (strict=True only)
    """
    return _parse(source, "exp", strict)


def parse_com(source: str, strict: bool = False) -> Com:
    """
    Parses a command. `;` nests to the right and `else` is mandatory.

    Raises:
        ParseError: malformed (or empty) input
        StrictModeError: input outside the strict grammar (strict=True only)
    """
    return _parse(source, "com", strict)


def parse_program(source: str, strict: bool = False) -> Optional[Com]:
    """Like parse_com, but a program with no commands parses to None."""
    return _parse(source, "program", strict)


def parse_literals(source: str) -> tuple[Exp, ...]:
    """Parses a comma-separated list of literals, e.g. `1,true,"s"`."""
    return _parse(source, "literals", False)


# --- Pretty printing ---

def pretty_print_exp(e: Exp) -> str:
    if isinstance(e, TrueLit):
        return "true"
    if isinstance(e, FalseLit):
        return "false"
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, StrLit):
        return encode_string(e.value)
    if isinstance(e, Var):
        return e.id.name
    raise TypeError(f"not an expression: {e!r}")


def _print_arm(c: Com) -> str:
    # Un Seq dentro de otro nodo necesita llaves para reparsear igual
    text = pretty_print(c)
    return f"{{ {text} }}" if isinstance(c, Seq) else text


def pretty_print(c: Com) -> str:
    """Renders a command so that parse_com(pretty_print(c)) == c."""
    parts = []
    # Recorremos la espina derecha de Seq de forma iterativa
    while isinstance(c, Seq):
        parts.append(_print_arm(c.first))
        c = c.second
    if isinstance(c, Assign):
        parts.append(f"{c.id.name} = {pretty_print_exp(c.rhs)}")
    elif isinstance(c, If):
        parts.append(
            f"if ({pretty_print_exp(c.cond)}) {_print_arm(c.then)} else {_print_arm(c.els)}"
        )
    elif isinstance(c, Read):
        parts.append(f"read {c.id.name}")
    elif isinstance(c, Write):
        parts.append(f"write {pretty_print_exp(c.rhs)}")
    else:
        raise TypeError(f"not a command: {c!r}")
    return "; ".join(parts)
