"""
Reference semantics. E : Exp -> State -> [Value x State] + {error} and
C : Com -> State -> State + {error}, with `star` as the error-propagating
sequencing operator. The compiled machine is checked against this module.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

from src.language.syntax import (
    Assign, Com, Exp, FalseLit, If, IntLit, Read, Seq, StrLit, TrueLit, Var, Write,
)
from src.semantics.domains import (
    BoolV, Bound, ErrorKind, InputExhausted, IntV, State, StrV, TypeMismatch,
    UnboundIdentifier, Value, bind_value, lookup, tag_of,
)


@dataclass(frozen=True)
class Ok:
    value: Value
    state: State


@dataclass(frozen=True)
class Done:
    state: State


@dataclass(frozen=True)
class Err:
    error: ErrorKind


EvalOutcome = Union[Ok, Err]
ExecOutcome = Union[Done, Err]

Continuation = Callable[[Value, State], ExecOutcome]


def literal_value(e: Exp) -> Value | None:
    """Value of a literal expression, None for identifiers."""
    if isinstance(e, TrueLit):
        return BoolV(True)
    if isinstance(e, FalseLit):
        return BoolV(False)
    if isinstance(e, IntLit):
        return IntV(e.value)
    if isinstance(e, StrLit):
        return StrV(e.value)
    return None


def eval_exp(e: Exp, s: State) -> EvalOutcome:
    """Literals denote themselves; identifiers denote their binding or an error."""
    if isinstance(e, Var):
        binding = lookup(s.memory, e.id)
        if isinstance(binding, Bound):
            return Ok(binding.value, s)
        return Err(UnboundIdentifier(e.id))
    value = literal_value(e)
    if value is None:
        raise TypeError(f"not an expression: {e!r}")
    return Ok(value, s)


def star(o: EvalOutcome, k: Continuation) -> ExecOutcome:
    """o * k: an error on the left is returned as is and k is never called."""
    if isinstance(o, Err):
        return o
    return k(o.value, o.state)


def exec_com(c: Com, s: State) -> ExecOutcome:
    # Pila explícita de comandos pendientes: ni Seq ni If consumen pila de Python
    pending = [c]
    while pending:
        c = pending.pop()
        if isinstance(c, Seq):
            pending.append(c.second)
            pending.append(c.first)
            continue

        if isinstance(c, Assign):
            target = c.id
            outcome = star(eval_exp(c.rhs, s), lambda v, s1: Done(bind_value(s1, target, v)))
        elif isinstance(c, If):
            then, els = c.then, c.els

            def branch(v: Value, s1: State) -> ExecOutcome:
                if not isinstance(v, BoolV):
                    return Err(TypeMismatch("Bool", tag_of(v), "if-condition"))
                pending.append(then if v.value else els)
                return Done(s1)

            outcome = star(eval_exp(c.cond, s), branch)
        elif isinstance(c, Read):
            if not s.input:
                return Err(InputExhausted(c.id))
            head, rest = s.input[0], s.input[1:]
            outcome = Done(bind_value(State(s.memory, rest, s.output), c.id, head))
        elif isinstance(c, Write):
            outcome = star(eval_exp(c.rhs, s), lambda v, s1: Done(State(s1.memory, s1.input, s1.output + (v,))))
        else:
            raise TypeError(f"not a command: {c!r}")

        if isinstance(outcome, Err):
            return outcome
        s = outcome.state
    return Done(s)
