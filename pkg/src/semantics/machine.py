"""
The abstract machine: compilation of ASTs to linear code, single-step
execution over an explicit configuration, and the full state-change trace.

Code concatenation is composition and the empty code is the identity.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Union

from src.config import settings
from src.language.syntax import Assign, Com, Exp, Ident, If, Read, Seq, Var, Write
from src.semantics.denotational import Done, Err, ExecOutcome, literal_value
from src.semantics.domains import (
    BoolV, Bound, ErrorKind, InputExhausted, MemoryMap, State, StepLimitExceeded,
    TypeMismatch, UnboundIdentifier, Value, format_error, format_memory, format_value,
    format_values, lookup, tag_of,
)

logger = logging.getLogger(__name__)


class MachineMisuseError(Exception):
    """Stepping a configuration that is not Running, or running malformed code."""


# --- Instructions ---

@dataclass(frozen=True)
class PushConst:
    value: Value


@dataclass(frozen=True)
class LoadVar:
    id: Ident


@dataclass(frozen=True)
class Store:
    id: Ident


@dataclass(frozen=True)
class Branch:
    then_code: "Code"
    else_code: "Code"

    def __post_init__(self):
        object.__setattr__(self, "then_code", tuple(self.then_code))
        object.__setattr__(self, "else_code", tuple(self.else_code))


@dataclass(frozen=True)
class ReadIn:
    id: Ident


@dataclass(frozen=True)
class WriteOut:
    pass


Instr = Union[PushConst, LoadVar, Store, Branch, ReadIn, WriteOut]
Code = tuple  # tuple[Instr, ...]

IDENTITY: Code = ()


def compose(*codes: Code) -> Code:
    """Sequential composition of code fragments."""
    result: list = []
    for code in codes:
        result.extend(code)
    return tuple(result)


def code_size(code: Code) -> int:
    """Instruction count, Branch arms included."""
    total = 0
    pending = [code]
    while pending:
        for instr in pending.pop():
            total += 1
            if isinstance(instr, Branch):
                pending.append(instr.then_code)
                pending.append(instr.else_code)
    return total


class CodeCursor:
    """
    The code still to run, as a chain of frames. Each frame is a code tuple
    plus the index of its next instruction, and frames share their tails:
    advancing or splicing a Branch arm allocates one frame and copies nothing.

    Compares equal to any cursor or tuple holding the same instructions.
    """

    __slots__ = ("_code", "_pc", "_next", "_size")

    def __init__(self, code: Code, pc: int = 0, next: Optional["CodeCursor"] = None):
        self._code = code
        self._pc = pc
        self._next = next
        self._size = len(code) - pc + (next._size if next is not None else 0)

    @classmethod
    def of(cls, code) -> "CodeCursor":
        if isinstance(code, CodeCursor):
            return code
        code = tuple(code)
        return cls(code) if code else EMPTY_CODE

    @property
    def head(self) -> Instr:
        if not self._size:
            raise IndexError("no code left")
        return self._code[self._pc]

    def advance(self) -> "CodeCursor":
        """The cursor past the head instruction."""
        if self._pc + 1 < len(self._code):
            return CodeCursor(self._code, self._pc + 1, self._next)
        return self._next if self._next is not None else EMPTY_CODE

    def prepend(self, code: Code) -> "CodeCursor":
        if not code:
            return self
        return CodeCursor(tuple(code), 0, self if self._size else None)

    def __len__(self) -> int:
        return self._size

    def __iter__(self):
        frame = self
        while frame is not None:
            yield from frame._code[frame._pc:]
            frame = frame._next

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if isinstance(other, (CodeCursor, tuple)):
            return len(self) == len(other) and tuple(self) == tuple(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(tuple(self))

    def __repr__(self) -> str:
        return f"CodeCursor({tuple(self)!r})"


EMPTY_CODE = CodeCursor(())


# --- Configurations ---

@dataclass(frozen=True)
class Running:
    pass


@dataclass(frozen=True)
class Halted:
    pass


@dataclass(frozen=True)
class Faulted:
    error: ErrorKind


Status = Union[Running, Halted, Faulted]

RUNNING = Running()
HALTED = Halted()


@dataclass(frozen=True)
class MachineState:
    code: CodeCursor
    stack: tuple[Value, ...]
    store: MemoryMap
    input: tuple[Value, ...]
    output: tuple[Value, ...]
    status: Status = RUNNING

    def __post_init__(self):
        object.__setattr__(self, "code", CodeCursor.of(self.code))

    @classmethod
    def initial(cls, code: Code, s: State) -> "MachineState":
        return cls(CodeCursor.of(code), (), s.memory, s.input, s.output, RUNNING)

    def to_state(self) -> State:
        return State(self.store, self.input, self.output)


Trace = tuple  # tuple[MachineState, ...]


class RunResult(NamedTuple):
    outcome: ExecOutcome
    trace: Trace


# --- Compilation ---

def compile_exp(e: Exp) -> Code:
    if isinstance(e, Var):
        return (LoadVar(e.id),)
    value = literal_value(e)
    if value is None:
        raise TypeError(f"not an expression: {e!r}")
    return (PushConst(value),)


class _Attach(NamedTuple):
    cond_code: Code


_OPEN = object()


def compile_com(c: Com) -> Code:
    # Pila de tareas (comandos, _OPEN, _Attach) y pila de listas de salida:
    # cada If abre una lista por brazo y _Attach las cierra en un Branch
    tasks: list = [c]
    outputs: list[list] = [[]]
    while tasks:
        task = tasks.pop()
        if task is _OPEN:
            outputs.append([])
        elif isinstance(task, _Attach):
            else_code = outputs.pop()
            then_code = outputs.pop()
            outputs[-1].extend(task.cond_code)
            outputs[-1].append(Branch(then_code, else_code))
        elif isinstance(task, Seq):
            tasks.append(task.second)
            tasks.append(task.first)
        elif isinstance(task, If):
            tasks.extend((_Attach(compile_exp(task.cond)), task.els, _OPEN, task.then, _OPEN))
        elif isinstance(task, Assign):
            outputs[-1].extend(compile_exp(task.rhs))
            outputs[-1].append(Store(task.id))
        elif isinstance(task, Read):
            outputs[-1].append(ReadIn(task.id))
        elif isinstance(task, Write):
            outputs[-1].extend(compile_exp(task.rhs))
            outputs[-1].append(WriteOut())
        else:
            raise TypeError(f"not a command: {task!r}")
    return tuple(outputs[0])


# --- Execution ---

def _pop(ms: MachineState, instr: Instr) -> tuple[Value, tuple[Value, ...]]:
    if not ms.stack:
        raise MachineMisuseError(f"stack underflow at {type(instr).__name__}")
    return ms.stack[-1], ms.stack[:-1]


class AbstractMachine:
    def __init__(self, max_steps: Optional[int] = None):
        self.max_steps = max_steps if max_steps is not None else settings.MAX_STEPS

    def step(self, ms: MachineState) -> MachineState:
        """
        Performs one state change.

        Raises:
            MachineMisuseError: if `ms` is not Running, or on stack underflow
        """
        if not isinstance(ms.status, Running):
            raise MachineMisuseError(f"cannot step a {type(ms.status).__name__} configuration")
        if not ms.code:
            return replace(ms, status=HALTED)

        instr, rest = ms.code.head, ms.code.advance()

        if isinstance(instr, PushConst):
            return replace(ms, code=rest, stack=ms.stack + (instr.value,))

        if isinstance(instr, LoadVar):
            binding = lookup(ms.store, instr.id)
            if not isinstance(binding, Bound):
                return replace(ms, status=Faulted(UnboundIdentifier(instr.id)))
            return replace(ms, code=rest, stack=ms.stack + (binding.value,))

        if isinstance(instr, Store):
            value, stack = _pop(ms, instr)
            return replace(ms, code=rest, stack=stack, store=ms.store.bind(instr.id, value))

        if isinstance(instr, Branch):
            value, stack = _pop(ms, instr)
            if not isinstance(value, BoolV):
                return replace(ms, status=Faulted(TypeMismatch("Bool", tag_of(value), "if-condition")))
            arm = instr.then_code if value.value else instr.else_code
            return replace(ms, code=rest.prepend(arm), stack=stack)

        if isinstance(instr, ReadIn):
            if not ms.input:
                return replace(ms, status=Faulted(InputExhausted(instr.id)))
            return replace(
                ms, code=rest, store=ms.store.bind(instr.id, ms.input[0]), input=ms.input[1:]
            )

        if isinstance(instr, WriteOut):
            value, stack = _pop(ms, instr)
            return replace(ms, code=rest, stack=stack, output=ms.output + (value,))

        raise MachineMisuseError(f"unknown instruction: {instr!r}")

    def run(self, code: Code, s: State, max_steps: Optional[int] = None) -> RunResult:
        """
        Steps from the initial configuration until the status is no longer Running.

        Args:
            code: código a ejecutar
            s: estado inicial (memoria, entrada, salida)
            max_steps: tope de pasos (por defecto el de la máquina)

        Returns:
            RunResult: el resultado (Done/Err) y la traza completa
        """
        limit = max_steps if max_steps is not None else self.max_steps
        ms = MachineState.initial(code, s)
        trace = [ms]
        steps = 0
        while isinstance(ms.status, Running):
            if steps >= limit:
                ms = replace(ms, status=Faulted(StepLimitExceeded(limit)))
            else:
                ms = self.step(ms)
                steps += 1
            trace.append(ms)

        if isinstance(ms.status, Halted):
            outcome: ExecOutcome = Done(ms.to_state())
        else:
            outcome = Err(ms.status.error)
        logger.debug("machine stopped after %d steps: %s", steps, format_status(ms.status))
        return RunResult(outcome, tuple(trace))


# Instancia global, como el resto de servicios
machine = AbstractMachine()


def step(ms: MachineState) -> MachineState:
    return machine.step(ms)


def run_machine(code: Code, s: State, max_steps: Optional[int] = None) -> RunResult:
    return machine.run(code, s, max_steps)


# --- Text forms ---

def format_status(status: Status) -> str:
    if isinstance(status, Faulted):
        return f"Faulted({format_error(status.error)})"
    return type(status).__name__


def format_configuration(n: int, ms: MachineState) -> str:
    return (
        f"#{n} code={len(ms.code)} stack=[{format_values(ms.stack)}] {format_memory(ms.store)} "
        f"in[{format_values(ms.input)}] out[{format_values(ms.output)}] status={format_status(ms.status)}"
    )


def format_trace(trace: Trace) -> str:
    return "\n".join(format_configuration(n, ms) for n, ms in enumerate(trace))


def format_code(code: Code, indent: int = 0) -> str:
    """Instruction listing, one per line, with Branch arms indented."""
    lines = []
    # Cada entrada: (iterador de instrucciones o de rótulos, sangría)
    pending = [(iter(code), indent)]
    while pending:
        items, depth = pending[-1]
        instr = next(items, None)
        if instr is None:
            pending.pop()
            continue
        pad = "  " * depth
        if isinstance(instr, str):
            lines.append(f"{pad}{instr}")
        elif isinstance(instr, PushConst):
            lines.append(f"{pad}PushConst {format_value(instr.value)}")
        elif isinstance(instr, (LoadVar, Store, ReadIn)):
            lines.append(f"{pad}{type(instr).__name__} {instr.id}")
        elif isinstance(instr, WriteOut):
            lines.append(f"{pad}WriteOut")
        elif isinstance(instr, Branch):
            lines.append(f"{pad}Branch")
            lines.append(f"{pad}  then:")
            pending.append((iter(instr.else_code), depth + 2))
            pending.append((iter(("  else:",)), depth))
            pending.append((iter(instr.then_code), depth + 2))
    return "\n".join(lines)
