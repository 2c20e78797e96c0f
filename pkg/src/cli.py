"""
Command-line front door: run, trace, compile, check and render.

Exit codes:
    0  success
    1  type mismatch (also the machine step limit)
    2  unbound identifier / slot without content
    3  parse error or bad usage
    4  input exhausted
    5  I/O error
"""
from __future__ import annotations

import argparse
import enum
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Literal, Optional, Sequence

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from src.config import configure_logging, settings
from src.language.syntax import ParseError, StrictModeError, parse_literals, parse_program
from src.semantics.denotational import Done, eval_exp
from src.semantics.domains import (
    ErrorKind, InputExhausted, State, StepLimitExceeded, TypeMismatch, UnboundIdentifier,
    format_error, format_state, format_value,
)
from src.semantics.machine import IDENTITY, compile_com, format_code, format_trace, run_machine
from src.services.templating_service import (
    BindError, BindErrorKind, check_slots, parse_content, parse_template, render,
)

logger = logging.getLogger(__name__)


class ExitCode(enum.IntEnum):
    OK = 0
    TYPE_MISMATCH = 1
    UNBOUND = 2
    PARSE_ERROR = 3
    INPUT_EXHAUSTED = 4
    IO_ERROR = 5


_ERROR_EXIT = {
    UnboundIdentifier: ExitCode.UNBOUND,
    TypeMismatch: ExitCode.TYPE_MISMATCH,
    InputExhausted: ExitCode.INPUT_EXHAUSTED,
    StepLimitExceeded: ExitCode.TYPE_MISMATCH,
}

_BIND_EXIT = {
    BindErrorKind.UNBOUND: ExitCode.UNBOUND,
    BindErrorKind.TYPE_MISMATCH: ExitCode.TYPE_MISMATCH,
}


def exit_code_for(error: ErrorKind) -> ExitCode:
    return _ERROR_EXIT[type(error)]


class UsageError(Exception):
    pass


class CliIOError(Exception):
    pass


class CliParseError(Exception):
    pass


# Schema de la configuración de la línea de comandos (Pydantic)
class CliConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    subcommand: Literal["run", "trace", "compile", "check", "render"]
    strict: bool = False
    input_values: tuple[Any, ...] = ()
    program_path: Optional[Path] = None
    template_path: Optional[Path] = None
    content_path: Optional[Path] = None
    out_path: Optional[Path] = None

    @model_validator(mode="after")
    def _check_combination(self):
        if self.subcommand in ("run", "trace", "compile"):
            if self.program_path is None:
                raise ValueError(f"{self.subcommand} needs a program file")
        else:
            if self.strict:
                raise ValueError("--strict is only valid for run, trace and compile")
            if self.template_path is None or self.content_path is None:
                raise ValueError(f"{self.subcommand} needs a template and a content file")
        if self.input_values and self.subcommand not in ("run", "trace"):
            raise ValueError("--input is only valid for run and trace")
        if self.subcommand == "render" and self.out_path is None:
            raise ValueError("render needs -o <path>")
        return self


def _err(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _describe_parse_error(origin, exc: ParseError) -> str:
    kind = "strict mode error" if isinstance(exc, StrictModeError) else "parse error"
    text = f"{origin}: {kind} at line {exc.line}, column {exc.column}: {exc.message}"
    if exc.expected:
        text += f" (expected: {', '.join(sorted(exc.expected))})"
    return text


def _read_text(path: Path) -> str:
    # read_text normaliza los saltos de línea a \n
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CliIOError(f"cannot read {path}: {exc}") from exc


def _write_atomic(path: Path, data: bytes) -> None:
    """Writes to a temporary file next to `path` and renames it into place."""
    directory = path.parent if str(path.parent) else Path(".")
    tmp_name = None
    try:
        with tempfile.NamedTemporaryFile(dir=directory, prefix=f".{path.name}.", delete=False) as tmp:
            tmp_name = tmp.name
            tmp.write(data)
        os.replace(tmp_name, path)
    except OSError as exc:
        if tmp_name is not None and os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise CliIOError(f"cannot write {path}: {exc}") from exc


def parse_input_values(csv: Optional[str]) -> tuple:
    """`1,true,"s"` -> (IntV(1), BoolV(True), StrV("s"))."""
    if not csv:
        return ()
    values = []
    for literal in parse_literals(csv):
        outcome = eval_exp(literal, State.empty())
        values.append(outcome.value)
    return tuple(values)


def _parse_file(path: Path, parse, **kwargs):
    source = _read_text(path)
    try:
        return parse(source, **kwargs)
    except ParseError as exc:
        raise CliParseError(_describe_parse_error(path, exc)) from exc


def _load_program(path: Path, strict: bool):
    return _parse_file(path, parse_program, strict=strict)


def cmd_run(program_path: Path, strict: bool, input_values: Sequence = ()) -> int:
    program = _load_program(program_path, strict)
    code = compile_com(program) if program is not None else IDENTITY
    outcome, _ = run_machine(code, State(input=tuple(input_values)))
    if not isinstance(outcome, Done):
        _err(format_error(outcome.error))
        return exit_code_for(outcome.error)
    print(format_state(outcome.state))
    for value in outcome.state.output:
        print(f"out: {format_value(value)}")
    return ExitCode.OK


def cmd_trace(program_path: Path, strict: bool, input_values: Sequence = ()) -> int:
    program = _load_program(program_path, strict)
    code = compile_com(program) if program is not None else IDENTITY
    outcome, trace = run_machine(code, State(input=tuple(input_values)))
    print(format_trace(trace))
    if not isinstance(outcome, Done):
        _err(format_error(outcome.error))
        return exit_code_for(outcome.error)
    return ExitCode.OK


def cmd_compile(program_path: Path, strict: bool) -> int:
    program = _load_program(program_path, strict)
    listing = format_code(compile_com(program)) if program is not None else ""
    if listing:
        print(listing)
    return ExitCode.OK


def cmd_check(template_path: Path, content_path: Path) -> int:
    template = _parse_file(template_path, parse_template)
    content = _parse_file(content_path, parse_content)
    code = ExitCode.OK
    for report in check_slots(template, content):
        print(report.describe())
        if code is ExitCode.OK and report.error is not None:
            code = _BIND_EXIT[report.error.kind]
    return code


def cmd_render(template_path: Path, content_path: Path, out_path: Path) -> int:
    template = _parse_file(template_path, parse_template)
    content = _parse_file(content_path, parse_content)
    page = render(template, content)
    _write_atomic(out_path, page.text.encode("utf-8"))
    logger.debug("wrote %d characters to %s", len(page.text), out_path)
    return ExitCode.OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=settings.APP_NAME, description="Abstract machine for content management")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    for name, help_text in (
        ("run", "run a program and print the final state"),
        ("trace", "print every machine configuration of a run"),
        ("compile", "print the compiled instruction listing"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("program", type=Path)
        cmd.add_argument("--strict", action=argparse.BooleanOptionalAction, default=settings.STRICT_DEFAULT)
        if name != "compile":
            cmd.add_argument("--input", default=None, help='comma-separated literals, e.g. 1,true,"s"')

    check_cmd = sub.add_parser("check", help="type-check content against a template")
    check_cmd.add_argument("template", type=Path)
    check_cmd.add_argument("content", type=Path)

    render_cmd = sub.add_parser("render", help="render a page")
    render_cmd.add_argument("template", type=Path)
    render_cmd.add_argument("content", type=Path)
    render_cmd.add_argument("-o", "--output", dest="output", type=Path, required=True)

    return parser


def _build_config(args: argparse.Namespace) -> CliConfig:
    return CliConfig(
        subcommand=args.subcommand,
        strict=getattr(args, "strict", False),
        input_values=parse_input_values(getattr(args, "input", None)),
        program_path=getattr(args, "program", None),
        template_path=getattr(args, "template", None),
        content_path=getattr(args, "content", None),
        out_path=getattr(args, "output", None),
    )


def dispatch(config: CliConfig) -> int:
    if config.subcommand == "run":
        return cmd_run(config.program_path, config.strict, config.input_values)
    if config.subcommand == "trace":
        return cmd_trace(config.program_path, config.strict, config.input_values)
    if config.subcommand == "compile":
        return cmd_compile(config.program_path, config.strict)
    if config.subcommand == "check":
        return cmd_check(config.template_path, config.content_path)
    return cmd_render(config.template_path, config.content_path, config.out_path)


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging()
    try:
        args = build_parser().parse_args(argv)
        config = _build_config(args)
        return int(dispatch(config))
    except UsageError as exc:
        _err(f"usage: {exc}")
        return ExitCode.PARSE_ERROR
    except ValidationError as exc:
        _err(f"usage: {exc.errors()[0]['msg']}")
        return ExitCode.PARSE_ERROR
    except CliParseError as exc:
        _err(str(exc))
        return ExitCode.PARSE_ERROR
    except ParseError as exc:
        _err(_describe_parse_error("--input", exc))
        return ExitCode.PARSE_ERROR
    except BindError as exc:
        _err(str(exc))
        return _BIND_EXIT[exc.kind]
    except CliIOError as exc:
        _err(str(exc))
        return ExitCode.IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
