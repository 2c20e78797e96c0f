import random
import tracemalloc

import pytest
from hypothesis import given

from src.language.syntax import Assign, Ident, If, IntLit, Read, Seq, TrueLit, Var, Write
from src.semantics.denotational import Done, Err, exec_com
from src.semantics.domains import (
    BoolV, InputExhausted, IntV, MemoryMap, State, StepLimitExceeded, TypeMismatch, UnboundIdentifier,
)
from src.semantics.machine import (
    HALTED, IDENTITY, RUNNING, AbstractMachine, Branch, CodeCursor, Faulted, Halted, LoadVar, MachineMisuseError,
    MachineState, PushConst, ReadIn, Running, Store, WriteOut, code_size, compile_com, compile_exp,
    compose, format_code, format_trace, run_machine, step,
)
from tests.generators import INITIAL_STATES, commands, enumerate_commands, random_com, random_state, states

x, y, b = Ident("x"), Ident("y"), Ident("b")
EMPTY = State.empty()


def config(code, stack=(), store=None, inp=(), out=(), status=RUNNING):
    return MachineState(tuple(code), tuple(stack), store or MemoryMap(), tuple(inp), tuple(out), status)


def assert_well_formed(trace, code, s):
    assert trace[0] == MachineState.initial(code, s)
    for before, after in zip(trace, trace[1:]):
        assert isinstance(before.status, Running)
        assert before != after
        assert step(before) == after
    assert not isinstance(trace[-1].status, Running)
    assert len(trace) - 1 <= code_size(code) + 1
    if isinstance(trace[-1].status, Halted):
        assert trace[-1].code == () and trace[-1].stack == ()


class TestCompile:
    def test_expressions(self):
        assert compile_exp(IntLit(0)) == (PushConst(IntV(0)),)
        assert compile_exp(Var(x)) == (LoadVar(x),)
        assert compile_exp(TrueLit()) == (PushConst(BoolV(True)),)

    def test_assign(self):
        assert compile_com(Assign(x, IntLit(1))) == (PushConst(IntV(1)), Store(x))

    def test_seq_is_concatenation(self):
        c = Seq(Assign(x, IntLit(0)), Assign(y, IntLit(1)))
        assert compile_com(c) == (PushConst(IntV(0)), Store(x), PushConst(IntV(1)), Store(y))

    def test_if(self):
        c = If(Var(b), Assign(x, IntLit(0)), Assign(x, IntLit(1)))
        assert compile_com(c) == (
            LoadVar(b),
            Branch((PushConst(IntV(0)), Store(x)), (PushConst(IntV(1)), Store(x))),
        )

    def test_read_write(self):
        assert compile_com(Seq(Read(x), Write(Var(x)))) == (ReadIn(x), LoadVar(x), WriteOut())

    def test_expression_code_pushes_one_value(self):
        outcome, trace = run_machine(compile_exp(Var(x)), State(MemoryMap({x: IntV(4)})))
        assert trace[-1].status == HALTED and trace[-1].stack == (IntV(4),)
        outcome, _ = run_machine(compile_exp(Var(x)), EMPTY)
        assert outcome == Err(UnboundIdentifier(x))


class TestStep:
    def test_push_then_halt(self):
        after = step(config([PushConst(IntV(1))]))
        assert after == config([], stack=[IntV(1)])
        assert step(after).status == HALTED

    def test_load_unbound_faults(self):
        ms = config([LoadVar(x)])
        assert step(ms) == config([LoadVar(x)], status=Faulted(UnboundIdentifier(x)))

    def test_store(self):
        assert step(config([Store(x)], stack=[IntV(1)])) == config([], store=MemoryMap({x: IntV(1)}))

    def test_branch_on_non_bool(self):
        ms = config([Branch((), ())], stack=[IntV(0)])
        assert step(ms).status == Faulted(TypeMismatch("Bool", "Int", "if-condition"))

    def test_branch_splices_arm(self):
        arm = (PushConst(IntV(0)), Store(x))
        ms = config([Branch(arm, ()), WriteOut()], stack=[IntV(9), BoolV(True)])
        assert step(ms) == config(arm + (WriteOut(),), stack=[IntV(9)])

    def test_read_in(self):
        ms = config([ReadIn(x)], inp=[IntV(1), IntV(2)])
        assert step(ms) == config([], store=MemoryMap({x: IntV(1)}), inp=[IntV(2)])
        assert step(config([ReadIn(x)])).status == Faulted(InputExhausted(x))

    def test_write_out(self):
        ms = config([WriteOut()], stack=[IntV(3)], out=[BoolV(True)])
        assert step(ms) == config([], out=[BoolV(True), IntV(3)])

    @pytest.mark.parametrize("status", [HALTED, Faulted(UnboundIdentifier(x))])
    def test_stepping_a_stopped_machine_is_misuse(self, status):
        with pytest.raises(MachineMisuseError):
            step(config([], status=status))

    def test_stack_underflow_is_misuse(self):
        with pytest.raises(MachineMisuseError):
            step(config([Store(x)]))


class TestRun:
    def test_assignment_trace(self):
        outcome, trace = run_machine(compile_com(Assign(x, IntLit(1))), EMPTY)
        assert outcome == Done(State(MemoryMap({x: IntV(1)})))
        # inicial, tras PushConst, tras Store, Halted
        assert len(trace) == 4
        assert [type(ms.status) for ms in trace] == [Running, Running, Running, Halted]

    def test_empty_code_is_identity(self):
        s = State(MemoryMap({x: BoolV(False)}), (IntV(1),), (IntV(2),))
        outcome, trace = run_machine(IDENTITY, s)
        assert outcome == Done(s)
        assert len(trace) == 2 and trace[-1].status == HALTED

    def test_fault_is_last_entry(self):
        outcome, trace = run_machine(compile_com(Assign(x, Var(y))), EMPTY)
        assert outcome == Err(UnboundIdentifier(y))
        assert trace[-1].status == Faulted(UnboundIdentifier(y))
        assert all(isinstance(ms.status, Running) for ms in trace[:-1])

    def test_step_limit(self):
        code = compile_com(Seq(Assign(x, IntLit(0)), Assign(y, IntLit(1))))
        outcome, trace = run_machine(code, EMPTY, max_steps=2)
        assert outcome == Err(StepLimitExceeded(2))
        assert len(trace) == 4
        assert AbstractMachine(max_steps=100).run(code, EMPTY).outcome == exec_com(
            Seq(Assign(x, IntLit(0)), Assign(y, IntLit(1))), EMPTY
        )

    def test_format_trace(self):
        _, trace = run_machine(compile_com(Assign(x, IntLit(0))), EMPTY)
        assert format_trace(trace).splitlines() == [
            "#0 code=2 stack=[] mem{} in[] out[] status=Running",
            "#1 code=1 stack=[0] mem{} in[] out[] status=Running",
            "#2 code=0 stack=[] mem{x=0} in[] out[] status=Running",
            "#3 code=0 stack=[] mem{x=0} in[] out[] status=Halted",
        ]

    def test_format_code(self):
        c = If(Var(b), Assign(x, IntLit(0)), Write(Var(x)))
        assert format_code(compile_com(c)).splitlines() == [
            "LoadVar b",
            "Branch",
            "  then:",
            "    PushConst 0",
            "    Store x",
            "  else:",
            "    LoadVar x",
            "    WriteOut",
        ]


class TestEquivalence:
    def test_exhaustive_core_language(self):
        cases = 0
        for c in enumerate_commands(extended=False):
            code = compile_com(c)
            for s in INITIAL_STATES:
                assert run_machine(code, s).outcome == exec_com(c, s), c
                cases += 1
        assert cases == 1020 * 4

    def test_exhaustive_with_input_and_output(self):
        cases = 0
        streams = ((), (IntV(1),))
        for c in enumerate_commands(extended=True):
            code = compile_com(c)
            for s in INITIAL_STATES:
                for stream in streams:
                    start = State(s.memory, stream, ())
                    assert run_machine(code, start).outcome == exec_com(c, start), c
                    cases += 1
        assert cases >= 10_000

    def test_random_programs(self):
        rng = random.Random(1234)
        for _ in range(10_000):
            c = random_com(rng, rng.randint(1, 8), extended=True)
            s = random_state(rng)
            code = compile_com(c)
            outcome, trace = run_machine(code, s)
            assert outcome == exec_com(c, s), c
            assert_well_formed(trace, code, s)

    @given(commands(), states)
    def test_property(self, c, s):
        code = compile_com(c)
        outcome, trace = run_machine(code, s)
        assert outcome == exec_com(c, s)
        assert_well_formed(trace, code, s)


class TestCodeAlgebra:
    @given(commands())
    def test_empty_code_is_a_unit(self, c):
        code = compile_com(c)
        assert compose(IDENTITY, code) == code == compose(code, IDENTITY)

    @given(commands(), commands(), commands())
    def test_composition_is_associative(self, a, b2, c):
        ca, cb, cc = compile_com(a), compile_com(b2), compile_com(c)
        assert compose(compose(ca, cb), cc) == compose(ca, compose(cb, cc))

    @given(commands(), commands(), states)
    def test_running_a_composition_runs_both_parts(self, a, b2, s):
        ca, cb = compile_com(a), compile_com(b2)
        first = run_machine(ca, s).outcome
        expected = run_machine(cb, first.state).outcome if isinstance(first, Done) else first
        assert run_machine(compose(ca, cb), s).outcome == expected


class TestCodeCursor:
    def test_advance_and_prepend(self):
        code = CodeCursor.of((PushConst(IntV(1)), Store(x)))
        assert len(code) == 2 and code.head == PushConst(IntV(1))
        rest = code.advance()
        assert rest == (Store(x),)
        spliced = rest.prepend((WriteOut(),))
        assert spliced == (WriteOut(), Store(x)) and len(spliced) == 2
        assert spliced.advance().advance() == () and not spliced.advance().advance()

    def test_steps_share_the_remaining_code(self):
        code = compile_com(Seq(Assign(x, IntLit(0)), Assign(y, IntLit(1))))
        _, trace = run_machine(code, EMPTY)
        assert [len(ms.code) for ms in trace] == [4, 3, 2, 1, 0, 0]
        assert trace[0].code == code and hash(trace[0].code) == hash(code)


class TestLargePrograms:
    def test_nested_if_compiles_and_runs(self):
        depth = 2_000
        c = Assign(x, IntLit(0))
        for _ in range(depth):
            c = If(TrueLit(), c, Assign(x, IntLit(1)))
        code = compile_com(c)
        assert code_size(code) == 4 * depth + 2
        outcome, trace = run_machine(code, EMPTY)
        assert outcome == exec_com(c, EMPTY)
        assert len(trace) == 2 * depth + 4

    def test_listing_of_nested_if(self):
        depth = 1_100
        c = Assign(x, IntLit(0))
        for _ in range(depth):
            c = If(TrueLit(), c, Assign(x, IntLit(1)))
        lines = format_code(compile_com(c)).splitlines()
        assert len(lines) == 6 * depth + 2
        assert lines[-1] == "    Store x"

    def test_trace_memory_is_not_quadratic(self):
        count = 10_000
        c = Assign(Ident("v0"), IntLit(0))
        for i in range(1, count):
            c = Seq(c, Assign(Ident(f"v{i}"), IntLit(i)))
        code = compile_com(c)
        tracemalloc.start()
        try:
            _, trace = run_machine(code, EMPTY)
            _, peak = tracemalloc.get_traced_memory()
        finally:
            tracemalloc.stop()
        assert len(trace) == 2 * count + 2
        assert len(trace[-1].store) == count
        # una copia completa del código o de la memoria por paso pasaría del GB
        assert peak < 200 * 1024 * 1024
