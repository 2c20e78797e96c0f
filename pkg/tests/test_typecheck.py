import random

import pytest
from hypothesis import given, strategies as st

from src.language.syntax import ParseError
from src.semantics.domains import BoolV, IntV, StrV
from src.semantics.typecheck import (
    Accept, Atom, BoolT, FunctionT, Inj, IntT, ListValue, Product, Reject, SequenceT, StrT, Sum,
    TupleValue, check, format_content, format_type, is_bool, is_num, is_str, parse_type,
)
from tests.generators import (
    enumerate_content, enumerate_types, inhabitant, mutate_leaf, naive_check, random_type, random_value,
    values,
)


class TestAtomicPredicates:
    def test_is_num(self):
        assert is_num(IntV(0))
        assert not is_num(BoolV(True))
        assert not is_num(StrV("a"))

    def test_is_bool(self):
        assert is_bool(BoolV(False))
        assert not is_bool(IntV(1))
        assert not is_bool(StrV(""))

    def test_partition_on_random_values(self):
        rng = random.Random(5)
        for _ in range(1_000):
            v = random_value(rng)
            assert [is_num(v), is_bool(v), is_str(v)].count(True) == 1

    @given(values)
    def test_partition(self, v):
        assert is_num(v) + is_bool(v) + is_str(v) == 1


class TestCheck:
    def test_atom(self):
        assert check(IntT(), Atom(IntV(7))) == Accept()
        assert check(IntT(), Atom(BoolV(True))) == Reject("expected Int", "/")

    def test_product(self):
        t = Product((IntT(), BoolT()))
        assert check(t, TupleValue((Atom(IntV(1)), Atom(BoolV(True))))) == Accept()
        assert check(t, TupleValue((Atom(IntV(1)), Atom(IntV(1))))) == Reject("expected Bool", "/2")
        assert isinstance(check(t, TupleValue((Atom(IntV(1)),))), Reject)

    def test_sequence(self):
        assert check(SequenceT(IntT()), ListValue(())) == Accept()
        bad = ListValue((Atom(IntV(1)), Atom(StrV("no"))))
        assert check(SequenceT(IntT()), bad) == Reject("expected Int", "/2")

    def test_sum_uses_the_injection_index(self):
        t = Sum((IntT(), StrT()))
        assert check(t, Inj(1, Atom(IntV(1)))) == Accept()
        assert check(t, Inj(2, Atom(IntV(1)))) == Reject("expected Str", "/2")
        assert check(t, Inj(3, Atom(IntV(1)))) == Reject("index out of range", "/")

    def test_nested_paths(self):
        t = Product((IntT(), SequenceT(Sum((BoolT(), StrT())))))
        cv = TupleValue((Atom(IntV(0)), ListValue((Inj(2, Atom(StrV("a"))), Inj(1, Atom(StrV("b")))))))
        assert check(t, cv) == Reject("expected Bool", "/2/2/1")

    def test_shape_mismatch(self):
        assert check(Product((IntT(),)), Atom(IntV(1))) == Reject("expected tuple", "/")
        assert check(SequenceT(IntT()), TupleValue((Atom(IntV(1)),))) == Reject("expected list", "/")
        assert check(Sum((IntT(),)), Atom(IntV(1))) == Reject("expected injection", "/")

    @pytest.mark.parametrize("cv", [Atom(IntV(1)), ListValue(()), Inj(1, Atom(BoolV(True)))])
    def test_function_types_are_uninhabited(self, cv):
        result = check(FunctionT(IntT(), IntT()), cv)
        assert result == Reject("function types uninhabited by content", "/")

    def test_invariants_of_constructors(self):
        with pytest.raises(ValueError):
            Product(())
        with pytest.raises(ValueError):
            Sum(())
        with pytest.raises(ValueError):
            Inj(0, Atom(IntV(1)))
        with pytest.raises(ValueError):
            TupleValue(())


class TestOracleAgreement:
    def test_exhaustive_small_trees(self):
        # todos los pares donde ambos árboles tienen profundidad <= 3 y uno de ellos <= 2
        deep_types, shallow_types = enumerate_types(3), enumerate_types(2)
        deep_values, shallow_values = enumerate_content(3), enumerate_content(2)
        pairs = 0
        for types, contents in ((deep_types, shallow_values), (shallow_types, deep_values)):
            for t in types:
                for cv in contents:
                    assert isinstance(check(t, cv), Accept) == naive_check(t, cv), (t, cv)
                    pairs += 1
        assert pairs > 250_000

    def test_generated_inhabitants_accept_and_mutants_reject(self):
        rng = random.Random(42)
        for _ in range(2_000):
            t = random_type(rng, 4)
            cv = inhabitant(rng, t)
            assert check(t, cv) == Accept()
            mutant = mutate_leaf(rng, cv)
            if mutant is not None:
                assert isinstance(check(t, mutant), Reject)

    @given(st.randoms(use_true_random=False))
    def test_deterministic(self, rng):
        t = random_type(rng, 3)
        cv = inhabitant(rng, t)
        assert check(t, cv) == check(t, cv)


class TestTypeSyntax:
    @pytest.mark.parametrize(
        "source, expected",
        [
            ("int", IntT()),
            ("prod<int,bool>", Product((IntT(), BoolT()))),
            ("seq< str >", SequenceT(StrT())),
            ("sum<int, str>", Sum((IntT(), StrT()))),
            ("fn<int,bool>", FunctionT(IntT(), BoolT())),
            ("seq<prod<int,sum<bool>>>", SequenceT(Product((IntT(), Sum((BoolT(),)))))),
        ],
    )
    def test_parse(self, source, expected):
        assert parse_type(source) == expected

    @pytest.mark.parametrize("source", ["", "float", "prod<>", "seq<int,int>", "fn<int>", "prod<int"])
    def test_bad_syntax(self, source):
        with pytest.raises(ParseError):
            parse_type(source)

    def test_format_round_trip(self):
        for t in enumerate_types(2):
            assert parse_type(format_type(t)) == t

    def test_format_content(self):
        cv = TupleValue((Atom(IntV(1)), ListValue((Inj(2, Atom(StrV("x"))),))))
        assert format_content(cv) == '(1, [inj 2 "x"])'


class TestDeepValues:
    DEPTH = 3_000

    def test_nested_lists(self):
        t, cv = IntT(), Atom(IntV(1))
        for _ in range(self.DEPTH):
            t, cv = SequenceT(t), ListValue((cv,))
        assert check(t, cv) == Accept()

    def test_reject_path_at_depth(self):
        t, cv = BoolT(), Atom(IntV(1))
        for _ in range(self.DEPTH):
            t, cv = Sum((t,)), Inj(1, cv)
        result = check(t, cv)
        assert result.reason == "expected Bool"
        assert result.path == "/1" * self.DEPTH

    def test_first_failure_in_order_wins(self):
        t = Product((SequenceT(IntT()), BoolT()))
        cv = TupleValue((ListValue((Atom(IntV(1)), Atom(StrV("a")))), Atom(IntV(0))))
        assert check(t, cv) == Reject("expected Int", "/1/2")
