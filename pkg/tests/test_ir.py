"""Core AST and state types."""

import pytest

from plchp import (
    And, Assign, Cmp, Equiv, GuardedChoice, Ident, IfThen, Imply,
    Not, Number, Seq, State, Var, Xor, collect_vars,
)
from plchp.errors import DialectError, UnboundVariable
from plchp.ir import GE, GT, HP, LE, ST, BinOp, DIV, SUB, TRUE


def test_ident_rejects_reserved_and_malformed():
    with pytest.raises(ValueError):
        Ident("IF")
    with pytest.raises(ValueError):
        Ident("if")  # keywords are case-insensitive
    with pytest.raises(ValueError):
        Ident("2x")
    with pytest.raises(ValueError):
        Ident("")
    assert Ident("eps").name == "eps"


def test_number_keeps_lexeme():
    assert Number("1.50").value == 1.5
    assert Number("1.50") != Number("1.5")
    with pytest.raises(ValueError):
        Number("-1")  # negatives are Neg(Number)


def test_collect_vars_examples():
    # x + 3 reads only x
    assert collect_vars(BinOp("add", Var(Ident("x")), Number("3"))) == {Ident("x")}
    # TRUE reads nothing
    assert collect_vars(TRUE) == set()
    # the repaired controller's first guard reads f1, HH, x1, eps
    guard = Cmp(
        GT,
        Var(Ident("f1")),
        BinOp(DIV, BinOp(SUB, Var(Ident("HH")), Var(Ident("x1"))), Var(Ident("eps"))),
    )
    assert collect_vars(guard) == {Ident("f1"), Ident("HH"), Ident("x1"), Ident("eps")}


def test_state_get_set_frame():
    x, y = Ident("x"), Ident("y")
    s = State({x: 2.0})
    assert s.get(x) == 2.0
    s2 = s.set(x, 5.0)
    assert s2.get(x) == 5.0
    assert s.get(x) == 2.0  # persistence
    s3 = s.set(y, 1.0)
    assert s3.get(x) == 2.0  # frame
    with pytest.raises(UnboundVariable):
        s.get(y)


def test_state_bit_pattern_equality():
    x = Ident("x")
    assert State({x: 0.0}) != State({x: -0.0})
    assert State({x: 1.0}) == State({x: 1.0})
    nan = float("nan")
    assert State({x: nan}) == State({x: nan})


def test_dialect_closed_under_construction():
    a = Cmp(GE, Var(Ident("a")), Number("1"))
    b = Cmp(LE, Var(Ident("b")), Number("2"))
    assert Xor(a, b).dialect == ST
    assert Imply(a, b).dialect == HP
    assert Equiv(a, b).dialect == HP
    assert And(a, b).dialect is None
    with pytest.raises(DialectError):
        And(Xor(a, b), Imply(a, b))
    with pytest.raises(DialectError):
        Imply(Xor(a, b), b)
    with pytest.raises(DialectError):
        Xor(Imply(a, b), b)
    with pytest.raises(DialectError):
        Not(Xor(a, Imply(a, b)))


def test_program_constructors_enforce_dialect():
    a = Cmp(GE, Var(Ident("a")), Number("1"))
    hp_only = Imply(a, a)
    st_only = Xor(a, a)
    with pytest.raises(DialectError):
        IfThen(hp_only, Assign(Ident("x"), Number("1")))
    with pytest.raises(DialectError):
        GuardedChoice(st_only, Assign(Ident("x"), Number("1")), None, complemented=True)
    with pytest.raises(ValueError):
        GuardedChoice(a, Assign(Ident("x"), Number("1")), None, complemented=False)


def test_positions_do_not_affect_equality():
    x = Ident("x")
    assert Assign(x, Number("1"), pos=(3, 7)) == Assign(x, Number("1"))
    s1 = Seq(Assign(x, Number("1")), Assign(x, Number("2")))
    s2 = Seq(Assign(x, Number("1"), pos=(1, 1)), Assign(x, Number("2"), pos=(2, 2)))
    assert s1 == s2
