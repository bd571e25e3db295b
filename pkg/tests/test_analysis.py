"""Static semantics, I/O classification, normal-form validation, epsilon."""

import pytest

import golden
from plchp import (
    Assign, Ident, Number, Seq, Var,
    classify_io, parse_dl_formula, parse_dl_model, validate_scan_cycle_form,
    var_sets,
)
from plchp.analysis import extract_epsilon
from plchp.dl_syntax import DlSafetyFormula, parse_dl_program
from plchp.errors import ConflictingEpsilon, NotNormalForm
from plchp.ir import TRUE
from plchp.semantics import GenConfig, gen_hp


def ident(n):
    return Ident(n)


def test_var_sets_assignment():
    vs = var_sets(Assign(ident("x"), Number("1")))
    assert vs.free == frozenset()
    assert vs.bound == vs.must_bound == frozenset({ident("x")})


def test_var_sets_sequence_must_bound():
    prog = Seq(
        Assign(ident("x"), Var(ident("y"))),
        Assign(ident("z"), Var(ident("x"))),
    )
    vs = var_sets(prog)
    assert vs.free == frozenset({ident("y")})
    assert vs.bound == vs.must_bound == frozenset({ident("x"), ident("z")})


def test_var_sets_original_ctrl():
    vs = var_sets(golden.ORIGINAL_CTRL)
    assert vs.bound == frozenset({ident("V1"), ident("V2"), ident("P")})
    assert vs.must_bound == frozenset()  # every write sits under a guard


def test_must_bound_subset_of_bound_on_generated_programs():
    for seed in range(300):
        prog = gen_hp(GenConfig(max_depth=5, seed=seed))
        vs = var_sets(prog)
        assert vs.must_bound <= vs.bound


def test_classify_io_watertank():
    io = classify_io(golden.ORIGINAL_CTRL, golden.MODEL_INPUTS, golden.PLANT)
    assert set(io.inputs) >= {ident("f1"), ident("f2"), ident("x1"), ident("x2")}
    assert io.outputs == (ident("V1"), ident("P"), ident("V2"))
    assert set(io.params) == {
        ident("H1"), ident("L1"), ident("L2"), ident("LL"), ident("FL"), ident("H2")
    }
    assert not io.warnings


def test_classify_io_param_only():
    ctrl = Assign(ident("a"), Var(ident("b")))
    plant = golden.PLANT
    io = classify_io(ctrl, (), plant)
    assert io.inputs == ()
    assert io.outputs == (ident("a"),)
    assert io.params == (ident("b"),)


def test_classify_io_trivial():
    io = classify_io(Assign(ident("a"), Number("1")), (), golden.PLANT)
    assert io.inputs == () and io.params == ()
    assert io.outputs == (ident("a"),)


def test_validate_watertank_model():
    model = validate_scan_cycle_form(parse_dl_model((golden.DATA / "watertank_original_model.dlhp").read_text()))
    assert model.plant.domain == golden.PLANT.domain  # t<=eps removed
    assert model.inputs == (ident("f1"), ident("f2"))
    assert model.epsilon == ident("eps")


def _model_with_body(body_text: str) -> DlSafetyFormula:
    return DlSafetyFormula(TRUE, parse_dl_program(body_text), TRUE)


def test_validate_rejects_ode_outside_plant():
    bad = _model_with_body("{x'=1, t'=1 & t<=eps} y:=1; t:=0; {x'=1, t'=1 & t<=eps}")
    with pytest.raises(NotNormalForm, match="ODE outside plant"):
        validate_scan_cycle_form(bad)


def test_validate_rejects_missing_clock_reset():
    bad = _model_with_body("f1:=*; y:=1; {x'=1, t'=1 & t<=eps}")
    with pytest.raises(NotNormalForm, match="clock reset"):
        validate_scan_cycle_form(bad)


def test_validate_rejects_missing_clock_ode():
    bad = _model_with_body("y:=1; t:=0; {x'=1 & t<=eps}")
    with pytest.raises(NotNormalForm, match="clock ODE"):
        validate_scan_cycle_form(bad)


def test_validate_rejects_missing_bound():
    bad = _model_with_body("y:=1; t:=0; {x'=1, t'=1 & x>=0}")
    with pytest.raises(NotNormalForm, match="clock bound"):
        validate_scan_cycle_form(bad)


def test_validate_rejects_bare_test():
    bad = _model_with_body("?x>=1; y:=1; t:=0; {x'=1, t'=1 & t<=eps}")
    with pytest.raises(NotNormalForm, match="test outside guarded choice"):
        validate_scan_cycle_form(bad)


def test_validate_rejects_unguarded_choice():
    bad = _model_with_body("{y:=1;} ++ {y:=2;} t:=0; {x'=1, t'=1 & t<=eps}")
    with pytest.raises(NotNormalForm, match="choice without a guarded first branch"):
        validate_scan_cycle_form(bad)


def test_validate_rejects_clock_in_ctrl():
    bad = _model_with_body("t:=1; t:=0; {x'=1, t'=1 & t<=eps}")
    with pytest.raises(NotNormalForm):
        validate_scan_cycle_form(bad)


def test_validate_rejects_missing_plant():
    bad = _model_with_body("y:=1;")
    with pytest.raises(NotNormalForm, match="plant ODE"):
        validate_scan_cycle_form(bad)


def test_validate_accepts_reassociated_bound():
    # bound written with flipped operands and nested conjunction
    body = "y:=1; t:=0; {x'=1, t'=1 & (x>=0 & eps>=t) & x<=10}"
    model = validate_scan_cycle_form(_model_with_body(body))
    assert model.epsilon == ident("eps")
    assert model.plant.domain == parse_dl_formula("x>=0 & x<=10")


def test_extract_epsilon():
    assert extract_epsilon(parse_dl_formula("x>=0 & eps=1")) == 1.0
    assert extract_epsilon(parse_dl_formula("2=eps & x>=0")) == 2.0
    assert extract_epsilon(parse_dl_formula("eps>=0 & FL>0")) is None
    assert extract_epsilon(parse_dl_formula("eps=1 & eps=1.0")) == 1.0
    with pytest.raises(ConflictingEpsilon):
        extract_epsilon(parse_dl_formula("eps=1 & eps=2"))


def test_extract_epsilon_custom_name():
    f = parse_dl_formula("cycle=0.5 & x>=0")
    assert extract_epsilon(f, ident("cycle")) == 0.5
    assert extract_epsilon(f) is None
