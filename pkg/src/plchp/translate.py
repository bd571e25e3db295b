"""Bidirectional compilation between ST statements and hybrid programs.

Terms carry over unchanged (only the power operator is spelled differently
at print time). Comparisons and AND/OR/NOT map one-to-one; XOR, implication,
and biconditional are rewritten into the shared connective set before
compiling. Conditionals become test-guarded choices and back; default-beta
choices are linearized into if-then-else by favoring the guarded branch,
which is recorded as a warning.
"""

from __future__ import annotations

from dataclasses import dataclass

from .analysis import classify_io, extract_epsilon
from .dl_syntax import DlSafetyFormula, plant_program
from .errors import (
    DialectError, MissingEpsilon, NotNormalForm, PlantVariableClash,
)
from .ir import (
    And, Assign, BoolConst, Cmp, EQ, Equiv, Formula, GuardedChoice, HP,
    Ident, IfThen, IfThenElse, Imply, Not, Number, Or, PlantSpec,
    Program, RandomAssign, ST, ScanCycleModel, Seq, Term, Var, Xor,
    collect_vars, list_to_seq, number_lexeme, seq_to_list,
)
from .st_syntax import StConfig, StUnit, StVarBlock


@dataclass(frozen=True)
class CompileWarning:
    code: str
    message: str
    location: tuple | None = None


@dataclass(frozen=True)
class CompileDiagnostics:
    """Warnings emitted during compilation; empty for programs in the fully
    complemented deterministic fragment."""

    warnings: tuple[CompileWarning, ...] = ()

    def extend(self, more) -> "CompileDiagnostics":
        return CompileDiagnostics(self.warnings + tuple(more))


# ---------------------------------------------------------------------------
# Terms

def term_st_to_hp(t: Term) -> Term:
    """Identity on the shared term trees; operator spelling is a print-time
    concern (`**` versus `^`, `*` in both)."""
    return t


def term_hp_to_st(t: Term) -> Term:
    return t


# ---------------------------------------------------------------------------
# Formulas

def formula_st_to_hp(f: Formula) -> Formula:
    """Compile an ST formula; XOR is rewritten to (NOT p AND q) OR (NOT q AND p)."""
    if f.dialect == HP:
        raise DialectError("formula_st_to_hp expects an ST-dialect formula")
    return _f_st_to_hp(f)


def _f_st_to_hp(f: Formula) -> Formula:
    if isinstance(f, BoolConst):
        return f
    if isinstance(f, Cmp):
        return Cmp(f.rel, term_st_to_hp(f.left), term_st_to_hp(f.right))
    if isinstance(f, Not):
        return Not(_f_st_to_hp(f.operand))
    if isinstance(f, And):
        return And(_f_st_to_hp(f.left), _f_st_to_hp(f.right))
    if isinstance(f, Or):
        return Or(_f_st_to_hp(f.left), _f_st_to_hp(f.right))
    if isinstance(f, Xor):
        left = _f_st_to_hp(f.left)
        right = _f_st_to_hp(f.right)
        return Or(And(Not(left), right), And(Not(right), left))
    raise DialectError(f"{type(f).__name__} is not an ST formula")


def formula_hp_to_st(f: Formula) -> Formula:
    """Compile an HP formula; -> and <-> are rewritten into AND/OR/NOT first."""
    if f.dialect == ST:
        raise DialectError("formula_hp_to_st expects an HP-dialect formula")
    return _f_hp_to_st(f)


def _f_hp_to_st(f: Formula) -> Formula:
    if isinstance(f, BoolConst):
        return f
    if isinstance(f, Cmp):
        return Cmp(f.rel, term_hp_to_st(f.left), term_hp_to_st(f.right))
    if isinstance(f, Not):
        return Not(_f_hp_to_st(f.operand))
    if isinstance(f, And):
        return And(_f_hp_to_st(f.left), _f_hp_to_st(f.right))
    if isinstance(f, Or):
        return Or(_f_hp_to_st(f.left), _f_hp_to_st(f.right))
    if isinstance(f, Imply):
        return Or(Not(_f_hp_to_st(f.left)), _f_hp_to_st(f.right))
    if isinstance(f, Equiv):
        left = _f_hp_to_st(f.left)
        right = _f_hp_to_st(f.right)
        return Or(And(Not(left), Not(right)), And(left, right))
    raise DialectError(f"{type(f).__name__} is not an HP formula")


# ---------------------------------------------------------------------------
# Programs

def prog_st_to_hp(s: Program) -> Program:
    """Compile ST statements to the translatable hybrid-program fragment."""
    if isinstance(s, Assign):
        return Assign(s.target, term_st_to_hp(s.value))
    if isinstance(s, Seq):
        return Seq(prog_st_to_hp(s.first), prog_st_to_hp(s.second))
    if isinstance(s, IfThenElse):
        return GuardedChoice(
            formula_st_to_hp(s.cond),
            prog_st_to_hp(s.then),
            prog_st_to_hp(s.else_),
            complemented=True,
        )
    if isinstance(s, IfThen):
        return GuardedChoice(
            formula_st_to_hp(s.cond),
            prog_st_to_hp(s.then),
            None,
            complemented=True,
        )
    raise TypeError(f"cannot compile {type(s).__name__} to a hybrid program")


def prog_hp_to_st(p: Program) -> tuple[Program, CompileDiagnostics]:
    """Compile a translatable hybrid program to ST statements.

    Default-beta choices resolve to if-then-else by favoring the guarded
    branch; each such linearization is recorded as a warning.
    """
    warnings: list[CompileWarning] = []
    result = _p_hp_to_st(p, warnings)
    return result, CompileDiagnostics(tuple(warnings))


def _p_hp_to_st(p: Program, warnings: list[Warning]) -> Program:
    if isinstance(p, Assign):
        return Assign(p.target, term_hp_to_st(p.value))
    if isinstance(p, Seq):
        return Seq(_p_hp_to_st(p.first, warnings), _p_hp_to_st(p.second, warnings))
    if isinstance(p, GuardedChoice):
        cond = formula_hp_to_st(p.guard)
        then = _p_hp_to_st(p.then, warnings)
        if p.else_ is None:
            return IfThen(cond, then)
        else_ = _p_hp_to_st(p.else_, warnings)
        if not p.complemented:
            warnings.append(CompileWarning(
                "linearized-choice",
                "default branch of a guarded choice became ELSE; the PLC favors "
                "the guarded branch, losing nondeterminism",
                getattr(p, "pos", None),
            ))
        return IfThenElse(cond, then, else_)
    raise NotNormalForm(
        f"{type(p).__name__} has no ST counterpart", getattr(p, "pos", None)
    )


# ---------------------------------------------------------------------------
# Tasks (whole-unit compilation)

GeneratedNames = dict  # program/config/resource/task/instance name overrides

_DEFAULT_NAMES = {
    "program": "prog0",
    "config": "Config0",
    "resource": "Res0",
    "task": "Main",
    "instance": "Inst0",
}


def task_hp_to_st(
    m: ScanCycleModel,
    epsilon: float | None = None,
    names: GeneratedNames | None = None,
) -> tuple[StUnit, CompileDiagnostics]:
    """Compile a scan-cycle model into a complete program unit.

    The task interval comes from the model's concrete duration, from an
    `eps = n` conjunct in the assumptions, or from the `epsilon` override;
    a symbolic duration with neither raises MissingEpsilon.
    """
    resolved = dict(_DEFAULT_NAMES)
    resolved.update(names or {})

    if epsilon is None:
        if isinstance(m.epsilon, float):
            epsilon = m.epsilon
        else:
            epsilon = extract_epsilon(m.assumptions, m.epsilon)
            if epsilon is None:
                raise MissingEpsilon(
                    f"scan cycle duration {m.epsilon} is symbolic; the assumptions "
                    "carry no eps = n conjunct and no override was given"
                )
    if epsilon <= 0:
        raise MissingEpsilon(f"scan cycle duration must be positive, got {epsilon}")

    body, diags = prog_hp_to_st(m.ctrl)
    io = classify_io(m.ctrl, m.inputs, m.plant)
    diags = diags.extend(CompileWarning("io-conflict", w) for w in io.warnings)

    bool_outputs = _zero_one_outputs(m.ctrl)
    blocks: list[StVarBlock] = []
    if io.inputs:
        blocks.append(StVarBlock("input", tuple((x, "LREAL") for x in io.inputs)))
    if io.outputs:
        blocks.append(StVarBlock(
            "output",
            tuple((x, "BOOL" if x in bool_outputs else "LREAL") for x in io.outputs),
        ))
    if io.params:
        blocks.append(StVarBlock("external", tuple((x, "LREAL") for x in io.params)))

    config = StConfig(
        config_name=Ident(resolved["config"]),
        resource_name=Ident(resolved["resource"]),
        task_name=Ident(resolved["task"]),
        program_instance=Ident(resolved["instance"]),
        interval=epsilon,
        priority=0,
    )
    unit = StUnit(Ident(resolved["program"]), tuple(blocks), body, config)
    return unit, diags


def _zero_one_outputs(ctrl: Program) -> set[Ident]:
    """Bound variables that are only ever assigned literal 0 or 1."""
    assigned: dict[Ident, bool] = {}

    def visit(p: Program):
        if isinstance(p, Assign):
            ok = isinstance(p.value, Number) and p.value.value in (0.0, 1.0)
            assigned[p.target] = assigned.get(p.target, True) and ok
        elif isinstance(p, Seq):
            visit(p.first)
            visit(p.second)
        elif isinstance(p, GuardedChoice):
            visit(p.then)
            if p.else_ is not None:
                visit(p.else_)

    visit(ctrl)
    return {x for x, ok in assigned.items() if ok}


def task_st_to_hp(
    u: StUnit,
    plant: PlantSpec,
    assumptions: Formula,
    safety: Formula,
) -> DlSafetyFormula:
    """Compile a program unit plus a given plant into the safety formula
    `A -> [{in; ctrl; plant}*] S`.

    Declared inputs become nondeterministic assignments in declaration
    order, except plant state variables (those are driven by the ODEs, not
    read fresh each cycle). A task interval adds an `eps = n` conjunct to
    the assumptions when none is present.
    """
    if assumptions.dialect == ST or safety.dialect == ST:
        raise DialectError("assumptions and safety must be HP-dialect formulas")

    unit_vars = collect_vars(u.body) | {
        name for block in u.var_blocks for name, _ in block.decls
    }
    if plant.clock in unit_vars:
        raise PlantVariableClash(
            f"plant clock {plant.clock} collides with a program variable"
        )

    plant_states = set(plant.state_vars())
    inputs = [x for x in u.declared("input") if x not in plant_states]
    ctrl = prog_st_to_hp(u.body)

    if u.config is not None and isinstance(plant.bound, Var):
        symbol = plant.bound.ident
        if extract_epsilon(assumptions, symbol) is None:
            conjunct = Cmp(EQ, Var(symbol), Number(number_lexeme(u.config.interval)))
            assumptions = And(assumptions, conjunct)

    # Fold the flat statement list so the body parses/prints as a fixpoint.
    body = list_to_seq(
        [RandomAssign(x) for x in inputs]
        + seq_to_list(ctrl)
        + seq_to_list(plant_program(plant))
    )
    return DlSafetyFormula(assumptions, body, safety)
