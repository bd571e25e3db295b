"""Scan-cycle simulation against an ODE plant, plus trace compliance.

Each cycle reads inputs, runs the controller body to completion, then
integrates the plant for exactly the scan cycle duration (the model's
nondeterministic dwell time is resolved to its maximum); leaving the
evolution domain stops the run with a diagnostic. The integrator is a
fixed-step RK4 with an exact closed form when every right-hand side is
constant in the evolving variables over the cycle.

Compliance checking replays recorded sensor values through a deterministic
controller and flags rows whose recorded actuations deviate, aggregated
into maximal ranges of consecutive cycles.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .analysis import IoClassification, extract_epsilon
from .dl_syntax import print_dl_formula
from .errors import (
    MissingEpsilon, MissingInput, NondeterministicCtrl, PlchpError,
    SchemaError,
)
from .ir import (
    ADD, BinOp, Cmp, DIV, Formula, GE, GT, Ident, LE, LT, MUL, Neg, Number,
    POW, PlantSpec, Program, ScanCycleModel, State, SUB, TRUE, Var,
    collect_vars, conjuncts,
)
from .semantics import derive_seed, eval_formula, eval_term, fully_complemented, run_st
from .translate import prog_hp_to_st


# ---------------------------------------------------------------------------
# Plant integration

@dataclass(frozen=True)
class IntegratorConfig:
    substeps: int = 1000
    method: str = "auto"  # auto | affine | rk4

    def __post_init__(self):
        if self.substeps < 1:
            raise ValueError("substeps must be at least 1")
        if self.method not in ("auto", "affine", "rk4"):
            raise ValueError(f"unknown integrator {self.method!r}")


@dataclass(frozen=True)
class DomainExit:
    """First detected violation of the evolution domain."""

    time: float  # offset within the cycle
    conjunct: Formula

    def describe(self) -> str:
        return f"domain violated at t={self.time:.6g}: {print_dl_formula(self.conjunct)}"


def plant_is_affine(plant: PlantSpec) -> bool:
    """True when no right-hand side mentions an evolving variable, so every
    derivative is constant over the cycle and states are linear in time."""
    evolving = set(plant.state_vars()) | {plant.clock}
    return all(not (collect_vars(rhs) & evolving) for _, rhs in plant.odes)


def integrate_plant(
    plant: PlantSpec,
    s: State,
    duration: float,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> tuple[State, Optional[DomainExit]]:
    """Advance the plant state by `duration`, checking the evolution domain.

    The clock advances by exactly `duration` (the implied bound
    `clock <= eps` is enforced by the caller's choice of duration, not
    re-checked here).
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if duration == 0:
        return s, None
    method = cfg.method
    affine = plant_is_affine(plant)
    if method == "affine" and not affine:
        raise ValueError("plant is not affine; use rk4 or auto")
    if method == "auto":
        method = "affine" if affine else "rk4"
    if method == "affine":
        return _integrate_affine(plant, s, duration, cfg)
    return _integrate_rk4(plant, s, duration, cfg)


def _integrate_affine(plant, s, duration, cfg):
    rates = {x: eval_term(rhs, s) for x, rhs in plant.odes}
    t0 = s.get(plant.clock)

    def at(t: float) -> State:
        values = {x: s.get(x) + rate * t for x, rate in rates.items()}
        values[plant.clock] = t0 + t
        return s.set_many(values)

    exit_time, conjunct = _affine_domain_exit(plant, s, at, duration, cfg)
    if exit_time is not None:
        return at(exit_time), DomainExit(exit_time, conjunct)
    end = at(duration)
    end = end.set(plant.clock, t0 + duration)  # exact, no accumulation
    return end, None


def _affine_domain_exit(plant, s0, at, duration, cfg):
    """Earliest domain violation. Comparison conjuncts affine in the
    evolving variables are solved from their endpoint values (linear in
    time); anything else falls back to a grid scan."""
    if plant.domain == TRUE:
        return None, None
    evolving = set(plant.state_vars()) | {plant.clock}
    end_state = at(duration)
    best: tuple[float, Formula] | None = None
    for part in conjuncts(plant.domain):
        hit: Optional[float] = None
        if isinstance(part, Cmp) and part.rel in (LT, LE, GT, GE) and \
                _is_affine_term(part.left, evolving) and _is_affine_term(part.right, evolving):
            hit = _linear_violation(part, s0, end_state, duration)
        else:
            hit = _grid_violation(part, at, duration, cfg.substeps)
        if hit is not None and (best is None or hit < best[0]):
            best = (hit, part)
    if best is None:
        return None, None
    return best


def _is_affine_term(t, evolving) -> bool:
    """Degree at most one in the evolving variables, constant coefficients."""
    if isinstance(t, (Number, Var)):
        return True
    if isinstance(t, Neg):
        return _is_affine_term(t.operand, evolving)
    if isinstance(t, BinOp):
        if t.op in (ADD, SUB):
            return _is_affine_term(t.left, evolving) and _is_affine_term(t.right, evolving)
        if t.op == MUL:
            left_has = bool(collect_vars(t.left) & evolving)
            right_has = bool(collect_vars(t.right) & evolving)
            if left_has and right_has:
                return False
            return _is_affine_term(t.left, evolving) and _is_affine_term(t.right, evolving)
        if t.op == DIV:
            if collect_vars(t.right) & evolving:
                return False
            return _is_affine_term(t.left, evolving)
        if t.op == POW:
            return not (collect_vars(t) & evolving)
    return False


def _linear_violation(part: Cmp, s0: State, s1: State, duration: float) -> Optional[float]:
    """Exact first-violation time of a comparison linear in time."""
    d0 = eval_term(part.left, s0) - eval_term(part.right, s0)
    d1 = eval_term(part.left, s1) - eval_term(part.right, s1)
    strict = part.rel in (LT, GT)
    if part.rel in (GT, GE):
        ok0 = d0 > 0 if strict else d0 >= 0
        ok1 = d1 > 0 if strict else d1 >= 0
        if not ok0:
            return 0.0
        if ok1:
            return None
        # d(t) = d0 + (d1 - d0) * t / duration crosses the boundary once.
        return duration * d0 / (d0 - d1)
    ok0 = d0 < 0 if strict else d0 <= 0
    ok1 = d1 < 0 if strict else d1 <= 0
    if not ok0:
        return 0.0
    if ok1:
        return None
    return duration * (-d0) / (d1 - d0)


def _grid_violation(part: Formula, at, duration: float, substeps: int) -> Optional[float]:
    for k in range(substeps + 1):
        t = duration * k / substeps
        if not eval_formula(part, at(t)):
            return t
    return None


def _integrate_rk4(plant, s, duration, cfg):
    names = [x for x, _ in plant.odes]
    rhss = [rhs for _, rhs in plant.odes]
    t0 = s.get(plant.clock)
    h = duration / cfg.substeps
    current = s

    def derivs(state: State) -> list[float]:
        return [eval_term(rhs, state) for rhs in rhss]

    def bump(state: State, rates: list[float], dt: float, clock_t: float) -> State:
        values = {x: state.get(x) + r * dt for x, r in zip(names, rates)}
        values[plant.clock] = clock_t
        return state.set_many(values)

    exit_info = None
    if plant.domain != TRUE and not eval_formula(plant.domain, current):
        return current, DomainExit(0.0, _failing_conjunct(plant.domain, current))
    for k in range(cfg.substeps):
        t_here = duration * k / cfg.substeps
        t_mid = t_here + h / 2
        t_next = duration * (k + 1) / cfg.substeps
        k1 = derivs(current)
        s2 = bump(current, k1, h / 2, t0 + t_mid)
        k2 = derivs(s2)
        s3 = bump(current, k2, h / 2, t0 + t_mid)
        k3 = derivs(s3)
        s4 = bump(current, k3, h, t0 + t_next)
        k4 = derivs(s4)
        combined = [
            (a + 2 * b + 2 * c + d) / 6 for a, b, c, d in zip(k1, k2, k3, k4)
        ]
        current = bump(current, combined, h, t0 + t_next)
        if plant.domain != TRUE and not eval_formula(plant.domain, current):
            exit_info = DomainExit(t_next, _failing_conjunct(plant.domain, current))
            break
    if exit_info is None:
        current = current.set(plant.clock, t0 + duration)
    return current, exit_info


def _failing_conjunct(domain: Formula, state: State) -> Formula:
    for part in conjuncts(domain):
        if not eval_formula(part, state):
            return part
    return domain


# ---------------------------------------------------------------------------
# Input providers

class InputProvider:
    """Supplies a value for every declared input variable each cycle."""

    def values(self, cycle: int) -> dict[Ident, float]:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantInputs(InputProvider):
    bindings: dict

    def values(self, cycle: int) -> dict[Ident, float]:
        return dict(self.bindings)


@dataclass(frozen=True)
class UniformInputs(InputProvider):
    """Per cycle and per input, an independent uniform draw; deterministic
    in (seed, cycle)."""

    ranges: dict  # Ident -> (lo, hi)
    seed: int = 0

    def values(self, cycle: int) -> dict[Ident, float]:
        rng = random.Random(derive_seed(self.seed, cycle))
        return {
            name: rng.uniform(lo, hi)
            for name, (lo, hi) in sorted(self.ranges.items(), key=lambda kv: kv[0].name)
        }


@dataclass(frozen=True)
class CsvInputs(InputProvider):
    """Cycle-indexed input values from trace rows (column-mapped)."""

    rows: tuple[dict, ...]  # each maps Ident -> float

    def values(self, cycle: int) -> dict[Ident, float]:
        if cycle >= len(self.rows):
            raise MissingInput(f"input trace has no row for cycle {cycle}")
        return dict(self.rows[cycle])


# ---------------------------------------------------------------------------
# Scan-cycle simulation

@dataclass(frozen=True)
class CycleRecord:
    """Snapshots of one scan cycle.

    `pre` is the state after the input read (before control), `post_ctrl`
    after the controller ran, `post_plant` after the plant evolved. The
    plant clock contribution equals the cycle duration unless `domain_exit`
    is set.
    """

    index: int
    t_abs: float
    pre: State
    post_ctrl: State
    post_plant: State
    domain_exit: Optional[DomainExit] = None


@dataclass(frozen=True)
class SimConfig:
    epsilon: Optional[float] = None  # overrides a symbolic model duration
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    check_assumptions: bool = False


def resolve_epsilon(m: ScanCycleModel, override: Optional[float] = None) -> float:
    if override is not None:
        if override <= 0:
            raise MissingEpsilon(f"scan cycle duration must be positive, got {override}")
        return override
    if isinstance(m.epsilon, float):
        return m.epsilon
    value = extract_epsilon(m.assumptions, m.epsilon)
    if value is None:
        raise MissingEpsilon(
            f"scan cycle duration {m.epsilon} is symbolic; supply a concrete value"
        )
    return value


def simulate(
    m: ScanCycleModel,
    st_body: Program,
    inputs: InputProvider,
    cycles: int,
    initial: State,
    cfg: SimConfig = SimConfig(),
) -> list[CycleRecord]:
    """Run `cycles` scan cycles: read inputs, execute the ST body, evolve
    the plant for exactly the cycle duration. Stops early (keeping the
    partial record) when the plant leaves its evolution domain."""
    epsilon = resolve_epsilon(m, cfg.epsilon)
    state = initial
    if m.plant.clock not in state:
        state = state.set(m.plant.clock, 0.0)
    eps_binding = {}
    if isinstance(m.epsilon, Ident) and m.epsilon not in state:
        eps_binding[m.epsilon] = epsilon
        state = state.set_many(eps_binding)
    if cfg.check_assumptions and not eval_formula(m.assumptions, state):
        raise PlchpError("initial state does not satisfy the assumptions")

    records: list[CycleRecord] = []
    for index in range(cycles):
        provided = inputs.values(index)
        missing = [x for x in m.inputs if x not in provided]
        if missing:
            raise MissingInput(
                "input provider lacks values for: " + ", ".join(str(x) for x in missing)
            )
        state = state.set_many({x: provided[x] for x in m.inputs})
        pre = state
        post_ctrl = run_st(st_body, pre)
        plant_start = post_ctrl.set(m.plant.clock, 0.0)
        post_plant, domain_exit = integrate_plant(
            m.plant, plant_start, epsilon, cfg.integrator
        )
        records.append(CycleRecord(
            index=index,
            t_abs=index * epsilon,
            pre=pre,
            post_ctrl=post_ctrl,
            post_plant=post_plant,
            domain_exit=domain_exit,
        ))
        state = post_plant
        if domain_exit is not None:
            break
    return records


@dataclass(frozen=True)
class SafetyViolation:
    cycle: int
    phase: str  # pre | post_plant
    state: State


def check_safety(records: Sequence[CycleRecord], safety: Formula) -> list[SafetyViolation]:
    """Evaluate the safety property on every pre and post-plant state."""
    violations: list[SafetyViolation] = []
    for rec in records:
        if not eval_formula(safety, rec.pre):
            violations.append(SafetyViolation(rec.index, "pre", rec.pre))
        if not eval_formula(safety, rec.post_plant):
            violations.append(SafetyViolation(rec.index, "post_plant", rec.post_plant))
    return violations


# ---------------------------------------------------------------------------
# Trace CSV

CYCLE_COLUMN = "cycle"


def trace_columns(io_spec: IoClassification) -> list[Ident]:
    return list(io_spec.inputs) + list(io_spec.outputs) + list(io_spec.params)


def write_trace(stream, records: Sequence[CycleRecord], io_spec: IoClassification) -> None:
    """One row per cycle: sensors/params from the pre state, actuators from
    the post-control state."""
    columns = trace_columns(io_spec)
    writer = csv.writer(stream)
    writer.writerow([CYCLE_COLUMN] + [c.name for c in columns])
    actuators = set(io_spec.outputs)
    for rec in records:
        row: list = [rec.index]
        for col in columns:
            source = rec.post_ctrl if col in actuators else rec.pre
            row.append(repr(source.get(col)))
        writer.writerow(row)


def write_trace_file(path, records, io_spec) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        write_trace(handle, records, io_spec)


def read_trace(stream) -> tuple[list[str], list[dict]]:
    """Parse a trace CSV; `#`-prefixed lines are comments."""
    filtered = (line for line in stream if not line.lstrip().startswith("#"))
    reader = csv.reader(filtered)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError([CYCLE_COLUMN]) from None
    header = [h.strip() for h in header]
    if CYCLE_COLUMN not in header:
        raise SchemaError([CYCLE_COLUMN])
    rows = []
    for raw in reader:
        if not raw:
            continue
        row: dict = {}
        for name, cell in zip(header, raw):
            if name == CYCLE_COLUMN:
                row[CYCLE_COLUMN] = int(cell)
            else:
                row[Ident(name)] = float(cell)
        rows.append(row)
    return header, rows


def read_trace_file(path) -> tuple[list[str], list[dict]]:
    with open(path, "r", encoding="utf-8") as handle:
        return read_trace(handle)


# ---------------------------------------------------------------------------
# Compliance checking

@dataclass(frozen=True)
class ComplianceInstance:
    start_cycle: int
    end_cycle: int
    description: str


@dataclass(frozen=True)
class ComplianceReport:
    """Maximal disjoint ranges of consecutive cycles whose recorded
    actuations deviate from the controller's expected choice."""

    instances: tuple[ComplianceInstance, ...]
    checked: int
    header: str = ""

    def serialize(self) -> str:
        lines = []
        if self.header:
            lines.append(f"# {self.header}")
        lines.append(f"checked={self.checked} instances={len(self.instances)}")
        for inst in self.instances:
            lines.append(
                f"instance {inst.start_cycle}..{inst.end_cycle}: {inst.description}"
            )
        return "\n".join(lines) + "\n"


def check_compliance(
    ctrl: Program,
    rows: Sequence[dict],
    io_spec: IoClassification,
) -> ComplianceReport:
    """Replay recorded sensor/parameter values through the deterministic
    controller and compare expected actuations with the recorded ones.

    Actuator values persist across cycles unless written: each row's run
    starts from the previous row's recorded actuators (the first row seeds
    itself, noted in the report header).
    """
    if not fully_complemented(ctrl):
        raise NondeterministicCtrl(
            "controller contains default-branch choices; compliance checking "
            "requires a fully complemented controller"
        )
    st_body, _ = prog_hp_to_st(ctrl)

    needed = set(trace_columns(io_spec))
    if rows:
        have = {k for k in rows[0] if isinstance(k, Ident)}
        missing = sorted((needed - have), key=lambda x: x.name)
        if missing:
            raise SchemaError(missing)

    outputs = list(io_spec.outputs)
    sensors = list(io_spec.inputs) + list(io_spec.params)
    violating: list[tuple[int, str]] = []
    prev_actuators: Optional[dict] = None
    for row in rows:
        if prev_actuators is None:
            prev_actuators = {x: row[x] for x in outputs}
        state = State({x: row[x] for x in sensors} | prev_actuators)
        expected = run_st(st_body, state)
        mismatches = [
            (x, expected.get(x), row[x]) for x in outputs if expected.get(x) != row[x]
        ]
        if mismatches:
            x, want, got = mismatches[0]
            violating.append((row[CYCLE_COLUMN], f"{x} expected {want!r} recorded {got!r}"))
        prev_actuators = {x: row[x] for x in outputs}

    instances: list[ComplianceInstance] = []
    for cycle, description in violating:
        if instances and cycle == instances[-1].end_cycle + 1:
            last = instances[-1]
            instances[-1] = ComplianceInstance(last.start_cycle, cycle, last.description)
        else:
            instances.append(ComplianceInstance(cycle, cycle, description))
    return ComplianceReport(
        tuple(instances),
        checked=len(rows),
        header="first cycle's prior actuator state initialized from the first trace row",
    )
