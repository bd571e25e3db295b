"""Lexer, parser, and pretty-printer for the structured-text subset.

The accepted language: expressions over LREAL/REAL/BOOL variables,
assignment, IF/ELSIF/ELSE conditionals, PROGRAM units with VAR blocks, and a
single CONFIGURATION/RESOURCE/TASK section. Keywords match
case-insensitively; `(* ... *)` and `// ...` comments are discarded.
Constructs outside the subset (loops, CASE, calls, non-numeric types) are
rejected with an error naming the construct.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from ._render import render_term
from .errors import ParseError
from .ir import (
    ADD, DIV, EQ, GE, GT, LE, LT, MUL, NE, POW, SUB,
    And, Assign, BinOp, BoolConst, Cmp, Formula, Ident,
    IfThen, IfThenElse, Neg, Not, Number, Or, Program, RESERVED_WORDS, Term, Var, Xor, list_to_seq, number_lexeme, seq_to_list,
)

# Recognized so that out-of-subset sources fail with a named construct
# instead of a generic syntax error.
UNSUPPORTED_KEYWORDS = frozenset({
    "WHILE", "END_WHILE", "DO", "FOR", "END_FOR", "TO", "BY", "CASE",
    "END_CASE", "OF", "REPEAT", "END_REPEAT", "UNTIL", "EXIT", "RETURN",
    "FUNCTION", "END_FUNCTION", "FUNCTION_BLOCK", "END_FUNCTION_BLOCK",
    "METHOD", "END_METHOD", "TYPE", "END_TYPE", "STRUCT", "END_STRUCT",
    "ARRAY", "VAR_IN_OUT", "VAR_GLOBAL", "VAR_TEMP",
})

VAR_KINDS = {
    "VAR_INPUT": "input",
    "VAR_OUTPUT": "output",
    "VAR": "local",
    "VAR_EXTERNAL": "external",
}
KIND_KEYWORDS = {v: k for k, v in VAR_KINDS.items()}

TYPES = ("LREAL", "REAL", "BOOL")

_CMP_TOKENS = {"=": EQ, "<>": NE, ">": GT, ">=": GE, "<": LT, "<=": LE}
_CMP_SYMBOL = {rel: sym for sym, rel in _CMP_TOKENS.items()}


@dataclass(frozen=True)
class StVarBlock:
    """One VAR_* declaration block."""

    kind: str  # input | output | local | external
    decls: tuple[tuple[Ident, str], ...]  # (name, LREAL|REAL|BOOL)

    def __post_init__(self):
        if self.kind not in KIND_KEYWORDS:
            raise ValueError(f"unknown block kind: {self.kind!r}")
        for _, ty in self.decls:
            if ty not in TYPES:
                raise ValueError(f"unknown declaration type: {ty!r}")


@dataclass(frozen=True)
class StConfig:
    """CONFIGURATION/RESOURCE/TASK section; interval is in seconds."""

    config_name: Ident
    resource_name: Ident
    task_name: Ident
    program_instance: Ident
    interval: float
    priority: int = 0
    host: Ident = Ident("PLC")

    def __post_init__(self):
        if self.interval <= 0:
            raise ValueError("task interval must be positive")
        if self.priority < 0:
            raise ValueError("task priority must be non-negative")


@dataclass(frozen=True)
class StUnit:
    """A parsed PROGRAM with its VAR blocks and optional configuration."""

    program_name: Ident
    var_blocks: tuple[StVarBlock, ...]
    body: Program
    config: Optional[StConfig] = None

    def __post_init__(self):
        seen: set[Ident] = set()
        for block in self.var_blocks:
            for name, _ in block.decls:
                if name in seen:
                    raise ValueError(f"duplicate variable declaration: {name}")
                seen.add(name)

    def declared(self, kind: str) -> tuple[Ident, ...]:
        return tuple(
            name for block in self.var_blocks if block.kind == kind for name, _ in block.decls
        )


# ---------------------------------------------------------------------------
# Lexer

_NUMBER = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_OPERATORS = ("**", ":=", "<=", ">=", "<>", "<", ">", "=", "+", "-", "*", "/",
              "(", ")", ";", ":", ",")


@dataclass(frozen=True)
class Token:
    kind: str  # kw | ident | number | duration | op | eof
    value: str
    line: int
    col: int
    seconds: float = 0.0  # duration tokens only


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def error(msg, expected=None):
        raise ParseError(msg, line, col, expected)

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            i = n if j < 0 else j
            continue
        if text.startswith("(*", i):
            j = text.find("*)", i + 2)
            if j < 0:
                error("unterminated comment")
            chunk = text[i:j + 2]
            newlines = chunk.count("\n")
            if newlines:
                line += newlines
                col = len(chunk) - chunk.rfind("\n")
            else:
                col += len(chunk)
            i = j + 2
            continue
        if c.upper() == "T" and text.startswith("#", i + 1):
            tok_line, tok_col = line, col
            j = i + 2
            m = _NUMBER.match(text, j)
            if not m:
                error("malformed duration literal", "T#<number> s|ms")
            j = m.end()
            k = j
            while k < n and text[k] in " \t":
                k += 1
            um = re.match(r"(ms|s)", text[k:], re.IGNORECASE)
            if not um:
                raise ParseError("malformed duration literal", tok_line, tok_col, "unit s or ms")
            unit = um.group(1).lower()
            value = float(m.group(0))
            seconds = value / 1000.0 if unit == "ms" else value
            end = k + len(um.group(1))
            lexeme = text[i:end]
            tokens.append(Token("duration", lexeme, tok_line, tok_col, seconds))
            col += end - i
            i = end
            continue
        m = _IDENT.match(text, i)
        if m:
            word = m.group(0)
            upper = word.upper()
            if upper in RESERVED_WORDS:
                tokens.append(Token("kw", upper, line, col))
            elif upper in UNSUPPORTED_KEYWORDS:
                tokens.append(Token("unsupported", upper, line, col))
            else:
                tokens.append(Token("ident", word, line, col))
            col += len(word)
            i = m.end()
            continue
        m = _NUMBER.match(text, i)
        if m:
            tokens.append(Token("number", m.group(0), line, col))
            col += len(m.group(0))
            i = m.end()
            continue
        for op in _OPERATORS:
            if text.startswith(op, i):
                tokens.append(Token("op", op, line, col))
                col += len(op)
                i += len(op)
                break
        else:
            error(f"unexpected character {c!r}")
    tokens.append(Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser

class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def at_kw(self, *names: str) -> bool:
        tok = self.peek()
        return tok.kind == "kw" and tok.value in names

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.value in ops

    def expect_kw(self, name: str) -> Token:
        tok = self.peek()
        if tok.kind != "kw" or tok.value != name:
            self.fail(f"found {describe(tok)}", name)
        return self.next()

    def expect_op(self, op: str) -> Token:
        tok = self.peek()
        if tok.kind != "op" or tok.value != op:
            self.fail(f"found {describe(tok)}", f"'{op}'")
        return self.next()

    def expect_ident(self) -> Ident:
        tok = self.peek()
        if tok.kind != "ident":
            self.fail(f"found {describe(tok)}", "identifier")
        self.next()
        return Ident(tok.value)

    def fail(self, message: str, expected: str | None = None):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.col, expected)

    def reject_unsupported(self):
        tok = self.peek()
        if tok.kind == "unsupported":
            raise ParseError(
                f"unsupported construct {tok.value} (outside the translatable subset)",
                tok.line, tok.col,
            )

    # -- expressions ---------------------------------------------------------
    #
    # Precedence, loosest to tightest: OR/XOR, AND, NOT, comparisons
    # (non-associative), +/-, */slash, **, unary minus. One unified grammar
    # produces either a Term or a Formula; operators check operand kinds.

    def expression(self):
        left = self.parse_and()
        while self.at_kw("OR", "XOR"):
            op = self.next()
            right = self.parse_and()
            lf = self.require_formula(left, op)
            rf = self.require_formula(right, op)
            left = Or(lf, rf) if op.value == "OR" else Xor(lf, rf)
        return left

    def parse_and(self):
        left = self.parse_not()
        while self.at_kw("AND"):
            op = self.next()
            right = self.parse_not()
            left = And(self.require_formula(left, op), self.require_formula(right, op))
        return left

    def parse_not(self):
        if self.at_kw("NOT"):
            op = self.next()
            operand = self.parse_not()
            return Not(self.require_formula(operand, op))
        return self.parse_cmp()

    def parse_cmp(self):
        left = self.parse_add()
        if self.at_op(*_CMP_TOKENS):
            op = self.next()
            right = self.parse_add()
            result = Cmp(_CMP_TOKENS[op.value], self.require_term(left, op), self.require_term(right, op))
            if self.at_op(*_CMP_TOKENS):
                self.fail("comparisons are non-associative", "AND/OR or end of expression")
            return result
        return left

    def parse_add(self):
        left = self.parse_mul()
        while self.at_op("+", "-"):
            op = self.next()
            right = self.parse_mul()
            kind = ADD if op.value == "+" else SUB
            left = BinOp(kind, self.require_term(left, op), self.require_term(right, op))
        return left

    def parse_mul(self):
        left = self.parse_pow()
        while self.at_op("*", "/"):
            op = self.next()
            right = self.parse_pow()
            kind = MUL if op.value == "*" else DIV
            left = BinOp(kind, self.require_term(left, op), self.require_term(right, op))
        return left

    def parse_pow(self):
        left = self.parse_unary()
        if self.at_op("**"):
            op = self.next()
            right = self.parse_pow()
            return BinOp(POW, self.require_term(left, op), self.require_term(right, op))
        return left

    def parse_unary(self):
        if self.at_op("-"):
            op = self.next()
            return Neg(self.require_term(self.parse_unary(), op))
        return self.parse_primary()

    def parse_primary(self):
        tok = self.peek()
        if tok.kind == "number":
            self.next()
            return Number(tok.value)
        if tok.kind == "kw" and tok.value in ("TRUE", "FALSE"):
            self.next()
            return BoolConst(tok.value == "TRUE")
        if tok.kind == "ident":
            self.next()
            if self.at_op("("):
                raise ParseError(
                    f"function call {tok.value}(...) is not supported",
                    tok.line, tok.col,
                )
            return Var(Ident(tok.value))
        if tok.kind == "op" and tok.value == "(":
            self.next()
            inner = self.expression()
            self.expect_op(")")
            return inner
        self.reject_unsupported()
        self.fail(f"found {describe(tok)}", "expression")

    def require_term(self, value, at: Token) -> Term:
        if isinstance(value, Term):
            return value
        raise ParseError("expected an arithmetic term", at.line, at.col)

    def require_formula(self, value, at: Token) -> Formula:
        if isinstance(value, Formula):
            return value
        raise ParseError(
            "expected a Boolean condition (bare variables are not formulas)",
            at.line, at.col,
        )

    # -- statements ----------------------------------------------------------

    _STMT_END = ("END_IF", "ELSE", "ELSIF", "END_PROGRAM")

    def statement_list(self, allow_empty: bool = False) -> list[Program]:
        stmts: list[Program] = []
        while True:
            tok = self.peek()
            if tok.kind == "eof" or (tok.kind == "kw" and tok.value in self._STMT_END):
                break
            stmts.append(self.statement())
        if not stmts and not allow_empty:
            self.fail("statement expected", "assignment or IF")
        return stmts

    def statement(self) -> Program:
        self.reject_unsupported()
        tok = self.peek()
        if tok.kind == "kw" and tok.value == "IF":
            return self.if_statement()
        if tok.kind == "ident":
            target = self.expect_ident()
            self.expect_op(":=")
            op = self.peek()
            value = self.expression()
            if not isinstance(value, Term):
                raise ParseError("can only assign arithmetic terms", op.line, op.col)
            self.expect_op(";")
            return Assign(target, value, pos=(tok.line, tok.col))
        self.fail(f"found {describe(tok)}", "assignment or IF")

    def if_statement(self) -> Program:
        start = self.expect_kw("IF")
        arms: list[tuple[Formula, Program]] = []
        cond_tok = self.peek()
        cond = self.expression()
        cond = self.require_formula(cond, cond_tok)
        self.expect_kw("THEN")
        arms.append((cond, list_to_seq(self.statement_list())))
        while self.at_kw("ELSIF"):
            self.next()
            cond_tok = self.peek()
            cond = self.require_formula(self.expression(), cond_tok)
            self.expect_kw("THEN")
            arms.append((cond, list_to_seq(self.statement_list())))
        else_body: Optional[Program] = None
        if self.at_kw("ELSE"):
            self.next()
            stmts = self.statement_list(allow_empty=True)
            if stmts:  # empty ELSE normalizes away
                else_body = list_to_seq(stmts)
        self.expect_kw("END_IF")
        if self.at_op(";"):
            self.next()
        return _fold_if(arms, else_body, (start.line, start.col))

    # -- declarations and configuration ---------------------------------------

    def var_block(self) -> StVarBlock:
        kw = self.next()
        kind = VAR_KINDS[kw.value]
        decls: list[tuple[Ident, str]] = []
        while not self.at_kw("END_VAR"):
            names = [self.expect_ident()]
            while self.at_op(","):
                self.next()
                names.append(self.expect_ident())
            self.expect_op(":")
            ty = self.peek()
            if ty.kind == "kw" and ty.value in TYPES:
                self.next()
            else:
                raise ParseError(
                    f"unsupported type {ty.value!r} (only LREAL, REAL, BOOL)",
                    ty.line, ty.col,
                )
            self.expect_op(";")
            decls.extend((name, ty.value) for name in names)
        self.expect_kw("END_VAR")
        if self.at_op(";"):
            self.next()
        return StVarBlock(kind, tuple(decls))

    def configuration(self) -> tuple[StConfig, Ident]:
        self.expect_kw("CONFIGURATION")
        config_name = self.expect_ident()
        self.expect_kw("RESOURCE")
        resource_name = self.expect_ident()
        self.expect_kw("ON")
        host = self.expect_ident()
        self.expect_kw("TASK")
        task_name = self.expect_ident()
        self.expect_op("(")
        self.expect_kw("INTERVAL")
        self.expect_op(":=")
        dur = self.peek()
        if dur.kind != "duration":
            self.fail(f"found {describe(dur)}", "duration literal T#<n> s|ms")
        self.next()
        self.expect_op(",")
        self.expect_kw("PRIORITY")
        self.expect_op(":=")
        prio = self.peek()
        if prio.kind != "number" or not prio.value.isdigit():
            self.fail(f"found {describe(prio)}", "non-negative integer priority")
        self.next()
        self.expect_op(")")
        if self.at_op(";"):
            self.next()
        self.expect_kw("PROGRAM")
        instance = self.expect_ident()
        self.expect_kw("WITH")
        with_task = self.expect_ident()
        if with_task != task_name:
            self.fail(f"program bound to unknown task {with_task}", str(task_name))
        self.expect_op(":")
        prog_ref = self.expect_ident()
        if self.at_op(";"):
            self.next()
        self.expect_kw("END_RESOURCE")
        if self.at_op(";"):
            self.next()
        self.expect_kw("END_CONFIGURATION")
        if self.at_op(";"):
            self.next()
        return StConfig(
            config_name=config_name,
            resource_name=resource_name,
            task_name=task_name,
            program_instance=instance,
            interval=dur.seconds,
            priority=int(prio.value),
            host=host,
        ), prog_ref

    def unit(self) -> StUnit:
        self.expect_kw("PROGRAM")
        program_name = self.expect_ident()
        blocks: list[StVarBlock] = []
        while self.at_kw(*VAR_KINDS):
            blocks.append(self.var_block())
        body = list_to_seq(self.statement_list())
        self.expect_kw("END_PROGRAM")
        if self.at_op(";"):
            self.next()
        config = None
        if self.at_kw("CONFIGURATION"):
            config, prog_ref = self.configuration()
            if prog_ref != program_name:
                self.fail(f"configuration refers to unknown program {prog_ref}")
        tok = self.peek()
        if tok.kind != "eof":
            self.fail(f"unexpected trailing input: {describe(tok)}", "end of file")
        try:
            return StUnit(program_name, tuple(blocks), body, config)
        except ValueError as exc:  # duplicate declarations
            raise ParseError(str(exc), 1, 1) from None

    def eof(self):
        tok = self.peek()
        if tok.kind != "eof":
            self.fail(f"unexpected trailing input: {describe(tok)}", "end of input")


def _fold_if(arms, else_body, pos) -> Program:
    cond, body = arms[0]
    if len(arms) == 1:
        if else_body is None:
            return IfThen(cond, body, pos=pos)
        return IfThenElse(cond, body, else_body, pos=pos)
    return IfThenElse(cond, body, _fold_if(arms[1:], else_body, pos), pos=pos)


def describe(tok: Token) -> str:
    if tok.kind == "eof":
        return "end of input"
    if tok.kind == "kw":
        return f"keyword {tok.value}"
    return f"{tok.kind} {tok.value!r}"


def parse_st(text: str) -> StUnit:
    """Parse an entire PROGRAM unit (with optional configuration)."""
    return _Parser(text).unit()


def parse_st_statements(text: str) -> Program:
    """Parse a bare statement list (no PROGRAM wrapper)."""
    parser = _Parser(text)
    body = list_to_seq(parser.statement_list())
    parser.eof()
    return body


def parse_st_expression(text: str):
    """Parse a single expression; returns a Term or an ST-dialect Formula."""
    parser = _Parser(text)
    value = parser.expression()
    parser.eof()
    return value


# ---------------------------------------------------------------------------
# Printer

def print_st_term(t: Term) -> str:
    return render_term(t, "**")


# Formula precedence levels for minimal parenthesization.
_F_ORXOR, _F_AND, _F_NOT, _F_ATOM = 1, 2, 3, 4


def print_st_formula(f: Formula) -> str:
    return _formula(f, 0)


def _formula(f: Formula, min_level: int) -> str:
    if isinstance(f, BoolConst):
        return "TRUE" if f.value else "FALSE"
    if isinstance(f, Cmp):
        return f"{print_st_term(f.left)} {_CMP_SYMBOL[f.rel]} {print_st_term(f.right)}"
    if isinstance(f, Not):
        return f"NOT({_formula(f.operand, 0)})"
    if isinstance(f, And):
        text = _formula(f.left, _F_AND) + " AND " + _formula(f.right, _F_AND + 1)
        return _wrap(text, _F_AND, min_level)
    if isinstance(f, (Or, Xor)):
        name = "OR" if isinstance(f, Or) else "XOR"
        text = _formula(f.left, _F_ORXOR) + f" {name} " + _formula(f.right, _F_ORXOR + 1)
        return _wrap(text, _F_ORXOR, min_level)
    raise TypeError(f"cannot print {type(f).__name__} in ST syntax")


def _wrap(text: str, level: int, min_level: int) -> str:
    return "(" + text + ")" if level < min_level else text


def print_st_statement(p: Program, indent: int = 0) -> str:
    """Canonical layout: two-space indent, one statement per line."""
    return "\n".join(_stmt_lines(p, indent))


def _stmt_lines(p: Program, indent: int) -> list[str]:
    pad = "  " * indent
    lines: list[str] = []
    for stmt in seq_to_list(p):
        if isinstance(stmt, Assign):
            lines.append(f"{pad}{stmt.target} := {print_st_term(stmt.value)};")
        elif isinstance(stmt, IfThen):
            lines.append(f"{pad}IF ({print_st_formula(stmt.cond)}) THEN")
            lines.extend(_stmt_lines(stmt.then, indent + 1))
            lines.append(f"{pad}END_IF;")
        elif isinstance(stmt, IfThenElse):
            lines.append(f"{pad}IF ({print_st_formula(stmt.cond)}) THEN")
            lines.extend(_stmt_lines(stmt.then, indent + 1))
            lines.append(f"{pad}ELSE")
            lines.extend(_stmt_lines(stmt.else_, indent + 1))
            lines.append(f"{pad}END_IF;")
        else:
            raise TypeError(f"cannot print {type(stmt).__name__} as an ST statement")
    return lines


def format_interval(seconds: float) -> str:
    """Render a task interval as a duration literal (whole s or ms preferred)."""
    if seconds == int(seconds):
        return f"T#{int(seconds)} s"
    millis = seconds * 1000.0
    if millis == int(millis):
        return f"T#{int(millis)} ms"
    return f"T#{number_lexeme(seconds)} s"


def print_st(unit: StUnit) -> str:
    """Print a unit in the canonical layout; reparsing yields an equal AST."""
    lines = [f"PROGRAM {unit.program_name}"]
    for block in unit.var_blocks:
        lines.append(f"  {KIND_KEYWORDS[block.kind]}")
        for name, ty in block.decls:
            lines.append(f"    {name} : {ty};")
        lines.append("  END_VAR")
    lines.append("")
    lines.append(print_st_statement(unit.body, indent=1))
    lines.append("END_PROGRAM")
    if unit.config is not None:
        cfg = unit.config
        lines.append("")
        lines.append(f"CONFIGURATION {cfg.config_name}")
        lines.append(f"  RESOURCE {cfg.resource_name} ON {cfg.host}")
        lines.append(
            f"    TASK {cfg.task_name}(INTERVAL:={format_interval(cfg.interval)}, "
            f"PRIORITY:={cfg.priority});"
        )
        lines.append(
            f"    PROGRAM {cfg.program_instance} WITH {cfg.task_name} : {unit.program_name};"
        )
        lines.append("  END_RESOURCE")
        lines.append("END_CONFIGURATION")
    return "\n".join(lines) + "\n"
