"""Minimal-parenthesis term rendering shared by both pretty-printers.

Precedence (loose to tight): +/- < */ (left-assoc) < power (right-assoc)
< unary minus < atoms. Only the spelling of the power operator differs
between the two surface syntaxes.
"""

from __future__ import annotations

from .ir import ADD, BinOp, DIV, MUL, Neg, Number, POW, SUB, Term, Var

_LEVEL = {ADD: 1, SUB: 1, MUL: 2, DIV: 2, POW: 3}
_SYMBOL = {ADD: "+", SUB: "-", MUL: "*", DIV: "/"}
_NEG_LEVEL = 4
_ATOM_LEVEL = 5


def render_term(t: Term, pow_op: str) -> str:
    return _render(t, 0, pow_op)


def _level(t: Term) -> int:
    if isinstance(t, BinOp):
        return _LEVEL[t.op]
    if isinstance(t, Neg):
        return _NEG_LEVEL
    return _ATOM_LEVEL


def _render(t: Term, min_level: int, pow_op: str) -> str:
    if isinstance(t, Number):
        return t.lexeme
    if isinstance(t, Var):
        return t.ident.name
    if isinstance(t, Neg):
        return _wrap("-" + _render(t.operand, _NEG_LEVEL, pow_op), _NEG_LEVEL, min_level)
    if isinstance(t, BinOp):
        level = _LEVEL[t.op]
        if t.op == POW:
            # Right-associative: the left operand needs strictly tighter binding.
            text = (
                _render(t.left, level + 1, pow_op)
                + pow_op
                + _render(t.right, level, pow_op)
            )
        else:
            text = (
                _render(t.left, level, pow_op)
                + _SYMBOL[t.op]
                + _render(t.right, level + 1, pow_op)
            )
        return _wrap(text, level, min_level)
    raise TypeError(f"not a term: {type(t).__name__}")


def _wrap(text: str, level: int, min_level: int) -> str:
    return "(" + text + ")" if level < min_level else text
