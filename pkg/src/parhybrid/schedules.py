"""Parameter schedules written as small arithmetic formulas in ``n``.

Only numbers, ``n``, ``+ - * / **``, parentheses and the functions
``log, log10, exp, sqrt, abs, min, max`` are accepted, e.g.
``"min(0.9, 1/log(log(n+10)))"`` or ``"log(n+2)/(n+2)"``.
"""

from __future__ import annotations

import ast
import math
import operator

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {
    "log": math.log,
    "log10": math.log10,
    "exp": math.exp,
    "sqrt": math.sqrt,
    "abs": abs,
    "min": min,
    "max": max,
}


class ScheduleSyntaxError(ValueError):
    pass


def _check(node: ast.AST, text: str):
    if isinstance(node, ast.Expression):
        return _check(node.body, text)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return
    if isinstance(node, ast.Name) and node.id == "n":
        return
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _check(node.left, text)
        _check(node.right, text)
        return
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        _check(node.operand, text)
        return
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _FUNCS
        and not node.keywords
        and node.args
    ):
        for arg in node.args:
            _check(arg, text)
        return
    raise ScheduleSyntaxError(f"unsupported element {ast.dump(node)} in schedule {text!r}")


def _eval(node: ast.AST, n: int) -> float:
    if isinstance(node, ast.Constant):
        return node.value
    if isinstance(node, ast.Name):
        return n
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, n), _eval(node.right, n))
    if isinstance(node, ast.UnaryOp):
        return _UNARY[type(node.op)](_eval(node.operand, n))
    return _FUNCS[node.func.id](*(_eval(a, n) for a in node.args))


class Formula:
    """A parsed schedule; call it with the iteration index."""

    def __init__(self, text):
        self.text = str(text).strip()
        try:
            tree = ast.parse(self.text, mode="eval")
        except SyntaxError as exc:
            raise ScheduleSyntaxError(f"cannot parse schedule {self.text!r}: {exc.msg}") from None
        _check(tree, self.text)
        self._body = tree.body

    def __call__(self, n: int) -> float:
        return float(_eval(self._body, n))

    def __repr__(self):
        return f"Formula({self.text!r})"


def parse_schedule(value) -> Formula:
    """Accept a number or a formula string."""
    if isinstance(value, bool):
        raise ScheduleSyntaxError("booleans are not schedules")
    if isinstance(value, (int, float)):
        return Formula(repr(float(value)))
    return Formula(value)
