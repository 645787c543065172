"""Boolean condition language used by constraint and discovery rules.

A small expression AST over scalar values (bool, number, string) read from a
flat environment keyed by dotted paths. Evaluation is total: unresolved
variables and mixed-kind comparisons make the enclosing comparison false,
they never raise. Structural problems are rejected when the expression is
built or parsed, not at evaluation time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

from .errors import MalformedExpr
from .xmlio import XmlBuilder, child_elements, format_scalar, parse_scalar, reject_children, require_attr

Scalar = Union[bool, int, float, str]

COMPARE_OPS = ("eq", "ne", "lt", "le", "gt", "ge")
_ORDERING_OPS = frozenset(("lt", "le", "gt", "ge"))


@dataclass(frozen=True)
class Const:
    value: Scalar

    def __post_init__(self):
        if not isinstance(self.value, (bool, int, float, str)):
            raise MalformedExpr(f"const value must be a scalar, got {type(self.value).__name__}")


@dataclass(frozen=True)
class Var:
    path: str

    def __post_init__(self):
        if not self.path or not isinstance(self.path, str):
            raise MalformedExpr("var path must be a non-empty string")


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self):
        if self.op not in COMPARE_OPS:
            raise MalformedExpr(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True)
class And:
    children: tuple["Expr", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise MalformedExpr("and requires at least 2 children")


@dataclass(frozen=True)
class Or:
    children: tuple["Expr", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise MalformedExpr("or requires at least 2 children")


@dataclass(frozen=True)
class Not:
    child: "Expr"


Expr = Union[Const, Var, Compare, And, Or, Not]

_UNRESOLVED = object()


def _kind(value) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, (int, float)):
        return "num"
    return "str"


def _scalar_value(expr: Expr, env: Mapping[str, Scalar]):
    """Value of an expression in operand position; compound nodes yield their boolean."""
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        return env.get(expr.path, _UNRESOLVED)
    return eval_expr(expr, env)


def eval_expr(expr: Expr, env: Mapping[str, Scalar]) -> bool:
    """Evaluate ``expr`` against ``env`` with short-circuit semantics.

    Non-boolean scalars in boolean position evaluate to False, as do
    comparisons over unresolved variables or mismatched kinds.
    """
    if isinstance(expr, Const):
        return expr.value is True
    if isinstance(expr, Var):
        return env.get(expr.path) is True
    if isinstance(expr, Not):
        return not eval_expr(expr.child, env)
    if isinstance(expr, And):
        return all(eval_expr(c, env) for c in expr.children)
    if isinstance(expr, Or):
        return any(eval_expr(c, env) for c in expr.children)
    if isinstance(expr, Compare):
        left = _scalar_value(expr.left, env)
        right = _scalar_value(expr.right, env)
        if left is _UNRESOLVED or right is _UNRESOLVED:
            return False
        if _kind(left) != _kind(right):
            return False
        if expr.op in _ORDERING_OPS and _kind(left) != "num":
            return False
        if expr.op == "eq":
            return left == right
        if expr.op == "ne":
            return left != right
        if expr.op == "lt":
            return left < right
        if expr.op == "le":
            return left <= right
        if expr.op == "gt":
            return left > right
        return left >= right
    raise MalformedExpr(f"not an expression node: {expr!r}")


# -- XML form -----------------------------------------------------------------
#
# <const type="bool|num|str">v</const>   <var path="a.b"/>
# <cmp op="eq|ne|lt|le|gt|ge">L R</cmp>  <and>..</and> <or>..</or> <not>..</not>

def write_expr(builder: XmlBuilder, expr: Expr) -> None:
    if isinstance(expr, Const):
        type_name, text = format_scalar(expr.value)
        builder.text_leaf("const", [("type", type_name)], text)
    elif isinstance(expr, Var):
        builder.leaf("var", [("path", expr.path)])
    elif isinstance(expr, Compare):
        builder.open("cmp", [("op", expr.op)])
        write_expr(builder, expr.left)
        write_expr(builder, expr.right)
        builder.close("cmp")
    elif isinstance(expr, (And, Or)):
        tag = "and" if isinstance(expr, And) else "or"
        builder.open(tag)
        for child in expr.children:
            write_expr(builder, child)
        builder.close(tag)
    elif isinstance(expr, Not):
        builder.open("not")
        write_expr(builder, expr.child)
        builder.close("not")
    else:
        raise MalformedExpr(f"not an expression node: {expr!r}")


def expr_to_xml(expr: Expr) -> str:
    builder = XmlBuilder()
    write_expr(builder, expr)
    return builder.done()


def parse_expr(elem) -> Expr:
    tag = elem.tag
    if tag == "const":
        type_name = require_attr(elem, "type")
        reject_children(elem)
        try:
            return Const(parse_scalar(type_name, elem.text, "<const>"))
        except MalformedExpr:
            raise
        except Exception as exc:
            raise MalformedExpr(str(exc)) from exc
    if tag == "var":
        reject_children(elem)
        return Var(require_attr(elem, "path"))
    if tag == "cmp":
        op = require_attr(elem, "op")
        kids = child_elements(elem)
        if len(kids) != 2:
            raise MalformedExpr(f"<cmp> requires exactly 2 operands, found {len(kids)}")
        return Compare(op, parse_expr(kids[0]), parse_expr(kids[1]))
    if tag in ("and", "or"):
        kids = child_elements(elem)
        children = tuple(parse_expr(k) for k in kids)
        return And(children) if tag == "and" else Or(children)
    if tag == "not":
        kids = child_elements(elem)
        if len(kids) != 1:
            raise MalformedExpr(f"<not> requires exactly 1 child, found {len(kids)}")
        return Not(parse_expr(kids[0]))
    raise MalformedExpr(f"unknown expression element <{tag}>")


def parse_single_expr(container, where: str) -> Expr:
    """Parse the single expression child of a wrapper element such as <condition>."""
    kids = child_elements(container)
    if len(kids) != 1:
        raise MalformedExpr(f"{where} must contain exactly one expression element")
    return parse_expr(kids[0])


def expr_to_json(expr: Expr):
    """JSON-friendly mirror of the AST, used by the HTTP layer."""
    if isinstance(expr, Const):
        type_name, _ = format_scalar(expr.value)
        return {"node": "const", "type": type_name, "value": expr.value}
    if isinstance(expr, Var):
        return {"node": "var", "path": expr.path}
    if isinstance(expr, Compare):
        return {"node": "cmp", "op": expr.op,
                "left": expr_to_json(expr.left), "right": expr_to_json(expr.right)}
    if isinstance(expr, And):
        return {"node": "and", "children": [expr_to_json(c) for c in expr.children]}
    if isinstance(expr, Or):
        return {"node": "or", "children": [expr_to_json(c) for c in expr.children]}
    if isinstance(expr, Not):
        return {"node": "not", "child": expr_to_json(expr.child)}
    raise MalformedExpr(f"not an expression node: {expr!r}")
