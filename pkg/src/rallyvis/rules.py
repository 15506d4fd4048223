"""Data-driven guard expressions for tactic rules.

Rules ship as JSON so domain experts can edit them without rebuilds. A
guard is a small expression tree over comparisons, boolean connectives,
arithmetic, list membership, and null checks, evaluated against a nested
context of event/object values.

Expression forms:
    {"lit": 3}                       literal
    {"var": "event.kind"}            dotted lookup (missing path -> null)
    {"op": "and", "args": [...]}     operator application
"""

from __future__ import annotations

from typing import Any

OPS = ("and", "or", "not", "==", "!=", "<", "<=", ">", ">=",
       "+", "-", "*", "/", "in", "is_null")


class RuleEvaluationError(ValueError):
    pass


def resolve_var(context: dict, path: str) -> Any:
    node: Any = context
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            return None
        node = node[part]
    return node


def evaluate(expr: Any, context: dict) -> Any:
    if not isinstance(expr, dict):
        raise RuleEvaluationError(f"malformed expression: {expr!r}")
    if "lit" in expr:
        return expr["lit"]
    if "var" in expr:
        return resolve_var(context, expr["var"])
    if "op" not in expr:
        raise RuleEvaluationError(f"malformed expression: {expr!r}")
    op = expr["op"]
    args = expr.get("args", [])
    if op == "and":
        return all(_truthy(evaluate(a, context)) for a in args)
    if op == "or":
        return any(_truthy(evaluate(a, context)) for a in args)
    if op == "not":
        _arity(op, args, 1)
        return not _truthy(evaluate(args[0], context))
    if op == "is_null":
        _arity(op, args, 1)
        return evaluate(args[0], context) is None
    if op == "in":
        _arity(op, args, 2)
        value = evaluate(args[0], context)
        options = evaluate(args[1], context)
        if not isinstance(options, (list, tuple)):
            raise RuleEvaluationError("'in' needs a list on the right")
        return value in options
    if op in ("==", "!="):
        _arity(op, args, 2)
        left, right = evaluate(args[0], context), evaluate(args[1], context)
        return left == right if op == "==" else left != right
    if op in ("<", "<=", ">", ">="):
        _arity(op, args, 2)
        left, right = _number(evaluate(args[0], context)), _number(evaluate(args[1], context))
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        return left >= right
    if op in ("+", "-", "*", "/"):
        _arity(op, args, 2)
        left, right = _number(evaluate(args[0], context)), _number(evaluate(args[1], context))
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if right == 0:
            raise RuleEvaluationError("division by zero")
        return left / right
    raise RuleEvaluationError(f"unknown operator: {op!r}")


def _truthy(value: Any) -> bool:
    if value is None:
        raise RuleEvaluationError("null value in boolean context")
    return bool(value)


def _number(value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise RuleEvaluationError(f"expected a number, got {value!r}")
    return value


def validate_expression(expr: Any) -> None:
    """Reject malformed expression trees up front (unknown ops, bad arity)."""
    if not isinstance(expr, dict):
        raise RuleEvaluationError(f"malformed expression: {expr!r}")
    if "lit" in expr:
        return
    if "var" in expr:
        if not isinstance(expr["var"], str):
            raise RuleEvaluationError("var path must be a string")
        return
    op = expr.get("op")
    if op not in OPS:
        raise RuleEvaluationError(f"unknown operator: {op!r}")
    args = expr.get("args", [])
    if op in ("not", "is_null"):
        _arity(op, args, 1)
    elif op not in ("and", "or"):
        _arity(op, args, 2)
    for a in args:
        if op == "in" and a is args[1] and isinstance(a, dict) and "lit" in a:
            continue
        validate_expression(a)


def _arity(op: str, args: list, n: int) -> None:
    if len(args) != n:
        raise RuleEvaluationError(f"{op!r} expects {n} argument(s), got {len(args)}")
