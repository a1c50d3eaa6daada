"""Typed infix expressions over column and parameter values.

This is the little language behind row filtering (``--where``) and
derived columns (``--column``).  Precedence, low to high:

    ||   &&   < <= > >= == !=   + -   * / %   unary - !

Comparisons do not associate (``a < b < c`` is a syntax error).
Identifiers resolve to a column first, then a parameter.  All
arithmetic happens in IEEE binary64 with integer and character inputs
widened; division by zero follows IEEE-754, and ``%`` is the remainder
of truncated division with the dividend's sign.  A type-checked tree
never fails at evaluation time.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Union

from .errors import ExprError
from .model import DataType, Page, Schema, Value, find_field

__all__ = ["ExprType", "parse_expr", "type_check", "eval_expr",
           "Literal", "Ident", "Unary", "Binary", "Call"]


class ExprType(enum.Enum):
    NUMERIC = "numeric"
    TEXT = "text"
    LOGICAL = "logical"


@dataclass(frozen=True)
class Literal:
    value: float | str
    offset: int


@dataclass(frozen=True)
class Ident:
    name: str
    offset: int


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"
    offset: int


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"
    offset: int


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Node", ...]
    offset: int


Node = Union[Literal, Ident, Unary, Binary, Call]

FUNCTION_ARITY = {
    "abs": 1, "sqrt": 1, "ln": 1, "exp": 1, "floor": 1, "ceil": 1,
    "pow": 2, "min": 2, "max": 2,
}

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.:]*")
_NUMBER_RE = re.compile(r"(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")

_TWO_CHAR_OPS = ("||", "&&", "<=", ">=", "==", "!=")
_ONE_CHAR_OPS = "<>+-*/%!(),"


@dataclass(frozen=True)
class _Token:
    kind: str  # number | string | ident | op | end
    text: str
    offset: int


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c.isdigit() or c == ".":
            m = _NUMBER_RE.match(source, i)
            if m:
                tokens.append(_Token("number", m.group(), i))
                i = m.end()
                continue
        m = _IDENT_RE.match(source, i)
        if m:
            tokens.append(_Token("ident", m.group(), i))
            i = m.end()
            continue
        if c == '"':
            j = i + 1
            out: list[str] = []
            while j < n and source[j] != '"':
                if source[j] == "\\":
                    if j + 1 >= n:
                        break
                    esc = source[j + 1]
                    decoded = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc)
                    if decoded is None:
                        raise ExprError(f"bad escape '\\{esc}'", j)
                    out.append(decoded)
                    j += 2
                else:
                    out.append(source[j])
                    j += 1
            if j >= n:
                raise ExprError("unterminated string literal", i)
            tokens.append(_Token("string", "".join(out), i))
            i = j + 1
            continue
        two = source[i:i + 2]
        if two in _TWO_CHAR_OPS:
            tokens.append(_Token("op", two, i))
            i += 2
            continue
        if c in _ONE_CHAR_OPS:
            tokens.append(_Token("op", c, i))
            i += 1
            continue
        raise ExprError(f"unexpected character {c!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def eat_op(self, *ops: str) -> _Token | None:
        if self.cur.kind == "op" and self.cur.text in ops:
            tok = self.cur
            self.i += 1
            return tok
        return None

    def expect_op(self, op: str) -> None:
        if not self.eat_op(op):
            raise ExprError(f"expected '{op}'", self.cur.offset)

    def parse(self) -> Node:
        node = self.parse_or()
        if self.cur.kind != "end":
            raise ExprError(f"unexpected token '{self.cur.text}'",
                            self.cur.offset)
        return node

    def parse_or(self) -> Node:
        node = self.parse_and()
        while True:
            tok = self.eat_op("||")
            if not tok:
                return node
            node = Binary("||", node, self.parse_and(), tok.offset)

    def parse_and(self) -> Node:
        node = self.parse_cmp()
        while True:
            tok = self.eat_op("&&")
            if not tok:
                return node
            node = Binary("&&", node, self.parse_cmp(), tok.offset)

    def parse_cmp(self) -> Node:
        node = self.parse_add()
        tok = self.eat_op("<", "<=", ">", ">=", "==", "!=")
        if tok:
            node = Binary(tok.text, node, self.parse_add(), tok.offset)
        return node

    def parse_add(self) -> Node:
        node = self.parse_mul()
        while True:
            tok = self.eat_op("+", "-")
            if not tok:
                return node
            node = Binary(tok.text, node, self.parse_mul(), tok.offset)

    def parse_mul(self) -> Node:
        node = self.parse_unary()
        while True:
            tok = self.eat_op("*", "/", "%")
            if not tok:
                return node
            node = Binary(tok.text, node, self.parse_unary(), tok.offset)

    def parse_unary(self) -> Node:
        tok = self.eat_op("-", "!")
        if tok:
            return Unary(tok.text, self.parse_unary(), tok.offset)
        return self.parse_primary()

    def parse_primary(self) -> Node:
        tok = self.cur
        if tok.kind == "number":
            self.i += 1
            return Literal(float(tok.text), tok.offset)
        if tok.kind == "string":
            self.i += 1
            return Literal(tok.text, tok.offset)
        if tok.kind == "ident":
            self.i += 1
            if self.eat_op("("):
                if tok.text not in FUNCTION_ARITY:
                    raise ExprError(f"unknown function '{tok.text}'", tok.offset)
                args = [self.parse_or()]
                while self.eat_op(","):
                    args.append(self.parse_or())
                self.expect_op(")")
                arity = FUNCTION_ARITY[tok.text]
                if len(args) != arity:
                    raise ExprError(f"{tok.text} expects {arity} argument(s), "
                                    f"got {len(args)}", tok.offset)
                return Call(tok.text, tuple(args), tok.offset)
            return Ident(tok.text, tok.offset)
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            node = self.parse_or()
            self.expect_op(")")
            return node
        found = f"'{tok.text}'" if tok.text else "end of input"
        raise ExprError(f"expected an expression, found {found}", tok.offset)


def parse_expr(source: str) -> Node:
    """Parse a source string; raises :class:`ExprError` with the byte
    offset of any syntax problem."""
    return _Parser(_tokenize(source)).parse()


def _resolve(schema: Schema, name: str) -> tuple[str, int, DataType] | None:
    """Columns shadow parameters on name collisions."""
    idx = find_field(schema, "column", name)
    if idx is not None:
        return "column", idx, schema.columns[idx].type
    idx = find_field(schema, "parameter", name)
    if idx is not None:
        return "parameter", idx, schema.parameters[idx].type
    return None


def _value_expr_type(dtype: DataType) -> ExprType:
    # character joins the numeric family as its byte value
    return ExprType.TEXT if dtype is DataType.STRING else ExprType.NUMERIC


def type_check(node: Node, schema: Schema) -> ExprType:
    """Assign a type or raise :class:`ExprError` at the node's offset."""
    if isinstance(node, Literal):
        return ExprType.TEXT if isinstance(node.value, str) else ExprType.NUMERIC
    if isinstance(node, Ident):
        binding = _resolve(schema, node.name)
        if binding is None:
            raise ExprError(f"unknown identifier '{node.name}'", node.offset)
        return _value_expr_type(binding[2])
    if isinstance(node, Unary):
        operand = type_check(node.operand, schema)
        if node.op == "-":
            if operand is not ExprType.NUMERIC:
                raise ExprError("unary '-' needs a numeric operand", node.offset)
            return ExprType.NUMERIC
        if operand is not ExprType.LOGICAL:
            raise ExprError("'!' needs a logical operand", node.offset)
        return ExprType.LOGICAL
    if isinstance(node, Binary):
        left = type_check(node.left, schema)
        right = type_check(node.right, schema)
        op = node.op
        if op in ("&&", "||"):
            if left is not ExprType.LOGICAL or right is not ExprType.LOGICAL:
                raise ExprError(f"'{op}' needs logical operands", node.offset)
            return ExprType.LOGICAL
        if op in ("<", "<=", ">", ">=", "==", "!="):
            if left is right and left in (ExprType.NUMERIC, ExprType.TEXT):
                return ExprType.LOGICAL
            raise ExprError(f"'{op}' needs two numeric or two text operands",
                            node.offset)
        if left is not ExprType.NUMERIC or right is not ExprType.NUMERIC:
            raise ExprError(f"'{op}' needs numeric operands", node.offset)
        return ExprType.NUMERIC
    # Call
    for arg in node.args:
        if type_check(arg, schema) is not ExprType.NUMERIC:
            raise ExprError(f"{node.func} needs numeric arguments", node.offset)
    return ExprType.NUMERIC


def _ieee_div(a: float, b: float) -> float:
    if b == 0.0:
        if math.isnan(a) or a == 0.0:
            return math.nan
        return math.copysign(math.inf,
                             math.copysign(1.0, a) * math.copysign(1.0, b))
    return a / b


def _ieee_mod(a: float, b: float) -> float:
    if b == 0.0 or math.isinf(a) or math.isnan(a) or math.isnan(b):
        return math.nan
    return math.fmod(a, b)


def _fn_sqrt(a: float) -> float:
    if a >= 0:
        return math.sqrt(a)
    return math.nan


def _fn_ln(a: float) -> float:
    if math.isnan(a):
        return math.nan
    if a == 0.0:
        return -math.inf
    if a < 0:
        return math.nan
    return math.log(a)


def _fn_exp(a: float) -> float:
    try:
        return math.exp(a)
    except OverflowError:
        return math.inf


def _fn_pow(a: float, b: float) -> float:
    try:
        return math.pow(a, b)
    except ValueError:
        return math.nan
    except OverflowError:
        return math.inf


def _fn_floor(a: float) -> float:
    return float(math.floor(a)) if math.isfinite(a) else a


def _fn_ceil(a: float) -> float:
    return float(math.ceil(a)) if math.isfinite(a) else a


def _fn_min(a: float, b: float) -> float:
    if math.isnan(a) or math.isnan(b):
        return math.nan
    return a if a <= b else b


def _fn_max(a: float, b: float) -> float:
    if math.isnan(a) or math.isnan(b):
        return math.nan
    return a if a >= b else b


_FUNCTIONS = {
    "abs": abs,
    "sqrt": _fn_sqrt,
    "ln": _fn_ln,
    "exp": _fn_exp,
    "pow": _fn_pow,
    "floor": _fn_floor,
    "ceil": _fn_ceil,
    "min": _fn_min,
    "max": _fn_max,
}


def _widen(value: Value) -> float | str:
    if value.type is DataType.STRING:
        return value.data
    return float(value.data)


def eval_expr(node: Node, schema: Schema, page: Page,
              row: int) -> float | str | bool:
    """Evaluate a type-checked tree for one row of one page."""
    if isinstance(node, Literal):
        return node.value
    if isinstance(node, Ident):
        kind, idx, _ = _resolve(schema, node.name)
        if kind == "column":
            return _widen(page.column_data[idx][row])
        return _widen(page.parameter_values[idx])
    if isinstance(node, Unary):
        if node.op == "-":
            return -eval_expr(node.operand, schema, page, row)
        return not eval_expr(node.operand, schema, page, row)
    if isinstance(node, Binary):
        op = node.op
        if op == "&&":
            return bool(eval_expr(node.left, schema, page, row)
                        and eval_expr(node.right, schema, page, row))
        if op == "||":
            return bool(eval_expr(node.left, schema, page, row)
                        or eval_expr(node.right, schema, page, row))
        a = eval_expr(node.left, schema, page, row)
        b = eval_expr(node.right, schema, page, row)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return _ieee_div(a, b)
        if op == "%":
            return _ieee_mod(a, b)
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        if op == "==":
            return a == b
        return a != b
    return _FUNCTIONS[node.func](*(eval_expr(arg, schema, page, row)
                                   for arg in node.args))
