"""Small infix expression grammar for user-defined functions.

Grammar (recursive descent, ``^`` is right-associative and binds tighter
than unary minus)::

    expr    := term (("+" | "-") term)*
    term    := factor (("*" | "/") factor)*
    factor  := "-" factor | power
    power   := atom ("^" factor)?
    atom    := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Functions: ``exp``, ``log``, ``sqrt``, ``abs``, ``pow``.  Constants: ``pi``,
``e``.  Any other name is a free variable; which variables are allowed is
decided by the caller (``u``/``v`` for scalar deviations and weights,
``u1..ud``/``v1..vd`` for vector potentials).  Everything is evaluated in
double precision.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import DomainError, ExpressionError

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)

_FUNCTIONS: dict[str, Callable] = {
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "abs": abs,
    "pow": math.pow,
}
_ARITY = {"exp": 1, "log": 1, "sqrt": 1, "abs": 1, "pow": 2}
_CONSTANTS = {"pi": math.pi, "e": math.e}


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            rest = text[pos:].strip()
            if not rest:
                break
            raise ExpressionError(f"unexpected character {rest[0]!r} in {text!r}")
        pos = m.end()
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name")))
        else:
            op = m.group("op")
            tokens.append(("op", "^" if op == "**" else op))
    tokens.append(("end", ""))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str]:
        return self.tokens[self.pos]

    def advance(self) -> tuple[str, str]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str):
        kind, text = self.advance()
        if kind != "op" or text != value:
            raise ExpressionError(f"expected {value!r} in {self.text!r}, found {text!r}")

    def parse(self):
        node = self.expr()
        kind, text = self.peek()
        if kind != "end":
            raise ExpressionError(f"trailing input {text!r} in {self.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            _, op = self.advance()
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            _, op = self.advance()
            node = (op, node, self.factor())
        return node

    def factor(self):
        if self.peek() == ("op", "-"):
            self.advance()
            return ("neg", self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.advance()
            return ("^", base, self.factor())
        return base

    def atom(self):
        kind, text = self.advance()
        if kind == "num":
            return ("const", float(text))
        if kind == "name":
            if self.peek() == ("op", "("):
                if text not in _FUNCTIONS:
                    raise ExpressionError(f"unknown function {text!r} in {self.text!r}")
                self.advance()
                args = [self.expr()]
                while self.peek() == ("op", ","):
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != _ARITY[text]:
                    raise ExpressionError(
                        f"function {text!r} takes {_ARITY[text]} argument(s), got {len(args)}"
                    )
                return ("call", text, args)
            if text in _CONSTANTS:
                return ("const", _CONSTANTS[text])
            return ("var", text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExpressionError(f"unexpected token {text!r} in {self.text!r}")


def _free_variables(node, out: set[str]):
    tag = node[0]
    if tag == "var":
        out.add(node[1])
    elif tag == "neg":
        _free_variables(node[1], out)
    elif tag in ("+", "-", "*", "/", "^"):
        _free_variables(node[1], out)
        _free_variables(node[2], out)
    elif tag == "call":
        for arg in node[2]:
            _free_variables(arg, out)


def _emit(node) -> str:
    tag = node[0]
    if tag == "const":
        return repr(node[1])
    if tag == "var":
        return f"_env[{node[1]!r}]"
    if tag == "neg":
        return f"(-{_emit(node[1])})"
    if tag == "^":
        return f"({_emit(node[1])} ** {_emit(node[2])})"
    if tag in ("+", "-", "*", "/"):
        return f"({_emit(node[1])} {tag} {_emit(node[2])})"
    if tag == "call":
        args = ", ".join(_emit(a) for a in node[2])
        return f"_fn_{node[1]}({args})"
    raise AssertionError(f"unreachable node {tag}")


@dataclass(frozen=True)
class Expression:
    """A parsed expression: callable on a keyword environment of floats."""

    text: str
    variables: frozenset[str]
    _code: object

    def __call__(self, **env: float) -> float:
        missing = self.variables.difference(env)
        if missing:
            raise ExpressionError(
                f"expression {self.text!r} needs variables {sorted(missing)}"
            )
        try:
            value = eval(self._code, _EVAL_GLOBALS, {"_env": env})  # noqa: S307
        except (ValueError, OverflowError, ZeroDivisionError) as exc:
            raise DomainError(f"evaluating {self.text!r}: {exc}") from exc
        if isinstance(value, complex):
            raise DomainError(f"expression {self.text!r} produced a complex value")
        return float(value)


_EVAL_GLOBALS = {"__builtins__": {}}
_EVAL_GLOBALS.update({f"_fn_{name}": fn for name, fn in _FUNCTIONS.items()})


def parse_expression(text: str, allowed: Sequence[str] | None = None) -> Expression:
    """Parse expression text, optionally restricting its free variables."""
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("expression text must be a nonempty string")
    node = _Parser(text).parse()
    free: set[str] = set()
    _free_variables(node, free)
    if allowed is not None:
        extra = free.difference(allowed)
        if extra:
            raise ExpressionError(
                f"expression {text!r} uses variables {sorted(extra)}; allowed: {sorted(allowed)}"
            )
    code = compile(_emit(node), f"<expr {text!r}>", "eval")
    return Expression(text=text, variables=frozenset(free), _code=code)


def point_vars(prefix: str, point) -> dict[str, float]:
    """Environment entries ``{prefix}1..{prefix}d`` for a point's coordinates."""
    return {f"{prefix}{i + 1}": float(c) for i, c in enumerate(point)}
