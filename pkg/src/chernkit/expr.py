"""Complex coordinate expressions with Wirtinger differentiation.

Expressions are immutable trees over complex literals, coordinates ``z1..zn``,
named real parameters, the arithmetic operators, integer powers and the
functions ``exp``, ``log``, ``sin``, ``cos``, ``conj``, ``abs2``
(modulus squared), ``re`` and ``im``.  The anti-holomorphic coordinate
``conj(zk)`` is not a separate symbol: conjugation is an ordinary node, and
:func:`wirtinger_diff` treats ``zk`` and ``conj(zk)`` as independent.

Grammar (whitespace insignificant)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := atom (("^" | "**") ["-"] INT)?
    atom    := NUMBER | "i" | "pi" | IDENT | FUNC "(" expr ")" | "(" expr ")"
    IDENT   := "z" INT          (coordinate, 1-based)
             | NAME             (real parameter)

Evaluation is vectorised: ``point`` may carry any leading batch shape, the
last axis being the chart dimension.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

__all__ = [
    "Expr", "Const", "Coord", "Param", "Conj", "Add", "Mul", "Div", "Pow", "Func",
    "ExprSyntaxError", "ExprDomainError", "UnboundParameterError",
    "parse_expr", "eval_expr", "wirtinger_diff", "to_text", "const", "coord",
    "conj", "free_coords", "FiniteDifference",
]

FUNCTIONS = ("exp", "log", "sin", "cos", "conj", "abs2", "re", "im")


class ExprSyntaxError(ValueError):
    """Malformed expression text; ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}" + (f" in {text!r}" if text else ""))


class ExprDomainError(ArithmeticError):
    """Evaluation left the domain of a function (log of zero, division by zero)."""

    def __init__(self, message: str, point):
        self.point = point
        super().__init__(f"{message} at point {point}")


class UnboundParameterError(KeyError):
    pass


# ---------------------------------------------------------------------------
# nodes


class Expr:
    """Base class of expression nodes.  Nodes are immutable."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return add(self, neg(_wrap(other)))

    def __rsub__(self, other):
        return add(_wrap(other), neg(self))

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __rtruediv__(self, other):
        return div(_wrap(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, k: int):
        return power(self, k)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, slots=True, eq=True)
class Const(Expr):
    value: complex

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True, slots=True)
class Coord(Expr):
    index: int  # 0-based

    def __repr__(self):
        return f"Coord(z{self.index + 1})"


@dataclass(frozen=True, slots=True)
class Param(Expr):
    name: str


@dataclass(frozen=True, slots=True)
class Conj(Expr):
    arg: Expr


@dataclass(frozen=True, slots=True)
class Add(Expr):
    args: tuple


@dataclass(frozen=True, slots=True)
class Mul(Expr):
    args: tuple


@dataclass(frozen=True, slots=True)
class Div(Expr):
    num: Expr
    den: Expr


@dataclass(frozen=True, slots=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True, slots=True)
class Func(Expr):
    name: str
    arg: Expr


ZERO = Const(0j)
ONE = Const(1 + 0j)


def _wrap(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, complex, np.number)):
        return Const(complex(x))
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


def const(x) -> Const:
    return Const(complex(x))


def coord(k: int) -> Coord:
    """Coordinate ``z_k`` with a 1-based index, as written in expression text."""
    if k < 1:
        raise ValueError("coordinate indices start at 1")
    return Coord(k - 1)


def _is_zero(e):
    return isinstance(e, Const) and e.value == 0


def _is_one(e):
    return isinstance(e, Const) and e.value == 1


# Smart constructors: constant folding and zero/one elimination only.

def add(*terms: Expr) -> Expr:
    flat = []
    c = 0j
    for t in terms:
        parts = t.args if isinstance(t, Add) else (t,)
        for p in parts:
            if isinstance(p, Const):
                c += p.value
            else:
                flat.append(p)
    if c != 0 or not flat:
        flat.append(Const(c))
    return flat[0] if len(flat) == 1 else Add(tuple(flat))


def mul(*factors: Expr) -> Expr:
    flat = []
    c = 1 + 0j
    for f in factors:
        parts = f.args if isinstance(f, Mul) else (f,)
        for p in parts:
            if isinstance(p, Const):
                c *= p.value
            else:
                flat.append(p)
    if c == 0:
        return ZERO
    if c != 1 or not flat:
        flat.insert(0, Const(c))
    return flat[0] if len(flat) == 1 else Mul(tuple(flat))


def neg(e: Expr) -> Expr:
    return mul(Const(-1 + 0j), e)


def div(a: Expr, b: Expr) -> Expr:
    if _is_zero(b):
        raise ZeroDivisionError("division by the zero expression")
    if _is_zero(a):
        return ZERO
    if _is_one(b):
        return a
    if isinstance(b, Const):
        return mul(Const(1 / b.value), a)
    return Div(a, b)


def power(base: Expr, k: int) -> Expr:
    k = int(k)
    if k == 0:
        return ONE
    if k == 1:
        return base
    if isinstance(base, Const):
        return Const(base.value ** k)
    return Pow(base, k)


def conj(e: Expr) -> Expr:
    if isinstance(e, Conj):
        return e.arg
    if isinstance(e, Const):
        return Const(e.value.conjugate())
    if isinstance(e, Param):
        return e  # parameters are real
    return Conj(e)


def func(name: str, arg: Expr) -> Expr:
    if name == "conj":
        return conj(arg)
    if name == "abs2":
        if isinstance(arg, Const):
            return Const(complex(abs(arg.value) ** 2))
        return Func("abs2", arg)
    if name == "re":
        return mul(Const(0.5), add(arg, conj(arg)))
    if name == "im":
        return mul(Const(-0.5j), add(arg, neg(conj(arg))))
    if isinstance(arg, Const):
        return Const(_CMATH[name](arg.value))
    return Func(name, arg)


_CMATH = {
    "exp": lambda z: complex(np.exp(z)),
    "log": lambda z: complex(np.log(z)),
    "sin": lambda z: complex(np.sin(z)),
    "cos": lambda z: complex(np.cos(z)),
}


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            off = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[off]!r}", _byte_offset(text, off), text)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


def _byte_offset(text: str, char_offset: int) -> int:
    return len(text[:char_offset].encode("utf-8"))


class _Parser:
    def __init__(self, text: str, n: int, params):
        self.text = text
        self.n = n
        self.params = None if params is None else set(params)
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ExprSyntaxError(msg, _byte_offset(self.text, tok[2]), self.text)

    def expect(self, op):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            self.error(f"expected {op!r}", tok)

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            self.error("unexpected token " + repr(self.peek()[1]))
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else add(e, neg(rhs))
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op = self.take()
            rhs = self.unary()
            if op[1] == "*":
                e = mul(e, rhs)
            else:
                if _is_zero(rhs):
                    self.error("division by literal zero", op)
                e = div(e, rhs)
        return e

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.take()
            e = self.unary()
            return neg(e) if tok[1] == "-" else e
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("^", "**"):
            self.take()
            sign = 1
            if self.peek()[0] == "op" and self.peek()[1] == "-":
                self.take()
                sign = -1
            t = self.take()
            if t[0] != "num" or not t[1].isdigit():
                self.error("exponent must be an integer literal", t)
            k = sign * int(t[1])
            if k < 0:
                if _is_zero(base):
                    self.error("negative power of zero", t)
                return div(ONE, power(base, -k))
            return power(base, k)
        return base

    def atom(self):
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return Const(complex(float(val)))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if val not in FUNCTIONS:
                    self.error(f"unknown function {val!r}", tok)
                self.take()
                arg = self.expr()
                self.expect(")")
                return func(val, arg)
            if val in ("i", "I"):
                return Const(1j)
            if val == "pi":
                return Const(complex(math.pi))
            m = re.fullmatch(r"z(\d+)", val)
            if m:
                k = int(m.group(1))
                if not 1 <= k <= self.n:
                    self.error(f"coordinate {val} out of range 1..{self.n}", tok)
                return Coord(k - 1)
            if val in FUNCTIONS:
                self.error(f"function {val!r} needs an argument", tok)
            if self.params is not None and val not in self.params:
                self.error(f"unknown symbol {val!r}", tok)
            return Param(val)
        if kind == "end":
            self.error("unexpected end of expression", tok)
        self.error(f"unexpected token {val!r}", tok)


def parse_expr(text: str, n: int, params: Iterable[str] | None = None) -> Expr:
    """Parse ``text`` into an expression on an ``n``-dimensional chart.

    ``params`` restricts the admissible parameter names; ``None`` accepts any
    identifier that is not a coordinate or function as a real parameter.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text if isinstance(text, str) else "")
    if n < 1:
        raise ValueError("chart dimension must be >= 1")
    return _Parser(text, n, params).parse()


# ---------------------------------------------------------------------------
# printing

_PREC = {Add: 1, Mul: 2, Div: 2, Pow: 4}


def _const_text(c: complex) -> str:
    re_, im_ = c.real, c.imag
    if im_ == 0:
        s = repr(float(re_))
        return s if re_ >= 0 else f"({s})"
    if re_ == 0:
        return f"({float(im_)!r}*i)"
    return f"({float(re_)!r} + {float(im_)!r}*i)"


def to_text(e: Expr) -> str:
    """Render ``e`` in the parseable expression syntax."""
    return _text(e, 0)


def _text(e, ctx):
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, Coord):
        return f"z{e.index + 1}"
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Conj):
        return f"conj({_text(e.arg, 0)})"
    if isinstance(e, Func):
        return f"{e.name}({_text(e.arg, 0)})"
    if isinstance(e, Add):
        s = " + ".join(_text(a, 1) for a in e.args)
        return f"({s})" if ctx > 1 else s
    if isinstance(e, Mul):
        s = "*".join(_text(a, 2) for a in e.args)
        return f"({s})" if ctx > 2 else s
    if isinstance(e, Div):
        s = f"{_text(e.num, 2)}/{_text(e.den, 3)}"
        return f"({s})" if ctx > 2 else s
    if isinstance(e, Pow):
        s = f"{_text(e.base, 5)}^{e.exponent}"
        return f"({s})" if ctx > 4 else s
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# evaluation


def eval_expr(e: Expr, point, params: Mapping[str, float] | None = None):
    """Evaluate ``e`` at ``point`` (shape ``(..., n)``), returning complex values.

    A single point gives a Python ``complex``; a batch gives an array with the
    batch shape.
    """
    pt = np.asarray(point, dtype=complex)
    params = params or {}
    cache: dict[int, object] = {}
    val = _eval(e, pt, params, cache)
    shape = pt.shape[:-1]
    if np.ndim(val) == 0:
        val = complex(val)
        return val if not shape else np.full(shape, val, dtype=complex)
    return np.broadcast_to(val, shape).astype(complex, copy=False)


def _eval(e, pt, params, cache):
    key = id(e)
    hit = cache.get(key)
    if hit is not None:
        return hit
    if isinstance(e, Const):
        v = e.value
    elif isinstance(e, Coord):
        if e.index >= pt.shape[-1]:
            raise IndexError(f"z{e.index + 1} is outside the {pt.shape[-1]}-dimensional point")
        v = pt[..., e.index]
    elif isinstance(e, Param):
        try:
            v = complex(float(params[e.name]))
        except KeyError:
            raise UnboundParameterError(f"unbound parameter {e.name!r}") from None
    elif isinstance(e, Conj):
        v = np.conj(_eval(e.arg, pt, params, cache))
    elif isinstance(e, Add):
        v = _eval(e.args[0], pt, params, cache)
        for a in e.args[1:]:
            v = v + _eval(a, pt, params, cache)
    elif isinstance(e, Mul):
        v = _eval(e.args[0], pt, params, cache)
        for a in e.args[1:]:
            v = v * _eval(a, pt, params, cache)
    elif isinstance(e, Div):
        den = _eval(e.den, pt, params, cache)
        if np.any(den == 0):
            raise ExprDomainError("division by zero", _first_bad(pt, den == 0))
        v = _eval(e.num, pt, params, cache) / den
    elif isinstance(e, Pow):
        b = _eval(e.base, pt, params, cache)
        v = b ** e.exponent if e.exponent >= 0 else 1 / b ** (-e.exponent)
    elif isinstance(e, Func):
        a = _eval(e.arg, pt, params, cache)
        if e.name == "exp":
            v = np.exp(a)
        elif e.name == "log":
            if np.any(a == 0):
                raise ExprDomainError("log of zero", _first_bad(pt, a == 0))
            v = np.log(a)
        elif e.name == "sin":
            v = np.sin(a)
        elif e.name == "cos":
            v = np.cos(a)
        elif e.name == "abs2":
            v = (a * np.conj(a)).real + 0j
        else:
            raise ValueError(f"unknown function {e.name}")
    else:
        raise TypeError(type(e))
    cache[key] = v
    return v


def _first_bad(pt, mask):
    mask = np.broadcast_to(mask, pt.shape[:-1])
    if pt.ndim == 1:
        return pt.tolist()
    idx = np.argwhere(mask)[0]
    return pt[tuple(idx)].tolist()


# ---------------------------------------------------------------------------
# differentiation


def wirtinger_diff(e: Expr, k: int, barred: bool = False) -> Expr:
    """Symbolic derivative by ``z_k`` (or ``conj(z_k)`` if ``barred``), k 0-based."""
    return _diff(e, k, bool(barred), {})


def _diff(e, k, barred, memo):
    key = (id(e), barred)
    if key in memo:
        return memo[key][1]
    if isinstance(e, (Const, Param)):
        d = ZERO
    elif isinstance(e, Coord):
        d = ONE if (e.index == k and not barred) else ZERO
    elif isinstance(e, Conj):
        d = conj(_diff(e.arg, k, not barred, memo))
    elif isinstance(e, Add):
        d = add(*[_diff(a, k, barred, memo) for a in e.args])
    elif isinstance(e, Mul):
        terms = []
        for i, a in enumerate(e.args):
            da = _diff(a, k, barred, memo)
            if not _is_zero(da):
                terms.append(mul(*e.args[:i], da, *e.args[i + 1:]))
        d = add(*terms) if terms else ZERO
    elif isinstance(e, Div):
        dn = _diff(e.num, k, barred, memo)
        dd = _diff(e.den, k, barred, memo)
        d = ZERO
        if not _is_zero(dn):
            d = div(dn, e.den)
        if not _is_zero(dd):
            d = add(d, neg(div(mul(e.num, dd), power(e.den, 2))))
    elif isinstance(e, Pow):
        db = _diff(e.base, k, barred, memo)
        d = ZERO if _is_zero(db) else mul(Const(e.exponent), power(e.base, e.exponent - 1), db)
    elif isinstance(e, Func):
        da = _diff(e.arg, k, barred, memo)
        if e.name == "abs2":
            dc = _diff(conj(e.arg), k, barred, memo)
            d = add(mul(da, conj(e.arg)), mul(e.arg, dc))
        elif _is_zero(da):
            d = ZERO
        elif e.name == "exp":
            d = mul(e, da)
        elif e.name == "log":
            d = div(da, e.arg)
        elif e.name == "sin":
            d = mul(Func("cos", e.arg), da)
        elif e.name == "cos":
            d = neg(mul(Func("sin", e.arg), da))
        else:
            raise ValueError(e.name)
    else:
        raise TypeError(type(e))
    memo[key] = (e, d)  # keep e alive so its id stays unique
    return d


def free_coords(e: Expr) -> set[int]:
    """0-based indices of the coordinates that ``e`` depends on (either ``zk`` or ``conj(zk)``)."""
    out: set[int] = set()
    stack = [e]
    seen = set()
    while stack:
        x = stack.pop()
        if id(x) in seen:
            continue
        seen.add(id(x))
        if isinstance(x, Coord):
            out.add(x.index)
        elif isinstance(x, (Conj, Func)):
            stack.append(x.arg)
        elif isinstance(x, (Add, Mul)):
            stack.extend(x.args)
        elif isinstance(x, Div):
            stack += [x.num, x.den]
        elif isinstance(x, Pow):
            stack.append(x.base)
    return out


def is_polynomial(e: Expr) -> bool:
    """True if ``e`` uses only +, *, nonnegative powers and conjugation."""
    if isinstance(e, (Const, Coord, Param)):
        return True
    if isinstance(e, Conj):
        return is_polynomial(e.arg)
    if isinstance(e, Func):
        return e.name == "abs2" and is_polynomial(e.arg)
    if isinstance(e, (Add, Mul)):
        return all(is_polynomial(a) for a in e.args)
    if isinstance(e, Pow):
        return e.exponent >= 0 and is_polynomial(e.base)
    return False


# ---------------------------------------------------------------------------
# finite differences


@dataclass(frozen=True)
class FiniteDifference:
    """Central-difference Wirtinger derivatives of a numeric evaluator.

    ``step`` is used for first derivatives and ``step2`` for second ones,
    both in units of the coordinate scale.  With ``richardson`` one level of
    Richardson extrapolation (steps h and h/2) removes the leading error term.
    """

    step: float = 1e-5
    step2: float = 1e-3
    richardson: bool = True

    def _real_grad(self, f: Callable, pt, h):
        n = pt.shape[-1]
        out = []
        for j in range(2 * n):
            e = np.zeros(n, dtype=complex)
            e[j // 2] = 1.0 if j % 2 == 0 else 1j

            def d(hh):
                return (f(pt + hh * e) - f(pt - hh * e)) / (2 * hh)

            if self.richardson:
                out.append((4 * d(h / 2) - d(h)) / 3)
            else:
                out.append(d(h))
        return out

    def _real_hess(self, f: Callable, pt, h):
        n = pt.shape[-1]
        m = 2 * n
        units = []
        for j in range(m):
            e = np.zeros(n, dtype=complex)
            e[j // 2] = 1.0 if j % 2 == 0 else 1j
            units.append(e)
        f0 = None
        hess = [[None] * m for _ in range(m)]
        for a in range(m):
            for b in range(a, m):
                ea, eb = units[a], units[b]

                def d2(hh, ea=ea, eb=eb, same=(a == b)):
                    nonlocal f0
                    if same:
                        if f0 is None:
                            f0 = f(pt)
                        return (f(pt + hh * ea) - 2 * f0 + f(pt - hh * ea)) / hh ** 2
                    return (f(pt + hh * (ea + eb)) - f(pt + hh * (ea - eb))
                            - f(pt - hh * (ea - eb)) + f(pt - hh * (ea + eb))) / (4 * hh ** 2)

                v = (4 * d2(h / 2) - d2(h)) / 3 if self.richardson else d2(h)
                hess[a][b] = hess[b][a] = v
        return hess

    def gradient(self, f: Callable, point):
        """Return ``(d, dbar)``: lists over k of the Wirtinger derivatives of ``f``."""
        pt = np.asarray(point, dtype=complex)
        g = self._real_grad(f, pt, self.step)
        n = pt.shape[-1]
        d = [0.5 * (g[2 * k] - 1j * g[2 * k + 1]) for k in range(n)]
        db = [0.5 * (g[2 * k] + 1j * g[2 * k + 1]) for k in range(n)]
        return d, db

    def hessian(self, f: Callable, point):
        """Return ``(dd, ddbar, dbdb)`` with ``dd[a][b] = d_a d_b f``,
        ``ddbar[a][b] = d_a dbar_b f`` and ``dbdb[a][b] = dbar_a dbar_b f``."""
        pt = np.asarray(point, dtype=complex)
        n = pt.shape[-1]
        H = self._real_hess(f, pt, self.step2)

        def x(k):
            return 2 * k

        def y(k):
            return 2 * k + 1

        dd = [[None] * n for _ in range(n)]
        ddb = [[None] * n for _ in range(n)]
        dbdb = [[None] * n for _ in range(n)]
        for a in range(n):
            for b in range(n):
                xx, xy, yx, yy = H[x(a)][x(b)], H[x(a)][y(b)], H[y(a)][x(b)], H[y(a)][y(b)]
                # (dx_a -+ i dy_a)(dx_b -+ i dy_b) / 4
                dd[a][b] = 0.25 * (xx - 1j * xy - 1j * yx - yy)
                ddb[a][b] = 0.25 * (xx + 1j * xy - 1j * yx + yy)
                dbdb[a][b] = 0.25 * (xx + 1j * xy + 1j * yx - yy)
        return dd, ddb, dbdb
