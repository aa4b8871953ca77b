"""Value/first/second Wirtinger-derivative jets of arrays of expressions.

Derivative axes use the complexified coordinate basis of length ``2n``:
index ``a < n`` is the holomorphic derivative by ``z_{a+1}``, index
``n + a`` the anti-holomorphic one.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .expr import ZERO, Const, Expr, FiniteDifference, eval_expr, wirtinger_diff

SYMBOLIC = "symbolic"
FD = "fd"


def _eval_into(out, exprs, pts, params):
    for idx, e in np.ndenumerate(exprs):
        if isinstance(e, Const):
            if e.value != 0:
                out[(slice(None),) + idx] = e.value
            continue
        out[(slice(None),) + idx] = eval_expr(e, pts, params)


class ExprJets:
    """Evaluate an array of expressions together with their derivatives.

    In ``"symbolic"`` mode the derivative expressions are built once with
    :func:`wirtinger_diff` and cached.  In ``"fd"`` mode the expressions are
    treated as an opaque evaluator and differentiated with ``fd``.  A plain
    callable ``points -> array`` may be given instead of expressions, in which
    case only ``"fd"`` mode is possible.
    """

    def __init__(self, exprs, n: int, params: Mapping[str, float] | None = None,
                 mode: str = SYMBOLIC, fd: FiniteDifference | None = None,
                 shape: tuple | None = None):
        self.n = n
        self.params = dict(params or {})
        self.fd = fd or FiniteDifference()
        if callable(exprs) and not isinstance(exprs, (np.ndarray, Expr)):
            if mode != FD:
                raise ValueError("a numeric evaluator can only be differentiated in 'fd' mode")
            if shape is None:
                raise ValueError("shape is required for a numeric evaluator")
            self._func = exprs
            self.exprs = None
            self.shape = tuple(shape)
        else:
            arr = np.empty(np.shape(exprs), dtype=object)
            for idx in np.ndindex(arr.shape):
                e = np.asarray(exprs, dtype=object)[idx]
                arr[idx] = e if isinstance(e, Expr) else Const(complex(e))
            self.exprs = arr
            self.shape = arr.shape
            self._func = None
        if mode not in (SYMBOLIC, FD):
            raise ValueError(f"unknown derivative mode {mode!r}")
        self.mode = mode
        self._d1 = None
        self._d2 = None

    # symbolic derivative tables -------------------------------------------------

    def _first(self):
        if self._d1 is None:
            n = self.n
            d1 = np.empty((2 * n,) + self.shape, dtype=object)
            for a in range(2 * n):
                for idx in np.ndindex(self.shape):
                    d1[(a,) + idx] = wirtinger_diff(self.exprs[idx], a % n, barred=a >= n)
            self._d1 = d1
        return self._d1

    def _second(self):
        if self._d2 is None:
            n = self.n
            d1 = self._first()
            d2 = np.empty((2 * n, 2 * n) + self.shape, dtype=object)
            for a in range(2 * n):
                for b in range(a, 2 * n):
                    for idx in np.ndindex(self.shape):
                        first = d1[(b,) + idx]
                        e = ZERO if first == ZERO else wirtinger_diff(first, a % n, barred=a >= n)
                        d2[(a, b) + idx] = e
                        d2[(b, a) + idx] = e
            self._d2 = d2
        return self._d2

    # evaluation -----------------------------------------------------------------

    def value(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=complex))
        if self._func is not None:
            return np.asarray(self._func(pts), dtype=complex).reshape((len(pts),) + self.shape)
        out = np.zeros((len(pts),) + self.shape, dtype=complex)
        _eval_into(out, self.exprs, pts, self.params)
        return out

    def jet(self, pts, order: int = 1):
        """Return ``(value, d, dd)``; ``d`` has shape ``(N, 2n, *shape)`` and
        ``dd`` shape ``(N, 2n, 2n, *shape)`` (``None`` when ``order < 2``)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=complex))
        N, n = len(pts), self.n
        val = self.value(pts)
        if order < 1:
            return val, None, None
        if self.mode == SYMBOLIC:
            d = np.zeros((N, 2 * n) + self.shape, dtype=complex)
            _eval_into(d, self._first(), pts, self.params)
            dd = None
            if order >= 2:
                dd = np.zeros((N, 2 * n, 2 * n) + self.shape, dtype=complex)
                _eval_into(dd, self._second(), pts, self.params)
            return val, d, dd
        f = self.value
        hol, anti = self.fd.gradient(f, pts)
        d = np.stack(hol + anti, axis=1)
        dd = None
        if order >= 2:
            hh, hb, bb = self.fd.hessian(f, pts)
            dd = np.empty((N, 2 * n, 2 * n) + self.shape, dtype=complex)
            for a in range(n):
                for b in range(n):
                    dd[:, a, b] = hh[a][b]
                    dd[:, a, n + b] = hb[a][b]
                    dd[:, n + b, a] = hb[a][b]
                    dd[:, n + a, n + b] = bb[a][b]
        return val, d, dd


def conj_swap(d: np.ndarray, n: int, axes) -> np.ndarray:
    """Conjugate a derivative array and exchange holomorphic/anti-holomorphic
    halves along ``axes``: the derivative table of ``conj(f)`` from that of ``f``."""
    out = np.conj(d)
    for ax in np.atleast_1d(axes):
        out = np.roll(out, n, axis=int(ax))
    return out


def callable_jets(func: Callable, n: int, shape, fd: FiniteDifference | None = None) -> ExprJets:
    return ExprJets(func, n, mode=FD, fd=fd, shape=shape)
