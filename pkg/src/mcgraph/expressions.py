"""Compile scalar expressions in x, y into vectorized callables with exact derivatives.

Expressions are sympy syntax over the free symbols x and y only.  Derivatives
up to second order are produced symbolically once and lambdified with the
numpy backend, so curvature data and boundary data written as strings get
analytic gradients instead of finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy as sp

_X, _Y = sp.symbols("x y", real=True)


class ExpressionError(ValueError):
    pass


def _vectorize(fn: Callable, like_scalar: bool) -> Callable:
    """Wrap a lambdified function so it always returns an ndarray of the input shape."""

    def wrapped(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = fn(x, y)
        out = np.asarray(out, dtype=float)
        if out.shape != x.shape:
            out = np.broadcast_to(out, x.shape).copy()
        return out

    return wrapped


@dataclass(frozen=True)
class Expr2D:
    """A C^2 scalar function of (x, y) with analytic first and second partials."""

    text: str
    f: Callable
    fx: Callable
    fy: Callable
    fxx: Callable
    fxy: Callable
    fyy: Callable

    def __call__(self, x, y):
        return self.f(x, y)

    def grad(self, x, y):
        return np.stack([self.fx(x, y), self.fy(x, y)], axis=-1)

    def hess(self, x, y):
        xx, xy, yy = self.fxx(x, y), self.fxy(x, y), self.fyy(x, y)
        h = np.empty(xx.shape + (2, 2), dtype=float)
        h[..., 0, 0] = xx
        h[..., 0, 1] = xy
        h[..., 1, 0] = xy
        h[..., 1, 1] = yy
        return h


def compile_expr(text: str) -> Expr2D:
    """Parse `text` as a function of x and y; reject any other free symbol."""
    try:
        expr = sp.sympify(text, locals={"x": _X, "y": _Y})
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise ExpressionError(f"cannot parse expression {text!r}: {exc}") from None
    extra = expr.free_symbols - {_X, _Y}
    if extra:
        names = ", ".join(sorted(str(s) for s in extra))
        raise ExpressionError(f"expression {text!r} uses unknown symbols: {names}")

    parts = [expr]
    parts.append(sp.diff(expr, _X))
    parts.append(sp.diff(expr, _Y))
    parts.append(sp.diff(expr, _X, _X))
    parts.append(sp.diff(expr, _X, _Y))
    parts.append(sp.diff(expr, _Y, _Y))
    fns = [_vectorize(sp.lambdify((_X, _Y), p, modules="numpy"), p.is_number) for p in parts]
    return Expr2D(text, *fns)
