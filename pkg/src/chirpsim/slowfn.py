"""Closed algebra of smooth real functions on the reduced-time interval [0, 1].

Functions are immutable expression trees over {constant, s, sin, cos, sqrt,
+, *, /} with exact symbolic differentiation.  Division and sqrt nodes carry a
positive lower bound on the denominator / radicand over [0, 1], certified at
construction by dense sampling plus a Lipschitz bound from the derivative.
These trees are the coefficient ring of the operator-averaging engine, so
repeated differentiation of quotients must stay exact (no sampled grids).
"""
from __future__ import annotations

import sys

import numpy as np

# Coefficient trees produced by the averaging engine get deep through repeated
# merging; evaluation is iterative, but derivative/repr construction recurse.
if sys.getrecursionlimit() < 100_000:
    sys.setrecursionlimit(100_000)

CERT_GRID = 10_001     # dense grid for nonvanishing certificates
NORM_GRID = 2_049      # default grid for sup-norm / min-abs estimation
_DOMAIN_SLACK = 1e-9   # tolerated float spill outside [0, 1]


class DomainError(ValueError):
    pass


class CertificateError(ValueError):
    """Nonvanishing / positivity certificate could not be established."""


def _check_domain(s):
    s = np.asarray(s, dtype=float)
    if s.size and (s.min() < -_DOMAIN_SLACK or s.max() > 1.0 + _DOMAIN_SLACK):
        raise DomainError(f"argument outside [0,1]: range [{s.min()}, {s.max()}]")
    return np.clip(s, 0.0, 1.0)


class SlowFn:
    """Base node. Immutable; derivative cache fill is idempotent."""

    __slots__ = ("_deriv",)

    children: tuple = ()

    def __init__(self):
        self._deriv = None

    # -- evaluation (iterative post-order, memoized on shared subtrees) --

    def eval(self, s):
        scalar = np.isscalar(s) or getattr(s, "ndim", 1) == 0
        sv = _check_domain(s)
        memo = {}
        stack = [self]
        while stack:
            node = stack[-1]
            nid = id(node)
            if nid in memo:
                stack.pop()
                continue
            pending = [c for c in node.children if id(c) not in memo]
            if pending:
                stack.extend(pending)
                continue
            memo[nid] = node._compute(sv, [memo[id(c)] for c in node.children])
            stack.pop()
        out = memo[id(self)]
        out = np.broadcast_to(out, sv.shape).astype(float, copy=False)
        return float(out) if scalar else out.copy()

    __call__ = eval

    # -- differentiation --

    def derivative(self) -> "SlowFn":
        d = self._deriv
        if d is None:
            d = self._differentiate()
            self._deriv = d
        return d

    def _differentiate(self) -> "SlowFn":
        raise NotImplementedError

    # -- norms --

    def _grid(self, n):
        return self.eval(np.linspace(0.0, 1.0, n))

    def inf_norm(self, n=NORM_GRID, refine=True) -> float:
        """sup of |f| over [0,1]: grid scan plus local Brent refinement."""
        vals = np.abs(self._grid(n))
        best = float(vals.max())
        if refine:
            best = max(best, self._refine_extremum(int(vals.argmax()), n, sign=-1.0))
        return best

    def min_abs(self, n=NORM_GRID, refine=True) -> float:
        vals = np.abs(self._grid(n))
        best = float(vals.min())
        if refine:
            best = min(best, self._refine_extremum(int(vals.argmin()), n, sign=1.0))
        return best

    def _refine_extremum(self, idx, n, sign) -> float:
        from scipy.optimize import minimize_scalar

        h = 1.0 / (n - 1)
        lo = max(0.0, idx * h - h)
        hi = min(1.0, idx * h + h)
        res = minimize_scalar(lambda x: sign * abs(self.eval(x)),
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13})
        return sign * res.fun

    def certified_min_abs(self, n=CERT_GRID) -> float:
        """Sound positive lower bound on |f| over [0,1], or raise.

        grid minimum minus a Lipschitz correction L*h/2, with L estimated from
        the derivative's grid sup (adequate for the smooth trigonometric
        schemes in scope).
        """
        grid_min = self.min_abs(n=n)
        lip = self.derivative().inf_norm(n=n, refine=False)
        bound = grid_min - 0.5 * lip / (n - 1)
        if bound <= 0.0:
            raise CertificateError(
                f"nonvanishing certificate failed: grid min |f| = {grid_min:.3e}, "
                f"Lipschitz slack {0.5 * lip / (n - 1):.3e}")
        return bound

    # -- operators --

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, mul(-1.0, other))

    def __rsub__(self, other):
        return add(other, mul(-1.0, self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(-1.0, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)


class Const(SlowFn):
    __slots__ = ("value",)

    def __init__(self, value):
        super().__init__()
        self.value = float(value)

    def _compute(self, s, kids):
        return np.full_like(s, self.value)

    def _differentiate(self):
        return ZERO

    def __repr__(self):
        return f"{self.value:g}"


class Var(SlowFn):
    """The reduced-time variable s in [0, 1]."""

    __slots__ = ()

    def _compute(self, s, kids):
        return s

    def _differentiate(self):
        return ONE

    def __repr__(self):
        return "s"


class Sin(SlowFn):
    __slots__ = ("children",)

    def __init__(self, f):
        super().__init__()
        self.children = (f,)

    def _compute(self, s, kids):
        return np.sin(kids[0])

    def _differentiate(self):
        f = self.children[0]
        return mul(Cos(f), f.derivative())

    def __repr__(self):
        return f"sin({self.children[0]!r})"


class Cos(SlowFn):
    __slots__ = ("children",)

    def __init__(self, f):
        super().__init__()
        self.children = (f,)

    def _compute(self, s, kids):
        return np.cos(kids[0])

    def _differentiate(self):
        f = self.children[0]
        return mul(Const(-1.0), mul(Sin(f), f.derivative()))

    def __repr__(self):
        return f"cos({self.children[0]!r})"


class Sqrt(SlowFn):
    """sqrt of a positive function; positivity certified at construction."""

    __slots__ = ("children", "cert")

    def __init__(self, f, cert=None):
        super().__init__()
        self.children = (f,)
        if cert is None:
            cert = f.certified_min_abs()
            if f.eval(0.5) < 0:
                raise CertificateError("sqrt of a negative function")
        self.cert = float(cert)

    def _compute(self, s, kids):
        return np.sqrt(np.maximum(kids[0], 0.0))

    def _differentiate(self):
        f = self.children[0]
        # f'/(2 sqrt f); the denominator certificate follows from this node's
        return Div(f.derivative(), mul(2.0, self), cert=2.0 * np.sqrt(self.cert))

    def __repr__(self):
        return f"sqrt({self.children[0]!r})"


class Add(SlowFn):
    __slots__ = ("children",)

    def __init__(self, f, g):
        super().__init__()
        self.children = (f, g)

    def _compute(self, s, kids):
        return kids[0] + kids[1]

    def _differentiate(self):
        f, g = self.children
        return add(f.derivative(), g.derivative())

    def __repr__(self):
        return f"({self.children[0]!r} + {self.children[1]!r})"


class Mul(SlowFn):
    __slots__ = ("children",)

    def __init__(self, f, g):
        super().__init__()
        self.children = (f, g)

    def _compute(self, s, kids):
        return kids[0] * kids[1]

    def _differentiate(self):
        f, g = self.children
        return add(mul(f.derivative(), g), mul(f, g.derivative()))

    def __repr__(self):
        return f"({self.children[0]!r} * {self.children[1]!r})"


class Div(SlowFn):
    """Quotient with a certified positive lower bound on |denominator|."""

    __slots__ = ("children", "cert")

    def __init__(self, num, den, cert=None):
        super().__init__()
        num = as_slowfn(num)
        den = as_slowfn(den)
        if cert is None:
            cert = den.certified_min_abs()
        self.children = (num, den)
        self.cert = float(cert)

    def _compute(self, s, kids):
        return kids[0] / kids[1]

    def _differentiate(self):
        f, g = self.children
        num = add(mul(f.derivative(), g), mul(Const(-1.0), mul(f, g.derivative())))
        return Div(num, Mul(g, g), cert=self.cert ** 2)

    def __repr__(self):
        return f"({self.children[0]!r} / {self.children[1]!r})"


# -- constructors with light constant folding --

ZERO = Const(0.0)
ONE = Const(1.0)
S = Var()


def as_slowfn(x) -> SlowFn:
    if isinstance(x, SlowFn):
        return x
    return Const(x)


def is_zero(f) -> bool:
    return isinstance(f, Const) and f.value == 0.0


def add(f, g) -> SlowFn:
    f, g = as_slowfn(f), as_slowfn(g)
    if isinstance(f, Const) and isinstance(g, Const):
        return Const(f.value + g.value)
    if is_zero(f):
        return g
    if is_zero(g):
        return f
    return Add(f, g)


def mul(f, g) -> SlowFn:
    f, g = as_slowfn(f), as_slowfn(g)
    if isinstance(f, Const) and isinstance(g, Const):
        return Const(f.value * g.value)
    if is_zero(f) or is_zero(g):
        return ZERO
    if isinstance(f, Const) and f.value == 1.0:
        return g
    if isinstance(g, Const) and g.value == 1.0:
        return f
    # fold nested constant factors so scalar series coefficients stay flat
    if isinstance(f, Const) and isinstance(g, Mul) and isinstance(g.children[0], Const):
        return Mul(Const(f.value * g.children[0].value), g.children[1])
    return Mul(f, g)


def div(f, g, cert=None) -> SlowFn:
    f, g = as_slowfn(f), as_slowfn(g)
    if isinstance(g, Const):
        if g.value == 0.0:
            raise CertificateError("division by the zero constant")
        return mul(f, 1.0 / g.value)
    if is_zero(f):
        return ZERO
    return Div(f, g, cert=cert)


def sqrt(f, cert=None) -> SlowFn:
    f = as_slowfn(f)
    if isinstance(f, Const):
        return Const(np.sqrt(f.value))
    return Sqrt(f, cert=cert)


def sin(f) -> SlowFn:
    f = as_slowfn(f)
    if isinstance(f, Const):
        return Const(np.sin(f.value))
    return Sin(f)


def cos(f) -> SlowFn:
    f = as_slowfn(f)
    if isinstance(f, Const):
        return Const(np.cos(f.value))
    return Cos(f)


def balanced_sum(fs) -> SlowFn:
    """Sum a list of SlowFns with a balanced tree (keeps depth logarithmic)."""
    fs = [as_slowfn(f) for f in fs if not is_zero(as_slowfn(f))]
    if not fs:
        return ZERO
    while len(fs) > 1:
        nxt = [add(fs[i], fs[i + 1]) for i in range(0, len(fs) - 1, 2)]
        if len(fs) % 2:
            nxt.append(fs[-1])
        fs = nxt
    return fs[0]


# -- flat operation aliases matching the module contract --

def sf_eval(f: SlowFn, s):
    return f.eval(s)


def sf_derivative(f: SlowFn) -> SlowFn:
    return f.derivative()


def sf_add(f, g) -> SlowFn:
    return add(f, g)


def sf_mul(f, g) -> SlowFn:
    return mul(f, g)


def sf_div(f, g) -> SlowFn:
    return div(f, g)


def sf_inf_norm(f: SlowFn) -> float:
    return f.inf_norm()


def sf_min_abs(f: SlowFn) -> float:
    return f.min_abs()
