"""Positive conformal factors u on (regions of) R^n.

Every field answers ``jet(x)`` with the value, gradient and Hessian at a
point, and ``values(points)`` with vectorized values.  Positivity is enforced
on the public entry points only, so non-positive fields can still serve as
perturbation directions inside a ``LinearCombination``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as _expr
from .errors import DomainError
from .jet import Jet, compose, norm_sq

EPS_SING = 1e-9


@dataclass(frozen=True)
class Domain:
    """Where a field may be queried.

    ``kind`` is ``"whole"`` (R^n), ``"punctured"`` (R^n minus ``singular``
    points, with exclusion radius ``eps``) or ``"ball"`` (open ball of
    ``radius`` around ``center``).
    """

    kind: str = "whole"
    singular: tuple = ()
    eps: float = EPS_SING
    center: tuple | None = None
    radius: float | None = None

    def check(self, pts: np.ndarray) -> None:
        pts = np.atleast_2d(pts)
        if self.kind == "punctured":
            for s in self.singular:
                d = np.linalg.norm(pts - np.asarray(s), axis=1)
                if np.any(d <= self.eps):
                    raise DomainError(f"point within {self.eps:g} of singular point {tuple(s)}")
        elif self.kind == "ball":
            d = np.linalg.norm(pts - np.asarray(self.center), axis=1)
            if np.any(d >= self.radius):
                raise DomainError(f"point outside the open ball B_{self.radius:g}({tuple(self.center)})")


class ScalarField:
    """Base class; subclasses implement ``_jet`` and optionally ``_values``."""

    n: int
    domain: Domain = Domain()

    def _jet(self, x: np.ndarray) -> Jet:
        raise NotImplementedError

    def _values(self, pts: np.ndarray) -> np.ndarray:
        return np.array([self._jet(p).val for p in pts])

    def raw_jet(self, x) -> Jet:
        x = self._point(x)
        self.domain.check(x)
        return self._jet(x)

    def raw_values(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if pts.shape[1] != self.n:
            raise DomainError(f"points have dimension {pts.shape[1]}, field has {self.n}")
        self.domain.check(pts)
        return np.asarray(self._values(pts), dtype=float)

    def jet(self, x) -> Jet:
        j = self.raw_jet(x)
        if not j.val > 0.0:
            raise DomainError(f"field value {j.val!r} is not positive at {tuple(np.asarray(x, float))}")
        return j

    def values(self, pts) -> np.ndarray:
        v = self.raw_values(pts)
        if not np.all(v > 0.0):
            i = int(np.argmin(v))
            raise DomainError(f"field value {v[i]!r} is not positive at {tuple(np.atleast_2d(pts)[i])}")
        return v

    def value(self, x) -> float:
        return self.jet(x).val

    def gradient(self, x) -> np.ndarray:
        return self.jet(x).grad

    def hessian(self, x) -> np.ndarray:
        return self.jet(x).hess

    def __call__(self, x) -> float:
        return float(self.values(np.atleast_2d(x))[0])

    def _point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.n:
            raise DomainError(f"point has dimension {x.shape[0]}, field has {self.n}")
        if not np.all(np.isfinite(x)):
            raise DomainError("non-finite point")
        return x


@dataclass(frozen=True)
class BubbleParams:
    n: int
    b: float
    center: tuple

    def __post_init__(self):
        if self.n < 3:
            raise DomainError(f"bubble needs n >= 3, got {self.n}")
        if not (self.b > 0 and math.isfinite(self.b)):
            raise DomainError(f"bubble needs b > 0, got {self.b}")
        c = tuple(float(v) for v in self.center)
        if len(c) != self.n:
            raise DomainError(f"center has {len(c)} coordinates, expected {self.n}")
        object.__setattr__(self, "center", c)

    @property
    def mean_curvature(self) -> float:
        """Mean curvature of the boundary hyperplane, -2 sqrt(b) xbar_n."""
        return -2.0 * math.sqrt(self.b) * self.center[-1]

    @property
    def alpha(self) -> float:
        """lim |x|^(n-2) u(x) at infinity."""
        return self.b ** (-(self.n - 2) / 4.0)

    def lambda_bar(self, x) -> float:
        """Critical moving-sphere radius at boundary point x: (alpha / u(x))^(1/(n-2))."""
        u = bubble_field(self)
        return (self.alpha / u.value(x)) ** (1.0 / (self.n - 2))


class BubbleField(ScalarField):
    """(sqrt(b) / (1 + b|x - xbar|^2))^((n-2)/2) with closed-form derivatives."""

    def __init__(self, params: BubbleParams):
        self.params = params
        self.n = params.n
        self.domain = Domain()
        self._c = np.asarray(params.center)
        self._m = (params.n - 2) / 2.0

    def _values(self, pts):
        b = self.params.b
        q = 1.0 + b * np.sum((pts - self._c) ** 2, axis=1)
        return b ** (self._m / 2) * q ** (-self._m)

    def _jet(self, x):
        b, m = self.params.b, self._m
        d = x - self._c
        q = 1.0 + b * (d @ d)
        pref = b ** (m / 2)
        val = pref * q ** (-m)
        dq = 2.0 * b * d
        grad = -m * pref * q ** (-m - 1) * dq
        hess = pref * (m * (m + 1) * q ** (-m - 2) * np.outer(dq, dq) - 2.0 * b * m * q ** (-m - 1) * np.eye(self.n))
        return Jet(val, grad, hess)

    def __repr__(self):
        return f"BubbleField({self.params})"


def bubble_field(p: BubbleParams) -> BubbleField:
    return BubbleField(p)


class ExprField(ScalarField):
    """Field defined by a parsed expression; derivatives by forward-mode AD."""

    def __init__(self, src: str, n: int):
        self.src = src
        self.n = n
        self.ast = _expr.parse(src, n)
        self.domain = Domain()

    def _jet(self, x):
        out = _expr.evaluate(self.ast, Jet.variables(x))
        if not isinstance(out, Jet):
            return Jet.constant(float(out), self.n)
        return out

    def _values(self, pts):
        env = [pts[:, i] for i in range(self.n)]
        with np.errstate(all="ignore"):
            out = _expr.evaluate(self.ast, env)
        out = np.broadcast_to(np.asarray(out, dtype=float), (pts.shape[0],)).copy()
        if not np.all(np.isfinite(out)):
            raise DomainError(f"expression {self.src!r} is not finite at some sample point")
        return out

    def __repr__(self):
        return f"ExprField({self.src!r}, n={self.n})"


def parse_field(src: str, n: int) -> ExprField:
    return ExprField(src, n)


def random_positive_expr(rng, n: int) -> str:
    """Source text of a random smooth field that is positive on all of R^n.

    Three templates: an exponential of a quadratic form with non-negative
    diagonal, a positive power of a shifted sum of squares, and a sum of the
    two.  Coefficients are rounded to three decimals so the text is readable.
    """
    def c(lo, hi):
        return f"{rng.uniform(lo, hi):.3f}"

    def shifted(x):
        s = rng.uniform(-1, 1)
        return f"({x} {'-' if s >= 0 else '+'} {abs(s):.3f})"

    xs = [f"x{i + 1}" for i in range(n)]
    lin = " + ".join(f"{c(-0.4, 0.4)}*{x}" for x in xs).replace("+ -", "- ")
    quad = " + ".join(f"{c(0.05, 0.5)}*{shifted(x)}^2" for x in xs)
    expo = f"exp({lin} - 0.1*({quad}))"
    power = f"({c(0.5, 2.0)} + {quad})^({c(-1.5, -0.3)})"
    kind = int(rng.integers(3))
    if kind == 0:
        return expo
    if kind == 1:
        return power
    return f"{c(0.2, 1.0)}*{expo} + {power}"


class ConstantField(ScalarField):
    def __init__(self, c: float, n: int):
        self.c = float(c)
        self.n = n
        self.domain = Domain()

    def _jet(self, x):
        return Jet.constant(self.c, self.n)

    def _values(self, pts):
        return np.full(pts.shape[0], self.c)


class LinearCombination(ScalarField):
    """sum_i c_i u_i; component positivity is not required, only the sum's."""

    def __init__(self, terms):
        terms = [(float(c), f) for c, f in terms]
        if not terms:
            raise DomainError("empty combination")
        self.n = terms[0][1].n
        if any(f.n != self.n for _, f in terms):
            raise DomainError("fields in a combination must share the dimension")
        self.terms = terms
        self.domain = Domain()

    def _jet(self, x):
        acc = None
        for c, f in self.terms:
            if c == 0.0:
                continue
            j = f.raw_jet(x) * c
            acc = j if acc is None else acc + j
        return acc if acc is not None else Jet.constant(0.0, self.n)

    def _values(self, pts):
        out = np.zeros(pts.shape[0])
        for c, f in self.terms:
            if c != 0.0:
                out = out + c * f.raw_values(pts)
        return out


def perturb_field(u: ScalarField, phi: ScalarField, eps: float) -> LinearCombination:
    if u.n != phi.n:
        raise DomainError("perturbation must share the field's dimension")
    return LinearCombination([(1.0, u), (eps, phi)])


def blend(u0: ScalarField, u1: ScalarField, t: float) -> LinearCombination:
    """t u1 + (1 - t) u0."""
    return LinearCombination([(1.0 - t, u0), (t, u1)])


class InversionField(ScalarField):
    """(r / |y - c|)^(n-2) u(c + r^2 (y - c) / |y - c|^2).

    With c on the boundary hyperplane this is the Kelvin reflection u_{c,r};
    with c = (x0', -d) and r = 2d it is the half-space to ball transform.
    """

    def __init__(self, u: ScalarField, center, radius: float, domain: Domain | None = None):
        if not radius > 0:
            raise DomainError(f"inversion radius must be positive, got {radius}")
        self.u = u
        self.n = u.n
        self.center = np.asarray(center, dtype=float).reshape(-1)
        if self.center.shape[0] != self.n:
            raise DomainError("inversion center has the wrong dimension")
        self.radius = float(radius)
        self.domain = domain or Domain(kind="punctured", singular=(tuple(self.center),), eps=EPS_SING)

    def image(self, pts: np.ndarray) -> np.ndarray:
        d = np.atleast_2d(pts) - self.center
        r2 = np.sum(d * d, axis=1)
        return self.center + (self.radius**2) * d / r2[:, None]

    def _values(self, pts):
        d = pts - self.center
        r2 = np.sum(d * d, axis=1)
        if np.any(r2 == 0.0):
            raise DomainError("evaluation at the inversion center")
        z = self.center + (self.radius**2) * d / r2[:, None]
        factor = np.exp(0.5 * (self.n - 2) * np.log(self.radius**2 / r2))
        return factor * self.u.raw_values(z)

    def _jet(self, y):
        ys = Jet.variables(y)
        d = [yi - ci for yi, ci in zip(ys, self.center)]
        r2 = norm_sq(d)
        if r2.val == 0.0:
            raise DomainError("evaluation at the inversion center")
        s = r2.reciprocal() * (self.radius**2)  # r^2 / |y-c|^2
        z = [s * di + ci for di, ci in zip(d, self.center)]
        zval = np.array([zi.val for zi in z])
        uj = self.u.raw_jet(zval)
        inner = compose(uj.val, uj.grad, uj.hess, z)
        return s.powr(0.5 * (self.n - 2)) * inner


def kelvin_field(u: ScalarField, x, lam: float) -> InversionField:
    """u_{x,lam}(y) = (lam/|y-x|)^(n-2) u(x + lam^2 (y-x)/|y-x|^2), x on the boundary hyperplane."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != u.n:
        raise DomainError("Kelvin center has the wrong dimension")
    if abs(x[-1]) > 1e-14:
        raise DomainError(f"Kelvin center must lie on the boundary hyperplane, got x_n={x[-1]!r}")
    if not lam > 0:
        raise DomainError(f"Kelvin radius must be positive, got {lam}")
    return InversionField(u, x, lam)


class FDField(ScalarField):
    """Value-only callable with central-difference derivatives (Richardson extrapolated).

    Slower and noisier than analytic fields; intended as a fallback.
    """

    def __init__(self, fn, n: int, step: float = 1e-3, domain: Domain | None = None):
        self.fn = fn
        self.n = n
        self.step = step
        self.domain = domain or Domain()

    def _values(self, pts):
        return np.array([float(self.fn(p)) for p in pts])

    def _jet(self, x):
        from .fdcheck import fd_gradient, fd_hessian

        f = lambda p: float(self.fn(p))
        return Jet(f(x), fd_gradient(f, x, self.step), fd_hessian(f, x, self.step))

