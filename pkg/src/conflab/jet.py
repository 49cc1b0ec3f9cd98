"""Second-order forward-mode automatic differentiation.

A ``Jet`` carries a value together with its gradient and Hessian with respect
to ``n`` independent variables, so every arithmetic operation propagates exact
first and second derivatives.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError


class Jet:
    __slots__ = ("val", "grad", "hess")

    def __init__(self, val: float, grad: np.ndarray, hess: np.ndarray):
        self.val = float(val)
        self.grad = grad
        self.hess = hess

    @property
    def n(self) -> int:
        return self.grad.shape[0]

    @classmethod
    def constant(cls, c: float, n: int) -> "Jet":
        return cls(c, np.zeros(n), np.zeros((n, n)))

    @classmethod
    def variables(cls, x) -> list["Jet"]:
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        eye = np.eye(n)
        return [cls(x[i], eye[i].copy(), np.zeros((n, n))) for i in range(n)]

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(float(other), self.n)

    # univariate chain rule: f(a) with f' = d1, f'' = d2
    def _chain(self, f: float, d1: float, d2: float) -> "Jet":
        g = self.grad
        return Jet(f, d1 * g, d1 * self.hess + d2 * np.outer(g, g))

    def __add__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.val + float(other), self.grad, self.hess)
        return Jet(self.val + other.val, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = float(other)
            return Jet(c * self.val, c * self.grad, c * self.hess)
        a, b = self, other
        cross = np.outer(a.grad, b.grad)
        return Jet(
            a.val * b.val,
            a.val * b.grad + b.val * a.grad,
            a.val * b.hess + b.val * a.hess + cross + cross.T,
        )

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        a = self.val
        if a == 0.0:
            raise DomainError("division by zero")
        return self._chain(1.0 / a, -1.0 / a**2, 2.0 / a**3)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            c = float(other)
            if c == 0.0:
                raise DomainError("division by zero")
            return self * (1.0 / c)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * float(other)

    def powi(self, p: int) -> "Jet":
        """Integer power; valid for any sign of the base (p < 0 needs a nonzero base)."""
        a = self.val
        if p == 0:
            return Jet.constant(1.0, self.n)
        if p < 0 and a == 0.0:
            raise DomainError("zero raised to a negative power")
        d1 = p * a ** (p - 1) if p != 1 else 1.0
        d2 = p * (p - 1) * a ** (p - 2) if p not in (0, 1) else 0.0
        return self._chain(a**p, d1, d2)

    def powr(self, p: float) -> "Jet":
        """Real power, base must be positive."""
        a = self.val
        if a <= 0.0:
            raise DomainError(f"real power of non-positive base {a!r}")
        ap = math.exp(p * math.log(a))
        return self._chain(ap, p * ap / a, p * (p - 1) * ap / (a * a))

    def __pow__(self, p):
        if isinstance(p, Jet):
            return (p * self.log()).exp()
        p = float(p)
        if p.is_integer():
            return self.powi(int(p))
        return self.powr(p)

    def exp(self) -> "Jet":
        e = math.exp(self.val)
        return self._chain(e, e, e)

    def log(self) -> "Jet":
        a = self.val
        if a <= 0.0:
            raise DomainError(f"ln of non-positive value {a!r}")
        return self._chain(math.log(a), 1.0 / a, -1.0 / (a * a))

    def sqrt(self) -> "Jet":
        a = self.val
        if a <= 0.0:
            raise DomainError(f"sqrt is not differentiable at {a!r}")
        r = math.sqrt(a)
        return self._chain(r, 0.5 / r, -0.25 / (r * a))

    def abs(self) -> "Jet":
        s = float(np.sign(self.val))
        return Jet(abs(self.val), s * self.grad, s * self.hess)

    def __repr__(self) -> str:
        return f"Jet(val={self.val!r}, grad={self.grad!r})"


def compose(outer_val: float, outer_grad, outer_hess, inner: list[Jet]) -> Jet:
    """Chain rule for f(z(y)) given the 2-jet of f at z and the component jets of z(y)."""
    J = np.array([c.grad for c in inner])  # J[a, i] = dz_a/dy_i
    g = np.asarray(outer_grad, dtype=float)
    H = np.asarray(outer_hess, dtype=float)
    grad = J.T @ g
    hess = J.T @ H @ J
    for a, c in enumerate(inner):
        hess = hess + g[a] * c.hess
    return Jet(outer_val, grad, 0.5 * (hess + hess.T))


def norm_sq(components: list[Jet]) -> Jet:
    out = components[0] * components[0]
    for c in components[1:]:
        out = out + c * c
    return out
