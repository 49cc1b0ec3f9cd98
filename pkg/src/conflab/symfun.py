"""Elementary symmetric functions of symmetric matrices.

sigma_k is read off the characteristic polynomial through the trace
recursion

    T_0 = I,   sigma_k = tr(A T_{k-1}) / k,   T_k = sigma_k I - A T_{k-1},

so T_{k-1} is the Newton tensor, i.e. the matrix gradient of sigma_k.
No eigendecomposition is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .report import CheckReport

_INT64_MAX = 2**63 - 1

# relative tolerance used when deciding whether an input is symmetric
SYM_RTOL = 1e-12


def as_sym(A, name: str = "A") -> np.ndarray:
    """Validate ``A`` as a finite symmetric square matrix and return a symmetrized float copy."""
    M = np.array(A, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DomainError(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > SYM_RTOL * scale:
        raise DomainError(f"{name} is not symmetric")
    return 0.5 * (M + M.T)


def sym_from_upper(values, dim: int | None = None) -> np.ndarray:
    """Build a symmetric matrix from its upper triangle listed row by row."""
    vals = [float(v) for v in values]
    if dim is None:
        # m(m+1)/2 = len(vals)
        dim = int(round((math.sqrt(8 * len(vals) + 1) - 1) / 2))
    if dim * (dim + 1) // 2 != len(vals):
        raise DomainError(f"{len(vals)} values do not fill the upper triangle of a square matrix")
    M = np.zeros((dim, dim))
    iu = np.triu_indices(dim)
    M[iu] = vals
    return M + np.triu(M, 1).T


def _recursion(A: np.ndarray, kmax: int):
    m = A.shape[0]
    sig = [1.0]
    T = np.eye(m)
    tensors = [T]
    for j in range(1, kmax + 1):
        AT = A @ T
        s = np.trace(AT) / j
        sig.append(float(s))
        T = s * np.eye(m) - AT
        tensors.append(T)
    return sig, tensors


def _check_k(A: np.ndarray, k: int, lo: int) -> None:
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise DomainError(f"k must be an integer, got {k!r}")
    if k < lo or k > A.shape[0]:
        raise DomainError(f"k={k} out of range [{lo}, {A.shape[0]}]")


def sigma(A, k: int) -> float:
    """k-th elementary symmetric function of the eigenvalues of ``A`` (sigma_0 = 1)."""
    M = as_sym(A)
    _check_k(M, k, 0)
    sig, _ = _recursion(M, k)
    return sig[k]


def sigmas(A, kmax: int | None = None) -> list[float]:
    """[sigma_0, ..., sigma_kmax] in one pass."""
    M = as_sym(A)
    kmax = M.shape[0] if kmax is None else kmax
    _check_k(M, kmax, 0)
    return _recursion(M, kmax)[0]


def sigma_gradient(A, k: int) -> np.ndarray:
    """Matrix of partials d sigma_k / d A_ij (the (k-1)-th Newton tensor)."""
    M = as_sym(A)
    _check_k(M, k, 1)
    _, tensors = _recursion(M, k - 1)
    T = tensors[k - 1]
    return 0.5 * (T + T.T)


def newton_trace_check(A, s: int) -> CheckReport:
    """trace(d sigma_s / dA) = (m - s + 1) sigma_{s-1} for an m x m matrix."""
    M = as_sym(A)
    _check_k(M, s, 1)
    m = M.shape[0]
    lhs = float(np.trace(sigma_gradient(M, s)))
    prev = sigma(M, s - 1)
    rhs = (m - s + 1) * prev
    err = abs(lhs - rhs)
    tol = 1e-10 * (1.0 + abs(prev))
    return CheckReport(
        name=f"newton_trace(dim={m}, s={s})",
        value=lhs,
        reference=rhs,
        abs_err=err,
        tol=tol,
        passed=err <= tol,
    )


@dataclass(frozen=True)
class ConeLabel:
    """Largest k with sigma_1, ..., sigma_k all strictly positive."""

    max_k: int
    sigmas: tuple[float, ...]

    def contains(self, k: int) -> bool:
        return self.max_k >= k


def cone_classify(A) -> ConeLabel:
    M = as_sym(A)
    sig = sigmas(M)
    max_k = 0
    for j in range(1, len(sig)):
        if sig[j] > 0.0:
            max_k = j
        else:
            break
    return ConeLabel(max_k=max_k, sigmas=tuple(sig[1:]))


def factorial(m: int) -> int:
    if m < 0:
        raise DomainError(f"factorial of negative integer {m}")
    return math.factorial(m)


def double_factorial(m: int) -> int:
    """m!! with the conventions (-1)!! = 0!! = 1."""
    if m < -1:
        raise DomainError(f"double factorial undefined for {m}")
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def _guarded(*ints: int) -> None:
    for v in ints:
        if abs(v) > _INT64_MAX:
            raise DomainError("integer constant overflows 64 bits")


def coefficient_C(n: int, k: int, i: int) -> Fraction:
    """(2k-i-1)!(n-2k+i)! / ((n-k)!(2k-2i-1)!! i!) as an exact rational."""
    if n < 2 * k:
        raise DomainError(f"coefficient_C requires n >= 2k (n={n}, k={k})")
    if not 0 <= i <= k - 1:
        raise DomainError(f"coefficient_C requires 0 <= i <= k-1 (i={i}, k={k})")
    num = (factorial(2 * k - i - 1), factorial(n - 2 * k + i))
    den = (factorial(n - k), double_factorial(2 * k - 2 * i - 1), factorial(i))
    _guarded(*num, *den)
    return Fraction(num[0] * num[1], den[0] * den[1] * den[2])


def boundary_coefficient(n: int, k: int, s: int) -> Fraction:
    """(n-1-s)! / ((n-k)!(2k-2s-1)!!), the weight of sigma_s(A^T) h^(2k-2s-1) in B_k."""
    if n < 2 * k:
        raise DomainError(f"B_k requires n >= 2k (n={n}, k={k})")
    if not 0 <= s <= k - 1:
        raise DomainError(f"s={s} out of range [0, {k - 1}]")
    num = factorial(n - 1 - s)
    den = (factorial(n - k), double_factorial(2 * k - 2 * s - 1))
    _guarded(num, *den)
    return Fraction(num, den[0] * den[1])
