"""The boundary curvature B_k on the umbilic hyperplane x_n = 0.

    B_k = sum_{s=0}^{k-1} (n-1-s)! / ((n-k)! (2k-2s-1)!!) sigma_s(A^T) h^(2k-2s-1)

Since A^T = M - h^2/2 I with M built from tangential data only, B_k is a
function of h at fixed M whose h-derivative is sigma_{k-1}(A^T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import symfun
from .conformal import _boundary_point, boundary_jet, mean_curvature_from_jet, tangential_from_jet
from .errors import DomainError, NoRootError, PreconditionError
from .fdcheck import fd_derivative
from .fields import ScalarField, blend
from .report import CheckReport

DEFAULT_NODES = 64


def _check_nk(n: int, k: int) -> None:
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if n < 2 * k:
        raise DomainError(f"B_k is defined for n >= 2k (n={n}, k={k})")


def bk_coefficients(n: int, k: int) -> list[float]:
    """Float weights of sigma_s(A^T) h^(2k-2s-1), s = 0..k-1, from exact rationals."""
    _check_nk(n, k)
    return [float(symfun.boundary_coefficient(n, k, s)) for s in range(k)]


def bk_umbilic(n: int, k: int, A_T, h: float) -> float:
    _check_nk(n, k)
    A = symfun.as_sym(A_T, "A_T")
    if A.shape[0] != n - 1:
        raise DomainError(f"A_T must be {n - 1}x{n - 1}, got {A.shape}")
    sig = symfun.sigmas(A, k - 1)
    coef = bk_coefficients(n, k)
    return float(sum(coef[s] * sig[s] * h ** (2 * k - 2 * s - 1) for s in range(k)))


def bk_of_field(u: ScalarField, x, k: int) -> float:
    """B_k of g_u at a boundary point."""
    x = _boundary_point(u, x)
    j = u.jet(x)
    n = u.n
    return bk_umbilic(n, k, tangential_from_jet(j, n), mean_curvature_from_jet(j, n))


def bk_at_fixed_m(M, h: float, n: int, k: int) -> float:
    A = symfun.as_sym(M, "M")
    return bk_umbilic(n, k, A - 0.5 * h * h * np.eye(A.shape[0]), h)


def bk_h_derivative(M, h: float, n: int, k: int, step: float = 1e-5) -> tuple[float, CheckReport]:
    """sigma_{k-1}(M - h^2/2 I), checked against a central difference of h -> B_k."""
    _check_nk(n, k)
    A = symfun.as_sym(M, "M")
    deriv = symfun.sigma(A - 0.5 * h * h * np.eye(A.shape[0]), k - 1)
    fd = fd_derivative(lambda t: bk_at_fixed_m(A, t, n, k), h, step)
    err = abs(fd - deriv)
    tol = 1e-6 * max(1.0, abs(deriv))
    rep = CheckReport(
        name=f"dB_{k}/dh at fixed M (n={n})",
        value=fd,
        reference=deriv,
        abs_err=err,
        tol=tol,
        passed=err <= tol,
    )
    return deriv, rep


def _leading_bound(n: int, k: int, c0: float) -> float:
    lead = symfun.factorial(n - 1) / (symfun.factorial(n - k) * symfun.double_factorial(2 * k - 1))
    return max(1.0, (c0 / lead) ** (1.0 / (2 * k - 1)) + 1.0)


def _bisect_newton(f, df, lo: float, hi: float, target: float, tol: float) -> float:
    """Root of f = target on [lo, hi] with f increasing and f(lo) <= target <= f(hi)."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-6 * max(hi, 1e-300):
            break
    h = 0.5 * (lo + hi)
    for _ in range(50):
        r = f(h) - target
        if abs(r) <= tol:
            return h
        d = df(h)
        step = r / d if d > 0 else 0.0
        h_new = h - step
        if not lo <= h_new <= hi or d <= 0:
            # fall back to bisection on the refined bracket
            if r < 0:
                lo = h
            else:
                hi = h
            h_new = 0.5 * (lo + hi)
        elif r < 0:
            lo = h
        else:
            hi = h
        if h_new == h:
            break
        h = h_new
    return h


def solve_h(mode: str, data, n: int, k: int, c0: float) -> float:
    """Unique h > 0 with B_k = c0.

    mode ``"A_T"`` keeps the tangential Schouten tensor fixed (B is then an
    odd polynomial in h with non-negative coefficients); mode ``"M"`` keeps
    M fixed, so A^T = M - h^2/2 I moves with h and the search is confined to
    the range where A^T stays in Gamma_{k-1}^+.
    """
    _check_nk(n, k)
    if not c0 > 0:
        raise DomainError(f"c0 must be positive, got {c0}")
    D = symfun.as_sym(data, "data")
    if D.shape[0] != n - 1:
        raise DomainError(f"data must be {n - 1}x{n - 1}")
    tol = 1e-12 * (1.0 + c0)
    eye = np.eye(n - 1)
    if mode == "A_T":
        sig = symfun.sigmas(D, k - 1)
        if min(sig) < 0:
            raise DomainError("fixed-A_T mode needs sigma_s(A_T) >= 0 for s < k")
        f = lambda h: bk_umbilic(n, k, D, h)
        df = lambda h: sum(
            c * sig[s] * (2 * k - 2 * s - 1) * h ** (2 * k - 2 * s - 2) for s, c in enumerate(bk_coefficients(n, k))
        )
        return _bisect_newton(f, df, 0.0, _leading_bound(n, k, c0), c0, tol)
    if mode != "M":
        raise DomainError(f"unknown mode {mode!r}; use 'A_T' or 'M'")

    f = lambda h: bk_at_fixed_m(D, h, n, k)
    df = lambda h: symfun.sigma(D - 0.5 * h * h * eye, k - 1)

    def admissible(h):
        return k == 1 or symfun.cone_classify(D - 0.5 * h * h * eye).max_k >= k - 1

    if not admissible(0.0):
        raise NoRootError("M is not in Gamma_{k-1}^+; no admissible h", sup_value=0.0)
    # Gamma_{k-1}^+ is left no later than sigma_1 = 0, i.e. h^2/2 = tr(M)/(n-1)
    h_cap = math.sqrt(2.0 * max(np.trace(D), 0.0) / (n - 1)) if k > 1 else _leading_bound(n, k, c0)
    lo, hi = 0.0, None
    grid = np.linspace(0.0, h_cap, 257)[1:]
    for h in grid:
        if not admissible(h):
            # refine the admissibility edge between lo and h
            a, b = lo, h
            for _ in range(100):
                mid = 0.5 * (a + b)
                if admissible(mid):
                    a = mid
                else:
                    b = mid
            if f(a) >= c0:
                hi = a
                break
            raise NoRootError(
                f"B_{k} stays below c0={c0} on the admissible range h < {a:.6g} (sup B = {f(a):.6g})",
                sup_value=f(a),
            )
        if f(h) >= c0:
            hi = h
            break
        lo = h
    if hi is None:
        raise NoRootError(f"no bracket found for c0={c0} (sup B = {f(h_cap):.6g})", sup_value=f(h_cap))
    return _bisect_newton(f, df, lo, hi, c0, tol)


@dataclass(frozen=True)
class LinCoeffs:
    a: np.ndarray
    b_n: float
    quadrature_nodes: int


def _integrands(u, x, n, k):
    j = u.jet(x)
    A_T = tangential_from_jet(j, n)
    h = mean_curvature_from_jet(j, n)
    a = np.zeros((n - 1, n - 1))
    coef = bk_coefficients(n, k)
    for s in range(1, k):
        a += coef[s] * h ** (2 * k - 2 * s - 1) * symfun.sigma_gradient(A_T, s)
    a *= 2.0 / (n - 2) * math.exp(-(n + 2) / (n - 2) * math.log(j.val))
    b = 2.0 / (n - 2) * math.exp(-n / (n - 2) * math.log(j.val)) * symfun.sigma(A_T, k - 1)
    return a, b


def linearization_coeffs(u0: ScalarField, u1: ScalarField, x, n: int, k: int, nodes: int = DEFAULT_NODES) -> LinCoeffs:
    """a_ab and b_n of B_k(u1) - B_k(u0), integrated over u = t u1 + (1-t) u0 by Gauss-Legendre."""
    _check_nk(n, k)
    if u0.n != n or u1.n != n:
        raise DomainError("field dimension does not match n")
    x = _boundary_point(u0, x)
    t, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    a = np.zeros((n - 1, n - 1))
    b = 0.0
    for ti, wi in zip(t, w):
        ai, bi = _integrands(blend(u0, u1, float(ti)), x, n, k)
        a += wi * ai
        b += wi * bi
    return LinCoeffs(a=0.5 * (a + a.T), b_n=float(b), quadrature_nodes=nodes)


def verify_linearization(u0: ScalarField, u1: ScalarField, x, n: int, k: int, channel: str, nodes: int = DEFAULT_NODES,
                         jet_tol: float = 1e-12) -> CheckReport:
    """B_k(u1) - B_k(u0) against the a or b_n channel for a difference with vanishing lower jet.

    channel ``"b_n"``: psi = u1 - u0 needs psi, tangential gradient and
    tangential Hessian zero at x, so the difference equals -b_n psi_n.
    channel ``"a"``: psi and its full gradient vanish at x, so the difference
    equals -sum a_ab psi_ab.
    """
    x = _boundary_point(u0, x)
    j0, j1 = u0.jet(x), u1.jet(x)
    psi = j1.val - j0.val
    dpsi = j1.grad - j0.grad
    hpsi = j1.hess - j0.hess
    scale = max(abs(j0.val), 1.0)
    if channel == "b_n":
        bad = max(abs(psi), float(np.max(np.abs(dpsi[:-1]))), float(np.max(np.abs(hpsi[:-1, :-1]))))
    elif channel == "a":
        bad = max(abs(psi), float(np.max(np.abs(dpsi))))
    else:
        raise DomainError(f"unknown channel {channel!r}")
    if bad > jet_tol * scale:
        raise PreconditionError(f"difference jet does not vanish as required for channel {channel!r} ({bad:.3e})")
    coeffs = linearization_coeffs(u0, u1, x, n, k, nodes)
    diff = bk_of_field(u1, x, k) - bk_of_field(u0, x, k)
    if channel == "b_n":
        predicted = -coeffs.b_n * dpsi[-1]
    else:
        predicted = -float(np.sum(coeffs.a * hpsi[:-1, :-1]))
    err = abs(diff - predicted)
    tol = 1e-8 * (1.0 + abs(predicted))
    return CheckReport(
        name=f"linearization[{channel}](n={n}, k={k})",
        value=diff,
        reference=predicted,
        abs_err=err,
        tol=tol,
        passed=err <= tol,
        notes=[f"quadrature nodes {nodes}"],
    )


def ellipticity_report(u: ScalarField, x, n: int, k: int, nodes: int = DEFAULT_NODES) -> CheckReport:
    """Strict ellipticity of the boundary linearization at a point, for the pair (u, u).

    Hypotheses: the Schouten tensor at x is in Gamma_k^+ and B_k > 0.  Under
    the cone hypothesis alone, sign(B_k) = sign(h) is required; with B_k > 0
    as well, a must be positive definite and b_n > 0.
    """
    _check_nk(n, k)
    x = _boundary_point(u, x)
    from .conformal import schouten

    label = symfun.cone_classify(schouten(u, x))
    bj = boundary_jet(u, x)
    Bk = bk_umbilic(n, k, bj.A_T, bj.h)
    coeffs = linearization_coeffs(u, u, x, n, k, nodes)
    min_eig = float(np.linalg.eigvalsh(coeffs.a).min()) if n > 1 else math.nan
    value = {"B_k": Bk, "h": bj.h, "min_eig_a": min_eig, "b_n": coeffs.b_n, "cone_max_k": label.max_k}
    name = f"ellipticity(n={n}, k={k})"
    if label.max_k < k:
        return CheckReport(name=name, value=value, passed=True, informational=True,
                           notes=[f"not applicable: Schouten tensor not in Gamma_{k}^+ (max_k={label.max_k})"])
    notes = []
    sign_ok = np.sign(Bk) == np.sign(bj.h)
    if not sign_ok:
        notes.append("sign(B_k) differs from sign(h)")
    elliptic_ok = True
    if Bk > 0:
        pd = k == 1 or _is_pd(coeffs.a)
        elliptic_ok = pd and coeffs.b_n > 0
        if not elliptic_ok:
            notes.append("a not positive definite or b_n <= 0")
    else:
        notes.append("B_k <= 0: only sign consistency is asserted")
    return CheckReport(name=name, value=value, reference=None, abs_err=0.0, tol=0.0,
                       passed=bool(sign_ok and elliptic_ok), notes=notes)


def _is_pd(a: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return False
    return True
