"""Bookkeeping of the moment constraint: exact O1 moments, the bulk O2 integral and their divergent pieces.

With ``L = N/((p+1)(p+2))``, ``res1 = int |z|^{2p} O1 - L`` and
``res2 = (bulk O2 integral) + L``; the constraint requires their sum to stay O(1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from ._parallel import map_chunks
from .errors import AccuracyError, DomainError, InvalidDimensionError, SingularFitError
from .kernels import omega_factor, phi

# ---------------------------------------------------------------------------
# one-point side


def o1_moment_exact(N: int, p: int) -> float:
    """``int |z|^{2p} O1_N(z) d^2z = N^{-(p+1)} sum_{n<N} (N-n) (n+p)!/n!``."""
    if N < 1:
        raise InvalidDimensionError(f"N must be positive, got {N}")
    n = np.arange(N, dtype=float)
    logt = special.gammaln(n + p + 1) - special.gammaln(n + 1) - (p + 1) * math.log(N)
    return float(np.sum((N - n) * np.exp(logt)))


def o1_moment_closed(N: int, p: int) -> Fraction:
    """Exact rational value ``N prod_{j=0}^{p+1} (1 + j/N) / ((p+1)(p+2))``."""
    out = Fraction(N, (p + 1) * (p + 2))
    for j in range(p + 2):
        out *= Fraction(N + j, N)
    return out


def o1_asymptote(N: int, p: int) -> Fraction:
    """Leading term ``N/((p+1)(p+2))`` in exact arithmetic."""
    return Fraction(N, (p + 1) * (p + 2))


def o1_edge_correction(u):
    """Edge O1 profile minus its bulk value, in units of ``sqrt(N)/pi``: ``h(2|u|)`` with
    ``h(y) = phi(y) - y Phi(-y)`` (``phi`` the normal density).

    For ``u >= 0`` (inside the disk) this is ``e^{-2u^2}/sqrt(2 pi) - 2u Phi(-2u)``.
    """
    y = 2.0 * np.abs(np.asarray(u, dtype=float))
    return np.exp(-y * y / 2.0) / math.sqrt(2.0 * math.pi) - y * phi(-y)


def subleading_o1_constant(tol: float = 1e-12) -> float:
    """``2 int_R o1_edge_correction(u) du``: the O(1) offset of the exact O1 moment over its leading term."""
    val, err = integrate.quad(o1_edge_correction, 0.0, np.inf, epsabs=tol, epsrel=tol, limit=200)
    if err > 1e3 * tol:
        raise AccuracyError("edge correction integral", err)
    return 4.0 * val


def res1(N: int, p: int) -> float:
    return o1_moment_exact(N, p) - N / ((p + 1) * (p + 2))


# ---------------------------------------------------------------------------
# separation weight and its moments


def w_weight(rho):
    """``W(rho) = (1 - (1+rho^2) e^{-rho^2}) / rho^3``; ``~ rho/2`` at 0 and ``~ rho^{-3}`` at infinity."""
    rho = np.asarray(rho, dtype=float)
    out = rho * omega_factor(rho * rho)
    return out[()] if out.ndim == 0 else out


def w_mass(tol: float = 1e-13) -> float:
    """``int_C (1 - (1+|w|^2) e^{-|w|^2}) / |w|^4 d^2w = 2 pi int_0^inf W``, split at rho = 8."""
    core, e1 = integrate.quad(w_weight, 0.0, 8.0, epsabs=tol, epsrel=tol, limit=200)
    tail, e2 = integrate.quad(w_weight, 8.0, np.inf, epsabs=tol, epsrel=tol, limit=200)
    if e1 + e2 > 1e3 * tol:
        raise AccuracyError("w_mass quadrature", e1 + e2)
    return 2.0 * math.pi * (core + tail)


def _gauss_moment(j: int, x):
    """``int_0^x rho^j e^{-rho^2} d rho``."""
    a = (j + 1) / 2.0
    return 0.5 * special.gamma(a) * special.gammainc(a, x * x)


def _u(x):
    x2 = x * x
    return np.where(x2 < 1e-4, x2**2 / 2.0 - x2**3 / 3.0, -np.expm1(-x2) - x2 * np.exp(-x2))


def w_moment(k: int, x):
    """Closed form of ``int_0^x rho^k W(rho) d rho``.

    Integration by parts against ``d/drho (1 - (1+rho^2) e^{-rho^2}) = 2 rho^3 e^{-rho^2}``
    reduces every moment to incomplete gamma functions; ``k = 2`` picks up ``ln x``.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if k == 0:
            out = np.where(x > 0, -_u(x) / (2.0 * x * x) - np.expm1(-x * x) / 2.0, 0.0)
        elif k == 1:
            out = np.where(x > 0, -_u(x) / x + 2.0 * _gauss_moment(2, x), 0.0)
        elif k == 2:
            x2 = x * x
            out = np.where(x > 0, 0.5 * (special.exp1(x2) + np.log(x2) + np.euler_gamma) + 0.5 * np.expm1(-x2), 0.0)
        else:
            out = x ** (k - 2) / (k - 2) - _gauss_moment(k - 3, x) - _gauss_moment(k - 1, x)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# geometry and polynomial factor


def r_cutoff(r, phi_angle):
    """``R(r, phi) = 2 (sqrt(1 - r^2 sin^2 phi) - r |cos phi|)``: the largest ``|w|`` keeping both
    ``r e^{i phi} +- w/2`` in the unit disk."""
    r = np.asarray(r, dtype=float)
    if np.any(r > 1.0) or np.any(r < 0.0):
        raise DomainError("r_cutoff needs 0 <= r <= 1")
    s = np.sin(phi_angle)
    out = 2.0 * (np.sqrt(np.clip(1.0 - r * r * s * s, 0.0, None)) - r * np.abs(np.cos(phi_angle)))
    return out[()] if np.ndim(out) == 0 else out


def f_p_coefficients(r: float, phi_angle: float, p: int) -> np.ndarray:
    """Coefficients ``c_k`` of ``F_p = X^p (1 - X)`` as a polynomial in ``s``,
    where ``X = r^2 - i r sin(phi) s - s^2/4`` and ``s = rho / sqrt(N)``."""
    x = np.polynomial.Polynomial([r * r, -1j * r * math.sin(phi_angle), -0.25])
    f = x**p * (1 - x)
    c = np.zeros(2 * p + 3, dtype=complex)
    c[: f.coef.size] = f.coef
    return c


def f_p(r: float, phi_angle: float, rho: float, N: int, p: int) -> complex:
    x = r * r - 1j * r * rho * math.sin(phi_angle) / math.sqrt(N) - rho * rho / (4.0 * N)
    return x**p * (1 - x)


def f_p2(r, phi_angle, p: int):
    """Closed-form ``rho^2/N`` coefficient of ``F_p``."""
    r = np.asarray(r, dtype=float)
    s2 = np.sin(phi_angle) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        rm = r ** (2 * p - 2) if p >= 1 else np.zeros_like(r)
    return (0.25 * r ** (2 * p) - p / 4.0 * rm * (1 - r * r)
            - p * (p - 1) / 2.0 * rm * (1 - r * r) * s2 + p * r ** (2 * p) * s2)


def f_p2_angular(r, p: int):
    """``int_0^{2 pi} f_p2 d phi = (pi/2) [(p+1)^2 r^{2p} - p^2 r^{2p-2}]``."""
    r = np.asarray(r, dtype=float)
    rm = r ** (2 * p - 2) if p >= 1 else 0.0
    return math.pi / 2.0 * ((p + 1) ** 2 * r ** (2 * p) - p * p * rm)


# ---------------------------------------------------------------------------
# bulk O2 integral

PARTS = ("full", "k0", "k0_tail", "k2", "k4", "higher")


def _inner(r: float, phi_angle: float, N: int, p: int, part: str) -> float:
    """Real part of ``int_0^{sqrt(N) R} F_p W d rho`` (or one of its pieces) at fixed (r, phi)."""
    x = math.sqrt(N) * float(r_cutoff(r, phi_angle))
    if x <= 1e-300 or r <= 0.0:
        return 0.0
    c = f_p_coefficients(r, phi_angle, p).real
    if part == "k0":
        return c[0] * w_moment(0, x)
    if part == "k0_tail":
        return c[0] * (w_moment(0, x) - 0.5)
    if part in ("k2", "k4"):
        k = int(part[1])
        return c[k] * N ** (-k / 2) * w_moment(k, x) if k < c.size else 0.0
    ks = range(0, c.size, 2) if part == "full" else range(6, c.size, 2)
    return sum(c[k] * N ** (-k / 2) * w_moment(k, x) for k in ks)


def bulk_o2_quadrature(N: int, p: int, part: str = "full", tol: float = 1e-11) -> tuple[float, float]:
    """``-(2N/pi) int_disk int_phi (int_0^{sqrt(N) R} F_p W d rho) r dr dphi`` with its error estimate.

    Odd powers of ``rho`` come with odd powers of ``sin(phi)`` and cancel in the
    angular integral, so only even coefficients (all real) are kept; the
    cancellation itself is checked by :func:`bulk_o2_imaginary`. The radial
    variable is mapped as ``r = 1 - e^{-s}`` to resolve the edge layer, and
    the angle is folded onto ``[0, pi/2]``.
    """
    if N < 16:
        raise InvalidDimensionError(f"bulk O2 quadrature needs N >= 16, got {N}")
    if part not in PARTS:
        raise ValueError(f"part must be one of {PARTS}")

    def g(s, ang):
        r = -math.expm1(-s)
        return _inner(r, ang, N, p, part) * r * math.exp(-s)

    val, err = integrate.dblquad(g, 0.0, math.pi / 2.0, 0.0, 40.0, epsabs=tol, epsrel=tol)
    scale = -(2.0 * N / math.pi) * 4.0
    return scale * val, abs(scale) * err


def bulk_o2_moment(N: int, p: int, part: str = "full") -> float:
    return bulk_o2_quadrature(N, p, part)[0]


def bulk_o2_imaginary(N: int, p: int, tol: float = 1e-10) -> tuple[float, float]:
    """(imaginary part of the full-angle integral, |real part|) for the relative cancellation check."""

    def inner_im(r, ang):
        x = math.sqrt(N) * float(r_cutoff(r, ang))
        if x <= 1e-300 or r <= 0.0:
            return 0.0
        c = f_p_coefficients(r, ang, p).imag
        return sum(c[k] * N ** (-k / 2) * w_moment(k, x) for k in range(1, c.size, 2))

    def g(s, ang):
        r = -math.expm1(-s)
        return inner_im(r, ang) * r * math.exp(-s)

    im, _ = integrate.dblquad(g, 0.0, 2.0 * math.pi, 0.0, 40.0, epsabs=tol, epsrel=tol)
    re = bulk_o2_moment(N, p)
    return -(2.0 * N / math.pi) * im, abs(re)


def res2(N: int, p: int) -> float:
    return bulk_o2_moment(N, p) + N / ((p + 1) * (p + 2))


# ---------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class LedgerRow:
    N: int
    p: int
    o1_moment_exact: float
    o1_asymptote: float
    o2_bulk_quadrature: float
    res1: float
    res2: float
    quadrature_error: float
    pieces: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.res1 + self.res2


@dataclass(frozen=True)
class DivergenceFit:
    """Least-squares coefficients of ``res2 ~ a N + b ln N + c`` for one ``p``."""

    p: int
    a: float
    b: float
    c: float
    residual_norm: float
    n_points: int
    b_without_smallest: float = float("nan")


def ledger_row(N: int, p: int, pieces: bool = False) -> LedgerRow:
    o1 = o1_moment_exact(N, p)
    lead = N / ((p + 1) * (p + 2))
    o2, err = bulk_o2_quadrature(N, p)
    extra = {}
    if pieces:
        for part in ("k0_tail", "k2", "k4"):
            extra[part] = bulk_o2_moment(N, p, part)
    return LedgerRow(N, p, o1, float(o1_asymptote(N, p)), o2, o1 - lead, o2 + lead, err, extra)


def fit_divergence(Ns, values, p: int = 0) -> DivergenceFit:
    Ns = np.asarray(Ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.unique(Ns).size < 3:
        raise SingularFitError("the a N + b ln N + c model needs at least three distinct N")

    def solve(ns, vs):
        design = np.column_stack([ns, np.log(ns), np.ones_like(ns)])
        coef, *_ = np.linalg.lstsq(design, vs, rcond=None)
        return coef, float(np.linalg.norm(design @ coef - vs))

    coef, res = solve(Ns, values)
    b_drop = float("nan")
    if np.unique(Ns).size >= 4:
        keep = Ns > Ns.min()
        b_drop = float(solve(Ns[keep], values[keep])[0][1])
    return DivergenceFit(p, float(coef[0]), float(coef[1]), float(coef[2]), res, int(Ns.size), b_drop)


def ledger_report(p_list, N_list, pieces: bool = False, threads: int = 1) -> tuple[list[LedgerRow], list[DivergenceFit]]:
    """Rows for every (N, p) and a divergence fit per p (needs at least three N values)."""
    grid = [(N, p) for p in p_list for N in N_list]
    chunks = map_chunks(lambda idx: [ledger_row(*grid[i], pieces=pieces) for i in idx], len(grid), threads, chunk=1)
    rows = [row for chunk in chunks for row in chunk]
    fits = []
    for p in p_list:
        sel = [row for row in rows if row.p == p]
        fits.append(fit_divergence([row.N for row in sel], [row.res2 for row in sel], p))
    return rows, fits
