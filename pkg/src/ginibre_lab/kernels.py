"""Exact finite-N kernels of the complex Ginibre ensemble and their edge/bulk limits.

Every kernel reduces to a (weighted) truncated exponential series
``sum_{n<N} w_n x^n / n!``; these are evaluated in log space so that N up to
~1e5 neither overflows nor loses relative accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import AccuracyError, InvalidDimensionError, SingularSeparationError
from .logscaled import LogScaled

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class KernelContext:
    """Ensemble size ``N``; ``sigma_inv2`` is the recursion scale, equal to N for the Ginibre kernels."""

    N: int
    sigma_inv2: float | None = None

    def __post_init__(self):
        if self.N < 1:
            raise InvalidDimensionError(f"N must be positive, got {self.N}")
        if self.sigma_inv2 is None:
            object.__setattr__(self, "sigma_inv2", float(self.N))

    def t(self, z) -> np.ndarray | float:
        return self.sigma_inv2 * np.abs(z) ** 2


def _as_ctx(ctx: KernelContext | int) -> KernelContext:
    return ctx if isinstance(ctx, KernelContext) else KernelContext(int(ctx))


def log_partial_exp(x, N: int, weights=None):
    """``log sum_{n=0}^{N-1} w_n x^n / n!`` for real ``x >= 0`` (scalar or array).

    Terms are generated as ``n log x - log n!`` and combined with a running-max
    (log-sum-exp) rescale.
    """
    x = np.asarray(x, dtype=float)
    n = np.arange(N, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logx = np.log(x)[..., None]
        logt = np.where(n == 0, 0.0, n * logx) - special.gammaln(n + 1)
    b = None if weights is None else np.broadcast_to(np.asarray(weights, dtype=float), logt.shape)
    out = special.logsumexp(logt, axis=-1, b=b)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# one-point functions

def d_closed(ctx: KernelContext | int, z: complex) -> LogScaled:
    """``D_{N-1} = (N-1)! sum_{n<N} t^n/n!`` with ``t = sigma^{-2}|z|^2``."""
    ctx = _as_ctx(ctx)
    t = float(ctx.t(z))
    return LogScaled(float(special.gammaln(ctx.N) + log_partial_exp(t, ctx.N)))


def d_recursion(ctx: KernelContext | int, z: complex) -> LogScaled:
    """``D_{N-1}`` from ``D_{n+1} = (t+n+1) D_n - n t D_{n-1}``, rescaled every step."""
    ctx = _as_ctx(ctx)
    t = float(ctx.t(z))
    if ctx.N == 1:
        return LogScaled(0.0)
    prev, cur, logscale = 1.0, 1.0 + t, 0.0
    for n in range(1, ctx.N - 1):
        prev, cur = cur, (t + n + 1) * cur - n * t * prev
        s = abs(cur)
        prev /= s
        cur /= s
        logscale += math.log(s)
    return LogScaled(logscale + math.log(abs(cur)), math.copysign(1.0, cur))


def g_closed(ctx: KernelContext | int, z: complex) -> LogScaled:
    """``G = (N-1)! sum_{n<N} (N-n) t^n/n!``; equals the recursion value at index N-1."""
    ctx = _as_ctx(ctx)
    t = float(ctx.t(z))
    w = ctx.N - np.arange(ctx.N, dtype=float)
    return LogScaled(float(special.gammaln(ctx.N) + log_partial_exp(t, ctx.N, w)))


def g_recursion(ctx: KernelContext | int, z: complex) -> LogScaled:
    """Index-(N-1) value of ``G_{n+1} = (t+n+2) G_n - n t G_{n-1}``, ``G_0 = 1``, ``G_1 = 2 + t``."""
    ctx = _as_ctx(ctx)
    t = float(ctx.t(z))
    if ctx.N == 1:
        return LogScaled(0.0)
    prev, cur, logscale = 1.0, 2.0 + t, 0.0
    for n in range(1, ctx.N - 1):
        prev, cur = cur, (t + n + 2) * cur - n * t * prev
        s = abs(cur)
        prev /= s
        cur /= s
        logscale += math.log(s)
    return LogScaled(logscale + math.log(abs(cur)), math.copysign(1.0, cur))


def r1_exact(ctx: KernelContext | int, z):
    """Eigenvalue density ``pi^{-1} e^{-t} sum_{n<N} t^n/n!``, ``t = N|z|^2``; vectorised over z."""
    ctx = _as_ctx(ctx)
    t = np.asarray(ctx.t(z), dtype=float)
    return np.exp(log_partial_exp(t, ctx.N) - t) / math.pi


def o1_exact(ctx: KernelContext | int, z):
    """Diagonal overlap density ``pi^{-1} e^{-t} sum_{n<N} (N-n) t^n/n!``; vectorised over z."""
    ctx = _as_ctx(ctx)
    t = np.asarray(ctx.t(z), dtype=float)
    w = ctx.N - np.arange(ctx.N, dtype=float)
    return np.exp(log_partial_exp(t, ctx.N, w) - t) / math.pi


# ---------------------------------------------------------------------------
# two-point functions

def _log_k(N: int, w: complex) -> tuple[float, complex]:
    """(log|K_N(w)|, phase) for complex w."""
    w = complex(w)
    if w == 0:
        return 0.0, 1.0 + 0j
    n = np.arange(N, dtype=float)
    logmag = n * math.log(N * abs(w)) - special.gammaln(n + 1)
    m = logmag.max()
    s = np.sum(np.exp(logmag - m) * np.exp(1j * n * np.angle(w)))
    mag = abs(s)
    if mag == 0:
        return -math.inf, 1.0 + 0j
    return float(m + math.log(mag)), complex(s / mag)


def k_kernel(ctx: KernelContext | int, w: complex) -> LogScaled:
    """``K_N(w) = sum_{n<N} (N w)^n / n!``."""
    ctx = _as_ctx(ctx)
    lm, ph = _log_k(ctx.N, w)
    return LogScaled(lm, ph)


def _log_abs_kappa(N: int, a: complex, b: complex) -> float:
    """log|kappa(a,b)| for the hermitised kernel ``e^{-N(|a|^2+|b|^2)/2} K_N(a conj(b))``."""
    w = complex(a) * complex(b).conjugate()
    # |K_N(conj w)| = |K_N(w)|; canonical half-plane keeps the result exactly symmetric in (a, b)
    if w.imag < 0:
        w = w.conjugate()
    lm, _ = _log_k(N, w)
    return lm - N * (abs(a) ** 2 + abs(b) ** 2) / 2.0


def r2_exact(ctx: KernelContext | int, z1: complex, z2: complex) -> float:
    """Two-point eigenvalue correlation ``pi^{-2} det[kappa(z_j, z_k)]``."""
    ctx = _as_ctx(ctx)
    kaa = math.exp(_log_abs_kappa(ctx.N, z1, z1))
    kbb = math.exp(_log_abs_kappa(ctx.N, z2, z2))
    kab = math.exp(_log_abs_kappa(ctx.N, z1, z2))
    return (kaa * kbb - kab * kab) / math.pi**2


def c2_exact(ctx: KernelContext | int, z1: complex, z2: complex) -> float:
    """Connected correlation ``R2 - R1 R1``, evaluated as ``-pi^{-2}|kappa(z1,z2)|^2`` (no cancellation)."""
    ctx = _as_ctx(ctx)
    return -math.exp(2.0 * _log_abs_kappa(ctx.N, z1, z2)) / math.pi**2


# ---------------------------------------------------------------------------
# normal CDF and edge profiles

def phi(x):
    """Standard normal CDF."""
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def phi_complex(u: complex, tol: float = 1e-8) -> complex:
    """Analytic continuation of the normal CDF.

    Uses ``Phi(u) = (2 pi)^{-1/2} e^{-u^2/2} int_0^inf e^{-x^2/2 + u x} dx``
    folded into ``int_0^40 exp(-(x-u)^2/2) dx / sqrt(2 pi)``; the truncated
    tail is below double precision for ``|u| <= 10``. With ``u = a + ib`` the
    integrand is ``e^{b^2/2} e^{-(x-a)^2/2} e^{ib(x-a)}``, so the oscillatory
    part is handled by a cosine/sine weighted rule. The factor ``e^{b^2/2}``
    amplifies round-off, so ``tol`` bounds the error relative to ``max(1, |Phi|)``.
    """
    u = complex(u)
    a, b = u.real, u.imag

    def gauss(y):
        return math.exp(-y * y / 2.0)

    lo, hi = -a, 40.0 - a
    opts = dict(epsabs=1e-14, epsrel=1e-14, limit=400, full_output=1)
    if b == 0.0:
        re, err_re = integrate.quad(gauss, lo, hi, points=[min(max(0.0, lo), hi)], **opts)[:2]
        im, err_im = 0.0, 0.0
    else:
        re, err_re = integrate.quad(gauss, lo, hi, weight="cos", wvar=b, **opts)[:2]
        im, err_im = integrate.quad(gauss, lo, hi, weight="sin", wvar=b, **opts)[:2]
    scale = math.exp(b * b / 2.0) / SQRT_2PI
    val = complex(re, im) * scale
    err = math.hypot(err_re, err_im) * scale
    if err > tol * max(1.0, abs(val)):
        raise AccuracyError("complex normal CDF quadrature did not converge", err)
    return val


def edge_r1(u):
    """Edge limit of the density at ``z = 1 - u/sqrt(N)``: ``Phi(2u)/pi``."""
    return phi(2.0 * np.asarray(u, dtype=float)) / math.pi


def edge_o1(u, N: int):
    """Edge limit of the diagonal overlap density at ``z = 1 - u/sqrt(N)``.

    ``sqrt(N)/pi * [exp(-2u^2)/sqrt(2 pi) + 2u Phi(2u)]``; this tends to the
    bulk ``N(1-|z|^2)/pi ~ 2u sqrt(N)/pi`` as u -> +inf and to 0 outside the disk.
    """
    u = np.asarray(u, dtype=float)
    return math.sqrt(N) / math.pi * (np.exp(-2.0 * u**2) / SQRT_2PI + 2.0 * u * phi(2.0 * u))


def edge_c2(u1: complex, u2: complex) -> float:
    """Edge connected correlation in the literal form ``pi^{-2} e^{-|u1-u2|^2} |Phi(-u1-conj(u2))|``."""
    u1, u2 = complex(u1), complex(u2)
    return math.exp(-abs(u1 - u2) ** 2) * abs(phi_complex(-u1 - u2.conjugate())) / math.pi**2


def edge_c2_kernel(u1: complex, u2: complex) -> float:
    """Edge limit of ``c2_exact`` obtained from the hermitised kernel.

    ``-pi^{-2} e^{-|u1-u2|^2} |Phi(u1 + conj(u2))|^2``; on the diagonal it reduces
    to ``-edge_r1(u)^2`` as it must.
    """
    u1, u2 = complex(u1), complex(u2)
    return -math.exp(-abs(u1 - u2) ** 2) * abs(phi_complex(u1 + u2.conjugate())) ** 2 / math.pi**2


# ---------------------------------------------------------------------------
# bulk two-point overlap forms

def cm_bulk_o2(z1: complex, z2: complex) -> complex:
    """``-(1 - z1 conj(z2)) / (pi^2 |z1 - z2|^4)``."""
    z1, z2 = complex(z1), complex(z2)
    d = abs(z1 - z2)
    if d < 1e-12:
        raise SingularSeparationError(f"|z1 - z2| = {d:.3e} is below 1e-12")
    return -(1.0 - z1 * z2.conjugate()) / (math.pi**2 * d**4)


def omega_factor(x):
    """``(1 - (1+x) e^{-x}) / x^2`` with its Taylor series near 0 (limit 1/2)."""
    x = np.asarray(x, dtype=float)
    small = x < 1e-3
    xs = np.where(small, 1.0, x)
    direct = (-np.expm1(-xs) - xs * np.exp(-xs)) / xs**2
    series = 0.5 - x / 3.0 + x**2 / 8.0 - x**3 / 30.0
    out = np.where(small, series, direct)
    return out[()] if out.ndim == 0 else out


def cm_scaled_o2(z: complex, omega: complex) -> float:
    """Scaled bulk form ``-pi^{-2} (1-|z|^2) (1-(1+|w|^2)e^{-|w|^2}) / |w|^4``."""
    return float(-(1.0 - abs(z) ** 2) * omega_factor(abs(omega) ** 2) / math.pi**2)
