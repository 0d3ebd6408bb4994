"""Transfer-matrix form of the density recursion, its adiabatic (instantaneous-eigenbasis) factorisation,
and the jump-integral series for the perturbation ratio."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import AccuracyError, AdiabaticBreakdownError, DegenerateSpectrumError, DomainError, InvalidDimensionError
from .logscaled import LogScaled

SQRT_2PI_OVER_E = math.sqrt(2.0 * math.pi) / math.e


@dataclass(frozen=True)
class TransferStep:
    """``A_n = [[0, 1], [-N n r^2, N r^2 + n + 1]]`` with eigenvalues ``lam_plus >= lam_minus``,
    right eigenvectors ``V = [1, lam]`` and dual rows ``W`` with ``W^s . V^t = delta_st``."""

    n: int
    N: int
    r: float
    matrix: np.ndarray
    lam_plus: float
    lam_minus: float
    v_plus: np.ndarray
    v_minus: np.ndarray
    w_plus: np.ndarray
    w_minus: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.lam_plus * np.outer(self.v_plus, self.w_plus)
                + self.lam_minus * np.outer(self.v_minus, self.w_minus))


def _spectrum(n, N: int, r: float):
    """Vectorised ``(lam_plus, lam_minus)``; the discriminant ``(n+1-N r^2)^2 + 4 N r^2`` has no cancellation."""
    n = np.asarray(n, dtype=float)
    tr = N * r * r + n + 1.0
    disc = np.sqrt((n + 1.0 - N * r * r) ** 2 + 4.0 * N * r * r)
    lp = 0.5 * (tr + disc)
    return lp, N * n * r * r / lp


def transfer_step(n: int, N: int, r: float) -> TransferStep:
    if r <= 0:
        raise DegenerateSpectrumError("r = 0 makes every step rank one with a double eigenvector")
    if not 0 <= n <= N - 2:
        raise ValueError(f"step index must satisfy 0 <= n <= N-2, got n={n}, N={N}")
    lp, lm = (float(v) for v in _spectrum(n, N, r))
    gap = lp - lm
    a = np.array([[0.0, 1.0], [-N * n * r * r, N * r * r + n + 1.0]])
    return TransferStep(n, N, r, a, lp, lm,
                        np.array([1.0, lp]), np.array([1.0, lm]),
                        np.array([-lm, 1.0]) / gap, -np.array([-lp, 1.0]) / gap)


def exact_product(N: int, r: float) -> LogScaled:
    """``e_2^T A_{N-2} ... A_0 e_2``, which equals ``D_{N-1}`` at ``|z| = r``; rescaled every step."""
    if N < 2:
        raise InvalidDimensionError(f"exact_product needs N >= 2, got {N}")
    t = N * r * r
    a, b, logscale = 0.0, 1.0, 0.0
    for n in range(N - 1):
        a, b = b, -t * n * a + (t + n + 1.0) * b
        s = abs(b) if b != 0 else 1.0
        a /= s
        b /= s
        logscale += math.log(s)
    return LogScaled(logscale + math.log(abs(b)), math.copysign(1.0, b))


def main_term_factors(N: int, r: float) -> dict[str, float]:
    """Logs of the four factors of the all-plus term.

    ``lambda_product``: ``sum_{n=0}^{N-2} ln lam_plus_n``;
    ``w0_e2``: ``W_0^+ . e_2 = 1/(lam_plus_0 - lam_minus_0)``;
    ``e2_v``: ``e_2 . V_{N-2}^+ = lam_plus_{N-2}``;
    ``inner_products``: ``sum_{n=0}^{N-3} ln(W_{n+1}^+ . V_n^+)``.
    """
    if N < 3:
        raise InvalidDimensionError(f"main term needs N >= 3, got {N}")
    if not 0.0 < r < 1.0:
        raise DomainError(f"main term needs 0 < r < 1, got {r}")
    lp, lm = _spectrum(np.arange(N - 1), N, r)
    ip = (lp[:-1] - lm[1:]) / (lp[1:] - lm[1:])
    if np.any(ip <= 0):
        raise AdiabaticBreakdownError(f"nonpositive overlap W+ . V+ at step {int(np.argmin(ip))}")
    return {
        "lambda_product": float(np.sum(np.log(lp))),
        "w0_e2": -math.log(lp[0] - lm[0]),
        "e2_v": math.log(lp[-1]),
        "inner_products": float(np.sum(np.log(ip))),
    }


def main_term_asymptotics(N: int, r: float) -> dict[str, float]:
    """Leading large-N behaviour of each factor log in :func:`main_term_factors` and of their total."""
    out = {
        "lambda_product": N * math.log(N) - N * (1 - r * r) + 1.0 + math.log(r * (1 - r * r)),
        "w0_e2": -math.log(N * r * r),
        "e2_v": math.log(N),
        "inner_products": math.log(r / (1 - r * r)) - 0.5 * math.log(N),
    }
    out["total"] = (N - 1) * math.log(N) - N * (1 - r * r) + 1.0 + 0.5 * math.log(N)
    return out


def main_term(N: int, r: float) -> LogScaled:
    return LogScaled(sum(main_term_factors(N, r).values()))


@dataclass(frozen=True)
class AdiabaticResult:
    N: int
    r: float
    exact_product: LogScaled
    main_term: LogScaled
    perturbation_ratio: float
    factors: dict = field(default_factory=dict)


def adiabatic_result(N: int, r: float) -> AdiabaticResult:
    ex = exact_product(N, r)
    fac = main_term_factors(N, r)
    mt = LogScaled(sum(fac.values()))
    return AdiabaticResult(N, r, ex, mt, math.exp(ex.log_magnitude - mt.log_magnitude), fac)


def perturbation_ratio(N: int, r: float) -> float:
    """Exact product divided by the main term."""
    return adiabatic_result(N, r).perturbation_ratio


def lyapunov_exponent(N: int, r: float) -> float:
    """``(1/N) [sum ln lam_plus_n - (N-1) ln N]``."""
    lp, _ = _spectrum(np.arange(N - 1), N, r)
    return float((np.sum(np.log(lp)) - (N - 1) * math.log(N)) / N)


def lyapunov_limit(r: float) -> float:
    """``int_0^1 ln max(r^2, t) dt``."""
    r2 = r * r
    return r2 - 1.0 if r2 < 1.0 else math.log(r2)


# ---------------------------------------------------------------------------
# jump series

FORMS = ("derived", "display")


def _log_cosh(x):
    return np.logaddexp(x, -x) - math.log(2.0)


def _log_alpha(a, form: str):
    """Log weight of an up-switch at ``a``; the pair integrand is ``alpha(a) beta(b)`` for ``a < b``."""
    if form == "derived":
        return np.sinh(2 * a) + 2 * a - _log_cosh(a) - math.log(2.0)
    return np.sinh(2 * a) - _log_cosh(a)


def _log_beta(b, form: str):
    if form == "derived":
        return -np.sinh(2 * b) - 2 * b - _log_cosh(b) - math.log(2.0)
    return -np.sinh(2 * b) - _log_cosh(b)


def pair_integrand(a, b, form: str = "derived"):
    """Weight of one excursion to the minus branch on ``[a, b]``.

    ``derived``: ``exp(2a - 2b + sinh 2a - sinh 2b) / (4 cosh a cosh b)``, which is
    ``[(1+e^{-2a})(1+e^{2b})]^{-1} exp(-int_a^b (4 cosh^2 x - 1) dx)``.
    ``display``: ``exp(sinh 2a - sinh 2b) / (cosh a cosh b)``.
    """
    return np.exp(_log_alpha(np.asarray(a, float), form) + _log_beta(np.asarray(b, float), form))


@dataclass(frozen=True)
class JumpSeriesResult:
    value: float
    terms: tuple[float, ...]
    errors: tuple[float, ...]
    form: str
    domain: float

    @property
    def relative_error(self) -> float:
        return float(sum(self.errors) / abs(self.value))


def _g_h(x: np.ndarray, L: float, form: str):
    """``g(b) = beta(b) int_{-L}^b alpha`` and ``h(c) = alpha(c) int_c^L beta`` on the grid ``x``."""
    g = np.empty_like(x)
    h = np.empty_like(x)
    for i, t in enumerate(x):
        la_t, lb_t = float(_log_alpha(t, form)), float(_log_beta(t, form))
        # alpha is increasing and beta decreasing, so the rescaled integrands are <= 1
        ia = integrate.quad(lambda a: math.exp(float(_log_alpha(a, form)) - la_t), -L, t,
                            epsabs=1e-14, epsrel=1e-12, limit=200)[0] if t > -L else 0.0
        ib = integrate.quad(lambda b: math.exp(float(_log_beta(b, form)) - lb_t), t, L,
                            epsabs=1e-14, epsrel=1e-12, limit=200)[0] if t < L else 0.0
        both = la_t + lb_t
        g[i] = ia * math.exp(both)
        h[i] = ib * math.exp(both)
    return g, h


def _i2_on_grid(m: int, L: float, form: str) -> tuple[float, float]:
    x = np.linspace(-L, L, m)
    g, h = _g_h(x, L, form)
    big_g = integrate.cumulative_simpson(g, x=x, initial=0.0)
    return float(integrate.simpson(h * big_g, x=x)), float(integrate.simpson(g, x=x))


def jump_series(K_max: int = 2, form: str = "derived", L: float = 6.0, grid: int = 1201,
                tol: float = 5e-3) -> JumpSeriesResult:
    """``1 - I_1 (+ I_2)`` where ``I_K`` integrates ``K`` ordered excursions over ``-L < x_1 < ... < x_2K < L``.

    ``I_1`` is a 2-D adaptive quadrature over the wedge. Because the pair weight
    factorises, ``I_2 = int h(c) G(c) dc`` with ``G`` the running integral of
    ``g``; it is evaluated on two nested grids and the difference is the error
    estimate. Raises :class:`AccuracyError` when the combined relative error
    exceeds ``tol``.
    """
    if K_max not in (1, 2):
        raise ValueError("K_max must be 1 or 2")
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    i1, e1 = integrate.dblquad(lambda a, b: float(pair_integrand(a, b, form)), -L, L,
                               lambda b: -L, lambda b: b, epsabs=1e-12, epsrel=1e-10)
    terms, errors = [i1], [e1]
    if K_max == 2:
        fine, _ = _i2_on_grid(2 * grid - 1, L, form)
        coarse, _ = _i2_on_grid(grid, L, form)
        terms.append(fine)
        errors.append(abs(fine - coarse))
    value = 1.0 - terms[0] + (terms[1] if K_max == 2 else 0.0)
    res = JumpSeriesResult(value, tuple(terms), tuple(errors), form, L)
    if res.relative_error > tol:
        raise AccuracyError("jump series quadrature", res.relative_error)
    return res


def jump_series_full(form: str = "derived", L: float = 6.0, grid: int = 2001, K_max: int = 12) -> float:
    """All orders of the series summed on a uniform grid with a trapezoid transfer operator (diagnostic)."""
    x = np.linspace(-L, L, grid)
    w = np.full(grid, x[1] - x[0])
    w[0] = w[-1] = w[0] / 2
    la, lb = _log_alpha(x, form), _log_beta(x, form)
    with np.errstate(over="ignore"):
        pair = np.where(x[:, None] < x[None, :], np.exp(la[:, None] + lb[None, :]), 0.0)
    pair[np.diag_indices(grid)] = 0.5 * np.exp(la + lb)
    g = (w[:, None] * pair).sum(axis=0)
    total, sign = 1.0 - g @ w, 1.0
    for _ in range(2, K_max + 1):
        cum = np.concatenate([[0.0], np.cumsum((g * w)[:-1])]) + 0.5 * g * w
        g = ((cum * w)[:, None] * pair).sum(axis=0)
        total += sign * (g @ w)
        sign = -sign
    return float(total)


@dataclass(frozen=True)
class JumpRates:
    """Finite-N switch amplitudes (per unit ``Delta T``) and dwell exponent at ``T = sqrt(N)(t - r^2)``."""

    plus_to_minus: float
    minus_to_plus: float
    dwell: float


def jump_rates(T: float, r: float, N: float) -> JumpRates:
    """Switch amplitudes ``W^tau_{n+1} . (V^sigma_n - V^sigma_{n+1}) / Delta T`` and the dwell exponent density.

    With ``T_{n+1} = T`` and ``T_n = T - N^{-1/2}``:
    ``+ -> -``: ``(1/(2q)) (1 + (T_n + T_{n+1})/(q_n + q))``,
    ``- -> +``: ``-(1/(2q)) (1 - (T_n + T_{n+1})/(q_n + q))``,
    with ``q = sqrt(T^2 + 4 r^2)``; the dwell exponent is ``q/(r^2 + T/(2 sqrt N)) - 1/q``.
    """
    dt = 1.0 / math.sqrt(N)
    tn = T - dt
    q1 = math.sqrt(T * T + 4 * r * r)
    q0 = math.sqrt(tn * tn + 4 * r * r)
    avg = (tn + T) / (q0 + q1)
    return JumpRates(
        plus_to_minus=(1.0 + avg) / (2.0 * q1),
        minus_to_plus=-(1.0 - avg) / (2.0 * q1),
        dwell=q1 / (r * r + 0.5 * dt * T) - 1.0 / q1,
    )


def dwell_density_x(x: float, r: float, N: float) -> float:
    """Dwell exponent per unit ``x`` after ``T = 2 r sinh(x)``; tends to ``4 cosh^2 x - 1``."""
    T = 2.0 * r * math.sinh(x)
    return jump_rates(T, r, N).dwell * 2.0 * r * math.cosh(x)
