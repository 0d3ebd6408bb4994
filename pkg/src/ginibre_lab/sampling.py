"""Complex Ginibre sampling, mixed matrix moments and their Monte Carlo estimates."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from ._parallel import map_chunks
from .errors import InsufficientSamplesError, InvalidDimensionError, SignatureError


@dataclass(frozen=True)
class MomentSignature:
    """Exponent vectors of the word ``A^p1 (A*)^q1 ... A^pk (A*)^qk``."""

    p: tuple[int, ...]
    q: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(int(v) for v in self.p))
        object.__setattr__(self, "q", tuple(int(v) for v in self.q))
        if len(self.p) != len(self.q) or not self.p:
            raise SignatureError(f"p and q must have equal positive length, got {self.p} and {self.q}")
        if any(v < 0 for v in self.p + self.q):
            raise SignatureError("exponents must be nonnegative")

    @property
    def k(self) -> int:
        return len(self.p)

    @property
    def degree(self) -> int:
        return sum(self.p) + sum(self.q)

    @property
    def balanced(self) -> bool:
        return sum(self.p) == sum(self.q)

    @classmethod
    def parse(cls, text: str) -> "MomentSignature":
        """Parse ``"(p1,...,pk);(q1,...,qk)"``."""
        m = re.fullmatch(r"\s*\(([^()]*)\)\s*;\s*\(([^()]*)\)\s*", text)
        if m is None:
            raise SignatureError(f"cannot parse signature {text!r}; expected '(p1,...);(q1,...)'")
        try:
            p = tuple(int(v) for v in m.group(1).split(","))
            q = tuple(int(v) for v in m.group(2).split(","))
        except ValueError as exc:
            raise SignatureError(f"non-integer exponent in {text!r}") from exc
        return cls(p, q)

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.p)) + ");(" + ",".join(map(str, self.q)) + ")"


@dataclass(frozen=True)
class GinibreMatrix:
    n: int
    entries: np.ndarray = field(repr=False)
    seed: int
    sample_index: int


@dataclass(frozen=True)
class MomentEstimate:
    mean: complex
    std_error: float
    samples: int
    n: int
    variance: float = float("nan")


def sample_rng(seed: int, sample_index: int) -> np.random.Generator:
    """Independent generator for one sample, keyed by ``(seed, sample_index)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(sample_index,))))


def sample_ginibre(n: int, seed: int, sample_index: int = 0) -> GinibreMatrix:
    """Draw ``a(j,k) = (X + iY)/sqrt(2n)`` with X, Y independent standard normals."""
    if n < 1:
        raise InvalidDimensionError(f"matrix dimension must be positive, got {n}")
    rng = sample_rng(seed, sample_index)
    x = rng.standard_normal((n, n))
    y = rng.standard_normal((n, n))
    return GinibreMatrix(n, (x + 1j * y) / np.sqrt(2 * n), seed, sample_index)


def _word_product(a: np.ndarray, sig: MomentSignature) -> list[np.ndarray]:
    ah = a.conj().T
    powers: dict[tuple[bool, int], np.ndarray] = {}

    def power(adjoint: bool, e: int) -> np.ndarray:
        key = (adjoint, e)
        if key not in powers:
            base = ah if adjoint else a
            mat = base
            for _ in range(e - 1):
                mat = mat @ base
            powers[key] = mat
        return powers[key]

    factors = []
    for pi, qi in zip(sig.p, sig.q):
        if pi:
            factors.append(power(False, pi))
        if qi:
            factors.append(power(True, qi))
    return factors


def mixed_moment(a: GinibreMatrix | np.ndarray, sig: MomentSignature) -> complex:
    """``(1/n) tr[A^p1 (A*)^q1 ... A^pk (A*)^qk]`` by repeated multiplication."""
    mat = a.entries if isinstance(a, GinibreMatrix) else np.asarray(a)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got shape {mat.shape}")
    n = mat.shape[0]
    factors = _word_product(mat, sig)
    if not factors:
        return complex(1.0)
    if len(factors) == 1:
        return complex(np.trace(factors[0]) / n)
    half = len(factors) // 2
    left = factors[0]
    for f in factors[1:half]:
        left = left @ f
    right = factors[half]
    for f in factors[half + 1:]:
        right = right @ f
    # tr(LR) without forming LR
    return complex(np.sum(left * right.T) / n)


def moment_samples(n: int, sigs: list[MomentSignature], samples: int, seed: int,
                   threads: int = 1) -> np.ndarray:
    """Per-sample moments, shape ``(samples, len(sigs))``; row i uses sample index i."""

    def work(idx: range) -> np.ndarray:
        out = np.empty((len(idx), len(sigs)), dtype=complex)
        for row, i in enumerate(idx):
            a = sample_ginibre(n, seed, i)
            for col, sig in enumerate(sigs):
                out[row, col] = mixed_moment(a, sig)
        return out

    return np.concatenate(map_chunks(work, samples, threads))


def _estimate(values: np.ndarray, n: int) -> MomentEstimate:
    s = values.size
    mean = complex(values.mean())
    var = float(np.sum(np.abs(values - mean) ** 2) / (s - 1))
    return MomentEstimate(mean, float(np.sqrt(var / s)), s, n, var)


def mc_moments(n: int, sigs: list[MomentSignature], samples: int, seed: int,
               threads: int = 1) -> list[MomentEstimate]:
    """Monte Carlo estimates of several moments from one shared set of matrices."""
    if samples < 2:
        raise InsufficientSamplesError(f"need at least 2 samples for an error bar, got {samples}")
    vals = moment_samples(n, sigs, samples, seed, threads)
    return [_estimate(vals[:, j], n) for j in range(len(sigs))]


def mc_moment(n: int, sig: MomentSignature, samples: int, seed: int, threads: int = 1) -> MomentEstimate:
    return mc_moments(n, [sig], samples, seed, threads)[0]


def com_variance_scan(sig: MomentSignature, n_list: list[int], samples: int, seed: int,
                      threads: int = 1) -> list[tuple[int, float]]:
    """Empirical variance of ``M_n(sig)`` for each ``n``; the decay is the concentration diagnostic."""
    if list(n_list) != sorted(n_list):
        raise ValueError("n_list must be ascending")
    out = []
    for n in n_list:
        est = mc_moment(n, sig, samples, seed, threads)
        out.append((n, est.variance))
    return out
