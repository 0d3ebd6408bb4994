"""Biorthogonal eigendecomposition and Monte Carlo estimators of overlap and correlation densities."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import map_chunks, ordered_sum
from .errors import InsufficientSamplesError, InvalidDimensionError, NearDefectiveError
from .sampling import GinibreMatrix, sample_ginibre

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class SpectralDecomp:
    """Eigenvalues with right vectors ``right[:, k]`` and left vectors ``left[:, k]``.

    The left vectors are normalised so that ``left[:, k].conj() @ right[:, j] == delta_jk``.
    """

    eigenvalues: np.ndarray
    right: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)
    condition_estimate: float

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def biorthogonality_residual(self) -> float:
        return float(np.max(np.abs(self.left.conj().T @ self.right - np.eye(self.n))))

    def reconstruct(self) -> np.ndarray:
        return (self.right * self.eigenvalues) @ self.left.conj().T


def eig_biorth(a: GinibreMatrix | np.ndarray, condition_limit: float = CONDITION_LIMIT) -> SpectralDecomp:
    """Eigendecomposition with left vectors taken from the inverse of the right-vector matrix.

    The 1-norm condition number ``||V||_1 ||V^{-1}||_1`` is attached; above
    ``condition_limit`` a :class:`NearDefectiveError` is raised.
    """
    mat = a.entries if isinstance(a, GinibreMatrix) else np.asarray(a, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got shape {mat.shape}")
    lam, vr = np.linalg.eig(mat)
    try:
        inv = np.linalg.inv(vr)
    except np.linalg.LinAlgError:
        raise NearDefectiveError(math.inf) from None
    cond = float(np.linalg.norm(vr, 1) * np.linalg.norm(inv, 1))
    if not np.isfinite(cond) or cond > condition_limit:
        raise NearDefectiveError(cond)
    return SpectralDecomp(lam, vr, inv.conj().T, cond)


def overlap_matrix(d: SpectralDecomp) -> np.ndarray:
    """``O[j, k] = <psi_k, psi_j> <phi_j, phi_k>``; the diagonal holds ``||phi_k||^2 ||psi_k||^2``.

    Each row sums to 1 because ``sum_k psi_k phi_k^* = I``.
    """
    g = d.right.conj().T @ d.right   # g[k, j] = psi_k^* psi_j
    h = d.left.conj().T @ d.left     # h[j, k] = phi_j^* phi_k
    return g.T * h


def diag_overlap(d: SpectralDecomp, k: int) -> float:
    return float(np.vdot(d.left[:, k], d.left[:, k]).real * np.vdot(d.right[:, k], d.right[:, k]).real)


def offdiag_overlap(d: SpectralDecomp, j: int, k: int) -> complex:
    if j == k:
        raise ValueError("offdiag_overlap needs j != k")
    return complex(np.vdot(d.right[:, k], d.right[:, j]) * np.vdot(d.left[:, j], d.left[:, k]))


def sum_rule_residual(d: SpectralDecomp) -> float:
    """``max_j |sum_k O[j, k] - 1|``."""
    return float(np.max(np.abs(overlap_matrix(d).sum(axis=1) - 1.0)))


# ---------------------------------------------------------------------------
# radial histograms

def equal_area_edges(r_max: float, bins: int) -> np.ndarray:
    """Radii splitting the disk of radius ``r_max`` into annuli of equal area."""
    return r_max * np.sqrt(np.linspace(0.0, 1.0, bins + 1))


@dataclass
class RadialHistogram:
    """Accumulator of per-eigenvalue weights binned by radius (``coord='r'``) or by ``u = sqrt(n)(1-r)``.

    ``weight`` and ``weight_sq`` hold the sums over samples of per-sample bin
    totals and their squares; ``density`` divides by ``samples`` and the bin's
    area in the complex plane.
    """

    edges: np.ndarray
    n: int
    coord: str = "r"
    weight: np.ndarray = None
    weight_sq: np.ndarray = None
    counts: np.ndarray = None
    samples: int = 0
    discarded: int = 0

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        if self.coord not in ("r", "u"):
            raise ValueError(f"coord must be 'r' or 'u', got {self.coord!r}")
        if np.any(np.diff(self.edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        nb = self.edges.size - 1
        if self.weight is None:
            self.weight = np.zeros(nb)
            self.weight_sq = np.zeros(nb)
            self.counts = np.zeros(nb, dtype=np.int64)

    @property
    def radius_edges(self) -> np.ndarray:
        if self.coord == "r":
            return self.edges
        return 1.0 - self.edges / math.sqrt(self.n)

    @property
    def areas(self) -> np.ndarray:
        r = self.radius_edges
        if self.coord == "u":
            r = np.clip(r, 0.0, None)
        return math.pi * np.abs(np.diff(r**2))

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def coordinate(self, lam: np.ndarray) -> np.ndarray:
        r = np.abs(lam)
        return r if self.coord == "r" else math.sqrt(self.n) * (1.0 - r)

    def add_sample(self, lam: np.ndarray, weights: np.ndarray) -> None:
        x = self.coordinate(lam)
        idx = np.searchsorted(self.edges, x, side="right") - 1
        ok = (idx >= 0) & (idx < self.weight.size)
        per = np.bincount(idx[ok], weights=weights[ok], minlength=self.weight.size)
        self.weight += per
        self.weight_sq += per**2
        self.counts += np.bincount(idx[ok], minlength=self.weight.size)
        self.samples += 1

    def __add__(self, other: "RadialHistogram") -> "RadialHistogram":
        if not np.array_equal(self.edges, other.edges) or self.coord != other.coord or self.n != other.n:
            raise ValueError("cannot merge histograms with different binning")
        return RadialHistogram(self.edges, self.n, self.coord, self.weight + other.weight,
                               self.weight_sq + other.weight_sq, self.counts + other.counts,
                               self.samples + other.samples, self.discarded + other.discarded)

    @property
    def density(self) -> np.ndarray:
        return self.weight / (self.samples * self.areas)

    @property
    def std_error(self) -> np.ndarray:
        s = self.samples
        if s < 2:
            return np.full(self.weight.size, np.nan)
        mean = self.weight / s
        var = np.clip(self.weight_sq / s - mean**2, 0.0, None) * s / (s - 1)
        return np.sqrt(var / s) / self.areas

    @property
    def total_mass(self) -> float:
        return float(self.weight.sum() / self.samples)

    @property
    def discard_fraction(self) -> float:
        total = self.samples + self.discarded
        return self.discarded / total if total else 0.0

    def rows(self) -> list[tuple]:
        """(lower edge, upper edge, density, std error, count) per bin."""
        return [(float(a), float(b), float(d), float(e), int(c)) for a, b, d, e, c in
                zip(self.edges[:-1], self.edges[1:], self.density, self.std_error, self.counts)]


# ---------------------------------------------------------------------------
# pair cells

@dataclass(frozen=True)
class OrbitCell:
    """Pairs with ``|z1|`` in ``r1``, ``|z2|`` in ``r2`` and ``arg z2 - arg z1 (mod 2 pi)`` in ``dtheta``.

    The cell is a union of rotation orbits, so for a rotation-invariant
    pair density the bin average carries no angular smearing in the centre.
    """

    r1: tuple[float, float]
    r2: tuple[float, float]
    dtheta: tuple[float, float]

    @property
    def volume(self) -> float:
        a1 = (self.r1[1] ** 2 - self.r1[0] ** 2) / 2.0
        a2 = (self.r2[1] ** 2 - self.r2[0] ** 2) / 2.0
        return 2.0 * math.pi * a1 * a2 * (self.dtheta[1] - self.dtheta[0])

    @property
    def angular_fraction(self) -> float:
        return (self.dtheta[1] - self.dtheta[0]) / (2.0 * math.pi)

    def members(self, lam: np.ndarray):
        r = np.abs(lam)
        i1 = np.flatnonzero((r >= self.r1[0]) & (r < self.r1[1]))
        i2 = np.flatnonzero((r >= self.r2[0]) & (r < self.r2[1]))
        return i1, i2

    def pair_mask(self, lam: np.ndarray, i1: np.ndarray, i2: np.ndarray) -> np.ndarray:
        dth = np.mod(np.angle(lam[i2])[None, :] - np.angle(lam[i1])[:, None], 2.0 * math.pi)
        return (dth >= self.dtheta[0]) & (dth < self.dtheta[1]) & (i1[:, None] != i2[None, :])

    def center(self) -> tuple[complex, complex]:
        ra = 0.5 * sum(self.r1)
        rb = 0.5 * sum(self.r2)
        return complex(ra), rb * complex(math.cos(0.5 * sum(self.dtheta)), math.sin(0.5 * sum(self.dtheta)))


@dataclass(frozen=True)
class DiscPairCell:
    """Pairs with ``z1`` within ``radius`` of ``c1`` and ``z2`` within ``radius`` of ``c2``."""

    c1: complex
    c2: complex
    radius: float

    @property
    def volume(self) -> float:
        return (math.pi * self.radius**2) ** 2

    @property
    def angular_fraction(self) -> float:
        return float("nan")

    def members(self, lam: np.ndarray):
        i1 = np.flatnonzero(np.abs(lam - self.c1) < self.radius)
        i2 = np.flatnonzero(np.abs(lam - self.c2) < self.radius)
        return i1, i2

    def pair_mask(self, lam, i1, i2) -> np.ndarray:
        return i1[:, None] != i2[None, :]

    def rotated(self, theta: float) -> "DiscPairCell":
        w = complex(math.cos(theta), math.sin(theta))
        return DiscPairCell(self.c1 * w, self.c2 * w, self.radius)

    def center(self) -> tuple[complex, complex]:
        return self.c1, self.c2


@dataclass
class PairHistogram:
    """Complex pair-weight accumulator over a list of cells.

    Also tracks, per cell, the single-point masses of the two marginal regions
    so that the connected part can be formed.
    """

    cells: list
    n: int
    weight: np.ndarray = None
    weight_sq: np.ndarray = None
    marginal1: np.ndarray = None
    marginal2: np.ndarray = None
    counts: np.ndarray = None
    samples: int = 0
    discarded: int = 0

    def __post_init__(self):
        m = len(self.cells)
        if self.weight is None:
            self.weight = np.zeros(m, dtype=complex)
            self.weight_sq = np.zeros(m)
            self.marginal1 = np.zeros(m)
            self.marginal2 = np.zeros(m)
            self.counts = np.zeros(m, dtype=np.int64)

    @property
    def volumes(self) -> np.ndarray:
        return np.array([c.volume for c in self.cells])

    def add_sample(self, lam: np.ndarray, pair_weights: np.ndarray | None, scale: float) -> None:
        """Deposit ``scale * pair_weights[j, k]`` (or ``scale`` when weights are None) for each pair in each cell."""
        for c, cell in enumerate(self.cells):
            i1, i2 = cell.members(lam)
            self.marginal1[c] += i1.size / self.n
            self.marginal2[c] += i2.size / self.n
            if i1.size == 0 or i2.size == 0:
                continue
            mask = cell.pair_mask(lam, i1, i2)
            if pair_weights is None:
                w = complex(mask.sum()) * scale
            else:
                w = complex(np.sum(pair_weights[np.ix_(i1, i2)][mask])) * scale
            self.weight[c] += w
            self.weight_sq[c] += abs(w) ** 2
            self.counts[c] += int(mask.sum())
        self.samples += 1

    def __add__(self, other: "PairHistogram") -> "PairHistogram":
        if self.cells != other.cells or self.n != other.n:
            raise ValueError("cannot merge pair histograms with different cells")
        return PairHistogram(self.cells, self.n, self.weight + other.weight, self.weight_sq + other.weight_sq,
                             self.marginal1 + other.marginal1, self.marginal2 + other.marginal2,
                             self.counts + other.counts, self.samples + other.samples,
                             self.discarded + other.discarded)

    @property
    def density(self) -> np.ndarray:
        return self.weight / (self.samples * self.volumes)

    @property
    def std_error(self) -> np.ndarray:
        s = self.samples
        if s < 2:
            return np.full(len(self.cells), np.nan)
        mean = self.weight / s
        var = np.clip(self.weight_sq / s - np.abs(mean) ** 2, 0.0, None) * s / (s - 1)
        return np.sqrt(var / s) / self.volumes

    def product_density(self) -> np.ndarray:
        """Cell average of ``R1(z1) R1(z2)`` from the marginal masses."""
        s = self.samples
        out = np.empty(len(self.cells))
        for c, cell in enumerate(self.cells):
            m = (self.marginal1[c] / s) * (self.marginal2[c] / s)
            if isinstance(cell, OrbitCell):
                m *= cell.angular_fraction
            out[c] = m / cell.volume
        return out

    @property
    def discard_fraction(self) -> float:
        total = self.samples + self.discarded
        return self.discarded / total if total else 0.0

    def rows(self) -> list[tuple]:
        """(cell index, centre 1, centre 2, Re density, Im density, std error, pair count) per cell."""
        out = []
        for c, cell in enumerate(self.cells):
            z1, z2 = cell.center()
            d = self.density[c]
            out.append((c, z1, z2, float(d.real), float(d.imag), float(self.std_error[c]), int(self.counts[c])))
        return out


# ---------------------------------------------------------------------------
# estimators

def _check_samples(samples: int) -> None:
    if samples < 1:
        raise InsufficientSamplesError(f"need at least one sample, got {samples}")


def _radial_run(n, samples, seed, edges, coord, overlap, threads) -> RadialHistogram:
    _check_samples(samples)

    def work(idx: range) -> RadialHistogram:
        h = RadialHistogram(edges, n, coord)
        for i in idx:
            a = sample_ginibre(n, seed, i)
            if overlap:
                try:
                    d = eig_biorth(a)
                except NearDefectiveError:
                    h.discarded += 1
                    continue
                lam = d.eigenvalues
                w = (np.sum(np.abs(d.left) ** 2, axis=0) * np.sum(np.abs(d.right) ** 2, axis=0)) / n
            else:
                lam = np.linalg.eigvals(a.entries)
                w = np.full(n, 1.0 / n)
            h.add_sample(lam, w)
        return h

    return ordered_sum(map_chunks(work, samples, threads))


def estimate_r1(n: int, samples: int, seed: int, bins, threads: int = 1) -> RadialHistogram:
    """Eigenvalue density; each eigenvalue deposits ``1/n``. ``bins`` is an edge array or a bin count on [0, 1.5]."""
    edges = equal_area_edges(1.5, bins) if np.isscalar(bins) else bins
    return _radial_run(n, samples, seed, edges, "r", False, threads)


def estimate_o1(n: int, samples: int, seed: int, bins, threads: int = 1) -> RadialHistogram:
    """Diagonal overlap density; each eigenvalue deposits ``O_kk / n``."""
    edges = equal_area_edges(1.5, bins) if np.isscalar(bins) else bins
    return _radial_run(n, samples, seed, edges, "r", True, threads)


def edge_profile(n: int, samples: int, seed: int, u_bins, quantity: str = "r1",
                 threads: int = 1) -> RadialHistogram:
    """R1 (``quantity='r1'``) or O1 (``'o1'``) density binned in ``u = sqrt(n)(1-|z|)``."""
    if quantity not in ("r1", "o1"):
        raise ValueError(f"quantity must be 'r1' or 'o1', got {quantity!r}")
    return _radial_run(n, samples, seed, np.asarray(u_bins, dtype=float), "u", quantity == "o1", threads)


def _pair_run(n, samples, seed, cells, overlap, threads) -> PairHistogram:
    _check_samples(samples)

    def work(idx: range) -> PairHistogram:
        h = PairHistogram(list(cells), n)
        for i in idx:
            a = sample_ginibre(n, seed, i)
            if overlap:
                try:
                    d = eig_biorth(a)
                except NearDefectiveError:
                    h.discarded += 1
                    continue
                h.add_sample(d.eigenvalues, overlap_matrix(d), 1.0 / n)
            else:
                h.add_sample(np.linalg.eigvals(a.entries), None, 1.0 / n**2)
        return h

    return ordered_sum(map_chunks(work, samples, threads))


def estimate_o2(n: int, samples: int, seed: int, cells, threads: int = 1) -> PairHistogram:
    """Off-diagonal overlap density; ordered pairs ``j != k`` deposit ``O[j, k] / n``."""
    return _pair_run(n, samples, seed, cells, True, threads)


def estimate_r2(n: int, samples: int, seed: int, cells, threads: int = 1) -> PairHistogram:
    """Two-point eigenvalue density normalised like the determinantal kernel (``1/n^2`` per ordered pair)."""
    return _pair_run(n, samples, seed, cells, False, threads)


def estimate_c2(n: int, samples: int, seed: int, cells, threads: int = 1) -> tuple[np.ndarray, PairHistogram]:
    """Connected two-point density ``R2 - R1 R1`` per cell, with the underlying R2 histogram."""
    h = estimate_r2(n, samples, seed, cells, threads)
    return h.density.real - h.product_density(), h


def rotation_chi2(n: int, samples: int, seed: int, cells: list[DiscPairCell], theta: float,
                  threads: int = 1) -> tuple[float, int]:
    """Chi-square statistic comparing O2 cell estimates with the same cells rotated by ``theta``.

    Both estimates use the same matrices, so the test checks invariance of the
    law rather than of individual samples; returns (chi2, degrees of freedom).
    """
    rotated = [c.rotated(theta) for c in cells]
    h = estimate_o2(n, samples, seed, list(cells) + rotated, threads)
    m = len(cells)
    a, b = h.density[:m], h.density[m:]
    ea, eb = h.std_error[:m], h.std_error[m:]
    var = ea**2 + eb**2
    chi2 = float(np.sum(np.abs(a - b) ** 2 / (var / 2.0)))
    return chi2, 2 * m


def histogram_csv_rows(h: RadialHistogram) -> list[list]:
    return [["lower", "upper", "density", "std_error", "count"]] + [list(r) for r in h.rows()]
