"""Limiting mixed moments as counts of spin-constrained non-crossing matchings."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

from .sampling import MomentSignature

SpinCircle = tuple[int, ...]


@dataclass(frozen=True)
class PinchPair:
    left: SpinCircle
    right: SpinCircle


def spin_circle(sig: MomentSignature) -> SpinCircle:
    """``(+1)^p1 (-1)^q1 ... (+1)^pk (-1)^qk`` read around a circle."""
    spins: list[int] = []
    for p, q in zip(sig.p, sig.q):
        spins.extend([1] * p)
        spins.extend([-1] * q)
    return tuple(spins)


def pinch_pairs(spins: SpinCircle) -> list[PinchPair]:
    """Match the first +1 with each -1 in turn and split the circle into the two remaining arcs.

    ``left`` is the arc strictly after the +1 and before the -1 (going forward),
    ``right`` the arc after the -1 wrapping back to the +1.
    """
    spins = tuple(spins)
    try:
        first = spins.index(1)
    except ValueError:
        return []
    pairs = []
    R = len(spins)
    for step in range(1, R):
        j = (first + step) % R
        if spins[j] != -1:
            continue
        left = tuple(spins[(first + s) % R] for s in range(1, step))
        right = tuple(spins[(j + s) % R] for s in range(1, R - step))
        pairs.append(PinchPair(left, right))
    return pairs


def count_constrained_ncm(spins: SpinCircle) -> int:
    """Number of non-crossing perfect matchings joining +1 to -1 only.

    Interval dynamic programme on the circle cut open at vertex 0; exact integers.
    """
    spins = tuple(spins)
    R = len(spins)
    if R == 0:
        return 1
    if R % 2 or sum(spins) != 0:
        return 0
    # cnt[i][j]: matchings of the segment spins[i:j] (half-open); empty segments count 1
    cnt = [[0] * (R + 1) for _ in range(R + 1)]
    for i in range(R + 1):
        cnt[i][i] = 1
    for length in range(2, R + 1, 2):
        for i in range(0, R - length + 1):
            j = i + length
            total = 0
            for m in range(i + 1, j, 2):
                if spins[i] != spins[m]:
                    inner = cnt[i + 1][m]
                    if inner:
                        total += inner * cnt[m + 1][j]
            cnt[i][j] = total
    return cnt[0][R]


def _perfect_matchings(points: tuple[int, ...]):
    if not points:
        yield ()
        return
    a = points[0]
    for idx in range(1, len(points)):
        b = points[idx]
        rest = points[1:idx] + points[idx + 1:]
        for m in _perfect_matchings(rest):
            yield ((a, b),) + m


def _crossing(c1: tuple[int, int], c2: tuple[int, int]) -> bool:
    a, b = c1
    c, d = c2
    return a < c < b < d or c < a < d < b


def brute_force_count(spins: SpinCircle) -> int:
    """Exhaustive count over all (R-1)!! perfect matchings; for cross-checking only."""
    spins = tuple(spins)
    R = len(spins)
    if R % 2:
        return 0
    total = 0
    for m in _perfect_matchings(tuple(range(R))):
        if any(spins[a] == spins[b] for a, b in m):
            continue
        if any(_crossing(x, y) for x, y in itertools.combinations(m, 2)):
            continue
        total += 1
    return total


def catalan(m: int) -> int:
    if m < 0:
        raise ValueError("catalan index must be nonnegative")
    return math.comb(2 * m, m) // (m + 1)


@lru_cache(maxsize=None)
def limiting_moment_spins(spins: SpinCircle) -> int:
    return count_constrained_ncm(spins)


def limiting_moment(sig: MomentSignature) -> int:
    """Large-n limit of the expected mixed moment."""
    return limiting_moment_spins(spin_circle(sig))


def pinch_recursion_value(spins: SpinCircle) -> int:
    """Right-hand side of the pinching recursion: sum over pinch pairs of count(left) * count(right)."""
    return sum(count_constrained_ncm(pp.left) * count_constrained_ncm(pp.right) for pp in pinch_pairs(spins))


def balanced_spin_circles(R: int):
    """All +-1 sequences of even length R with equal numbers of each sign."""
    for plus in itertools.combinations(range(R), R // 2):
        s = [-1] * R
        for i in plus:
            s[i] = 1
        yield tuple(s)
