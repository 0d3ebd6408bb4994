"""Overflow-safe numbers stored as (phase, log-magnitude)."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class LogScaled:
    """A value ``phase * exp(log_magnitude)``.

    ``phase`` is a unit complex number (``1.0`` or ``-1.0`` for real values).
    Zero is represented with ``log_magnitude = -inf``.
    """

    log_magnitude: float
    phase: complex = 1.0

    @classmethod
    def from_value(cls, x: complex) -> "LogScaled":
        if x == 0:
            return cls(-math.inf, 1.0)
        if isinstance(x, complex):
            mag = abs(x)
            return cls(math.log(mag), x / mag)
        x = float(x)
        return cls(math.log(abs(x)), math.copysign(1.0, x))

    @property
    def is_real(self) -> bool:
        return not isinstance(self.phase, complex) or self.phase.imag == 0.0

    def __mul__(self, other: "LogScaled | float | complex") -> "LogScaled":
        if not isinstance(other, LogScaled):
            other = LogScaled.from_value(other)
        return LogScaled(self.log_magnitude + other.log_magnitude, self.phase * other.phase)

    __rmul__ = __mul__

    def __truediv__(self, other: "LogScaled | float | complex") -> "LogScaled":
        if not isinstance(other, LogScaled):
            other = LogScaled.from_value(other)
        if other.log_magnitude == -math.inf:
            raise ZeroDivisionError("division by a LogScaled zero")
        phase = self.phase / other.phase
        return LogScaled(self.log_magnitude - other.log_magnitude, phase)

    def __pow__(self, k: int) -> "LogScaled":
        return LogScaled(k * self.log_magnitude, self.phase**k)

    def value(self) -> complex | float:
        """Reconstruct the plain value; raises OverflowError when it does not fit a double."""
        if self.log_magnitude > 709.78:
            raise OverflowError(f"exp({self.log_magnitude}) overflows a double")
        mag = math.exp(self.log_magnitude)
        if self.is_real:
            return float(self.phase.real if isinstance(self.phase, complex) else self.phase) * mag
        return self.phase * mag

    def log(self) -> complex | float:
        """Principal logarithm of the value."""
        if self.is_real and float(self.phase.real if isinstance(self.phase, complex) else self.phase) > 0:
            return self.log_magnitude
        return self.log_magnitude + 1j * cmath.phase(self.phase)

    def __float__(self) -> float:
        v = self.value()
        if isinstance(v, complex):
            raise TypeError("LogScaled value is complex")
        return v
