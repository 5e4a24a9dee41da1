"""Sign / log-magnitude representation of real numbers.

Factors such as ``exp(b**6 / 12)`` or ``p_k(z)**2 / k!`` at large ``N`` leave
the double range long before the quantities they multiply do.  ``LogValue``
carries them as ``sign * exp(log_abs)`` until the final conversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# exp(709.78) is the largest finite double
MAX_LOG = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class LogValue:
    sign: int
    log_abs: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign!r}")
        if math.isnan(self.log_abs):
            raise ValueError("log_abs is NaN")

    @classmethod
    def from_float(cls, x: float) -> LogValue:
        x = float(x)
        if math.isnan(x):
            raise ValueError("cannot represent NaN")
        if x == 0.0:
            return cls(0, -math.inf)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def exp(cls, x: float) -> LogValue:
        """The positive number ``e**x``."""
        return cls(1, float(x))

    def __float__(self) -> float:
        return self.to_float()

    def to_float(self) -> float:
        """Plain float; raises ``OverflowError`` instead of returning inf."""
        if self.sign == 0:
            return 0.0
        if self.log_abs > MAX_LOG:
            raise OverflowError(f"exp({self.log_abs:.6g}) is not representable as a float")
        return self.sign * math.exp(self.log_abs)

    def __mul__(self, other):
        if not isinstance(other, LogValue):
            other = LogValue.from_float(other)
        if self.sign == 0 or other.sign == 0:
            return LogValue(0, -math.inf)
        return LogValue(self.sign * other.sign, self.log_abs + other.log_abs)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, LogValue):
            other = LogValue.from_float(other)
        if other.sign == 0:
            raise ZeroDivisionError("LogValue division by zero")
        if self.sign == 0:
            return self
        return LogValue(self.sign * other.sign, self.log_abs - other.log_abs)

    def __neg__(self):
        return LogValue(-self.sign, self.log_abs)

    def __add__(self, other):
        if not isinstance(other, LogValue):
            other = LogValue.from_float(other)
        return log_sum([self, other])

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, LogValue):
            other = LogValue.from_float(other)
        return log_sum([self, -other])

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("only integer powers are supported")
        if self.sign == 0:
            return LogValue(1, 0.0) if k == 0 else self
        return LogValue(self.sign**k if k >= 0 else self.sign, k * self.log_abs)

    def isclose(self, other: LogValue, rel_tol: float = 1e-12) -> bool:
        if self.sign != other.sign:
            return False
        if self.sign == 0:
            return True
        return abs(self.log_abs - other.log_abs) <= rel_tol


def log_sum(values) -> LogValue:
    """Sum of ``LogValue`` items without leaving the log domain."""
    terms = [v for v in values if v.sign != 0]
    if not terms:
        return LogValue(0, -math.inf)
    ref = max(v.log_abs for v in terms)
    total = math.fsum(v.sign * math.exp(v.log_abs - ref) for v in terms)
    if total == 0.0:
        return LogValue(0, -math.inf)
    return LogValue(1 if total > 0 else -1, ref + math.log(abs(total)))


def signed_logsumexp(signs, logs, axis=0):
    """Array version of :func:`log_sum`: returns ``(sign, log_abs)`` arrays.

    Entries with sign 0 or ``log = -inf`` are ignored.
    """
    signs = np.asarray(signs, dtype=float)
    logs = np.asarray(logs, dtype=float)
    live = (signs != 0) & np.isfinite(logs)
    masked = np.where(live, logs, -np.inf)
    ref = np.max(masked, axis=axis, keepdims=True)
    ref_safe = np.where(np.isfinite(ref), ref, 0.0)
    with np.errstate(invalid="ignore", over="ignore"):
        scaled = np.where(live, signs * np.exp(masked - ref_safe), 0.0)
    total = np.sum(scaled, axis=axis, keepdims=True)
    with np.errstate(divide="ignore"):
        out_log = ref_safe + np.log(np.abs(total))
    out_sign = np.sign(total)
    out_log = np.where(out_sign == 0, -np.inf, out_log)
    return np.squeeze(out_sign, axis=axis), np.squeeze(out_log, axis=axis)


def to_float_array(signs, logs) -> np.ndarray:
    """Convert sign/log arrays to floats, raising on overflow."""
    logs = np.asarray(logs, dtype=float)
    signs = np.asarray(signs, dtype=float)
    if np.any((signs != 0) & (logs > MAX_LOG)):
        raise OverflowError("value exceeds the double range")
    with np.errstate(under="ignore"):
        return np.where(signs == 0, 0.0, signs * np.exp(np.minimum(logs, MAX_LOG)))
