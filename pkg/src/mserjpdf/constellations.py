"""Symbol alphabets, random symbol sources and decision (quantization) rules.

Supports BPSK and square M-QAM. QAM alphabets are kept raw (per-axis levels
``2n - sqrt(M) - 1``); the average symbol energy is exposed so that callers
can define SNR consistently across constellation orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import ConfigError

__all__ = [
    "Constellation",
    "draw_symbols",
    "quantize_bpsk",
    "quantize_qam",
    "quantize",
]


@dataclass(frozen=True)
class Constellation:
    """A symbol alphabet: BPSK or square M-QAM.

    Attributes
    ----------
    kind : str
        Either ``"bpsk"`` or ``"qam"``.
    M : int
        Alphabet size. 2 for BPSK; a perfect square >= 4 for QAM.
    """

    kind: str
    M: int

    def __post_init__(self):
        if self.kind not in ("bpsk", "qam"):
            raise ConfigError(f"unknown constellation kind {self.kind!r}")
        if self.kind == "bpsk":
            if self.M != 2:
                raise ConfigError("BPSK requires M=2")
        else:
            root = math.isqrt(self.M)
            if self.M < 4 or root * root != self.M:
                raise ConfigError(
                    f"QAM order must be a perfect square >= 4, got M={self.M}"
                )

    @classmethod
    def bpsk(cls) -> "Constellation":
        return cls("bpsk", 2)

    @classmethod
    def qam(cls, m: int) -> "Constellation":
        return cls("qam", m)

    @cached_property
    def levels(self) -> np.ndarray:
        """Per-axis amplitude levels (QAM only): 2n - sqrt(M) - 1, n = 1..sqrt(M)."""
        if self.kind == "bpsk":
            raise ConfigError("BPSK has no per-axis levels")
        root = math.isqrt(self.M)
        return 2.0 * np.arange(1, root + 1) - root - 1.0

    @cached_property
    def points(self) -> np.ndarray:
        """All alphabet points as a flat complex array of length M."""
        if self.kind == "bpsk":
            return np.array([1.0 + 0j, -1.0 + 0j])
        lv = self.levels
        return (lv[:, None] + 1j * lv[None, :]).ravel()

    @cached_property
    def avg_energy(self) -> float:
        """Mean squared magnitude of the alphabet (1 for BPSK, 2(M-1)/3 for QAM)."""
        return float(np.mean(np.abs(self.points) ** 2))


@lru_cache(maxsize=None)
def _qam_levels(m: int) -> np.ndarray:
    return Constellation.qam(m).levels


def draw_symbols(c: Constellation, n: int, seed) -> np.ndarray:
    """Draw ``n`` i.i.d. symbols uniformly from the alphabet.

    Deterministic given ``seed`` (anything accepted by
    ``numpy.random.default_rng``).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, c.M, size=n)
    return c.points[idx]


def quantize_bpsk(x: complex) -> complex:
    """BPSK decision: +1 if Re[x] >= 0 else -1."""
    return 1.0 + 0j if x.real >= 0.0 else -1.0 + 0j


def quantize_qam(x: complex, w00: float, m: int) -> complex:
    """Square-QAM decision with axis thresholds scaled by the desired-symbol gain.

    The real and imaginary parts are mapped independently: level ``F`` wins
    the interval ``(w00*(F-1), w00*(F+1)]``; values exactly at a threshold
    fall in the interval whose upper edge they touch (the lower level).

    ``w00`` must be positive (it is the real desired-symbol gain obtained by
    phase rotation).
    """
    if w00 <= 0.0:
        raise ValueError(f"w00 must be positive (got {w00}); rotation was skipped")
    lv = _qam_levels(m)
    thresholds = w00 * (lv[:-1] + 1.0)
    re = lv[np.searchsorted(thresholds, x.real, side="left")]
    im = lv[np.searchsorted(thresholds, x.imag, side="left")]
    return complex(re, im)


def quantize(c: Constellation, x: complex, w00: float = 1.0) -> complex:
    """Constellation-dispatched decision."""
    if c.kind == "bpsk":
        return quantize_bpsk(x)
    return quantize_qam(x, w00, c.M)
