"""SER estimation, per-symbol arithmetic complexity, and the PCR figure of merit."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "ComplexityReport",
    "SerCurve",
    "complexity",
    "pcr",
    "estimate_ser",
]

ALGORITHMS = ("fullrank-lms", "fullrank-mser", "mser-jio", "mser-mswf", "mser-jpdf", "eig")


@dataclass(frozen=True)
class ComplexityReport:
    """Per-symbol multiplication/addition counts for one algorithm.

    ``order_only`` marks entries reported as an asymptotic order (EIG),
    where the counts are the leading (LP)^3 term.
    """

    algorithm: str
    multiplications: float
    additions: float
    order_only: bool = False


def complexity(
    algorithm: str,
    modulation: str,
    L: int,
    P: int,
    D: int | None = None,
    I: int | None = None,
    B: int | None = None,
) -> ComplexityReport:
    """Closed-form per-symbol operation counts.

    BPSK and QAM have distinct polynomials per algorithm; the reduced-rank
    entries need D (and the branch-structured one also I and B).
    """
    if min(L, P) < 1:
        raise ConfigError("L and P must be positive")
    lp = L * P
    mod = modulation.lower()
    if mod not in ("bpsk", "qam"):
        raise ConfigError(f"unknown modulation {modulation!r}")
    alg = algorithm.lower()
    if alg not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")

    def need(*names):
        vals = {"D": D, "I": I, "B": B}
        missing = [nm for nm in names if vals[nm] is None or vals[nm] < 1]
        if missing:
            raise ConfigError(f"{algorithm} requires positive {', '.join(missing)}")

    if alg == "fullrank-lms":
        mults, adds = 2 * lp + 1, 2 * lp
    elif alg == "fullrank-mser":
        if mod == "bpsk":
            mults, adds = 3 * lp + 1, 2 * lp
        else:
            mults, adds = 6 * lp + 5, 5 * lp
    elif alg == "mser-jio":
        need("D")
        if mod == "bpsk":
            mults = 8 * lp * D + 7 * D + 2 * lp + 9
            adds = 7 * lp * D + 2 * lp - 1
        else:
            mults = 10 * lp * D + 7 * D + 4 * lp + 17
            adds = 9 * lp * D + 4 * lp + 3
    elif alg == "mser-mswf":
        need("D")
        if mod == "bpsk":
            mults = D * lp**2 + 4 * lp * D + 5 * D + lp + 7
            adds = D * lp**2 + 5 * lp * D - 1
        else:
            mults = D * lp**2 + 5 * lp * D + 5 * D + 2 * lp + 11
            adds = D * lp**2 + 6 * lp * D + lp + 1
    elif alg == "mser-jpdf":
        need("D", "I", "B")
        if mod == "bpsk":
            mults = B * I * (lp + 1.5) + B * D * (I + 2) + 6 * B - 0.5 * I**2 * B
            adds = B * I * (lp + 0.5) + B * D * (I + 1) - 0.5 * I**2 * B
        else:
            mults = B * I * (2 * lp + 3) + 2 * B * D * (2 * I + 1) + 8 * B - B * I**2
            adds = 2 * B * I * (lp + 1) + B * D * (4 * I - 1) + 2 * B * lp - B * I**2
    else:  # eig
        mults = adds = float(lp) ** 3
        return ComplexityReport(alg, mults, adds, order_only=True)
    return ComplexityReport(alg, float(mults), float(adds))


def pcr(ser: float, n: int, m: float) -> float:
    """Packet success probability to complexity ratio (1 - SER)^n / m."""
    if not 0.0 <= ser <= 1.0:
        raise ValueError("ser must lie in [0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    if m <= 0:
        raise ZeroDivisionError("m must be > 0")
    return (1.0 - ser) ** n / m


def estimate_ser(decisions, truth) -> tuple[float, float]:
    """Error fraction and its 95% normal-approximation half-width."""
    decisions = np.asarray(decisions)
    truth = np.asarray(truth)
    if decisions.shape != truth.shape or decisions.size == 0:
        raise ValueError("decision and truth lists must be equal-length and non-empty")
    n = decisions.size
    p = float(np.mean(decisions != truth))
    return p, 1.96 * math.sqrt(p * (1.0 - p) / n)


@dataclass
class SerCurve:
    """A metric series over one sweep axis.

    ``points`` holds (x, ser, ci_halfwidth) triples; ``runs`` is the trial
    count behind each point.
    """

    kind: str
    points: list[tuple[float, float, float]] = field(default_factory=list)
    runs: int = 0
    algorithm: str = ""
    seed: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "ser", "ci_halfwidth", "runs", "algorithm", "seed"])
        for x, ser, hw in self.points:
            writer.writerow([repr(float(x)), repr(float(ser)), repr(float(hw)),
                             self.runs, self.algorithm, self.seed])
        return buf.getvalue()
