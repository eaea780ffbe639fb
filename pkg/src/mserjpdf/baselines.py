"""Reference receivers: full-rank LMS, full-rank minimum-SER SG, matched filter."""

from __future__ import annotations

import math

import numpy as np

from .adapt import _qam_gradient
from .errors import DegenerateChannelError

__all__ = [
    "lms_update",
    "mser_fullrank_update_bpsk",
    "mser_fullrank_update_qam",
    "matched_filter",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def lms_update(w: np.ndarray, r: np.ndarray, b0: complex, mu: float) -> np.ndarray:
    """Standard MMSE-LMS step: e = b0 - w^H r; w <- w + mu e* r."""
    e = b0 - np.vdot(w, r)
    return w + mu * np.conj(e) * r


def mser_fullrank_update_bpsk(
    w: np.ndarray, r: np.ndarray, b0: complex, rho: float, mu: float
) -> np.ndarray:
    """Full-rank minimum-SER step for BPSK (identity projection)."""
    x = complex(np.vdot(w, r))
    s = 1.0 if complex(b0).real >= 0 else -1.0
    g = -s * math.exp(-(x.real**2) / (2.0 * rho**2)) / (_SQRT_2PI * rho) * r
    return w - mu * g


def mser_fullrank_update_qam(
    w: np.ndarray,
    r: np.ndarray,
    h00: np.ndarray,
    b0: complex,
    rho: float,
    mu: float,
    m: int,
) -> tuple[np.ndarray, float]:
    """Full-rank minimum-SER step for QAM, followed by phase rotation of w.

    Returns the updated filter and the (real, positive) desired-symbol gain.
    """
    b0 = complex(b0)
    x = complex(np.vdot(w, r))
    omega = complex(np.vdot(w, h00)).real
    g = _qam_gradient(x, omega, b0, rho, m, r, h00)
    w_new = w - mu * g
    omega_new = complex(np.vdot(w_new, h00))
    mag = abs(omega_new)
    if mag == 0.0:
        raise DegenerateChannelError("desired-symbol gain is zero; rotation undefined")
    return (omega_new / mag) * w_new, mag


def matched_filter(h00: np.ndarray, r: np.ndarray) -> complex:
    """Normalized matched-filter output h00^H r / ||h00||^2."""
    energy = float(np.vdot(h00, h00).real)
    if energy == 0.0:
        raise DegenerateChannelError("zero channel vector")
    return complex(np.vdot(h00, r)) / energy
