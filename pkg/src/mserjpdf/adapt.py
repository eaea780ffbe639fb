"""Minimum-SER stochastic-gradient adaptation of the branch filters.

Implements the single-sample kernel SER estimates, their analytic gradients
with respect to the reduced-rank filter and the preprocessor, the two-stage
per-symbol updates (preprocessor first, then filter), the QAM phase-rotation
bookkeeping that keeps the desired-symbol gain real and positive, and the
automatic rank/length selection over a (D, I) search rectangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constellations import quantize_bpsk
from .core import Branch, _hankel_view, d_hermitian_apply, scatter_weights
from .errors import ConfigError, DegenerateChannelError

__all__ = [
    "AdaptConfig",
    "AutoSelectConfig",
    "AutoSelectResult",
    "kernel_width",
    "ser_estimate_bpsk",
    "ser_estimate_qam",
    "qam_phi",
    "grad_bpsk",
    "update_bpsk",
    "qam_phase_rotate",
    "desired_gain",
    "grad_qam",
    "update_qam",
    "auto_select",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_SQRT_2 = math.sqrt(2.0)


@dataclass(frozen=True)
class AdaptConfig:
    """Step sizes and kernel width of the stochastic-gradient recursions."""

    mu_w: float
    mu_p: float
    rho: float

    def __post_init__(self):
        if self.mu_w < 0 or self.mu_p < 0:
            raise ConfigError("step sizes must be >= 0")
        if self.rho <= 0:
            raise ConfigError("kernel width rho must be > 0")


def kernel_width(noise_var: float) -> float:
    """Default Parzen kernel width: 1.06 times the noise standard deviation."""
    if noise_var <= 0:
        raise ConfigError("kernel width undefined for noise_var <= 0; set rho explicitly")
    return 1.06 * math.sqrt(noise_var)


# ---------------------------------------------------------------------------
# BPSK
# ---------------------------------------------------------------------------


def ser_estimate_bpsk(x: complex, b0: complex, rho: float) -> float:
    """Single-sample SER estimate 0.5*erfc(Re[x]*sign(b0) / (sqrt(2)*rho))."""
    s = 1.0 if complex(b0).real >= 0 else -1.0
    return 0.5 * math.erfc(complex(x).real * s / (_SQRT_2 * rho))


def _bpsk_scale(x: complex, b0: complex, rho: float) -> float:
    """Common scalar factor of both BPSK gradients (sign and kernel weight)."""
    s = 1.0 if complex(b0).real >= 0 else -1.0
    return -s * math.exp(-(x.real**2) / (2.0 * rho**2)) / (_SQRT_2PI * rho)


def grad_bpsk(
    br: Branch, R: np.ndarray, r: np.ndarray, b0: complex, rho: float
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of the BPSK SER estimate w.r.t. (w*, p*).

    gw is proportional to the decimated preprocessed data T P^H r; gp to
    D^H r with D the equivalent Toeplitz matrix built from the current w.
    """
    lp = r.shape[0]
    rbar = (R @ np.conj(br.p))[br.offsets]
    x = complex(np.vdot(br.w, rbar))
    c = _bpsk_scale(x, b0, rho)
    gw = c * rbar
    d = scatter_weights(br.w, br.offsets, lp)
    gp = c * d_hermitian_apply(d, r, len(br.p))
    return gw, gp


def update_bpsk(
    br: Branch, R: np.ndarray, r: np.ndarray, b0: complex, cfg: AdaptConfig
) -> Branch:
    """One BPSK adaptation step: preprocessor with the old filter, then the
    filter with the new preprocessor. The ordering is normative."""
    _, gp = grad_bpsk(br, R, r, b0, cfg.rho)
    p_new = br.p - cfg.mu_p * gp
    br_mid = Branch(p=p_new, w=br.w, offsets=br.offsets)
    gw, _ = grad_bpsk(br_mid, R, r, b0, cfg.rho)
    return Branch(p=p_new, w=br.w - cfg.mu_w * gw, offsets=br.offsets)


# ---------------------------------------------------------------------------
# QAM
# ---------------------------------------------------------------------------


def qam_phi(m: int) -> float:
    """Per-axis SER weighting (2*sqrt(M)-2)/sqrt(M) of the square constellation."""
    root = math.isqrt(m)
    return (2.0 * root - 2.0) / root


def desired_gain(br: Branch, h00: np.ndarray) -> complex:
    """Desired-symbol gain w00 = w^H T P^H h00 of the branch."""
    hbar = (_hankel_view(h00, len(br.p)) @ np.conj(br.p))[br.offsets]
    return complex(np.vdot(br.w, hbar))


def qam_phase_rotate(
    br: Branch, h00: np.ndarray, which: str
) -> tuple[Branch, float]:
    """Rotate w or p by the phase of the desired-symbol gain.

    Afterwards the recomputed gain is real and positive; branch output
    magnitudes are unchanged. Returns the rotated branch and the gain.
    """
    omega = desired_gain(br, h00)
    mag = abs(omega)
    if mag == 0.0:
        raise DegenerateChannelError("desired-symbol gain is zero; rotation undefined")
    phase = omega / mag
    if which == "w":
        return Branch(p=br.p, w=phase * br.w, offsets=br.offsets), mag
    if which == "p":
        return Branch(p=phase * br.p, w=br.w, offsets=br.offsets), mag
    raise ValueError("which must be 'w' or 'p'")


def _edge_levels(m: int) -> tuple[float, float]:
    """Lowest and highest per-axis amplitude levels of the square constellation."""
    root = math.isqrt(m)
    return float(1 - root), float(root - 1.0)


def _axis_error(v: float, level: float, w00: float, rho: float, m: int) -> float:
    """Kernel estimate of one axis' decision-error probability.

    The transmitted level's decision region spans (w00*(level-1), w00*(level+1)];
    each existing boundary contributes the tail mass of a Gaussian kernel
    centred on the axis output ``v``. Edge levels have a single boundary.
    """
    lo, hi = _edge_levels(m)
    phi = qam_phi(m)
    p = 0.0
    if level > lo:  # mass escaping below the lower boundary
        p += 0.5 * phi * math.erfc((v - w00 * (level - 1.0)) / (_SQRT_2 * rho))
    if level < hi:  # mass escaping above the upper boundary
        p += 0.5 * phi * math.erfc((w00 * (level + 1.0) - v) / (_SQRT_2 * rho))
    return p


def ser_estimate_qam(
    x: complex, w00: float, b0: complex, rho: float, m: int
) -> float:
    """Upper bound on the QAM SER: sum of the per-axis error probabilities.

    Assumes the desired-symbol gain ``w00`` is real positive (post-rotation).
    """
    b0 = complex(b0)
    x = complex(x)
    return _axis_error(x.real, b0.real, w00, rho, m) + _axis_error(
        x.imag, b0.imag, w00, rho, m
    )


def _axis_scales(
    v: float, level: float, omega: float, rho: float, m: int
) -> tuple[float, float]:
    """Kernel-weighted factors of one axis' (lower, upper) boundary gradients."""
    lo, hi = _edge_levels(m)
    c = qam_phi(m) / (_SQRT_2PI * rho)
    c_lo = c_hi = 0.0
    if level > lo:
        a = omega * (level - 1.0) - v
        c_lo = c * math.exp(-(a**2) / (2.0 * rho**2))
    if level < hi:
        a = omega * (level + 1.0) - v
        c_hi = c * math.exp(-(a**2) / (2.0 * rho**2))
    return c_lo, c_hi


def _qam_gradient(
    x: complex,
    omega: float,
    b0: complex,
    rho: float,
    m: int,
    rvec: np.ndarray,
    hvec: np.ndarray,
) -> np.ndarray:
    """Combined gradient of both axes' error estimates.

    ``rvec``/``hvec`` are the received data and the desired signature mapped
    into the coordinate system of the variable being adapted. Each decision
    boundary contributes a term pushing the output away from that boundary,
    into the transmitted symbol's region.
    """
    b0 = complex(b0)
    r_lo, r_hi = _axis_scales(x.real, b0.real, omega, rho, m)
    i_lo, i_hi = _axis_scales(x.imag, b0.imag, omega, rho, m)
    g = np.zeros_like(rvec)
    if r_lo:
        g = g + r_lo * ((b0.real - 1.0) * hvec - rvec)
    if r_hi:
        g = g + r_hi * (rvec - (b0.real + 1.0) * hvec)
    if i_lo:
        g = g + i_lo * (1j * rvec + (b0.imag - 1.0) * hvec)
    if i_hi:
        g = g + i_hi * (-1j * rvec - (b0.imag + 1.0) * hvec)
    return g


def grad_qam(
    br: Branch,
    R: np.ndarray,
    r: np.ndarray,
    h00: np.ndarray,
    b0: complex,
    rho: float,
    m: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of the per-axis QAM SER bound w.r.t. (w*, p*).

    Uses the current (post-rotation) real desired-symbol gain; for example
    the real-axis lower-boundary term weights (Re[b0]-1)h00 - r.
    """
    lp = r.shape[0]
    i_len = len(br.p)
    pc = np.conj(br.p)
    rbar = (R @ pc)[br.offsets]
    hbar = (_hankel_view(h00, i_len) @ pc)[br.offsets]
    x = complex(np.vdot(br.w, rbar))
    omega = complex(np.vdot(br.w, hbar)).real
    gw = _qam_gradient(x, omega, complex(b0), rho, m, rbar, hbar)
    d = scatter_weights(br.w, br.offsets, lp)
    dr = d_hermitian_apply(d, r, i_len)
    dh = d_hermitian_apply(d, h00, i_len)
    gp = _qam_gradient(x, omega, complex(b0), rho, m, dr, dh)
    return gw, gp


def update_qam(
    br: Branch,
    R: np.ndarray,
    r: np.ndarray,
    h00: np.ndarray,
    b0: complex,
    cfg: AdaptConfig,
    m: int,
) -> Branch:
    """One QAM adaptation step with interleaved phase rotations.

    Order: preprocessor update, rotate p (gain via the equivalent Toeplitz
    matrix of the old filter), filter update with the new preprocessor,
    rotate w. After the step the desired-symbol gain is real positive.
    """
    lp = r.shape[0]
    i_len = len(br.p)
    _, gp = grad_qam(br, R, r, h00, complex(b0), cfg.rho, m)
    p_new = br.p - cfg.mu_p * gp
    # Rotate p using the gain p_new^H D^H h00 with D built from the old filter.
    d = scatter_weights(br.w, br.offsets, lp)
    dh = d_hermitian_apply(d, h00, i_len)
    omega = complex(np.vdot(p_new, dh))
    if abs(omega) == 0.0:
        raise DegenerateChannelError("desired-symbol gain is zero; rotation undefined")
    p_new = (omega / abs(omega)) * p_new
    br_mid = Branch(p=p_new, w=br.w, offsets=br.offsets)
    gw, _ = grad_qam(br_mid, R, r, h00, complex(b0), cfg.rho, m)
    w_new = br.w - cfg.mu_w * gw
    br_out = Branch(p=p_new, w=w_new, offsets=br.offsets)
    br_out, _ = qam_phase_rotate(br_out, h00, "w")
    return br_out


# ---------------------------------------------------------------------------
# Automatic (D, I) selection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AutoSelectConfig:
    """Search rectangle for the filter rank and preprocessor length."""

    d_min: int
    d_max: int
    i_min: int
    i_max: int

    def __post_init__(self):
        if not (1 <= self.d_min <= self.d_max):
            raise ConfigError("need 1 <= d_min <= d_max")
        if not (1 <= self.i_min <= self.i_max):
            raise ConfigError("need 1 <= i_min <= i_max")


@dataclass(frozen=True)
class AutoSelectResult:
    """Optimal (D, I) per branch, the winning branch, and its output."""

    dims: list[tuple[int, int]]
    branch: int
    output: complex
    distance: float


def prefix_outputs(br: Branch, R: np.ndarray) -> np.ndarray:
    """Matrix of branch outputs for every prefix pair: entry [D-1, I-1] is the
    output using the first D filter taps and the first I preprocessor taps."""
    # Partial sums over preprocessor taps, then over filter taps.
    m = R[br.offsets, :] * np.conj(br.p)[None, :]
    s = np.cumsum(m, axis=1)
    return np.cumsum(np.conj(br.w)[:, None] * s, axis=0)


def auto_select(
    branches: list[Branch], R: np.ndarray, b0: complex, cfg: AutoSelectConfig
) -> AutoSelectResult:
    """Choose per-branch (D, I) and then the best branch by Euclidean distance.

    Every branch is adapted at full size (d_max taps, i_max-long
    preprocessor); candidates use length-D and length-I prefixes, with the
    candidate decimation pattern the row prefix of the full-size pattern.
    Ties prefer smaller D, then smaller I; branch ties the lowest index.
    """
    if not branches:
        raise ConfigError("need at least one branch")
    for br in branches:
        if len(br.w) < cfg.d_max or len(br.p) < cfg.i_max:
            raise ConfigError("branch filters shorter than the search rectangle")
    dims: list[tuple[int, int]] = []
    best = None
    for l, br in enumerate(branches):
        x_all = prefix_outputs(br, R)
        window = x_all[cfg.d_min - 1 : cfg.d_max, cfg.i_min - 1 : cfg.i_max]
        eps = np.abs(b0 - window)
        flat = int(np.argmin(eps))
        di, ii = divmod(flat, window.shape[1])
        dims.append((cfg.d_min + di, cfg.i_min + ii))
        cand = (float(eps[di, ii]), l, complex(window[di, ii]))
        if best is None or cand[0] < best[0]:
            best = cand
    return AutoSelectResult(dims=dims, branch=best[1], output=best[2], distance=best[0])
