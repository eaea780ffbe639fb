"""Time-varying multipath MIMO channel simulation.

Generates Clarke-model fading tap series for every (user, antenna, path)
triple, assembles the banded block channel matrix for a window of P symbols,
and synthesizes the stacked LP-dimensional received vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "ChannelConfig",
    "ChannelRealization",
    "vehicular_a_profile",
    "clarke_gain_series",
    "generate_realization",
    "build_channel_matrix",
    "desired_signature",
    "synthesize_received",
    "antenna_sample_series",
    "received_vector",
]

# Truncated UMTS Vehicular A relative tap powers in dB (first three
# symbol-spaced taps), renormalized to unit total power at load time.
VEHICULAR_A_DB = (0.0, -1.0, -9.0)


def vehicular_a_profile(lp: int = 3) -> tuple[float, ...]:
    """Unit-power multipath profile from the truncated Vehicular A taps."""
    if lp > len(VEHICULAR_A_DB):
        raise ConfigError(f"profile defined for up to {len(VEHICULAR_A_DB)} taps")
    lin = np.array([10.0 ** (db / 10.0) for db in VEHICULAR_A_DB[:lp]])
    lin /= lin.sum()
    return tuple(lin)


@dataclass(frozen=True)
class ChannelConfig:
    """Physical-layer dimensions and statistics of the simulated link.

    ``profile`` holds the relative linear powers of the ``Lp`` paths and must
    sum to one; each (user, antenna) channel then has unit average power.
    """

    K: int
    L: int
    P: int
    Lp: int
    fd_ts: float
    profile: tuple[float, ...] = field(default_factory=vehicular_a_profile)
    noise_var: float = 0.0
    seed: int = 0

    def __post_init__(self):
        problems = []
        for name in ("K", "L", "P", "Lp"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if self.fd_ts < 0:
            problems.append("fd_ts must be >= 0")
        if self.noise_var < 0:
            problems.append("noise_var must be >= 0")
        if len(self.profile) != self.Lp:
            problems.append(f"profile must have Lp={self.Lp} entries")
        elif any(v < 0 for v in self.profile):
            problems.append("profile entries must be >= 0")
        elif abs(sum(self.profile) - 1.0) > 1e-12:
            problems.append("profile must sum to 1 within 1e-12")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def dim(self) -> int:
        """Length LP of the stacked received vector."""
        return self.L * self.P

    @property
    def n_taps_per_user(self) -> int:
        """Number of symbol columns per user in the block channel matrix."""
        return self.P + self.Lp - 1


def clarke_gain_series(
    fd_ts: float, n: int, seed, n_sinusoids: int = 64
) -> np.ndarray:
    """Complex Rayleigh-fading gain series with Clarke's autocorrelation.

    Sum of ``n_sinusoids`` complex exponentials with equally spaced arrival
    angles (one random angular offset per series) and i.i.d. random phases.
    The process has unit average power and autocorrelation approximating
    J0(2*pi*fd_ts*lag). ``fd_ts = 0`` yields a constant (but still random
    Rayleigh-distributed) gain.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if fd_ts < 0:
        raise ValueError("fd_ts must be >= 0")
    rng = np.random.default_rng(seed)
    nsin = int(n_sinusoids)
    angles = 2.0 * np.pi * (np.arange(nsin) + rng.uniform()) / nsin
    phases = rng.uniform(0.0, 2.0 * np.pi, nsin)
    if fd_ts == 0.0:
        g = np.exp(1j * phases).sum() / math.sqrt(nsin)
        return np.full(n, g, dtype=complex)
    doppler = 2.0 * np.pi * fd_ts * np.cos(angles)
    # Chunk the (time x sinusoid) outer product to bound peak memory.
    out = np.empty(n, dtype=complex)
    step = max(1, 2**22 // nsin)
    t = np.arange(n, dtype=float)
    for lo in range(0, n, step):
        block = t[lo : lo + step, None] * doppler[None, :] + phases[None, :]
        out[lo : lo + step] = np.exp(1j * block).sum(axis=1)
    out /= math.sqrt(nsin)
    return out


@dataclass(frozen=True)
class ChannelRealization:
    """Per-instant tap gains for all (user, antenna, path) triples.

    ``taps`` has shape (T, K, L, Lp); row ``i + offset`` holds the gains at
    symbol instant ``i``, so instants ``-offset .. T-offset-1`` are covered.
    """

    taps: np.ndarray
    offset: int = 0

    def taps_at(self, i: int) -> np.ndarray:
        """Gains h[k, nu, mu] at symbol instant ``i`` (shape (K, L, Lp))."""
        row = i + self.offset
        if row < 0 or row >= self.taps.shape[0]:
            raise IndexError(f"instant {i} outside realization range")
        return self.taps[row]


def generate_realization(
    cfg: ChannelConfig, n_instants: int, seed, prefix: int | None = None,
    n_sinusoids: int = 64,
) -> ChannelRealization:
    """Generate fading taps covering instants ``-prefix .. n_instants-1``.

    Each (k, nu, mu) series is an independent Clarke process scaled by the
    path profile. ``prefix`` defaults to P-1 so a full observation window is
    available at instant 0.
    """
    if prefix is None:
        prefix = cfg.P - 1
    total = n_instants + prefix
    ss = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    children = ss.spawn(cfg.K * cfg.L * cfg.Lp)
    taps = np.empty((total, cfg.K, cfg.L, cfg.Lp), dtype=complex)
    scales = np.sqrt(np.asarray(cfg.profile))
    idx = 0
    for k in range(cfg.K):
        for nu in range(cfg.L):
            for mu in range(cfg.Lp):
                taps[:, k, nu, mu] = scales[mu] * clarke_gain_series(
                    cfg.fd_ts, total, children[idx], n_sinusoids
                )
                idx += 1
    return ChannelRealization(taps=taps, offset=prefix)


def build_channel_matrix(
    real: ChannelRealization, i: int, cfg: ChannelConfig
) -> np.ndarray:
    """Block channel matrix H(i), shape LP x K(P+Lp-1).

    Sub-block (nu, k) is P x (P+Lp-1) and banded: row p carries the Lp taps
    at instant i-p starting in column p.
    """
    cols_per_user = cfg.n_taps_per_user
    H = np.zeros((cfg.dim, cfg.K * cols_per_user), dtype=complex)
    for p in range(cfg.P):
        taps = real.taps_at(i - p)  # (K, L, Lp)
        for k in range(cfg.K):
            col0 = k * cols_per_user + p
            for nu in range(cfg.L):
                H[nu * cfg.P + p, col0 : col0 + cfg.Lp] = taps[k, nu]
    return H


def desired_signature(
    real: ChannelRealization, i: int, cfg: ChannelConfig
) -> np.ndarray:
    """Desired user's current-symbol channel vector h_{0,0}(i), length LP.

    Equals the first column of the stacked user-0 channel blocks: the only
    nonzero entries sit at the head of each antenna window.
    """
    h = np.zeros(cfg.dim, dtype=complex)
    taps = real.taps_at(i)
    h[:: cfg.P] = taps[0, :, 0]
    return h


def synthesize_received(
    H: np.ndarray, b: np.ndarray, noise_var: float, rng
) -> np.ndarray:
    """r = H b + n with circular complex Gaussian noise of covariance noise_var*I."""
    H = np.asarray(H)
    b = np.asarray(b)
    if H.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch: H is {H.shape}, b has length {b.shape[0]}")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    n = H.shape[0]
    noise = math.sqrt(noise_var / 2.0) * (
        rng.standard_normal(n) + 1j * rng.standard_normal(n)
    )
    return H @ b + noise


def antenna_sample_series(
    real: ChannelRealization,
    symbols: np.ndarray,
    cfg: ChannelConfig,
    rng,
) -> np.ndarray:
    """Per-antenna received sample series, vectorized over time.

    ``symbols`` has shape (K, T + Lp - 1) where T = real.taps.shape[0];
    column ``t + Lp - 1`` of ``symbols`` aligns with taps row ``t``. Returns
    shape (L, T): y[nu, t] = sum_k sum_mu h[t,k,nu,mu] * b_k(t-mu) + noise.

    Equivalent, sample for sample, to stacking ``H(i) b(i)`` per instant
    (verified in tests); this form avoids rebuilding H for every symbol.
    """
    taps = real.taps
    T = taps.shape[0]
    if symbols.shape != (cfg.K, T + cfg.Lp - 1):
        raise ValueError(
            f"symbols must have shape {(cfg.K, T + cfg.Lp - 1)}, got {symbols.shape}"
        )
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    y = np.zeros((cfg.L, T), dtype=complex)
    for mu in range(cfg.Lp):
        # b_k(t - mu) lives at symbols column t + Lp - 1 - mu
        b_shift = symbols[:, cfg.Lp - 1 - mu : cfg.Lp - 1 - mu + T]
        y += np.einsum("tkl,kt->lt", taps[:, :, :, mu], b_shift)
    if cfg.noise_var > 0.0:
        y += math.sqrt(cfg.noise_var / 2.0) * (
            rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
        )
    return y


def received_vector(
    y: np.ndarray, i: int, cfg: ChannelConfig, offset: int
) -> np.ndarray:
    """Stacked LP received vector r(i) from the antenna sample series.

    ``offset`` is the realization prefix (taps row of instant 0). Layout is
    r = [r_0^T, ..., r_{L-1}^T]^T with r_nu = [r_nu(i), ..., r_nu(i-P+1)].
    """
    row = i + offset
    cols = row - np.arange(cfg.P)
    if cols[-1] < 0 or row >= y.shape[1]:
        raise IndexError(f"instant {i} outside sample series range")
    return y[:, cols].reshape(cfg.dim)
