"""Branch machinery for the joint preprocessing-decimation-filtering receiver.

A branch applies a short FIR preprocessor (as a Toeplitz convolution), keeps
D of the LP preprocessed samples at pre-stored offsets, and filters the
result with a D-tap reduced-rank weight vector. Three algebraically
equivalent forms of the branch output are exposed; their agreement is the
core correctness property of the structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError

__all__ = [
    "prestored_pattern",
    "hankel_matrix",
    "Branch",
    "branch_output",
    "equiv_d_matrix",
    "scatter_weights",
    "d_hermitian_apply",
    "select_branch",
]


def prestored_pattern(lp: int, d: int, l: int) -> np.ndarray:
    """Offsets of the l-th pre-stored decimation pattern: floor(LP/D)*d + l.

    Rows of the implied 0/1 decimation matrix select these positions; the
    matrix itself is never materialized (decimation is a row gather).
    """
    if d < 1 or l < 0:
        raise ConfigError("rank D must be >= 1 and branch index l >= 0")
    if d > lp:
        raise ConfigError(f"rank D={d} exceeds LP={lp}: offsets would repeat")
    offsets = (lp // d) * np.arange(d) + l
    if offsets[-1] >= lp:
        raise ConfigError(
            f"pattern exceeds LP: floor({lp}/{d})*{d - 1}+{l} >= {lp}"
        )
    return offsets


def hankel_matrix(r: np.ndarray, i_len: int) -> np.ndarray:
    """LP x I Hankel data matrix: R[c, j] = r[c + j], zero past the end.

    Satisfies P^H r = R p* for the Toeplitz convolution matrix P of any
    length-I preprocessor p.
    """
    r = np.asarray(r)
    lp = r.shape[0]
    if not 1 <= i_len < lp:
        raise ConfigError(f"need 1 <= I < LP, got I={i_len}, LP={lp}")
    return np.ascontiguousarray(_hankel_view(r, i_len))


def _hankel_view(r: np.ndarray, i_len: int) -> np.ndarray:
    """Read-only Hankel view (no copy); r is zero-padded by I-1 at the tail."""
    pad = np.concatenate([r, np.zeros(i_len - 1, dtype=r.dtype)])
    return sliding_window_view(pad, i_len)


@dataclass(frozen=True)
class Branch:
    """One processing branch: preprocessor p, decimation offsets, filter w."""

    p: np.ndarray
    w: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        if len(self.w) != len(self.offsets):
            raise ConfigError("filter length must equal the decimation rank")
        if len(self.p) < 1:
            raise ConfigError("preprocessor must have at least one tap")


def branch_output(br: Branch, R: np.ndarray) -> complex:
    """Branch output x = w^H T (R p*): preprocess, decimate, filter."""
    if R.shape[1] != len(br.p):
        raise ValueError(f"R has {R.shape[1]} columns but p has {len(br.p)} taps")
    rbar = (R @ np.conj(br.p))[br.offsets]
    return complex(np.vdot(br.w, rbar))


def scatter_weights(w: np.ndarray, offsets: np.ndarray, lp: int) -> np.ndarray:
    """Length-LP vector d with the filter taps placed at the pattern offsets
    (d = T^H w)."""
    d = np.zeros(lp, dtype=complex)
    d[offsets] = w
    return d


def equiv_d_matrix(
    w: np.ndarray, offsets: np.ndarray, lp: int, i_len: int
) -> np.ndarray:
    """LP x I lower-triangular Toeplitz matrix D with D[m, j] = d[m - j].

    ``d`` is the scatter of the filter taps into LP slots. For any p and r,
    p^H D^H r equals the branch output, which makes D the data matrix of the
    preprocessor gradient.
    """
    d = scatter_weights(w, offsets, lp)
    D = np.zeros((lp, i_len), dtype=complex)
    for j in range(i_len):
        D[j:, j] = d[: lp - j]
    return D


def d_hermitian_apply(d: np.ndarray, v: np.ndarray, i_len: int) -> np.ndarray:
    """Compute D^H v without materializing D: (D^H v)[j] = sum_t d*[t] v[t+j]."""
    return np.conj(d) @ _hankel_view(np.asarray(v), i_len)


def select_branch(outputs: np.ndarray, b0: complex) -> int:
    """Index of the branch output nearest (Euclidean) to the reference symbol.

    Ties resolve to the lowest index.
    """
    outputs = np.asarray(outputs)
    if outputs.shape[0] < 1:
        raise ValueError("need at least one branch output")
    return int(np.argmin(np.abs(b0 - outputs)))
