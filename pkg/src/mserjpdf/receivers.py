"""Single-trial receiver simulations.

Each runner draws an independent channel realization, symbol streams and
noise from the trial seed, runs training followed by decision-directed
detection, and reports per-symbol error indicators.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import baselines
from .adapt import (
    AdaptConfig,
    AutoSelectConfig,
    desired_gain,
    prefix_outputs,
    update_bpsk,
    update_qam,
)
from .channel import (
    ChannelConfig,
    antenna_sample_series,
    desired_signature,
    generate_realization,
    received_vector,
)
from .constellations import Constellation, draw_symbols, quantize
from .core import Branch, _hankel_view, prestored_pattern, select_branch
from .errors import ConfigError

__all__ = ["TrialSpec", "RunResult", "run_trial", "ALGORITHM_IDS"]

ALGORITHM_IDS = (
    "mser-jpdf",
    "mser-jpdf-auto",
    "fullrank-lms",
    "fullrank-mser",
    "matched-filter",
)


@dataclass(frozen=True)
class TrialSpec:
    """Everything one Monte-Carlo trial needs besides its seed."""

    channel: ChannelConfig
    constellation: Constellation
    algorithm: str
    n_symbols: int
    n_train: int
    rho: float = 0.0  # kernel width; unused by LMS/matched filter
    mu_w: float = 0.0
    mu_p: float = 0.0
    B: int = 4
    D: int = 10
    I: int = 12
    auto: AutoSelectConfig | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHM_IDS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.n_symbols < 1 or not 0 <= self.n_train <= self.n_symbols:
            raise ConfigError("need n_symbols >= 1 and 0 <= n_train <= n_symbols")


@dataclass
class RunResult:
    """Per-symbol outcome of one trial."""

    errors: np.ndarray
    branch_trace: np.ndarray
    final_norms: dict[str, float]
    elapsed: float


class _TrialData:
    """Realized channel, symbols and received samples for one trial."""

    def __init__(self, spec: TrialSpec, seed):
        ch = spec.channel
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        s_taps, s_noise, *s_syms = ss.spawn(2 + ch.K)
        self.real = generate_realization(ch, spec.n_symbols, s_taps)
        n_cols = self.real.taps.shape[0] + ch.Lp - 1
        self.symbols = np.array(
            [draw_symbols(spec.constellation, n_cols, s_syms[k]) for k in range(ch.K)]
        )
        self.y = antenna_sample_series(
            self.real, self.symbols, ch, np.random.default_rng(s_noise)
        )
        self.ch = ch
        self.sym_off = ch.P + ch.Lp - 2

    def r(self, i: int) -> np.ndarray:
        return received_vector(self.y, i, self.ch, self.real.offset)

    def h00(self, i: int) -> np.ndarray:
        return desired_signature(self.real, i, self.ch)

    def b0(self, i: int) -> complex:
        return complex(self.symbols[0, i + self.sym_off])


def run_trial(spec: TrialSpec, seed) -> RunResult:
    """Run one seeded trial and return its per-symbol error indicators."""
    start = time.perf_counter()
    data = _TrialData(spec, seed)
    if spec.algorithm == "mser-jpdf":
        result = _run_jpdf(spec, data)
    elif spec.algorithm == "mser-jpdf-auto":
        result = _run_jpdf_auto(spec, data)
    elif spec.algorithm in ("fullrank-lms", "fullrank-mser"):
        result = _run_fullrank(spec, data)
    else:
        result = _run_matched(spec, data)
    result.elapsed = time.perf_counter() - start
    return result


def _decision(c: Constellation, x: complex, w00: float) -> complex:
    if c.kind == "bpsk":
        return quantize(c, x)
    return quantize(c, x, w00 if w00 > 0 else 1.0)


def _unit_gain(w: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Scale a matched-filter seed so its desired-signal gain is one.

    Without the scaling the initial outputs sit at ``‖h‖²·b0`` instead of
    ``b0``: the error-rate gradient is then exponentially small (the filter
    never adapts) and the minimum-distance branch selection compares raw
    outputs against reference symbols on the wrong scale.
    """
    g = float(np.vdot(w, h).real)
    return w / g if g > 0.0 else w


def _init_branches(spec: TrialSpec, data: _TrialData, d: int, i_len: int) -> list[Branch]:
    lp = spec.channel.dim
    h0 = data.h00(0)
    branches = []
    for l in range(spec.B):
        offsets = prestored_pattern(lp, d, l)
        p = np.zeros(i_len, dtype=complex)
        p[0] = 1.0
        w = _unit_gain(h0[offsets].copy(), h0[offsets])
        branches.append(Branch(p=p, w=w, offsets=offsets))
    return branches


# Forgetting factors for the decision-directed branch-quality statistics.
# Without training symbols the instantaneous distance is too noisy to compare
# candidates: a poorly adapted branch wins whenever its output happens to
# cross a constellation point. Candidates are ranked primarily by a running
# average of their decision disagreements with the reference symbol, with the
# running average output-to-reference distance as tie-break.
_DD_FORGET = 0.95
_ERR_FORGET = 0.99


def _dd_pick(miss: np.ndarray, dist: np.ndarray) -> int:
    """Flat index of the best decision-directed candidate."""
    return int(np.lexsort((dist.ravel(), miss.ravel()))[0])


def _run_jpdf(spec: TrialSpec, data: _TrialData) -> RunResult:
    c = spec.constellation
    cfg = AdaptConfig(mu_w=spec.mu_w, mu_p=spec.mu_p, rho=spec.rho)
    branches = _init_branches(spec, data, spec.D, spec.I)
    errors = np.zeros(spec.n_symbols, dtype=bool)
    trace = np.zeros(spec.n_symbols, dtype=np.int64)
    qam = c.kind == "qam"
    dist = np.zeros(spec.B)
    miss = np.zeros(spec.B)
    for i in range(spec.n_symbols):
        r = data.r(i)
        R = _hankel_view(r, spec.I)
        h00 = data.h00(i) if qam else None
        truth = data.b0(i)
        outputs = np.array(
            [complex(np.vdot(br.w, (R @ np.conj(br.p))[br.offsets])) for br in branches]
        )
        gains = (
            np.array([abs(desired_gain(br, h00)) for br in branches])
            if qam
            else np.ones(spec.B)
        )
        decisions = np.array(
            [_decision(c, outputs[l], gains[l]) for l in range(spec.B)]
        )
        if i < spec.n_train:
            l_opt = select_branch(outputs, truth)
        else:
            l_opt = _dd_pick(miss, dist)
        decision = decisions[l_opt]
        ref = truth if i < spec.n_train else decision
        miss = _ERR_FORGET * miss + (1.0 - _ERR_FORGET) * (decisions != ref)
        dist = _DD_FORGET * dist + (1.0 - _DD_FORGET) * np.abs(ref - outputs)
        errors[i] = decision != truth
        trace[i] = l_opt
        # All branches adapt against the same reference symbol.
        if qam:
            branches = [update_qam(br, R, r, h00, ref, cfg, c.M) for br in branches]
        else:
            branches = [update_bpsk(br, R, r, ref, cfg) for br in branches]
    norms = {
        f"branch{l}": float(np.linalg.norm(br.w)) for l, br in enumerate(branches)
    }
    return RunResult(errors=errors, branch_trace=trace, final_norms=norms, elapsed=0.0)


def _quantize_grid(c: Constellation, x: np.ndarray, gains: np.ndarray) -> np.ndarray:
    """Vectorized decisions for an array of outputs with per-entry gains."""
    if c.kind == "bpsk":
        return np.where(x.real >= 0.0, 1.0 + 0j, -1.0 + 0j)
    # Thresholds scale with the gain, so normalizing by it reduces to gain 1.
    z = x / gains
    lv = c.levels
    thresholds = lv[:-1] + 1.0
    re = lv[np.searchsorted(thresholds, z.real.ravel(), side="left")]
    im = lv[np.searchsorted(thresholds, z.imag.ravel(), side="left")]
    return (re + 1j * im).reshape(x.shape)


def _run_jpdf_auto(spec: TrialSpec, data: _TrialData) -> RunResult:
    c = spec.constellation
    auto = spec.auto
    if auto is None:
        raise ConfigError("mser-jpdf-auto requires an AutoSelectConfig")
    cfg = AdaptConfig(mu_w=spec.mu_w, mu_p=spec.mu_p, rho=spec.rho)
    branches = _init_branches(spec, data, auto.d_max, auto.i_max)
    errors = np.zeros(spec.n_symbols, dtype=bool)
    trace = np.zeros(spec.n_symbols, dtype=np.int64)
    qam = c.kind == "qam"
    d_lo, i_lo = auto.d_min - 1, auto.i_min - 1
    rect = (spec.B, auto.d_max - d_lo, auto.i_max - i_lo)
    dist = np.zeros(rect)
    miss = np.zeros(rect)
    for i in range(spec.n_symbols):
        r = data.r(i)
        R = _hankel_view(r, auto.i_max)
        h00 = data.h00(i) if qam else None
        truth = data.b0(i)
        # Candidate outputs (and gains for QAM) over the (D, I) rectangle.
        Rh = _hankel_view(h00, auto.i_max) if qam else None
        x_grid = np.stack(
            [prefix_outputs(br, R)[d_lo : auto.d_max, i_lo : auto.i_max] for br in branches]
        )
        if qam:
            gains = np.abs(
                np.stack(
                    [
                        prefix_outputs(br, Rh)[d_lo : auto.d_max, i_lo : auto.i_max]
                        for br in branches
                    ]
                )
            )
            gains[gains == 0.0] = 1.0
        else:
            gains = np.ones(rect)
        decisions = _quantize_grid(c, x_grid, gains)
        if i < spec.n_train:
            flat = int(np.argmin(np.abs(truth - x_grid)))
            idx = np.unravel_index(flat, rect)
            decision = complex(decisions[idx])
            ref = truth
        else:
            # Without training symbols the per-cell decisions of reduced
            # (D, I) candidates are too unreliable to self-reference: the
            # detected symbol comes from the best fully sized branch
            # (smoothed ranking), which also serves as the common adaptation
            # reference; the rectangle statistics keep tracking the best
            # reduced candidate for diagnostics.
            lref = _dd_pick(miss[:, -1, -1], dist[:, -1, -1])
            decision = ref = complex(decisions[lref, -1, -1])
            idx = (lref, rect[1] - 1, rect[2] - 1)
        miss = _ERR_FORGET * miss + (1.0 - _ERR_FORGET) * (decisions != ref)
        dist = _DD_FORGET * dist + (1.0 - _DD_FORGET) * np.abs(ref - x_grid)
        errors[i] = decision != truth
        trace[i] = idx[0]
        if qam:
            branches = [update_qam(br, R, r, h00, ref, cfg, c.M) for br in branches]
        else:
            branches = [update_bpsk(br, R, r, ref, cfg) for br in branches]
    norms = {
        f"branch{l}": float(np.linalg.norm(br.w)) for l, br in enumerate(branches)
    }
    return RunResult(errors=errors, branch_trace=trace, final_norms=norms, elapsed=0.0)


def _run_fullrank(spec: TrialSpec, data: _TrialData) -> RunResult:
    c = spec.constellation
    mser = spec.algorithm == "fullrank-mser"
    qam = c.kind == "qam"
    w = data.h00(0).copy()
    errors = np.zeros(spec.n_symbols, dtype=bool)
    # A divergent step size (possible for LMS) floods w with inf/nan; the
    # decisions then come out constant, which is the honest outcome.
    with np.errstate(invalid="ignore", over="ignore"):
        return _fullrank_loop(spec, data, w, errors, mser, qam, c)


def _fullrank_loop(spec, data, w, errors, mser, qam, c) -> RunResult:
    for i in range(spec.n_symbols):
        r = data.r(i)
        h00 = data.h00(i)
        truth = data.b0(i)
        x = complex(np.vdot(w, r))
        if mser and qam:
            w00 = abs(complex(np.vdot(w, h00)))
            decision = _decision(c, x, w00)
        else:
            decision = _decision(c, x, 1.0)
        ref = truth if i < spec.n_train else decision
        if mser:
            if qam:
                w, _ = baselines.mser_fullrank_update_qam(
                    w, r, h00, ref, spec.rho, spec.mu_w, c.M
                )
            else:
                w = baselines.mser_fullrank_update_bpsk(w, r, ref, spec.rho, spec.mu_w)
        else:
            w = baselines.lms_update(w, r, ref, spec.mu_w)
        errors[i] = decision != truth
    return RunResult(
        errors=errors,
        branch_trace=np.full(spec.n_symbols, -1, dtype=np.int64),
        final_norms={"w": float(np.linalg.norm(w))},
        elapsed=0.0,
    )


def _run_matched(spec: TrialSpec, data: _TrialData) -> RunResult:
    c = spec.constellation
    errors = np.zeros(spec.n_symbols, dtype=bool)
    for i in range(spec.n_symbols):
        x = baselines.matched_filter(data.h00(i), data.r(i))
        errors[i] = _decision(c, x, 1.0) != data.b0(i)
    return RunResult(
        errors=errors,
        branch_trace=np.full(spec.n_symbols, -1, dtype=np.int64),
        final_norms={},
        elapsed=0.0,
    )
