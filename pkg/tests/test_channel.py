"""Fading process, channel matrix assembly and received-vector synthesis."""

import numpy as np
import pytest
from scipy.special import j0

from mserjpdf import (
    ChannelConfig,
    ChannelRealization,
    Constellation,
    antenna_sample_series,
    build_channel_matrix,
    clarke_gain_series,
    desired_signature,
    draw_symbols,
    generate_realization,
    received_vector,
    synthesize_received,
    vehicular_a_profile,
)
from mserjpdf.errors import ConfigError


def sample_autocorr(g: np.ndarray, lag: int) -> float:
    prod = g[lag:] * np.conj(g[: len(g) - lag])
    return float(prod.mean().real / np.mean(np.abs(g) ** 2))


def test_clarke_zero_doppler_is_static():
    g = clarke_gain_series(0.0, 100, 3)
    assert np.all(g == g[0])


def test_clarke_unit_power():
    # Slow fading is strongly correlated in time, so average over an
    # ensemble of independent series rather than one long record.
    p = np.array(
        [np.abs(clarke_gain_series(1e-3, 20_000, s)) ** 2 for s in range(40)]
    )
    assert abs(p.mean() - 1.0) < 0.05


def test_clarke_autocorrelation_matches_bessel():
    g = clarke_gain_series(1e-3, 100_000, 5)
    for lag in (50, 100, 200):
        assert abs(sample_autocorr(g, lag) - j0(2 * np.pi * 1e-3 * lag)) < 0.05


def test_clarke_stationary_power():
    p = np.array(
        [np.abs(clarke_gain_series(1e-3, 50_000, s)) ** 2 for s in range(30)]
    )
    half = p.shape[1] // 2
    p1, p2 = p[:, :half].mean(), p[:, half:].mean()
    assert abs(p1 - p2) / p1 < 0.05


def test_clarke_determinism():
    a = clarke_gain_series(1e-4, 1000, 9)
    b = clarke_gain_series(1e-4, 1000, 9)
    assert np.array_equal(a, b)


def test_vehicular_a_profile():
    prof = vehicular_a_profile()
    assert len(prof) == 3
    assert abs(sum(prof) - 1.0) < 1e-12
    # Relative powers 0, -1, -9 dB.
    assert prof[0] > prof[1] > prof[2]
    assert prof[1] / prof[0] == pytest.approx(10 ** (-0.1))
    assert prof[2] / prof[0] == pytest.approx(10 ** (-0.9))


def test_channel_config_validation():
    with pytest.raises(ConfigError, match="K"):
        ChannelConfig(K=0, L=1, P=1, Lp=1, fd_ts=0.0, profile=(1.0,))
    with pytest.raises(ConfigError, match="sum"):
        ChannelConfig(K=1, L=1, P=1, Lp=2, fd_ts=0.0, profile=(0.7, 0.2))


def _static_realization(taps_klm: np.ndarray, n: int, prefix: int) -> ChannelRealization:
    full = np.broadcast_to(taps_klm, (n + prefix,) + taps_klm.shape).copy()
    return ChannelRealization(taps=full, offset=prefix)


def test_build_channel_matrix_degenerate():
    cfg = ChannelConfig(K=1, L=1, P=1, Lp=1, fd_ts=0.0, profile=(1.0,))
    real = _static_realization(np.array([[[0.3 - 0.4j]]]), 1, 0)
    H = build_channel_matrix(real, 0, cfg)
    assert H.shape == (1, 1)
    assert H[0, 0] == 0.3 - 0.4j


def test_build_channel_matrix_banded_structure():
    cfg = ChannelConfig(K=1, L=1, P=2, Lp=2, fd_ts=0.0, profile=(0.5, 0.5))
    h0, h1 = 0.7 + 0.1j, -0.2 + 0.5j
    real = _static_realization(np.array([[[h0, h1]]]), 2, 1)
    H = build_channel_matrix(real, 0, cfg)
    expected = np.array([[h0, h1, 0.0], [0.0, h0, h1]])
    assert np.allclose(H, expected)


def test_build_channel_matrix_block_layout():
    cfg = ChannelConfig(K=2, L=2, P=1, Lp=1, fd_ts=0.0, profile=(1.0,))
    taps = np.arange(4, dtype=complex).reshape(2, 2, 1) + 1j
    real = _static_realization(taps, 1, 0)
    H = build_channel_matrix(real, 0, cfg)
    assert H.shape == (2, 2)
    for nu in range(2):
        for k in range(2):
            assert H[nu, k] == taps[k, nu, 0]


def test_build_channel_matrix_linear_in_taps():
    cfg = ChannelConfig(K=2, L=3, P=2, Lp=2, fd_ts=1e-3, profile=(0.6, 0.4))
    real = generate_realization(cfg, 4, 21)
    scaled = ChannelRealization(taps=2.5 * real.taps, offset=real.offset)
    assert np.allclose(
        build_channel_matrix(scaled, 2, cfg),
        2.5 * build_channel_matrix(real, 2, cfg),
    )


def test_desired_signature_is_first_user_column():
    cfg = ChannelConfig(K=2, L=3, P=2, Lp=2, fd_ts=1e-3, profile=(0.6, 0.4))
    real = generate_realization(cfg, 4, 13)
    H = build_channel_matrix(real, 1, cfg)
    h00 = desired_signature(real, 1, cfg)
    assert np.allclose(h00, H[:, 0])


def test_tap_power_matches_profile():
    cfg = ChannelConfig(K=1, L=2, P=1, Lp=3, fd_ts=0.0, profile=vehicular_a_profile())
    real = generate_realization(cfg, 1, 29, n_sinusoids=64)
    # Zero Doppler: each (k, nu, mu) gain is one Rayleigh draw; average the
    # squared magnitude over many independent realizations.
    draws = np.array(
        [
            np.abs(generate_realization(cfg, 1, 1000 + t).taps_at(0)[0]) ** 2
            for t in range(400)
        ]
    )
    mean = draws.mean(axis=0)  # (L, Lp)
    for mu in range(3):
        assert np.allclose(mean[:, mu], cfg.profile[mu], rtol=0.25)
    assert real.taps.shape == (1, 1, 2, 3)


def test_synthesize_received_noiseless_exact():
    H = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
    b = np.array([1.0 + 1j, -1.0], dtype=complex)
    r = synthesize_received(H, b, 0.0, 7)
    assert np.array_equal(r, H @ b)


def test_synthesize_received_shape_error():
    with pytest.raises(ValueError, match="shape"):
        synthesize_received(np.zeros((2, 3)), np.zeros(2), 0.0, 1)


def test_synthesize_received_noise_covariance():
    H = np.zeros((4, 1), dtype=complex)
    b = np.zeros(1, dtype=complex)
    rng = np.random.default_rng(123)
    draws = np.array([synthesize_received(H, b, 2.0, rng) for _ in range(20_000)])
    cov = draws.T @ np.conj(draws) / len(draws)
    assert np.allclose(cov, 2.0 * np.eye(4), atol=0.1)


def test_noise_energy_bookkeeping():
    H = np.zeros((6, 1), dtype=complex)
    b = np.zeros(1, dtype=complex)
    rng = np.random.default_rng(5)
    sq = [np.sum(np.abs(synthesize_received(H, b, 0.5, rng)) ** 2) for _ in range(10_000)]
    # E||r - Hb||^2 = LP * noise_var
    assert abs(np.mean(sq) - 6 * 0.5) < 0.1


def test_signal_energy_per_element_is_k():
    cfg = ChannelConfig(K=4, L=2, P=2, Lp=3, fd_ts=1e-2, profile=vehicular_a_profile())
    real = generate_realization(cfg, 10_000, 31)
    c = Constellation.bpsk()
    rng = np.random.default_rng(42)
    total, count = 0.0, 0
    for i in range(0, 10_000, 7):
        H = build_channel_matrix(real, i, cfg)
        b = draw_symbols(c, H.shape[1], rng)
        total += float(np.mean(np.abs(H @ b) ** 2))
        count += 1
    assert abs(total / count - cfg.K) / cfg.K < 0.05


def test_antenna_series_matches_block_synthesis():
    cfg = ChannelConfig(K=2, L=2, P=3, Lp=2, fd_ts=1e-3, profile=(0.8, 0.2))
    n = 12
    real = generate_realization(cfg, n, 77)
    c = Constellation.qam(16)
    ss = np.random.SeedSequence(99)
    symbols = np.stack(
        [draw_symbols(c, real.taps.shape[0] + cfg.Lp - 1, s) for s in ss.spawn(cfg.K)]
    )
    y = antenna_sample_series(real, symbols, cfg, np.random.default_rng(0))
    for i in range(cfg.P - 1, n):
        H = build_channel_matrix(real, i, cfg)
        # b(i) = [b_k(i), ..., b_k(i-(P+Lp-2))] per user; symbol column
        # t + Lp - 1 corresponds to instant t - offset.
        cols = (i + real.offset + cfg.Lp - 1) - np.arange(cfg.n_taps_per_user)
        b = symbols[:, cols].reshape(cfg.K * cfg.n_taps_per_user)
        r_direct = H @ b
        r_series = received_vector(y, i, cfg, real.offset)
        assert np.allclose(r_series, r_direct, atol=1e-12)


def test_received_vector_range_error():
    cfg = ChannelConfig(K=1, L=1, P=2, Lp=1, fd_ts=0.0, profile=(1.0,))
    y = np.zeros((1, 4), dtype=complex)
    with pytest.raises(IndexError):
        received_vector(y, 99, cfg, 1)


def test_realization_range_error():
    cfg = ChannelConfig(K=1, L=1, P=1, Lp=1, fd_ts=0.0, profile=(1.0,))
    real = generate_realization(cfg, 3, 1)
    with pytest.raises(IndexError):
        real.taps_at(50)
