"""Experiment orchestration: configs, Monte-Carlo driver, persistence, CLI."""

import json
from dataclasses import replace

import numpy as np
import pytest

from mserjpdf import Constellation, SerCurve, run_experiment
from mserjpdf.cli import main as cli_main
from mserjpdf.errors import ConfigError
from mserjpdf.harness import (
    ExperimentConfig,
    build_trial_spec,
    emit_results,
    load_config,
    noise_variance,
    normalize_algorithm,
    parse_constellation,
    resolve_receiver_params,
)
from mserjpdf.receivers import run_trial


def write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


MINIMAL = """
algorithm: MSER-JPDF
constellation: BPSK
"""


def test_load_config_table_defaults(tmp_path):
    cfg = load_config(write(tmp_path, MINIMAL))
    assert cfg.algorithm == "mser-jpdf"
    assert cfg.constellation == Constellation.bpsk()
    assert cfg.receiver["mu_w"] == 0.01
    assert cfg.receiver["mu_p"] == 0.01
    assert cfg.receiver["D"] == 10
    assert cfg.receiver["I"] == 12
    assert cfg.receiver["B"] == 4


def test_load_config_auto_defaults(tmp_path):
    cfg = load_config(
        write(tmp_path, "algorithm: mser-jpdf-auto\nconstellation: bpsk\n")
    )
    assert cfg.receiver["d_max"] == 10
    assert cfg.receiver["d_min"] == 6
    assert cfg.receiver["i_max"] == 12
    assert cfg.receiver["i_min"] == 6
    assert cfg.receiver["mu_w"] == 0.006


def test_load_config_rejects_bad_values(tmp_path):
    with pytest.raises(ConfigError, match="runs"):
        load_config(write(tmp_path, MINIMAL + "runs: 0\n"))
    with pytest.raises(ConfigError, match="unknown top-level"):
        load_config(write(tmp_path, MINIMAL + "bogus: 1\n"))
    with pytest.raises(ConfigError, match="unknown channel"):
        load_config(write(tmp_path, MINIMAL + "channel: {nope: 2}\n"))


def test_load_config_parse_error_has_location(tmp_path):
    with pytest.raises(ConfigError, match="line"):
        load_config(write(tmp_path, "algorithm: [unclosed\n"))


def test_load_config_aggregates_problems(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_config(write(tmp_path, "runs: -1\nbogus: 1\n"))
    msg = str(err.value)
    assert "algorithm" in msg and "bogus" in msg


def test_normalize_algorithm_aliases():
    assert normalize_algorithm("MSER-JPDF") == "mser-jpdf"
    assert normalize_algorithm("full-rank-lms") == "fullrank-lms"
    with pytest.raises(ConfigError):
        normalize_algorithm("nope")


def test_parse_constellation():
    assert parse_constellation("BPSK") == Constellation.bpsk()
    assert parse_constellation("16qam") == Constellation.qam(16)
    assert parse_constellation("qam16") == Constellation.qam(16)
    with pytest.raises(ConfigError):
        parse_constellation("8psk")


def test_resolve_receiver_params_rejects_unknown():
    with pytest.raises(ConfigError, match="nope"):
        resolve_receiver_params("mser-jpdf", Constellation.bpsk(), {"nope": 1})


def test_noise_variance():
    assert noise_variance(Constellation.bpsk(), 10.0) == pytest.approx(0.1)
    # 16-QAM raw alphabet has average energy 10.
    assert noise_variance(Constellation.qam(16), 10.0) == pytest.approx(1.0)
    assert noise_variance(Constellation.bpsk(), 0.0) == pytest.approx(1.0)


def noiseless_config(algorithm="mser-jpdf", constellation=None, **kw):
    # Single user, static flat channel, no noise: SER must vanish after training.
    base = dict(
        K=1, L=8, P=1, Lp=1, fd_ts=0.0, profile=(1.0,),
        snr_db=300.0, runs=2, n_symbols=240, n_train=120, seed=5,
        receiver={"rho": 0.05, "B": 1, "D": 4, "I": 1, "mu_w": 0.01, "mu_p": 0.0},
    )
    base.update(kw)
    return ExperimentConfig(
        algorithm=algorithm,
        constellation=constellation or Constellation.bpsk(),
        **base,
    )


def test_run_experiment_noiseless_single_user():
    curve, summaries = run_experiment(noiseless_config())
    assert len(curve.points) == 1
    _, ser, hw = curve.points[0]
    assert ser == 0.0
    assert hw == 0.0
    assert len(summaries) == 2


def test_run_experiment_deterministic_across_workers():
    cfg = noiseless_config(runs=3)
    curve1, _ = run_experiment(cfg, workers=1)
    curve2, _ = run_experiment(cfg, workers=3)
    assert curve1.to_csv() == curve2.to_csv()


def test_run_experiment_sweep_axis():
    cfg = noiseless_config(runs=1, sweep_axis="snr_db", sweep_values=(0.0, 10.0, 20.0))
    curve, summaries = run_experiment(cfg)
    xs = [p[0] for p in curve.points]
    assert xs == [0.0, 10.0, 20.0]
    assert len(summaries) == 3


def test_trial_seed_streams_are_independent():
    # Noise draws from different trials must be uncorrelated.
    cfg = noiseless_config(runs=1, snr_db=0.0)
    spec = build_trial_spec(cfg)
    from mserjpdf.receivers import _TrialData

    d1 = _TrialData(spec, np.random.SeedSequence([5, 0, 0]))
    d2 = _TrialData(spec, np.random.SeedSequence([5, 0, 1]))
    r1 = np.concatenate([d1.r(i) for i in range(100)])
    r2 = np.concatenate([d2.r(i) for i in range(100)])
    corr = abs(np.vdot(r1, r2)) / (np.linalg.norm(r1) * np.linalg.norm(r2))
    assert corr < 0.1


def test_run_trial_reports_trace_and_norms():
    cfg = noiseless_config(runs=1)
    spec = build_trial_spec(cfg)
    res = run_trial(spec, np.random.SeedSequence([1, 2, 3]))
    assert res.errors.shape == (240,)
    assert res.branch_trace.shape == (240,)
    assert set(res.final_norms) == {"branch0"}
    again = run_trial(spec, np.random.SeedSequence([1, 2, 3]))
    assert np.array_equal(res.errors, again.errors)


def test_matched_filter_trial_runs():
    cfg = noiseless_config(algorithm="matched-filter", receiver={"rho": 0.05})
    curve, _ = run_experiment(cfg)
    assert curve.points[0][1] == 0.0


def test_emit_results_roundtrip(tmp_path):
    curve = SerCurve(kind="point", points=[(0.0, 0.25, 0.05)], runs=2,
                     algorithm="mser-jpdf", seed=9)
    out = tmp_path / "res.csv"
    emit_results(curve, out, config={"algorithm": "mser-jpdf"})
    text = out.read_text()
    assert len(text.strip().split("\n")) == 2
    emit_results(curve, out, config={"algorithm": "mser-jpdf"})
    assert out.read_text() == text
    sidecar = json.loads((tmp_path / "res.json").read_text())
    assert sidecar["algorithm"] == "mser-jpdf"
    assert sidecar["config"]["algorithm"] == "mser-jpdf"


def test_emit_results_rejects_empty_curve(tmp_path):
    with pytest.raises(ValueError):
        emit_results(SerCurve(kind="point"), tmp_path / "x.csv")


def test_experiment_config_validation():
    with pytest.raises(ConfigError, match="runs"):
        noiseless_config(runs=0)
    with pytest.raises(ConfigError, match="training"):
        noiseless_config(n_symbols=10, n_train=20)
    with pytest.raises(ConfigError, match="sweep"):
        noiseless_config(sweep_axis="bogus", sweep_values=(1.0,))


def test_cli_complexity(capsys):
    assert cli_main(["complexity", "mser-jpdf", "--L", "40", "--P", "3",
                     "--D", "10", "--I", "12", "--B", "4"]) == 0
    out = capsys.readouterr().out
    assert "6128" in out


def test_cli_run_stdout(tmp_path, capsys):
    cfg = write(
        tmp_path,
        """
algorithm: mser-jpdf
constellation: bpsk
runs: 1
symbols: 60
training: 30
seed: 3
channel: {K: 1, L: 4, P: 1, Lp: 1, fd_ts: 0.0, snr_db: 200.0, profile: [1.0]}
receiver: {rho: 0.05, B: 1, D: 2, I: 1, mu_w: 0.01, mu_p: 0.0}
""",
    )
    assert cli_main(["run", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("x,ser,ci_halfwidth,runs,algorithm,seed")


def test_cli_run_writes_files(tmp_path, capsys):
    cfg = write(
        tmp_path,
        """
algorithm: mser-jpdf
constellation: bpsk
runs: 1
symbols: 60
training: 30
channel: {K: 1, L: 4, P: 1, Lp: 1, fd_ts: 0.0, snr_db: 200.0, profile: [1.0]}
receiver: {rho: 0.05, B: 1, D: 2, I: 1, mu_w: 0.01, mu_p: 0.0}
""",
    )
    out = tmp_path / "out.csv"
    assert cli_main(["run", str(cfg), "--out", str(out), "--seed", "11"]) == 0
    assert out.exists()
    sidecar = json.loads((tmp_path / "out.json").read_text())
    assert sidecar["config"]["seed"] == 11


def test_cli_sweep_requires_sweep_section(tmp_path, capsys):
    cfg = write(tmp_path, MINIMAL)
    assert cli_main(["sweep", str(cfg)]) == 2
    assert "sweep" in capsys.readouterr().err


def test_cli_bad_config_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "algorithm: nope\nconstellation: bpsk\n")
    assert cli_main(["run", str(cfg)]) == 2
    assert "error:" in capsys.readouterr().err
