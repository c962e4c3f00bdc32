import math
from dataclasses import replace

import numpy as np
import pytest

from mmwave_ee import cli, sim
from mmwave_ee.baselines import BF, DIGITAL, DM, LABELS
from mmwave_ee.configfile import build_config, dump_config, load_config, parse_pairs
from mmwave_ee.sim import (
    CSV_HEADER,
    SWEEP_ITERATIONS,
    SWEEP_NTX,
    ConfigError,
    ExcessiveFailures,
    ExperimentConfig,
    SweepRow,
    aggregate,
    emit_csv,
    run_sweep,
    simulate_trial,
)


def small(**kw):
    base = dict(trials=4, sweep_values=(0.0,), methods=(DM,))
    base.update(kw)
    return ExperimentConfig(**base)


def test_minimal_run_one_row():
    rows = run_sweep(small(trials=1))
    assert len(rows) == 1
    assert rows[0].method == DM and rows[0].trials_used <= 1


@pytest.mark.parametrize(
    "kw",
    [dict(trials=0), dict(sweep_values=()), dict(methods=()), dict(methods=("XX",)), dict(sweep="foo"),
     dict(pursuit="mp"), dict(workers=0)],
)
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        small(**kw)


def test_methods_and_values_canonical_order():
    cfg = small(methods=(DIGITAL, DM), sweep_values=(10.0, -10.0))
    assert cfg.methods == (DM, DIGITAL)
    assert cfg.sweep_values == (-10.0, 10.0)


def test_ntx_point_requires_integer():
    cfg = small(sweep=SWEEP_NTX, sweep_values=(32.5,))
    with pytest.raises(ConfigError):
        cfg.point_config(32.5)


def test_rows_ordered_and_stderr_nonnegative():
    cfg = small(trials=5, sweep_values=(10.0, -10.0), methods=LABELS)
    rows = run_sweep(cfg)
    assert [(r.sweep_value, r.method) for r in rows] == [(v, m) for v in (-10.0, 10.0) for m in LABELS]
    for r in rows:
        assert r.ee_stderr >= 0 and r.se_stderr >= 0
        assert r.trials_used <= 5


def test_trial_pairs_methods_on_same_channel():
    cfg = small(methods=(DM, BF))
    res = simulate_trial(cfg, 0, 3)
    assert res.error is None
    assert res.metrics[BF].ee >= res.metrics[DM].ee - 1e-9
    assert res.hygiene["svd_error"] <= 1e-10


def test_mean_of_ratios():
    ms = [sim.TrialMetrics(ee=e, se=s, l_opt=1, total_power=p, iterations=1, feasible=True, design_evals=1)
          for e, s, p in [(1.0, 10.0, 10.0), (2.0, 20.0, 10.0), (3.0, 0.0, 1.0)]]
    row = aggregate(0.0, DM, ms)
    assert row.ee_mean == pytest.approx(2.0)
    assert row.ee_stderr == pytest.approx(np.std([1, 2, 3], ddof=1) / math.sqrt(3))


def test_infeasible_trials_excluded_and_counted():
    ok = sim.TrialMetrics(1.0, 2.0, 1, 25.0, 2.0, True, 1)
    bad = sim.TrialMetrics(9.0, 0.1, 1, 25.0, 2.0, False, 1)
    row = aggregate(0.0, DM, [ok, bad, ok])
    assert row.trials_used == 2 and row.ee_mean == 1.0
    empty = aggregate(0.0, DM, [bad])
    assert empty.trials_used == 0 and math.isnan(empty.ee_mean)


def test_iterations_sweep_rows():
    cfg = small(sweep=SWEEP_ITERATIONS, trials=6)
    rows = run_sweep(cfg)
    assert rows[0].method == "DM@0" and rows[0].iterations_mean == 0.0
    assert [r.iterations_mean for r in rows] == list(map(float, range(len(rows))))
    with pytest.raises(ConfigError):
        run_sweep(small(sweep=SWEEP_ITERATIONS, methods=(BF,)))


def test_emit_csv_format(tmp_path):
    rows = run_sweep(small(trials=3, methods=LABELS))
    path = tmp_path / "out.csv"
    emit_csv(rows, path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == len(rows) + 1
    assert all(len(line.split(",")) == 10 for line in lines)
    first = rows[0]
    assert lines[1].split(",")[2] == format(first.ee_mean, ".6g")
    one = tmp_path / "one.csv"
    emit_csv(rows[:1], one)
    assert len(one.read_text().splitlines()) == 2
    again = tmp_path / "again.csv"
    emit_csv(rows, again)
    assert path.read_bytes() == again.read_bytes()


def test_emit_csv_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_csv([], tmp_path / "x.csv")
    row = SweepRow(0.0, DM, 1, 0, 1, 0, 1, 1, 1, 1)
    with pytest.raises(OSError, match="missing"):
        emit_csv([row], tmp_path / "missing" / "x.csv")


def test_same_seed_identical_files(tmp_path):
    cfg = small(trials=6, sweep_values=(-10.0, 10.0), methods=LABELS)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(run_sweep(cfg), a)
    emit_csv(run_sweep(cfg), b)
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    emit_csv(run_sweep(replace(cfg, seed=1)), c)
    assert a.read_bytes() != c.read_bytes()


def test_worker_count_invariance(tmp_path):
    cfg = small(trials=8, sweep_values=(0.0, 20.0), methods=LABELS)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(run_sweep(cfg), a)
    emit_csv(run_sweep(replace(cfg, workers=2)), b)
    assert a.read_bytes() == b.read_bytes()


def _flaky_channel(fail_every):
    real = sim.generate_channel

    def gen(rng, cfg):
        chan = real(rng, cfg)
        if gen.count % fail_every == 0:
            gen.count += 1
            raise np.linalg.LinAlgError("forced")
        gen.count += 1
        return chan

    gen.count = 0
    return gen


def test_failed_trials_recorded_not_raised(monkeypatch):
    monkeypatch.setattr(sim, "generate_channel", _flaky_channel(40))
    rows = run_sweep(small(trials=40))
    assert rows[0].trials_used <= 39


def test_excessive_failures(monkeypatch):
    monkeypatch.setattr(sim, "generate_channel", _flaky_channel(5))
    with pytest.raises(ExcessiveFailures) as info:
        run_sweep(small(trials=20))
    assert info.value.failed == 4 and info.value.rows


def test_config_file_round_trip(tmp_path):
    text = """
    # comment
    trials = 7
    seed = 3        # inline comment
    sweep = ntx
    methods = dm, digital
    system.snr_db = 10
    power.p_max = 16
    """
    cfg = build_config(parse_pairs(text))
    assert cfg.trials == 7 and cfg.seed == 3 and cfg.sweep == SWEEP_NTX
    assert cfg.sweep_values == (32.0, 48.0, 64.0, 80.0)
    assert cfg.methods == (DM, DIGITAL)
    assert cfg.base.snr == pytest.approx(10.0)
    assert cfg.power.p_max == 16.0
    path = tmp_path / "c.cfg"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


@pytest.mark.parametrize("text", ["trials = 1\ntrials = 2", "bogus = 1", "system.n_tx = abc", "no equals sign",
                                  "power.p_rf = -1", "methods = dm, xx"])
def test_config_file_errors(text):
    with pytest.raises(ConfigError):
        build_config(parse_pairs(text))


def test_shipped_configs_load():
    from pathlib import Path

    for path in sorted((Path(__file__).parents[1] / "configs").glob("*.cfg")):
        cfg = load_config(path)
        assert cfg.trials >= 500


def test_cli_success(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = cli.main(["--trials", "2", "--methods", "dm,bf", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 5 * 2


def test_cli_flags_override_file(tmp_path, capsys):
    path = tmp_path / "c.cfg"
    path.write_text("trials = 50\nseed = 9\nmethods = digital\n")
    assert cli.main(["--config", str(path), "--trials", "3", "--print-config"]) == 0
    printed = capsys.readouterr().out
    cfg = build_config(parse_pairs(printed))
    assert cfg.trials == 3 and cfg.seed == 9 and cfg.methods == (DIGITAL,)


def test_cli_config_errors(tmp_path, capsys):
    assert cli.main(["--config", str(tmp_path / "nope.cfg")]) == cli.EXIT_CONFIG
    assert cli.main(["--trials", "0"]) == cli.EXIT_CONFIG
    assert cli.main(["--methods", "dm,xyz"]) == cli.EXIT_CONFIG
    bad = tmp_path / "bad.cfg"
    bad.write_text("sweep = iterations\nmethods = bf\n")
    assert cli.main(["--config", str(bad), "--trials", "1", "--out", str(tmp_path / "o.csv")]) == cli.EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_cli_excessive_failures(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(sim, "generate_channel", _flaky_channel(2))
    out = tmp_path / "r.csv"
    code = cli.main(["--trials", "4", "--methods", "dm", "--out", str(out)])
    assert code == cli.EXIT_FAILURES
    assert out.exists()
