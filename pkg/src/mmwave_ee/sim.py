"""Monte-Carlo sweeps over SNR, transmit array size, or Dinkelbach iterations.

Every requested method is run on the same channel draw within a trial, so
differences between methods are paired. Trial ``t`` of sweep point ``s``
draws from ``trial_rng(seed, s, t)``; results are reduced in trial order and
do not depend on the number of workers.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .baselines import (
    ANALOGUE,
    BF,
    DIGITAL,
    DM,
    LABELS,
    analogue_baseline,
    brute_force_select,
    digital_baseline,
    dinkelbach_select,
)
from .channel import SystemConfig, generate_channel, trial_rng
from .dinkelbach import DEFAULT_I_MAX, kkt_violation
from .hbf import METHODS, OMP
from .power import PowerModel

log = logging.getLogger(__name__)

SWEEP_SNR = "snr"
SWEEP_NTX = "ntx"
SWEEP_ITERATIONS = "iterations"
SWEEP_KINDS = (SWEEP_SNR, SWEEP_NTX, SWEEP_ITERATIONS)

DEFAULT_SWEEP_VALUES = {
    SWEEP_SNR: (-20.0, -10.0, 0.0, 10.0, 20.0),
    SWEEP_NTX: (32.0, 48.0, 64.0, 80.0),
    SWEEP_ITERATIONS: (-10.0, 0.0, 10.0),
}

# fraction of errored trials above which a sweep is reported as failed
MAX_FAILURE_FRACTION = 0.05

CSV_HEADER = (
    "sweep", "method", "ee_mean", "ee_stderr", "se_mean", "se_stderr",
    "lopt_mean", "power_mean", "iters_mean", "trials",
)


class ConfigError(ValueError):
    pass


class ExcessiveFailures(RuntimeError):
    def __init__(self, rows, failed, total):
        super().__init__(f"{failed} of {total} trials failed")
        self.rows = rows
        self.failed = failed
        self.total = total


@dataclass(frozen=True)
class ExperimentConfig:
    base: SystemConfig = field(default_factory=SystemConfig)
    power: PowerModel = field(default_factory=PowerModel)
    trials: int = 1000
    seed: int = 0
    sweep: str = SWEEP_SNR
    sweep_values: tuple[float, ...] = DEFAULT_SWEEP_VALUES[SWEEP_SNR]
    methods: tuple[str, ...] = LABELS
    pursuit: str = OMP
    output_path: str = "results.csv"
    workers: int = 1
    i_max: int = DEFAULT_I_MAX

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.sweep not in SWEEP_KINDS:
            raise ConfigError(f"unknown sweep {self.sweep!r}; expected one of {SWEEP_KINDS}")
        if not self.sweep_values:
            raise ConfigError("sweep values must be nonempty")
        if not self.methods:
            raise ConfigError("methods must be nonempty")
        bad = [m for m in self.methods if m not in LABELS]
        if bad:
            raise ConfigError(f"unknown methods {bad}")
        if self.pursuit not in METHODS:
            raise ConfigError(f"unknown pursuit {self.pursuit!r}")
        if self.workers < 1 or self.i_max < 1:
            raise ConfigError("workers and i_max must be >= 1")
        # keep declaration order regardless of how methods were listed
        methods = tuple(m for m in LABELS if m in self.methods)
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "sweep_values", tuple(sorted(float(v) for v in self.sweep_values)))

    def point_config(self, value: float) -> SystemConfig:
        """System configuration at one sweep value."""
        if self.sweep == SWEEP_NTX:
            n_tx = int(value)
            if n_tx != value:
                raise ConfigError(f"antenna count must be an integer, got {value}")
            return replace(self.base, n_tx=n_tx)
        return self.base.with_snr_db(value)


@dataclass(frozen=True)
class TrialMetrics:
    ee: float
    se: float
    l_opt: int
    total_power: float
    iterations: float
    feasible: bool
    design_evals: int


@dataclass
class TrialResult:
    index: int
    metrics: dict[str, TrialMetrics] = field(default_factory=dict)
    ee_trace: tuple[float, ...] = ()
    hygiene: dict[str, float] = field(default_factory=dict)
    error: str | None = None


@dataclass(frozen=True)
class SweepRow:
    sweep_value: float
    method: str
    ee_mean: float
    ee_stderr: float
    se_mean: float
    se_stderr: float
    l_opt_mean: float
    power_mean: float
    iterations_mean: float
    trials_used: int


def _factor_hygiene(factors, tr_p):
    """Worst constant-modulus deviation and relative precoder power error."""
    n_t, n_r = factors.f_rf.shape[0], factors.w_rf.shape[0]
    modulus = max(
        float(np.max(np.abs(np.abs(factors.f_rf) - 1 / np.sqrt(n_t)))),
        float(np.max(np.abs(np.abs(factors.w_rf) - 1 / np.sqrt(n_r)))),
    )
    radiated = np.linalg.norm(factors.f_rf @ factors.f_bb) ** 2
    return modulus, float(abs(radiated - tr_p) / tr_p)


def simulate_trial(cfg: ExperimentConfig, point: int, trial: int) -> TrialResult:
    """Run every requested method on one channel draw."""
    value = cfg.sweep_values[point]
    sys_cfg = cfg.point_config(value)
    pm = cfg.power
    result = TrialResult(trial)
    try:
        chan = generate_channel(trial_rng(cfg.seed, point, trial), sys_cfg)
        result.hygiene["svd_error"] = chan.reconstruction_error()
        modulus, power_err, pmax_err = 0.0, 0.0, 0.0
        for label in cfg.methods:
            if label == DM:
                out = dinkelbach_select(chan, pm, sys_cfg, cfg.pursuit, cfg.i_max)
                sel = out.selection
                feasible = sel.converged and sel.feasible
                result.ee_trace = tuple(r.ee for r in sel.trace)
                result.hygiene["kkt"] = kkt_violation(sel.gains, sel.diag_p, sel.nu_solve, sel.beta_prime, pm.p_max)
                result.hygiene["dm_budget_used"] = float(sel.diag_p.sum() / pm.p_max)
            elif label == BF:
                out = brute_force_select(chan, pm, sys_cfg, cfg.pursuit)
                feasible = out.se >= sys_cfg.r_min
            elif label == DIGITAL:
                out = digital_baseline(chan, pm, sys_cfg)
                feasible = out.se >= sys_cfg.r_min
            else:
                out = analogue_baseline(chan, pm, sys_cfg)
                feasible = out.se >= sys_cfg.r_min
            if out.factors is not None:
                m, e = _factor_hygiene(out.factors, float(out.diag_p.sum()))
                modulus, power_err = max(modulus, m), max(power_err, e)
                if label in (BF, ANALOGUE):
                    # these always spend the whole budget
                    pmax_err = max(pmax_err, _factor_hygiene(out.factors, pm.p_max)[1])
            result.metrics[label] = TrialMetrics(
                ee=out.ee,
                se=out.se,
                l_opt=out.l_opt,
                total_power=out.total_power,
                iterations=out.iterations,
                feasible=bool(feasible),
                design_evals=out.design_evals,
            )
        result.hygiene["modulus"] = modulus
        result.hygiene["power"] = power_err
        result.hygiene["power_pmax"] = pmax_err
    except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
        log.warning("sweep point %d trial %d failed: %s", point, trial, exc)
        result.error = f"{type(exc).__name__}: {exc}"
    return result


def _trial_job(args):
    return simulate_trial(*args)


def run_trials(cfg: ExperimentConfig, point: int) -> list[TrialResult]:
    """All trials of one sweep point, ordered by trial index."""
    jobs = [(cfg, point, t) for t in range(cfg.trials)]
    if cfg.workers == 1:
        return [_trial_job(j) for j in jobs]
    chunk = max(1, cfg.trials // (4 * cfg.workers))
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(_trial_job, jobs, chunksize=chunk))


def _mean_stderr(values):
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    if x.size == 1:
        return float(x[0]), 0.0
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


def aggregate(value: float, label: str, metrics: list[TrialMetrics]) -> SweepRow:
    """Mean and standard error over feasible trials (EE is a mean of per-trial ratios)."""
    used = [m for m in metrics if m.feasible]
    ee, ee_se = _mean_stderr([m.ee for m in used])
    se, se_se = _mean_stderr([m.se for m in used])
    mean = lambda xs: float(np.mean(xs)) if len(used) else math.nan  # noqa: E731
    return SweepRow(
        sweep_value=value,
        method=label,
        ee_mean=ee,
        ee_stderr=ee_se,
        se_mean=se,
        se_stderr=se_se,
        l_opt_mean=mean([m.l_opt for m in used]),
        power_mean=mean([m.total_power for m in used]),
        iterations_mean=mean([m.iterations for m in used]),
        trials_used=len(used),
    )


def _iteration_rows(value, results):
    """Mean EE at each iteration index; finished traces hold their last value."""
    traces = [r.ee_trace for r in results if r.error is None and r.ee_trace and r.metrics[DM].feasible]
    if not traces:
        return [SweepRow(value, f"{DM}@0", *([math.nan] * 7), 0)]
    depth = max(len(t) for t in traces)
    padded = np.array([list(t) + [t[-1]] * (depth - len(t)) for t in traces])
    rows = []
    for m in range(depth):
        ee, ee_se = _mean_stderr(padded[:, m])
        rows.append(SweepRow(value, f"{DM}@{m}", ee, ee_se, math.nan, math.nan, math.nan, math.nan, float(m), len(traces)))
    return rows


def run_sweep(cfg: ExperimentConfig, check_failures: bool = True) -> list[SweepRow]:
    """Simulate every sweep point and reduce to one row per (point, method).

    Raises
    ------
    ExcessiveFailures
        If more than 5% of all trials raised; the computed rows are attached.
    """
    if cfg.sweep == SWEEP_ITERATIONS and DM not in cfg.methods:
        raise ConfigError("the iterations sweep needs the DM method")
    rows: list[SweepRow] = []
    failed = 0
    for point, value in enumerate(cfg.sweep_values):
        results = run_trials(cfg, point)
        failed += sum(r.error is not None for r in results)
        ok = [r for r in results if r.error is None]
        if cfg.sweep == SWEEP_ITERATIONS:
            rows.extend(_iteration_rows(value, ok))
            continue
        for label in cfg.methods:
            rows.append(aggregate(value, label, [r.metrics[label] for r in ok]))
    total = cfg.trials * len(cfg.sweep_values)
    if check_failures and failed > MAX_FAILURE_FRACTION * total:
        raise ExcessiveFailures(rows, failed, total)
    return rows


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".6g")


def emit_csv(rows: list[SweepRow], path) -> None:
    if not rows:
        raise ValueError("no rows to write")
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in rows:
                writer.writerow(_fmt(getattr(r, f.name)) for f in fields(SweepRow))
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
