"""Reference strategies compared against Dinkelbach chain selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, SystemConfig
from .dinkelbach import (
    DEFAULT_I_MAX,
    SelectionResult,
    run_dinkelbach,
    subproblem_waterfill,
    threshold_allocation,
)
from .hbf import OMP, HybridFactors, design_all
from .power import PowerModel, beta_prime, total_power
from .rate import energy_efficiency, se_diag, se_exact

log = logging.getLogger(__name__)

DM = "DM"
BF = "BF"
DIGITAL = "DIGITAL"
ANALOGUE = "ANALOGUE"
LABELS = (DM, BF, DIGITAL, ANALOGUE)


@dataclass
class StrategyOutcome:
    label: str
    l_opt: int
    se: float
    ee: float
    total_power: float
    design_evals: int
    factors: HybridFactors | None = None
    diag_p: np.ndarray | None = None
    selection: SelectionResult | None = None
    skipped: tuple[int, ...] = ()

    @property
    def iterations(self) -> float:
        return float(self.selection.trace.iterations) if self.selection else float("nan")


def _hybrid_outcome(label, chan, pm, cfg, p, n_rf, method, **extra):
    """Design hybrid beamformers for allocation ``p`` on ``n_rf`` chains and score them."""
    n_s = int(np.count_nonzero(p))
    tr_p = float(p.sum())
    factors = design_all(chan, p, n_s, tr_p, method=method, n_rf=n_rf)
    se = se_exact(chan.h, factors.f_rf, factors.f_bb, factors.w_rf, factors.w_bb, cfg.noise_var)
    ptot = total_power(pm, chan.n_tx, chan.n_rx, n_rf, n_rf, tr_p)
    return StrategyOutcome(label, n_rf, se, energy_efficiency(se, ptot), ptot, 1, factors, p, **extra)


def dinkelbach_select(
    chan: ChannelRealization,
    pm: PowerModel,
    cfg: SystemConfig,
    method: str = OMP,
    i_max: int = DEFAULT_I_MAX,
) -> StrategyOutcome:
    """Pick the chain count by Dinkelbach iterations, then design the beamformers once."""
    sel = run_dinkelbach(chan, pm, cfg, i_max)
    return _hybrid_outcome(DM, chan, pm, cfg, sel.diag_p, sel.l_opt, method, selection=sel)


def brute_force_select(
    chan: ChannelRealization,
    pm: PowerModel,
    cfg: SystemConfig,
    method: str = OMP,
) -> StrategyOutcome:
    """Design and score beamformers for every chain count; keep the most efficient.

    For ``L`` chains the budget is water-filled over the ``L`` strongest modes.
    Ties go to the smaller ``L``. A chain count whose design fails is logged
    and skipped.
    """
    gains = chan.sigma[: chan.l_avail] ** 2 / cfg.noise_var
    bp = beta_prime(pm, chan.n_tx)
    best = None
    skipped = []
    for l in range(1, chan.l_avail + 1):
        p = threshold_allocation(subproblem_waterfill(gains[:l], 0.0, bp, pm.p_max), cfg.eps_th)
        try:
            cand = _hybrid_outcome(BF, chan, pm, cfg, p, l, method)
        except (np.linalg.LinAlgError, ValueError) as exc:
            log.warning("brute force: skipping L=%d: %s", l, exc)
            skipped.append(l)
            continue
        if best is None or cand.ee > best.ee:
            best = cand
    if best is None:
        raise np.linalg.LinAlgError("no chain count produced a valid design")
    best.design_evals = chan.l_avail
    best.skipped = tuple(skipped)
    return best


def digital_baseline(chan: ChannelRealization, pm: PowerModel, cfg: SystemConfig) -> StrategyOutcome:
    """One RF chain per antenna; SVD beamforming with water-filling over every mode."""
    k = min(chan.n_rx, chan.n_tx)
    sigma = chan.sigma[:k]
    p = subproblem_waterfill(sigma**2 / cfg.noise_var, 0.0, beta_prime(pm, chan.n_tx), pm.p_max)
    se = se_diag(sigma, p, cfg.noise_var)
    ptot = total_power(pm, chan.n_tx, chan.n_rx, chan.n_tx, chan.n_rx, float(p.sum()))
    return StrategyOutcome(DIGITAL, chan.n_tx, se, energy_efficiency(se, ptot), ptot, 1, diag_p=p)


def analogue_factors(chan: ChannelRealization, p_max: float) -> HybridFactors:
    """Single-chain phase-only beamformers from the dominant singular vectors."""
    f_rf = np.exp(1j * np.angle(chan.v[:, :1])) / np.sqrt(chan.n_tx)
    w_rf = np.exp(1j * np.angle(chan.u[:, :1])) / np.sqrt(chan.n_rx)
    f_bb = np.array([[np.sqrt(p_max)]], dtype=complex)
    w_bb = np.ones((1, 1), dtype=complex)
    return HybridFactors(f_rf, f_bb, w_rf, w_bb, float("nan"), float("nan"))


def analogue_baseline(chan: ChannelRealization, pm: PowerModel, cfg: SystemConfig) -> StrategyOutcome:
    factors = analogue_factors(chan, pm.p_max)
    se = se_exact(chan.h, factors.f_rf, factors.f_bb, factors.w_rf, factors.w_bb, cfg.noise_var)
    ptot = total_power(pm, chan.n_tx, chan.n_rx, 1, 1, pm.p_max)
    return StrategyOutcome(ANALOGUE, 1, se, energy_efficiency(se, ptot), ptot, 1, factors, np.array([pm.p_max]))
