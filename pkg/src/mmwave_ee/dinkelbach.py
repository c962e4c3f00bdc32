"""RF-chain selection by Dinkelbach iterations over eigen-channel powers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, SystemConfig
from .power import PowerModel, beta_prime, power_budget_cap, total_power
from .rate import energy_efficiency, se_diag

LN2 = np.log(2.0)

DEFAULT_I_MAX = 20


@dataclass(frozen=True)
class IterationRecord:
    """One pass of the loop.

    ``nu`` is the parameter the subproblem was solved with and ``g_value``
    is ``se - nu * tx_pow`` at the thresholded solution. ``ee`` is the rate
    over the total link power with the current number of active chains.
    """

    m: int
    nu: float
    g_value: float
    se: float
    tx_pow: float
    active_count: int
    ee: float


@dataclass
class DinkelbachTrace:
    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def iterations(self) -> int:
        """Number of subproblem solves (the initial point is not counted)."""
        return len(self.records) - 1

    def nu_sequence(self) -> np.ndarray:
        """Parameter values nu^(0), nu^(1), ... including the final update."""
        if len(self.records) == 1:
            return np.array([0.0])
        last = self.records[-1]
        return np.array([r.nu for r in self.records[1:]] + [last.se / last.tx_pow])


@dataclass
class SelectionResult:
    diag_p: np.ndarray
    l_opt: int
    se: float
    ee: float
    total_power: float
    nu: float
    nu_solve: float
    gains: np.ndarray
    beta_prime: float
    trace: DinkelbachTrace
    converged: bool
    feasible: bool

    @property
    def n_s(self) -> int:
        return self.l_opt

    @property
    def status(self) -> str:
        if not self.converged:
            return "max_iterations"
        return "ok" if self.feasible else "infeasible"


def waterfill_with_multiplier(gains, nu, beta_prime, p_max):
    """Maximize ``sum log2(1 + g_k p_k) - nu beta' sum p_k`` over the budget set.

    Returns the allocation and the budget multiplier ``mu`` (zero when the
    budget is slack). Active entries sit at ``p_k = 1/((nu beta' + mu) ln 2)
    - 1/g_k``.
    """
    g = np.asarray(gains, dtype=float)
    if g.ndim != 1:
        raise ValueError("gains must be a vector")
    if np.any(g < 0) or nu < 0:
        raise ValueError("gains and nu must be nonnegative")
    if not (beta_prime > 0 and p_max > 0):
        raise ValueError("beta_prime and p_max must be positive")

    p = np.zeros_like(g)
    with np.errstate(divide="ignore", over="ignore"):
        inv_all = 1.0 / g
    # denormal gains are as good as switched off
    pos = np.isfinite(inv_all)
    if not pos.any():
        return p, 0.0
    inv = inv_all[pos]
    price = nu * beta_prime
    if price > 0:
        with np.errstate(over="ignore"):
            level = 1.0 / (price * LN2)
        p_free = np.maximum(0.0, level - inv)
        if p_free.sum() <= p_max:
            p[pos] = p_free
            return p, 0.0

    order = np.argsort(inv, kind="stable")
    csum = np.cumsum(inv[order])
    # largest active set whose common level clears its weakest member
    for k in range(order.size, 0, -1):
        level = (p_max + csum[k - 1]) / k
        if level > inv[order[k - 1]]:
            break
    p[pos] = np.maximum(0.0, level - inv)
    mu = max(0.0, 1.0 / (level * LN2) - price)
    return p, mu


def subproblem_waterfill(gains, nu, beta_prime, p_max) -> np.ndarray:
    """Power allocation solving one Dinkelbach step; see :func:`waterfill_with_multiplier`."""
    return waterfill_with_multiplier(gains, nu, beta_prime, p_max)[0]


def subproblem_objective(gains, p, nu, beta_prime) -> float:
    g = np.asarray(gains, dtype=float)
    p = np.asarray(p, dtype=float)
    return float(np.sum(np.log2(1.0 + g * p)) - nu * beta_prime * np.sum(p))


def threshold_allocation(p, eps_th) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    return np.where(p < eps_th, 0.0, p)


def kkt_violation(gains, p, nu, beta_prime, p_max) -> float:
    """Largest KKT residual of an allocation for the step with parameter ``nu``.

    The budget multiplier is recovered from the active entries rather than
    taken from the solver.
    """
    g = np.asarray(gains, dtype=float)
    p = np.asarray(p, dtype=float)
    price = nu * beta_prime
    active = p > 0
    marginal = g / ((1.0 + g * p) * LN2)
    mu = max(0.0, float(marginal[active].mean()) - price) if active.any() else 0.0
    lam = price + mu
    worst = 0.0
    if active.any():
        worst = float(np.max(np.abs(marginal[active] - lam)))
    if (~active).any():
        worst = max(worst, float(np.max(g[~active] / LN2 - lam)))
    # complementary slackness and primal feasibility
    worst = max(worst, mu * (p_max - p.sum()), p.sum() - p_max)
    return worst


def run_dinkelbach(
    chan: ChannelRealization,
    pm: PowerModel,
    cfg: SystemConfig,
    i_max: int = DEFAULT_I_MAX,
) -> SelectionResult:
    """Select the energy-efficient number of active RF chains.

    Starts from the uniform allocation over the ``l_avail`` strongest
    eigen-modes with ``nu = 0``. Each pass solves the water-filling step,
    zeroes entries below ``cfg.eps_th``, evaluates rate and transmitter power
    on the thresholded allocation and sets ``nu = R / P_TX``. Stops once
    ``|R - nu P_TX| <= cfg.eps_outer`` or after ``i_max`` passes.

    Running out of iterations and missing the rate floor are reported in
    ``converged`` and ``feasible``; neither raises.
    """
    k = chan.l_avail
    if k < 1:
        raise ValueError("channel has no available RF chains")
    sigma_bar = chan.sigma[:k]
    noise_var = cfg.noise_var
    gains = sigma_bar**2 / noise_var
    bp = beta_prime(pm, chan.n_tx)

    def record(m, nu, p):
        se = se_diag(sigma_bar, p, noise_var)
        ptx = pm.p_static(chan.n_tx) + bp * p.sum()
        n_act = int(np.count_nonzero(p))
        ptot = total_power(pm, chan.n_tx, chan.n_rx, n_act, n_act, min(p.sum(), pm.p_max))
        return IterationRecord(m, nu, se - nu * ptx, se, ptx, n_act, energy_efficiency(se, ptot))

    p = np.full(k, pm.p_max / k)
    nu = 0.0
    trace = DinkelbachTrace([record(0, nu, p)])
    nu_solve = nu
    converged = abs(trace[-1].g_value) <= cfg.eps_outer
    m = 0
    while not converged and m < i_max:
        m += 1
        p = threshold_allocation(subproblem_waterfill(gains, nu, bp, pm.p_max), cfg.eps_th)
        rec = record(m, nu, p)
        trace.records.append(rec)
        nu_solve = nu
        nu = rec.se / rec.tx_pow
        converged = abs(rec.g_value) <= cfg.eps_outer

    l_opt = int(np.count_nonzero(p))
    last = trace[-1]
    tr_p = min(float(p.sum()), pm.p_max)
    ptot = total_power(pm, chan.n_tx, chan.n_rx, l_opt, l_opt, tr_p)
    cap = power_budget_cap(pm, chan.n_tx, chan.n_rx, k, k)
    return SelectionResult(
        diag_p=p,
        l_opt=l_opt,
        se=last.se,
        ee=energy_efficiency(last.se, ptot),
        total_power=ptot,
        nu=last.se / last.tx_pow,
        nu_solve=nu_solve,
        gains=gains,
        beta_prime=bp,
        trace=trace,
        converged=converged,
        feasible=last.se >= cfg.r_min and ptot <= cap,
    )
