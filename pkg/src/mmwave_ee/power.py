"""Transceiver power consumption model."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

# slack on the transmit budget check, relative to p_max
_BUDGET_SLACK = 1e-9


@dataclass(frozen=True)
class PowerModel:
    """Hardware power constants in watts (``beta`` is 1 / amplifier efficiency)."""

    beta: float = 2.5
    p_cp: float = 10.0
    p_rf: float = 0.1
    p_ps: float = 0.01
    p_t: float = 0.1
    p_r: float = 0.1
    p_max: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not value > 0:
                raise ValueError(f"PowerModel.{f.name} must be positive, got {value}")

    def chain_overhead(self, n_antennas: int) -> float:
        """Power of one active RF chain plus its phase shifters."""
        return self.p_rf + n_antennas * self.p_ps

    def p_static(self, n_tx: int) -> float:
        return self.p_cp + n_tx * self.p_t


def total_power(pm: PowerModel, n_tx, n_rx, l_tx_opt, l_rx_opt, tr_p) -> float:
    """Total consumed power of the link in W.

    ``beta tr(P) + 2 P_CP + N_T P_T + N_R P_R + L_T (P_RF + N_T P_PS)
    + L_R (P_RF + N_R P_PS)``
    """
    if tr_p < 0:
        raise ValueError(f"transmit power must be nonnegative, got {tr_p}")
    if tr_p > pm.p_max * (1 + _BUDGET_SLACK):
        raise ValueError(f"transmit power {tr_p} exceeds budget {pm.p_max}")
    if l_tx_opt < 0 or l_rx_opt < 0:
        raise ValueError("chain counts must be nonnegative")
    return (
        pm.beta * tr_p
        + 2 * pm.p_cp
        + n_tx * pm.p_t
        + n_rx * pm.p_r
        + l_tx_opt * pm.chain_overhead(n_tx)
        + l_rx_opt * pm.chain_overhead(n_rx)
    )


def power_budget_cap(pm: PowerModel, n_tx, n_rx, l_tx_avail, l_rx_avail) -> float:
    """Upper bound on total power: full budget with every available chain on."""
    return total_power(pm, n_tx, n_rx, l_tx_avail, l_rx_avail, pm.p_max)


def tx_power(pm: PowerModel, n_tx, diag_p) -> float:
    """Transmitter-side power for a per-stream allocation.

    Chain overhead is charged only for streams with strictly positive power;
    a zero entry is an open switch.
    """
    p = np.asarray(diag_p, dtype=float)
    if np.any(p < 0):
        raise ValueError("per-stream powers must be nonnegative")
    active = p > 0
    return pm.p_static(n_tx) + float(
        np.sum(pm.beta * p[active] + pm.chain_overhead(n_tx))
    )


def beta_prime(pm: PowerModel, n_tx) -> float:
    """Amplifier factor with chain overhead spread over the budget."""
    return pm.beta + pm.chain_overhead(n_tx) / pm.p_max
