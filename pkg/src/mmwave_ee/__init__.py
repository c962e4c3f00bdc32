"""Energy-efficient RF-chain selection for hybrid mmWave MIMO links."""

from .baselines import (
    StrategyOutcome,
    analogue_baseline,
    brute_force_select,
    digital_baseline,
    dinkelbach_select,
)
from .channel import ChannelRealization, PathParams, SystemConfig, generate_channel, ula_response
from .dinkelbach import SelectionResult, run_dinkelbach, subproblem_waterfill, threshold_allocation
from .hbf import Dictionary, HybridFactors, design_all, gp_factorize, omp_factorize
from .power import PowerModel, beta_prime, power_budget_cap, total_power, tx_power
from .rate import energy_efficiency, se_diag, se_exact
from .sim import ExperimentConfig, SweepRow, emit_csv, run_sweep

__version__ = "0.1.0"
