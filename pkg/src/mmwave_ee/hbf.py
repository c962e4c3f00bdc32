"""Hybrid precoder/combiner design by sparse approximation.

The fully digital SVD beamformers are factored into a constant-modulus
analogue matrix, whose columns are picked from a dictionary of array
responses, and a small digital matrix. Two pursuit rules are provided:
orthogonal matching pursuit, which re-solves least squares after every pick,
and gradient pursuit, which takes one exact-line-search gradient step instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, ula_response

OMP = "omp"
GP = "gp"
METHODS = (OMP, GP)


@dataclass(frozen=True)
class Dictionary:
    atoms: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=complex)
        if atoms.ndim != 2 or atoms.shape[1] == 0:
            raise ValueError("dictionary needs a 2-D array with at least one atom")
        object.__setattr__(self, "atoms", atoms)

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]

    @classmethod
    def from_angles(cls, n_elements, angles_deg, spacing=0.5) -> Dictionary:
        return cls(ula_response(n_elements, np.asarray(angles_deg, dtype=float), spacing))

    @classmethod
    def grid(cls, n_elements, n_points, spacing=0.5, span_deg=(-90.0, 90.0)) -> Dictionary:
        """Uniform angle grid, for runs without knowledge of the path angles."""
        return cls.from_angles(n_elements, np.linspace(*span_deg, n_points), spacing)


def path_dictionaries(chan: ChannelRealization, spacing=0.5) -> tuple[Dictionary, Dictionary]:
    """TX and RX dictionaries built from the realization's own path angles."""
    return (
        Dictionary.from_angles(chan.n_tx, chan.aod_deg, spacing),
        Dictionary.from_angles(chan.n_rx, chan.aoa_deg, spacing),
    )


@dataclass(frozen=True)
class Factorization:
    rf: np.ndarray
    bb: np.ndarray
    selected: tuple[int, ...]
    residual: float
    rank_deficient: bool = False


@dataclass(frozen=True)
class HybridFactors:
    f_rf: np.ndarray
    f_bb: np.ndarray
    w_rf: np.ndarray
    w_bb: np.ndarray
    residual_tx: float
    residual_rx: float


def digital_precoder(chan: ChannelRealization, diag_p, n_s: int) -> np.ndarray:
    """Right singular vectors of the strongest ``n_s`` modes, column k scaled by sqrt(p_k)."""
    if not 1 <= n_s <= chan.l_avail:
        raise ValueError(f"n_s={n_s} outside [1, {chan.l_avail}]")
    p = np.asarray(diag_p, dtype=float)
    if p.size < n_s or np.any(p[:n_s] <= 0):
        raise ValueError("diag_p must have n_s positive leading entries")
    return chan.v[:, :n_s] * np.sqrt(p[:n_s])


def digital_combiner(chan: ChannelRealization, n_s: int) -> np.ndarray:
    if not 1 <= n_s <= chan.l_avail:
        raise ValueError(f"n_s={n_s} outside [1, {chan.l_avail}]")
    return chan.u[:, :n_s]


def _constant_modulus(atoms):
    return np.exp(1j * np.angle(atoms)) / np.sqrt(atoms.shape[0])


def _check_args(target, dictionary, l):
    target = np.asarray(target, dtype=complex)
    if target.ndim == 1:
        target = target[:, None]
    if target.shape[0] != dictionary.atoms.shape[0]:
        raise ValueError(
            f"target has {target.shape[0]} rows, dictionary atoms have {dictionary.atoms.shape[0]}"
        )
    if l < target.shape[1]:
        raise ValueError(f"need at least {target.shape[1]} chains, got {l}")
    if l > dictionary.n_atoms:
        raise ValueError(f"cannot pick {l} atoms from a dictionary of {dictionary.n_atoms}")
    return target


def _select_atom(candidates, residual, taken):
    """Index of the atom most correlated with the residual; lowest index wins ties."""
    score = np.sum(np.abs(candidates.conj().T @ residual) ** 2, axis=1)
    score[list(taken)] = -np.inf
    return int(np.argmax(score))


def _finish(target, rf, bb, selected, power_cap, rank_deficient):
    approx = rf @ bb
    norm_t = np.linalg.norm(target)
    residual = float(np.linalg.norm(target - approx) / norm_t) if norm_t > 0 else 0.0
    if power_cap is not None:
        scale = np.linalg.norm(approx)
        if scale > 0:
            bb = bb * (np.sqrt(power_cap) / scale)
    return Factorization(rf, bb, tuple(selected), residual, rank_deficient)


def _least_squares(rf, target):
    coef, _, rank, _ = np.linalg.lstsq(rf, target, rcond=None)
    return coef, rank < rf.shape[1]


def omp_factorize(target, dictionary: Dictionary, l: int, power_cap=None) -> Factorization:
    """Orthogonal matching pursuit with ``l`` picks.

    If ``power_cap`` is given the digital part is rescaled so that
    ``||rf @ bb||_F^2 == power_cap``.
    """
    target = _check_args(target, dictionary, l)
    candidates = _constant_modulus(dictionary.atoms)
    selected: list[int] = []
    residual = target
    deficient = False
    bb = np.zeros((0, target.shape[1]), dtype=complex)
    for _ in range(l):
        selected.append(_select_atom(candidates, residual, selected))
        rf = candidates[:, selected]
        bb, deficient = _least_squares(rf, target)
        residual = target - rf @ bb
    if deficient:
        warnings.warn("selected atoms are linearly dependent; used minimum-norm solution")
    return _finish(target, candidates[:, selected], bb, selected, power_cap, deficient)


def _gradient_step(rf, bb, residual):
    """One steepest-descent update of ``bb`` per target column with exact line search.

    Uses matrix products only; no linear system is solved.
    """
    grad = rf.conj().T @ residual
    direction = rf @ grad
    num = np.sum(np.abs(grad) ** 2, axis=0)
    den = np.sum(np.abs(direction) ** 2, axis=0)
    step = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return bb + grad * step, residual - direction * step


def gp_factorize(target, dictionary: Dictionary, l: int, power_cap=None, polish=True) -> Factorization:
    """Gradient pursuit with ``l`` picks.

    Atom selection matches :func:`omp_factorize`. After each pick the
    coefficients take one gradient step instead of a least-squares solve.
    With ``polish`` a single least-squares fit on the final support is done
    after the loop.
    """
    target = _check_args(target, dictionary, l)
    candidates = _constant_modulus(dictionary.atoms)
    selected: list[int] = []
    residual = target
    bb = np.zeros((0, target.shape[1]), dtype=complex)
    for _ in range(l):
        selected.append(_select_atom(candidates, residual, selected))
        bb = np.vstack([bb, np.zeros((1, target.shape[1]), dtype=complex)])
        bb, residual = _gradient_step(candidates[:, selected], bb, residual)
    rf = candidates[:, selected]
    deficient = False
    if polish:
        bb, deficient = _least_squares(rf, target)
        if deficient:
            warnings.warn("selected atoms are linearly dependent; used minimum-norm solution")
    return _finish(target, rf, bb, selected, power_cap, deficient)


def factorize(target, dictionary, l, power_cap=None, method=OMP, polish=True) -> Factorization:
    if method == OMP:
        return omp_factorize(target, dictionary, l, power_cap)
    if method == GP:
        return gp_factorize(target, dictionary, l, power_cap, polish=polish)
    raise ValueError(f"unknown pursuit method {method!r}; expected one of {METHODS}")


def design_all(
    chan: ChannelRealization,
    diag_p,
    n_s: int,
    p_max: float,
    method: str = OMP,
    n_rf: int | None = None,
    dictionaries: tuple[Dictionary, Dictionary] | None = None,
    polish: bool = True,
) -> HybridFactors:
    """Hybrid approximations of the SVD precoder and combiner.

    Both sides use ``n_rf`` RF chains (default ``n_s``). The precoder is
    scaled so that ``||F_RF F_BB||_F^2 == p_max``; the combiner is left
    unscaled.
    """
    if n_s < 1:
        raise ValueError("need at least one stream")
    n_rf = n_s if n_rf is None else n_rf
    tx_dict, rx_dict = dictionaries if dictionaries is not None else path_dictionaries(chan)
    f_opt = digital_precoder(chan, diag_p, n_s)
    w_opt = digital_combiner(chan, n_s)
    tx = factorize(f_opt, tx_dict, n_rf, power_cap=p_max, method=method, polish=polish)
    rx = factorize(w_opt, rx_dict, n_rf, power_cap=None, method=method, polish=polish)
    return HybridFactors(tx.rf, tx.bb, rx.rf, rx.bb, tx.residual, rx.residual)
