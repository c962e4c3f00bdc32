"""Spectral and energy efficiency."""

from __future__ import annotations

import numpy as np

# relative floor on the Cholesky pivots of W^H W before it counts as singular
_COMBINER_COND_FLOOR = 1e-12


def se_exact(h, f_rf, f_bb, w_rf, w_bb, noise_var) -> float:
    """Achievable rate in bits/s/Hz of a hybrid precoder/combiner pair.

    Evaluates ``log2 det(I + (W^H W)^-1 (W^H H F)(W^H H F)^H / noise_var)``
    with ``F = f_rf f_bb`` and ``W = w_rf w_bb``. The ``(W^H W)^-1`` factor
    whitens the combined noise, so the result does not depend on how the
    combiner columns are scaled or rotated.

    Raises
    ------
    numpy.linalg.LinAlgError
        If ``W^H W`` is singular (the combiner discards a dimension).
    """
    if noise_var <= 0:
        raise ValueError(f"noise_var must be positive, got {noise_var}")
    f = np.asarray(f_rf) @ np.asarray(f_bb)
    w = np.asarray(w_rf) @ np.asarray(w_bb)
    gram = w.conj().T @ w
    heff = w.conj().T @ np.asarray(h) @ f
    signal = heff @ heff.conj().T / noise_var
    # det(I + Q^-1 S) = det(Q + S) / det(Q)
    logdet_q = _chol_logdet(gram, check=True)
    logdet_qs = _chol_logdet(gram + signal)
    return max(0.0, float((logdet_qs - logdet_q) / np.log(2.0)))


def _chol_logdet(a, check=False):
    a = 0.5 * (a + a.conj().T)
    c = np.linalg.cholesky(a)
    d = np.abs(np.diag(c))
    if check and d.min() <= _COMBINER_COND_FLOOR * d.max():
        raise np.linalg.LinAlgError("singular combiner Gram matrix")
    return 2.0 * np.sum(np.log(d))


def se_diag(sigma_bar, diag_p, noise_var) -> float:
    """Rate of parallel eigen-channels, ``sum_k log2(1 + s_k^2 p_k / noise_var)``."""
    s = np.asarray(sigma_bar, dtype=float)
    p = np.asarray(diag_p, dtype=float)
    if s.shape != p.shape:
        raise ValueError(f"length mismatch: {s.shape} vs {p.shape}")
    if np.any(p < 0) or np.any(s < 0):
        raise ValueError("singular values and powers must be nonnegative")
    return float(np.sum(np.log2(1.0 + s**2 * p / noise_var)))


def energy_efficiency(se: float, total_power: float) -> float:
    """Bits per Hz per joule over a normalized 1 Hz bandwidth."""
    if not total_power > 0:
        raise ValueError(f"total power must be positive, got {total_power}")
    return se / total_power
