"""Clustered narrowband mmWave channel with uniform-linear-array responses."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class SystemConfig:
    """Dimensional and numerical parameters of one link configuration.

    Defaults follow the simulated system: 32 x 8 antennas, 2 clusters of
    10 rays, 7.5 degree spread, cluster means in [60, 120] degrees,
    half-wavelength spacing.
    """

    n_tx: int = 32
    n_rx: int = 8
    n_cl: int = 2
    n_ray: int = 10
    angular_spread_deg: float = 7.5
    mean_angle_range_deg: tuple[float, float] = (60.0, 120.0)
    snr: float = 1.0
    element_spacing_wavelengths: float = 0.5
    r_min: float = 1.0
    eps_outer: float = 1e-4
    eps_th: float = 1e-6
    rank_tol: float = 1e-4

    def __post_init__(self):
        if not self.n_tx >= self.n_rx >= 1:
            raise ValueError(f"need n_tx >= n_rx >= 1, got {self.n_tx}, {self.n_rx}")
        if self.n_cl < 1 or self.n_ray < 1:
            raise ValueError("n_cl and n_ray must be positive")
        if not self.snr > 0:
            raise ValueError(f"snr must be positive, got {self.snr}")
        if self.angular_spread_deg < 0:
            raise ValueError("angular_spread_deg must be nonnegative")
        lo, hi = self.mean_angle_range_deg
        if lo > hi:
            raise ValueError(f"empty mean angle range ({lo}, {hi})")
        if not (self.eps_outer > 0 and self.eps_th > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.rank_tol < 1:
            raise ValueError("rank_tol must lie in (0, 1)")
        object.__setattr__(self, "mean_angle_range_deg", (float(lo), float(hi)))

    @property
    def noise_var(self) -> float:
        return 1.0 / self.snr

    @property
    def snr_db(self) -> float:
        return 10.0 * np.log10(self.snr)

    def with_snr_db(self, snr_db: float) -> SystemConfig:
        return replace(self, snr=10.0 ** (snr_db / 10.0))


@dataclass(frozen=True)
class PathParams:
    gain: complex
    aod_deg: float
    aoa_deg: float
    cluster_index: int
    ray_index: int


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Channel matrix, its full SVD and the paths that produced it.

    ``sigma`` has length ``min(n_rx, n_tx)`` in descending order; ``u`` and
    ``v`` are the full square unitary bases.
    """

    h: np.ndarray
    paths: list[PathParams]
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    l_avail: int
    aod_deg: np.ndarray = field(repr=False)
    aoa_deg: np.ndarray = field(repr=False)

    @property
    def n_rx(self) -> int:
        return self.h.shape[0]

    @property
    def n_tx(self) -> int:
        return self.h.shape[1]

    def reconstruction_error(self) -> float:
        """Relative Frobenius error of U diag(sigma) V^H against H."""
        k = self.sigma.size
        approx = (self.u[:, :k] * self.sigma) @ self.v[:, :k].conj().T
        return float(np.linalg.norm(approx - self.h) / np.linalg.norm(self.h))


def ula_response(n_elements: int, azimuth_deg, spacing: float = 0.5) -> np.ndarray:
    """Unit-norm ULA response ``exp(j 2 pi d k sin(phi)) / sqrt(N)``.

    A scalar angle gives a vector of length ``n_elements``; an array of
    angles gives a matrix with one response per column.
    """
    if n_elements < 1:
        raise ValueError(f"n_elements must be >= 1, got {n_elements}")
    phi = np.deg2rad(np.asarray(azimuth_deg, dtype=float))
    k = np.arange(n_elements).reshape((-1,) + (1,) * phi.ndim)
    return np.exp(2j * np.pi * spacing * k * np.sin(phi)) / np.sqrt(n_elements)


def draw_path_params(rng: np.random.Generator, cfg: SystemConfig) -> list[PathParams]:
    """Draw per-ray gains and angles.

    Cluster means are uniform over ``cfg.mean_angle_range_deg`` (drawn
    separately for departure and arrival); ray offsets are Laplacian with
    standard deviation ``cfg.angular_spread_deg``; gains are CN(0, 1).
    """
    aod, aoa, gains = _draw_arrays(rng, cfg)
    return [
        PathParams(
            gain=complex(gains[i, l]),
            aod_deg=float(aod[i, l]),
            aoa_deg=float(aoa[i, l]),
            cluster_index=i + 1,
            ray_index=l + 1,
        )
        for i in range(cfg.n_cl)
        for l in range(cfg.n_ray)
    ]


def _draw_arrays(rng, cfg):
    shape = (cfg.n_cl, cfg.n_ray)
    lo, hi = cfg.mean_angle_range_deg
    mean_aod = rng.uniform(lo, hi, size=(cfg.n_cl, 1))
    mean_aoa = rng.uniform(lo, hi, size=(cfg.n_cl, 1))
    # Laplace(scale=b) has standard deviation b*sqrt(2)
    b = cfg.angular_spread_deg / np.sqrt(2.0)
    aod = mean_aod + rng.laplace(0.0, b, size=shape)
    aoa = mean_aoa + rng.laplace(0.0, b, size=shape)
    gains = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return aod, aoa, gains


def generate_channel(rng: np.random.Generator, cfg: SystemConfig) -> ChannelRealization:
    """Draw one realization of the clustered channel and decompose it.

    ``H = gamma * sum_il alpha_il a_R(aoa_il) a_T(aod_il)^H`` with
    ``gamma = sqrt(N_T N_R / (N_cl N_ray))`` so that ``E||H||_F^2 = N_T N_R``.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the SVD fails to converge.
    """
    paths = draw_path_params(rng, cfg)
    gains = np.array([p.gain for p in paths])
    aod = np.array([p.aod_deg for p in paths])
    aoa = np.array([p.aoa_deg for p in paths])
    d = cfg.element_spacing_wavelengths
    a_t = ula_response(cfg.n_tx, aod, d)
    a_r = ula_response(cfg.n_rx, aoa, d)
    gamma = np.sqrt(cfg.n_tx * cfg.n_rx / (cfg.n_cl * cfg.n_ray))
    h = gamma * (a_r * gains) @ a_t.conj().T
    return decompose(h, paths, cfg.rank_tol, aod, aoa)


def decompose(h, paths, rank_tol, aod_deg=None, aoa_deg=None) -> ChannelRealization:
    """Wrap an explicit channel matrix with its SVD and effective rank."""
    h = np.asarray(h, dtype=complex)
    u, sigma, vh = np.linalg.svd(h, full_matrices=True)
    if not np.all(np.isfinite(sigma)):
        raise np.linalg.LinAlgError("non-finite singular values")
    l_avail = max(1, int(np.count_nonzero(sigma >= rank_tol * sigma[0])))
    if aod_deg is None:
        aod_deg = np.array([p.aod_deg for p in paths])
    if aoa_deg is None:
        aoa_deg = np.array([p.aoa_deg for p in paths])
    return ChannelRealization(
        h=h,
        paths=list(paths),
        u=u,
        sigma=sigma,
        v=vh.conj().T,
        l_avail=l_avail,
        aod_deg=np.asarray(aod_deg, dtype=float),
        aoa_deg=np.asarray(aoa_deg, dtype=float),
    )


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a trial, addressed by integer coordinates.

    Streams depend only on ``(seed, *key)``, never on the order in which
    trials are drawn.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))
