"""Fractional increment norms and Hölder-exponent regression.

Fields are sampled on a uniform x-grid and taken to vanish outside it.
Ensembles have shape ``(R, T, M)`` (realizations, times, nodes); a 2-D array
is a single deterministic field, for which no minimum ensemble size applies.

The lag weight is ``|h|^(-1-2 beta) = |h|^(2H-2)`` with ``beta = 1/2 - H``.
Lags run over integer multiples of ``dx`` in ``[h_min, h_max]``; between lags
the squared increment norm is interpolated linearly and integrated exactly
against the weight.  Beyond ``h_max`` the increments of a zero-extended field
decouple, ``||D_h u||^p -> ||u(.+h)||^p + ||u||^p``, and that closed form is used
for the tail (exact once ``h_max`` exceeds the window).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn
from scipy.stats import linregress

from ._quad import power_segment_integral

__all__ = [
    "NormConfig",
    "Axis",
    "lag_steps",
    "n_beta_p_estimate",
    "n_star_profile",
    "z_norm_estimate",
    "norm_report",
    "holder_exponent",
    "increment_moments",
    "c_hurst",
    "isometry_constant",
]

MIN_ENSEMBLE_NBETA = 100
MIN_ENSEMBLE_HOLDER = 500


@dataclass(frozen=True)
class NormConfig:
    p: float = 2.0
    hurst: float = 0.4
    dx: float = 1.0 / 128
    h_min: float | None = None
    h_max: float | None = None
    lag_count: int = 64

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("p must be at least 2")
        if not (0.0 < self.hurst < 0.5):
            raise ValueError("H must lie in (0, 1/2)")
        if self.dx <= 0:
            raise ValueError("dx must be positive")
        if self.h_min is not None and self.h_min < self.dx * (1 - 1e-12):
            raise ValueError("h_min must be at least dx")
        if self.h_min is not None and self.h_max is not None and self.h_max <= self.h_min:
            raise ValueError("h_max must exceed h_min")

    @property
    def beta(self) -> float:
        return 0.5 - self.hurst

    @property
    def weight_power(self) -> float:
        return -1.0 - 2.0 * self.beta


class Axis(str, Enum):
    TIME = "TIME"
    SPACE = "SPACE"


def lag_steps(config: NormConfig, nodes: int) -> np.ndarray:
    """Distinct integer lags, geometric between ``h_min`` and ``h_max``.

    ``h_max`` defaults to the full window ``(nodes - 1) dx``.
    """
    k_min = max(1, int(round((config.h_min or config.dx) / config.dx)))
    k_max = nodes - 1 if config.h_max is None else int(round(config.h_max / config.dx))
    k_max = max(k_max, k_min + 1)
    ks = np.unique(np.round(np.geomspace(k_min, k_max, config.lag_count)).astype(int))
    return ks


def _as_ensemble(u) -> tuple[np.ndarray, bool]:
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        return u[None, None, :], True
    if u.ndim == 2:
        return u[None], True
    if u.ndim == 3:
        return u, False
    raise ValueError("expected a (realizations, times, nodes) array")


def _check_finite(u: np.ndarray) -> None:
    bad = ~np.isfinite(u).reshape(u.shape[0], -1).all(axis=1)
    if bad.any():
        raise FloatingPointError(f"non-finite values in realization {int(np.flatnonzero(bad)[0])}")


def _sd(ext: np.ndarray, k: int, M: int) -> np.ndarray:
    # ext has k zeros on both sides; result covers x from -k dx to (M-1) dx
    return ext[..., k:] - ext[..., :-k]


def _lag_integral(ks: np.ndarray, g: np.ndarray, g_far: np.ndarray, config: NormConfig) -> np.ndarray:
    """``int_{h_min}^inf g(h) h^w dh`` from lag samples ``g[..., i]`` at ``ks[i] dx``."""
    w = config.weight_power
    h = ks * config.dx
    body = power_segment_integral(h[:-1], h[1:], g[..., :-1], g[..., 1:], w).sum(axis=-1)
    tail = g_far * h[-1] ** (w + 1.0) / (-(w + 1.0))
    return body + tail


def _moment(x: np.ndarray, p: float) -> np.ndarray:
    """Empirical ``E|x|^p`` over the realization axis."""
    return np.mean(np.abs(x) ** p, axis=0)


def n_star_profile(u, config: NormConfig) -> np.ndarray:
    """``N*_{1/2-H,p}`` of each time slice (``L^p(Omega x R)`` inner norm)."""
    u, _ = _as_ensemble(u)
    _check_finite(u)
    p, dx = config.p, config.dx
    ks = lag_steps(config, u.shape[-1])
    g = np.empty((u.shape[1], ks.size))
    for i, k in enumerate(ks):
        mom = _moment(_sd(np.pad(u, ((0, 0), (0, 0), (k, k))), k, u.shape[-1]), p)
        g[:, i] = (mom.sum(axis=-1) * dx) ** (2.0 / p)
    norm_p = _moment(u, p).sum(axis=-1) * dx
    g_far = (2.0 * norm_p) ** (2.0 / p)
    # both signs of h give the same L^p(Omega x R) norm
    return np.sqrt(2.0 * _lag_integral(ks, g, g_far, config))


def n_beta_p_estimate(ensemble, config: NormConfig, t_index: int, x_index: int) -> float:
    """Pointwise ``N_{beta,p}`` at node ``(t_index, x_index)`` with two-sided lags."""
    u, deterministic = _as_ensemble(ensemble)
    if not deterministic and u.shape[0] < MIN_ENSEMBLE_NBETA:
        raise ValueError(f"ensemble of {u.shape[0]} realizations, need >= {MIN_ENSEMBLE_NBETA}")
    _check_finite(u)
    row = u[:, t_index, :]
    M = row.shape[-1]
    p = config.p
    span = max(x_index, M - 1 - x_index)
    cfg = config if config.h_max is not None else NormConfig(config.p, config.hurst, config.dx,
                                                             config.h_min, max(span, 1) * config.dx,
                                                             config.lag_count)
    ks = lag_steps(cfg, M)
    base = row[:, x_index]
    g = np.zeros(ks.size)
    for i, k in enumerate(ks):
        for j in (x_index + k, x_index - k):
            other = row[:, j] if 0 <= j < M else 0.0
            g[i] += _moment(other - base, p) ** (2.0 / p)
    g_far = 2.0 * _moment(base, p) ** (2.0 / p)
    return float(np.sqrt(_lag_integral(ks, g, g_far, cfg)))


def z_norm_estimate(ensemble, config: NormConfig) -> tuple[float, float, float]:
    """``(z1, z2, z1 + z2)``: sup over grid times of the ``L^p(Omega x R)`` norm and of ``N*``."""
    z1t, z2t = norm_report(ensemble, config)
    z1, z2 = float(z1t.max()), float(z2t.max())
    return z1, z2, z1 + z2


def norm_report(ensemble, config: NormConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-time ``(||u(t)||_{L^p(Omega x R)}, N*(u(t)))``."""
    u, _ = _as_ensemble(ensemble)
    _check_finite(u)
    p, dx = config.p, config.dx
    z1 = (_moment(u, p).sum(axis=-1) * dx) ** (1.0 / p)
    return z1, n_star_profile(u, config)


def increment_moments(ensemble, axis: Axis, p: float, steps, t_slice=slice(None), x_slice=slice(None)):
    """Pooled ``E|Delta u|^p`` for each lag (in index steps).

    Base points are the nodes selected by ``t_slice``/``x_slice`` for which the
    largest lag still lands on the grid, so every lag uses the same base set.
    """
    u, _ = _as_ensemble(ensemble)
    _check_finite(u)
    axis = Axis(axis)
    steps = np.asarray(steps, dtype=int)
    T, M = u.shape[1:]
    kmax = int(steps.max())
    ti = np.arange(T)[t_slice]
    xi = np.arange(M)[x_slice]
    if axis is Axis.SPACE:
        xi = xi[xi + kmax < M]
    else:
        ti = ti[ti + kmax < T]
    if ti.size == 0 or xi.size == 0:
        raise ValueError("no base points admit the largest lag")
    out = np.empty(steps.size)
    for n, k in enumerate(steps):
        if axis is Axis.SPACE:
            d = u[:, ti][:, :, xi + k] - u[:, ti][:, :, xi]
        else:
            d = u[:, ti + k][:, :, xi] - u[:, ti][:, :, xi]
        out[n] = np.mean(np.abs(d) ** p)
    return out


def holder_exponent(ensemble, axis: Axis, p: float, lag_range, step: float,
                    t_slice=slice(None), x_slice=slice(None), lag_count: int = 6) -> tuple[float, float]:
    """Slope of ``(1/p) log E|Delta u|^p`` against ``log lag`` with its standard error.

    ``lag_range`` is in physical units; ``step`` is the grid spacing along ``axis``.
    """
    u, deterministic = _as_ensemble(ensemble)
    if not deterministic and u.shape[0] < MIN_ENSEMBLE_HOLDER:
        raise ValueError(f"ensemble of {u.shape[0]} realizations, need >= {MIN_ENSEMBLE_HOLDER}")
    lo, hi = lag_range
    k_lo = max(1, int(round(lo / step)))
    k_hi = int(round(hi / step))
    steps = np.unique(np.round(np.geomspace(k_lo, k_hi, lag_count)).astype(int))
    if steps.size < 4:
        raise ValueError("need at least 4 distinct lags")
    m = increment_moments(u, axis, p, steps, t_slice, x_slice)
    if np.any(m <= 0):
        raise ValueError("degenerate regression: vanishing increments")
    y = np.log(m) / p
    x = np.log(steps * step)
    if np.ptp(y) == 0:
        raise ValueError("degenerate regression: constant increments")
    fit = linregress(x, y)
    return float(fit.slope), float(fit.stderr)


def c_hurst(hurst: float) -> float:
    """``c_H`` normalizing the fractional scalar product, from its integral formula."""
    h = hurst
    f = lambda t: ((1.0 + t) ** (h - 0.5) - t ** (h - 0.5)) ** 2
    integral = quad(f, 0.0, 1.0, limit=200)[0] + quad(f, 1.0, np.inf, limit=200)[0]
    c2 = h * (0.5 - h) / gamma_fn(h + 0.5) ** 2 * (integral + 1.0 / (2.0 * h))
    return math.sqrt(c2)


def isometry_constant(hurst: float) -> float:
    """Constant ``C`` in ``E|int phi dW|^2 = C int int |phi_hat(s, xi)|^2 |xi|^{1-2H} dxi ds``
    for noise with the covariance of the noise module (Fourier convention ``e^{-i x xi}``)."""
    return gamma_fn(2.0 * hurst + 1.0) * math.sin(math.pi * hurst) / (2.0 * math.pi)
