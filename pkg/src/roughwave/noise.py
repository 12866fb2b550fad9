"""Gaussian noise white in time and fractional in space.

The field ``W`` has covariance

    E[W(t, x) W(s, y)] = 1/2 (s ^ t) (|x|^{2H} + |y|^{2H} - |x - y|^{2H}).

Cell increments over ``[t_i, t_{i+1}] x [x_j, x_{j+1}]`` are stored row by row;
each row is ``sqrt(dt)`` times a fractional Gaussian noise sequence.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.ndimage import convolve1d

__all__ = [
    "GridSpec",
    "NoiseParams",
    "NoiseField",
    "EmbeddingError",
    "fgn_covariance",
    "fgn_covariance_matrix",
    "sample_noise_field",
    "sample_fgn_rows",
    "mollifier_weights",
    "mollify_field",
    "mollify_rows",
    "empirical_w_covariance",
    "w_covariance",
    "derive_rng",
    "save_binary",
    "load_binary",
    "save_csv",
    "load_csv",
]

# Davies-Harte eigenvalues more negative than this (relative to the largest) are fatal.
EIG_TOL = 1e-10
# Largest row length for which an exact Cholesky fallback is attempted.
CHOLESKY_MAX = 4096


class EmbeddingError(RuntimeError):
    """The circulant embedding is indefinite and no fallback applies."""


@dataclass(frozen=True)
class GridSpec:
    t_count: int
    x_count: int
    dt: float
    dx: float
    t0: float = 0.0
    x0: float = 0.0

    def __post_init__(self):
        if not (self.dt > 0 and self.dx > 0):
            raise ValueError("dt and dx must be positive")
        if int(self.t_count) < 1 or int(self.x_count) < 2:
            raise ValueError("need t_count >= 1 and x_count >= 2")

    @property
    def t_nodes(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.t_count + 1)

    @property
    def x_nodes(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.x_count + 1)

    @property
    def x_extent(self) -> float:
        return self.x_count * self.dx


@dataclass(frozen=True)
class NoiseParams:
    hurst: float
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.hurst <= 0.5):
            raise ValueError(f"H outside (0, 1/2]: {self.hurst}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class NoiseField:
    increments: np.ndarray
    grid: GridSpec
    params: NoiseParams
    eps: float = field(default=0.0)

    def __post_init__(self):
        shape = (self.grid.t_count, self.grid.x_count)
        if self.increments.shape != shape:
            raise ValueError(f"increments shape {self.increments.shape} != {shape}")

    def with_increments(self, increments: np.ndarray, eps: float | None = None) -> "NoiseField":
        return replace(self, increments=increments, eps=self.eps if eps is None else eps)


def _check_hurst(hurst: float) -> None:
    if not (0.0 < hurst <= 1.0):
        raise ValueError(f"H outside (0, 1]: {hurst}")


def fgn_covariance(k, hurst: float, dx: float = 1.0):
    """Covariance of fGn increments of spacing ``dx`` at integer lag ``k``."""
    _check_hurst(hurst)
    if dx <= 0:
        raise ValueError("dx must be positive")
    k = np.abs(np.asarray(k, dtype=float))
    two_h = 2.0 * hurst
    val = 0.5 * dx**two_h * (np.abs(k + 1) ** two_h + np.abs(k - 1) ** two_h - 2.0 * k**two_h)
    return val if val.ndim else float(val)


def fgn_covariance_matrix(n: int, hurst: float, dx: float = 1.0) -> np.ndarray:
    lags = np.arange(n)
    row = fgn_covariance(lags, hurst, dx)
    return row[np.abs(lags[:, None] - lags[None, :])]


def derive_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based stream for realization ``index`` under master ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def _circulant_eigs(n: int, hurst: float) -> np.ndarray:
    r = fgn_covariance(np.arange(n + 1), hurst, 1.0)
    c = np.concatenate([r, r[-2:0:-1]])
    return np.fft.fft(c).real


def sample_fgn_rows(rows: int, n: int, hurst: float, rng: np.random.Generator) -> np.ndarray:
    """``rows`` independent unit-spacing fGn sequences of length ``n``."""
    if n == 1:
        return rng.standard_normal((rows, 1))
    if hurst == 0.5:
        return rng.standard_normal((rows, n))
    lam = _circulant_eigs(n, hurst)
    m = lam.size
    bad = lam < -EIG_TOL * lam.max()
    if bad.any():
        if n > CHOLESKY_MAX:
            raise EmbeddingError(
                f"circulant embedding indefinite (min eigenvalue {lam.min():.3e}) and "
                f"n={n} exceeds the Cholesky fallback limit {CHOLESKY_MAX}"
            )
        chol = np.linalg.cholesky(fgn_covariance_matrix(n, hurst, 1.0))
        return rng.standard_normal((rows, n)) @ chol.T
    lam = np.clip(lam, 0.0, None)
    z = rng.standard_normal((rows, m)) + 1j * rng.standard_normal((rows, m))
    y = np.fft.fft(np.sqrt(lam / m) * z, axis=1)
    # real and imaginary parts are two independent samples; keep the real one
    return y.real[:, :n]


def sample_noise_field(grid: GridSpec, params: NoiseParams, index: int = 0) -> NoiseField:
    """Sample one realization; ``index`` selects the derived stream for ensembles."""
    rng = derive_rng(params.seed, index)
    rows = sample_fgn_rows(grid.t_count, grid.x_count, params.hurst, rng)
    scale = np.sqrt(grid.dt) * grid.dx**params.hurst
    return NoiseField(rows * scale, grid, params)


def mollifier_weights(eps: float, dx: float) -> np.ndarray:
    """Gaussian ``rho_eps`` sampled on the grid, truncated at 8 sqrt(eps), unit discrete mass."""
    if eps <= 0:
        raise ValueError(f"mollifier width must be positive, got {eps}")
    if eps < dx * dx / 100.0:
        return np.ones(1)
    half = int(np.ceil(8.0 * np.sqrt(eps) / dx))
    x = dx * np.arange(-half, half + 1)
    w = np.exp(-x * x / (2.0 * eps))
    return w / w.sum()


def mollify_rows(rows: np.ndarray, eps: float, dx: float) -> np.ndarray:
    w = mollifier_weights(eps, dx)
    if w.size == 1:
        return np.array(rows, dtype=float, copy=True)
    return convolve1d(rows, w, axis=-1, mode="constant", cval=0.0)


def mollify_field(noise: NoiseField, eps: float) -> NoiseField:
    """Spatial Gaussian smoothing of every row, zero-padded (no wrap-around)."""
    out = mollify_rows(noise.increments, eps, noise.grid.dx)
    return noise.with_increments(out, eps=noise.eps + eps)


def w_covariance(p1, p2, hurst: float) -> float:
    """Closed-form ``E[W(t,x)W(s,y)]``."""
    (t, x), (s, y) = p1, p2
    th = 2.0 * hurst
    return 0.5 * min(s, t) * (abs(x) ** th + abs(y) ** th - abs(x - y) ** th)


def _w_value(incs: np.ndarray, grid: GridSpec, point) -> np.ndarray:
    t, x = point
    i = (t - grid.t0) / grid.dt
    j = (x - grid.x0) / grid.dx
    j0 = -grid.x0 / grid.dx
    for v, name in ((i, "t"), (j, "x"), (j0, "x=0")):
        if abs(v - round(v)) > 1e-9:
            raise ValueError(f"{name} is not a grid node")
    i, j, j0 = round(i), round(j), round(j0)
    if not (0 <= i <= grid.t_count and 0 <= j <= grid.x_count and 0 <= j0 <= grid.x_count):
        raise ValueError("point outside grid")
    if grid.t0 != 0.0:
        raise ValueError("W is anchored at t = 0; grid must start there")
    col = incs[:, :i, :].sum(axis=1)
    lo, hi = sorted((j0, j))
    val = col[:, lo:hi].sum(axis=1)
    return val if j >= j0 else -val


def empirical_w_covariance(ensemble, point1, point2) -> tuple[float, float]:
    """Monte Carlo ``E[W(p1)W(p2)]`` with standard error.

    ``W`` is rebuilt by summing increments from time 0 and from the spatial
    origin ``x = 0`` (which must be a grid node), since the covariance formula is
    pinned to ``W(t, 0) = 0``.
    """
    if isinstance(ensemble, NoiseField):
        ensemble = [ensemble]
    if len(ensemble) < 100:
        raise ValueError("need at least 100 realizations")
    grid = ensemble[0].grid
    incs = np.stack([f.increments for f in ensemble])
    prod = _w_value(incs, grid, point1) * _w_value(incs, grid, point2)
    return float(prod.mean()), float(prod.std(ddof=1) / np.sqrt(prod.size))


_HEADER = struct.Struct("<8sqqddddd Q")
_MAGIC = b"RWNOISE1"


def save_binary(noise: NoiseField, path) -> None:
    g, p = noise.grid, noise.params
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, g.t_count, g.x_count, g.dt, g.dx, g.t0, g.x0, p.hurst, p.seed))
        fh.write(np.ascontiguousarray(noise.increments, dtype="<f8").tobytes())


def load_binary(path) -> NoiseField:
    raw = Path(path).read_bytes()
    magic, tc, xc, dt, dx, t0, x0, h, seed = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError("not a noise file")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(tc, xc).copy()
    return NoiseField(data, GridSpec(tc, xc, dt, dx, t0, x0), NoiseParams(h, seed))


_CSV_KEYS = ("t_count", "x_count", "dt", "dx", "t0", "x0", "hurst", "seed")


def save_csv(noise: NoiseField, path) -> None:
    g, p = noise.grid, noise.params
    vals = (g.t_count, g.x_count, g.dt, g.dx, g.t0, g.x0, p.hurst, p.seed)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_CSV_KEYS)
        w.writerow([repr(v) for v in vals])
        for row in noise.increments:
            w.writerow([repr(float(v)) for v in row])


def load_csv(path) -> NoiseField:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    h = dict(zip(rows[0], rows[1]))
    grid = GridSpec(int(h["t_count"]), int(h["x_count"]), float(h["dt"]), float(h["dx"]),
                    float(h["t0"]), float(h["x0"]))
    data = np.array(rows[2:], dtype=float).reshape(grid.t_count, grid.x_count)
    return NoiseField(data, grid, NoiseParams(float(h["hurst"]), int(h["seed"])))
