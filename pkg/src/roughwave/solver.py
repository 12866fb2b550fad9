"""Mild solutions of the 1-D stochastic wave equation by Picard iteration.

Discrete stochastic convolution at node ``(t_k, x_m)``::

    sum_{i<k} sum_j 1/2 v(s_i, cell j) dW(i, j)

over cells whose midpoint lies strictly inside the backward light cone
``|y - x_m| < t_k - s_i``.  With ``dt == dx`` the cone of every row is a whole
number of cells and the sum obeys a four-point recursion (the discrete
d'Alembert formula), which is what the solver uses.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.linalg import matmul_toeplitz

from .noise import (
    GridSpec,
    NoiseField,
    NoiseParams,
    derive_rng,
    fgn_covariance,
    mollifier_weights,
    mollify_rows,
    sample_fgn_rows,
)

__all__ = [
    "SigmaKind",
    "SigmaSpec",
    "InitialData",
    "SolutionField",
    "DivergenceError",
    "LightConeError",
    "dalembert_I0",
    "stochastic_convolution",
    "convolution_field",
    "convolution_variance",
    "noise_grid_for",
    "sample_solver_noise",
    "picard_iterate",
    "picard_solve",
    "solve_ensemble",
]

THREADS_ENV = "ROUGHWAVE_THREADS"


class DivergenceError(RuntimeError):
    def __init__(self, message, history, realization=None):
        super().__init__(message)
        self.history = list(history)
        self.realization = realization


class LightConeError(ValueError):
    pass


class SigmaKind(str, Enum):
    ZERO = "ZERO"
    LINEAR = "LINEAR"
    SCALED_SINE = "SCALED_SINE"
    TABULATED = "TABULATED"


@dataclass(frozen=True)
class SigmaSpec:
    kind: SigmaKind = SigmaKind.ZERO
    a: float = 1.0
    table_u: tuple = ()
    table_v: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", SigmaKind(self.kind))
        if self.kind is SigmaKind.TABULATED:
            u = np.asarray(self.table_u, float)
            if u.size < 2 or u.size != len(self.table_v) or np.any(np.diff(u) <= 0):
                raise ValueError("tabulated sigma needs increasing abscissae of matching length")
            if abs(float(self(np.array(0.0)))) > 0:
                raise ValueError("sigma(0) must vanish")

    @classmethod
    def zero(cls):
        return cls(SigmaKind.ZERO)

    @classmethod
    def linear(cls, a: float = 1.0):
        return cls(SigmaKind.LINEAR, a)

    @classmethod
    def scaled_sine(cls, a: float = 1.0):
        return cls(SigmaKind.SCALED_SINE, a)

    @classmethod
    def tabulated(cls, u, v):
        return cls(SigmaKind.TABULATED, 1.0, tuple(map(float, u)), tuple(map(float, v)))

    def __call__(self, u):
        if self.kind is SigmaKind.ZERO:
            return np.zeros_like(u)
        if self.kind is SigmaKind.LINEAR:
            return self.a * u
        if self.kind is SigmaKind.SCALED_SINE:
            return self.a * np.sin(u)
        # linear interpolation, extended linearly past the table ends
        tu = np.asarray(self.table_u)
        tv = np.asarray(self.table_v)
        out = np.interp(u, tu, tv)
        lo_slope = (tv[1] - tv[0]) / (tu[1] - tu[0])
        hi_slope = (tv[-1] - tv[-2]) / (tu[-1] - tu[-2])
        out = np.where(u < tu[0], tv[0] + lo_slope * (u - tu[0]), out)
        return np.where(u > tu[-1], tv[-1] + hi_slope * (u - tu[-1]), out)

    @property
    def lipschitz_bound(self) -> float:
        if self.kind is SigmaKind.ZERO:
            return 0.0
        if self.kind is SigmaKind.TABULATED:
            return float(np.max(np.abs(np.diff(self.table_v) / np.diff(self.table_u))))
        return abs(self.a)


@dataclass(frozen=True)
class InitialData:
    """Position ``u0`` and velocity ``v0``; ``v0_primitive`` (if given) is an antiderivative of ``v0``."""

    u0: Callable
    v0: Callable
    name: str = "custom"
    v0_primitive: Callable | None = None

    @classmethod
    def gaussian(cls):
        return cls(lambda x: np.exp(-np.asarray(x, float) ** 2), _zero, "GAUSSIAN", _zero)

    @classmethod
    def constant(cls, c: float = 1.0, velocity: float = 0.0):
        return cls(lambda x: np.full_like(np.asarray(x, float), c), lambda x: np.full_like(np.asarray(x, float), velocity),
                   f"CONSTANT({c})", lambda x: velocity * np.asarray(x, float))

    @classmethod
    def zero(cls):
        return cls(_zero, _zero, "ZERO", _zero)


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def dalembert_I0(data: InitialData, t, x):
    """``1/2 int_{x-t}^{x+t} v0 + 1/2 (u0(x+t) + u0(x-t))``."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    t, x = np.broadcast_arrays(t, x)
    out = 0.5 * (data.u0(x + t) + data.u0(x - t))
    if data.v0_primitive is not None:
        out = out + 0.5 * (data.v0_primitive(x + t) - data.v0_primitive(x - t))
    else:
        vint = np.vectorize(lambda a, b: quad(data.v0, a, b, epsabs=1e-12, epsrel=1e-12)[0])
        out = out + 0.5 * vint(x - t, x + t)
    return float(out) if out.ndim == 0 else out


# -- stochastic convolution -----------------------------------------------------


def _cell_values(v: np.ndarray, x_count: int) -> np.ndarray:
    """Node fields (``x_count + 1`` columns) are averaged onto cells."""
    if v.shape[-1] == x_count + 1:
        return 0.5 * (v[..., :-1] + v[..., 1:])
    if v.shape[-1] != x_count:
        raise ValueError(f"field has {v.shape[-1]} columns, grid has {x_count} cells")
    return v


def _cone_range(grid: GridSpec, i: int, k: int, m: int) -> tuple[int, int]:
    """Inclusive cell range of row ``i`` inside the cone of node ``(k, m)``."""
    d = (k - i) * grid.dt / grid.dx
    lo = math.floor(m - 0.5 - d) + 1
    hi = math.ceil(m - 0.5 + d) - 1
    return lo, hi


def _field_on_cells(v, grid: GridSpec) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    cols = v.shape[-1] if v.ndim else grid.x_count
    return _cell_values(np.broadcast_to(v, (grid.t_count, cols)), grid.x_count)


def stochastic_convolution(v, noise: NoiseField, t_index: int, x_index: int) -> float:
    """Left-point sum of ``1/2 v dW`` over the backward cone of a grid node."""
    g = noise.grid
    if not (0 <= t_index <= g.t_count and 0 <= x_index <= g.x_count):
        raise IndexError("node outside the noise grid")
    v = _field_on_cells(v, g)
    total = 0.0
    for i in range(t_index):
        lo, hi = _cone_range(g, i, t_index, x_index)
        if hi < lo:
            continue
        if lo < 0 or hi >= g.x_count:
            raise LightConeError(f"light cone of ({t_index}, {x_index}) leaves the noise grid at row {i}")
        total += 0.5 * float(np.dot(v[i, lo:hi + 1], noise.increments[i, lo:hi + 1]))
    return total


def convolution_field(f: np.ndarray, ratio: float | None = None) -> np.ndarray:
    """Cone sums ``Phi(k, m)`` of cell weights ``f`` (already carrying 1/2 and dW).

    ``f`` has shape ``(..., K, J)``; the result has shape ``(..., K+1, J+1)``
    with cells outside the array treated as zero.  ``ratio = dt/dx``; ``1``
    selects the recursion, anything else the prefix-sum path.
    """
    *batch, K, J = f.shape
    out = np.zeros((*batch, K + 1, J + 1))
    if ratio is None or ratio == 1.0:
        # pad by K cells on each side so edge errors never reach the array
        P = K + 1
        fp = np.zeros((*batch, K, J + 2 * P))
        fp[..., P:P + J] = f
        prev = np.zeros((*batch, J + 2 * P + 1))
        cur = np.zeros_like(prev)
        cur[..., 1:-1] = fp[..., 0, :-1] + fp[..., 0, 1:]
        out[..., 1, :] = cur[..., P:P + J + 1]
        for k in range(1, K):
            nxt = np.zeros_like(cur)
            nxt[..., 1:-1] = cur[..., :-2] + cur[..., 2:] - prev[..., 1:-1] + fp[..., k, :-1] + fp[..., k, 1:]
            prev, cur = cur, nxt
            out[..., k + 1, :] = cur[..., P:P + J + 1]
        return out
    cs = np.concatenate([np.zeros((*batch, K, 1)), np.cumsum(f, axis=-1)], axis=-1)
    m = np.arange(J + 1)
    for k in range(1, K + 1):
        acc = np.zeros((*batch, J + 1))
        for i in range(k):
            d = (k - i) * ratio
            lo = np.clip(np.floor(m - 0.5 - d).astype(int) + 1, 0, J)
            hi = np.clip(np.ceil(m - 0.5 + d).astype(int), 0, J)
            acc += np.take(cs[..., i, :], hi, axis=-1) - np.take(cs[..., i, :], lo, axis=-1)
        out[..., k, :] = acc
    return out


def convolution_variance(v, grid: GridSpec, hurst: float, t_index: int, x_index: int) -> float:
    """Exact variance of the discrete stochastic convolution of a deterministic ``v``.

    ``sum_i dt * a_i^T C a_i`` with ``a_i = 1/2 v 1_cone`` and ``C`` the fGn
    covariance at spacing ``dx``.
    """
    v = _field_on_cells(v, grid)
    col = fgn_covariance(np.arange(grid.x_count), hurst, grid.dx)
    total = 0.0
    for i in range(t_index):
        lo, hi = _cone_range(grid, i, t_index, x_index)
        if hi < lo:
            continue
        if lo < 0 or hi >= grid.x_count:
            raise LightConeError("light cone leaves the grid")
        a = 0.5 * v[i, lo:hi + 1]
        total += grid.dt * float(a @ matmul_toeplitz(col[: a.size], a))
    return total


# -- Picard iteration -----------------------------------------------------------------


@dataclass
class SolutionField:
    values: np.ndarray
    grid: GridSpec
    sigma: SigmaSpec
    eps: float
    picard_iterations: int
    picard_residuals: list
    iterations: tuple = field(default=())
    seeds: tuple = field(default=())

    @property
    def x_nodes(self) -> np.ndarray:
        return self.grid.x_nodes

    @property
    def t_nodes(self) -> np.ndarray:
        return self.grid.t_nodes

    def save_csv(self, path, realization: int = 0) -> None:
        g = self.grid
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_count", "x_count", "dt", "dx", "t0", "x0"])
            w.writerow([g.t_count, g.x_count, repr(g.dt), repr(g.dx), repr(g.t0), repr(g.x0)])
            for row in self.values[realization]:
                w.writerow([repr(float(v)) for v in row])

    def save_binary(self, path) -> None:
        g = self.grid
        head = np.array([self.values.shape[0], g.t_count, g.x_count, g.dt, g.dx, g.t0, g.x0], dtype="<f8")
        with open(path, "wb") as fh:
            fh.write(head.tobytes())
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    def residuals_csv(self, realization: int = 0) -> str:
        lines = ["iteration,Z2_distance"]
        lines += [f"{n + 1},{r!r}" for n, r in enumerate(self.picard_residuals[realization])]
        return "\n".join(lines) + "\n"


def noise_grid_for(grid: GridSpec, eps: float) -> tuple[GridSpec, int, int]:
    """Noise grid covering the solution window enlarged by ``T`` and the mollifier.

    Returns the grid, the crop margin (mollifier cells), and the offset in
    cells between the cropped noise origin and the solution origin.
    """
    T = grid.t_count * grid.dt
    cone = int(math.ceil(T / grid.dx - 1e-9))
    margin = (mollifier_weights(eps, grid.dx).size - 1) // 2 if eps > 0 else 0
    x_count = grid.x_count + 2 * (cone + margin)
    x0 = grid.x0 - (cone + margin) * grid.dx
    return GridSpec(grid.t_count, x_count, grid.dt, grid.dx, grid.t0, x0), margin, cone


def sample_solver_noise(grid: GridSpec, params: NoiseParams, eps: float, index: int = 0) -> NoiseField:
    """Mollified increments on the cone-enlarged window (margins cropped)."""
    ngrid, margin, _ = noise_grid_for(grid, eps)
    rng = derive_rng(params.seed, index)
    rows = sample_fgn_rows(ngrid.t_count, ngrid.x_count, params.hurst, rng)
    rows *= math.sqrt(grid.dt) * grid.dx**params.hurst
    if eps > 0:
        rows = mollify_rows(rows, eps, grid.dx)
    rows = rows[:, margin:rows.shape[1] - margin]
    g = GridSpec(ngrid.t_count, ngrid.x_count - 2 * margin, grid.dt, grid.dx, grid.t0, ngrid.x0 + margin * grid.dx)
    return NoiseField(rows, g, params, eps)


def _check_hurst(h: float) -> None:
    if not (0.25 < h < 0.5):
        raise ValueError(
            f"H = {h} outside (1/4, 1/2): below 1/4 no L^2 solution exists for the "
            "hyperbolic Anderson model (necessity of H > 1/4)"
        )


def _z2_distance(diff: np.ndarray, grid: GridSpec, hurst: float) -> float:
    from .norms import NormConfig, z_norm_estimate

    cfg = NormConfig(p=2.0, hurst=hurst, dx=grid.dx)
    return z_norm_estimate(diff[None], cfg)[2]


def picard_iterate(noise: np.ndarray, grid: GridSpec, hurst: float, sigma: SigmaSpec, data: InitialData,
                   n_max: int, tol: float, cone_offset: int, eps: float = 0.0, check: bool = True):
    """Batched Picard iteration on pre-sampled increments.

    ``noise`` has shape ``(R, K, J)`` on the cone-enlarged window, whose node
    ``cone_offset`` is the solution origin.  Each realization freezes as soon as
    its own residual drops below ``tol``, so results do not depend on batching.
    """
    R, K, J = noise.shape
    ratio = grid.dt / grid.dx
    t = grid.t0 + grid.dt * np.arange(K + 1)
    x = grid.x0 + grid.dx * (np.arange(J + 1) - cone_offset)
    i0 = dalembert_I0(data, t[:, None], x[None, :])
    win = slice(cone_offset, cone_offset + grid.x_count + 1)
    u = np.broadcast_to(i0, (R, K + 1, J + 1)).copy()
    active = np.ones(R, dtype=bool)
    history: list[list[float]] = [[] for _ in range(R)]
    its = np.zeros(R, dtype=int)
    for n in range(n_max):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        s = sigma(u[idx, :-1, :])
        f = 0.5 * _cell_values(s, J) * noise[idx]
        new = i0 + convolution_field(f, ratio)
        for r_local, r in enumerate(idx):
            d = _z2_distance(new[r_local, :, win] - u[r, :, win], grid, hurst)
            history[r].append(d)
            its[r] = n + 1
            if check:
                h = history[r]
                if len(h) >= 6 and all(h[j + 1] > h[j] for j in range(len(h) - 4, len(h) - 1)) and len(h) - 4 >= 2:
                    raise DivergenceError("Picard residual increased three times in a row", h, r)
            if d < tol:
                active[r] = False
        u[idx] = new
    return u[:, :, win], history, its


def picard_solve(grid: GridSpec, noise_params: NoiseParams, sigma: SigmaSpec, data: InitialData,
                 eps: float | None = None, n_max: int = 50, tol_Z2: float = 1e-8,
                 index: int = 0) -> SolutionField:
    """One realization of the mollified-noise Picard scheme on ``grid``.

    ``grid`` is the solution window; noise is sampled on the window enlarged by
    the final time (finite propagation speed makes that exact).  ``eps``
    defaults to ``4 dx^2``.
    """
    return solve_ensemble(grid, noise_params, sigma, data, eps, 1, n_max, tol_Z2, first_index=index)


def _run_batch(grid, noise_params, sigma, data, eps, idx, n_max, tol):
    _, _, cone = noise_grid_for(grid, eps)
    noise = np.stack([sample_solver_noise(grid, noise_params, eps, i).increments for i in idx])
    try:
        return picard_iterate(noise, grid, noise_params.hurst, sigma, data, n_max, tol, cone, eps)
    except DivergenceError as exc:
        r = idx[exc.realization] if exc.realization is not None else None
        raise DivergenceError(f"realization {r}: {exc}", exc.history, r) from None


def solve_ensemble(grid: GridSpec, noise_params: NoiseParams, sigma: SigmaSpec, data: InitialData,
                   eps: float | None = None, n_realizations: int = 1, n_max: int = 50,
                   tol_Z2: float = 1e-8, batch: int = 64, first_index: int = 0) -> SolutionField:
    """Independent realizations ``first_index, first_index + 1, ...`` of the master seed.

    Realizations run in batches; ``ROUGHWAVE_THREADS`` sets the worker count.
    """
    _check_hurst(noise_params.hurst)
    if n_realizations < 1 or n_max < 1 or tol_Z2 <= 0:
        raise ValueError("need n_realizations >= 1, n_max >= 1, tol_Z2 > 0")
    eps = 4.0 * grid.dx**2 if eps is None else eps
    if eps <= 0:
        raise ValueError("mollifier width must be positive")
    indices = list(range(first_index, first_index + n_realizations))
    chunks = [indices[i:i + batch] for i in range(0, len(indices), batch)]
    workers = max(1, int(os.environ.get(THREADS_ENV, "1")))
    job = lambda idx: _run_batch(grid, noise_params, sigma, data, eps, idx, n_max, tol_Z2)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(job, chunks))
    else:
        results = [job(c) for c in chunks]
    values = np.concatenate([r[0] for r in results])
    history = [h for r in results for h in r[1]]
    its = np.concatenate([r[2] for r in results])
    return SolutionField(values, grid, sigma, eps, int(its.max()), history,
                         tuple(int(i) for i in its), tuple(indices))
