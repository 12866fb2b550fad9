"""Chaos-expansion diagnostics for the hyperbolic Anderson model ``sigma(u) = u``.

With Gaussian initial position ``u0(x) = A exp(-x^2)`` and zero velocity, the
first chaos is ``I1(t,x) = int G_{t-s}(x-y) I0(s,y) W(ds,dy)``.  Its second
moments are computed two ways:

* spectrally, ``C_H int_0^t int |F[g_s](xi)|^2 |xi|^{1-2H} dxi ds`` with the
  window transform in closed form (Faddeeva function);
* in physical space, ``int_0^t -1/2 int int g_s'(u) g_s'(v) |u-v|^{2H} du dv ds``,
  where ``g_s'`` consists of point masses at the cone edges plus ``1/2 dI0/dy``.

``C_H = Gamma(2H+1) sin(pi H) / (2 pi)`` ties the spectral measure to the
covariance of the noise module; ``ChaosConfig.spectral_constant=False`` drops it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad
from scipy.special import wofz

from ._quad import composite_legendre, gauss_jacobi, gauss_legendre
from .norms import isometry_constant

__all__ = [
    "ChaosConfig",
    "ChaosEstimate",
    "TruncationError",
    "g1_kernel_eval",
    "I0_gaussian",
    "window_transform",
    "i1_second_moment",
    "dh_i1_second_moment",
    "i1_variance_physical",
    "dh_i1_variance_physical",
    "increment_profile",
    "i2_divergence_scan",
    "i2_upper_term",
    "i2_upper_term_closed_form",
    "loglog_slope",
    "scan_csv",
]

SQRT_PI = math.sqrt(math.pi)


class TruncationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ChaosConfig:
    hurst: float = 0.4
    t: float = 1.0
    x: float = 0.0
    xi_cutoff: float = 200.0
    xi_nodes: int = 3200
    h_cutoff_inner: float = 2.0**-10
    s_nodes: int = 48
    amplitude: float = 1.0
    spectral_constant: bool = True

    def __post_init__(self):
        if not (0.0 < self.hurst < 0.5):
            raise ValueError("H must lie in (0, 1/2)")
        if self.t <= 0 or self.xi_cutoff <= 1.0:
            raise ValueError("need t > 0 and xi_cutoff > 1")
        if self.xi_nodes < 256:
            raise ValueError("need at least 256 xi nodes")
        if not (0.0 < self.h_cutoff_inner < 1.0):
            raise ValueError("inner cutoff must lie in (0, 1)")

    @property
    def constant(self) -> float:
        return isometry_constant(self.hurst) if self.spectral_constant else 1.0


@dataclass(frozen=True)
class ChaosEstimate:
    value: float
    truncated: float
    tail: float
    truncation_error: float
    xi_cutoff: float
    xi_nodes: int
    meta: dict = field(default_factory=dict)


def I0_gaussian(s, y, amplitude: float = 1.0):
    s = np.asarray(s, float)
    y = np.asarray(y, float)
    return 0.5 * amplitude * (np.exp(-(y + s) ** 2) + np.exp(-(y - s) ** 2))


def _dI0(s, y, amplitude: float = 1.0):
    return -amplitude * ((y + s) * np.exp(-(y + s) ** 2) + (y - s) * np.exp(-(y - s) ** 2))


def g1_kernel_eval(s, y, t, x, amplitude: float = 1.0):
    """First chaos kernel ``G_{t-s}(x-y) I0(s,y)``."""
    s = np.asarray(s, float)
    if np.any((s < 0) | (s >= t)):
        raise ValueError("need 0 <= s < t")
    inside = np.abs(np.asarray(x) - np.asarray(y)) < t - s
    out = np.where(inside, 0.5, 0.0) * I0_gaussian(s, y, amplitude)
    return float(out) if out.ndim == 0 else out


# -- spectral route --------------------------------------------------------------


def _erf_shift(u, xi):
    """``exp(-xi^2/4) erf(u + i xi/2)`` without overflow."""
    u = np.asarray(u, float)
    xi = np.asarray(xi, float)
    u, xi = np.broadcast_arrays(u, xi)
    a = np.abs(u)
    val = np.exp(-xi * xi / 4.0) - np.exp(-a * a - 1j * a * xi) * wofz(1j * a - xi / 2.0)
    return np.where(u >= 0, val, -np.conj(val))


def window_transform(s, lo, hi, xi, amplitude: float = 1.0):
    """``int_lo^hi 1/2 I0(s,y) exp(-i y xi) dy`` for Gaussian data (broadcasting)."""
    s = np.asarray(s, float)
    out = 0.0
    for c in (s, -s):
        out = out + np.exp(-1j * c * xi) * (_erf_shift(hi - c, xi) - _erf_shift(lo - c, xi))
    return amplitude * 0.25 * (SQRT_PI / 2.0) * out


def _pieces(t, x, s, h=None):
    """Signed windows ``(sign, lo, hi)`` of ``g_s`` for ``I1`` or its increment."""
    tau = t - s
    base = [(1.0, x - tau, x + tau)]
    if h is None:
        return base
    return [(1.0, x + h - tau, x + h + tau), (-1.0, x - tau, x + tau)]


def _cos_tail(omega: float, cutoff: float, hurst: float) -> float:
    """``int_cutoff^inf cos(omega xi) xi^(-1-2H) dxi``."""
    e = 2.0 * hurst
    if omega == 0.0:
        return cutoff**-e / e
    val, _ = quad(lambda v: v ** (-1.0 - e), cutoff, np.inf, weight="cos", wvar=abs(omega),
                  limlst=200, limit=400, epsabs=1e-14)
    return val


def _xi_rule(hurst: float, cutoff: float, nodes: int):
    """Nodes/weights for ``int_0^cutoff f(xi) xi^(1-2H) dxi``."""
    xs0, ws0 = gauss_jacobi(0.0, 1.0, left=1.0 - 2.0 * hurst, n=32)
    panels = max(1, nodes // 8)
    xs1, ws1 = composite_legendre(np.linspace(1.0, cutoff, panels + 1), 8)
    return np.concatenate([xs0, xs1]), np.concatenate([ws0, ws1 * xs1 ** (1.0 - 2.0 * hurst)])


def _spectral(config: ChaosConfig, h=None, cutoff=None) -> tuple[float, float]:
    cutoff = config.xi_cutoff if cutoff is None else cutoff
    nodes = int(config.xi_nodes * cutoff / config.xi_cutoff)
    t, x, H, A = config.t, config.x, config.hurst, config.amplitude
    if A == 0.0 or (h is not None and h == 0.0):
        return 0.0, 0.0
    xi, wxi = _xi_rule(H, cutoff, nodes)
    s_nodes, s_w = gauss_legendre(0.0, t, config.s_nodes)
    truncated = 0.0
    tail = 0.0
    tail_cache: dict[float, float] = {}
    for s, ws in zip(s_nodes, s_w):
        F = 0.0
        jumps = []
        for sign, lo, hi in _pieces(t, x, s, h):
            F = F + sign * window_transform(s, lo, hi, xi, A)
            jumps += [(lo, sign * 0.5 * float(I0_gaussian(s, lo, A))),
                      (hi, -sign * 0.5 * float(I0_gaussian(s, hi, A)))]
        truncated += ws * np.sum(wxi * np.abs(F) ** 2)
        acc = 0.0
        for yk, jk in jumps:
            for yl, jl in jumps:
                om = round(abs(yk - yl), 15)
                if om not in tail_cache:
                    tail_cache[om] = _cos_tail(om, cutoff, H)
                acc += jk * jl * tail_cache[om]
        tail += ws * acc
    # |F|^2 is even in xi
    c = 2.0 * config.constant
    return c * truncated, c * tail


def _estimate(config: ChaosConfig, h=None) -> ChaosEstimate:
    trunc, tail = _spectral(config, h)
    value = trunc + tail
    trunc2, tail2 = _spectral(config, h, cutoff=2.0 * config.xi_cutoff)
    err = abs(trunc2 + tail2 - value)
    if value > 0 and err > 0.1 * value:
        raise TruncationError(f"cutoff {config.xi_cutoff} too small: doubling changes the value by {err:.3e}")
    return ChaosEstimate(max(value, 0.0), trunc, tail, err, config.xi_cutoff, config.xi_nodes,
                         {"t": config.t, "x": config.x, "hurst": config.hurst, "h": h})


def i1_second_moment(config: ChaosConfig) -> ChaosEstimate:
    """``E|I1(t,x)|^2`` by the spectral route."""
    return _estimate(config)


def dh_i1_second_moment(config: ChaosConfig, h: float) -> ChaosEstimate:
    """``E|I1(t,x+h) - I1(t,x)|^2`` by the spectral route, for ``0 <= h < min(1, t/2)``."""
    if not (0.0 <= h < min(1.0, config.t / 2.0)):
        raise ValueError("need 0 <= h < min(1, t/2)")
    return _estimate(config, h)


# -- physical route ---------------------------------------------------------------------


def _structure(s, tau, y, h, amplitude):
    """Point masses and density intervals of ``d/dz`` of the (increment) window.

    Returns ``pos (N,4), mass (N,4), lo (N,2), hi (N,2), coef (N,2)``; unused
    slots carry zero mass/coefficient.
    """
    s, tau, y, h = np.broadcast_arrays(*(np.asarray(v, float) for v in (s, tau, y, h)))
    N = s.size
    s, tau, y, h = (v.ravel() for v in (s, tau, y, h))
    a, b = y - tau, y + tau
    I = lambda z: I0_gaussian(s, z, amplitude)
    pos = np.zeros((N, 4))
    mass = np.zeros((N, 4))
    lo = np.zeros((N, 2))
    hi = np.zeros((N, 2))
    coef = np.zeros((N, 2))
    plain = h == 0.0
    # increments: 1_(a+h, b+h) - 1_(a, b) = 1_(max(b, a+h), b+h) - 1_(a, min(a+h, b))
    pos[:] = np.stack([a + h, b + h, a, b], axis=1)
    mass[:] = 0.5 * np.stack([I(a + h), -I(b + h), -I(a), I(b)], axis=1)
    lo[:, 0], hi[:, 0], coef[:, 0] = np.maximum(b, a + h), b + h, 0.5
    lo[:, 1], hi[:, 1], coef[:, 1] = a, np.minimum(a + h, b), -0.5
    # plain I1: single window
    pos[plain] = np.stack([a, b, a, b], axis=1)[plain]
    mass[plain] = (0.5 * np.stack([I(a), -I(b), 0 * a, 0 * a], axis=1))[plain]
    lo[plain, 0], hi[plain, 0], coef[plain, 0] = a[plain], b[plain], 0.5
    coef[plain, 1] = 0.0
    lo[plain, 1] = hi[plain, 1] = a[plain]
    return s, pos, mass, lo, hi, coef


def _P(u, c, s, hurst, amplitude, n):
    """``int_u^c rho(v) |v - u|^{2H} dv`` with ``rho = dI0/dy (s, .)`` (signed by orientation)."""
    tau, w = gauss_jacobi(0.0, 1.0, left=2.0 * hurst, n=n)
    d = c - u
    v = u[..., None] + tau * d[..., None]
    inner = np.sum(w * _dI0(s[..., None], v, amplitude), axis=-1)
    return d * np.abs(d) ** (2.0 * hurst) * inner


def _variance_density(s, pos, mass, lo, hi, coef, hurst, amplitude, n=16):
    """``-1/2 int int g'(u) g'(v) |u-v|^{2H}`` for each configuration row."""
    e = 2.0 * hurst
    dd = np.einsum("nk,nl,nkl->n", mass, mass, np.abs(pos[:, :, None] - pos[:, None, :]) ** e)
    dr = np.zeros(s.size)
    rr = np.zeros(s.size)
    for j in range(lo.shape[1]):
        cj = coef[:, j]
        for k in range(pos.shape[1]):
            pk = pos[:, k]
            dr += mass[:, k] * cj * (_P(pk, hi[:, j], s, hurst, amplitude, n) - _P(pk, lo[:, j], s, hurst, amplitude, n))
        un, uw = gauss_legendre(lo[:, j], hi[:, j], n)
        rho = _dI0(s[:, None], un, amplitude) * cj[:, None]
        for i in range(lo.shape[1]):
            ci = coef[:, i]
            S = s[:, None] * np.ones_like(un)
            inner = (_P(un, np.broadcast_to(hi[:, i, None], un.shape), S, hurst, amplitude, n)
                     - _P(un, np.broadcast_to(lo[:, i, None], un.shape), S, hurst, amplitude, n))
            rr += ci * np.sum(uw * rho * inner, axis=-1)
    return -0.5 * (dd + 2.0 * dr + rr)


def _physical(t, y, h, hurst, amplitude, constant_scale, s_nodes=24, chunk=4096):
    """Second moment of ``I1(t, y)`` (``h = 0``) or of its ``h``-increment, vectorized.

    ``t, y, h`` broadcast against each other; the time integral uses ``s_nodes``
    Gauss-Legendre nodes on ``[0, t]``.
    """
    t, y, h = np.broadcast_arrays(*(np.asarray(v, float) for v in (t, y, h)))
    shape = t.shape
    t, y, h = t.ravel(), y.ravel(), h.ravel()
    xs, ws = gauss_legendre(0.0, 1.0, s_nodes)
    S = t[:, None] * xs  # s' nodes
    W = t[:, None] * ws
    tau = t[:, None] - S
    Y = np.broadcast_to(y[:, None], S.shape)
    Hh = np.broadcast_to(h[:, None], S.shape)
    flat = [v.ravel() for v in (S, tau, Y, Hh)]
    dens = np.empty(flat[0].size)
    for a in range(0, dens.size, chunk):
        sl = slice(a, a + chunk)
        parts = _structure(flat[0][sl], flat[1][sl], flat[2][sl], flat[3][sl], amplitude)
        dens[sl] = _variance_density(*parts, hurst, amplitude)
    out = (dens.reshape(S.shape) * W).sum(axis=1) * constant_scale
    return out.reshape(shape)


def i1_variance_physical(config: ChaosConfig, s_nodes: int = 48) -> float:
    """``E|I1(t,x)|^2`` through the covariance kernel ``|u-v|^{2H}``."""
    scale = 1.0 if config.spectral_constant else 1.0 / isometry_constant(config.hurst)
    return float(_physical(config.t, config.x, 0.0, config.hurst, config.amplitude, scale, s_nodes))


def dh_i1_variance_physical(config: ChaosConfig, h, s_nodes: int = 48):
    scale = 1.0 if config.spectral_constant else 1.0 / isometry_constant(config.hurst)
    return _physical(config.t, config.x, h, config.hurst, config.amplitude, scale, s_nodes)


# -- second chaos ----------------------------------------------------------------------


def increment_profile(config: ChaosConfig, h_grid, s_count: int = 8, y_count: int = 8,
                      inner_nodes: int = 16) -> np.ndarray:
    """``Q(h) = int_1^2 int |G_{2-s}(y)|^2 E|D_h I1(s,y)|^2 dy ds`` on ``h_grid``.

    Uses ``t = config.t``: the outer time runs over ``[t/2, t]``.
    """
    t = config.t
    s, ws = gauss_legendre(t / 2.0, t, s_count)
    u, wu = gauss_legendre(-1.0, 1.0, y_count)
    # y in (x - (t-s), x + (t-s)), |G|^2 = 1/4
    half = t - s
    Y = config.x + half[:, None] * u
    WY = (ws * half)[:, None] * wu
    h_grid = np.asarray(h_grid, float)
    scale = 1.0 if config.spectral_constant else 1.0 / isometry_constant(config.hurst)
    vals = _physical(s[:, None, None], Y[:, :, None], h_grid, config.hurst, config.amplitude, scale, inner_nodes)
    return 0.25 * np.einsum("sy,syh->h", WY, vals)


def i2_divergence_scan(config: ChaosConfig, eps_list, per_octave: int = 3, s_count: int = 8,
                       y_count: int = 8) -> list[tuple[float, float]]:
    """Inner-cutoff lower-bound functional for each ``eps``.

    ``value(eps) = int_{eps<|h|<1} Q(|h|) |h|^{2H-2} dh``; by the evenness of
    the data both signs of ``h`` contribute equally.  ``Q`` is sampled on a
    geometric grid and integrated as a piecewise power law.
    """
    eps_list = [float(e) for e in eps_list]
    if any(not (0 < e < 1) for e in eps_list):
        raise ValueError("cutoffs must lie in (0, 1)")
    e_min = min(eps_list)
    octaves = math.ceil(-math.log2(e_min))
    hs = 2.0 ** (-np.arange(octaves * per_octave + 1)[::-1] / per_octave)
    hs = np.unique(np.concatenate([hs, eps_list]))
    Q = increment_profile(config, hs, s_count, y_count)
    w = 2.0 * config.hurst - 2.0
    kappa = np.log(Q[1:] / Q[:-1]) / np.log(hs[1:] / hs[:-1])
    e = kappa + w + 1.0
    seg = np.where(np.abs(e) < 1e-12, Q[:-1] * hs[:-1] ** (-kappa) * np.log(hs[1:] / hs[:-1]),
                   Q[:-1] * hs[:-1] ** (-kappa) * (hs[1:] ** e - hs[:-1] ** e) / np.where(e == 0, 1, e))
    cum = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])  # integral from hs[i] to 1
    out = []
    for eps in eps_list:
        i = int(np.searchsorted(hs, eps))
        out.append((eps, 2.0 * float(cum[i])))
    if config.hurst < 0.25:
        vals = [v for _, v in sorted(out)]
        if any(b > a for a, b in zip(vals[:-1], vals[1:])):
            raise ArithmeticError("divergence profile is not monotone: quadrature failure")
    return out


def i2_upper_term(config: ChaosConfig | float, n: int = 64) -> float:
    """``int_0^2 (s^{2H} + s^2)(2 - s)^{2H} ds`` by Gauss-Jacobi."""
    H = config.hurst if isinstance(config, ChaosConfig) else float(config)
    e = 2.0 * H
    x1, w1 = gauss_jacobi(0.0, 2.0, left=e, right=e, n=n)
    x2, w2 = gauss_jacobi(0.0, 2.0, right=e, n=n)
    return float(np.sum(w1) + np.sum(w2 * x2**2))


def i2_upper_term_closed_form(hurst: float) -> float:
    from scipy.special import beta

    e = 2.0 * hurst
    return 2.0 ** (2 * e + 1) * beta(e + 1, e + 1) + 2.0 ** (e + 3) * beta(3.0, e + 1)


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def scan_csv(rows, header=("parameter", "value", "truncation_error")) -> str:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(repr(float(v)) for v in r))
    return "\n".join(lines) + "\n"
