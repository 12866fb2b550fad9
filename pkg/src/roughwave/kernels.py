"""Wave kernel, its four-kernel decomposition, and numerical checks on them.

Fourier convention: ``f_hat(xi) = int exp(-i x xi) f(x) dx``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from ._quad import composite_legendre, gauss_jacobi, gauss_legendre

__all__ = [
    "KernelKind",
    "KernelSpec",
    "SingularityError",
    "QuadratureError",
    "eval_kernel",
    "eval_kernel_hat",
    "verify_fourier_pair",
    "verify_decomposition_fourier",
    "verify_decomposition_space",
    "decomposition_terms",
    "beta_identity_check",
    "cos_arctan_identity_check",
    "tail_exponent_fit",
    "kernel_table",
    "format_report",
]


class KernelKind(str, Enum):
    WAVE_G = "WAVE_G"
    POISSON_E = "POISSON_E"
    SINE_S_ALPHA = "SINE_S_ALPHA"
    COSINE_C_ONE_MINUS_ALPHA = "COSINE_C_ONE_MINUS_ALPHA"


class SingularityError(ValueError):
    pass


class QuadratureError(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    alpha: float = 0.5

    def __post_init__(self):
        kind = KernelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is KernelKind.SINE_S_ALPHA and self.alpha == 1.0:
            # S_1 is the wave kernel itself
            object.__setattr__(self, "kind", KernelKind.WAVE_G)
            return
        if kind in (KernelKind.SINE_S_ALPHA, KernelKind.COSINE_C_ONE_MINUS_ALPHA):
            if not (0.0 < self.alpha < 1.0):
                raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def singular(self) -> bool:
        return self.kind in (KernelKind.SINE_S_ALPHA, KernelKind.COSINE_C_ONE_MINUS_ALPHA)

    @property
    def edge_exponent(self) -> float:
        """Power of ``|t - |x||`` at the light-cone edge."""
        if self.kind is KernelKind.SINE_S_ALPHA:
            return self.alpha - 1.0
        if self.kind is KernelKind.COSINE_C_ONE_MINUS_ALPHA:
            return -self.alpha
        return 0.0


def _raw(spec: KernelSpec, t, x):
    ax = np.abs(x)
    a = spec.alpha
    if spec.kind is KernelKind.WAVE_G:
        return np.where(ax < t, 0.5, 0.0)
    if spec.kind is KernelKind.POISSON_E:
        return t / (math.pi * (t * t + ax * ax))
    d = t - ax
    if spec.kind is KernelKind.SINE_S_ALPHA:
        c = gamma_fn(1.0 - a) / (2.0 * math.pi) * math.cos(a * math.pi / 2.0)
        return c * ((t + ax) ** (a - 1.0) + np.sign(d) * np.abs(d) ** (a - 1.0))
    c = gamma_fn(a) / (2.0 * math.pi)
    return c * (
        math.cos(a * math.pi / 2.0) * ((t + ax) ** (-a) + np.abs(d) ** (-a))
        - 2.0 * np.cos(a * np.arctan(ax / t)) * (t * t + ax * ax) ** (-a / 2.0)
    )


def eval_kernel(spec: KernelSpec, t, x):
    """Closed-form kernel value; refuses the singular set ``|x| = t``."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    if spec.singular and np.any(np.abs(x) == t):
        raise SingularityError(f"{spec.kind.value} is singular at |x| = t")
    out = _raw(spec, t, x)
    return float(out) if np.ndim(out) == 0 else out


def eval_kernel_hat(spec: KernelSpec, t, xi):
    """Fourier transform in closed form, with the ``xi = 0`` limits."""
    t = np.asarray(t, dtype=float)
    xi = np.abs(np.asarray(xi, dtype=float))
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    a = spec.alpha
    # below this every transform equals its xi = 0 limit to double precision;
    # subnormal xi would otherwise corrupt sin(t xi) / xi
    zero = xi < 1e-150
    safe = np.where(zero, 1.0, xi)
    if spec.kind is KernelKind.POISSON_E:
        out = np.exp(-t * xi)
    elif spec.kind is KernelKind.WAVE_G:
        out = np.where(zero, t, np.sin(t * safe) / safe)
    elif spec.kind is KernelKind.SINE_S_ALPHA:
        out = np.where(zero, 0.0, np.sin(t * safe) / safe**a)
    else:
        out = np.where(zero, 0.0, (np.cos(t * safe) - np.exp(-t * safe)) / safe ** (1.0 - a))
    return float(out) if np.ndim(out) == 0 else out


# -- Fourier pairs ---------------------------------------------------------


def _edge_coefficient(spec: KernelSpec, x):
    """Coefficient ``c(x)`` of ``|t - |x||^e`` in the kernel near the cone edge."""
    a = spec.alpha
    if spec.kind is KernelKind.SINE_S_ALPHA:
        c = gamma_fn(1.0 - a) / (2.0 * math.pi) * math.cos(a * math.pi / 2.0)
        return c, -c  # inside, outside (sgn jump)
    c = gamma_fn(a) / (2.0 * math.pi) * math.cos(a * math.pi / 2.0)
    return c, c


def _regular_part(spec: KernelSpec, t, x):
    """Kernel minus its edge power term, smooth across ``x = t`` for ``x >= 0``."""
    inside, outside = _edge_coefficient(spec, x)
    d = t - x
    coef = np.where(d > 0, inside, outside)
    return _raw(spec, t, x) - coef * np.abs(d) ** spec.edge_exponent


def _cos_transform(spec: KernelSpec, t: float, xi: float, x_cutoff: float, n: int = 48):
    """``2 int_0^inf cos(x xi) K(t, x) dx`` and an error estimate.

    The edge power ``|t - x|^e`` is integrated by Gauss-Jacobi on the two panels
    touching ``x = t``; the smooth remainder by Gauss-Legendre; QAWF beyond
    ``x_cutoff``.
    """
    e = spec.edge_exponent
    total = 0.0
    if spec.singular:
        inside, outside = _edge_coefficient(spec, 0.0)
        hi = min(t + 1.0, x_cutoff)
        xs, ws = gauss_jacobi(0.0, t, right=e, n=n)
        total += inside * np.sum(ws * np.cos(xs * xi))
        xs, ws = gauss_jacobi(t, hi, left=e, n=n)
        total += outside * np.sum(ws * np.cos(xs * xi))
        edges = np.concatenate([np.linspace(0.0, t, 9), np.linspace(t, hi, 9)[1:]])
        xs, ws = composite_legendre(edges, 16)
        total += np.sum(ws * np.cos(xs * xi) * _regular_part(spec, t, xs))
        start = hi
    else:
        start = 0.0
    if x_cutoff > start:
        panels = max(8, int(np.ceil((x_cutoff - start) * max(xi, 1.0) / 2.0)))
        xs, ws = composite_legendre(np.linspace(start, x_cutoff, panels + 1), 16)
        total += np.sum(ws * np.cos(xs * xi) * _raw(spec, t, xs))
    g = lambda x: float(_raw(spec, t, x))
    err = 0.0
    if xi == 0.0:
        if spec.kind is KernelKind.POISSON_E:
            tail = 0.5 - math.atan(x_cutoff / t) / math.pi
        elif spec.kind is KernelKind.SINE_S_ALPHA:
            c, _ = _edge_coefficient(spec, 0.0)
            a = spec.alpha
            tail = c / a * ((x_cutoff - t) ** a - (x_cutoff + t) ** a)
        else:
            # Re (t + ix)^-a is the arctan term; the antiderivative vanishes at infinity
            a = spec.alpha
            c = gamma_fn(a) / (2.0 * math.pi) / (1.0 - a)
            X = x_cutoff
            F = c * (math.cos(a * math.pi / 2.0) * ((t + X) ** (1 - a) + (X - t) ** (1 - a))
                     - 2.0 * (complex(t, X) ** (1 - a)).imag)
            tail = -F
    else:
        tail, err = quad(g, x_cutoff, np.inf, weight="cos", wvar=xi, limlst=200, limit=400, epsabs=1e-13)
    return 2.0 * (total + tail), 2.0 * err


def verify_fourier_pair(spec: KernelSpec, t: float = 1.0, alpha: float | None = None,
                        xi_grid=None, x_cutoff: float = 8.0, tol: float = 1e-9) -> float:
    """Max ``|numerical transform - closed form|`` over ``xi_grid``."""
    if alpha is not None:
        spec = KernelSpec(spec.kind, alpha)
    if spec.kind is KernelKind.WAVE_G:
        raise ValueError("the indicator kernel is checked through S_1, not here")
    if xi_grid is None:
        xi_grid = np.linspace(-20.0, 20.0, 81)
    worst = 0.0
    for xi in np.asarray(xi_grid, dtype=float):
        val, err = _cos_transform(spec, t, abs(float(xi)), x_cutoff)
        if not np.isfinite(val) or err > tol:
            raise QuadratureError("oscillatory tail did not converge",
                                  {"xi": float(xi), "tail_error": err, "value": val})
        worst = max(worst, abs(val - eval_kernel_hat(spec, t, xi)))
    return worst


# -- decomposition -------------------------------------------------------------


def verify_decomposition_fourier(t, s, alpha, beta, xi):
    """Residual of the Fourier-side splitting of ``sin((t+s)|xi|)/|xi|`` (broadcasting)."""
    if np.ndim(alpha) or np.ndim(beta):
        return np.vectorize(_decomposition_residual)(t, s, alpha, beta, xi)
    return _decomposition_residual(t, s, alpha, beta, xi)


def _decomposition_residual(t, s, alpha, beta, xi):
    sa = KernelSpec(KernelKind.SINE_S_ALPHA, alpha)
    ca = KernelSpec(KernelKind.COSINE_C_ONE_MINUS_ALPHA, alpha)
    sb = KernelSpec(KernelKind.SINE_S_ALPHA, beta)
    cb = KernelSpec(KernelKind.COSINE_C_ONE_MINUS_ALPHA, beta)
    g = KernelSpec(KernelKind.WAVE_G)
    e = KernelSpec(KernelKind.POISSON_E)
    h = lambda k, tt: eval_kernel_hat(k, tt, xi)
    lhs = h(g, np.asarray(t) + np.asarray(s))
    rhs = h(sa, t) * h(ca, s) + h(g, t) * h(e, s) + h(sb, s) * h(cb, t) + h(g, s) * h(e, t)
    return float(np.abs(lhs - rhs))


def decomposition_terms(alpha: float, beta: float):
    """(outer, inner) kernel pairs: outer runs for ``t - r``, inner for ``r - s``."""
    return [
        (KernelSpec(KernelKind.COSINE_C_ONE_MINUS_ALPHA, beta), KernelSpec(KernelKind.SINE_S_ALPHA, beta)),
        (KernelSpec(KernelKind.SINE_S_ALPHA, alpha), KernelSpec(KernelKind.COSINE_C_ONE_MINUS_ALPHA, alpha)),
        (KernelSpec(KernelKind.WAVE_G), KernelSpec(KernelKind.POISSON_E)),
        (KernelSpec(KernelKind.POISSON_E), KernelSpec(KernelKind.WAVE_G)),
    ]


def _convolve_at(k1: KernelSpec, t1: float, k2: KernelSpec, t2: float, u: float, n: int = 48) -> float:
    """``int K1(t1, u - z) K2(t2, z) dz`` (principal value where edges coincide).

    Every breakpoint ``c`` gets a symmetric panel on which ``f(c+r) + f(c-r)``
    is integrated by Gauss-Jacobi; the odd part of coinciding singularities
    cancels there.
    """
    f = lambda z: _raw(k1, t1, u - z) * _raw(k2, t2, z)
    pts = {u - t1: k1.edge_exponent, u + t1: k1.edge_exponent, u: 0.0}
    for c, e in ((-t2, k2.edge_exponent), (t2, k2.edge_exponent), (0.0, 0.0)):
        key = next((p for p in pts if abs(p - c) < 1e-12), None)
        if key is None:
            pts[c] = e
        else:
            pts[key] = min(pts[key], e)
    cs = np.array(sorted(pts))
    gaps = np.diff(cs)
    total = 0.0
    edges = []
    for i, c in enumerate(cs):
        left = gaps[i - 1] if i > 0 else 1.0
        right = gaps[i] if i < len(gaps) else 1.0
        d = 0.5 * min(left, right, 1.0)
        e = pts[c]
        rs, ws = gauss_jacobi(0.0, d, left=e, n=n)
        total += np.sum(ws * (f(c + rs) + f(c - rs)) / rs**e)
        edges.append((c - d, c + d))
    # smooth panels between symmetric panels
    for (_, b), (a, _) in zip(edges[:-1], edges[1:]):
        if a > b:
            xs, ws = composite_legendre(np.linspace(b, a, 5), 16)
            total += np.sum(ws * f(xs))
    for lo, sign in ((edges[-1][1], 1.0), (edges[0][0], -1.0)):
        steps = lo + sign * (np.geomspace(1.0, 2.0**24, 49) - 1.0 + 1e-300)
        steps = steps[np.argsort(steps)]
        xs, ws = composite_legendre(steps, 16)
        total += np.sum(ws * f(xs))
    return float(total)


def verify_decomposition_space(t, s, r, u_grid, alpha: float = 0.7, beta: float | None = None):
    """Pointwise ``|sum of the four z-convolutions - G_{t-s}(u)|`` over ``u_grid``."""
    if not (0 <= s < r < t):
        raise ValueError("need 0 <= s < r < t")
    beta = alpha if beta is None else beta
    t1, t2 = t - r, r - s
    u_grid = np.atleast_1d(np.asarray(u_grid, dtype=float))
    out = np.empty_like(u_grid)
    for i, u in enumerate(u_grid):
        total = sum(_convolve_at(k1, t1, k2, t2, u) for k1, k2 in decomposition_terms(alpha, beta))
        if not np.isfinite(total):
            raise QuadratureError("non-finite convolution", {"u": u})
        # at the jump |u| = t - s (up to rounding of the inputs) the convolution
        # converges to the midpoint 1/4
        width = t - s
        d = abs(u) - width
        target = 0.25 if abs(d) <= 1e-12 * (1.0 + t) else (0.5 if d < 0 else 0.0)
        out[i] = abs(total - target)
    return out


# -- scalar identities ------------------------------------------------------------


def beta_identity_check(theta: float, s: float = 0.0, t: float = 1.0, n: int = 24):
    """``int_s^t (t-r)^(theta-1) (r-s)^(-theta) dr`` by Gauss-Jacobi, and ``pi/sin(theta pi)``."""
    if not (0.0 < theta < 1.0):
        raise ValueError("theta must lie in (0, 1)")
    if not (s < t):
        raise ValueError("need s < t")
    _, w = gauss_jacobi(s, t, left=-theta, right=theta - 1.0, n=n)
    return float(w.sum()), math.pi / math.sin(theta * math.pi)


def cos_arctan_identity_check(z, alpha: float):
    z = np.asarray(z, dtype=float)
    lhs = np.cos(alpha * np.arctan(z))
    rhs = 0.5 * (1.0 + z * z) ** (alpha / 2.0) * ((1.0 - 1j * z) ** (-alpha) + (1.0 + 1j * z) ** (-alpha))
    res = np.abs(lhs - rhs)
    return float(res) if res.ndim == 0 else res


def tail_exponent_fit(spec: KernelSpec, t: float = 1.0, alpha: float | None = None,
                      x_range=(8.0, 64.0), n: int = 64) -> float:
    if alpha is not None:
        spec = KernelSpec(spec.kind, alpha)
    lo, hi = x_range
    if lo <= 2.0 * t:
        raise ValueError("tail range must satisfy |x| > 2t")
    x = np.geomspace(lo, hi, n)
    y = np.abs(eval_kernel(spec, t, x))
    if np.all(y == 0):
        raise ValueError(f"{spec.kind.value} vanishes on the tail range")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# -- reports ------------------------------------------------------------------------


def kernel_table(spec: KernelSpec, t: float, x) -> str:
    """CSV text of ``(x, value)``; singular points are written as ``nan``."""
    lines = ["x,value"]
    for xv in np.asarray(x, dtype=float):
        if spec.singular and abs(xv) == t:
            v = float("nan")
        else:
            v = float(_raw(spec, t, xv))
        lines.append(f"{xv!r},{v!r}")
    return "\n".join(lines) + "\n"


def format_report(records: dict) -> str:
    def fmt(v):
        if isinstance(v, (bool, np.bool_)):
            return str(bool(v))
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        return str(v)

    return "".join(f"{k} = {fmt(v)}\n" for k, v in records.items())
