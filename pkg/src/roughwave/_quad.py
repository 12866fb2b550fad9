"""Gauss-Jacobi / Gauss-Legendre rules on arbitrary intervals."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=256)
def _jacobi(n: int, right: float, left: float) -> tuple[np.ndarray, np.ndarray]:
    # exponents summing to -1 trip a harmless 0/0 inside scipy's recurrence setup
    with np.errstate(divide="ignore", invalid="ignore"):
        x, w = roots_jacobi(n, right, left)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=64)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_jacobi(a, b, left: float = 0.0, right: float = 0.0, n: int = 32):
    """Nodes and weights for ``int_a^b f(x) (x-a)^left (b-x)^right dx``.

    ``a`` and ``b`` may be broadcastable arrays; the node axis is appended last.
    """
    x, w = _jacobi(n, float(right), float(left))
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    nodes = a + half * (x + 1.0)
    weights = w * half ** (1.0 + left + right)
    return nodes, weights


def gauss_legendre(a, b, n: int = 32):
    x, w = _legendre(n)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), w * half


def composite_legendre(edges, n: int = 16):
    """Flattened nodes/weights of a Gauss-Legendre rule on each panel of ``edges``."""
    edges = np.asarray(edges, dtype=float)
    nodes, weights = gauss_legendre(edges[:-1], edges[1:], n)
    return nodes.ravel(), weights.ravel()


def power_segment_integral(h0, h1, g0, g1, power: float) -> np.ndarray:
    """Exact ``int_{h0}^{h1} L(h) h^power dh`` with ``L`` linear through (h0,g0),(h1,g1).

    Product integration used for lag sums against ``|h|^(2H-2)`` weights.
    """
    h0 = np.asarray(h0, float)
    h1 = np.asarray(h1, float)
    g0 = np.asarray(g0, float)
    g1 = np.asarray(g1, float)

    def moment(k):
        e = power + k + 1.0
        if abs(e) < 1e-14:
            return np.log(h1 / h0)
        return (h1**e - h0**e) / e

    slope = (g1 - g0) / (h1 - h0)
    return (g0 - slope * h0) * moment(0) + slope * moment(1)
