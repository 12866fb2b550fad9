"""Registry of the parameter-inequality systems and an explicit feasible recipe.

Every inequality is strict and evaluated in exact rational arithmetic (floats
are read through their shortest decimal ``repr``), so boundary cases such as
``H = 0.3, p = 10`` against ``p > 2/(4H-1)`` fail exactly.

The eta symbols are reused by different systems with different roles; a
``ParamSet`` may carry per-system eta tuples (``eta_by_system``) that override
the shared ``eta`` for that system only.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

__all__ = [
    "ParamSet",
    "Inequality",
    "ConditionReport",
    "SYSTEMS",
    "check_system",
    "feasible_point",
    "feasibility_scan",
    "strong_threshold",
    "window_search",
    "format_report",
    "scan_csv",
]


def _q(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


@dataclass(frozen=True)
class ParamSet:
    hurst: float
    p: float
    alpha: float = 0.0
    theta: float = 0.0
    gamma: float = 0.0
    eta: tuple = (0.0, 0.0, 0.0, 0.0, 0.0)
    beta: float = 0.0
    eta_by_system: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = [self.hurst, self.p, self.alpha, self.theta, self.gamma, self.beta, *self.eta]
        for sys_eta in self.eta_by_system.values():
            vals += list(sys_eta)
        if not all(np.isfinite(float(v)) for v in vals):
            raise ValueError("parameters must be finite")
        if not float(self.p) > 1:
            raise ValueError("p must exceed 1")
        if len(self.eta) != 5:
            raise ValueError("eta holds exactly five entries")

    @property
    def q(self) -> float:
        p = float(self.p)
        return p / (p - 1.0)

    def exact(self, system: str | None = None) -> dict:
        p = _q(self.p)
        eta = self.eta_by_system.get(system, self.eta) if system else self.eta
        out = {
            "H": _q(self.hurst), "p": p, "q": p / (p - 1), "alpha": _q(self.alpha),
            "theta": _q(self.theta), "gamma": _q(self.gamma), "beta": _q(self.beta),
        }
        for i, e in enumerate(eta, 1):
            out[f"eta{i}"] = _q(e)
        return out


@dataclass(frozen=True)
class Inequality:
    """``lhs < rhs`` with both sides exact."""

    name: str
    lhs: Fraction
    rhs: Fraction

    @property
    def holds(self) -> bool:
        return self.lhs < self.rhs

    @property
    def gap(self) -> Fraction:
        """Amount by which the inequality is violated (0 at equality, 0 when it holds)."""
        return max(Fraction(0), self.lhs - self.rhs)

    def relaxed(self, slack) -> "Inequality":
        """Same inequality with the right side raised by ``slack``."""
        return Inequality(self.name, self.lhs, self.rhs + _q(slack))


@dataclass(frozen=True)
class ConditionReport:
    system: str
    checks: tuple

    @property
    def violations(self) -> list[tuple[str, float, float]]:
        return [(c.name, float(c.lhs), float(c.rhs)) for c in self.checks if not c.holds]

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.passed


def _lt(name, lhs, rhs):
    return Inequality(name, lhs, rhs)


def _base(v):
    H, p = v["H"], v["p"]
    return [_lt("p > 1/H", 1 / H, p)]


def _cond_j(v):
    H, p, q, a, th = v["H"], v["p"], v["q"], v["alpha"], v["theta"]
    return _base(v) + [
        _lt("1 - 2/q + alpha < theta", 1 - 2 / q + a, th),
        _lt("theta < H + alpha - 1/2", th, H + a - Fraction(1, 2)),
        _lt("1 - H < alpha", 1 - H, a),
        _lt("alpha < 1 - 1/p", a, 1 - 1 / p),
    ]


def _cond_d(v):
    H, p, q, a, th = v["H"], v["p"], v["q"], v["alpha"], v["theta"]
    return _base(v) + [
        _lt("alpha window: 3/2 - 2H < 1 - 1/p", Fraction(3, 2) - 2 * H, 1 - 1 / p),
        _lt("1 - 2/q + alpha < theta", 1 - 2 / q + a, th),
        _lt("theta < 2H + alpha - 1", th, 2 * H + a - 1),
        _lt("3/2 - 2H < alpha", Fraction(3, 2) - 2 * H, a),
        _lt("alpha < 1 - 1/p", a, 1 - 1 / p),
    ]


def _cond_holder(v):
    H, p, a, g = v["H"], v["p"], v["alpha"], v["gamma"]
    return _base(v) + [
        _lt("1 - H < alpha", 1 - H, a),
        _lt("alpha < 1 - 1/p", a, 1 - 1 / p),
        _lt("gamma < H - 1/p", g, H - 1 / p),
    ]


def _alpha_q(v):
    return [_lt("0 < alpha", Fraction(0), v["alpha"]), _lt("alpha < 1/q", v["alpha"], 1 / v["q"])]


def _theta_310(v):
    return [_lt("theta > 1 - 2/q + alpha", 1 - 2 / v["q"] + v["alpha"], v["theta"])]


def _pi1(v):
    H, p, q, a, th, g = v["H"], v["p"], v["q"], v["alpha"], v["theta"], v["gamma"]
    return [
        _lt("1 - H < alpha", 1 - H, a),
        _lt("alpha < 1/q", a, 1 / q),
        _lt("alpha + gamma < 1/q", a + g, 1 / q),
        _lt("1/p < theta", 1 / p, th),
        _lt("theta < H + alpha - 1/2", th, H + a - Fraction(1, 2)),
    ]


def _pi2(v, k):
    e = v[f"eta{k}"]
    return [
        _lt(f"theta > 1 + alpha - 2/q + 2 eta{k}", 1 + v["alpha"] - 2 / v["q"] + 2 * e, v["theta"]),
        _lt(f"eta{k} > gamma", v["gamma"], e),
    ]


def _pi3(v, k):
    e = v[f"eta{k}"]
    return [_lt(f"alpha + eta{k} > 1/q", 1 / v["q"], v["alpha"] + e), _lt(f"eta{k} > gamma", v["gamma"], e)]


def _pi4(v, k):
    e = v[f"eta{k}"]
    return [_lt(f"alpha + eta{k} < 1/q", v["alpha"] + e, 1 / v["q"]), _lt(f"eta{k} > gamma", v["gamma"], e)]


def _mixed_system(roles):
    """``roles``: list of (eta index, lists) with lists drawn from '2', '3', '4'."""
    table = {"2": _pi2, "3": _pi3, "4": _pi4}

    def build(v):
        out = _base(v) + [_lt("gamma < H - 1/p", v["gamma"], v["H"] - 1 / v["p"])] + _pi1(v)
        for k, lists in roles:
            for li in lists:
                out += table[li](v, k)
        return _dedupe(out)

    return build


def _dedupe(checks):
    seen = set()
    out = []
    for c in checks:
        if c.name not in seen:
            seen.add(c.name)
            out.append(c)
    return out


# APPC_1 puts eta3 in list 4, which is what the eps recipe satisfies;
# APPC_1_LITERAL is the stricter reading with eta3 in list 3.
SYSTEMS: dict[str, Callable] = {
    "COND_J_EST": _cond_j,
    "COND_D_EST": _cond_d,
    "COND_HOLDER_MAIN": _cond_holder,
    "ALPHA_Q_39": _alpha_q,
    "THETA_310": _theta_310,
    "PI_1": _pi1,
    "PI_2": lambda v: _pi2(v, 1),
    "PI_3": lambda v: _pi3(v, 1),
    "PI_4": lambda v: _pi4(v, 1),
    "APPC_1": _mixed_system([(1, "23"), (2, "24"), (3, "4")]),
    "APPC_1_LITERAL": _mixed_system([(1, "23"), (2, "24"), (3, "3")]),
    "APPC_2": _mixed_system([(4, "23"), (5, "23")]),
    "APPC_3": _mixed_system([(1, "23"), (2, "3"), (3, "24")]),
    "APPC_4": _mixed_system([(4, "23")]),
    "APPC_5": _mixed_system([(2, "3"), (3, "4"), (4, "23")]),
    "APPC_6": _mixed_system([(4, "23"), (5, "23")]),
}


def check_system(system: str, params: ParamSet) -> ConditionReport:
    if system not in SYSTEMS:
        raise KeyError(f"unknown system {system!r}; known: {', '.join(SYSTEMS)}")
    return ConditionReport(system, tuple(SYSTEMS[system](params.exact(system))))


# -- recipe ------------------------------------------------------------------------

# eta offsets (in units of eps) below H - 1/p: list-3 roles take 3 eps, list-4 roles 6 eps
_RECIPE_ETA = {
    None: (3, 6, 6, 3, 3),
    "APPC_3": (3, 3, 6, 3, 3),
    "APPC_5": (3, 3, 6, 3, 3),
}

CLAIMED = ("COND_J_EST", "COND_HOLDER_MAIN", "ALPHA_Q_39", "THETA_310", "PI_1", "PI_2", "PI_3",
           "APPC_1", "APPC_2", "APPC_3", "APPC_4", "APPC_5", "APPC_6")


def feasible_point(hurst: float, p: float, eps: float, verify=CLAIMED) -> ParamSet:
    """Tuple from the explicit recipe, checked against ``verify`` before returning.

    gamma = H - 1/p - 7e, alpha = 1 - H + 4e, theta = H - e,
    eta1 = H - 1/p - 3e, eta2 = eta3 = H - 1/p - 6e, eta4 = eta5 = eta1.
    """
    H, P, e = _q(hurst), _q(p), _q(eps)
    if not P > 1 / H:
        raise ValueError(f"precondition p > 1/H violated ({p} <= {1 / float(H):.6g})")
    if not e > 0:
        raise ValueError("eps must be positive")
    top = H - 1 / P
    etas = {k: tuple(top - m * e for m in offs) for k, offs in _RECIPE_ETA.items()}
    ps = ParamSet(
        hurst=H, p=P, alpha=1 - H + 4 * e, theta=H - e, gamma=top - 7 * e,
        eta=etas[None], beta=1 - H + 4 * e,
        eta_by_system={k: v for k, v in etas.items() if k is not None},
    )
    for system in verify:
        rep = check_system(system, ps)
        if not rep.passed:
            name, lhs, rhs = rep.violations[0]
            raise ValueError(f"recipe fails {system}: {name} ({lhs:.6g} vs {rhs:.6g}); reduce eps")
    return ps


def strong_threshold(hurst: float) -> float:
    return 2.0 / (4.0 * float(hurst) - 1.0)


def _windows(H: Fraction, p: Fraction) -> tuple[Fraction, Fraction]:
    """Widths of the alpha and theta windows of COND_D_EST."""
    q = p / (p - 1)
    alpha_w = (1 - 1 / p) - (Fraction(3, 2) - 2 * H)
    theta_w = (2 * H - 1) - (1 - 2 / q)  # independent of alpha
    return alpha_w, theta_w


def feasibility_scan(H_grid, p_grid) -> tuple[list[tuple[float, float, bool]], list[tuple[float, float | None]]]:
    """Strong-solution feasibility table and the scanned boundary ``p*(H)``.

    Feasible iff ``p > 2/(4H-1)`` and both COND_D_EST windows are nonempty.
    The boundary entry is the smallest feasible ``p`` of the grid (None if none).
    """
    table = []
    boundary = []
    for h in H_grid:
        H = _q(h)
        first = None
        for p in p_grid:
            P = _q(p)
            aw, tw = _windows(H, P)
            ok = (4 * H - 1 > 0) and P > 2 / (4 * H - 1) and aw > 0 and tw > 0
            table.append((float(h), float(p), bool(ok)))
            if ok and first is None:
                first = float(p)
        boundary.append((float(h), first))
    return table, boundary


def window_search(hurst: float, p: float, system: str, n: int = 12, gamma_margin: float = 1e-3) -> ParamSet | None:
    """Brute-force grid search over (alpha, theta, eta) for a tuple passing ``system``.

    gamma is fixed ``gamma_margin`` below ``H - 1/p``; all five etas share one value.
    """
    H, P = float(hurst), float(p)
    top = H - 1.0 / P
    g = top - gamma_margin
    frac = (np.arange(n) + 0.5) / n
    for a in 1.0 - H + frac * H:
        for th in frac:
            for e in g + frac * (top - g) * 2.0:
                ps = ParamSet(H, P, float(a), float(th), float(g), (float(e),) * 5)
                if check_system(system, ps).passed:
                    return ps
    return None


def format_report(report: ConditionReport) -> str:
    lines = [f"system = {report.system}", f"pass = {report.passed}"]
    for c in report.checks:
        lines.append(f"{report.system} | {c.name} | {float(c.lhs)!r} | {float(c.rhs)!r} | {c.holds}")
    return "\n".join(lines) + "\n"


def scan_csv(table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["H", "p", "strong_solution_feasible"])
    for h, p, ok in table:
        w.writerow([repr(h), repr(p), int(ok)])
    return buf.getvalue()
