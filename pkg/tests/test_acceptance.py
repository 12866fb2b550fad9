"""Acceptance suite: one test per criterion, each reporting PASS/FAIL with its measured values."""

import math
from fractions import Fraction

import numpy as np
import pytest

from roughwave.chaos import ChaosConfig, dh_i1_second_moment, i1_second_moment, i2_divergence_scan, loglog_slope
from roughwave.kernels import (
    KernelKind,
    KernelSpec,
    beta_identity_check,
    verify_decomposition_fourier,
    verify_decomposition_space,
    verify_fourier_pair,
)
from roughwave.noise import (
    GridSpec,
    NoiseParams,
    empirical_w_covariance,
    fgn_covariance,
    sample_noise_field,
    w_covariance,
)
from roughwave.norms import Axis, NormConfig, holder_exponent, z_norm_estimate
from roughwave.params import CLAIMED, ParamSet, check_system, feasibility_scan, feasible_point, strong_threshold
from roughwave.solver import (
    InitialData,
    SigmaSpec,
    convolution_variance,
    dalembert_I0,
    solve_ensemble,
    stochastic_convolution,
)


def test_c01_fourier_pairs(criterion):
    c = criterion(1, "Fourier pairs of E, S_a, C_(1-a) on |xi| <= 20", 10)
    worst = {"E": 0.0, "S": 0.0, "C": 0.0}
    for a in (0.55, 0.7, 0.85):
        worst["E"] = max(worst["E"], verify_fourier_pair(KernelSpec(KernelKind.POISSON_E, a), 1.0))
        worst["S"] = max(worst["S"], verify_fourier_pair(KernelSpec(KernelKind.SINE_S_ALPHA, a), 1.0))
        worst["C"] = max(worst["C"], verify_fourier_pair(KernelSpec(KernelKind.COSINE_C_ONE_MINUS_ALPHA, a), 1.0))
    ok = worst["E"] < 1e-8 and worst["S"] < 1e-4 and worst["C"] < 1e-4
    c.finish(ok, "max errors " + ", ".join(f"{k} {v:.2e}" for k, v in worst.items()))


def test_c02_decomposition(criterion):
    c = criterion(2, "four-kernel decomposition", 60)
    rng = np.random.default_rng(2024)
    t, s = rng.uniform(0.01, 5.0, (2, 1000))
    a, b = rng.uniform(0.01, 0.99, (2, 1000))
    xi = rng.uniform(-50.0, 50.0, 1000)
    four = float(np.max(verify_decomposition_fourier(t, s, a, b, xi)))
    u = np.linspace(-1.5, 1.5, 31)
    space = float(np.max(verify_decomposition_space(1.0, 0.2, 0.6, u, 0.7, 0.7)))
    c.finish(four < 1e-12 and space < 5e-2, f"Fourier residual {four:.2e} (1000 draws), space residual {space:.2e}")


def test_c03_beta_identity(criterion):
    c = criterion(3, "beta identity", 1)
    errs = [abs(np.subtract(*beta_identity_check(k / 10))) for k in range(1, 10)]
    c.finish(max(errs) < 1e-6, f"max error {max(errs):.2e} over theta = 0.1..0.9")


def test_c04_noise_law(criterion):
    c = criterion(4, "noise law", 120)
    parts = []
    ok = True
    for H in (0.3, 0.4):
        g = GridSpec(10_000, 512, 1.0, 1.0 / 512)
        inc = sample_noise_field(g, NoiseParams(H, 40 + int(10 * H))).increments
        zs = []
        for k in (0, 1, 2, 4, 8):
            per_row = (inc[:, : 512 - k] * inc[:, k:]).mean(axis=1)
            se = per_row.std(ddof=1) / math.sqrt(per_row.size)
            zs.append(abs(per_row.mean() - fgn_covariance(k, H, g.dx)) / se)
        ok &= max(zs) < 4
        parts.append(f"H={H} lag max|z| {max(zs):.2f}")
    rng = np.random.default_rng(7)
    for H in (0.3, 0.4):
        g = GridSpec(16, 256, 1 / 8, 1 / 64, 0.0, -2.0)
        ens = [sample_noise_field(g, NoiseParams(H, 77), i) for i in range(2000)]
        zs = []
        for _ in range(5):
            p1 = (int(rng.integers(1, 17)) / 8, int(rng.integers(-128, 129)) / 64)
            p2 = (int(rng.integers(1, 17)) / 8, int(rng.integers(-128, 129)) / 64)
            est, se = empirical_w_covariance(ens, p1, p2)
            zs.append(abs(est - w_covariance(p1, p2, H)) / se)
        ok &= max(zs) < 4
        parts.append(f"H={H} W-cov max|z| {max(zs):.2f}")
    c.finish(ok, "; ".join(parts))


def test_c05_isometry(criterion):
    c = criterion(5, "discrete isometry", 300)
    H = 0.4
    g = GridSpec(32, 96, 1 / 32, 1 / 32, 0.0, -1.5)
    v = dalembert_I0(InitialData.gaussian(), g.t_nodes[:-1, None], g.x_nodes[None, :])
    k, m = 32, 48
    exact = convolution_variance(v, g, H, k, m)
    samples = np.array([stochastic_convolution(v, sample_noise_field(g, NoiseParams(H, 5), i), k, m)
                        for i in range(10_000)])
    rel = abs(samples.var(ddof=1) / exact - 1)
    c.finish(rel < 0.05, f"ensemble variance {samples.var(ddof=1):.5f} vs quadratic form {exact:.5f} ({rel:.2%})")


def test_c06_picard(criterion):
    c = criterion(6, "Picard behavior", 600)
    dx = 2.0**-7
    g = GridSpec(128, 256, dx, dx, 0.0, -1.0)
    lin = solve_ensemble(g, NoiseParams(0.4, 6), SigmaSpec.linear(1.0), InitialData.gaussian(),
                         eps=4 * dx * dx, n_realizations=3, n_max=12, tol_Z2=1e-3)
    ok = True
    finals = []
    for r in lin.picard_residuals:
        ok &= all(b < a for a, b in zip(r[1:], r[2:])) and r[-1] < 1e-3 and len(r) <= 12
        finals.append(f"{len(r)} its -> {r[-1]:.1e}")
    zero = solve_ensemble(g, NoiseParams(0.4, 6), SigmaSpec.zero(), InitialData.gaussian(), eps=4 * dx * dx)
    i0 = dalembert_I0(InitialData.gaussian(), g.t_nodes[:, None], g.x_nodes[None, :])
    ok_zero = zero.picard_iterations == 1 and zero.picard_residuals[0] == [0.0] and np.array_equal(zero.values[0], i0)
    c.finish(ok and ok_zero, f"LINEAR(1): {', '.join(finals)}; ZERO: exact in {zero.picard_iterations} step")


@pytest.mark.slow
def test_c07_holder(criterion):
    c = criterion(7, "Holder exponents, p = 8", 1800)
    dx = 2.0**-7
    g = GridSpec(128, 96, dx, dx, 0.0, -0.375)
    ok = True
    parts = []
    for H in (0.3, 0.4):
        sol = solve_ensemble(g, NoiseParams(H, 70 + int(10 * H)), SigmaSpec.linear(1.0), InitialData.constant(1.0),
                             eps=dx * dx / 50, n_realizations=1000, n_max=30, tol_Z2=1e-6)
        late = slice(64, None)
        sx, _ = holder_exponent(sol.values, Axis.SPACE, 8.0, (2 * dx, 16 * dx), dx, t_slice=late)
        st, _ = holder_exponent(sol.values, Axis.TIME, 8.0, (2 * dx, 16 * dx), dx, t_slice=late)
        ok &= abs(sx - H) < 0.1 and abs(st - H) < 0.1
        parts.append(f"H={H}: SPACE {sx:.3f}, TIME {st:.3f}")
    c.finish(ok, "; ".join(parts))


def test_c08_first_chaos_scaling(criterion):
    c = criterion(8, "increment scaling of the first chaos", 300)
    hs = 2.0 ** -np.arange(10, 3, -1)
    ok = True
    parts = []
    for H in (0.3, 0.35, 0.45):
        cfg = ChaosConfig(hurst=H, t=2.0, x=0.0)
        vals = [dh_i1_second_moment(cfg, h).value for h in hs]
        slope = loglog_slope(hs, vals)
        ok &= abs(slope - 2 * H) < 0.15
        parts.append(f"H={H}: slope {slope:.4f}")
    c.finish(ok, "; ".join(parts))


def test_c09_second_chaos_divergence(criterion):
    c = criterion(9, "second-chaos divergence at H <= 1/4", 600)
    eps = 2.0 ** -np.arange(16, 33, 4)
    scan = i2_divergence_scan(ChaosConfig(hurst=0.2, t=2.0), eps)
    slope = loglog_slope(*zip(*scan))
    ok_slope = abs(slope + (1 - 4 * 0.2)) < 0.05
    a, b = i2_divergence_scan(ChaosConfig(hurst=0.35, t=2.0), [2.0**-8, 2.0**-9])
    cauchy = abs(b[1] - a[1]) / a[1]
    quarter = i2_divergence_scan(ChaosConfig(hurst=0.25, t=2.0), 2.0 ** -np.arange(8, 17, 2))
    vals = [v for _, v in sorted(quarter, reverse=True)]
    inc = np.diff(vals)
    ratios = inc[1:] / inc[:-1]
    ok_ratio = bool(np.all(np.abs(ratios - 1) < 0.1))
    c.finish(ok_slope and cauchy < 0.05 and ok_ratio,
             f"H=0.2 slope {slope:.4f}; H=0.35 halving change {cauchy:.2%}; "
             f"H=0.25 increment ratios {', '.join(f'{r:.4f}' for r in ratios)}")


def _mc_first_chaos(t, x, H, dx, n):
    T = int(round(t / dx))
    lo = x - t - dx
    g = GridSpec(T, int(round((2 * t + 2 * dx) / dx)), dx, dx, 0.0, lo)
    v = dalembert_I0(InitialData.gaussian(), g.t_nodes[:-1, None], g.x_nodes[None, :])
    m = int(round((x - lo) / dx))
    samples = np.array([stochastic_convolution(v, sample_noise_field(g, NoiseParams(H, 10 + int(t)), i), T, m)
                        for i in range(n)])
    return samples, convolution_variance(v, g, H, T, m)


def test_c10_spectral_vs_monte_carlo(criterion):
    c = criterion(10, "spectral vs Monte Carlo first chaos", 600)
    H = 0.4
    ok = True
    parts = []
    for t, x in ((1.0, 0.0), (2.0, 0.5)):
        spec = i1_second_moment(ChaosConfig(hurst=H, t=t, x=x)).value
        samples, discrete = _mc_first_chaos(t, x, H, 1 / 64, 10_000)
        mc = float(np.mean(samples**2))
        rel = abs(mc / spec - 1)
        ok &= rel < 0.05
        parts.append(f"({t:g},{x:g}): spectral {spec:.5f}, MC {mc:.5f} ({rel:.2%}), discrete exact {discrete:.5f}")
    c.finish(ok, "; ".join(parts))


def test_c11_params(criterion):
    c = criterion(11, "parameter registry", 1)
    Hs = np.linspace(0.3, 0.48, 10)
    bad = []
    for H in Hs:
        H = float(round(H, 6))
        thr = strong_threshold(H)
        for j in range(10):
            p = float(round(thr * 1.01 * 2 ** (j / 2), 6))
            eps = min(1e-3, (H - 1 / p) / 100)
            ps = feasible_point(H, p, eps)
            bad += [(H, p, s) for s in CLAIMED if not check_system(s, ps).passed]
    h_grid = [float(round(h, 6)) for h in Hs]
    dp = 0.05
    p_grid = [float(round(2 + dp * k, 6)) for k in range(int((40 - 2) / dp) + 1)]
    _, boundary = feasibility_scan(h_grid, p_grid)
    off = [(h, b) for h, b in boundary if b is None or not (0 < b - strong_threshold(h) <= dp + 1e-12)]
    # p = 2/(4H-1) exactly in decimal arithmetic
    eq = [(h, p) for h, p in ((0.3, 10.0), (0.375, 4.0), (0.45, 2.5), (0.35, 5.0))
          if feasibility_scan([h], [p])[0][0][2]]
    pi1 = check_system("PI_1", ParamSet(0.4, 10.0, alpha=Fraction(9, 10), theta=0.5))
    eq += [] if "alpha < 1/q" in [v[0] for v in pi1.violations] else [("PI_1", "alpha = 1/q")]
    c.finish(not bad and not off and not eq,
             f"{100 - len({b[:2] for b in bad})}/100 recipe points pass all claimed systems; "
             f"boundary off-cell {len(off)}; equality inputs accepted {len(eq)}")


def test_c12_indicator_norm(criterion):
    c = criterion(12, "z-norm of the unit indicator", 30)
    dx = 2.0**-10
    xs = np.arange(-8.0, 9.0 + dx / 2, dx)
    u = ((xs >= 0) & (xs <= 1)).astype(float)
    ok = True
    parts = []
    for H in (0.3, 0.4):
        z1, z2, _ = z_norm_estimate(u[None, :], NormConfig(2.0, H, dx))
        target = 4 * (1 / (2 * H) + 1 / (1 - 2 * H))
        e1, e2 = abs(z1 - 1), abs(z2**2 / target - 1)
        ok &= e1 < 0.05 and e2 < 0.05
        parts.append(f"H={H}: z1 {z1:.4f}, z2^2 {z2**2:.3f} vs {target:.3f}")
    c.finish(ok, "; ".join(parts))
