"""Batch experiment runner.

    roughwave <command> --config <path> [--seed N] [--out DIR]

Config files are INI-style sections of ``key = value`` lines.  Unknown
sections or keys are errors.  Every run writes ``manifest.json`` (config echo,
seed, sha256 of each output) next to its CSV/JSON results; identical configs
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger("roughwave")

COMMANDS = ("simulate", "holder", "kernels-verify", "chaos", "params", "covariance")


class ConfigError(ValueError):
    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


SCHEMA = {
    "run": {"seed": (int, 0)},
    "grid": {"t_count": (int, 64), "x_count": (int, 64), "dt": (float, 1 / 64), "dx": (float, 1 / 64),
             "t0": (float, 0.0), "x0": (float, -0.5)},
    "noise": {"hurst": (float, 0.4)},
    "sigma": {"kind": (str, "LINEAR"), "a": (float, 1.0)},
    "data": {"kind": (str, "GAUSSIAN"), "value": (float, 1.0)},
    "solver": {"eps": (float, None), "n_max": (int, 30), "tol": (float, 1e-8), "realizations": (int, 1)},
    "norms": {"p": (float, 2.0), "lag_min": (float, None), "lag_max": (float, None),
              "t_lag_min": (float, None), "t_lag_max": (float, None)},
    "kernels": {"t": (float, 1.0), "alphas": (_floats, (0.55, 0.7, 0.85)), "xi_max": (float, 20.0),
                "xi_count": (int, 81), "tolerance": (float, 1e-4), "tolerance_e": (float, 1e-8)},
    "chaos": {"t": (float, 2.0), "x": (float, 0.0), "xi_cutoff": (float, 200.0), "xi_nodes": (int, 3200),
              "h_list": (_floats, tuple(2.0 ** -k for k in range(10, 3, -1))),
              "eps_list": (_floats, tuple(2.0 ** -k for k in range(8, 13))),
              "spectral_constant": (_bool, True)},
    "params": {"p": (float, 10.0), "eps": (float, 1e-3), "h_grid": (_floats, ()), "p_grid": (_floats, ())},
    "covariance": {"rows": (int, 2000), "columns": (int, 256), "lags": (_floats, (0, 1, 2, 4, 8))},
}


@dataclass
class ExperimentConfig:
    command: str
    values: dict
    out: Path = Path("out")
    warnings: list = field(default_factory=list)

    def get(self, section, key):
        return self.values[section][key]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    def echo(self) -> dict:
        def norm(v):
            return list(v) if isinstance(v, tuple) else v
        return {s: {k: norm(v) for k, v in kv.items()} for s, kv in self.values.items()}


def parse_config(text: str, command: str, seed: int | None = None, out=None) -> ExperimentConfig:
    """Parse and validate; raises ``ConfigError`` listing every problem found."""
    errors: list[str] = []
    warnings: list[str] = []
    if command not in COMMANDS:
        errors.append(f"unknown command {command!r}")
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__",
                                   inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"parse error: {exc}"]) from None
    values = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}
    for section in cp.sections():
        if section not in SCHEMA:
            errors.append(f"unknown section [{section}]")
            continue
        for key, raw in cp.items(section):
            if key not in SCHEMA[section]:
                errors.append(f"unknown key {section}.{key}")
                continue
            conv = SCHEMA[section][key][0]
            try:
                values[section][key] = conv(raw)
            except ValueError as exc:
                errors.append(f"bad value for {section}.{key}: {exc}")
    if seed is not None:
        values["run"]["seed"] = int(seed)
    _validate(command, values, errors, warnings)
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(command, values, Path(out) if out else Path("out"), warnings)


def _validate(command, v, errors, warnings):
    H = v["noise"]["hurst"]
    if not (0 < H <= 0.5):
        errors.append("H outside (0, 1/2]")
    if not (0 <= v["run"]["seed"] < 2**64):
        errors.append("seed must be a 64-bit unsigned integer")
    g = v["grid"]
    if g["dt"] <= 0 or g["dx"] <= 0:
        errors.append("grid steps must be positive")
    if g["t_count"] < 1 or g["x_count"] < 2:
        errors.append("need t_count >= 1 and x_count >= 2")
    eps = v["solver"]["eps"]
    if eps is not None and eps <= 0:
        errors.append("mollifier width eps must be positive")
    p = v["norms"]["p"]
    if p < 2:
        errors.append("p must be at least 2")
    if v["sigma"]["kind"] not in ("ZERO", "LINEAR", "SCALED_SINE"):
        errors.append(f"sigma.kind must be ZERO, LINEAR or SCALED_SINE, got {v['sigma']['kind']!r}")
    if v["data"]["kind"] not in ("GAUSSIAN", "CONSTANT", "ZERO"):
        errors.append(f"data.kind must be GAUSSIAN, CONSTANT or ZERO, got {v['data']['kind']!r}")
    if command in ("simulate", "holder") and 0 < H <= 0.5:
        if not (0.25 < H < 0.5):
            errors.append("H outside (1/4, 1/2): the solver requires 1/4 < H < 1/2")
        else:
            from .params import strong_threshold

            thr = strong_threshold(H)
            if p <= thr:
                warnings.append(f"p = {p} <= 2/(4H-1) = {thr:.6g}: the strong-solution theory "
                                "threshold is not met; the simulation is still defined")
        if v["solver"]["realizations"] < 1:
            errors.append("solver.realizations must be positive")
        if command == "holder" and v["solver"]["realizations"] < 500:
            errors.append("holder needs solver.realizations >= 500")
    if command == "chaos":
        c = v["chaos"]
        if not (0 < H < 0.5):
            errors.append("chaos diagnostics need 0 < H < 1/2")
        if c["t"] <= 0:
            errors.append("chaos.t must be positive")
        if any(not (0 <= h < min(1.0, c["t"] / 2)) for h in c["h_list"]):
            errors.append("chaos.h_list entries must lie in [0, min(1, t/2))")
        if any(not (0 < e < 1) for e in c["eps_list"]):
            errors.append("chaos.eps_list entries must lie in (0, 1)")
    if command == "params":
        if not (0 < H < 0.5):
            errors.append("params needs 0 < H < 1/2")
        if v["params"]["p"] <= 1 or v["params"]["eps"] <= 0:
            errors.append("params.p must exceed 1 and params.eps must be positive")
    if command == "kernels-verify":
        if any(not (0 < a < 1) for a in v["kernels"]["alphas"]):
            errors.append("kernels.alphas must lie in (0, 1)")


# -- runners --------------------------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x))


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in r))
    return "\n".join(lines) + "\n"


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _grid(cfg):
    from .noise import GridSpec

    g = cfg.values["grid"]
    return GridSpec(g["t_count"], g["x_count"], g["dt"], g["dx"], g["t0"], g["x0"])


def _sigma(cfg):
    from .solver import SigmaSpec

    s = cfg.values["sigma"]
    return {"ZERO": SigmaSpec.zero(), "LINEAR": SigmaSpec.linear(s["a"]),
            "SCALED_SINE": SigmaSpec.scaled_sine(s["a"])}[s["kind"]]


def _data(cfg):
    from .solver import InitialData

    d = cfg.values["data"]
    if d["kind"] == "GAUSSIAN":
        return InitialData.gaussian()
    if d["kind"] == "CONSTANT":
        return InitialData.constant(d["value"])
    return InitialData.zero()


def _solve(cfg):
    from .noise import NoiseParams
    from .solver import solve_ensemble

    sv = cfg.values["solver"]
    return solve_ensemble(_grid(cfg), NoiseParams(cfg.values["noise"]["hurst"], cfg.seed), _sigma(cfg),
                          _data(cfg), sv["eps"], sv["realizations"], sv["n_max"], sv["tol"])


def run_simulate(cfg) -> dict:
    from .norms import NormConfig, norm_report
    from .solver import dalembert_I0

    sol = _solve(cfg)
    g = sol.grid
    out = {}
    rows = []
    for k, t in enumerate(g.t_nodes):
        rows.append([t] + list(sol.values[0, k]))
    out["solution.csv"] = _csv(["t"] + [f"x={x!r}" for x in g.x_nodes], rows)
    i0 = dalembert_I0(_data(cfg), g.t_nodes[:, None], g.x_nodes[None, :])
    out["I0.csv"] = _csv(["t"] + [f"x={x!r}" for x in g.x_nodes],
                         [[t] + list(i0[k]) for k, t in enumerate(g.t_nodes)])
    out["residuals.csv"] = sol.residuals_csv(0)
    H = cfg.values["noise"]["hurst"]
    ncfg = NormConfig(cfg.values["norms"]["p"], H, g.dx)
    z1, z2 = norm_report(sol.values if sol.values.shape[0] > 1 else sol.values[0], ncfg)
    out["norms.csv"] = _csv(["t", "z1", "z2_contribution"], zip(g.t_nodes, z1, z2))
    out["summary.json"] = _json({"picard_iterations": sol.picard_iterations, "eps": sol.eps,
                                 "realizations": int(sol.values.shape[0]),
                                 "max_abs_minus_I0": float(np.max(np.abs(sol.values - i0)))})
    return out


def run_holder(cfg) -> dict:
    from .norms import Axis, holder_exponent

    sol = _solve(cfg)
    g = sol.grid
    nv = cfg.values["norms"]
    p = nv["p"]
    lo = nv["lag_min"] or 8 * g.dx
    hi = nv["lag_max"] or min(64 * g.dx, (g.x_count // 2) * g.dx)
    tlo = nv["t_lag_min"] or 4 * g.dt
    thi = nv["t_lag_max"] or (g.t_count // 4) * g.dt
    half = g.t_count // 2
    sx, ex = holder_exponent(sol.values, Axis.SPACE, p, (lo, hi), g.dx, t_slice=slice(half, None))
    st, et = holder_exponent(sol.values, Axis.TIME, p, (tlo, thi), g.dt, t_slice=slice(half, None))
    rows = [["SPACE", p, sx, ex, f"{lo!r}:{hi!r}"], ["TIME", p, st, et, f"{tlo!r}:{thi!r}"]]
    out = {"holder.csv": _csv(["axis", "p", "slope", "stderr", "lag_range"],
                              [[r[0], r[1], r[2], r[3], r[4]] for r in rows])}
    out["holder.json"] = _json({"SPACE": {"slope": sx, "stderr": ex}, "TIME": {"slope": st, "stderr": et},
                                "hurst": cfg.values["noise"]["hurst"], "p": p})
    return out


def run_kernels(cfg) -> dict:
    from .kernels import (KernelKind, KernelSpec, beta_identity_check, format_report,
                          verify_decomposition_space, verify_fourier_pair, verify_decomposition_fourier)

    kv = cfg.values["kernels"]
    xi = np.linspace(-kv["xi_max"], kv["xi_max"], kv["xi_count"])
    rec = {}
    ok = True
    for a in kv["alphas"]:
        for kind in (KernelKind.POISSON_E, KernelKind.SINE_S_ALPHA, KernelKind.COSINE_C_ONE_MINUS_ALPHA):
            err = verify_fourier_pair(KernelSpec(kind, a), kv["t"], xi_grid=xi)
            tol = kv["tolerance_e"] if kind is KernelKind.POISSON_E else kv["tolerance"]
            rec[f"fourier.{kind.value}.alpha={a!r}.max_error"] = err
            ok &= err < tol
    rng = np.random.default_rng(cfg.seed)
    draws = rng.uniform([0.01, 0.01, 0.01, 0.01, -50], [5, 5, 0.99, 0.99, 50], size=(1000, 5))
    res = verify_decomposition_fourier(*draws.T)
    rec["decomposition.fourier.max_residual"] = float(res.max())
    ok &= res.max() < 1e-12
    u = np.linspace(-1.2, 1.2, 25)
    sres = verify_decomposition_space(1.0, 0.2, 0.6, u, 0.7, 0.7)
    rec["decomposition.space.max_residual"] = float(sres.max())
    ok &= sres.max() < 5e-2
    worst = max(abs(np.subtract(*beta_identity_check(th / 10))) for th in range(1, 10))
    rec["beta_identity.max_error"] = float(worst)
    ok &= worst < 1e-6
    rec["all_within_tolerance"] = bool(ok)
    if not ok:
        raise RuntimeError("kernels: a verification exceeded its tolerance\n" + format_report(rec))
    return {"kernels_report.txt": format_report(rec), "kernels_report.json": _json(rec)}


def run_chaos(cfg) -> dict:
    from .chaos import (ChaosConfig, dh_i1_second_moment, i1_second_moment, i2_divergence_scan,
                        i2_upper_term, loglog_slope)

    c = cfg.values["chaos"]
    H = cfg.values["noise"]["hurst"]
    cc = ChaosConfig(hurst=H, t=c["t"], x=c["x"], xi_cutoff=c["xi_cutoff"], xi_nodes=c["xi_nodes"],
                     spectral_constant=c["spectral_constant"])
    i1 = i1_second_moment(cc)
    rows = []
    for h in c["h_list"]:
        e = dh_i1_second_moment(cc, h)
        rows.append((h, e.value, e.truncation_error))
    out = {"dh_i1.csv": _csv(["h", "value", "truncation_error"], rows)}
    scan = i2_divergence_scan(ChaosConfig(hurst=H, t=2.0, spectral_constant=c["spectral_constant"]),
                              c["eps_list"])
    out["i2_scan.csv"] = _csv(["eps", "value", "truncation_error"], [(e, v, 0.0) for e, v in scan])
    pos = [(h, v) for h, v, _ in rows if h > 0]
    summary = {"i1_second_moment": i1.value, "i1_truncation_error": i1.truncation_error,
               "i2_upper_term": i2_upper_term(H), "hurst": H}
    if len(pos) >= 2:
        summary["dh_slope"] = loglog_slope(*zip(*pos))
    if len(scan) >= 2:
        summary["scan_slope"] = loglog_slope(*zip(*scan))
    out["chaos.json"] = _json(summary)
    return out


def run_params(cfg) -> dict:
    from .params import CLAIMED, SYSTEMS, check_system, feasibility_scan, feasible_point, format_report, scan_csv

    H = cfg.values["noise"]["hurst"]
    pv = cfg.values["params"]
    ps = feasible_point(H, pv["p"], pv["eps"])
    text = "".join(format_report(check_system(s, ps)) for s in SYSTEMS)
    hg = pv["h_grid"] or tuple(np.round(np.linspace(0.26, 0.49, 24), 6))
    pg = pv["p_grid"] or tuple(np.round(np.linspace(2.0, 60.0, 59), 6))
    table, boundary = feasibility_scan(hg, pg)
    out = {"report.txt": text, "feasibility.csv": scan_csv(table)}
    out["boundary.csv"] = _csv(["H", "p_scan", "p_theory"],
                               [(h, "" if b is None else _fmt(b), 2 / (4 * h - 1)) for h, b in boundary])
    out["params.json"] = _json({"claimed": list(CLAIMED),
                                "passed": {s: check_system(s, ps).passed for s in SYSTEMS},
                                "strong_solution_feasible": pv["p"] > 2 / (4 * H - 1)})
    return out


def run_covariance(cfg) -> dict:
    from .noise import GridSpec, NoiseParams, fgn_covariance, sample_noise_field

    cv = cfg.values["covariance"]
    H = cfg.values["noise"]["hurst"]
    dx = cfg.values["grid"]["dx"]
    g = GridSpec(cv["rows"], cv["columns"], 1.0, dx)
    inc = sample_noise_field(g, NoiseParams(H, cfg.seed)).increments
    rows = []
    for k in (int(v) for v in cv["lags"]):
        per_row = (inc[:, : inc.shape[1] - k] * inc[:, k:]).mean(axis=1)
        est, se = per_row.mean(), per_row.std(ddof=1) / math.sqrt(per_row.size)
        exact = fgn_covariance(k, H, dx)
        rows.append((k, est, se, exact, abs(est - exact) / se))
    return {"covariance.csv": _csv(["lag", "empirical", "stderr", "exact", "z_score"], rows)}


RUNNERS = {"simulate": run_simulate, "holder": run_holder, "kernels-verify": run_kernels,
           "chaos": run_chaos, "params": run_params, "covariance": run_covariance}

_MODULE = {"simulate": "solver", "holder": "norms", "kernels-verify": "kernels", "chaos": "chaos",
           "params": "params", "covariance": "noise"}


def run(cfg: ExperimentConfig) -> int:
    """Execute ``cfg``; returns the exit status."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    lock = out / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        log.error("output directory %s is locked by another run", out)
        return 3
    os.close(fd)
    written: list[Path] = []
    failed = out / "FAILED"
    try:
        for w in cfg.warnings:
            log.warning(w)
        files = RUNNERS[cfg.command](cfg)
        digests = {}
        for name in sorted(files):
            path = out / name
            path.write_text(files[name])
            written.append(path)
            digests[name] = hashlib.sha256(files[name].encode()).hexdigest()
        manifest = {"command": cfg.command, "config": cfg.echo(), "seed": cfg.seed,
                    "outputs": digests, "warnings": cfg.warnings}
        (out / "manifest.json").write_text(_json(manifest))
        if failed.exists():
            failed.unlink()
        return 0
    except Exception as exc:  # report with module provenance, leave no partial output
        for path in written:
            path.unlink(missing_ok=True)
        failed.write_text(f"{_MODULE[cfg.command]}: {type(exc).__name__}: {exc}\n")
        log.error("%s: %s: %s", _MODULE[cfg.command], type(exc).__name__, exc)
        return 2
    finally:
        lock.unlink(missing_ok=True)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="roughwave", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, type=Path)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", type=Path, default=Path("out"))
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return 1
    try:
        cfg = parse_config(text, args.command, args.seed, args.out)
    except ConfigError as exc:
        for e in exc.errors:
            log.error("config: %s", e)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
