"""Benchmark harness and CLI.

A single JSON config describes an experiment grid: an instance block
(synthetic regression, its deterministic variant, or the adversarial
hidden-sign instance), a solver block (which algorithms and schedule knobs),
a run block (target accuracy, horizon, seeds), and an output block. Every
quantity has a default matching the standard benchmark setup (d=50, kappa=2,
mu=2, sigma_b=0.1, epsilon=0.01; the exponent q, the target vector scale and
the start point are calibration choices, flagged like any other override)
and any key the user changes is listed under ``overrides`` in all emitted
artifacts.

Grid cells x seeds run independently (optionally across processes); each run
writes ``trace-<cell>-<seed>.csv`` with header
``t,psi_gap,bregman_to_opt,alpha_t,gamma_t``, and the experiment ends with a
``summary.json`` (per-cell medians/quartiles, resolved schedules, certificate
status) plus a ``manifest.json`` carrying the resolved config and file
hashes. Outputs are deterministic: the same config byte-for-byte reproduces
the same CSVs.

Exit codes: 0 success, 2 config validation failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import (
    certificate_check,
    concentration_check,
    exact_optimum,
    lower_bound_experiment,
    ridge_psi,
)
from .errors import ConfigError, NumericalError, ParameterError
from .geometry import derive_params, power_uc_constant
from .oracles import RidgeInstance, additive_noise_oracle, bernoulli_oracle, ridge_oracle
from .regularizers import PowerNormRegularizer
from .solvers import (
    PolynomialSchedule,
    TraceOptions,
    acsa_baseline,
    acsmd,
    default_schedule,
    nacsmd,
    plan_from_params,
    restart,
    validate_schedule,
)

__all__ = [
    "DEFAULT_CONFIG",
    "resolve_config",
    "build_cells",
    "run_experiment",
    "emit_table",
    "emit_plotdata",
    "parse_plotdata",
    "main",
]

DEFAULT_CONFIG = {
    "instance": {
        "kind": "ridge",              # ridge | custom-deterministic | bernoulli
        "d": 50,
        "q": 3.0,                     # reference tables do not pin q; chosen by calibration
        "kappa": 2.0,
        "mu": 2.0,
        "sigma_b": 0.1,
        "x_star": {"kind": "uniform", "scale": 0.3},
        "x1": {"kind": "constant", "value": 3.25},
        "L_multiplier": 1.0,
        "R": None,
        # bernoulli-only knobs
        "sigma": 1.0,
        "target_accuracy": 0.05,
    },
    "solver": {
        "algorithms": ["acsa", "nacsmd", "acsmd1", "acsmd2", "acsmd3"],
        "safety_scale": 1.0,
        # "printed" runs the literal polynomial constants of the reference
        # experiments (nominal mu, no offset repair); "validated" auto-tunes
        # offsets until the step conditions hold, as the certificates require
        "schedule_mode": "printed",
        "acsa_stage0": 1,
    },
    "run": {
        "epsilon": 0.01,
        "T_max": 999,
        "seeds": {"count": 20, "base": 0},
        "stop_at_target": True,
        "restart": None,              # None | "auto" | {"n":..,"K":..,"T":..}
        "certificates": True,
        "thin": 1,
    },
    "output": {
        "dir": "ccmin-out",
        "formats": ["csv", "json"],
        "traces": True,
        "plotdata": True,
    },
}

_ALGORITHMS = ("acsa", "nacsmd", "acsmd", "acsmd1", "acsmd2", "acsmd3")
_KINDS = ("ridge", "custom-deterministic", "bernoulli")
CENSOR_MARGIN = 1  # censored runs count as T_max + 1 in medians


def _merge_defaults(raw: dict, defaults: dict, path: str, overrides: list) -> dict:
    out = {}
    for key, default in defaults.items():
        if key in raw:
            value = raw[key]
            if isinstance(default, dict) and isinstance(value, dict) and key not in ("x_star", "x1"):
                out[key] = _merge_defaults(value, default, f"{path}{key}.", overrides)
                continue
            if value != default:
                overrides.append(f"{path}{key}")
            out[key] = value
        else:
            out[key] = default
    unknown = set(raw) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys under {path or 'top level'}: {sorted(unknown)}")
    return out


def resolve_config(raw: dict) -> dict:
    """Fill defaults, record overrides, and validate the static structure."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    overrides: list = []
    cfg = _merge_defaults(raw, DEFAULT_CONFIG, "", overrides)
    cfg["overrides"] = sorted(overrides)

    inst = cfg["instance"]
    if inst["kind"] not in _KINDS:
        raise ConfigError(f"instance.kind must be one of {_KINDS}, got {inst['kind']!r}")
    for key in ("d", "L_multiplier"):
        if not isinstance(inst[key], list):
            inst[key] = [inst[key]]
    if any(int(d) < 1 for d in inst["d"]):
        raise ConfigError("instance.d entries must be positive")
    if any(m <= 0 for m in inst["L_multiplier"]):
        raise ConfigError("instance.L_multiplier entries must be positive")
    if inst["q"] < 2.0:
        raise ConfigError(f"instance.q must be >= 2, got {inst['q']}")
    if not 1.0 < inst["kappa"] <= 2.0:
        raise ConfigError(f"instance.kappa must lie in (1, 2], got {inst['kappa']}")
    xs = inst["x_star"]
    if xs.get("kind") not in ("uniform", "fixed"):
        raise ConfigError("instance.x_star.kind must be 'uniform' or 'fixed'")
    if xs["kind"] == "fixed" and "values" not in xs:
        raise ConfigError("fixed x_star needs a 'values' list")
    x1 = inst["x1"]
    if x1.get("kind") not in ("constant", "zeros", "fixed"):
        raise ConfigError("instance.x1.kind must be 'constant', 'zeros' or 'fixed'")
    if cfg["solver"]["schedule_mode"] not in ("printed", "validated"):
        raise ConfigError("solver.schedule_mode must be 'printed' or 'validated'")

    algs = cfg["solver"]["algorithms"]
    if not algs:
        raise ConfigError("solver.algorithms must not be empty")
    for alg in algs:
        name = alg["name"] if isinstance(alg, dict) else alg
        if name not in _ALGORITHMS:
            raise ConfigError(f"unknown algorithm {name!r}; expected one of {_ALGORITHMS}")

    run = cfg["run"]
    seeds = run["seeds"]
    if isinstance(seeds, dict):
        count, base = int(seeds.get("count", 0)), int(seeds.get("base", 0))
        if count < 1:
            raise ConfigError("run.seeds.count must be >= 1")
        run["seeds"] = list(range(base, base + count))
    elif isinstance(seeds, list):
        if not seeds:
            raise ConfigError("run.seeds must not be empty")
        run["seeds"] = [int(s) for s in seeds]
    else:
        raise ConfigError("run.seeds must be a list or {count, base}")
    if run["T_max"] < 1:
        raise ConfigError("run.T_max must be >= 1")
    if not 0.0 < run["epsilon"] < 1.0:
        raise ConfigError("run.epsilon must lie in (0, 1)")
    if run["thin"] < 1:
        raise ConfigError("run.thin must be >= 1")
    return cfg


def _algorithm_spec(alg) -> dict:
    if isinstance(alg, dict):
        spec = dict(alg)
    elif alg in ("acsmd1", "acsmd2", "acsmd3"):
        spec = {"name": "acsmd", "m": float(alg[-1]), "offset": "condition_root", "label": alg}
    else:
        spec = {"name": alg}
    spec.setdefault("label", spec["name"])
    return spec


def build_cells(cfg: dict) -> list:
    """Expand the grid: one cell per (d, L_multiplier, algorithm)."""
    inst = cfg["instance"]
    cells = []
    for d in inst["d"]:
        for mult in inst["L_multiplier"]:
            for alg in cfg["solver"]["algorithms"]:
                spec = _algorithm_spec(alg)
                label = f"{inst['kind']}-d{int(d)}-Lx{mult:g}-{spec['label']}"
                cells.append({
                    "label": label,
                    "d": int(d),
                    "L_multiplier": float(mult),
                    "algorithm": spec,
                })
    return cells


def _draw_x_star(inst: dict, d: int, seed: int) -> np.ndarray:
    xs = inst["x_star"]
    if xs["kind"] == "fixed":
        values = np.asarray(xs["values"], dtype=float)
        if values.size != d:
            raise ConfigError(f"fixed x_star has {values.size} entries but d={d}")
        return values
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, 101))))
    return xs.get("scale", 1.0) * rng.uniform(-1.0, 1.0, d)


def _make_x1(inst: dict, d: int) -> np.ndarray:
    x1 = inst["x1"]
    if x1["kind"] == "zeros":
        return np.zeros(d)
    if x1["kind"] == "constant":
        return float(x1.get("value", 0.0)) * np.ones(d)
    values = np.asarray(x1["values"], dtype=float)
    if values.size != d:
        raise ConfigError(f"fixed x1 has {values.size} entries but d={d}")
    return values


_SCHEDULE_CACHE: dict = {}


def _resolve_schedule(spec: dict, params, target: str, solver_cfg: dict, nominal_mu: float):
    """Build the run schedule; cached because it is seed-independent.

    In "printed" mode the literal polynomial constants are used: degree per
    the target's standard formula (or the user's m), offset 2(m+1)M/mu for
    the plain solver and (L/mu)^(1/q) for the accelerated variants, with the
    nominal regularizer weight mu. These can violate the step conditions at
    small t; "validated" mode instead calls default_schedule, which repairs
    the offset against the calibrated convexity modulus.
    """
    offset = spec.get("offset")
    mode = solver_cfg["schedule_mode"]
    safety = spec.get("safety_scale", solver_cfg["safety_scale"])
    key = (params.q, params.kappa, params.L, params.mu, target,
           spec.get("m"), offset, safety, mode, nominal_mu)
    if key in _SCHEDULE_CACHE:
        return _SCHEDULE_CACHE[key]
    if mode == "validated":
        if offset == "condition_root":
            offset = (params.L / nominal_mu) ** (1.0 / params.q)
        sched = default_schedule(params, target, m=spec.get("m"), offset=offset,
                                 safety_scale=safety)
    else:
        m = spec.get("m")
        if m is None:
            if target == "nacsmd":
                m = 0.0  # the reference experiments run constant alpha_t
            else:
                q, r = params.q, params.r
                fallback = (2.0 - q) / (q - 1.0)
                # smooth case needs growing alpha for acceleration, as in
                # default_schedule
                m = max(q / r - 2.0, fallback) if r > 0.0 else max(1.0, fallback)
        if offset == "condition_root" or offset is None and target == "acsmd":
            offset = (params.L / nominal_mu) ** (1.0 / params.q)
        elif offset is None:
            offset = 2.0 * (m + 1.0) * params.M / nominal_mu
        sched = PolynomialSchedule(m=float(m), offset=float(offset), target=target,
                                   safety_scale=safety)
    _SCHEDULE_CACHE[key] = sched
    return sched


def _prepare_cell(cfg: dict, cell: dict, seed: int):
    """Build the problem bundle for one (cell, seed) pair."""
    inst = cfg["instance"]
    kind = inst["kind"]
    spec = cell["algorithm"]
    if kind == "bernoulli":
        rng_nu = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, 11))))
        nu = 1 if rng_nu.random() < 0.5 else -1
        oracle, b_inst = bernoulli_oracle(
            inst["mu"], inst["q"], inst["sigma"], inst["target_accuracy"], nu=nu,
        )
        mu_eff = inst["mu"] * power_uc_constant(inst["q"])
        params = derive_params(inst["q"], 2.0, 0.0, mu_eff, sigma=inst["sigma"])
        H = PowerNormRegularizer(mu=inst["mu"], q=inst["q"], dim=1)
        x1 = np.zeros(1)
        psi = lambda x: b_inst.psi(float(np.asarray(x).ravel()[0]))  # noqa: E731
        return {
            "oracle": oracle, "params": params, "H": H, "x1": x1,
            "psi": psi, "psi_star": b_inst.psi_star, "x_opt": np.array([b_inst.x_opt]),
            "gap0": b_inst.gap_at_origin, "mu_f": None, "spec": spec,
        }

    d = cell["d"]
    x_star = _draw_x_star(inst, d, seed)
    sigma_b = 0.0 if kind == "custom-deterministic" else inst["sigma_b"]
    ridge = RidgeInstance(
        dimension=d, x_star=x_star, sigma_b=sigma_b,
        mu=inst["mu"], q=inst["q"], R=inst["R"],
    )
    L_declared = ridge.L * cell["L_multiplier"]
    mu_eff = inst["mu"] * power_uc_constant(inst["q"])
    params = derive_params(
        inst["q"], inst["kappa"], L_declared, mu_eff,
        sigma=ridge.declared_sigma, R=ridge.radius_estimate,
    )
    H = PowerNormRegularizer(mu=inst["mu"], q=inst["q"], dim=d)
    if kind == "custom-deterministic":
        oracle = additive_noise_oracle(
            lambda x: 2.0 / 3.0 * (np.asarray(x, dtype=float) - x_star),
            d, kind="gaussian", sigma=0.0, q=inst["q"],
            evaluate_fn=lambda x: float(np.sum((np.asarray(x) - x_star) ** 2)) / 3.0,
        )
    else:
        oracle = ridge_oracle(ridge)
    x_opt, psi_star = exact_optimum(ridge)
    x1 = _make_x1(inst, d)
    psi = lambda x: ridge_psi(ridge, x)  # noqa: E731
    return {
        "oracle": oracle, "params": params, "H": H, "x1": x1,
        "psi": psi, "psi_star": psi_star, "x_opt": x_opt,
        "gap0": psi(x1) - psi_star, "mu_f": ridge.mu_F, "spec": spec,
    }


def _execute_run(cfg: dict, cell: dict, seed: int):
    """One solver run; returns (per-run record, trace rows for the CSV)."""
    run_cfg = cfg["run"]
    bundle = _prepare_cell(cfg, cell, seed)
    spec = bundle["spec"]
    name = spec["name"]
    params, H, oracle = bundle["params"], bundle["H"], bundle["oracle"]
    psi, psi_star, gap0 = bundle["psi"], bundle["psi_star"], bundle["gap0"]
    x_opt = bundle["x_opt"]
    T_max = int(run_cfg["T_max"])
    eps_abs = run_cfg["epsilon"] * gap0
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, 7))))
    gap_fn = lambda x: psi(x) - psi_star  # noqa: E731
    hgrad = H.grad  # local alias

    def bregman_fn(x):
        return float(H.value(x_opt)) - float(H.value(x)) - float(np.dot(hgrad(x), x_opt - x))

    stop_gap = eps_abs if run_cfg["stop_at_target"] else None
    want_cert = bool(run_cfg["certificates"]) and name in ("nacsmd", "acsmd")
    sched_desc = None
    cert_status = "n/a"

    if name == "acsa":
        if bundle["mu_f"] is None:
            raise ConfigError("the accelerated baseline needs a regression instance")
        _, trace = acsa_baseline(
            oracle, H, bundle["mu_f"], params.L, bundle["x1"], T_max,
            rng=rng, gap_fn=gap_fn, stop_gap=stop_gap,
            stage0=cfg["solver"]["acsa_stage0"],
        )
        sched_desc = {"kind": "acsa-stage-doubling", "L": params.L, "mu_f": bundle["mu_f"],
                      "stage0": cfg["solver"]["acsa_stage0"]}
        bregman_series = np.full(trace.T, np.nan)
    else:
        sched = _resolve_schedule(spec, params, name, cfg["solver"], cfg["instance"]["mu"])
        sched_report = validate_schedule(sched, params, T_max)
        sched_desc = dict(sched.describe(), valid=sched_report.ok,
                          mode=cfg["solver"]["schedule_mode"])
        want_cert = want_cert and sched_report.ok  # the run inequality presumes validity
        opts = TraceOptions(
            record_iterates=want_cert or run_cfg["thin"] > 1,
            record_noise=want_cert,
            thin=1 if want_cert else int(run_cfg["thin"]),
            gap_fn=gap_fn,
            bregman_fn=bregman_fn,
        )
        solver = nacsmd if name == "nacsmd" else acsmd
        restart_cfg = run_cfg["restart"]
        if restart_cfg is None:
            _, _, trace = solver(
                oracle, H, sched, bundle["x1"], T_max, rng=rng,
                params=params if sched_report.ok else None,
                trace_opts=opts, stop_gap=stop_gap,
            )
        else:
            if restart_cfg == "auto":
                V0 = bregman_fn(bundle["x1"])
                plan = plan_from_params(params, name, max(V0, 1e-12), eps_abs, sched=sched)
            else:
                from .solvers import RestartPlan
                plan = RestartPlan(**restart_cfg)
            sched_desc["restart_plan"] = {"n": plan.n, "K": plan.K, "T": plan.T}
            _, rtrace = restart(
                name, oracle, H, sched, bundle["x1"], plan, rng=rng,
                params=params if sched_report.ok else None, trace_opts=opts,
            )
            trace = _flatten_restart(rtrace)
            want_cert = False  # certificates are per-stage statements
        if want_cert:
            report = certificate_check(trace, params, H, x_opt, psi, psi_star)
            cert_status = "ok" if report.ok else f"violated@t={report.first_violation}"
        bregman_series = trace.bregman_to_opt

    rel = trace.psi_gap / gap0
    hits = np.nonzero(rel <= run_cfg["epsilon"] * (1.0 + 1e-12))[0]
    iterations = int(hits[0]) + 1 if hits.size else None
    record = {
        "cell": cell["label"],
        "seed": seed,
        "iterations_to_target": iterations,
        "final_relative_gap": float(rel[-1]),
        "gap0": float(gap0),
        "psi_star": float(psi_star),
        "steps_run": int(trace.T),
        "certificate": cert_status,
        "schedule": sched_desc,
    }
    rows = np.column_stack([
        np.arange(1, trace.T + 1, dtype=float), trace.psi_gap,
        bregman_series if bregman_series is not None else np.full(trace.T, np.nan),
        trace.alphas, trace.gammas,
    ])
    return record, rows


def _flatten_restart(rtrace):
    """Concatenate stage traces into one flat gap/step series."""
    from .solvers import RunTrace
    traces = rtrace.stage_traces + [rtrace.final_trace]
    return RunTrace(
        algorithm=traces[-1].algorithm,
        T=sum(tr.T for tr in traces),
        alphas=np.concatenate([tr.alphas for tr in traces]),
        gammas=np.concatenate([tr.gammas for tr in traces]),
        A=np.concatenate([tr.A for tr in traces]),
        psi_gap=np.concatenate([tr.psi_gap for tr in traces]),
        bregman_to_opt=(
            np.concatenate([tr.bregman_to_opt for tr in traces])
            if traces[-1].bregman_to_opt is not None else None
        ),
    )


def _job(args):
    cfg, cell, seed = args
    try:
        record, rows = _execute_run(cfg, cell, seed)
    except NumericalError as exc:
        # a diverged run is recorded against its cell; the grid keeps going
        record = {
            "cell": cell["label"], "seed": seed, "error": str(exc),
            "iterations_to_target": None, "certificate": "n/a", "schedule": None,
        }
        rows = None
    return record, rows


def run_experiment(cfg: dict, out_dir=None, workers: int = 1) -> dict:
    """Run the full grid and write traces, summary.json and manifest.json."""
    cfg = resolve_config(cfg)
    cells = build_cells(cfg)
    seeds = cfg["run"]["seeds"]
    out = Path(out_dir if out_dir is not None else cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    write_traces = bool(cfg["output"]["traces"])

    jobs = [(cfg, cell, seed) for cell in cells for seed in seeds]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_job, jobs, chunksize=1))
    else:
        results = [_job(j) for j in jobs]

    files = {}
    trace_index = {}
    for (cfg_, cell, seed), (record, rows) in zip(jobs, results):
        key = (cell["label"], seed)
        trace_index[key] = (record, rows)
        if write_traces and rows is not None:
            name = f"trace-{cell['label']}-{seed}.csv"
            _write_trace_csv(out / name, rows)
            files[name] = None

    T_max = cfg["run"]["T_max"]
    cell_summaries = []
    for cell in cells:
        records = [trace_index[(cell["label"], s)][0] for s in seeds]
        its = [r["iterations_to_target"] for r in records]
        censored = [float(i) if i is not None else float(T_max + CENSOR_MARGIN) for i in its]
        violations = sum(1 for r in records if r["certificate"].startswith("violated"))
        checked = sum(1 for r in records if r["certificate"] != "n/a")
        errors = {str(r["seed"]): r["error"] for r in records if "error" in r}
        schedule = next((r["schedule"] for r in records if r["schedule"] is not None), None)
        cell_summaries.append({
            "cell": cell["label"],
            "d": cell["d"],
            "L_multiplier": cell["L_multiplier"],
            "algorithm": cell["algorithm"]["label"],
            "seeds": seeds,
            "iterations": its,
            "median_iterations": float(np.median(censored)),
            "q1_iterations": float(np.percentile(censored, 25)),
            "q3_iterations": float(np.percentile(censored, 75)),
            "hit_rate": float(np.mean([i is not None for i in its])),
            "schedule": schedule,
            "certificates": {"checked": checked, "violations": violations},
            "failed_runs": errors,
        })

    summary = {
        "version": __version__,
        "config": cfg,
        "cells": cell_summaries,
    }
    summary_path = out / "summary.json"
    summary_path.write_text(_stable_json(summary))
    files["summary.json"] = None

    if cfg["output"]["plotdata"]:
        plot_rows = []
        for cell in cells:
            for seed in seeds:
                record, rows = trace_index[(cell["label"], seed)]
                if rows is None:
                    continue
                rel = rows[:, 1] / record["gap0"]
                for t, r in zip(rows[:, 0], rel):
                    plot_rows.append((cell["label"], cell["algorithm"]["label"],
                                      seed, int(t), math.log10(max(r, 1e-300))))
        (out / "plotdata.csv").write_text(emit_plotdata(plot_rows))
        files["plotdata.csv"] = None

    for name in list(files):
        files[name] = _sha256(out / name)
    manifest = {"version": __version__, "config": cfg, "files": files}
    tmp = out / "manifest.json.tmp"
    tmp.write_text(_stable_json(manifest))
    tmp.replace(out / "manifest.json")  # the manifest appears atomically, last
    return summary


def _write_trace_csv(path: Path, rows: np.ndarray):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "psi_gap", "bregman_to_opt", "alpha_t", "gamma_t"])
        for row in rows:
            w.writerow([int(row[0])] + [f"{v:.10e}" for v in row[1:]])


def _stable_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def emit_table(summary: dict):
    """Median-iteration matrix (instance axis x algorithm): aligned text + CSV.

    The instance axis is whichever of d / L_multiplier varies; cells must
    form a full factorial grid over one axis or the emitter refuses.
    """
    cells = summary["cells"]
    ds = sorted({c["d"] for c in cells})
    mults = sorted({c["L_multiplier"] for c in cells})
    algs = []
    for c in cells:
        if c["algorithm"] not in algs:
            algs.append(c["algorithm"])
    if len(ds) > 1 and len(mults) > 1:
        raise ConfigError("emit_table: cells vary along both d and L_multiplier")
    axis, values = ("d", ds) if len(mults) == 1 else ("L_multiplier", mults)
    lookup = {(c[axis], c["algorithm"]): c for c in cells}
    if len(lookup) != len(values) * len(algs):
        raise ConfigError("emit_table: cells do not form a full grid")

    T_max = summary["config"]["run"]["T_max"]

    def fmt(cell):
        med = cell["median_iterations"]
        return f">{T_max}" if med > T_max else f"{med:.0f}"

    header = ["iterations_required"] + algs
    rows = []
    for v in values:
        label = f"{axis}={v:g}"
        rows.append([label] + [fmt(lookup[(v, a)]) for a in algs])

    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    text_lines = [
        "  ".join(str(x).rjust(w) for x, w in zip(r, widths)) for r in [header] + rows
    ]
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return "\n".join(text_lines) + "\n", buf.getvalue()


_PLOT_HEADER = ["cell", "algorithm", "seed", "t", "log10_rel_gap"]


def emit_plotdata(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(_PLOT_HEADER)
    for cell, alg, seed, t, val in rows:
        w.writerow([cell, alg, int(seed), int(t), f"{val:.17g}"])
    return buf.getvalue()


def parse_plotdata(text: str):
    rows = []
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != _PLOT_HEADER:
        raise ConfigError(f"unexpected plotdata header {header}")
    for cell, alg, seed, t, val in reader:
        rows.append((cell, alg, int(seed), int(t), float(val)))
    return rows


def _load_config(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg.setdefault("run", {})["seeds"] = {"count": args.seeds_count, "base": args.seed}
    summary = run_experiment(cfg, out_dir=args.out, workers=args.workers)
    text, _ = emit_table(summary)
    sys.stdout.write(text)
    return 0


def _cmd_validate(args) -> int:
    cfg = resolve_config(_load_config(args.config))
    for cell in build_cells(cfg):
        if cell["algorithm"]["name"] in ("nacsmd", "acsmd") and cfg["instance"]["kind"] != "bernoulli":
            bundle = _prepare_cell(cfg, cell, cfg["run"]["seeds"][0])
            sched = _resolve_schedule(
                cell["algorithm"], bundle["params"], cell["algorithm"]["name"],
                cfg["solver"], cfg["instance"]["mu"],
            )
            report = validate_schedule(sched, bundle["params"], cfg["run"]["T_max"])
            if not report.ok and cfg["solver"]["schedule_mode"] == "validated":
                raise ConfigError(
                    f"cell {cell['label']}: schedule invalid at t={report.first_violation}"
                )
    sys.stdout.write(_stable_json(cfg))
    return 0


def _cmd_table(args) -> int:
    path = Path(args.summary)
    if path.is_dir():
        path = path / "summary.json"
    summary = json.loads(path.read_text())
    text, csv_text = emit_table(summary)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "table.txt").write_text(text)
        (out / "table.csv").write_text(csv_text)
    return 0


def _cmd_lowerbound(args) -> int:
    cfg = _load_config(args.config)
    defaults = {"solver": "acsmd", "mu": 1.0, "q": 2.0, "sigma": 1.0,
                "epsilon": 0.05, "gamma": 0.5, "trials": 400, "seed": 0}
    unknown = set(cfg) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown lowerbound keys: {sorted(unknown)}")
    defaults.update(cfg)
    if args.seed is not None:
        defaults["seed"] = args.seed
    report = lower_bound_experiment(
        defaults["solver"], defaults["mu"], defaults["q"], defaults["sigma"],
        defaults["epsilon"], defaults["gamma"], defaults["trials"], seed=defaults["seed"],
    )
    payload = {k: getattr(report, k) for k in (
        "empirical_failure_rate", "T_bound", "theory_rate", "threshold", "ok",
        "allzero_rate", "allzero_expected", "activation", "gradient_scale", "trials",
    )}
    sys.stdout.write(_stable_json(payload))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "lowerbound.json").write_text(_stable_json(payload))
    return 0


def _cmd_concentration(args) -> int:
    cfg = _load_config(args.config)
    defaults = {"noise": "bounded_sphere", "weight_degree": 0, "T": 100,
                "trials": 100000, "sigma": 1.0, "R": 1.0, "dim": 4, "q": 2.0, "seed": 0}
    unknown = set(cfg) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown concentration keys: {sorted(unknown)}")
    defaults.update(cfg)
    if args.seed is not None:
        defaults["seed"] = args.seed
    t = np.arange(1, defaults["T"] + 1, dtype=float)
    weights = t ** defaults["weight_degree"]
    report = concentration_check(
        defaults["noise"], weights, defaults["trials"], seed=defaults["seed"],
        sigma=defaults["sigma"], R=defaults["R"], dim=defaults["dim"], q=defaults["q"],
    )
    payload = {
        "tau": report.tau.tolist(),
        "empirical": report.empirical.tolist(),
        "bound": report.bound.tolist(),
        "ok": report.ok,
        "mgf_estimate": report.mgf_estimate,
        "sigma_R": report.sigma_R,
    }
    sys.stdout.write(_stable_json(payload))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "concentration.json").write_text(_stable_json(payload))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ccmin",
        description="Benchmark harness for composite stochastic mirror-descent solvers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment grid from a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--seeds-count", type=int, default=20)
    p_run.add_argument("--workers", type=int, default=1)
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="resolve and validate a config without running")
    p_val.add_argument("config")
    p_val.set_defaults(func=_cmd_validate)

    p_tab = sub.add_parser("table", help="format the median-iteration table from a summary")
    p_tab.add_argument("summary")
    p_tab.add_argument("--out", default=None)
    p_tab.set_defaults(func=_cmd_table)

    p_lb = sub.add_parser("lowerbound", help="failure-probability experiment vs the hidden-sign oracle")
    p_lb.add_argument("config")
    p_lb.add_argument("--seed", type=int, default=None)
    p_lb.add_argument("--out", default=None)
    p_lb.set_defaults(func=_cmd_lowerbound)

    p_cc = sub.add_parser("concentration", help="Monte Carlo martingale tail check")
    p_cc.add_argument("config")
    p_cc.add_argument("--seed", type=int, default=None)
    p_cc.add_argument("--out", default=None)
    p_cc.set_defaults(func=_cmd_concentration)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
