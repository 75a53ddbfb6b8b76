"""Experiment runner: ``hnlslab <command> [--config PATH] [--seed U64] [--out DIR] ...``.

Settings resolve as flag > environment (``HNLSLAB_SEED``, ``HNLSLAB_OUT``,
``HNLSLAB_THREADS``, ``HNLSLAB_BUDGET_MIN``, ``HNLSLAB_CONFIG``) > config
file > defaults.  Exit codes: 0 all gates pass, 1 a gate failed (the
manifest is still written), 2 invalid configuration, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, acceptance, oracles, propagator, solver, strichartz
from .lattice import (DomainSpec, PhysicalField, SpectralField, critical_index, field_to_json,
                      forward_transform, sobolev_norm)

log = logging.getLogger("hnlslab")

COMMANDS = ("kernel-scan", "measure-scan", "local-strichartz", "global-strichartz", "improved-l4",
            "schur-scan", "solve", "picard", "scatter", "accept-all")

DEFAULTS = {
    "kernel-scan": {"N_list": [8, 16, 32, 64], "t_min": 1e-4, "t_max": 1.0, "n_t": 60},
    "measure-scan": {"kind": "B_N", "N_max": 64, "samples": 10, "c_width": 1.0},
    "local-strichartz": {"N_list": [4, 8, 16, 32, 64], "p_list": [4, 6, 8],
                         "families": list(strichartz.FAMILIES), "members": 64},
    "global-strichartz": {"N_list": [4, 8, 16], "gamma": 8, "families": list(strichartz.FAMILIES),
                          "members": 4},
    "improved-l4": {"N_list": [4, 8, 16, 32, 64], "families": list(strichartz.FAMILIES), "members": 64},
    "schur-scan": {"N_list": [8, 16, 32, 64, 128], "instances": 10, "a_max": 20.0, "r_max": 5.0},
    "solve": {"k": 1, "sign": 1, "dt": 1e-3, "t_end": 1.0, "amplitude": 0.15, "data": "gaussian",
              "stride": 50, "x_period": 16.0, "n_x": 128, "n_y": 16, "n_max": 2},
    "picard": {"k": 2, "sign": 1, "size": 1e-2, "horizon": 1.0, "iters": 4, "dt": 0.01,
               "x_period": 1024.0, "n_x": 4096, "n_y": 4, "n_max": 1},
    "scatter": {"k": 2, "sign": 1, "size": 1e-2, "t_end": 40.0, "t_min": 20.0, "dt": 0.01,
                "x_period": 1024.0, "n_x": 4096, "n_y": 4, "n_max": 1},
    "accept-all": {"criteria": list(range(1, 13))},
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config


def load_schema() -> dict:
    text = resources.files("hnlslab").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


def validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise ConfigError(f"invalid config at '{path}': {exc.message}") from None


def _parse_param(text: str):
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"--param expects key=value, got {text!r}")
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


def resolve_config(args, env=None) -> dict:
    """Merge defaults, config file, environment and flags (in increasing priority)."""
    env = os.environ if env is None else env
    cfg: dict = {}
    path = args.config or env.get("HNLSLAB_CONFIG")
    if path:
        try:
            cfg = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    if args.command:
        if cfg.get("command") not in (None, args.command):
            raise ConfigError(f"command {args.command!r} conflicts with config command {cfg['command']!r}")
        cfg["command"] = args.command
    if "command" not in cfg:
        raise ConfigError("no command given")
    params = dict(cfg.get("parameters", {}))
    for item in args.param or []:
        k, v = _parse_param(item)
        params[k] = v
    cfg["parameters"] = params
    for key, flag, envname, conv in (("root_seed", args.seed, "HNLSLAB_SEED", int),
                                     ("output_dir", args.out, "HNLSLAB_OUT", str),
                                     ("threads", args.threads, "HNLSLAB_THREADS", int),
                                     ("budget_min", args.budget_min, "HNLSLAB_BUDGET_MIN", float)):
        if flag is not None:
            cfg[key] = flag
        elif envname in env:
            try:
                cfg[key] = conv(env[envname])
            except ValueError:
                raise ConfigError(f"{envname}={env[envname]!r} is not a valid {conv.__name__}") from None
    validate(cfg)
    cfg.setdefault("root_seed", 0)
    cfg.setdefault("output_dir", "runs/" + cfg["command"])
    cfg.setdefault("threads", os.cpu_count() or 1)
    cfg.setdefault("budget_min", 30.0)
    merged = dict(DEFAULTS[cfg["command"]])
    merged.update(params)
    cfg["parameters"] = merged
    for key in ("N_list",):
        for n in merged.get(key, []):
            if n & (n - 1):
                raise ConfigError(f"{key} entries must be powers of two, got {n}")
    return cfg


# ---------------------------------------------------------------------------
# emitters


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12e" % float(v)
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(_canon(v), sort_keys=True)
    return str(v)


def _canon(obj):
    """Plain JSON types with floats fixed to 13 significant digits."""
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float("%.12e" % x)
    if isinstance(obj, complex):
        return [_canon(obj.real), _canon(obj.imag)]
    return obj


def emit_report(results, fmt: str, path, columns=None) -> Path:
    """Write rows (csv) or an object (json) with sorted keys and %.12e floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        text = json.dumps(_canon(results), sort_keys=True, indent=2) + "\n"
    elif fmt == "csv":
        rows = list(results)
        cols = sorted(columns) if columns is not None else sorted({k for r in rows for k in r})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in cols])
        text = buf.getvalue()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


PLOT_TEMPLATE = '''"""Plot {csv}; run with matplotlib installed."""
import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("{csv}")))
groups = {{}}
for r in rows:
    groups.setdefault(r.get("{group}", ""), []).append((float(r["{x}"]), float(r["{y}"])))
for name, pts in sorted(groups.items()):
    pts.sort()
    plt.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=name or None)
plt.xscale("{xscale}")
plt.yscale("{yscale}")
plt.xlabel("{x}")
plt.ylabel("{y}")
if len(groups) > 1:
    plt.legend()
plt.savefig("{stem}.png", dpi=150)
'''


def emit_plot_script(out: Path, csv_name: str, x: str, y: str, group: str = "",
                     xscale: str = "log", yscale: str = "log") -> Path:
    stem = Path(csv_name).stem
    path = out / f"plot_{stem}.py"
    path.write_text(PLOT_TEMPLATE.format(csv=csv_name, x=x, y=y, group=group, stem=stem,
                                         xscale=xscale, yscale=yscale))
    return path


# ---------------------------------------------------------------------------
# commands: each returns (files, gates, summary)


def _pool_map(fn, tasks, threads):
    """Ordered map; results do not depend on the pool size."""
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, tasks))


def _domain(p) -> DomainSpec:
    return DomainSpec(float(p["x_period"]), int(p["n_x"]), int(p["n_y"]), int(p["n_max"]))


def cmd_kernel_scan(p, seed, out, threads):
    ts = np.geomspace(p["t_min"], p["t_max"], p["n_t"])

    def task(N):
        short = np.geomspace(1.0 / N ** 2, 1.0 / N, max(p["n_t"] // 2, 2))
        return propagator.dispersive_bound_scan(N, np.union1d(ts, short))

    scans = _pool_map(task, list(p["N_list"]), threads)
    rows = [r for s in scans for r in s["rows"]]
    fits = {str(s["N"]): {"C1": s["C1"], "C2": s["C2"]} for s in scans}
    stab = propagator.dispersive_stability(scans) if len(scans) > 1 else {"stable": True}
    files = [emit_report(rows, "csv", out / "kernel_scan.csv"),
             emit_report({"constants": fits, "stability": stab}, "json", out / "kernel_fit.json"),
             emit_plot_script(out, "kernel_scan.csv", "t", "abs_K", "N")]
    return files, {"constants_stable": bool(stab["stable"])}, fits


def cmd_measure_scan(p, seed, out, threads):
    rng = oracles.make_rng(seed, 201)
    top = int(math.log2(p["N_max"]))
    c = float(p["c_width"])
    tasks = []
    for i in range(p["samples"]):
        N = int(2 ** rng.integers(0, top + 1))
        tau = float(rng.uniform(-(2 * N) ** 2, (2 * N) ** 2))
        xi = float(rng.uniform(-2 * N, 2 * N))
        n = int(rng.integers(-4 * N, 4 * N + 1))
        spec = (int(rng.integers(0, 21)), (float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1))),
                float(rng.uniform(-5, 5)))
        tasks.append((i, N, tau, xi, n, spec))
    kind = p["kind"]

    def task(t):
        i, N, tau, xi, n, spec = t
        s = seed + i
        if kind == "B_N":
            return oracles.mes_B_N(tau, n, c, N, seed=s)
        if kind == "A_N_hyperbolic":
            return oracles.mes_A_N_hyperbolic(tau, xi, n, c, N, seed=s)
        if kind == "A_N_parabolic":
            return oracles.mes_A_N_parabolic(tau, xi, n, c, N, seed=s)
        return oracles.mes_level_shell(oracles.ShellSpec(spec[0], spec[1], spec[2], N), seed=s)

    reports = _pool_map(task, tasks, threads)
    rows = [dict(r.row(), precise=r.precise) for r in reports]
    cols = ["kind", "exact", "mc_estimate", "mc_stderr", "n_samples", "z", "consistent", "precise", "N"]
    files = [emit_report(rows, "csv", out / "measure_scan.csv", columns=sorted({k for r in rows for k in r} | set(cols)))]
    gates = {"mc_within_4_sigma": all(r.consistent for r in reports),
             "stderr_below_1pct": all(r.precise for r in reports)}
    return files, gates, {"rows": len(rows)}


def cmd_local_strichartz(p, seed, out, threads):
    tasks = [(fam, N, pp) for fam in p["families"] for N in p["N_list"] for pp in p["p_list"]]

    def task(t):
        fam, N, pp = t
        res = strichartz.local_constant(N, pp, strichartz.EnsembleSpec(fam, p["members"], seed))
        return {"family": fam, "N": N, "p": pp, "constant": res.constant, "argmax": res.argmax,
                "skipped": res.skipped}

    rows = _pool_map(task, tasks, threads)
    fits, gates = {}, {}
    bands = {4: (-math.inf, 0.10), 6: (1 / 3 - 0.1, 1 / 3 + 0.1), 8: (0.4, 0.6)}
    for pp in p["p_list"]:
        sup = {}
        for r in rows:
            if r["p"] == pp:
                sup[r["N"]] = max(sup.get(r["N"], 0.0), r["constant"])
        if len(sup) >= 3:
            f = strichartz.fit_scaling(sup.items())
            fits[f"p={pp}"] = f.to_dict()
            lo, hi = bands[pp]
            gates[f"exponent_p{pp}"] = bool(lo <= f.exponent <= hi)
    files = [emit_report(rows, "csv", out / "local_constants.csv"),
             emit_report(fits, "json", out / "local_fit.json"),
             emit_plot_script(out, "local_constants.csv", "N", "constant", "family")]
    return files, gates, fits


def cmd_global_strichartz(p, seed, out, threads):
    tasks = []
    for N in p["N_list"]:
        for fam in p["families"]:
            count = 1 if fam == "x_flat" else p["members"]
            for m in strichartz.EnsembleSpec(fam, count, seed).members(N):
                tasks.append((N, fam, m))
    G = p["gamma"]

    def task(t):
        N, fam, m = t
        a = strichartz.global_mixed_norm(m, math.inf, 4, G, N=N)
        b, terms, flags = strichartz.global_mixed_norm(m, 4, 8, G, N=N, return_terms=True)
        windows, script_j = strichartz.gaussian_window_profile(m, N, G)
        row = {"N": N, "family": fam, "member": m.member_id, "norm_inf_4": a, "norm_4_8": b,
               "J_eighth_root": script_j ** 0.125, "rel_change": float(flags.get("rel_change", 0.0))}
        wins = [{"N": N, "family": fam, "member": m.member_id, "gamma": w.gamma, "J": w.value} for w in windows]
        return row, wins

    res = _pool_map(task, tasks, threads)
    rows = [r for r, _ in res]
    wins = [w for _, ws in res for w in ws]
    fits, gates = {}, {}
    for key, band in (("norm_inf_4", (0.85, 1.15)), ("norm_4_8", (-math.inf, 0.15))):
        sup = {}
        for r in rows:
            sup[r["N"]] = max(sup.get(r["N"], 0.0), r[key])
        if len(sup) >= 3:
            f = strichartz.fit_scaling(sup.items())
            fits[key] = f.to_dict()
            gates[f"exponent_{key}"] = bool(band[0] <= f.exponent <= band[1])
    ratios = [r["J_eighth_root"] / r["norm_4_8"] for r in rows]
    gates["J_cross_check"] = bool(ratios and 0.25 <= min(ratios) and max(ratios) <= 4.0)
    fits["J_ratio_range"] = [min(ratios), max(ratios)] if ratios else []
    files = [emit_report(rows, "csv", out / "global_norms.csv"),
             emit_report(wins, "csv", out / "gaussian_windows.csv"),
             emit_report(fits, "json", out / "global_fit.json"),
             emit_plot_script(out, "global_norms.csv", "N", "norm_4_8", "family")]
    return files, gates, fits


def cmd_improved_l4(p, seed, out, threads):
    tasks = [(N, fam) for N in p["N_list"] for fam in p["families"]]

    def task(t):
        N, fam = t
        return [{"N": N, "family": fam, "member": m.member_id, "ratio": strichartz.improved_bound_ratio(m, N)}
                for m in strichartz.EnsembleSpec(fam, p["members"], seed).members(N)]

    rows = [r for rs in _pool_map(task, tasks, threads) for r in rs]
    sup = {}
    for r in rows:
        sup[r["N"]] = max(sup.get(r["N"], 0.0), r["ratio"])
    summary = {"constant": max(sup.values()), "sup": sup}
    gates = {}
    if len(sup) >= 3:
        f = strichartz.fit_scaling(sup.items())
        summary["fit"] = f.to_dict()
        gates["ratio_bounded"] = bool(f.exponent <= 0.10)
    files = [emit_report(rows, "csv", out / "improved_l4.csv"),
             emit_report(summary, "json", out / "improved_l4.json"),
             emit_plot_script(out, "improved_l4.csv", "N", "ratio", "family", yscale="linear")]
    return files, gates, summary


def cmd_schur_scan(p, seed, out, threads):
    rng = oracles.make_rng(seed, 207)
    insts = []
    for i in range(p["instances"]):
        a = float(rng.uniform(0.0, p["a_max"]))
        r, rp = (float(v) for v in rng.uniform(-p["r_max"], p["r_max"], 2))
        c, cp = (float(v) for v in rng.choice([0.0, 0.5], 2))
        insts.append((i, a, r, rp, c, cp))
    tasks = [(inst, N) for inst in insts for N in p["N_list"]]

    def task(t):
        (i, a, r, rp, c, cp), N = t
        v = oracles.schur_shell_sum(oracles.SchurInstance(a, r, rp, c, cp, N))
        return {"instance": i, "a": a, "r": r, "r_prime": rp, "c": c, "c_prime": cp, "N": N,
                "sum": v, "ratio": v / math.log(2 * N) ** 2}

    rows = _pool_map(task, tasks, threads)
    spreads = {}
    for i, *_ in insts:
        vals = [r["ratio"] for r in rows if r["instance"] == i]
        spreads[i] = max(vals) / min(vals) if min(vals) > 0 else math.inf
    worst = max(spreads.values()) if spreads else 1.0
    files = [emit_report(rows, "csv", out / "schur_scan.csv"),
             emit_report({"spread": spreads, "max_spread": worst}, "json", out / "schur_fit.json"),
             emit_plot_script(out, "schur_scan.csv", "N", "ratio", "instance")]
    return files, {"spread_below_3": bool(worst < 3.0)}, {"max_spread": worst}


def _initial_data(p, dom):
    if p.get("data") == "zero":
        return SpectralField(dom, np.zeros((dom.n_x, dom.n_y), dtype=complex))
    x = dom.x_grid()[:, None]
    y = dom.y_grid()[None, :]
    u = p["amplitude"] * np.exp(-x ** 2 / 2) * (1 + 0.5 * np.cos(2 * np.pi * y)) * np.exp(0.3j * x)
    return forward_transform(PhysicalField(dom, u))


def cmd_solve(p, seed, out, threads):
    dom = _domain(p)
    cfg = solver.SolveConfig(p["k"], p["sign"], p["dt"], p["t_end"], dom)
    tr = solver.integrate(_initial_data(p, dom), cfg, stride=p["stride"])
    rows = [{"t": t, "mass": m, "hamiltonian": h} for t, m, h in zip(tr.times, tr.mass, tr.hamiltonian)]
    dr = tr.drifts()
    files = [emit_report(rows, "csv", out / "trajectory.csv"),
             emit_report(dict(dr, config=cfg.to_dict()), "json", out / "solve_summary.json"),
             out / "final_state.json",
             emit_plot_script(out, "trajectory.csv", "t", "hamiltonian", xscale="linear", yscale="linear")]
    (out / "final_state.json").write_text(field_to_json(tr.states[-1]))
    gates = {"mass_drift": dr["mass_drift"] <= 1e-8, "hamiltonian_drift": dr["hamiltonian_drift"] <= 1e-6}
    return files, gates, dr


def _small_data(p, dom):
    return acceptance._small_data(p["k"], dom, p["size"])


def cmd_picard(p, seed, out, threads):
    dom = _domain(p)
    cfg = solver.SolveConfig(p["k"], p["sign"], p["dt"], p["horizon"], dom)
    u0 = _small_data(p, dom)
    size = sobolev_norm(u0, critical_index(p["k"]))
    contraction, pt, ratios, lips = acceptance.picard_contraction(u0, cfg, p["horizon"], p["iters"])
    rows = [{"iteration": j + 1, "residual": r} for j, r in enumerate(pt.residuals)]
    summary = {"data_norm": size, "contraction": contraction, "diverged": pt.diverged,
               "residual_ratios": ratios, "lipschitz": lips}
    files = [emit_report(rows, "csv", out / "picard.csv"),
             emit_report(summary, "json", out / "picard_summary.json"),
             emit_plot_script(out, "picard.csv", "iteration", "residual", xscale="linear")]
    return files, {"contraction": bool(contraction <= 0.5 and not pt.diverged)}, summary


def cmd_scatter(p, seed, out, threads):
    dom = _domain(p)
    cfg = solver.SolveConfig(p["k"], p["sign"], p["dt"], p["t_end"], dom)
    u0 = _small_data(p, dom)
    s = critical_index(p["k"])
    size = sobolev_norm(u0, s)
    stride = max(1, int(round(1.0 / p["dt"])))
    tr = solver.integrate(u0, cfg, stride=stride)
    times = [t for t in tr.times if t >= p["t_min"] - 1e-9]
    sc = solver.scattering_profile(tr, s, times=times)
    rows = [{"t1": a, "t2": b, "diff": float(sc.pullback_norm_diffs[i, j])}
            for i, a in enumerate(sc.times) for j, b in enumerate(sc.times) if j > i]
    cauchy = sc.sup_diff(p["t_min"], p["t_end"]) / size if size else 0.0
    summary = {"data_norm": size, "cauchy_over_norm": cauchy, **tr.drifts()}
    files = [emit_report(rows, "csv", out / "scatter.csv"),
             emit_report(summary, "json", out / "scatter_summary.json")]
    return files, {"cauchy": bool(cauchy <= 1e-3)}, summary


def cmd_accept_all(p, seed, out, threads, budget_min=30.0):
    summary = acceptance.accept_all(budget_min, seed, p["criteria"])
    rows = [{"number": r.number, "name": r.name, "passed": r.passed, "runtime": r.runtime,
             "reduced": r.reduced, "skipped": r.skipped} for r in summary["results"]]
    for r in summary["results"]:
        print(r.line())
    files = [emit_report(rows, "csv", out / "acceptance.csv"),
             emit_report({"partial": summary["partial"], "reduced": summary["reduced"],
                          "budget_min": budget_min, "details": {str(r.number): r.details for r in summary["results"]}},
                         "json", out / "acceptance.json")]
    gates = {f"criterion_{r.number}": bool(r.passed) for r in summary["results"]}
    return files, gates, {"partial": summary["partial"]}


DISPATCH = {"kernel-scan": cmd_kernel_scan, "measure-scan": cmd_measure_scan,
            "local-strichartz": cmd_local_strichartz, "global-strichartz": cmd_global_strichartz,
            "improved-l4": cmd_improved_l4, "schur-scan": cmd_schur_scan, "solve": cmd_solve,
            "picard": cmd_picard, "scatter": cmd_scatter, "accept-all": cmd_accept_all}


# ---------------------------------------------------------------------------


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(cfg: dict) -> dict:
    """Execute a resolved config and write the manifest last.  Returns the manifest."""
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    stale = out / "manifest.json"
    if stale.exists():
        stale.unlink()
    t0 = time.perf_counter()
    fn = DISPATCH[cfg["command"]]
    kwargs = {"budget_min": cfg["budget_min"]} if cfg["command"] == "accept-all" else {}
    files, gates, summary = fn(cfg["parameters"], int(cfg["root_seed"]), out, int(cfg["threads"]), **kwargs)
    manifest = {
        "config": cfg,
        "version": __version__,
        "wall_time_s": time.perf_counter() - t0,
        "files": {Path(f).name: _sha256(Path(f)) for f in sorted(files, key=lambda f: Path(f).name)},
        "gates": {k: bool(v) for k, v in gates.items()},
        "passed": all(bool(v) for v in gates.values()),
        "summary": summary,
    }
    tmp = out / "manifest.json.tmp"
    tmp.write_text(json.dumps(_canon(manifest), sort_keys=True, indent=2) + "\n")
    os.replace(tmp, out / "manifest.json")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hnlslab", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--seed", type=int, help="64-bit root seed")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--threads", type=int, help="task pool size (default: cpu count)")
    ap.add_argument("--budget-min", type=float, help="time budget for accept-all, minutes")
    ap.add_argument("--param", action="append", metavar="KEY=VALUE",
                    help="override a command parameter (value parsed as JSON when possible)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"hnlslab: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"hnlslab: cannot read config: {exc}", file=sys.stderr)
        return 3
    try:
        manifest = run(cfg)
    except OSError as exc:
        print(f"hnlslab: I/O error: {exc}", file=sys.stderr)
        return 3
    for name, ok in sorted(manifest["gates"].items()):
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return 0 if manifest["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
