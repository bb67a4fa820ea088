"""Command-line entry point: ``stepadapt <subcommand> --config FILE``.

Exit codes: 0 success, 1 parse/validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, noise
from .config import ExperimentConfig, parse_config
from .engine import run, run_ensemble
from .errors import ParseError, ValidationError
from .rng import child_seed, make_rng

SUBCOMMANDS = ("run", "ensemble", "phase", "kcurve", "precision", "check")

COLUMNS = {
    "run": ["t", "x", "y", "gamma", "ln_gamma"],
    "ensemble": ["seed", "status", "x_star", "t_stop", "rate_slope", "limit_error"],
    "phase": ["u", "d", "ud", "kappa", "class", "conv_fraction", "median_limit_err", "median_slope"],
    "kcurve": ["z", "k_diag", "k_plus", "k_minus", "k_mc", "mc_stderr"],
    "precision": ["d", "lambda", "boundary_abs_phi", "median_err", "median_steps"],
}


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def _metadata(command: str, cfg: ExperimentConfig, extra: dict | None = None) -> dict:
    meta = {
        "tool": f"stepadapt {__version__}",
        "command": command,
        "config_sha256": cfg.sha256(),
        "seed": cfg.data["run"]["seed"],
        "child_seeds": "mix64(seed ^ 0x9E3779B97F4A7C15*(index+1))",
        "force": cfg.force,
        "config": cfg.canonical_json(),
    }
    meta.update(extra or {})
    return meta


def write_table(path: Path, fmt: str, meta: dict, columns: list[str], rows: list[list]) -> Path:
    path = path.with_suffix("." + fmt)
    if fmt == "json":
        doc = {"metadata": meta, "columns": columns, "rows": [[_jsonable(v) for v in r] for r in rows]}
        text = json.dumps(doc, indent=1) + "\n"
    else:
        lines = [f"# {k}: {_fmt(v)}" for k, v in meta.items()]
        lines.append(",".join(columns))
        lines.extend(",".join(_fmt(v) for v in r) for r in rows)
        text = "\n".join(lines) + "\n"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


# -- subcommands -------------------------------------------------------------


def cmd_run(cfg, out, fmt, threads):
    traj = run(cfg.sim_config())
    rows = [[int(t), x, y, g, math.log(g) if g > 0 else -math.inf]
            for t, x, y, g in zip(traj.ts, traj.xs, traj.ys, traj.gammas)]
    st = traj.status
    path = write_table(out / "trajectory", fmt, _metadata("run", cfg, {"status": st.label}), COLUMNS["run"], rows)
    return f"run: status={st.label} x_star={_fmt(st.x_star) if st.x_star is not None else 'nan'} t_final={traj.t_final} -> {path}"


def cmd_ensemble(cfg, out, fmt, threads):
    ens = run_ensemble(cfg.sim_config(), cfg.data["run"]["n_seeds"], threads=threads)
    rows = [[s.seed, s.status, s.x_star, s.t_stop, s.rate_slope, s.limit_error] for s in ens.seeds]
    agg = ens.aggregate()
    extra = {"aggregate": json.dumps({k: _jsonable(v) for k, v in agg.items()}, sort_keys=True)}
    if len(cfg.problem.zeros) > 1:
        extra["zero_histogram"] = json.dumps({repr(k): v for k, v in analysis.zero_histogram(ens).items()})
    path = write_table(out / "ensemble", fmt, _metadata("ensemble", cfg, extra), COLUMNS["ensemble"], rows)
    return (f"ensemble: n={ens.n_seeds} conv_fraction={_fmt(agg['conv_fraction'])} "
            f"median_limit_err={_fmt(agg['median_limit_err'])} -> {path}")


def cmd_phase(cfg, out, fmt, threads):
    cells = analysis.phase_sweep(cfg.data["sweep"]["u_grid"], cfg.data["sweep"]["d_grid"], cfg.sim_config(),
                                 cfg.data["run"]["n_seeds"], threads=threads)
    rows = [[c.u, c.d, c.ud, c.kappa, c.theoretical_class, c.empirical_conv_fraction, c.median_limit_error,
             c.median_rate_slope] for c in cells]
    path = write_table(out / "phase", fmt, _metadata("phase", cfg), COLUMNS["phase"], rows)
    return f"phase: cells={len(cells)} -> {path}"


def cmd_kcurve(cfg, out, fmt, threads):
    kc = cfg.data["kcurve"]
    model = cfg.noise
    s = model.sigma_scale
    lo = -5.0 * s if kc["z_min"] is None else kc["z_min"]
    hi = 5.0 * s if kc["z_max"] is None else kc["z_max"]
    n_mc = kc["mc_samples"]
    seed = cfg.data["run"]["seed"]
    rows = []
    for i, z in enumerate(np.linspace(lo, hi, kc["n_points"])):
        z = float(z)
        p = noise.k_mc_oracle(model, z, z, n_mc, make_rng(child_seed(seed, i)))
        rows.append([z, noise.k_diag(model, z), noise.k_plus(model, z).value, noise.k_minus(model, z).value,
                     p, math.sqrt(p * (1.0 - p) / n_mc)])
    path = write_table(out / "kcurve", fmt, _metadata("kcurve", cfg), COLUMNS["kcurve"], rows)
    return f"kcurve: points={len(rows)} -> {path}"


def cmd_precision(cfg, out, fmt, threads):
    u = cfg.data["rule"]["u"]
    rows_ = analysis.precision_vs_rate(u, cfg.data["sweep"]["d_list"], cfg.sim_config(), cfg.data["run"]["n_seeds"],
                                       threads=threads)
    rows = [[r.d, r.lambda_, r.boundary_abs_phi, r.median_err, r.median_steps] for r in rows_]
    path = write_table(out / "precision", fmt, _metadata("precision", cfg, {"u": u}), COLUMNS["precision"], rows)
    return f"precision: rows={len(rows)} -> {path}"


HANDLERS = {"run": cmd_run, "ensemble": cmd_ensemble, "phase": cmd_phase, "kcurve": cmd_kcurve,
            "precision": cmd_precision}


def _threads(flag: int | None) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("STEPADAPT_THREADS")
    return max(1, int(env)) if env else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stepadapt", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"stepadapt {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=False, help="YAML experiment config (defaults if omitted)")
        sp.add_argument("--out", help="output directory (default: output.path or .)")
        sp.add_argument("--seeds", type=int, help="override run.n_seeds")
        sp.add_argument("--force", action="store_true", help="run despite a failed A5/A6 check")
        sp.add_argument("--threads", type=int, help="worker threads (wall time only); env STEPADAPT_THREADS")
    return p


def dispatch(command: str, text: str, out: str | None = None, seeds: int | None = None, force: bool = False,
             threads: int | None = None) -> tuple[int, str]:
    """Run one subcommand on config ``text``; returns (exit code, stdout line)."""
    overrides = {}
    if seeds is not None:
        overrides["run.n_seeds"] = seeds
    if force:
        overrides["force"] = True
    try:
        cfg = parse_config(text, gate=command != "check", overrides=overrides)
    except (ParseError, ValidationError) as exc:
        return 1, f"error: {exc}"
    out_dir = Path(out or cfg.data["output"]["path"] or ".")
    fmt = cfg.data["output"]["format"]
    try:
        if command == "check":
            report = cfg.sim_config().assumptions()
            doc = report.to_dict()
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / "check.json").write_text(json.dumps({"metadata": _metadata("check", cfg), **doc}, indent=1) + "\n")
            code = 1 if report.gate_failures else 0
            return code, json.dumps(doc, indent=2)
        return 0, HANDLERS[command](cfg, out_dir, fmt, _threads(threads))
    except Exception as exc:  # any runtime failure maps to exit code 2
        return 2, f"error: {type(exc).__name__}: {exc}"


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text() if args.config else ""
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    code, line = dispatch(args.command, text, args.out, args.seeds, args.force, args.threads)
    print(line, file=sys.stderr if code == 1 else sys.stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
