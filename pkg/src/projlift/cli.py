"""Command-line front end: seeded, reproducible experiment runs that write
JSON reports, CSV data, gnuplot scripts and rendered PNG figures.

The same (config, seed) pair produces byte-identical numeric outputs at any
worker-thread count: repetitions derive their generators from (seed, index)
and are reduced in index order, and all numeric text uses round-trip float
formatting.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__, parallel, zoo  # noqa: F401  (zoo registers builders)
from .bundle import BundleState
from .ensembles import (
    BlockSystem,
    EnsembleError,
    MatrixEnsemble,
    ensemble_from_json,
    load_ensemble,
)
from .fkh import fkh_estimate
from .homogeneous import (
    DEFAULT_RADIUS_GRID,
    SemidirectEnsemble,
    build_sl2c_semidirect,
    grassmannian_experiment,
)
from .linalg import LinAlgError, Subspace, proj_normalize, rank_span
from .lyapunov import spectrum, subspace_exponents, top_exponent
from .measures import (
    birkhoff_empirical,
    classify_regime,
    quotient_ensemble,
    tightness_diagnostic,
    uniqueness_probe,
)
from .parallel import child_seed, spawn_rng
from .reporting import (
    gnuplot_script,
    render_cloud,
    render_drift_trace,
    render_escape_curve,
    render_levels,
    render_spectrum,
    write_csv,
    write_gnuplot,
    write_json,
)

COMMANDS = ("lyapunov", "fkh", "lift", "drift", "grassmannian", "acceptance")

EXIT_OK = 0
EXIT_ACCEPTANCE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    n: int
    reps: int
    seed: int
    output_dir: str
    ensemble: Optional[MatrixEnsemble] = None
    group_ensemble: Optional[SemidirectEnsemble] = None
    block: Optional[BlockSystem] = None
    extras: dict = field(default_factory=dict)
    resolved: dict = field(default_factory=dict)


GROUP_BUILDERS = {
    "sl2c_semidirect": build_sl2c_semidirect,
}


def _parse_block(doc, ambient: int) -> BlockSystem:
    tol = float(doc.get("block_tol", 1e-9))
    if "span_first" in doc:
        return BlockSystem.coordinate(ambient, int(doc["span_first"]), tol)
    if "basis" in doc:
        w = rank_span(np.asarray(doc["basis"], dtype=float), 1e-12)
        return BlockSystem.from_subspace(w, tol)
    raise ConfigError("block spec needs 'span_first' or 'basis'")


def _parse_group_ensemble(doc) -> SemidirectEnsemble:
    if isinstance(doc, dict) and "builder" in doc:
        spec = doc["builder"]
        name = spec["name"]
        if name not in GROUP_BUILDERS:
            raise ConfigError(f"unknown group-ensemble builder {name!r}")
        return GROUP_BUILDERS[name](**spec.get("params", {}))
    if isinstance(doc, dict):
        return SemidirectEnsemble(
            np.asarray(doc["weights"], dtype=float),
            np.asarray(doc["linears"], dtype=float),
            np.asarray(doc["translations"], dtype=float),
            label=doc.get("label", ""),
        )
    raise ConfigError("group ensemble must be an inline object or builder spec")


def load_config(command: str, config_path: Optional[str], seed_override: Optional[int],
                out_override: Optional[str], threads: int) -> ExperimentConfig:
    doc = {}
    if config_path is not None:
        if not os.path.exists(config_path):
            raise ConfigError(f"config file not found: {config_path}")
        try:
            with open(config_path) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if "command" in doc and doc["command"] != command:
        raise ConfigError(
            f"config command {doc['command']!r} does not match subcommand {command!r}"
        )
    seed = seed_override
    if seed is None and "seed" in doc:
        seed = int(doc["seed"])
    if seed is None and os.environ.get("PROJLIFT_SEED"):
        seed = int(os.environ["PROJLIFT_SEED"])
    if seed is None:
        raise ConfigError("a seed is required (config 'seed', --seed, or PROJLIFT_SEED)")
    n = int(doc.get("n", 10_000))
    reps = int(doc.get("reps", 10))
    if n < 1 or reps < 1:
        raise ConfigError("n and reps must be >= 1")
    output_dir = out_override or doc.get("output_dir") or "projlift-out"

    ensemble = None
    group_ensemble = None
    if command == "grassmannian":
        src = doc.get("ensemble", {"builder": {"name": "sl2c_semidirect"}})
        group_ensemble = _parse_group_ensemble(src)
    elif command != "acceptance":
        if "ensemble" not in doc:
            raise ConfigError(f"command {command!r} needs an 'ensemble' entry")
        src = doc["ensemble"]
        if isinstance(src, str):
            if not os.path.exists(src):
                raise ConfigError(f"ensemble file not found: {src}")
            ensemble = load_ensemble(src)
        else:
            try:
                ensemble = ensemble_from_json(src)
            except (EnsembleError, KeyError, TypeError) as exc:
                raise ConfigError(f"bad ensemble definition: {exc}") from exc

    block = None
    if "block" in doc and doc["block"] is not None:
        if ensemble is None:
            raise ConfigError("a block spec needs a matrix ensemble")
        block = _parse_block(doc["block"], ensemble.dim)

    extras = {
        k: v
        for k, v in doc.items()
        if k not in ("command", "ensemble", "block", "n", "reps", "seed", "output_dir")
    }
    resolved = dict(doc)
    resolved.update({"command": command, "n": n, "reps": reps, "seed": seed,
                     "output_dir": output_dir, "threads": threads,
                     "version": __version__})
    return ExperimentConfig(command, n, reps, seed, output_dir, ensemble,
                            group_ensemble, block, extras, resolved)


def _report_envelope(cfg: ExperimentConfig, results) -> dict:
    return {"command": cfg.command, "version": __version__,
            "config": cfg.resolved, "results": results}


def _estimate_rows(label: str, quantity: str, est, n: int, reps: int, seed: int):
    return [label, quantity, est.value, est.stderr, n, reps, seed]


# ---------------------------------------------------------------------------
# command handlers


def cmd_lyapunov(cfg: ExperimentConfig, out: str) -> None:
    ens = cfg.ensemble
    top = top_exponent(ens, cfg.n, cfg.reps, child_seed(cfg.seed, 1))
    spec = spectrum(ens, cfg.n, cfg.reps, child_seed(cfg.seed, 2))
    rows = [_estimate_rows(ens.label, "top_exponent", top, cfg.n, cfg.reps, cfg.seed)]
    rows += [
        _estimate_rows(ens.label, f"lambda_{i + 1}", e, cfg.n, cfg.reps, cfg.seed)
        for i, e in enumerate(spec)
    ]
    results = {"top_exponent": top, "spectrum": spec}
    if cfg.block is not None:
        sub = subspace_exponents(cfg.block, ens, cfg.n, cfg.reps, child_seed(cfg.seed, 3))
        results["subspace"] = sub
        rows.append(_estimate_rows(ens.label, "lambda1_W", sub.lambda1_W,
                                   cfg.n, cfg.reps, cfg.seed))
        rows.append(_estimate_rows(ens.label, "lambda1_V/W", sub.lambda1_Q,
                                   cfg.n, cfg.reps, cfg.seed))
    write_csv(os.path.join(out, "estimates.csv"),
              ["label", "quantity", "value", "stderr", "n", "reps", "seed"], rows)
    write_csv(os.path.join(out, "spectrum.csv"), ["index", "value", "stderr"],
              [[i + 1, e.value, e.stderr] for i, e in enumerate(spec)])
    render_spectrum(os.path.join(out, "spectrum.png"),
                    [e.value for e in spec], [e.stderr for e in spec],
                    title=f"spectrum: {ens.label or 'ensemble'}")
    write_gnuplot(os.path.join(out, "spectrum.gp"),
                  gnuplot_script("spectrum.csv", [(2, "exponent")],
                                 "Lyapunov spectrum", "index", "nats/step",
                                 "spectrum_gp.png"))
    write_json(os.path.join(out, "report.json"), _report_envelope(cfg, results))


def cmd_fkh(cfg: ExperimentConfig, out: str) -> None:
    report = fkh_estimate(cfg.ensemble, cfg.n, cfg.reps, cfg.seed, bs_hint=cfg.block)
    payload = {
        "exponents": report.exponents,
        "filtration": [
            {"dim": s.dim, "basis": [[float(x) for x in col] for col in s.basis.T]}
            for s in report.filtration
        ],
        "notes": report.method_notes,
        "estimates": report.estimates,
    }
    write_csv(os.path.join(out, "levels.csv"),
              ["level", "exponent", "stderr", "dim"],
              [[i + 1, e.value, e.stderr, s.dim]
               for i, (e, s) in enumerate(zip(report.estimates, report.filtration))])
    render_levels(os.path.join(out, "levels.png"), report.exponents,
                  title=f"growth levels: {cfg.ensemble.label or 'ensemble'}")
    write_gnuplot(os.path.join(out, "levels.gp"),
                  gnuplot_script("levels.csv", [(2, "exponent")],
                                 "growth levels", "level", "nats/step",
                                 "levels_gp.png"))
    write_json(os.path.join(out, "report.json"), _report_envelope(cfg, payload))


def _default_state(cfg: ExperimentConfig) -> BundleState:
    q = cfg.block.quotient_dim
    r = cfg.block.r
    theta = np.asarray(cfg.extras.get("theta", np.eye(q)[0]), dtype=float)
    t = np.asarray(cfg.extras.get("t", np.zeros(r)), dtype=float)
    return BundleState(theta, t)


def cmd_drift(cfg: ExperimentConfig, out: str) -> None:
    if cfg.block is None:
        raise ConfigError("drift command needs a 'block' spec")
    grid = [float(x) for x in cfg.extras.get(
        "radius_grid", [math.log(10.0), math.log(100.0), math.log(1000.0)])]
    state = _default_state(cfg)
    report = tightness_diagnostic(cfg.block, cfg.ensemble, state, cfg.n, grid,
                                  spawn_rng(cfg.seed, 1))
    trace = report.trace
    q = cfg.block.quotient_dim
    write_csv(
        os.path.join(out, "trajectory.csv"),
        ["step", "drift_value"] + [f"theta_{i}" for i in range(q)] + ["log_t"],
        ([s + 1, trace.drift[s]] + [trace.thetas[s, i] for i in range(q)]
         + [trace.log_t[s]] for s in range(trace.steps)),
    )
    write_csv(os.path.join(out, "escape.csv"), ["radius", "escape_fraction"],
              zip(report.radius_grid, report.escape_fractions))
    render_drift_trace(os.path.join(out, "drift.png"), trace.drift,
                       title=f"drift trace ({report.trend})")
    render_escape_curve(os.path.join(out, "escape.png"), report.radius_grid,
                        report.escape_fractions)
    write_gnuplot(os.path.join(out, "drift.gp"),
                  gnuplot_script("trajectory.csv", [(2, "drift")],
                                 "drift trace", "step", "log(||t||+1)",
                                 "drift_gp.png"))
    write_json(os.path.join(out, "report.json"), _report_envelope(cfg, report))


def cmd_lift(cfg: ExperimentConfig, out: str) -> None:
    if cfg.block is None:
        raise ConfigError("lift command needs a 'block' spec")
    ens, bs = cfg.ensemble, cfg.block
    qens = quotient_ensemble(bs, ens)
    base_start = np.asarray(
        cfg.extras.get("base_start", np.ones(bs.quotient_dim)), dtype=float)
    burn = cfg.n // 10
    base = birkhoff_empirical(qens, proj_normalize(base_start), cfg.n, burn,
                              spawn_rng(cfg.seed, 11))
    classification = classify_regime(bs, ens, base, cfg.n, cfg.reps,
                                     child_seed(cfg.seed, 12))
    theta0 = base.points[int(np.argmax(base.weights))]
    fiber_starts = cfg.extras.get("fiber_starts")
    if fiber_starts is None:
        e1 = np.eye(bs.r)[0]
        fiber_starts = [np.zeros(bs.r), 2.0 * e1, -2.0 * e1]
    starts = [BundleState(theta0, np.asarray(t, dtype=float)) for t in fiber_starts]
    probe = uniqueness_probe(bs, ens, starts, cfg.n, child_seed(cfg.seed, 13))
    lift_cloud = birkhoff_empirical(ens, np.asarray(
        bs.adapted_basis @ np.concatenate([starts[0].t, starts[0].theta])),
        cfg.n, burn, spawn_rng(cfg.seed, 14))
    write_csv(os.path.join(out, "base_cloud.csv"),
              ["weight"] + [f"x_{i}" for i in range(base.ambient_dim)],
              (np.column_stack([base.weights, base.points])))
    write_csv(os.path.join(out, "lift_cloud.csv"),
              ["weight"] + [f"x_{i}" for i in range(lift_cloud.ambient_dim)],
              (np.column_stack([lift_cloud.weights, lift_cloud.points])))
    write_csv(os.path.join(out, "probe.csv"),
              [f"start_{j}" for j in range(len(starts))], probe.discrepancies)
    render_cloud(os.path.join(out, "lift_cloud.png"), lift_cloud.points,
                 lift_cloud.weights, title="lift occupation cloud")
    write_gnuplot(os.path.join(out, "lift_cloud.gp"),
                  gnuplot_script("lift_cloud.csv", [(3, "x1 vs x0")],
                                 "lift cloud", "x0", "x1", "lift_cloud_gp.png"))
    write_json(os.path.join(out, "classification.json"),
               _report_envelope(cfg, {"classification": classification,
                                      "probe": probe}))


def cmd_grassmannian(cfg: ExperimentConfig, out: str) -> None:
    ks = cfg.extras.get("k", [0, 1, 2, 3])
    if isinstance(ks, int):
        ks = [ks]
    grid = [float(x) for x in cfg.extras.get("radius_grid", DEFAULT_RADIUS_GRID)]
    reports = []
    for k in ks:
        rep = grassmannian_experiment(int(k), cfg.group_ensemble, cfg.n,
                                      child_seed(cfg.seed, 70 + int(k)),
                                      radius_grid=grid)
        reports.append(rep)
        tag = f"k{k}"
        write_csv(os.path.join(out, f"drift_{tag}.csv"), ["step", "drift_value"],
                  ([s + 1, rep.tightness.trace.drift[s]]
                   for s in range(rep.tightness.trace.steps)))
        render_drift_trace(os.path.join(out, f"drift_{tag}.png"),
                           rep.tightness.trace.drift,
                           title=f"affine {k}-planes: drift ({rep.verdict})")
        render_escape_curve(os.path.join(out, f"escape_{tag}.png"),
                            rep.tightness.radius_grid,
                            rep.tightness.escape_fractions)
        write_gnuplot(os.path.join(out, f"drift_{tag}.gp"),
                      gnuplot_script(f"drift_{tag}.csv", [(2, "drift")],
                                     f"affine {k}-planes drift", "step",
                                     "log(||t||+1)", f"drift_{tag}_gp.png"))
    write_json(os.path.join(out, "report.json"),
               _report_envelope(cfg, {"experiments": reports}))


def cmd_acceptance(cfg: ExperimentConfig, out: str) -> int:
    from .acceptance import run_all

    results = run_all(echo=print)
    write_json(os.path.join(out, "acceptance.json"),
               _report_envelope(cfg, {"criteria": results}))
    return EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPTANCE


def run(cfg: ExperimentConfig) -> int:
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    handler = {
        "lyapunov": cmd_lyapunov,
        "fkh": cmd_fkh,
        "lift": cmd_lift,
        "drift": cmd_drift,
        "grassmannian": cmd_grassmannian,
    }
    if cfg.command == "acceptance":
        return cmd_acceptance(cfg, out)
    handler[cfg.command](cfg, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="projlift",
        description="Random matrix products on projective spaces: exponent "
                    "estimation, stationary-lift diagnostics and "
                    "affine-Grassmannian experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       required=(name != "acceptance"),
                       help="JSON experiment configuration")
        p.add_argument("--seed", type=int, default=None,
                       help="overrides the config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for repetition-parallel estimators")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    parallel.set_threads(args.threads)
    try:
        cfg = load_config(args.command, args.config, args.seed, args.out,
                          args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LinAlgError, EnsembleError, FloatingPointError, ValueError,
            RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
