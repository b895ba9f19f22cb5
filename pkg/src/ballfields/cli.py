"""Batch experiment runner: ``ballfields <subcommand> --config run.json``.

Exit codes: 0 ok, 2 configuration or regime error, 3 numerical failure,
4 resource guard.  Failures also print a one-line JSON error record on
stderr.  Every successful run writes ``manifest.json`` next to its CSVs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigValidationError, ExperimentConfig, load_config
from .errors import ConfigError, NumericalError, RegimeError, ResourceGuardError
from .limits import covariation, zj_bridge
from .measures import default_r_grid, membership_probe
from .regimes import INTERMEDIATE, limit_curve, limit_params, limit_theta_grid, run_convergence
from .simulate import choose_delta, replicate, resolve_workers, sample_balls, stream, write_values_csv
from .stats import fmt

SUBCOMMANDS = ("simulate", "limit", "converge", "membership", "covariation", "bridge", "report")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_GUARD = 0, 2, 3, 4


def _theta(cfg: ExperimentConfig, spec, mu, F, G) -> np.ndarray:
    if cfg.theta.values is not None:
        return np.asarray(cfg.theta.values, dtype=float)
    return limit_theta_grid(spec, mu, F, G, n=cfg.theta.n, level=cfg.theta.level)


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- subcommands -------------------------------------------------------------------------------


def cmd_simulate(cfg: ExperimentConfig, out: Path, workers: int) -> dict:
    if cfg.simulate is None:
        raise ConfigError("field 'simulate' (with rho) is required for the simulate subcommand")
    mu = cfg.build_measure()
    F, G = cfg.build_laws()
    rho = cfg.simulate.rho
    Fr = F.rescale(rho)
    if cfg.regime is not None:
        spec = cfg.build_regime()
        lam, n = spec.lam(rho), spec.n(rho)
    else:
        raise ConfigError("field 'regime' is required for the simulate subcommand")
    delta = choose_delta(lam, Fr, G, mu, n, cfg.delta_factor)
    files = []
    if cfg.simulate.dump_balls:
        sample = sample_balls(lam, Fr, G, mu.support_box, delta, stream(cfg.seed, 0), rho=rho,
                              stream_id=(cfg.seed, 0))
        sample.to_csv(out / "balls.csv")
        files.append("balls.csv")
    res = replicate(mu, lam, Fr, G, n, cfg.replicates, cfg.seed, key=(1,), delta=delta,
                    budget=cfg.budget, workers=workers)
    write_values_csv(out / "replicates.csv", res.values)
    files.append("replicates.csv")
    summary = {"rho": rho, "lambda": lam, "n": n, "delta": delta, "expected_balls": res.expected_balls,
               "truncation_bound": res.truncation_bound, "compression": res.compression.kind,
               "r_cut": res.compression.r_cut, "mean": float(np.mean(res.values)),
               "std": float(np.std(res.values))}
    return {"files": files, "summary": summary}


def cmd_limit(cfg: ExperimentConfig, out: Path, workers: int) -> dict:
    mu = cfg.build_measure()
    F, G = cfg.build_laws()
    spec = cfg.build_regime()
    theta = _theta(cfg, spec, mu, F, G)
    curve = limit_curve(spec, mu, F, G, theta)
    curve.to_csv(out / "limit_cf.csv")
    summary = {"regime": spec.regime.label}
    if spec.regime.label == INTERMEDIATE:
        summary["a"] = spec.regime.a
    else:
        p = limit_params(spec, mu, F, G)
        summary.update(index=p.index, scale=p.scale, skew=p.skew, shift=p.shift)
    return {"files": ["limit_cf.csv"], "summary": summary}


def cmd_converge(cfg: ExperimentConfig, out: Path, workers: int) -> dict:
    mu = cfg.build_measure()
    F, G = cfg.build_laws()
    spec = cfg.build_regime()
    theta = _theta(cfg, spec, mu, F, G)
    rep = run_convergence(spec, mu, F, G, theta, cfg.replicates, cfg.seed, budget=cfg.budget,
                          workers=workers, probe=cfg.membership_probe, delta_factor=cfg.delta_factor)
    rep.to_csv(out / "convergence.csv")
    rep.limit.to_csv(out / "limit_cf.csv")
    paths = rep.write_values(out)
    rows = [[fmt(r.rho), fmt(r.lam), fmt(r.n), fmt(r.distance), fmt(r.theta_at), fmt(r.radius),
             fmt(r.truncation_bound), fmt(r.compression_bound)] for r in rep.rows]
    _write_rows(out / "ladder.csv", ["rho", "lambda", "n", "distance", "theta_at", "radius",
                                     "truncation_bound", "compression_bound"], rows)
    summary = {"regime": rep.label, "final_distance": rep.final_distance, "inversions": rep.inversions(),
               "converged": rep.converged(), "distances": rep.distances.tolist()}
    return {"files": ["convergence.csv", "limit_cf.csv", "ladder.csv"] + [p.name for p in paths],
            "summary": summary}


def cmd_membership(cfg: ExperimentConfig, out: Path, workers: int) -> dict:
    mu = cfg.build_measure()
    if cfg.regime is None:
        raise ConfigError("field 'regime' (alpha, beta) is required for the membership subcommand")
    r = default_r_grid(cfg.membership.decades, cfg.membership.per_decade)
    rep = membership_probe(mu, cfg.regime.alpha, cfg.regime.beta, r)
    _write_rows(out / "membership.csv", ["r", "gamma"], [[fmt(a), fmt(b)] for a, b in zip(rep.r, rep.gamma)])
    summary = {"q_hat": rep.q_hat, "p_hat": rep.p_hat, "alpha": rep.alpha, "beta": rep.beta,
               "plausible_member": rep.plausible_member}
    return {"files": ["membership.csv"], "summary": summary}


def cmd_covariation(cfg: ExperimentConfig, out: Path, workers: int) -> dict:
    mu1, mu2 = cfg.build_measure(), cfg.build_measure("measure2")
    F, G = cfg.build_laws()
    spec = cfg.build_regime()
    st = G.attracting
    c12 = covariation(mu1, mu2, st.index, spec.beta, F.c_beta, st.scale)
    c21 = covariation(mu2, mu1, st.index, spec.beta, F.c_beta, st.scale)
    _write_rows(out / "covariation.csv", ["pair", "value"], [["mu1,mu2", fmt(c12)], ["mu2,mu1", fmt(c21)]])
    return {"files": ["covariation.csv"], "summary": {"mu1_mu2": c12, "mu2_mu1": c21}}


def cmd_bridge(cfg: ExperimentConfig, out: Path, workers: int) -> dict:
    mu = cfg.build_measure()
    F, G = cfg.build_laws()
    spec = cfg.build_regime()
    if cfg.theta.values is not None:
        theta = np.asarray(cfg.theta.values, dtype=float)
    else:
        from .limits import z_alpha_params
        from .stats import default_theta_grid
        st = G.attracting
        p = z_alpha_params(mu, st.index, spec.beta, F.c_beta, st.scale, st.skew)
        theta = default_theta_grid(lambda t: abs(p.cf(t)), cfg.theta.n, cfg.theta.level)
    rows = zj_bridge(mu, cfg.bridge.kappas, G, spec.beta, F.c_beta, theta)
    _write_rows(out / "bridge.csv", ["a", "kappa", "distance", "theta_at"],
                [[fmt(r.a), fmt(r.kappa), fmt(r.distance), fmt(r.theta_at)] for r in rows])
    return {"files": ["bridge.csv"], "summary": {"distances": [r.distance for r in rows]}}


def cmd_report(cfg: ExperimentConfig, out: Path, workers: int) -> dict:
    if not cfg.report.inputs:
        raise ConfigError("field 'report.inputs' must list run directories")
    rows = []
    for d in cfg.report.inputs:
        man_path = Path(d) / "manifest.json"
        try:
            man = json.loads(man_path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"report.inputs: cannot read {man_path}: {exc}") from None
        for key, val in sorted(man.get("summary", {}).items()):
            rows.append([d, man.get("subcommand", ""), key, json.dumps(val)])
    _write_rows(out / "report.csv", ["run", "subcommand", "key", "value"], rows)
    return {"files": ["report.csv"], "summary": {"runs": len(cfg.report.inputs), "rows": len(rows)}}


COMMANDS = {"simulate": cmd_simulate, "limit": cmd_limit, "converge": cmd_converge,
            "membership": cmd_membership, "covariation": cmd_covariation, "bridge": cmd_bridge,
            "report": cmd_report}


# -- entry point -------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ballfields", description="Weighted random balls experiments.")
    p.add_argument("--print-schema", action="store_true", help="print the config JSON schema and exit")
    sub = p.add_subparsers(dest="subcommand")
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON experiment config")
        s.add_argument("--seed", type=int, help="overrides the config seed")
        s.add_argument("--threads", type=int, help="worker cap (default: BALLFIELDS_THREADS or 1)")
        s.add_argument("--out", help="output directory (overrides output_dir)")
    return p


def _error(code: int, kind: str, message: str, **extra) -> int:
    rec = {"error": kind, "message": message, "exit_code": code}
    rec.update({k: v for k, v in extra.items() if v is not None})
    print(json.dumps(rec, sort_keys=True), file=sys.stderr)
    return code


def _versions() -> dict:
    import pydantic
    import scipy

    return {"ballfields": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "pydantic": pydantic.__version__}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_schema:
        print(json.dumps(ExperimentConfig.model_json_schema(), indent=2))
        return EXIT_OK
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigValidationError("seed: must be nonnegative", "seed")
            cfg = cfg.model_copy(update={"seed": args.seed})
        if args.threads is not None and args.threads < 1:
            raise ConfigValidationError("threads: must be at least 1", "threads")
        workers = resolve_workers(args.threads)
        out = Path(args.out or cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        started = datetime.now(timezone.utc)
        t0 = time.perf_counter()
        result = COMMANDS[args.subcommand](cfg, out, workers)
        manifest = {"subcommand": args.subcommand, "config": cfg.model_dump(mode="json"), "seed": cfg.seed,
                    "threads": workers, "versions": _versions(), "started": started.isoformat(),
                    "wall_time_s": time.perf_counter() - t0, "files": result["files"],
                    "summary": result["summary"]}
        _write_json(out / "manifest.json", manifest)
    except ConfigValidationError as exc:
        return _error(EXIT_CONFIG, "config", str(exc), field=exc.field, line=exc.line)
    except (ConfigError, RegimeError) as exc:
        return _error(EXIT_CONFIG, type(exc).__name__, str(exc))
    except ResourceGuardError as exc:
        return _error(EXIT_GUARD, "resource-guard", str(exc))
    except NumericalError as exc:
        return _error(EXIT_NUMERIC, type(exc).__name__, str(exc))
    except (ValueError, NotImplementedError) as exc:
        return _error(EXIT_CONFIG, type(exc).__name__, str(exc))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
