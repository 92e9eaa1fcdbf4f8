"""Command-line front end.

Every command takes either ``--config PATH`` (a TOML run file) or
``--system NAME`` (a built-in zoo system with its default config).
``--out``, ``--seed`` and ``--jobs`` override the ``[run]`` table.

Exit codes: 0 success, 1 a check was violated or partial, 2 bad
configuration, 3 a capacity limit was hit.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, zoo
from .chains import condensation_dot, edge_list_csv
from .config import ConfigError, RunConfig, load_config
from .entropy import entropy_slope, entropy_table, spectral_chain_entropy
from .harness import (
    SystemAnalysis,
    exit_status,
    normalize_theorem_id,
    report_header,
    run_checks,
    summary_csv,
)
from .model import CapacityError, ModelError, ResolutionError
from .pointwise import point_reports

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_CAPACITY = 0, 1, 2, 3


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _resolve(args) -> list:
    """(name, RunConfig) pairs selected by --config / --system / --zoo."""
    if getattr(args, "zoo", False):
        pairs = [(n, zoo.default_config(n)) for n in zoo.names()]
    elif args.config:
        cfg = load_config(args.config)
        pairs = [(cfg.model.get("name", Path(args.config).stem), cfg)]
    elif args.system:
        try:
            pairs = [(args.system, zoo.default_config(args.system))]
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from exc
    else:
        raise ConfigError("give --config PATH or --system NAME")
    return [(n, c.with_run(out=args.out, seed=args.seed, jobs=args.jobs)) for n, c in pairs]


def _jobs(cfg: RunConfig) -> int:
    return cfg.run.jobs if cfg.run.jobs and cfg.run.jobs > 0 else (os.cpu_count() or 1)


# --------------------------------------------------------------------------
# analyze


def analyze(name: str, cfg: RunConfig, out: Path) -> None:
    """Write components.json, points.json, entropy.csv and condensation.dot into ``out``."""
    sa = SystemAnalysis(cfg, name)
    m, sched = sa.model, sa.schedule
    header = report_header(cfg)
    out.mkdir(parents=True, exist_ok=True)

    levels = []
    for j, delta in enumerate(sched.deltas):
        G, D = sa.graph(j), sa.decomposition(j)
        comps = []
        for c, nodes in enumerate(D.components):
            h = spectral_chain_entropy(G, nodes)
            comps.append({"id": c, "size": len(nodes), "terminal": bool(D.terminal[c]),
                          "nodes": [int(v) for v in nodes], "spectral_entropy": h.value})
        levels.append({"delta": delta, "edges": G.edge_count, "cr_nodes": int(D.cr_nodes.size),
                       "components": comps,
                       "condensation": {str(c): sorted(int(b) for b in D.condensation()[c])
                                        for c in range(len(D.components))}})
    _dump_json(out / "components.json",
               {**header, "system": name, "nodes": m.size, "floor": m.floor,
                "proj_error": m.proj_error, "levels": levels})

    graphs = {d: sa.graph(j) for j, d in enumerate(sched.deltas)}
    reports = point_reports(m, graphs, sched, cfg.analysis.scales)
    _dump_json(out / "points.json",
               {**header, "system": name, "points": [r.to_json() for r in reports]})

    estimates = []
    finest = sa.graph(len(sched.deltas) - 1)
    spec = spectral_chain_entropy(finest)
    spec.params.update({"region": "chains", "delta": finest.delta})
    for r in cfg.analysis.scales:
        est = entropy_slope(m, np.arange(m.size), r, sa.n_range, "greedy", region="X")
        estimates.append(est)
    table = entropy_table(estimates)
    (out / "entropy.csv").write_text(
        f"# tool_version={header['tool_version']} config_hash={header['config_hash']} "
        f"spectral_entropy={spec.value:.9f}\n" + table)

    D = sa.decomposition(len(sched.deltas) - 1)
    (out / "condensation.dot").write_text(
        f"// tool_version={header['tool_version']} config_hash={header['config_hash']}\n"
        + condensation_dot(m, D))


# --------------------------------------------------------------------------
# check


def _check_one(name: str, cfg: RunConfig, theorems) -> list:
    sa = SystemAnalysis(cfg, name)
    return run_checks(sa, theorems)


def check(pairs: list, theorems, out: Path | None) -> int:
    jobs = min(_jobs(pairs[0][1]), len(pairs))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_check_one, n, c, theorems) for n, c in pairs]
            results = [f.result() for f in futures]
    else:
        results = [_check_one(n, c, theorems) for n, c in pairs]
    checks = [c for res in results for c in res]
    for chk in checks:
        extra = f" ({chk.failed_hypothesis})" if chk.failed_hypothesis else ""
        print(f"{chk.system:12s} {chk.theorem:5s} {chk.status}{extra}")
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        for (name, cfg), res in zip(pairs, results):
            header = report_header(cfg)
            for chk in res:
                _dump_json(out / f"check_{name}_{chk.theorem}.json", {**header, **chk.to_json()})
        first = report_header(pairs[0][1]) if len(pairs) == 1 else \
            {"tool_version": __version__, "config_hash": _combined_hash(pairs)}
        (out / "summary.csv").write_text(summary_csv(checks, first))
    return exit_status(checks)


def _combined_hash(pairs) -> str:
    import hashlib

    blob = ",".join(f"{n}:{c.digest()}" for n, c in pairs)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chainscope",
                                description="Chain, shadowing and entropy analysis of finite models.")
    p.add_argument("--version", action="version", version=f"chainscope {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, zoo_flag=False):
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--config", metavar="PATH", help="TOML run configuration")
        src.add_argument("--system", metavar="NAME", help="built-in zoo system")
        if zoo_flag:
            src.add_argument("--zoo", action="store_true", help="every built-in system")
        sp.add_argument("--out", metavar="DIR", help="output directory")
        sp.add_argument("--jobs", type=int, metavar="N", help="worker processes (default: cores)")
        sp.add_argument("--seed", type=int, metavar="S", help="seed for sampled checks")

    sp = sub.add_parser("analyze", help="components, point verdicts and entropy tables")
    common(sp)
    sp = sub.add_parser("check", help="run theorem checks")
    sp.add_argument("theorems", nargs="*", metavar="ID", help="L1.1 1.1 1.2 1.3 1.4 A1 B1 L2.1")
    sp.add_argument("--all", action="store_true", help="run every check")
    common(sp, zoo_flag=True)
    sp = sub.add_parser("entropy", help="spectral chain entropy and separated-set slopes")
    common(sp)
    sp.add_argument("--delta-index", type=int, default=-1, help="schedule delta to use")
    sp = sub.add_parser("export-dot", help="condensation DOT (and optional edge list)")
    common(sp)
    sp.add_argument("--delta-index", type=int, default=-1, help="schedule delta to use")
    sp.add_argument("--edges", action="store_true", help="also write edges.csv")
    sp = sub.add_parser("zoo", help="list or describe built-in systems")
    sp.add_argument("action", choices=["list", "describe"])
    sp.add_argument("name", nargs="?")
    return p


def _run(args) -> int:
    if args.command == "zoo":
        if args.action == "list":
            for n in zoo.names():
                print(n)
            return EXIT_OK
        if not args.name:
            raise ConfigError("zoo describe needs a system name")
        try:
            print(zoo.describe(args.name), end="")
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from exc
        return EXIT_OK

    pairs = _resolve(args)
    if args.command == "analyze":
        name, cfg = pairs[0]
        out = Path(cfg.run.out)
        analyze(name, cfg, out)
        print(f"wrote {out}/components.json, points.json, entropy.csv, condensation.dot")
        return EXIT_OK

    if args.command == "check":
        if args.all or not args.theorems:
            theorems = ["all"]
        else:
            try:
                theorems = [normalize_theorem_id(t) for t in args.theorems]
            except KeyError as exc:
                raise ConfigError(exc.args[0]) from exc
        out = Path(args.out) if args.out else None
        return check(pairs, theorems, out)

    name, cfg = pairs[0]
    sa = SystemAnalysis(cfg, name)
    j = args.delta_index % len(sa.schedule.deltas)
    if args.command == "entropy":
        h = spectral_chain_entropy(sa.graph(j))
        print(f"{name}: spectral chain entropy {h.value:.6f} at delta={sa.delta(j):g}")
        ests = [entropy_slope(sa.model, np.arange(sa.model.size), r, sa.n_range, "greedy",
                              region="X") for r in cfg.analysis.scales]
        for e in ests:
            print(f"  r={e.params['r']:g}: separated-set slope {e.value:.6f} "
                  f"(saturation {e.info['saturation']})")
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            header = report_header(cfg)
            (out / "entropy.csv").write_text(
                f"# tool_version={header['tool_version']} config_hash={header['config_hash']} "
                f"spectral_entropy={h.value:.9f}\n" + entropy_table(ests, sa.delta(j)))
        return EXIT_OK

    # export-dot
    header = report_header(cfg)
    dot = (f"// tool_version={header['tool_version']} config_hash={header['config_hash']}\n"
           + condensation_dot(sa.model, sa.decomposition(j)))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "condensation.dot").write_text(dot)
        if args.edges:
            (out / "edges.csv").write_text(edge_list_csv(sa.graph(j)))
    else:
        print(dot, end="")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (ConfigError, ResolutionError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY


if __name__ == "__main__":
    sys.exit(main())
