"""Command line entry point ``fbessel``.

Exit status: 0 when every check passes, 1 when a check fails, 2 for a
configuration error and 3 for an internal consistency error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import chaos, lrd
from .config import ExperimentConfig, load_config
from .ensemble import run_blocks
from .errors import ConfigError, FbesselError
from .fbm import FbmPath, Method, sample_fbm, write_csv
from .processes import x_block
from .reports import Welford
from .verify import Suite, run_suite

# Wall-time budgets in seconds per verify suite; exceeding one only warns.
SUITE_BUDGETS = {Suite.ISOMETRY: 60, Suite.SELFSIM: 300, Suite.CHAOS: 60, Suite.LRD: 300, Suite.CONSTANTS: 180}

DEFAULT_SCAN = (0.55, 0.6, 0.65, 2 / 3, 0.7, 0.75, 0.8, 0.85, 0.9)


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_plain) + "\n")


def _plain(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _header(cfg: ExperimentConfig, *extra) -> str:
    return "".join(f"# {line}\n" for line in [*cfg.header_lines(), *extra])


def cmd_simulate(cfg: ExperimentConfig, out: Path) -> int:
    """Write one fBm path file per replica and a JSON summary of ``X_T`` and ``R_T``."""
    grid = cfg.grid
    eps = cfg.mollifier.eps
    paths_dir = out / "paths"
    paths_dir.mkdir(parents=True, exist_ok=True)

    def work(seeds, first):
        vals = np.stack([sample_fbm(grid, cfg.H, cfg.d, s, cfg.method).values for s in seeds])
        for r, (s, v) in enumerate(zip(seeds, vals)):
            path = FbmPath(grid, v, cfg.H, cfg.method, s)
            text = write_csv(path, header_lines=[*cfg.header_lines(), f"replica={first + r}", f"replica_seed={s}",
                                                 f"H={cfg.H!r}", f"method={cfg.method}"])
            (paths_dir / f"path_{first + r:06d}.csv").write_text(text)
        X = x_block(vals, grid, cfg.H, eps)[:, -1]
        R = np.sqrt(np.sum(vals[:, :, -1] ** 2, axis=1))
        return np.column_stack([X, R])

    res = run_blocks(work, cfg.replicas, cfg.master_seed, cfg.jobs)
    stats = {}
    for j, name in enumerate(("X_T", "R_T")):
        stats[name] = Welford().update(res[:, j]).summary()
        stats[name + "_second_moment"] = Welford().update(res[:, j] ** 2).summary()
    _dump_json(out / "summary.json", {
        "config_hash": cfg.hash,
        "master_seed": cfg.master_seed,
        "config": cfg.canonical(),
        "mollifier_eps": eps,
        "statistics": stats,
    })
    print(f"wrote {cfg.replicas} path files and summary.json to {out}")
    return 0


def cmd_verify(cfg: ExperimentConfig, suite: str, out: Path) -> int:
    s = Suite.coerce(suite)
    start = time.perf_counter()
    reports = run_suite(s, cfg)
    elapsed = time.perf_counter() - start
    for r in reports:
        print(r.line())
    body = []
    for r in reports:
        d = r.to_dict()
        d.pop("runtime")
        body.append(d)
    _dump_json(out / f"verify_{s.value.lower()}.json", {
        "config_hash": cfg.hash, "master_seed": cfg.master_seed, "suite": s.value, "reports": body,
        "passed": all(r.passed for r in reports),
    })
    _dump_json(out / f"verify_{s.value.lower()}_timing.json", {
        "config_hash": cfg.hash, "master_seed": cfg.master_seed, "suite": s.value, "total_seconds": elapsed,
        "reports": {r.name: r.runtime for r in reports},
    })
    if elapsed > SUITE_BUDGETS[s]:
        print(f"warning: suite {s.value} took {elapsed:.0f}s, budget {SUITE_BUDGETS[s]}s", file=sys.stderr)
    return 0 if all(r.passed for r in reports) else 1


def cmd_bench(cfg: ExperimentConfig, out: Path, limit: float = 1.3) -> int:
    result = bench_mod.run_bench(cfg.bench_sizes, repetitions=cfg.bench_repetitions, H=cfg.H)
    (out / "bench.csv").write_text(_header(cfg) + bench_mod.bench_table_csv(result))
    exps = {m: r["exponent"] for m, r in result.items()}
    backends = bench_mod.backend_comparison()
    circ = exps.get(Method.CIRCULANT.value, float("nan"))
    span = np.log10(max(cfg.bench_sizes) / min(cfg.bench_sizes))
    ok = bool(circ < limit)
    _dump_json(out / "bench.json", {
        "config_hash": cfg.hash, "master_seed": cfg.master_seed, "exponents": exps,
        "size_caps": {m.value: c for m, c in bench_mod.SIZE_CAPS.items()},
        "decades": span, "circulant_limit": limit, "passed": ok, "backends": backends,
    })
    for m, e in exps.items():
        print(f"{m}: exponent {e:.3f}")
    print(f"{'PASS' if ok else 'FAIL'} circulant exponent {circ:.3f} < {limit}")
    if span < 2:
        print("warning: sizes span less than two decades", file=sys.stderr)
    return 0 if ok else 1


def cmd_lrd_scan(cfg: ExperimentConfig, out: Path, hs) -> int:
    text, summary = lrd.lrd_scan(hs, cfg.lrd_a, cfg.lrd_lags, cfg.quad_tol)
    (out / "lrd_scan.csv").write_text(_header(cfg) + text)
    (out / "lrd_scan.json").write_text(lrd.summary_json(summary, config_hash=cfg.hash, master_seed=cfg.master_seed)
                                       + "\n")
    for row in summary:
        print(f"H={row['H']:.4g} slope={row['slope']:.3f} expected={row['expected_slope']:.3f} {row['verdict']}")
    return 1 if any(r["disagreement"] for r in summary) else 0


def cmd_chaos_table(cfg: ExperimentConfig, out: Path, orders: int) -> int:
    (out / "chaos_table.csv").write_text(_header(cfg, f"H={cfg.H!r}") + chaos.coefficient_table_csv(cfg.H, orders))
    print(f"wrote chaos_table.csv with orders up to {2 * orders + 1}")
    return 0


def _parse_hurst_list(text: str):
    out = []
    for tok in text.replace(",", " ").split():
        num, _, den = tok.partition("/")
        out.append(float(num) / float(den) if den else float(num))
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fbessel", description="Fractional Bessel process laboratory")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, help="worker threads")
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("simulate", parents=[common], help="simulate paths and summarize X")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", help="one of " + ", ".join(s.value for s in Suite))
    sub.add_parser("bench", parents=[common], help="time the path generators")
    s = sub.add_parser("lrd-scan", parents=[common], help="quadrature r(n) over a set of H")
    s.add_argument("--hurst", default=" ".join(f"{h:.17g}" for h in DEFAULT_SCAN),
                   help="Hurst indices, space or comma separated; fractions like 2/3 accepted")
    c = sub.add_parser("chaos-table", parents=[common], help="write chaos coefficients")
    c.add_argument("--orders", type=int, default=20, help="largest index k")
    return p


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return cfg.with_overrides(master_seed=args.seed, jobs=args.jobs, output_dir=args.out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.verb == "simulate":
            return cmd_simulate(cfg, out)
        if args.verb == "verify":
            return cmd_verify(cfg, args.suite, out)
        if args.verb == "bench":
            return cmd_bench(cfg, out)
        if args.verb == "lrd-scan":
            try:
                hs = _parse_hurst_list(args.hurst)
            except ValueError:
                raise ConfigError(f"cannot parse {args.hurst!r}", "hurst") from None
            return cmd_lrd_scan(cfg, out, hs)
        return cmd_chaos_table(cfg, out, args.orders)
    except ConfigError as exc:
        print(json.dumps({"error": "configuration", "field": exc.field, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code
    except FbesselError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
