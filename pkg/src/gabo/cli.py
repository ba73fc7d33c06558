"""Command-line entry point: lengthscale thresholds, BO campaigns, timing and aggregation.

Exit codes: 0 success, 2 usage, 3 I/O, 4 numerical failure.
"""
import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .benchmarks import make_benchmark
from .bo import METHODS, BOConfig, BOTrace, aggregate, config_dict, run_bo, timing_summary
from .exceptions import GaboError, ThresholdNotFoundError
from .kernels import BetaMinConfig, estimate_beta_min
from .manifolds import parse_manifold
from .optimizer import CGConfig

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4
SCHEMA_VERSION = 1

log = logging.getLogger("gabo")


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    benchmark: str = "ackley-s3"
    methods: list = field(default_factory=lambda: ["gabo", "euclidean"])
    trials: int = 20
    iters: int = 80
    n_init: int = 5
    seed: int = 0
    out: str = "runs"
    jobs: int = 0
    beta_min: float = None
    lam_lo: float = 1e-3
    lam_hi: float = 5.0
    mle_restarts: int = 5
    record_timing: bool = False
    cg_max_iters: int = 200
    cg_grad_tol: float = 1e-6
    cg_initial_step: float = 1.0
    cg_contraction: float = 0.5
    cg_max_ls_iters: int = 25
    cg_restarts: int = 5

    def validate(self):
        if self.trials < 1:
            raise UsageError("trials must be >= 1")
        if self.iters < 0 or self.n_init < 1:
            raise UsageError("need iters >= 0 and n_init >= 1")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise UsageError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
        try:
            make_benchmark(self.benchmark, self.lam_lo, self.lam_hi)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if "cholesky" in self.methods and not self.benchmark.split("-", 1)[1].startswith("spd"):
            raise UsageError("the cholesky baseline needs an SPD benchmark")
        return self

    def cg(self):
        return CGConfig(self.cg_max_iters, self.cg_grad_tol, self.cg_initial_step,
                        self.cg_contraction, self.cg_max_ls_iters, self.cg_restarts)

    def bo(self, method, seed):
        return BOConfig(n_init=self.n_init, n_iters=self.iters, method=method, seed=seed,
                        cg=self.cg(), beta_min=self.beta_min, mle_restarts=self.mle_restarts,
                        record_timing=self.record_timing)

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, **asdict(self)}

    def provenance(self):
        # everything that shapes the results; output location and parallelism do not
        d = self.to_dict()
        del d["out"], d["jobs"]
        return d


def load_config(path):
    """Read a flat YAML config; unknown keys and a wrong schema version are usage errors."""
    try:
        raw = yaml.safe_load(Path(path).read_text()) or {}
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError("config must be a flat key-value mapping")
    version = raw.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise UsageError(f"config schema_version must be {SCHEMA_VERSION}, got {version!r}")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if isinstance(raw.get("methods"), str):
        raw["methods"] = _split(raw["methods"])
    return ExperimentConfig(**raw)


def _split(text):
    return [t.strip().lower() for t in str(text).split(",") if t.strip()]


def resolve_config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    over = {}
    if args.benchmark:
        bench = args.benchmark
        if "-" not in bench:
            if not args.manifold:
                raise UsageError("--benchmark without a manifold suffix needs --manifold")
            bench = f"{bench}-{args.manifold}"
        over["benchmark"] = bench.lower()
    elif args.manifold:
        over["benchmark"] = f"{cfg.benchmark.split('-', 1)[0]}-{args.manifold}".lower()
    for key, val in (("methods", args.method and _split(args.method)), ("trials", args.trials),
                     ("iters", args.iters), ("n_init", args.n_init), ("seed", args.seed),
                     ("out", args.out), ("jobs", args.jobs), ("beta_min", args.beta_min)):
        if val is not None:
            over[key] = val
    if getattr(args, "record_timing", False):
        over["record_timing"] = True
    return replace(cfg, **over).validate()


# -- campaigns -------------------------------------------------------------------------


def _trial(cfg, method, seed):
    b = make_benchmark(cfg.benchmark, cfg.lam_lo, cfg.lam_hi)
    bo_cfg = cfg.bo(method, seed)
    try:
        trace = run_bo(b, b.manifold, b.domain, bo_cfg)
    except (GaboError, ArithmeticError, np.linalg.LinAlgError, AssertionError) as exc:
        return method, seed, None, f"{type(exc).__name__}: {exc}"
    return method, seed, trace, None


def _trace_path(out, method, seed):
    return Path(out) / method / f"trial_{seed:04d}.jsonl"


def run_campaign(cfg, echo=print):
    """Run every (method, trial) pair, write traces, aggregates and a manifest."""
    out = Path(cfg.out)
    b = make_benchmark(cfg.benchmark, cfg.lam_lo, cfg.lam_hi)
    try:
        for method in cfg.methods:
            (out / method).mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc

    jobs = cfg.jobs or os.cpu_count() or 1
    tasks = [(cfg, m, cfg.seed + t) for m in cfg.methods for t in range(cfg.trials)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial, *zip(*tasks)))
    else:
        results = [_trial(*t) for t in tasks]

    manifest = {"version": __version__, "config": cfg.to_dict(), "f_star": b.f_star, "trials": []}
    traces = {m: [] for m in cfg.methods}
    for method, seed, trace, err in results:
        path = _trace_path(out, method, seed)
        entry = {"method": method, "seed": seed, "status": "ok" if err is None else "failed"}
        if err is None:
            header = {"benchmark": cfg.benchmark, "config": config_dict(cfg.bo(method, seed)),
                      "campaign": cfg.provenance()}
            trace.write_jsonl(path, header)
            entry["trace"] = str(path.relative_to(out))
            traces[method].append(trace)
        else:
            entry["error"] = err
            log.error("trial %s/%d failed: %s", method, seed, err)
        manifest["trials"].append(entry)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    summary = write_aggregates(out, traces, b.f_star, echo)
    return traces, summary


def write_aggregates(out, traces, f_star, echo=print):
    summary = {}
    for method, trs in traces.items():
        if not trs:
            echo(f"{method}: no successful trials")
            summary[method] = None
            continue
        table = aggregate(trs, f_star)
        table.write_csv(Path(out) / f"aggregate_{method}.csv")
        summary[method] = float(table.median[-1])
        echo(f"{method}: final median log10 regret {table.median[-1]:.4f} "
             f"[{table.q1[-1]:.4f}, {table.q3[-1]:.4f}] over {len(trs)} trials")
    return summary


def load_campaign(out):
    """Traces and optimum recorded by a previous ``run``."""
    out = Path(out)
    manifest = json.loads((out / "manifest.json").read_text())
    traces = {}
    for t in manifest["trials"]:
        traces.setdefault(t["method"], [])
        if t["status"] == "ok":
            traces[t["method"]].append(BOTrace.read_jsonl(out / t["trace"]))
    return traces, manifest["f_star"]


def format_timing(rows):
    """Table of per-iteration seconds, one row per (method, manifold)."""
    lines = [f"{'method':<10} {'manifold':<9} {'seconds/iter':>16}"]
    for method, manifold, stats in rows:
        if stats is not None:
            lines.append(f"{method:<10} {manifold:<9} {stats[0]:>7.2f} +- {stats[1]:<5.2f}")
    return "\n".join(lines)


# -- subcommands ---------------------------------------------------------------------


def cmd_beta_min(args):
    try:
        m = parse_manifold(args.manifold)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    lo, hi, n = _grid(args.grid)
    kw = {"beta_grid": np.logspace(np.log10(lo), np.log10(hi), n)}
    cfg = BetaMinConfig.full_scale(**kw) if args.paper_scale else BetaMinConfig(**kw)
    over = {k: v for k, v in (("n_samples", args.samples), ("n_repeats", args.repeats),
                              ("n_distributions", args.distributions)) if v is not None}
    cfg = replace(cfg, **over)
    rng = np.random.default_rng(args.seed or 0)
    out = Path(args.out) if args.out else None
    try:
        beta, table = estimate_beta_min(m, cfg, rng)
    except ThresholdNotFoundError as exc:
        if out:
            exc.table.write_csv(out)
        print(f"{m.name}: no grid value gave 100% PD kernel matrices", file=sys.stderr)
        return EXIT_NUMERICAL
    if out:
        table.write_csv(out)
    print(f"{m.name}: beta_min = {beta:.4g}")
    return EXIT_OK


def _grid(text):
    if not text:
        return 0.01, 100.0, 50
    try:
        lo, hi, n = text.split(",")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise UsageError("--grid takes lo,hi,n (e.g. 0.01,100,50)") from None
    if not 0 < lo < hi or n < 2:
        raise UsageError("--grid needs 0 < lo < hi and n >= 2")
    return lo, hi, n


def cmd_run(args):
    cfg = resolve_config(args)
    _, summary = run_campaign(cfg)
    return EXIT_NUMERICAL if any(v is None for v in summary.values()) else EXIT_OK


def cmd_timing(args):
    cfg = resolve_config(args)
    cfg = replace(cfg, record_timing=True, jobs=args.jobs or 1)
    traces, _ = run_campaign(cfg, echo=lambda *a: None)
    manifold = cfg.benchmark.split("-", 1)[1]
    rows = [(m, manifold, timing_summary(trs)) for m, trs in traces.items()]
    print(format_timing(rows))
    return EXIT_OK


def cmd_aggregate(args):
    if not args.out:
        raise UsageError("aggregate needs --out pointing at a campaign directory")
    traces, f_star = load_campaign(args.out)
    summary = write_aggregates(args.out, traces, f_star)
    return EXIT_NUMERICAL if any(v is None for v in summary.values()) else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="gabo", description="Geometry-aware Bayesian optimization experiments")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    bm = sub.add_parser("beta-min", help="estimate the kernel lengthscale threshold for a manifold")
    bm.add_argument("--manifold", required=True, help="s2, s3, spd2, r3, s2xspd2, ...")
    bm.add_argument("--grid", help="lo,hi,n log-spaced beta grid (default 0.01,100,50)")
    bm.add_argument("--samples", type=int)
    bm.add_argument("--repeats", type=int)
    bm.add_argument("--distributions", type=int)
    bm.add_argument("--paper-scale", action="store_true", help="500 samples x 10 repeats")
    bm.add_argument("--seed", type=int)
    bm.add_argument("--out", help="CSV path for the PD-rate table")
    bm.set_defaults(func=cmd_beta_min)

    for name, func, hlp in (("run", cmd_run, "run a multi-trial BO campaign"),
                            ("timing", cmd_timing, "report per-iteration wall time per method")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--config", help="flat YAML experiment config")
        sp.add_argument("--benchmark", help="e.g. ackley-s3, bimodal-spd2")
        sp.add_argument("--manifold")
        sp.add_argument("--method", help="comma-separated: gabo,euclidean,cholesky")
        sp.add_argument("--trials", type=int)
        sp.add_argument("--iters", type=int)
        sp.add_argument("--n-init", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--jobs", type=int)
        sp.add_argument("--beta-min", type=float)
        if name == "run":
            sp.add_argument("--record-timing", action="store_true",
                            help="store wall-clock times (traces are then not byte-reproducible)")
        sp.set_defaults(func=func)

    ag = sub.add_parser("aggregate", help="recompute aggregate CSVs from stored traces")
    ag.add_argument("--out", required=True, help="campaign directory")
    ag.set_defaults(func=cmd_aggregate)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gabo {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"gabo {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GaboError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"gabo {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
