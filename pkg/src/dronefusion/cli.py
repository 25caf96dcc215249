"""``dronefusion`` command line: run, verify, montecarlo.

Exit status is 0 on success, 1 when a verification check fails, 2 on
invalid input and 3 when a filter fails numerically (partial outputs are
kept).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import subprocess
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .metrics import aggregate_metrics, compute_metrics
from .simulator import run_scenario
from .verify import SUITES, run_suites

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_path: str
    output_dir: str
    tool_version: str
    seed: int
    started_at: str
    build_id: str


def build_id() -> str:
    """``git describe`` of the source tree, or the package version outside a checkout."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return f"v{__version__}"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else f"v{__version__}"


def unique_dir(base: Path) -> Path:
    """``base`` if it is absent or empty, otherwise the first free ``base-N``."""
    candidate, n = base, 0
    while candidate.exists() and any(candidate.iterdir()):
        n += 1
        candidate = base.with_name(f"{base.name}-{n}")
    candidate.mkdir(parents=True, exist_ok=True)
    return candidate


def _clean(obj):
    # NaN/inf have no JSON spelling; they become null
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """JSON text; floats use the shortest repr that round-trips exactly."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _output_dir(args, cfg: ScenarioConfig) -> Path:
    if args.out:
        return unique_dir(Path(args.out))
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S")
    return unique_dir(Path("runs") / f"{cfg.model}-{args.command}-seed{cfg.seed}-{stamp}")


def _write_manifest(out: Path, args, cfg: ScenarioConfig) -> RunManifest:
    manifest = RunManifest(
        command=args.command,
        config_path=str(args.config),
        output_dir=str(out),
        tool_version=__version__,
        seed=cfg.seed,
        started_at=datetime.now(timezone.utc).isoformat(),
        build_id=build_id(),
    )
    (out / "manifest.json").write_text(dumps({**asdict(manifest), "config": cfg.to_dict()}))
    return manifest


def _load(args) -> ScenarioConfig:
    return load_config(args.config, args.set, os.environ)


def cmd_run(args) -> int:
    cfg = _load(args)
    out = _output_dir(args, cfg)
    _write_manifest(out, args, cfg)
    log = run_scenario(cfg)
    log.write_csv(out / "log.csv")
    (out / "metrics.json").write_text(dumps(compute_metrics(log)))
    print(f"wrote {out / 'log.csv'} and {out / 'metrics.json'}")
    if log.failed:
        print(f"filter failed: {log.error}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _run_seed(job):
    raw, seed = job
    log = run_scenario(parse_config({**raw, "seed": seed}))
    return compute_metrics(log), log


def cmd_montecarlo(args) -> int:
    if args.seeds < 1:
        raise ConfigError("--seeds", "must be at least 1")
    cfg = _load(args)
    out = _output_dir(args, cfg)
    _write_manifest(out, args, cfg)
    raw = cfg.to_dict()
    jobs = [(raw, cfg.seed + i) for i in range(args.seeds)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_seed, jobs))  # map keeps seed order
    else:
        results = [_run_seed(j) for j in jobs]
    runs = [r for r, _ in results]
    agg = aggregate_metrics(runs, [g for _, g in results])
    (out / "aggregate.json").write_text(dumps({**agg, "runs": runs}))
    print(
        f"{agg['n_seeds']} seeds: NEES envelope fraction {agg['nees_envelope_fraction']:.4f}, "
        f"mean NEES {agg['mean_nees']:.3f}; wrote {out / 'aggregate.json'}"
    )
    return EXIT_NUMERIC if agg["failed_runs"] else EXIT_OK


def cmd_verify(args) -> int:
    if args.suite not in SUITES and args.suite != "all":
        print(f"unknown suite {args.suite!r}; choose from {sorted(SUITES) + ['all']}", file=sys.stderr)
        return EXIT_INVALID
    results = run_suites(args.suite)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dronefusion", description="Quadrotor state-estimation scenarios.")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp):
        sp.add_argument("--config", required=True, help="JSON scenario file")
        sp.add_argument("--out", help="output directory (a fresh suffix is added if it is not empty)")
        sp.add_argument("--set", action="append", default=[], metavar="K=V", help="dotted override, repeatable")

    run = sub.add_parser("run", help="run one scenario")
    scenario_args(run)
    run.set_defaults(func=cmd_run)

    mc = sub.add_parser("montecarlo", help="run consecutive seeds and aggregate metrics")
    scenario_args(mc)
    mc.add_argument("--seeds", type=int, default=10, help="number of seeds, starting at the config seed")
    mc.add_argument("--jobs", type=int, default=1, help="worker processes")
    mc.set_defaults(func=cmd_montecarlo)

    ver = sub.add_parser("verify", help="run a built-in verification suite")
    ver.add_argument("suite", help="jacobians, linear-equivalence, consistency or all")
    ver.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"invalid configuration: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"cannot read input: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
