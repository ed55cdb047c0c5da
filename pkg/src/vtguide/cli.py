"""Command line: single engagements, Monte Carlo sweeps and paired method comparisons."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import yaml

from .config import EngagementConfig, PredictionMethod, load_config
from .engagement import run_engagement
from .harness import (
    SweepSpec,
    cis_disjoint,
    csv_text,
    default_parallelism,
    emit_reports,
    paired_test,
    run_sweep,
)

# simple numeric overrides, flag --name-with-dashes -> config field
_OVERRIDES = {
    "nav_gain": float,
    "a_max": float,
    "f_sim": float,
    "f_pn": float,
    "f_zem": float,
    "n_t": int,
    "n_s": int,
    "d_endgame": float,
    "d_hit": float,
    "t_max": float,
}


def _add_config_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration")
    g.add_argument("--config", help="YAML or JSON file with engagement parameters")
    for name, typ in _OVERRIDES.items():
        g.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ, default=None)
    g.add_argument("--a-lat-max-target", type=float, default=None, help="target maneuver amplitude, m/s^2")
    g.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config key (value parsed as YAML), may repeat",
    )


def build_config(args: argparse.Namespace) -> EngagementConfig:
    cfg = load_config(args.config) if args.config else EngagementConfig()
    data = cfg.to_dict()
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        data[key.strip()] = yaml.safe_load(raw)
    for name in _OVERRIDES:
        v = getattr(args, name)
        if v is not None:
            data[name] = v
    if args.a_lat_max_target is not None:
        data["maneuver"] = {**data["maneuver"], "a_lat_max_target": args.a_lat_max_target}
    return EngagementConfig.from_dict(data).validate()


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = build_config(args).replace(
        m_targets=args.m, n_interceptors=args.n, prediction_method=PredictionMethod.parse(args.method)
    )
    res = run_engagement(cfg, args.seed, traj_out=args.traj_out)
    if args.json:
        print(json.dumps(res.to_dict(), indent=2))
        return 0
    print(f"method={cfg.prediction_method.value} m={cfg.m_targets} n={cfg.n_interceptors} seed={args.seed}")
    print(f"hits: {res.hits}/{cfg.m_targets}  (stopped at t={res.terminated_at:.3f} s)")
    for h in res.hit_records:
        print(f"  t={h.time:8.3f} s  interceptor {h.interceptor} -> target {h.target}  miss {h.miss:.2f} m")
    for i, d in enumerate(res.closest_approach):
        print(f"  interceptor {i}: closest approach {d:.2f} m")
    for note in res.notes:
        print(f"note: {note}")
    return 0


def _spec_from(args: argparse.Namespace, methods: Sequence[str]) -> SweepSpec:
    return SweepSpec(
        m_values=args.m,
        n_values=args.n,
        methods=[PredictionMethod.parse(v) for v in methods],
        n_mc=args.runs,
        base_seed=args.seed,
        base_config=build_config(args),
    ).validate()


def _progress(enabled: bool):
    if not enabled:
        return None

    def report(done: int, total: int) -> None:
        if done == total or done % max(1, total // 20) == 0:
            print(f"\r{done}/{total} runs", end="\n" if done == total else "", file=sys.stderr, flush=True)

    return report


def _report_failures(agg) -> int:
    for c in agg.failed:
        print(f"cell m={c.m} n={c.n} method={c.method} failed: {c.error}", file=sys.stderr)
    return 1 if agg.failed else 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = _spec_from(args, args.methods)
    agg = run_sweep(spec, args.jobs, progress=_progress(args.progress))
    emit_reports(agg, args.out_csv, args.out_json)
    if args.out_csv is None:
        sys.stdout.write(csv_text(agg))
    return _report_failures(agg)


def _cmd_compare(args: argparse.Namespace) -> int:
    spec = _spec_from(args, ["straight", "vt"])
    agg = run_sweep(spec, args.jobs, progress=_progress(args.progress))
    emit_reports(agg, args.out_csv, args.out_json)
    status = _report_failures(agg)
    print(f"{'m':>3} {'n':>3} {'baseline':>22} {'virtual target':>22} {'VT+':>5} {'B+':>5} {'p':>8}  CI-separated")
    for m in spec.m_values:
        for n in spec.n_values:
            b, v = agg.cell(m, n, "straight"), agg.cell(m, n, "vt")
            if b.error or v.error:
                continue
            pc = paired_test(v.per_run_hits, b.per_run_hits)
            sep = "vt>base" if cis_disjoint(v, b) else ("base>vt" if cis_disjoint(b, v) else "no")
            print(
                f"{m:>3} {n:>3} {b.fraction:6.3f} [{b.ci_lo:.3f},{b.ci_hi:.3f}] "
                f"{v.fraction:6.3f} [{v.ci_lo:.3f},{v.ci_hi:.3f}] {pc.wins_a:>5} {pc.wins_b:>5} {pc.p_value:8.4f}  {sep}"
            )
    return status


def _int_list(text: str) -> list[int]:
    """Accept '4', '1,2,3' or a range '4-8'."""
    out: list[int] = []
    for part in text.split(","):
        lo, dash, hi = part.partition("-")
        out.extend(range(int(lo), int(hi) + 1) if dash else [int(lo)])
    return out


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vtguide", description="Many-vs-many interceptor guidance simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one engagement")
    _add_config_args(p)
    p.add_argument("--m", type=int, default=1, help="number of targets")
    p.add_argument("--n", type=int, default=1, help="number of interceptors")
    p.add_argument("--method", default="vt", help="vt or straight")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--traj-out", help="write a per-step trajectory CSV here")
    p.add_argument("--json", action="store_true", help="print the full run result as JSON")
    p.set_defaults(func=_cmd_run)

    for name, func, helptext in (
        ("sweep", _cmd_sweep, "Monte Carlo grid over targets, interceptors and methods"),
        ("compare", _cmd_compare, "paired baseline vs virtual-target comparison"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_config_args(p)
        p.add_argument("--m", type=_int_list, default=[1], help="target counts, e.g. 2 or 1-6 or 2,4")
        p.add_argument("--n", type=_int_list, default=[1], help="interceptor counts, e.g. 4-8")
        if name == "sweep":
            p.add_argument("--methods", nargs="+", default=["straight", "vt"])
        p.add_argument("--runs", type=int, default=100, help="Monte Carlo runs per cell")
        p.add_argument("--seed", type=int, default=0, help="base seed")
        p.add_argument("--jobs", type=int, default=default_parallelism(), help="worker processes")
        p.add_argument("--out-csv")
        p.add_argument("--out-json")
        p.add_argument("--progress", action="store_true", help="report progress on stderr")
        p.set_defaults(func=func)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"vtguide: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
