"""Desk-scale trend run: m=2 gains from extra interceptors and the m=4 curve over n=4..8.

    python3 scripts/desk_trend.py --runs 200 --seed 20240601 --out results/desk
"""

from __future__ import annotations

import argparse
import os
import time
from pathlib import Path

from vtguide.harness import SweepSpec, cis_disjoint, emit_reports, paired_test, run_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default="results/desk")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    small = run_sweep(SweepSpec([2], [2, 5], ["straight", "vt"], args.runs, args.seed), args.jobs)
    large = run_sweep(SweepSpec([4], range(4, 9), ["vt"], args.runs, args.seed), args.jobs)
    wall = time.perf_counter() - t0
    emit_reports(small, out / "m2.csv", out / "m2.json")
    emit_reports(large, out / "m4.csv", out / "m4.json")

    vt5, vt2, sl2 = small.cell(2, 5, "vt"), small.cell(2, 2, "vt"), small.cell(2, 2, "straight")
    for name, lo in (("VT n=2", vt2), ("baseline n=2", sl2)):
        pc = paired_test(vt5.per_run_hits, lo.per_run_hits)
        print(f"m=2 VT n=5 {vt5.fraction:.3f} vs {name} {lo.fraction:.3f}: "
              f"wins {pc.wins_a}-{pc.wins_b}, p={pc.p_value:.4g}, CIs disjoint={cis_disjoint(vt5, lo)}")
    for c in large.cells:
        print(f"m=4 VT n={c.n}: {c.hits}/{c.possible} = {c.fraction:.3f} [{c.ci_lo:.3f}, {c.ci_hi:.3f}]")
    print(f"{args.runs * (len(small.cells) + len(large.cells))} runs in {wall:.0f} s")


if __name__ == "__main__":
    main()
