"""Full grid: m=1..6 targets against n=m..8 interceptors, both methods.

This is the large experiment (thousands of runs per cell in the original
setting); use --runs to scale it to the machine at hand.
"""

from __future__ import annotations

import argparse
import os
from pathlib import Path

from vtguide.harness import SweepSpec, emit_reports, paired_test, run_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description="m x n grid sweep, baseline vs virtual targets")
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-m", type=int, default=6)
    ap.add_argument("--max-n", type=int, default=8)
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default="results/grid")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for m in range(1, args.max_m + 1):
        spec = SweepSpec([m], range(m, args.max_n + 1), ["straight", "vt"], args.runs, args.seed)
        agg = run_sweep(spec, args.jobs)
        emit_reports(agg, out / f"m{m}.csv", out / f"m{m}.json")
        for n in spec.n_values:
            b, v = agg.cell(m, n, "straight"), agg.cell(m, n, "vt")
            if b.error or v.error:
                print(f"m={m} n={n}: failed ({b.error or v.error})")
                continue
            pc = paired_test(v.per_run_hits, b.per_run_hits)
            print(f"m={m} n={n}: baseline {b.fraction:.3f}  vt {v.fraction:.3f}  "
                  f"(vt wins {pc.wins_a}, baseline wins {pc.wins_b}, p={pc.p_value:.3g})")


if __name__ == "__main__":
    main()
