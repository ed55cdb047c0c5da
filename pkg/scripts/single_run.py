"""One engagement with a trajectory dump, for plotting or eyeballing.

    python3 scripts/single_run.py --m 2 --n 4 --seed 3 --traj run.csv
"""

import argparse

from vtguide import EngagementConfig, PredictionMethod, run_engagement


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--method", default="vt")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--traj", default="trajectory.csv")
    args = ap.parse_args()
    cfg = EngagementConfig(m_targets=args.m, n_interceptors=args.n, prediction_method=PredictionMethod.parse(args.method))
    res = run_engagement(cfg.validate(), args.seed, traj_out=args.traj)
    print(f"{res.hits}/{args.m} targets hit, stopped at {res.terminated_at:.2f} s; trajectory in {args.traj}")
    for e in res.events:
        print(f"  {e.time:8.3f} s  {e.kind:8s} interceptor {e.interceptor} target {e.target}  d={e.distance:.1f} m")


if __name__ == "__main__":
    main()
