"""GaBO vs Cholesky BO vs Euclidean BO on SPD benchmarks (eigenvalues in [1e-3, 5]).

    python scripts/spd_campaign.py --out results/spd --trials 15 --iters 150
"""
import argparse
import sys

from gabo.cli import main as cli


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/spd")
    ap.add_argument("--trials", type=int, default=15)
    ap.add_argument("--iters", type=int, default=150)
    ap.add_argument("--benchmarks", default="ackley-spd2,bimodal-spd2")
    ap.add_argument("--jobs", type=int, default=0)
    args = ap.parse_args()

    code = 0
    for name in args.benchmarks.split(","):
        print(f"== {name}", flush=True)
        code |= cli(["run", "--benchmark", name, "--method", "gabo,cholesky,euclidean",
                     "--trials", str(args.trials), "--iters", str(args.iters),
                     "--jobs", str(args.jobs), "--out", f"{args.out}/{name}"])
    return code


if __name__ == "__main__":
    sys.exit(main())
