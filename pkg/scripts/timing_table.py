"""Per-iteration wall time of each method on spheres and SPD manifolds.

Runs sequentially (one job) so the numbers are comparable across methods.

    python scripts/timing_table.py --trials 3 --iters 20
"""
import argparse
import sys

from gabo.cli import main as cli

CASES = (("ackley-s2", "gabo,euclidean"), ("ackley-s3", "gabo,euclidean"),
         ("ackley-s4", "gabo,euclidean"), ("ackley-spd2", "gabo,cholesky,euclidean"),
         ("ackley-spd3", "gabo,cholesky,euclidean"))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/timing")
    ap.add_argument("--trials", type=int, default=3)
    ap.add_argument("--iters", type=int, default=20)
    args = ap.parse_args()

    code = 0
    for bench, methods in CASES:
        code |= cli(["timing", "--benchmark", bench, "--method", methods, "--trials",
                     str(args.trials), "--iters", str(args.iters), "--out", f"{args.out}/{bench}"])
    return code


if __name__ == "__main__":
    sys.exit(main())
