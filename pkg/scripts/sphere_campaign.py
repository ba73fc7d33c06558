"""GaBO vs Euclidean BO on Ackley over S^2, S^3 and S^4.

    python scripts/sphere_campaign.py --out results/spheres --trials 20 --iters 80
"""
import argparse
import sys

from gabo.cli import main as cli


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/spheres")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--iters", type=int, default=80)
    ap.add_argument("--dims", default="2,3,4")
    ap.add_argument("--jobs", type=int, default=0)
    args = ap.parse_args()

    code = 0
    for d in args.dims.split(","):
        print(f"== ackley-s{d}", flush=True)
        code |= cli(["run", "--benchmark", f"ackley-s{d}", "--method", "gabo,euclidean",
                     "--trials", str(args.trials), "--iters", str(args.iters),
                     "--jobs", str(args.jobs), "--out", f"{args.out}/s{d}"])
    return code


if __name__ == "__main__":
    sys.exit(main())
