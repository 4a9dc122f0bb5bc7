"""Run the three studies with default settings into results/<study>/.

    python scripts/reproduce.py [--seed N] [--out DIR]
"""
import argparse
import sys

from laserweed.cli import main


def run(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", default="0")
    p.add_argument("--out", default="results")
    args = p.parse_args(argv)
    for study in ("stability", "sweep", "accuracy"):
        print(f"== {study}")
        code = main([study, "--seed", args.seed, "--out", f"{args.out}/{study}"])
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
