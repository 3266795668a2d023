"""Run every bundled recipe into one directory, one subdirectory per recipe.

    python scripts/reproduce_figures.py [OUTDIR] [--jobs N]
"""
import argparse
import sys
import time
from pathlib import Path

from mollow.cli import main
from mollow.config import recipe_names


def run(outdir: Path, jobs: int) -> int:
    failed = []
    for name in recipe_names():
        t0 = time.perf_counter()
        code = main(["reproduce", name, "-o", str(outdir / name), "--svg", "-j", str(jobs)])
        print(f"{name:8s} exit {code}  {time.perf_counter() - t0:6.1f} s")
        if code:
            failed.append(name)
    if failed:
        print("failed:", " ".join(failed), file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", nargs="?", default="figures")
    ap.add_argument("--jobs", "-j", type=int, default=1)
    a = ap.parse_args()
    sys.exit(run(Path(a.outdir), a.jobs))
