"""Regenerate every published table as markdown (stdout) and CSV (results dir).

    python3 scripts/reproduce_tables.py --out results --samples 10000000
"""

import argparse
import pathlib
import time

from homvol.cli import main


def run(which, fmt, extra, out=None):
    argv = ["tables", "--which", which, "--format", fmt, *extra]
    if out is not None:
        argv += ["--out", str(out)]
    code = main(argv)
    if code != 0:
        raise SystemExit(f"tables --which {which} exited with {code}")


def cli():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("results"))
    ap.add_argument("--samples", default="10000000", help="Monte Carlo draws for the Wald table")
    ap.add_argument("--seed", default="20170707")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for which in ("thm1", "thm2", "coro1", "wald"):
        extra = ["--samples", args.samples, "--seed", args.seed] if which == "wald" else []
        start = time.perf_counter()
        print(f"## {which}\n")
        run(which, "markdown", extra)
        run(which, "csv", extra, args.out / f"{which}.csv")
        print(f"\n({time.perf_counter() - start:.1f}s)\n")


if __name__ == "__main__":
    cli()
