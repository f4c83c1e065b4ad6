"""Sweep the initial master gap and shrink factor of i-C&CG against exact C&CG.

    python scripts/run_sweep.py --case small5 --jobs 4 --out runs/sweep
"""
from __future__ import annotations

import argparse

from jumuc.cli import main as cli


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", default="small5")
    ap.add_argument("--gamma-d", default="0.2N")
    ap.add_argument("--gamma-w", default="0.2N")
    ap.add_argument("--eps-grid", default="0.008,0.001")
    ap.add_argument("--alpha-grid", default="0.9,0.2")
    ap.add_argument("--repeats", default="1")
    ap.add_argument("--jobs", default="1")
    ap.add_argument("--out", default="runs/sweep")
    args = ap.parse_args(argv)
    return cli(["compare", "--sweep", "--case", args.case, "--gamma-d", args.gamma_d, "--gamma-w", args.gamma_w,
                "--eps-grid", args.eps_grid, "--alpha-grid", args.alpha_grid, "--repeats", args.repeats,
                "--jobs", args.jobs, "--out", args.out])


if __name__ == "__main__":
    raise SystemExit(main())
