"""Solve one case in the four comparison modes and tabulate the cost breakdowns.

    python scripts/run_comparison.py --case small5 --gamma-d 0.2N --gamma-w 0.2N --out runs/compare
"""
from __future__ import annotations

import argparse
from pathlib import Path

from jumuc.cli import main as cli

MODES = ["deterministic-decoupled", "deterministic-joint", "robust-decoupled", "iccg"]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", default="small5")
    ap.add_argument("--gamma-d", default="0.2N")
    ap.add_argument("--gamma-w", default="0.2N")
    ap.add_argument("--error-frac", default="0.1")
    ap.add_argument("--backend", default="highs")
    ap.add_argument("--out", default="runs/compare")
    args = ap.parse_args(argv)
    out = Path(args.out)
    dirs, worst = [], 0
    for mode in MODES:
        run_dir = out / mode
        worst = max(worst, cli(["solve", "--case", args.case, "--mode", mode, "--gamma-d", args.gamma_d,
                                "--gamma-w", args.gamma_w, "--error-frac", args.error_frac,
                                "--backend", args.backend, "--out", str(run_dir), "--verify"]))
        dirs.append(str(run_dir))
    cli(["compare", *dirs, "--out", str(out)])
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
