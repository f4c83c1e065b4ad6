"""Command-line front end.

    jumuc solve --case tiny3 --mode iccg --gamma-d 1 --gamma-w 0 --out runs/tiny3
    jumuc compare runs/a runs/b ...
    jumuc compare --sweep --case small5 --eps-grid 0.008,0.001 --alpha-grid 0.9,0.2 --out runs/sweep

Exit codes: 0 ok, 1 invalid arguments or inputs, 2 infeasible model,
3 not converged within the caps (artifacts are still written).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys as _sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .driver import MODES, SolverConfig, run
from .master import MasterInfeasibleError
from .report import verify_document, write_artifacts
from .system import CaseParseError, CaseValidationError, load_case, resolve_case

EXIT_OK, EXIT_ARGS, EXIT_INFEASIBLE, EXIT_NOT_CONVERGED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(_sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def _budget(text: str):
    """A budget is absolute ("1", "0.8") or relative to the entity count ("0.2N")."""
    s = text.strip()
    try:
        return float(s)
    except ValueError:
        if s.upper().endswith("N"):
            float(s[:-1] or 1.0)
            return s
        raise argparse.ArgumentTypeError(f"invalid budget {text!r}")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    d = SolverConfig()
    p.add_argument("--mode", choices=MODES, default="iccg")
    p.add_argument("--gamma-d", type=_budget, default=0.0)
    p.add_argument("--gamma-w", type=_budget, default=0.0)
    p.add_argument("--error-frac", type=float, default=d.error_frac)
    p.add_argument("--delta", type=float, default=d.delta)
    p.add_argument("--delta-tilde", type=float, default=d.delta_tilde)
    p.add_argument("--delta-oa", type=float, default=d.delta_oa)
    p.add_argument("--eps-mp", type=float, default=d.eps_mp)
    p.add_argument("--alpha-shrink", type=float, default=d.alpha_shrink)
    p.add_argument("--max-iter", type=int, default=d.max_iter)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--time-limit", type=float, default=float("inf"))
    p.add_argument("--backend", choices=("highs", "bnb", "external"), default="highs")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="jumuc", description="Robust joint unit maintenance and unit commitment.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("solve", help="solve one case in one mode")
    s.add_argument("--case", required=True, help="case file path or bundled case name")
    _add_solver_flags(s)
    s.add_argument("--out", default=None, help="output directory (default runs/<case>-<mode>)")
    s.add_argument("--verify", action="store_true", help="re-derive the report from the raw artifacts")
    c = sub.add_parser("compare", help="tabulate completed runs or run an (eps_mp, alpha) sweep")
    c.add_argument("runs", nargs="*", help="run directories")
    c.add_argument("--sweep", action="store_true")
    c.add_argument("--case", default=None)
    _add_solver_flags(c)
    c.add_argument("--eps-grid", type=_floats, default=[0.008, 0.001])
    c.add_argument("--alpha-grid", type=_floats, default=[0.9, 0.2])
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--out", default=None)
    return ap


def config_from_args(args, **override) -> SolverConfig:
    fields = dict(mode=args.mode, delta=args.delta, delta_tilde=args.delta_tilde, delta_oa=args.delta_oa,
                  eps_mp=args.eps_mp, alpha_shrink=args.alpha_shrink, gamma_d=args.gamma_d, gamma_w=args.gamma_w,
                  error_frac=args.error_frac, max_iter=args.max_iter, time_limit=args.time_limit, seed=args.seed,
                  backend=args.backend)
    fields.update(override)
    return SolverConfig(**fields)


def write_manifest(out: Path, case_path: Path, cfg: SolverConfig) -> dict:
    data = case_path.read_bytes()
    manifest = {"case": str(case_path), "mode": cfg.mode, "config": cfg.to_dict(), "out": str(out),
                "version": __version__, "case_sha256": hashlib.sha256(data).hexdigest()}
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    return manifest


def solve_case(case: str, cfg: SolverConfig, out: Path, verify: bool = False) -> tuple[int, dict | None]:
    """Run one case; returns (exit code, solution document)."""
    path = resolve_case(case)
    write_manifest(out, path, cfg)
    system = load_case(path)
    try:
        sol = run(system, cfg)
    except MasterInfeasibleError as exc:
        (out / "error.txt").write_text(str(exc) + "\n")
        print(f"infeasible: {exc}", file=_sys.stderr)
        return EXIT_INFEASIBLE, None
    doc = write_artifacts(out, system, sol, cfg)
    if verify:
        problems = verify_document(system, doc)
        if problems:
            for p in problems:
                print(f"verify: {p}", file=_sys.stderr)
            return EXIT_ARGS, doc
    return (EXIT_OK if sol.converged else EXIT_NOT_CONVERGED), doc


def cmd_solve(args) -> int:
    try:
        cfg = config_from_args(args)
        path = resolve_case(args.case)
    except (ValueError, FileNotFoundError) as exc:
        print(f"jumuc: error: {exc}", file=_sys.stderr)
        return EXIT_ARGS
    out = Path(args.out or f"runs/{path.stem}-{cfg.mode}")
    try:
        code, doc = solve_case(args.case, cfg, out, args.verify)
    except (CaseParseError, CaseValidationError) as exc:
        print(f"jumuc: invalid case: {exc}", file=_sys.stderr)
        return EXIT_ARGS
    if doc is not None:
        c = doc["costs_k"]
        print(f"{doc['case']} {doc['mode']}: total {c['total']:.2f} k$ (maintenance {c['maintenance']:.2f}, "
              f"commitment {c['commitment']:.2f}, dispatch {c['dispatch']:.2f}); "
              f"schedule {doc['maintenance_schedule']}; {'converged' if doc['converged'] else 'NOT converged'}; "
              f"artifacts in {out}")
    return code


def cost_table(docs: list[tuple[str, dict]]) -> list[list[str]]:
    header = ["row"] + [label for label, _ in docs]
    rows = [header]
    for key, title in (("maintenance", "Maintenance Cost (k$)"), ("commitment", "Commitment Cost (k$)"),
                       ("dispatch", "Dispatch Cost (k$)"), ("total", "Total Cost (k$)")):
        rows.append([title] + [f"{d['costs_k'][key]:.2f}" for _, d in docs])
    units = []
    for _, d in docs:
        for u in d["maintenance_schedule"]:
            if u not in units:
                units.append(u)
    for u in units:
        rows.append([f"Schedule {u}"] + [d["maintenance_schedule"].get(u, "-") for _, d in docs])
    return rows


def _print_table(rows: list[list[str]]) -> None:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(cell.rjust(w) if i else cell.ljust(w) for i, (cell, w) in enumerate(zip(r, widths))))


def _write_csv(path: Path, rows: list[list[str]]) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)


def _sweep_cell(job):
    case, cfg_dict, out = job
    cfg = SolverConfig(**cfg_dict)
    t0 = time.monotonic()
    code, doc = solve_case(case, cfg, Path(out))
    return code, (doc["raw"]["costs_usd"]["total"] if doc else float("nan")), time.monotonic() - t0


def cmd_compare(args) -> int:
    if args.sweep:
        if not args.case:
            print("jumuc: error: --sweep needs --case", file=_sys.stderr)
            return EXIT_ARGS
        out = Path(args.out or "runs/sweep")
        cells = [(f"i-C&CG eps={e:g} alpha={a:g}", dict(mode="iccg", eps_mp=e, alpha_shrink=a))
                 for e in args.eps_grid for a in args.alpha_grid] + [("C&CG", dict(mode="ccg"))]
        jobs, labels = [], []
        for i, (label, over) in enumerate(cells):
            cfg = config_from_args(args, **over)
            for r in range(max(1, args.repeats)):
                jobs.append((args.case, cfg.to_dict(), str(out / f"cell{i}" / f"rep{r}")))
                labels.append(label)
        if args.jobs > 1:
            with ProcessPoolExecutor(args.jobs) as pool:
                results = list(pool.map(_sweep_cell, jobs))
        else:
            results = [_sweep_cell(j) for j in jobs]
        agg: dict[str, list] = {}
        worst = EXIT_OK
        for label, (code, total, wall) in zip(labels, results):
            agg.setdefault(label, []).append((total, wall))
            worst = max(worst, code)
        rows = [["row"] + list(agg)]
        rows.append(["Total Cost (k$)"] + [f"{sum(t for t, _ in v) / len(v) / 1000:.2f}" for v in agg.values()])
        rows.append(["Solution Time (s)"] + [f"{sum(w for _, w in v) / len(v):.2f}" for v in agg.values()])
        _print_table(rows)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "sweep.csv", rows)
        return worst
    if not args.runs:
        print("jumuc: error: give run directories or --sweep", file=_sys.stderr)
        return EXIT_ARGS
    missing = [r for r in args.runs if not (Path(r) / "solution.json").is_file()]
    if missing:
        print("jumuc: error: missing or incomplete run directories: " + ", ".join(missing), file=_sys.stderr)
        return EXIT_ARGS
    docs = []
    for r in args.runs:
        doc = json.loads((Path(r) / "solution.json").read_text())
        name = Path(r).name
        docs.append((name if name == doc["mode"] else f"{name} ({doc['mode']})", doc))
    rows = cost_table(docs)
    _print_table(rows)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        _write_csv(Path(args.out) / "comparison.csv", rows)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "solve":
        return cmd_solve(args)
    return cmd_compare(args)


if __name__ == "__main__":
    raise SystemExit(main())
