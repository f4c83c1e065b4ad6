"""Fixed-format MPS export/import and the external-solver file contract.

External solver contract: the command in ``$JUMUC_EXTERNAL_SOLVER`` is run
as ``<command> MODEL.mps SOLUTION.txt``.  It must write one ``NAME VALUE``
pair per line for the columns of the MPS file (missing columns read as 0)
and exit with status 0; a non-zero exit means no solution.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import sparse

from .model import LpModel

_SENSE_CODE = {">=": "G", "<=": "L", "=": "E"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}


def format_number(v: float) -> str:
    """Shortest text for ``v`` within the 12-character fixed-MPS field."""
    v = float(v)
    if v == int(v) and abs(v) < 1e12:
        s = str(int(v))
        if len(s) <= 12:
            return s
    s = repr(v)
    if len(s) <= 12:
        return s
    for p in range(12, 0, -1):
        s = f"{v:.{p}g}"
        if len(s) <= 12:
            return s
    raise ValueError(f"cannot format {v} in 12 characters")


def _line(f1="", f2="", f3="", f4="", f5="", f6="") -> str:
    s = " " + f1.ljust(2) + " " + f2.ljust(8) + "  " + f3.ljust(8) + "  " + f4.ljust(12)
    if f5:
        s += "   " + f5.ljust(8) + "  " + f6
    return s.rstrip()


def column_names(model: LpModel) -> list[str]:
    return [f"C{j:07d}" for j in range(model.shape[1])]


def row_names(model: LpModel) -> list[str]:
    return [f"R{i:07d}" for i in range(model.shape[0])]


def mps_text(model: LpModel) -> str:
    m, n = model.shape
    cols, rows = column_names(model), row_names(model)
    out = [f"NAME          {model.name[:8] or 'MODEL'}"]
    if model.maximize:
        out += ["OBJSENSE", "    MAX"]
    out.append("ROWS")
    out.append(_line("N", "OBJ"))
    for i, s in enumerate(model.senses):
        out.append(_line(_SENSE_CODE[s], rows[i]))
    out.append("COLUMNS")
    A = model.A.tocsc()
    integer = model.integrality if model.integrality is not None else np.zeros(n, bool)
    in_int = False
    marker = 0
    for j in range(n):
        if integer[j] and not in_int:
            out.append(_line("", f"M{marker:07d}", "'MARKER'", "", "'INTORG'"))
            marker += 1
            in_int = True
        elif not integer[j] and in_int:
            out.append(_line("", f"M{marker:07d}", "'MARKER'", "", "'INTEND'"))
            marker += 1
            in_int = False
        entries = []
        if model.c[j] != 0.0:
            entries.append(("OBJ", model.c[j]))
        start, end = A.indptr[j], A.indptr[j + 1]
        for i, v in zip(A.indices[start:end], A.data[start:end]):
            if v != 0.0:
                entries.append((rows[i], v))
        if not entries:
            entries.append(("OBJ", 0.0))  # every column must appear
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            if len(pair) == 2:
                out.append(_line("", cols[j], pair[0][0], format_number(pair[0][1]),
                                 pair[1][0], format_number(pair[1][1])))
            else:
                out.append(_line("", cols[j], pair[0][0], format_number(pair[0][1])))
    if in_int:
        out.append(_line("", f"M{marker:07d}", "'MARKER'", "", "'INTEND'"))
    out.append("RHS")
    rhs = [("OBJ", -model.offset)] if model.offset else []
    rhs += [(rows[i], v) for i, v in enumerate(model.rhs) if v != 0.0]
    for k in range(0, len(rhs), 2):
        pair = rhs[k:k + 2]
        fields = ["", "RHS", pair[0][0], format_number(pair[0][1])]
        if len(pair) == 2:
            fields += [pair[1][0], format_number(pair[1][1])]
        out.append(_line(*fields))
    out.append("BOUNDS")
    for j in range(n):
        lo, hi = model.lb[j], model.ub[j]
        if lo == hi:
            out.append(_line("FX", "BND", cols[j], format_number(lo)))
            continue
        if not np.isfinite(lo) and not np.isfinite(hi):
            out.append(_line("FR", "BND", cols[j]))
            continue
        if not np.isfinite(lo):
            out.append(_line("MI", "BND", cols[j]))
        elif lo != 0.0 or integer[j] or hi < 0:
            out.append(_line("LO", "BND", cols[j], format_number(lo)))
        if np.isfinite(hi):
            out.append(_line("UP", "BND", cols[j], format_number(hi)))
        elif integer[j]:
            out.append(_line("PL", "BND", cols[j]))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def write_mps(model: LpModel, path: str | Path) -> list[str]:
    """Write ``model`` in fixed MPS format; returns the column names used."""
    Path(path).write_text(mps_text(model))
    return column_names(model)


class MpsError(ValueError):
    pass


def parse_mps(text: str) -> LpModel:
    section = None
    maximize = False
    obj_row = None
    row_order: list[str] = []
    senses: dict[str, str] = {}
    col_order: list[str] = []
    col_index: dict[str, int] = {}
    coefs: dict[tuple[str, int], float] = {}
    cost: dict[int, float] = {}
    rhs: dict[str, float] = {}
    offset = 0.0
    bounds: dict[int, list[float]] = {}
    integer: set[int] = set()
    in_int = False
    name = "MODEL"

    def col(cname):
        if cname not in col_index:
            col_index[cname] = len(col_order)
            col_order.append(cname)
        return col_index[cname]

    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0].upper()
            if section == "NAME":
                name = head[1] if len(head) > 1 else name
            elif section == "OBJSENSE" and len(head) > 1:
                maximize = head[1].upper() == "MAX"
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "OBJSENSE"):
                raise MpsError(f"line {lineno}: unsupported section {section}")
            continue
        tok = raw.split()
        if section == "OBJSENSE":
            maximize = tok[0].upper() == "MAX"
        elif section == "ROWS":
            code, rname = tok[0].upper(), tok[1]
            if code == "N":
                if obj_row is None:
                    obj_row = rname
            elif code in _CODE_SENSE:
                senses[rname] = _CODE_SENSE[code]
                row_order.append(rname)
            else:
                raise MpsError(f"line {lineno}: unknown row type {code}")
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                in_int = tok[2] == "'INTORG'"
                continue
            j = col(tok[0])
            if in_int:
                integer.add(j)
                bounds.setdefault(j, [0.0, np.inf])
            for rname, val in zip(tok[1::2], tok[2::2]):
                v = float(val)
                if rname == obj_row:
                    cost[j] = cost.get(j, 0.0) + v
                elif rname in senses:
                    coefs[(rname, j)] = coefs.get((rname, j), 0.0) + v
                else:
                    raise MpsError(f"line {lineno}: unknown row {rname}")
        elif section == "RHS":
            pairs = tok[1:] if len(tok) % 2 == 1 else tok
            for rname, val in zip(pairs[0::2], pairs[1::2]):
                if rname == obj_row:
                    offset = -float(val)
                else:
                    rhs[rname] = float(val)
        elif section == "BOUNDS":
            kind = tok[0].upper()
            j = col(tok[2])
            b = bounds.setdefault(j, [0.0, np.inf])
            val = float(tok[3]) if len(tok) > 3 else None
            if kind == "UP":
                b[1] = val
            elif kind == "LO":
                b[0] = val
            elif kind == "FX":
                b[0] = b[1] = val
            elif kind == "FR":
                b[0], b[1] = -np.inf, np.inf
            elif kind == "MI":
                b[0] = -np.inf
            elif kind == "PL":
                b[1] = np.inf
            elif kind == "BV":
                b[0], b[1] = 0.0, 1.0
                integer.add(j)
            else:
                raise MpsError(f"line {lineno}: unsupported bound type {kind}")
    n, m = len(col_order), len(row_order)
    ridx = {r: i for i, r in enumerate(row_order)}
    if coefs:
        keys = list(coefs)
        A = sparse.csr_matrix(([coefs[k] for k in keys], ([ridx[k[0]] for k in keys], [k[1] for k in keys])),
                              shape=(m, n))
    else:
        A = sparse.csr_matrix((m, n))
    lb = np.array([bounds.get(j, [0.0, np.inf])[0] for j in range(n)])
    ub = np.array([bounds.get(j, [0.0, np.inf])[1] for j in range(n)])
    integrality = np.array([j in integer for j in range(n)]) if integer else None
    return LpModel(A, [senses[r] for r in row_order], np.array([rhs.get(r, 0.0) for r in row_order]),
                   np.array([cost.get(j, 0.0) for j in range(n)]), lb, ub, maximize, offset,
                   integrality, tuple(col_order), tuple(row_order), name)


def read_mps(path: str | Path) -> LpModel:
    return parse_mps(Path(path).read_text())


def write_solution(path: str | Path, names: list[str], x) -> None:
    Path(path).write_text("".join(f"{nm} {float(v)!r}\n" for nm, v in zip(names, x)))


def read_solution(path: str | Path, names: list[str]) -> np.ndarray:
    idx = {nm: j for j, nm in enumerate(names)}
    x = np.zeros(len(names))
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if len(parts) >= 2 and parts[0] in idx:
            x[idx[parts[0]]] = float(parts[1])
    return x
