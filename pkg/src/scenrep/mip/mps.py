"""MPS file writing and parsing.

Deterministic naming (R0001..., C0001..., objective row OBJ); integer
columns wrapped in INTORG/INTEND marker pairs; bounds written explicitly
for every variable so reader defaults never matter. Values are emitted
with shortest round-trip repr, so write -> parse reproduces the problem
exactly.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..errors import BackendError, ModelError
from .model import SENSE_EQ, SENSE_GE, SENSE_LE, MipProblem

_SENSE_TO_MPS = {SENSE_LE: "L", SENSE_GE: "G", SENSE_EQ: "E"}


def _row_name(i: int) -> str:
    return f"R{i + 1:04d}"


def _col_name(j: int) -> str:
    return f"C{j + 1:04d}"


def _num(v: float) -> str:
    return repr(float(v))


def write_mps(problem: MipProblem, path) -> None:
    """Write the problem in MPS format with deterministic names."""
    A = problem.A.tocsc()
    lines = [f"NAME          {problem.name}", "ROWS", " N  OBJ"]
    for i, sense in enumerate(problem.senses):
        lines.append(f" {_SENSE_TO_MPS[str(sense)]}  {_row_name(i)}")

    lines.append("COLUMNS")
    in_integer_block = False
    marker = 0
    for j in range(problem.n_vars):
        if bool(problem.is_integer[j]) != in_integer_block:
            kind = "INTORG" if not in_integer_block else "INTEND"
            lines.append(f"    MARKER{marker:04d}  'MARKER'                 '{kind}'")
            in_integer_block = not in_integer_block
            marker += 1
        col = _col_name(j)
        entries = []
        if problem.c[j] != 0.0:
            entries.append(("OBJ", problem.c[j]))
        start, end = A.indptr[j], A.indptr[j + 1]
        order = np.argsort(A.indices[start:end], kind="stable")
        for k in order:
            entries.append((_row_name(int(A.indices[start + k])), A.data[start + k]))
        if not entries:
            entries.append(("OBJ", 0.0))  # declare otherwise-empty columns
        for row, val in entries:
            lines.append(f"    {col:<10}{row:<10}{_num(val)}")
    if in_integer_block:
        lines.append(f"    MARKER{marker:04d}  'MARKER'                 'INTEND'")

    lines.append("RHS")
    for i, r in enumerate(problem.rhs):
        if r != 0.0:
            lines.append(f"    RHS1      {_row_name(i):<10}{_num(r)}")

    lines.append("BOUNDS")
    for j in range(problem.n_vars):
        col = _col_name(j)
        lo, hi = problem.lo[j], problem.hi[j]
        if lo == hi:
            lines.append(f" FX BND1      {col:<10}{_num(lo)}")
            continue
        if np.isneginf(lo):
            lines.append(f" MI BND1      {col}")
        elif lo != 0.0:
            lines.append(f" LO BND1      {col:<10}{_num(lo)}")
        if np.isposinf(hi):
            lines.append(f" PL BND1      {col}")
        else:
            lines.append(f" UP BND1      {col:<10}{_num(hi)}")

    lines.append("ENDATA")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mps(path) -> MipProblem:
    """Parse an MPS file written by :func:`write_mps` (free-format fields)."""
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    obj_row = None
    col_order: list[str] = []
    col_integer: dict[str, bool] = {}
    col_entries: dict[str, list[tuple[str, float]]] = {}
    rhs: dict[str, float] = {}
    bounds: dict[str, list] = {}

    section = None
    in_integer_block = False
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("*"):
                continue
            if not line.startswith(" "):
                section = line.split()[0]
                continue
            parts = line.split()
            try:
                if section == "ROWS":
                    kind, name = parts[0], parts[1]
                    if kind == "N":
                        obj_row = name
                    else:
                        row_sense[name] = kind
                        row_order.append(name)
                elif section == "COLUMNS":
                    if len(parts) >= 3 and parts[1] == "'MARKER'":
                        in_integer_block = parts[2] == "'INTORG'"
                        continue
                    col = parts[0]
                    if col not in col_entries:
                        col_order.append(col)
                        col_entries[col] = []
                        col_integer[col] = in_integer_block
                    for k in range(1, len(parts) - 1, 2):
                        col_entries[col].append((parts[k], float(parts[k + 1])))
                elif section == "RHS":
                    for k in range(1, len(parts) - 1, 2):
                        rhs[parts[k]] = float(parts[k + 1])
                elif section == "BOUNDS":
                    kind, col = parts[0], parts[2]
                    bounds.setdefault(col, []).append(
                        (kind, float(parts[3]) if len(parts) > 3 else None))
                elif section == "ENDATA":
                    break
            except (IndexError, ValueError) as exc:
                raise BackendError(f"{path}:{lineno}: cannot parse MPS line {line!r}: {exc}") from exc

    if obj_row is None:
        raise BackendError(f"{path}: no objective (N) row found")
    n = len(col_order)
    m = len(row_order)
    if n == 0:
        raise BackendError(f"{path}: no columns found")
    row_index = {name: i for i, name in enumerate(row_order)}
    col_index = {name: j for j, name in enumerate(col_order)}

    c = np.zeros(n)
    coo_r, coo_c, coo_v = [], [], []
    for col, entries in col_entries.items():
        j = col_index[col]
        for row, val in entries:
            if row == obj_row:
                c[j] += val
            elif row in row_index:
                coo_r.append(row_index[row])
                coo_c.append(j)
                coo_v.append(val)
            else:
                raise BackendError(f"{path}: unknown row {row!r} in COLUMNS")
    A = sp.coo_matrix((coo_v, (coo_r, coo_c)), shape=(m, n)).tocsr()

    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    for col, items in bounds.items():
        if col not in col_index:
            raise BackendError(f"{path}: bound on unknown column {col!r}")
        j = col_index[col]
        for kind, val in items:
            if kind == "FX":
                lo[j] = hi[j] = val
            elif kind == "LO":
                lo[j] = val
            elif kind == "UP":
                hi[j] = val
            elif kind == "MI":
                lo[j] = -np.inf
            elif kind == "PL":
                hi[j] = np.inf
            elif kind == "FR":
                lo[j], hi[j] = -np.inf, np.inf
            elif kind == "BV":
                lo[j], hi[j] = 0.0, 1.0
            else:
                raise BackendError(f"{path}: unsupported bound type {kind!r}")

    try:
        return MipProblem(
            c=c, A=A,
            senses=np.array([row_sense[name] for name in row_order], dtype="<U1"),
            rhs=np.array([rhs.get(name, 0.0) for name in row_order]),
            lo=lo, hi=hi,
            is_integer=np.array([col_integer[name] for name in col_order], dtype=bool),
        )
    except ModelError as exc:
        raise BackendError(f"{path}: parsed problem invalid: {exc}") from exc
