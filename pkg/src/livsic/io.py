"""File formats.

JSON files carry complex numbers as ``[re, im]`` pairs.  The colligation
writer is canonical: parsing a file it produced and writing it again gives
byte-identical output.  CSV files are UTF-8 with a header row.
"""

from __future__ import annotations

import csv
import io
import json
import re
from pathlib import Path

import numpy as np

from .colligation import Colligation, SignatureOperator, validate
from .errors import ParseError
from .factorize import BlaschkeProduct, check_constraints
from .models import ContinuousModelData, DiscreteModelData
from .multint import StieltjesWeight

COLLIGATION_SCHEMA = "livsic.colligation/1"
BLASCHKE_SCHEMA = "livsic.blaschke/1"


def _num(x: float) -> str:
    return json.dumps(float(x))


def _cnum(z: complex) -> str:
    return f"[{_num(z.real)}, {_num(z.imag)}]"


def _matrix_lines(M: np.ndarray, indent: str) -> str:
    if M.shape[0] == 0:
        return "[]"
    rows = ["[" + ", ".join(_cnum(complex(v)) for v in row) + "]" for row in M]
    inner = (",\n" + indent + "  ").join(rows)
    return "[\n" + indent + "  " + inner + "\n" + indent + "]"


def dumps_colligation(c: Colligation) -> str:
    """Canonical JSON text of a colligation."""
    parts = [
        f'  "schema": {json.dumps(COLLIGATION_SCHEMA)}',
        f'  "n": {c.n}',
        f'  "r": {c.r}',
        f'  "A": {_matrix_lines(c.A, "  ")}',
        f'  "Phi": {_matrix_lines(c.Phi, "  ")}',
        f'  "J": [{", ".join(str(s) for s in c.J.signs)}]',
    ]
    return "{\n" + ",\n".join(parts) + "\n}\n"


def _load_json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def parse_complex_matrix(obj, rows: int | None = None, cols: int | None = None, name: str = "matrix") -> np.ndarray:
    """Nested list of ``[re, im]`` pairs (or real numbers) to a complex array."""
    if not isinstance(obj, list):
        raise ParseError(f"{name} must be a list of rows")
    out = []
    for i, row in enumerate(obj):
        if not isinstance(row, list):
            raise ParseError(f"{name} row {i} must be a list")
        vals = []
        for j, v in enumerate(row):
            vals.append(_parse_complex(v, f"{name}[{i}][{j}]"))
        out.append(vals)
    widths = {len(r) for r in out}
    if len(widths) > 1:
        raise ParseError(f"{name} has ragged rows")
    ncols = widths.pop() if widths else 0
    M = np.array(out, dtype=np.complex128).reshape(len(out), ncols)
    if rows is not None and M.shape[0] != rows:
        raise ParseError(f"{name} has {M.shape[0]} rows, expected {rows}")
    if cols is not None and M.shape[0] and M.shape[1] != cols:
        raise ParseError(f"{name} has {M.shape[1]} columns, expected {cols}")
    if cols is not None and M.shape[0] == 0:
        M = M.reshape(0, cols)
    return M


def _parse_complex(v, where: str) -> complex:
    if isinstance(v, bool):
        raise ParseError(f"{where}: expected a number")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    raise ParseError(f"{where}: expected [re, im]")


def loads_colligation(text: str, source: str = "<string>", tol: float = 1e-8) -> Colligation:
    """Parse a colligation file and check the colligation identity at `tol`."""
    obj = _load_json(text, source)
    if not isinstance(obj, dict):
        raise ParseError(f"{source}: top level must be an object")
    if obj.get("schema") != COLLIGATION_SCHEMA:
        raise ParseError(f"{source}: unknown schema {obj.get('schema')!r}")
    try:
        n, r = int(obj["n"]), int(obj["r"])
        A = parse_complex_matrix(obj["A"], n, n, "A").reshape(n, n)
        Phi = parse_complex_matrix(obj["Phi"], r, n, "Phi").reshape(r, n)
        J = obj["J"]
    except KeyError as exc:
        raise ParseError(f"{source}: missing field {exc.args[0]!r}") from exc
    if not isinstance(J, list) or len(J) != r or any(s not in (1, -1) for s in J):
        raise ParseError(f"{source}: J must be a list of {r} entries +1/-1")
    c = Colligation(A, Phi, SignatureOperator(tuple(J)))
    rep = validate(c, tol)
    if not rep.passed:
        raise ParseError(f"{source}: colligation identity residual {rep.colligation_residual:.3e} exceeds {rep.threshold:.3e}")
    return c


def read_colligation(path: str, tol: float = 1e-8) -> Colligation:
    return loads_colligation(_read(path), path, tol)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc


def read_matrix(path: str) -> np.ndarray:
    """Square matrix from a JSON file: a nested list or an object with key ``A``."""
    obj = _load_json(_read(path), path)
    if isinstance(obj, dict):
        if "A" not in obj:
            raise ParseError(f"{path}: expected key 'A'")
        obj = obj["A"]
    M = parse_complex_matrix(obj, name="A")
    if M.shape[0] != M.shape[1]:
        raise ParseError(f"{path}: matrix must be square, got {M.shape}")
    return M


def blaschke_to_json(bp: BlaschkeProduct, Phi: np.ndarray | None = None) -> str:
    rep = check_constraints(bp, Phi)
    obj = {
        "schema": BLASCHKE_SCHEMA,
        "J": list(bp.J.signs),
        "factors": [
            {"lambda": [f.lam.real, f.lam.imag], "eta": [[complex(v).real, complex(v).imag] for v in f.eta]}
            for f in bp.factors
        ],
        "constraints": {
            "eta_residual": rep.eta_residual,
            "gram_residual": None if np.isnan(rep.gram_residual) else rep.gram_residual,
            "trace_slack": rep.trace_slack,
        },
    }
    return json.dumps(obj, indent=2) + "\n"


def read_discrete(path: str) -> tuple[DiscreteModelData, tuple[int, ...] | None]:
    """Discrete model data: a list of ``{lambda, eta}`` or an object with ``factors`` (and optional ``J``)."""
    obj = _load_json(_read(path), path)
    J = None
    if isinstance(obj, dict):
        J = tuple(obj["J"]) if "J" in obj else None
        obj = obj.get("factors")
    if not isinstance(obj, list):
        raise ParseError(f"{path}: expected a list of {{lambda, eta}} entries")
    lams, etas = [], []
    for k, item in enumerate(obj):
        if not isinstance(item, dict) or "lambda" not in item or "eta" not in item:
            raise ParseError(f"{path}: entry {k} needs 'lambda' and 'eta'")
        lams.append(_parse_complex(item["lambda"], f"entry {k} lambda"))
        eta = item["eta"]
        if not isinstance(eta, list):
            raise ParseError(f"{path}: entry {k} eta must be a list")
        etas.append([_parse_complex(v, f"entry {k} eta") for v in eta])
    if len({len(e) for e in etas}) > 1:
        raise ParseError(f"{path}: etas have different lengths")
    r = len(etas[0]) if etas else (len(J) if J else 0)
    return DiscreteModelData(np.array(lams, complex), np.array(etas, complex).reshape(len(etas), r)), J


_XI = re.compile(r"^xi_(\d+)_(\d+)_(re|im)$")
_H = re.compile(r"^H_(\d+)_(\d+)_(re|im)$")


def _read_csv(path: str) -> tuple[list[str], np.ndarray]:
    text = _read(path)
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    data = []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}: line {i}: expected {len(header)} fields, got {len(row)}")
        try:
            data.append([float(v) for v in row])
        except ValueError as exc:
            raise ParseError(f"{path}: line {i}: {exc}") from exc
    return header, np.array(data, dtype=float).reshape(len(data), len(header))


def _entries(header: list[str], data: np.ndarray, pattern: re.Pattern, path: str) -> np.ndarray:
    idx = {}
    for col, name in enumerate(header):
        m = pattern.match(name)
        if m:
            idx[(int(m.group(1)), int(m.group(2)), m.group(3))] = col
    if not idx:
        raise ParseError(f"{path}: no matrix columns found")
    rows = max(k[0] for k in idx)
    cols = max(k[1] for k in idx)
    out = np.zeros((data.shape[0], rows, cols), dtype=np.complex128)
    for (i, j, part), col in idx.items():
        if part == "re":
            out[:, i - 1, j - 1] += data[:, col]
        else:
            out[:, i - 1, j - 1] += 1j * data[:, col]
    return out


def read_continuous(path: str) -> ContinuousModelData:
    """Continuous model data from CSV with columns ``t, a, xi_i_j_re, xi_i_j_im``."""
    header, data = _read_csv(path)
    if header[:2] != ["t", "a"]:
        raise ParseError(f"{path}: first columns must be 't' and 'a'")
    X = _entries(header, data, _XI, path)
    try:
        return ContinuousModelData.from_samples(data[:, 0], data[:, 1], X)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def read_weight(path: str, interpolate: bool = False) -> StieltjesWeight:
    """Stieltjes weight from CSV with columns ``t, H_i_j_re, H_i_j_im``."""
    header, data = _read_csv(path)
    if header[:1] != ["t"]:
        raise ParseError(f"{path}: first column must be 't'")
    H = _entries(header, data, _H, path)
    if H.shape[1] != H.shape[2]:
        raise ParseError(f"{path}: H entries must form a square matrix")
    try:
        return StieltjesWeight(data[:, 0], H, interpolate=interpolate)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def matrix_header(prefix: str, r: int, c: int) -> list[str]:
    return [f"{prefix}_{i + 1}_{j + 1}_{p}" for i in range(r) for j in range(c) for p in ("re", "im")]


def matrix_fields(M: np.ndarray) -> list[str]:
    out = []
    for v in np.asarray(M).ravel():
        out += [repr(float(v.real)), repr(float(v.imag))]
    return out
