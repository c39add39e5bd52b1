"""Command-line front end.

Exit codes: 0 success, 1 domain error, 2 parse or usage error.
``LIVSIC_THREADS`` caps the worker threads used for grid sweeps.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io as fmt
from .charfn import eval_S, j_classify, simulate_open_system
from .colligation import SubspaceBasis, embed, product, validate
from .errors import LivsicError, ParseError
from .factorize import potapov_factorize
from .models import (
    CombinedModel,
    build_combined_model,
    completeness_criterion,
    dissipative_embed,
    integration_operator,
    unicellular_demo,
)
from .multint import multint_stieltjes


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("LIVSIC_THREADS", "1")))
    except ValueError:
        return 1


def parse_grid(spec: str) -> np.ndarray:
    """Grid ``"re0:re1:n,im0:im1:m"`` to an array of ``m * n`` complex points."""
    try:
        re_part, im_part = spec.split(",")
        r0, r1, n = re_part.split(":")
        i0, i1, m = im_part.split(":")
        re = np.linspace(float(r0), float(r1), int(n))
        im = np.linspace(float(i0), float(i1), int(m))
    except ValueError as exc:
        raise ParseError(f"bad grid {spec!r}: expected 're0:re1:n,im0:im1:m'") from exc
    if re.size == 0 or im.size == 0:
        raise ParseError("grid must contain at least one point")
    return (re[None, :] + 1j * im[:, None]).ravel()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _check(name: str, value: float, threshold: float, op: str = "<=") -> dict:
    ok = value <= threshold if op == "<=" else value >= threshold
    return {"name": name, "value": float(value), "threshold": float(threshold), "op": op, "passed": bool(ok)}


def cmd_embed(args) -> int:
    A = fmt.read_matrix(args.input)
    channel = SubspaceBasis.full(A.shape[0]) if args.channel == "full" else None
    c = embed(A, channel)
    _emit(fmt.dumps_colligation(c), args.out)
    return 0


def cmd_charfn(args) -> int:
    c = fmt.read_colligation(args.colligation)
    zs = parse_grid(args.grid)

    def row(z):
        smp = eval_S(c, z)
        cls = j_classify(smp.S, c.J, args.tol) if smp.regular else "singular"
        return [repr(float(z.real)), repr(float(z.imag)), str(smp.regular).lower()] + fmt.matrix_fields(smp.S) + [cls]

    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        rows = list(ex.map(row, zs))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re_z", "im_z", "regular"] + fmt.matrix_header("S", c.r, c.r) + ["class"])
    w.writerows(rows)
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_factorize(args) -> int:
    c = fmt.read_colligation(args.colligation)
    bp = potapov_factorize(c)
    _emit(fmt.blaschke_to_json(bp, c.Phi), args.out)
    return 0


def cmd_product(args) -> int:
    c1 = fmt.read_colligation(args.first)
    c2 = fmt.read_colligation(args.second)
    _emit(fmt.dumps_colligation(product(c1, c2)), args.out)
    return 0


def _signature(spec: str | None, r: int) -> tuple[int, ...]:
    if spec is None:
        return (1,) * r
    try:
        s = tuple(int(v) for v in spec.split(","))
    except ValueError as exc:
        raise ParseError(f"bad signature {spec!r}") from exc
    if any(v not in (1, -1) for v in s):
        raise ParseError("signature entries must be 1 or -1")
    return s


def cmd_model(args) -> int:
    disc, J = (None, None)
    if args.discrete:
        disc, J = fmt.read_discrete(args.discrete)
    cont = fmt.read_continuous(args.continuous) if args.continuous else None
    if disc is None and cont is None:
        raise ParseError("give --discrete and/or --continuous")
    if args.J:
        J = _signature(args.J, 0)
    if J is None:
        r = disc.etas.shape[1] if disc is not None and len(disc) else np.atleast_2d(cont.xi(0.0)).shape[0]
        J = (1,) * r
    cm = CombinedModel(disc, cont, N=args.N, K=args.K)
    c = build_combined_model(cm, J)
    _emit(fmt.dumps_colligation(c), args.out)
    return 0


def cmd_multint(args) -> int:
    w = fmt.read_weight(args.weight, interpolate=args.interpolate)
    f = complex(args.f)
    res = multint_stieltjes(f, w, tol=args.tol)
    obj = {
        "value": [[[complex(v).real, complex(v).imag] for v in row] for row in res.value],
        "levels": res.levels,
        "residual": res.residual,
    }
    _emit(json.dumps(obj, indent=2) + "\n", args.out)
    return 0


def _demo_integration(args) -> dict:
    Ns = sorted({50, 100, 200, 400, args.N or 400})
    table = []
    for N in Ns:
        S = eval_S(integration_operator(1.0, N), 1j).S[0, 0]
        table.append({"N": N, "S_re": S.real, "S_im": S.imag, "error": abs(S - np.e)})
    for a, b in zip(table, table[1:]):
        b["ratio"] = a["error"] / b["error"]
    N = args.N or 400
    err = next(t["error"] for t in table if t["N"] == N)
    C = max(t["N"] * t["error"] for t in table)
    checks = [_check(f"|S(i) - e| at N={N}", err, 1e-2), _check("max N*|S_N(i) - e|", C, 10.0)]
    order = float(np.log2(table[-2]["error"] / table[-1]["error"]))
    return {"demo": "integration-operator", "observed_order": order, "table": table, "checks": checks}


def _demo_unicellular(args) -> dict:
    rep = unicellular_demo(1.0, args.N or 200)
    table = [{"sigma": e.sigma, "dim": e.dim, "residual": e.invariance_residual,
              "abs_S": abs(e.S), "exponent": e.exponent} for e in rep.entries]
    checks = [
        _check("max invariance residual", rep.max_invariance_residual, 1e-9),
        _check("|S_sigma(i)| strictly increasing", float(rep.strictly_monotone), 1.0, ">="),
    ]
    return {"demo": "unicellular", "table": table, "checks": checks}


def _demo_completeness(args) -> dict:
    A = fmt.read_matrix(args.input) if args.input else np.diag([1j, 2j])
    rep = completeness_criterion(A)
    table = [{"sum_im_eigs": rep.sum_im_eigs, "trace_im_A": rep.trace_im_A, "slack": rep.slack,
              "complete": rep.complete, "departure_from_normality": rep.departure_from_normality,
              "eigvec_rank": rep.eigvec_rank}]
    checks = [_check("slack", rep.slack, -1e-9, ">=")]
    return {"demo": "completeness", "status": "complete" if rep.complete else "incomplete",
            "table": table, "checks": checks}


def _demo_energy(args) -> dict:
    rng = np.random.default_rng(args.seed)
    n = 4
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    K = rng.normal(size=(2, n)) + 1j * rng.normal(size=(2, n))
    c = dissipative_embed(0.5 * (G + G.conj().T) + 0.5j * K.conj().T @ K)
    u0 = rng.normal(size=c.r) + 1j * rng.normal(size=c.r)
    h0 = rng.normal(size=n) + 1j * rng.normal(size=n)
    tr = simulate_open_system(c, lambda t: np.cos(3 * t) * u0, h0, 1e-3, 1.0)
    checks = [_check("max energy ledger drift", tr.drift, 1e-8),
              _check("colligation residual", validate(c).colligation_residual, 1e-10 * c.scale())]
    return {"demo": "energy-balance", "table": [{"T": 1.0, "step": 1e-3, "drift": tr.drift,
                                                 "final_energy": float(tr.energy[-1])}], "checks": checks}


DEMOS = {
    "integration-operator": _demo_integration,
    "unicellular": _demo_unicellular,
    "completeness": _demo_completeness,
    "energy-balance": _demo_energy,
}


def cmd_demo(args) -> int:
    rep = DEMOS[args.name](args)
    _emit(json.dumps(rep, indent=2) + "\n", args.out)
    return 0 if all(ch["passed"] for ch in rep["checks"]) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-9, help="numerical tolerance (default 1e-9)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    common.add_argument("--out", help="output file (default stdout)")

    p = argparse.ArgumentParser(prog="livsic", description="Colligations and characteristic functions.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("embed", parents=[common], help="embed a matrix in a colligation")
    s.add_argument("input", help="JSON matrix file")
    s.add_argument("--channel", choices=["full", "imA"], default="imA")
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("charfn", parents=[common], help="evaluate S(z) on a grid")
    s.add_argument("colligation")
    s.add_argument("--grid", required=True, help='"re0:re1:n,im0:im1:m"')
    s.set_defaults(func=cmd_charfn)

    s = sub.add_parser("factorize", parents=[common], help="Potapov factorization")
    s.add_argument("colligation")
    s.set_defaults(func=cmd_factorize)

    s = sub.add_parser("product", parents=[common], help="couple two colligations")
    s.add_argument("first")
    s.add_argument("second")
    s.set_defaults(func=cmd_product)

    s = sub.add_parser("model", parents=[common], help="assemble a triangular model")
    s.add_argument("--discrete", help="JSON list of {lambda, eta}")
    s.add_argument("--continuous", help="CSV with columns t, a, xi_i_j_re, xi_i_j_im")
    s.add_argument("--N", type=int, default=100, help="continuous cells")
    s.add_argument("--K", type=int, default=None, help="discrete truncation")
    s.add_argument("--J", help="signature, e.g. 1,-1 (default all +1)")
    s.set_defaults(func=cmd_model)

    s = sub.add_parser("multint", parents=[common], help="multiplicative Stieltjes integral")
    s.add_argument("weight", help="CSV with columns t, H_i_j_re, H_i_j_im")
    s.add_argument("--f", default="1", help="constant integrand (complex literal)")
    s.add_argument("--interpolate", action="store_true", help="treat H as piecewise linear")
    s.set_defaults(func=cmd_multint)

    s = sub.add_parser("demo", parents=[common], help="reproducible demonstrations")
    s.add_argument("name", choices=sorted(DEMOS))
    s.add_argument("--N", type=int, default=None)
    s.add_argument("--K", type=int, default=None)
    s.add_argument("--input", help="matrix file for the completeness demo")
    s.set_defaults(func=cmd_demo)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except LivsicError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
