"""JSON-emitting command line front end.

Exit codes: 0 when every check passed, 1 when a check failed (diagnostics in
the document), 2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from importlib import metadata

from . import casimir as cas
from .fock import (FockConfig, Monomial, NonScalarDefect, WindowError, AlgebraElement,
                   element_operator, identity, matrix)
from .jets import INF, PLUS, MINUS
from .pairing import (CocycleParams, D1Element, FAMILIES, StructureTable, cocycle_table,
                      local_cocycle, scalar_to_json)
from .surface import SurfaceError, SurfaceSpec, make_surface, parse_config, spec_from_mapping
from .sugawara import (CriticalLevel, sl2_basis, sugawara_commutator_defect, sugawara_config,
                       virasoro_defect, _window_states, normalized_L)

COMMANDS = ("basis", "structure", "cocycle", "fock", "sugawara-check", "casimir", "semicasimir", "coinv")
GENUS0_ONLY = ("fock", "sugawara-check", "casimir", "semicasimir", "coinv")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def q(v) -> str:
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}"


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _twist(text: str):
    return tuple(_fraction(t) for t in text.split(","))


def _ints(text: str):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--genus", type=int, default=None)
    common.add_argument("--order", type=int, default=None, help="truncation or certification order")
    common.add_argument("--range", type=int, default=None, help="index half-width")
    common.add_argument("--l", type=int, default=1)
    common.add_argument("--charge", type=int, default=0)
    common.add_argument("--twist", type=_twist, default=(Fraction(0),))
    common.add_argument("--level", type=_fraction, default=None)
    common.add_argument("--precision-bits", type=int, default=None)
    common.add_argument("--config", default=None, help="key=value surface configuration file")
    common.add_argument("--pretty", action="store_true", help="human-readable output")
    common.add_argument("--out", default=None, help="also write the JSON document here")
    common.add_argument("--no-timing", action="store_true", help="omit wall-clock time from the manifest")

    p = _Parser(prog="kncasimir")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    b = sub.add_parser("basis", parents=[common])
    b.add_argument("--family", choices=("function", "vector", "oneform", "quadratic"), default="function")
    s = sub.add_parser("structure", parents=[common])
    s.add_argument("--family", choices=FAMILIES, default="AA")
    c = sub.add_parser("cocycle", parents=[common])
    c.add_argument("--family", choices=("affine", "vector", "mixed", "local"), default="affine")
    c.add_argument("--R", type=_fraction, default=None, help="constant projective connection at P+")
    c.add_argument("--a", type=_fraction, default=Fraction(1), help="weight parameter of the mixed cocycle")
    c.add_argument("--T", type=_fraction, default=None, help="coefficient t of T = t/z")
    f = sub.add_parser("fock", parents=[common])
    f.add_argument("--op", action="append", default=[],
                   help="operator kind:index with kind in field, current, sugawara (applied right to left)")
    f.add_argument("--state", action="append", default=[], help="partition as comma list (empty for vacuum)")
    sg = sub.add_parser("sugawara-check", parents=[common])
    sg.add_argument("--algebra", choices=("gl1", "sl2"), default="gl1")
    sub.add_parser("casimir", parents=[common])
    sc = sub.add_parser("semicasimir", parents=[common])
    sc.add_argument("--free", type=_ints, default=[0, -1, -2, -3])
    sub.add_parser("coinv", parents=[common])
    return p


# ---------------------------------------------------------------------------
# helpers

def _surface_spec(args) -> SurfaceSpec:
    mapping = {}
    if args.config:
        try:
            with open(args.config) as fh:
                mapping = parse_config(fh.read())
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
    if args.genus is not None:
        mapping["genus"] = args.genus
    if args.precision_bits is not None:
        mapping["precision_bits"] = args.precision_bits
    if args.order is not None and args.command in ("basis", "structure", "cocycle"):
        mapping["truncation_order"] = args.order
    return spec_from_mapping(mapping)


def _fock(args, window: int) -> FockConfig:
    tw = args.twist
    if len(tw) == 1:
        tw = tw * args.l
    return FockConfig(args.l, args.charge, tw, window)


def _scalar(v):
    if isinstance(v, (int, Fraction)):
        return q(v)
    return scalar_to_json(v)


def _series_json(s):
    return {"chart": s.chart, "text": s.to_text(),
            "order": None if s.order == INF else s.order,
            "coefficients": [[e, _scalar(c)] for e, c in s.items() if c != 0]}


def _field_json(a: dict):
    return [[str(m), q(c)] for m, c in sorted(a.items()) if c]


# ---------------------------------------------------------------------------
# commands

def cmd_basis(args, spec):
    S = make_surface(spec)
    R = 3 if args.range is None else args.range
    make = {"function": S.function, "vector": S.vector, "oneform": S.oneform, "quadratic": S.quadratic}[args.family]
    out = []
    for m in range(-R, R + 1):
        t = make(m)
        out.append({"index": m, "plus": _series_json(t.plus), "minus": _series_json(t.minus),
                    "expected_orders": list(S.expected_orders(args.family, m))})
    return {"family": args.family, "elements": out}, []


def cmd_structure(args, spec):
    S = make_surface(spec)
    R = 3 if args.range is None else args.range
    t = StructureTable.build(S, args.family, R)
    entries = [{"m": m, "n": n, "k": k, **({"value": _scalar(v)} if not isinstance(v, (int, Fraction)) else {"value": q(v)})}
               for m, n, k, v in t.entries()]
    lo, hi = t.width_stats()
    return {"family": args.family, "window": R, "entries": entries,
            "bands": [{"m": m, "n": n, "lo": b[0], "hi": b[1]} for (m, n), b in sorted(t.bands.items())],
            "observed_offsets": [lo, hi]}, []


def cmd_cocycle(args, spec):
    S = make_surface(spec)
    R = 4 if args.range is None else args.range
    Rconn = None
    if args.R is not None:
        if spec.genus != 0:
            raise UsageError("--R is only supported at genus 0")
        from .pairing import projective_connection_genus0
        from .jets import Series
        Rconn = projective_connection_genus0(Series.from_dict(PLUS, {0: args.R}, INF))
    T = None
    if args.T is not None:
        from .pairing import Connection
        from .jets import Series
        T = Connection(Series.from_dict(PLUS, {-1: args.T}, INF))
    if args.family == "local":
        params = CocycleParams()
        table = {}
        for i in range(-R, R + 1):
            for j in range(-R, R + 1):
                d1 = D1Element(S.vector(i), S.function(i))
                d2 = D1Element(S.vector(j), S.function(j))
                table[(i, j)] = local_cocycle(d1, d2, params)
    else:
        table = cocycle_table(args.family, S, R, a=args.a, T=T, R=Rconn)
    entries = [{"i": i, "j": j, "value": _scalar(v)} for (i, j), v in sorted(table.items())]
    return {"family": args.family, "window": R, "entries": entries}, []


def _operator(text: str, config: FockConfig):
    try:
        kind, idx = text.split(":")
        idx = int(idx)
    except ValueError as exc:
        raise UsageError(f"bad operator {text!r}; expected kind:index") from exc
    if kind == "field":
        return element_operator(AlgebraElement.field(idx), config)
    if kind == "current":
        return element_operator(AlgebraElement.current(identity(config.l), idx), config)
    if kind == "sugawara":
        alg = {1: "gl1", 2: "sl2"}.get(config.l)
        if alg is None:
            raise UsageError("sugawara operators need l in {1, 2}")
        return normalized_L(sugawara_config(alg, config), idx)
    raise UsageError(f"unknown operator kind {kind!r}")


def cmd_fock(args, spec):
    config = _fock(args, 12 if args.range is None else args.range)
    ops = [_operator(t, config) for t in args.op]
    states = args.state or [""]
    out = []
    for text in states:
        lam = tuple(sorted(_ints(text), reverse=True)) if text else ()
        if any(p <= 0 for p in lam):
            raise UsageError(f"partition parts must be positive: {text!r}")
        vec = {Monomial.from_partition(config.charge, lam): Fraction(1)}
        for op in reversed(ops):
            nxt = {}
            for m, c in vec.items():
                for m2, c2 in op.apply_monomial(m).items():
                    nxt[m2] = nxt.get(m2, 0) + c * c2
            vec = {m: c for m, c in nxt.items() if c}
        out.append({"state": list(lam), "image": [{"monomial": m.to_json(), "degree": m.degree, "coef": q(c)}
                                                  for m, c in sorted(vec.items())]})
    return {"operators": args.op, "results": out}, []


def cmd_sugawara(args, spec):
    l = 1 if args.algebra == "gl1" else 2
    if args.l != l:
        args.l = l
    R = 4 if args.range is None else args.range
    D = 12 if args.order is None else args.order
    config = sugawara_config(args.algebra, _fock(args, D), args.level)
    basis = [identity(1)] if args.algebra == "gl1" else sl2_basis()
    failures, checked = [], 0
    for x in basis:
        for k in range(-R, R + 1):
            for r in range(-R, R + 1):
                rep = sugawara_commutator_defect(config, k, r, x)
                checked += rep["tested"]
                if not rep["zero"]:
                    failures.append({"invariant": "Sugawara commutator", "k": k, "r": r,
                                     "x": [[q(v) for v in row] for row in x], "violations": rep["violations"][:1]})
    vir = []
    if args.algebra == "gl1":
        for k, m in ((2, -2), (1, -1), (2, -1), (1, 1)):
            try:
                d = virasoro_defect(config, k, m)
            except NonScalarDefect as exc:
                failures.append({"invariant": "Virasoro central term", "k": k, "m": m, "detail": str(exc)})
                continue
            vir.append({"k": k, "m": m, "value": q(d["value"]), "vector_cocycle": q(d["vector_cocycle"]),
                        "prefactor": q(d["prefactor"]),
                        "ratio": None if d["ratio"] is None else q(d["ratio"])})
            if k + m != 0 and d["value"] != 0:
                failures.append({"invariant": "off-diagonal central term", "k": k, "m": m, "value": q(d["value"])})
    part = config.parts[0]
    return {"algebra": args.algebra, "level": q(part.level), "kappa": q(part.kappa), "window": D,
            "range": R, "states_checked": checked, "virasoro": vir, "failures": failures}, failures


def _measured(args, order: int):
    fock = _fock(args, 2 * order + 2)
    return fock, cas.gamma_table_measured(fock, order)


def cmd_casimir(args, spec):
    O = 8 if args.order is None else args.order
    fock, tab = _measured(args, O)
    tri = cas.casimir_triangular(tab, O)
    fit = cas.extract_aT(tab, 2)
    ode = cas.casimir_ode(fit["a"], fit["tau"], O, lowest=-O)
    agree = cas.routes_agree(tri, ode, O)
    failures = []
    if tri.dimension != 1:
        failures.append({"invariant": "unique casimir", "dimension": tri.dimension,
                         "degenerate": tri.degenerate_pivots})
    if not agree["agree"]:
        failures.append({"invariant": "two-route agreement", "indices": agree["mismatches"]})
    sweep = None
    if args.range:
        alg = {1: "gl1", 2: "gl2"}.get(args.l)
        if alg is None:
            raise UsageError("commutator sweeps need l in {1, 2}")
        cfg = sugawara_config(alg, fock.with_window(min(fock.window, 8)), args.level)
        xs = [identity(1)] if args.l == 1 else sl2_basis() + [identity(2)]
        ks = [k for k in range(-args.range, args.range + 1)]
        sweep = cas.commutator_sweep(tri.field(), cfg, ks, xs, order=O)
        if not sweep["ok"]:
            failures.append({"invariant": "casimir commutativity", "witnesses": sweep["failures"]})
    doc = {"a": [q(tri.a[m]) for m in range(0, O + 1)],
           "field": _field_json(tri.a), "dimension": tri.dimension, "routes_agree": agree["agree"],
           "ord_plus": tri.leading_order, "forced_zero": tri.forced_zero,
           "triangular": tri.to_json(), "ode": ode.to_json(),
           "fit": {"a": q(fit["a"]), "tau": {str(j): q(t) for j, t in fit["tau"].items()},
                   "ord_T": fit["ord_T"] if fit["ord_T"] != INF else None},
           "table_triangular": tab.is_triangular, "degenerate_pivots": tab.degenerate,
           "genericity": {k: (q(v) if isinstance(v, Fraction) else v) for k, v in fock.genericity().items()},
           "sweep": sweep, "failures": failures}
    return doc, failures


def cmd_semicasimir(args, spec):
    O = 6 if args.order is None else args.order
    fock, tab = _measured(args, O)
    free = [j for j in args.free]
    if any(j > 0 for j in free):
        raise UsageError("free indices must be non-positive")
    basis = cas.semicasimir_solve(free, tab, O)
    failures = []
    if basis.dimension != len(set(free)):
        failures.append({"invariant": "semi-casimir dimension", "dimension": basis.dimension, "expected": len(set(free))})
    sweeps = {}
    alg = {1: "gl1", 2: "gl2"}.get(args.l)
    if alg is None:
        raise UsageError("semi-casimir sweeps need l in {1, 2}")
    cfg = sugawara_config(alg, fock.with_window(min(fock.window, 8)), args.level)
    R = 5 if args.range is None else args.range
    for j, f in sorted(basis.fields.items()):
        sw = cas.commutator_sweep(f, cfg, list(range(-R, 0)), [identity(args.l)], order=O)
        sweeps[str(j)] = {"ok": sw["ok"], "tested": sw["tested"]}
        if not sw["ok"]:
            failures.append({"invariant": "semi-casimir commutativity", "free_index": j, "witnesses": sw["failures"]})
    doc = basis.to_json()
    doc.update(free=free, sweeps=sweeps, failures=failures)
    return doc, failures


def cmd_coinv(args, spec):
    if args.l != 1:
        raise UsageError("coinvariants are implemented for gl(1)")
    D = 6 if args.range is None else args.range
    O = 6 if args.order is None else args.order
    fock, tab = _measured(args, O)
    cfg = sugawara_config("gl1", fock.with_window(D), args.level)
    sb = cas.semicasimir_solve(range(0, -O, -1), tab, O)
    failures = []
    try:
        rep = cas.coinvariants(cfg, D, sb)
    except cas.WindowUnstable as exc:
        return {"failures": [{"invariant": "window stability", "detail": str(exc)}]}, [1]
    if not rep.stable:
        failures.append({"invariant": "window stability", "dimensions": [rep.previous_dimension, rep.dimension]})
    doc = rep.to_json()
    doc.update(induced_rank=cas.induced_rank(sb, rep), failures=failures)
    return doc, failures


HANDLERS = {"basis": cmd_basis, "structure": cmd_structure, "cocycle": cmd_cocycle, "fock": cmd_fock,
            "sugawara-check": cmd_sugawara, "casimir": cmd_casimir, "semicasimir": cmd_semicasimir,
            "coinv": cmd_coinv}


# ---------------------------------------------------------------------------
# output

def _version() -> str:
    try:
        return metadata.version("kncasimir")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _echo(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if isinstance(v, Fraction):
            v = q(v)
        elif isinstance(v, tuple):
            v = [q(x) if isinstance(x, Fraction) else x for x in v]
        out[k] = v
    return out


def manifest(args, spec, seconds) -> dict:
    m = {"command": args.command, "config": _echo(args), "version": _version(),
         "mode": spec.mode, "truncation": {"order": spec.truncation_order}}
    if spec.genus == 1:
        m["truncation"]["precision_bits"] = spec.precision_bits
    if not args.no_timing:
        m["wall_clock_seconds"] = round(seconds, 3)
    return m


def render_pretty(doc, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(doc, dict):
        for k, v in doc.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(render_pretty(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
    elif isinstance(doc, list):
        if all(not isinstance(x, (dict, list)) for x in doc) or all(
                isinstance(x, list) and all(not isinstance(y, (dict, list)) for y in x) for x in doc):
            for x in doc:
                lines.append(pad + ("  ".join(map(str, x)) if isinstance(x, list) else str(x)))
        else:
            for x in doc:
                lines.append(f"{pad}-")
                lines.append(render_pretty(x, indent + 1))
    else:
        lines.append(f"{pad}{doc}")
    return "\n".join(lines)


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        spec = _surface_spec(args)
        if spec.genus != 0 and args.command in GENUS0_ONLY:
            raise UsageError(f"{args.command} is only available at genus 0")
        doc, failures = HANDLERS[args.command](args, spec)
    except (UsageError, SurfaceError, CriticalLevel, WindowError, ValueError) as exc:
        print(json.dumps({"error": str(exc), "exit_code": 2}, sort_keys=True), file=stdout)
        return 2
    doc["manifest"] = manifest(args, spec, time.perf_counter() - t0)
    doc["ok"] = not failures
    text = json.dumps(doc, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(render_pretty(doc) if args.pretty else text, file=stdout)
    return 1 if failures else 0


def main():  # pragma: no cover - console entry
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
