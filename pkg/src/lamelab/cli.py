"""Command-line front end.

Exit codes: 0 success, 1 bad arguments or configuration, 2 count mismatch
(expected != found, or a failed acceptance criterion), 3 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import elliptic as E
from .config import (RunConfig, ResultRecord, config_hash, parse_complex, parse_config,
                     parse_weight, validate)
from .errors import LamelabError, ParseError, ValidationError

EXIT_OK, EXIT_USAGE, EXIT_COUNT, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ------------------------------------------------------------ value parsing

def _split(text: str) -> list:
    return [s for s in text.replace(";", ",").split(",") if s.strip()]


def _complex_arg(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 2:
            # the "RE,IM" form
            return parse_complex([float(parts[0]), float(parts[1])])
        return parse_complex(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot read complex value {text!r}") from None
    except ParseError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _complex_list(text: str) -> tuple:
    try:
        return tuple(parse_complex(s) for s in _split(text))
    except ParseError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _weight_list(text: str) -> tuple:
    try:
        return tuple(parse_weight(s.strip()) for s in _split(text))
    except ParseError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# ------------------------------------------------------------ shared helpers

def _need(cfg: RunConfig, *names):
    for name in names:
        val = getattr(cfg, name)
        if val is None or (isinstance(val, tuple) and not val):
            raise ValidationError(f"this command needs {name}", field=name)


def _lattice(cfg):
    _need(cfg, "tau")
    return E.Lattice(cfg.tau)


def _poles(cfg):
    from .glc import PoleConfig
    _need(cfg, "tau", "n", "p")
    return PoleConfig(cfg.p, _lattice(cfg))


def _fiber_opts(cfg):
    from .glc import FiberOptions
    return FiberOptions(seed=cfg.seed, dedup_tol=cfg.tol, threads=cfg.threads)


def _opt(cfg, key, default=None, cast=None):
    v = cfg.options.get(key, default)
    return cast(v) if (cast is not None and v is not None) else v


def _roots_text(a) -> str:
    return ";".join(f"{z.real:.15g}{z.imag:+.15g}j" for z in a)


# ---------------------------------------------------------------- commands

def cmd_elliptic_eval(cfg):
    L = _lattice(cfg)
    zs = [parse_complex(z, "z") for z in _opt(cfg, "z", [])]
    rows = []
    for z in zs:
        rows.append([z, complex(E.wp(z, L)), complex(E.zeta(z, L)), complex(E.sigma(z, L))])
    extra = {"eta1": L.eta1, "eta2": L.eta2, "g2": L.g2, "g3": L.g3}
    return ResultRecord("elliptic eval", config_hash(cfg), ["z", "wp", "zeta", "sigma"], rows,
                        residuals={"legendre": L.legendre_defect()}, extra=extra)


def cmd_logfree_poly(cfg):
    from . import logfree as lf
    ell = _opt(cfg, "ell", cast=int)
    if ell is None:
        raise ValidationError("logfree poly needs options.ell", field="options.ell")
    if not cfg.n:
        coeffs = lf.q_top_coefficients(ell)
        rows = [[f"A^{a} B^{b}", str(c)] for (a, b), c in coeffs.items()]
        return ResultRecord("logfree poly", config_hash(cfg), ["monomial", "coefficient"], rows)
    P = _poles(cfg)
    i = _opt(cfg, "site", 0, int)
    site = lf.site_from_lattice(P.p, cfg.n, P.lattice, max(ell - 1, 0))
    poly = lf.logfree_polynomial(ell, i, site)
    names = [f"A{j + 1}" for j in range(P.r)] + ["B"]
    rows = []
    for expo, c in sorted(poly.coeffs.items(), reverse=True):
        mono = " ".join(f"{v}^{e}" for v, e in zip(names, expo) if e) or "1"
        rows.append([mono, complex(c)])
    return ResultRecord("logfree poly", config_hash(cfg), ["monomial", "coefficient"], rows)


def cmd_logfree_hilbert(cfg):
    from . import logfree as lf
    from .errors import UnstableRange
    from .weights import WeightVector
    _need(cfg, "n")
    wv = WeightVector(cfg.n)
    rows = []
    for m in range(_opt(cfg, "m_max", 12, int) + 1):
        direct = lf.hilbert_direct_count(wv, m)
        try:
            quasi = lf.hilbert_quasi_poly(wv, m)
        except UnstableRange:
            quasi = None
        rows.append([m, direct, quasi])
    arith, orb = lf.genus(wv)
    extra = {"F": lf.count_F(wv), "H": lf.count_H(wv), "delta": wv.delta, "genus": arith, "orbifold_genus": orb}
    mism = sum(1 for r in rows if r[2] is not None and r[2] != r[1])
    return ResultRecord("logfree hilbert", config_hash(cfg), ["m", "direct", "quasi_poly"], rows,
                        expected=0, found=mism, extra=extra)


def cmd_logfree_residual(cfg):
    from . import logfree as lf
    P = _poles(cfg)
    A = [parse_complex(a, "options.A") for a in _opt(cfg, "A", [])]
    B = parse_complex(_opt(cfg, "B", 0), "options.B")
    if len(A) != P.r:
        raise ValidationError(f"options.A needs {P.r} entries", field="options.A")
    order = max(int(2 * complex(w).real) for w in cfg.n)
    site = lf.site_from_lattice(P.p, cfg.n, P.lattice, max(order - 1, 0))
    res = lf.logfree_residual(cfg.n, site, A, B)
    rows = [[f"F{i + 1}", v] for i, v in enumerate(res[:-1])] + [["sum_A", res[-1]]]
    return ResultRecord("logfree residual", config_hash(cfg), ["equation", "value"], rows,
                        residuals={"max": float(np.max(np.abs(res)))})


def _fiber_rows(points, P):
    from .premodular import ts_of
    L = P.lattice
    rows = []
    for pt, mult, resid in points:
        can = pt.canonical(L)
        t, s = ts_of(can.sigma, complex(can.h), L)
        rows.append([_roots_text(can.a), complex(can.h), t, s, str(mult), resid])
    rows.sort(key=lambda r: r[0])
    return [[k] + r for k, r in enumerate(rows)]


def cmd_glc_solve(cfg):
    from .glc import solve_fiber
    P = _poles(cfg)
    _need(cfg, "c")
    rep = solve_fiber(cfg.n, P, cfg.c, _fiber_opts(cfg))
    rows = _fiber_rows([(s.point, s.multiplicity, s.residual) for s in rep.solutions], P)
    return ResultRecord("glc solve", config_hash(cfg), ["index", "roots", "h", "t", "s", "multiplicity", "residual"],
                        rows, residuals={"max": max((s.residual for s in rep.solutions), default=0.0)},
                        expected=rep.degree_formula_value, found=rep.count,
                        extra={"warnings": list(rep.warnings), "stats": rep.stats})


def cmd_glc_degree(cfg):
    from . import logfree as lf
    from .glc import degree_formula
    from .weights import WeightVector
    _need(cfg, "n")
    wv = WeightVector(cfg.n)
    rows = [["degree", degree_formula(wv)]]
    if wv.all_half_nat:
        rows += [["count_F", lf.count_F(wv)], ["count_H", lf.count_H(wv)]]
    return ResultRecord("glc degree", config_hash(cfg), ["quantity", "value"], rows)


def cmd_glc_degenerate(cfg):
    from .glc import degree_formula, trace_degeneration
    P = _poles(cfg)
    _need(cfg, "c")
    omega = tuple(int(v) for v in _opt(cfg, "omega", [0, 0]))
    rep = trace_degeneration(cfg.n, P, cfg.c, omega=omega, opts=_fiber_opts(cfg))
    rows = []
    for tr in rep.tracks:
        rows.append([tr.k, _roots_text(sorted(tr.cluster_alpha, key=lambda z: (z.real, z.imag))),
                     tr.h_shift, tr.sigma_limit])
    rows.sort(key=lambda r: (r[0], r[1]))
    return ResultRecord("glc degenerate", config_hash(cfg), ["k", "cluster_alpha", "h_shift", "sigma_limit"], rows,
                        expected=degree_formula(cfg.n), found=len(rep.tracks),
                        extra={"strata": rep.strata, "expected_shift": rep.expected_shift})


def cmd_glc_boundary(cfg):
    from . import logfree as lf
    from .glc import boundary_typeI
    P = _poles(cfg)
    pts = boundary_typeI(cfg.n, P)
    rows = [[" ".join(map(str, b.k)), ":".join(str(x) for x in b.branch)] for b in pts]
    return ResultRecord("glc boundary", config_hash(cfg), ["k", "branch"], sorted(rows),
                        expected=lf.count_F(cfg.n), found=len(pts))


def cmd_bgg_tensor(cfg):
    from . import bgg
    factors = [bgg.parse_factor(f) for f in _opt(cfg, "factors", [])]
    if not factors:
        raise ValidationError("bgg tensor needs options.factors, e.g. ['L:1/2', 'L:1/2']", field="options.factors")
    order = _opt(cfg, "order", None, int)
    if order is None:
        tot = sum((f.weight for f in factors), bgg.SymWeight.of(0))
        order = int(abs(tot.value)) if tot.is_rational else 6
    prod = bgg.tensor_all([bgg.RingElement.of(f, order) for f in factors], order)
    rows = sorted([[k, cls.kind, str(cls.weight), coef] for (k, cls), coef in prod.items()],
                  key=lambda r: (r[0], r[1], r[2]))
    return ResultRecord("bgg tensor", config_hash(cfg), ["q_power", "kind", "weight", "coefficient"], rows,
                        extra={"normal_form": str(prod)})


def cmd_bgg_ck(cfg):
    from . import bgg
    ws = [str(w) for w in _opt(cfg, "weights", [])] or [str(w) for w in cfg.n]
    if not ws:
        raise ValidationError("bgg ck needs n or options.weights", field="n")
    kmax = _opt(cfg, "kmax", None, int)
    a = bgg.c_coefficients(ws, kmax)
    b = bgg.c_coefficients_by_tensor(ws, kmax)
    rows = [[k, x, y] for k, (x, y) in enumerate(zip(a, b))]
    return ResultRecord("bgg ck", config_hash(cfg), ["k", "c_k", "tensor_c_k"], rows,
                        expected=0, found=sum(1 for x, y in zip(a, b) if x != y))


def cmd_equilibrium_rational(cfg):
    from . import equilibrium as eq
    r = _opt(cfg, "r", None, int)
    l = _opt(cfg, "l", 1, int)
    if r is None:
        raise ValidationError("equilibrium rational needs options.r", field="options.r")
    x = parse_complex(_opt(cfg, "x", [0.7, 0.2]), "options.x")
    d = _opt(cfg, "d", None)
    d = tuple(parse_complex(v, "options.d") for v in d) if d is not None else None
    rep = eq.solve_rational_system(eq.RationalSystemSpec(r, l, x, d), seed=cfg.seed)
    rows = sorted([[_roots_text(s.alpha), s.residual] for s in rep.solutions])
    rows = [[k] + row for k, row in enumerate(rows)]
    return ResultRecord("equilibrium rational", config_hash(cfg), ["index", "alpha", "residual"], rows,
                        residuals={"max": max((s.residual for s in rep.solutions), default=0.0)},
                        expected=rep.expected_count, found=rep.count, extra={"stats": rep.stats})


def cmd_equilibrium_treibich(cfg):
    from . import equilibrium as eq
    L = _lattice(cfg)
    r = _opt(cfg, "r", 1, int)
    tn = tuple(int(v) for v in _opt(cfg, "treibich_n", [0, 0, 0, 0]))
    if len(tn) != 4:
        raise ValidationError("options.treibich_n needs four entries", field="options.treibich_n")
    rep = eq.treibich_count(eq.TreibichSpec(tn, r, L), seed=cfg.seed)
    rows = []
    for sol, size in zip(rep.solutions, rep.class_sizes):
        can = sorted((E.reduce(z, L).z for z in np.ravel(sol)), key=lambda z: (round(z.real, 9), round(z.imag, 9)))
        rows.append([_roots_text(can), size])
    rows = [[k] + row for k, row in enumerate(sorted(rows))]
    return ResultRecord("equilibrium treibich", config_hash(cfg), ["index", "p", "ordered_class_size"], rows,
                        residuals={"max": rep.max_residual}, expected=eq.treibich_census(r), found=rep.count,
                        extra={"ordered_paths": rep.ordered_paths, "escapes": rep.escapes})


def cmd_premodular_eval(cfg):
    from .premodular import premodular_value
    P = _poles(cfg)
    _need(cfg, "t", "s")
    pv = premodular_value(cfg.n, cfg.t, cfg.s, P, _fiber_opts(cfg))
    rows = [[pv.Z, pv.Phi, pv.degree, pv.fiber_size]]
    return ResultRecord("premodular eval", config_hash(cfg), ["Z", "Phi", "degree", "fiber_size"], rows,
                        residuals={"Phi_over_scale": abs(pv.Phi) / pv.scale},
                        extra={"Z": pv.Z, "Phi": pv.Phi, "degree": pv.degree, "fiber_size": pv.fiber_size})


def cmd_premodular_flow(cfg):
    from .premodular import isomonodromy_flow
    P = _poles(cfg)
    _need(cfg, "t", "s")
    u = [parse_complex(v, "options.direction") for v in _opt(cfg, "direction", [])]
    if len(u) != P.r:
        raise ValidationError(f"options.direction needs {P.r} entries", field="options.direction")
    traj = isomonodromy_flow(cfg.n, cfg.t, cfg.s, P.p, u, cfg.tau, dx=_opt(cfg, "dx", 1e-3, float),
                             steps=_opt(cfg, "steps", 10, int), opts=_fiber_opts(cfg))
    rows = [[fp.x, fp.tau, fp.phi_abs] for fp in traj]
    return ResultRecord("premodular flow", config_hash(cfg), ["x", "tau", "phi_abs"], rows)


def cmd_repro_all(cfg):
    from .acceptance import run_all
    only = _opt(cfg, "only", None)
    results = run_all(only, seed=cfg.seed, echo=lambda line: print(line, file=sys.stderr, flush=True))
    rows = [[r.number, r.name, "PASS" if r.passed else "FAIL", r.detail] for r in results]
    return ResultRecord("repro all", config_hash(cfg), ["criterion", "name", "status", "detail"], rows,
                        expected=len(results), found=sum(r.passed for r in results))


COMMANDS = {
    ("elliptic", "eval"): cmd_elliptic_eval,
    ("logfree", "poly"): cmd_logfree_poly,
    ("logfree", "hilbert"): cmd_logfree_hilbert,
    ("logfree", "residual"): cmd_logfree_residual,
    ("glc", "solve"): cmd_glc_solve,
    ("glc", "degree"): cmd_glc_degree,
    ("glc", "degenerate"): cmd_glc_degenerate,
    ("glc", "boundary"): cmd_glc_boundary,
    ("bgg", "tensor"): cmd_bgg_tensor,
    ("bgg", "ck"): cmd_bgg_ck,
    ("equilibrium", "rational"): cmd_equilibrium_rational,
    ("equilibrium", "treibich"): cmd_equilibrium_treibich,
    ("premodular", "eval"): cmd_premodular_eval,
    ("premodular", "flow"): cmd_premodular_flow,
    ("repro", "all"): cmd_repro_all,
}

# per-command flags that land in RunConfig.options: (flag, key, type, help)
_OPTION_FLAGS = {
    ("elliptic", "eval"): [("--z", "z", _split, "comma-separated evaluation points")],
    ("logfree", "poly"): [("--ell", "ell", int, "l = 2 n_i"), ("--site", "site", int, "site index (0-based)")],
    ("logfree", "hilbert"): [("--m-max", "m_max", int, "largest degree m (default 12)")],
    ("logfree", "residual"): [("--A", "A", _split, "comma-separated A_i"), ("--B", "B", str, "accessory B")],
    ("glc", "degenerate"): [("--omega", "omega", lambda s: [int(v) for v in _split(s)], "lattice vector m1,m2")],
    ("bgg", "tensor"): [("--factors", "factors", _split, "e.g. L:1/2,M:g"), ("--order", "order", int, "q truncation")],
    ("bgg", "ck"): [("--weights", "weights", _split, "symbolic weights, e.g. g,-g+2"),
                    ("--kmax", "kmax", int, "largest k")],
    ("equilibrium", "rational"): [("--r", "r", int, "number of points"), ("--l", "l", int, "exponent l"),
                                  ("--x", "x", str, "parameter x")],
    ("equilibrium", "treibich"): [("--r", "r", int, "number of pole pairs"),
                                  ("--treibich-n", "treibich_n", lambda s: [int(v) for v in _split(s)],
                                   "n0,n1,n2,n3")],
    ("premodular", "flow"): [("--direction", "direction", _split, "deformation direction u, one entry per pole"),
                             ("--steps", "steps", int, "number of steps K"), ("--dx", "dx", float, "step in x")],
    ("repro", "all"): [("--only", "only", lambda s: [int(v) for v in _split(s)], "criterion numbers")],
}


def _common(p):
    g = p.add_argument_group("run options")
    g.add_argument("--config", metavar="FILE", help="JSON run configuration")
    g.add_argument("--seed", type=int, metavar="U64")
    g.add_argument("--tol", type=float, metavar="REAL", help="dedup tolerance for fiber solves")
    g.add_argument("--threads", type=int, metavar="N", help="worker threads (fallback: LAMELAB_THREADS)")
    g.add_argument("--out", metavar="PATH", help="write the result here instead of stdout")
    g.add_argument("--format", choices=["csv", "json"])
    d = p.add_argument_group("problem data (override the config file)")
    d.add_argument("--tau", type=_complex_arg, help="RE,IM or a literal such as 0.2+1.1i")
    d.add_argument("--n", type=_weight_list, help="weights, e.g. 1/2,3/2")
    d.add_argument("--p", type=_complex_list, help="poles, e.g. 0,0.3+0.2i")
    d.add_argument("--c", type=_complex_arg)
    d.add_argument("--t", type=_complex_arg)
    d.add_argument("--s", type=_complex_arg)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lamelab", description="Generalized Lame equations on a complex torus.")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)
    subs = {}
    for grp, act in COMMANDS:
        if grp not in subs:
            subs[grp] = groups.add_parser(grp).add_subparsers(dest="action", required=True, parser_class=_Parser)
        leaf = subs[grp].add_parser(act)
        _common(leaf)
        for flag, key, typ, helptext in _OPTION_FLAGS.get((grp, act), []):
            leaf.add_argument(flag, dest=f"opt_{key}", type=typ, help=helptext)
    return parser


def resolve_config(args) -> RunConfig:
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = parse_config(fh.read())
        except OSError as exc:
            raise ValidationError(f"cannot read config: {exc}", field="config") from None
    else:
        cfg = RunConfig()
    threads = args.threads
    if threads is None and os.environ.get("LAMELAB_THREADS"):
        try:
            threads = int(os.environ["LAMELAB_THREADS"])
        except ValueError:
            raise ValidationError("LAMELAB_THREADS must be an integer", field="threads") from None
    options = {k[4:]: v for k, v in vars(args).items() if k.startswith("opt_") and v is not None}
    return cfg.with_overrides(tau=args.tau, n=args.n, p=args.p, c=args.c, t=args.t, s=args.s,
                              tol=args.tol, seed=args.seed, threads=threads, out=args.out,
                              format=args.format, options=options or None)


def emit(record: ResultRecord, cfg: RunConfig) -> None:
    text = record.to_csv() if cfg.format == "csv" else record.to_json()
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(command: tuple, cfg: RunConfig) -> tuple:
    """Dispatch one command; returns (record or None, exit code)."""
    record = COMMANDS[command](validate(cfg))
    return record, (EXIT_COUNT if record.count_mismatch else EXIT_OK)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ParseError, ValidationError) as exc:
        print(f"lamelab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    command = (args.group, args.action)
    try:
        record, code = run(command, cfg)
    except (ParseError, ValidationError) as exc:
        print(f"lamelab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LamelabError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"lamelab: numeric failure in {' '.join(command)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    emit(record, cfg)
    if code == EXIT_COUNT:
        print(f"lamelab: count mismatch: expected {record.expected}, found {record.found}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
