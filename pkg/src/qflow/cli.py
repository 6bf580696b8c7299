"""
Command-line entry point.

Exit codes: 0 success, 2 usage or domain error, 3 numerical failure,
4 input/output failure.  Every subcommand accepts ``--config FILE`` (a JSON
object of flag defaults, overridden by flags given on the command line)
and ``--explain`` (print the effective settings and exit).
"""

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .core import make_params
from .cylinder import ModeOperator, apriori_ratio, assemble, smallest_eigenvalue, solve_mode_bvp
from .delaunay import (
    DelaunaySolution,
    check_prop2,
    default_omega,
    energy_inequality_check,
    gamma_interval,
    sign_property,
    vop_reconstruct,
)
from .errors import DomainError, NumericalError
from .gluing import ScheduleKnobs, run_glue
from .io import DelaunayCache, cached_shoot, check_schema, csv_text, dumps, read_json, write_csv
from .modes import mode_table, n2n_matrix

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class InputError(Exception):
    """Unreadable or incompatible input; maps to exit code 4."""


def _floats(text):
    try:
        return tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc


def _ints(text):
    try:
        return tuple(int(x) for x in str(text).split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from exc


def _emit(text, out):
    if out:
        try:
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise InputError(str(exc)) from exc
    else:
        sys.stdout.write(text)


def _cache_arg(args):
    if getattr(args, "no_cache", False):
        return False
    return DelaunayCache(args.cache) if args.cache else DelaunayCache()


def _shoot(args, n, eps):
    sol, hit = cached_shoot(make_params(n), eps, step=args.step, tol=args.tol, cache=_cache_arg(args))
    print(f"cache {'hit' if hit else 'miss'} for n={n} eps={eps}", file=sys.stderr)
    return sol


def _knobs(args):
    return ScheduleKnobs(delta0=args.delta0, delta1=args.delta1, delta2=args.delta2, m=args.m, b=args.b)


# -- commands ---------------------------------------------------------------


def cmd_params(args):
    _emit(dumps({"params": make_params(args.n).as_dict()}), args.out)


def delaunay_checks(sol):
    """The verification block attached by ``delaunay --check``."""
    p = sol.params
    lam, mu = gamma_interval(p, default_omega(p, sol.eps))
    signs = {"lambda": sign_property(sol, lam), "A/2": sign_property(sol, p.a / 2), "mu": sign_property(sol, mu)}
    # the nested-integral formula cancels terms growing like e^(n t / 2), so
    # it is compared on the first half period where that loss stays small
    t = sol.t[sol.t <= sol.period / 2][:: max(1, len(sol.t) // 4000)]
    vop = float(np.max(np.abs(vop_reconstruct(sol, t) - np.interp(t, sol.t, sol.v))))
    energy = energy_inequality_check(sol)
    block = {
        "prop2": {str(k): v for k, v in check_prop2(sol).items()},
        "sign_property": signs,
        "energy_inequality": energy,
        "vop_max_error": vop,
    }
    block["all_pass"] = bool(all(signs.values()) and energy and vop < 1e-8)
    return block


def cmd_delaunay(args):
    if len(args.eps) != 1:
        raise DomainError("delaunay takes a single eps; use sweep for grids")
    sol = _shoot(args, args.n, args.eps[0])
    doc = {"solution": sol.to_record(), "symmetry_defect": sol.symmetry_defect}
    if args.check:
        doc["verification"] = delaunay_checks(sol)
    if args.csv:
        try:
            write_csv([dict(zip(("t", "v", "v1", "v2", "v3"), row)) for row in sol.samples.tolist()], args.csv)
        except OSError as exc:
            raise InputError(str(exc)) from exc
    _emit(dumps(doc), args.out)


def cmd_modes(args):
    rows = mode_table(args.n, args.lmax)
    _emit(csv_text(rows) if args.format == "csv" else dumps({"n": args.n, "modes": rows}), args.out)


def cmd_n2n(args):
    if args.lmax < 2:
        raise DomainError("lmax must be at least 2")
    rows = []
    for l in range(2, args.lmax + 1):
        M = n2n_matrix(l, args.n)
        det = float(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])
        rows.append(
            {"l": l, "M11": M[0, 0], "M12": M[0, 1], "M21": M[1, 0], "M22": M[1, 1], "det": det,
             "det_closed_form": float((2 * l + args.n - 2) ** 2)}
        )
    _emit(csv_text(rows) if args.format == "csv" else dumps({"n": args.n, "n2n": rows}), args.out)


def _forcing(kind, t):
    if kind == "zero":
        return np.zeros_like(t)
    if kind == "bump":
        return np.where((t > 1) & (t < 2), np.sin(np.pi * (t - 1)) ** 4, 0.0)
    raise DomainError(f"unknown forcing {kind!r}")


def cmd_modesolve(args):
    p = make_params(args.n)
    sol = _shoot(args, args.n, args.eps[0]) if args.potential == "delaunay" else None
    op = ModeOperator(p, args.l, args.t0, args.T, args.h, args.bc, sol, args.potential, args.scheme)
    system = assemble(op)
    f = _forcing(args.forcing, op.grid)
    w = solve_mode_bvp(system, f)
    doc = {"n": args.n, "l": args.l, "eps": args.eps[0] if sol else None, "t0": args.t0, "T": args.T, "h": args.h,
           "bc": args.bc, "scheme": args.scheme, "potential": args.potential, "forcing": args.forcing,
           "delta": args.delta, "ratio": apriori_ratio(op, f, args.delta, system), "max_abs_w": float(np.max(np.abs(w)))}
    if args.scheme == "reflect":
        doc["smallest_eigenvalue"] = smallest_eigenvalue(op)
    if args.csv:
        try:
            write_csv([{"t": t, "f": ff, "w": ww} for t, ff, ww in zip(op.grid.tolist(), f.tolist(), w.tolist())], args.csv)
        except OSError as exc:
            raise InputError(str(exc)) from exc
    _emit(dumps(doc), args.out)


def _glue_manifest(args, n, eps, solution):
    _, manifest = run_glue(make_params(n), eps, knobs=_knobs(args), l_max=args.lmax, solution=solution)
    return manifest


def cmd_glue(args):
    if len(args.eps) != 1:
        raise DomainError("glue takes a single eps; use sweep for grids")
    sol = _shoot(args, args.n, args.eps[0])
    _emit(dumps(_glue_manifest(args, args.n, args.eps[0], sol)), args.out)


def _sweep_row(args, eps, sol):
    if args.what == "delaunay":
        rec = sol.to_record()
        return {k: rec[k] for k in ("n", "eps", "q", "period", "energy", "alpha", "beta")}
    man = _glue_manifest(args, args.n, eps, sol)
    mis = man["mismatch"]
    return {"n": args.n, "eps": eps, "r_eps": man["schedule"]["r_eps"], "b": man["solved"]["b"],
            "lambda": man["solved"]["lambda"], "mismatch_max": max(mis.values()),
            "leading_mismatch": max(man["initial_mismatch"].values()), "pde_residual": man["pde_residual"],
            "T": man["T"], "T_model": man["T_model"]}


def _sweep_task(payload):
    """Worker: look the shot up read-only, shoot on a miss, return the row and any new record."""
    args, eps = payload
    params = make_params(args.n)
    cache = _cache_arg(args)
    rec = cache.lookup(args.n, eps, args.step, args.tol) if cache else None
    if rec is not None:
        sol, new = DelaunaySolution.from_record(rec["solution"]), None
    else:
        sol, _ = cached_shoot(params, eps, step=args.step, tol=args.tol, cache=False)
        new = sol.to_record()
    return _sweep_row(args, eps, sol), new


def cmd_sweep(args):
    payloads = [(args, eps) for eps in args.eps]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_task, payloads))
    else:
        results = [_sweep_task(pl) for pl in payloads]
    cache = _cache_arg(args)
    if cache:
        # single writer: only the parent appends to the cache
        for eps, (_, rec) in zip(args.eps, results):
            if rec is not None:
                cache.store(DelaunaySolution.from_record(rec), args.tol, args.step)
    _emit(csv_text([row for row, _ in results]), args.out)


def cmd_verify(args):
    from .verify import verify_report

    for path in args.input or ():
        try:
            doc = read_json(path)
            check_schema(doc)
        except (OSError, json.JSONDecodeError, DomainError) as exc:
            raise InputError(f"{path}: {exc}") from exc
        print(f"{path}: schema ok", file=sys.stderr)
    if args.inputs_only:
        return EXIT_OK
    text, results = verify_report(numbers=args.criteria, repeat=not args.no_repeat)
    _emit(text, args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


# -- parser -----------------------------------------------------------------


def _common(sp, *, eps=False, shoot=False, out=True):
    sp.add_argument("--config", help="JSON file of flag defaults")
    sp.add_argument("--explain", action="store_true", help="print the effective settings and exit")
    if out:
        sp.add_argument("--out", help="write the result here instead of standard output")
    sp.add_argument("--n", type=int, default=5, help="dimension (>= 5)")
    if eps:
        sp.add_argument("--eps", type=_floats, default=(0.2,), help="necksize, or a comma-separated grid")
    if shoot:
        sp.add_argument("--step", type=float, default=1e-4, help="Runge-Kutta step")
        sp.add_argument("--tol", type=float, default=1e-10, help="relative collapse tolerance of the shooting")
        sp.add_argument("--cache", help="cache file (default: $QFLOW_CACHE or ~/.cache/qflow/delaunay.jsonl)")
        sp.add_argument("--no-cache", action="store_true", help="do not read or write the cache")


def _knob_flags(sp):
    d = ScheduleKnobs()
    sp.add_argument("--delta0", type=float, default=d.delta0)
    sp.add_argument("--delta1", type=float, default=d.delta1)
    sp.add_argument("--delta2", type=float, default=d.delta2)
    sp.add_argument("--m", type=float, default=d.m)
    sp.add_argument("--b", type=float, default=d.b, help="seed for b")
    sp.add_argument("--lmax", type=int, default=4, help="highest matched degree")


def build_parser():
    parser = argparse.ArgumentParser(prog="qflow", description="Delaunay-type ends and their gluing, numerically.")
    parser.add_argument("--version", action="version", version=f"qflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("params", help="dimension constants")
    _common(sp)
    sp.set_defaults(func=cmd_params)

    sp = sub.add_parser("delaunay", help="shoot one Delaunay orbit")
    _common(sp, eps=True, shoot=True)
    sp.add_argument("--check", action="store_true", help="attach a verification block")
    sp.add_argument("--csv", help="write the sampled orbit as CSV")
    sp.set_defaults(func=cmd_delaunay)

    for name, func, default in (("modes", cmd_modes, 6), ("n2n", cmd_n2n, 10)):
        sp = sub.add_parser(name, help="mode table" if name == "modes" else "Navier-to-Neumann matrices")
        _common(sp)
        sp.add_argument("--lmax", type=int, default=default)
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.set_defaults(func=func)

    sp = sub.add_parser("modesolve", help="solve one mode problem on a cylinder interval")
    _common(sp, eps=True, shoot=True)
    sp.add_argument("--l", type=int, default=2, help="harmonic degree")
    sp.add_argument("--t0", type=float, default=0.0)
    sp.add_argument("--T", type=float, default=10.0)
    sp.add_argument("--h", type=float, default=0.01)
    sp.add_argument("--bc", choices=("navier", "terminal"), default="navier")
    sp.add_argument("--scheme", choices=("closure", "reflect"), default="closure")
    sp.add_argument("--potential", choices=("delaunay", "cylinder", "zero"), default="delaunay")
    sp.add_argument("--forcing", choices=("bump", "zero"), default="bump")
    sp.add_argument("--delta", type=float, default=0.5, help="exponential weight of the ratio")
    sp.add_argument("--csv", help="write (t, f, w) as CSV")
    sp.set_defaults(func=cmd_modesolve)

    sp = sub.add_parser("glue", help="match interior and exterior fields")
    _common(sp, eps=True, shoot=True)
    _knob_flags(sp)
    sp.set_defaults(func=cmd_glue)

    sp = sub.add_parser("sweep", help="run an eps grid and emit CSV")
    _common(sp, eps=True, shoot=True)
    _knob_flags(sp)
    sp.add_argument("--what", choices=("delaunay", "glue"), default="delaunay")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_sweep, eps=(0.3, 0.2, 0.1, 0.05))

    sp = sub.add_parser("verify", help="run the acceptance criteria")
    sp.add_argument("--config", help="JSON file of flag defaults")
    sp.add_argument("--explain", action="store_true")
    sp.add_argument("--out")
    sp.add_argument("--input", action="append", help="JSON output to validate against this schema version")
    sp.add_argument("--inputs-only", action="store_true", help="only validate the --input files")
    sp.add_argument("--criteria", type=_ints, default=None, help="subset, e.g. 1,2,8")
    sp.add_argument("--no-repeat", action="store_true", help="skip the determinism repeat")
    sp.set_defaults(func=cmd_verify)
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from --config, so explicit flags still win."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        cfg = read_json(args.config)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InputError(f"{args.config}: expected a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    unknown = sorted(set(cfg) - set(known))
    if unknown:
        raise DomainError(f"unknown config keys: {', '.join(unknown)}")
    converted = {}
    for k, v in cfg.items():
        typ = known[k].type
        if typ in (_floats, _ints) and not isinstance(v, str):
            v = ",".join(map(str, v if isinstance(v, (list, tuple)) else [v]))
        converted[k] = typ(v) if typ is not None and isinstance(v, str) else v
    sub.set_defaults(**converted)
    return parser.parse_args(argv)


def _explain(args):
    skip = {"func", "explain", "config"}
    settings = {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(vars(args).items()) if k not in skip}
    sys.stdout.write(dumps({"command": args.command, "settings": settings}))


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.explain:
            _explain(args)
            return EXIT_OK
        if hasattr(args, "n"):
            make_params(args.n)
        code = args.func(args)
        return EXIT_OK if code is None else code
    except DomainError as exc:
        print(f"qflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"qflow: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, OSError) as exc:
        print(f"qflow: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
