"""``tcmcap`` command line: capacity tables, plot data, oracles and simulations.

Every subcommand writes a CSV (or TSV) body to stdout or ``--out``.  Human
readable notes, cache-hit labels and errors go to stderr.  Exit codes:
0 success, 1 usage error, 2 numerical failure, 3 regression-gate failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .asymptotics import capacity_ratio_sweep
from .lifted_rdt import C3_BRACKET, GAMMA_BRACKET, capacity_lifted, phibar0, phibar1, saddle_grid
from .memsim import DEFAULT_WORK_BUDGET, NetworkShape, empirical_capacity
from .oracle import DEFAULT_SAMPLES, mc_phi1, mc_phibar1
from .plain_rdt import CapacityError, CapacityResult, Method, capacity_plain, phi1
from .records import RunCache, RunRecord, read_config
from .reference import REFERENCE_DS, REFERENCE_TABLE
from .special_math import DEFAULT_QUAD, ROOT_TOL, QuadratureSpec

__all__ = ["main", "build_parser", "fmt"]

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_REGRESSION = 0, 1, 2, 3
GATE_TOLERANCE = 0.02


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(x) -> str:
    """Locale-free number text: ints verbatim, floats to 6 significant digits."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = f"{x:.6g}"
    return "0" if s == "-0" else s


class Context:
    def __init__(self, args):
        self.args = args
        self.cache = None if args.no_cache else RunCache()
        self.stderr = sys.stderr

    def note(self, msg: str) -> None:
        print(msg, file=self.stderr)

    def capacity(self, method: Method, d: int, tol: float | None) -> CapacityResult:
        params = {"method": method.value, "d": d, "tol": tol}
        if self.cache is not None:
            hit = self.cache.lookup("capacity", params)
            if hit is not None:
                self.note(f"# cache hit: capacity method={method.value} d={d}")
                return hit.results[0]
        if method is Method.PLAIN:
            spec = DEFAULT_QUAD if tol is None else QuadratureSpec(abs_tol=tol, rel_tol=tol)
            res = capacity_plain(d, spec)
            res.diagnostics["tol"] = spec.rel_tol
        else:
            res = capacity_lifted(d, tol=ROOT_TOL if tol is None else tol)
        if self.cache is not None:
            self.cache.append(RunRecord("capacity", params, [res]))
        return res


def _write(ctx: Context, header: Sequence[str], rows) -> None:
    delim = "\t" if ctx.args.format == "tsv" else ","
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delim, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in r])
    text = buf.getvalue()
    if ctx.args.out:
        Path(ctx.args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _odd_list(args, default: Sequence[int] | None = None) -> list[int]:
    if args.d is not None:
        if args.d_min is not None or args.d_max is not None:
            raise UsageError("give either --d or a --d-min/--d-max range, not both")
        ds = list(args.d)
    elif args.d_max is not None:
        lo = 1 if args.d_min is None else args.d_min
        if args.d_step < 1:
            raise UsageError("--d-step must be positive")
        ds = list(range(lo, args.d_max + 1, args.d_step))
    elif default is not None:
        ds = list(default)
    else:
        raise UsageError("need --d or --d-max")
    bad = [d for d in ds if d < 1 or d % 2 == 0]
    if bad or not ds:
        raise UsageError(f"d must be odd positive integers, got {bad or ds}")
    return ds


def cmd_capacity(ctx: Context) -> int:
    args = ctx.args
    if args.method is None:
        raise UsageError("capacity: --method is required")
    method = Method(args.method)
    rows = []
    for d in _odd_list(args):
        t0 = time.perf_counter()
        res = ctx.capacity(method, d, args.tol)
        ms = (time.perf_counter() - t0) * 1e3
        diag = res.diagnostics
        lifted = method is Method.LIFTED
        rows.append(
            [
                d,
                method.value,
                res.alpha_bound,
                diag.get("c3_star") if lifted else None,
                diag.get("gamma_star") if lifted else None,
                diag.get("tol"),
                ms if args.timings else None,
            ]
        )
    _write(ctx, ["d", "method", "alpha_bound", "c3_star", "gamma_star", "tol", "runtime_ms"], rows)
    return EXIT_OK


def cmd_table1(ctx: Context) -> int:
    gate = ctx.args.gate
    rows, failures = [], []
    lines = [f"{'d':>3} {'method':<24} {'computed':>10} {'reference':>10} {'abs_dev':>9}"]
    for method in (Method.LIFTED, Method.PLAIN):
        for d in REFERENCE_DS:
            val = ctx.capacity(method, d, ctx.args.tol).alpha_bound
            ref = REFERENCE_TABLE.get(d, method.value)
            dev = abs(val - ref)
            ok = dev <= gate
            if not ok:
                failures.append((d, method.value, val, ref, dev))
            rows.append([d, method.value, "computed", val, ref, dev, ok])
            lines.append(f"{d:>3} {method.value:<24} {val:>10.4f} {ref:>10.2f} {dev:>9.4f}{'' if ok else '  !'}")
    for name in ("replica_symmetry", "combinatorial_geometry"):
        for d in REFERENCE_DS:
            ref = REFERENCE_TABLE.get(d, name)
            rows.append([d, name, "reference", ref, ref, None, None])
            lines.append(f"{d:>3} {name:<24} {'':>10} {ref:>10.2f} {'':>9}")
    _write(ctx, ["d", "method", "kind", "alpha", "reference", "abs_dev", "within_tol"], rows)
    for line in lines:
        ctx.note(line)
    for d, m, val, ref, dev in failures:
        ctx.note(f"REGRESSION: {m} d={d} computed {fmt(val)} vs reference {fmt(ref)} (|dev| {fmt(dev)} > {fmt(gate)})")
    return EXIT_REGRESSION if failures else EXIT_OK


def cmd_figure1(ctx: Context) -> int:
    d_max = ctx.args.d_max
    if d_max < 1 or d_max % 2 == 0:
        raise UsageError(f"--d-max must be odd and positive, got {d_max}")
    rows = []
    for d in range(1, d_max + 1, 2):
        lif = ctx.capacity(Method.LIFTED, d, ctx.args.tol).alpha_bound
        pla = ctx.capacity(Method.PLAIN, d, ctx.args.tol).alpha_bound
        rows.append([d, lif, pla, REFERENCE_TABLE.get(d, "combinatorial_geometry")])
    _write(ctx, ["d", "lifted", "plain", "cg_reference"], rows)
    return EXIT_OK


def cmd_asymptotic(ctx: Context) -> int:
    ds = _odd_list(ctx.args, default=(101, 1001, 10001))
    pts = capacity_ratio_sweep(sorted(set(ds)))
    _write(ctx, ["d", "c_hat", "ratio", "limit_gap"], [[p.d, p.c_hat, p.ratio, p.limit_gap] for p in pts])
    return EXIT_OK


def cmd_oracle(ctx: Context) -> int:
    args = ctx.args
    ds = _odd_list(args, default=(3, 5, 7))
    c3s, gammas = args.c3, args.gamma
    if len(c3s) != len(gammas):
        raise UsageError("--c3 and --gamma must have the same number of values")
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    rows = []
    if args.kind in ("phi1", "both"):
        for d in ds:
            for l in args.l:
                if l > (d + 1) // 2:
                    continue
                est = mc_phi1(l, d, args.samples, args.seed)
                q = phi1(l, d)
                rows.append([l, d, None, None, est.mean, est.stderr, q, abs(q - est.mean), est.z_score(q)])
    if args.kind in ("phibar1", "both"):
        for d in ds:
            for l in args.l:
                if l > (d + 1) // 2:
                    continue
                for c3, g in zip(c3s, gammas):
                    est = mc_phibar1(l, d, c3, g, args.samples, args.seed)
                    q = phibar1(l, d, c3, g)
                    rows.append([l, d, c3, g, est.mean, est.stderr, q, abs(q - est.mean), est.z_score(q)])
    _write(ctx, ["l", "d", "c3", "gamma", "mc_mean", "mc_stderr", "quadrature", "abs_gap", "z_score"], rows)
    return EXIT_OK


def _grid(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0 or hi < lo:
        raise UsageError("need --alpha-step > 0 and --alpha-max >= --alpha-min")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


def cmd_simulate(ctx: Context) -> int:
    args = ctx.args
    d = 1 if args.d is None else args.d[0]
    if args.d is not None and len(args.d) != 1:
        raise UsageError("simulate takes a single --d")
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    try:
        shape = NetworkShape.from_blocks(d, args.delta)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    grid = _grid(args.alpha_min, args.alpha_max, args.alpha_step)
    try:
        curve = empirical_capacity(shape, grid, args.trials, args.seed, args.work_budget)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if curve.resamples:
        ctx.note(f"# resampled {curve.resamples} degenerate draws")
    rows = [[p.alpha, p.m, p.trials, p.success_frac, p.ci_lo, p.ci_hi, p.timeout_frac] for p in curve.points]
    _write(ctx, ["alpha", "m", "trials", "success_frac", "ci_lo", "ci_hi", "timeout_frac"], rows)
    return EXIT_OK


def cmd_saddle(ctx: Context) -> int:
    args = ctx.args
    if args.d is None or len(args.d) != 1:
        raise UsageError("saddle takes a single --d")
    d = _odd_list(args)[0]
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    c3s = np.geomspace(C3_BRACKET.lo, C3_BRACKET.hi, args.points)
    gammas = np.geomspace(GAMMA_BRACKET.lo, GAMMA_BRACKET.hi, args.points)
    grid = saddle_grid(args.alpha, d, c3s, gammas)
    sp = phibar0(args.alpha, d)
    ctx.note(f"# saddle: c3={fmt(sp.c3)} gamma={fmt(sp.gamma)} value={fmt(sp.value)} multimodal={sp.multimodal}")
    rows = [[c3, g, grid[i, j]] for i, c3 in enumerate(c3s) for j, g in enumerate(gammas)]
    _write(ctx, ["c3", "gamma", "objective"], rows)
    return EXIT_OK


COMMANDS = {
    "capacity": cmd_capacity,
    "table1": cmd_table1,
    "figure1": cmd_figure1,
    "asymptotic": cmd_asymptotic,
    "oracle": cmd_oracle,
    "simulate": cmd_simulate,
    "saddle": cmd_saddle,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="write the CSV body here instead of stdout")
    common.add_argument("--format", choices=("csv", "tsv"), default="csv")
    common.add_argument("--config", help="flat key=value file of flag defaults")
    common.add_argument("--no-cache", action="store_true", help="neither read nor write the run cache")
    common.add_argument("--tol", type=float, default=None, help="root tolerance (lifted) or quadrature tolerance (plain)")

    def d_flags(p, single=False):
        p.add_argument("--d", type=int, nargs=None if single else "+", default=None)
        p.add_argument("--d-min", type=int, default=None)
        p.add_argument("--d-max", type=int, default=None)
        p.add_argument("--d-step", type=int, default=2)

    parser = _Parser(prog="tcmcap", description="Capacity bounds for treelike committee machines.")
    parser.add_argument("--version", action="version", version=f"tcmcap {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("capacity", parents=[common], help="plain or lifted bound for odd d")
    p.add_argument("--method", choices=[m.value for m in Method])
    d_flags(p)
    p.add_argument("--timings", action="store_true", help="fill the runtime_ms column")

    p = sub.add_parser("table1", parents=[common], help="bounds for d = 1, 3, 5, 7 against reference values")
    p.add_argument("--gate", type=float, default=GATE_TOLERANCE, help="max allowed |computed - reference|")

    p = sub.add_parser("figure1", parents=[common], help="plot data: lifted and plain bounds for odd d")
    p.add_argument("--d-max", type=int, default=25)

    p = sub.add_parser("asymptotic", parents=[common], help="c_hat(d)/sqrt(d) against its limit")
    d_flags(p)

    p = sub.add_parser("oracle", parents=[common], help="Monte-Carlo check of the quadrature kernels")
    d_flags(p)
    p.add_argument("--l", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--c3", type=float, nargs="+", default=[1.0, 2.0])
    p.add_argument("--gamma", type=float, nargs="+", default=[1.0, 0.5])
    p.add_argument("--kind", choices=("phi1", "phibar1", "both"), default="both")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("simulate", parents=[common], help="empirical memorization rate of small networks")
    p.add_argument("--d", type=int, nargs="+", default=None, help="hidden width (odd), default 1")
    p.add_argument("--delta", type=int, default=3, help="input block width; n = d * delta")
    p.add_argument("--alpha-min", type=float, default=0.5)
    p.add_argument("--alpha-max", type=float, default=2.5)
    p.add_argument("--alpha-step", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--work-budget", type=int, default=DEFAULT_WORK_BUDGET)

    p = sub.add_parser("saddle", parents=[common], help="dump the inner objective on a (c3, gamma) grid")
    p.add_argument("--alpha", type=float, required=True)
    d_flags(p)
    p.add_argument("--points", type=int, default=16, help="grid points per axis")
    return parser


def _convert(action: argparse.Action, value: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        on = value.strip().lower() in ("1", "true", "yes", "on")
        return on if isinstance(action, argparse._StoreTrueAction) else not on
    conv = action.type or str
    if action.nargs in ("+", "*"):
        return [conv(v) for v in value.replace(",", " ").split()]
    return conv(value)


def _apply_config(parser: argparse.ArgumentParser, argv: list[str], args) -> argparse.Namespace:
    """Re-parse with config values as defaults so explicit flags still win."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    subparser = sub.choices[args.command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in read_config(args.config).items():
        if key not in actions or key in ("config", "help"):
            raise UsageError(f"{args.config}: unknown key {key!r} for {args.command}")
        try:
            defaults[key] = _convert(actions[key], value)
        except ValueError as exc:
            raise UsageError(f"{args.config}: bad value for {key}: {value!r}") from exc
    subparser.set_defaults(**defaults)
    for a in subparser._actions:
        if a.dest in defaults:
            a.required = False
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except UsageError:
            # a required flag may come from the config file
            if "--config" not in argv:
                raise
            pre = _Parser(add_help=False)
            pre.add_argument("command")
            pre.add_argument("--config")
            known, _ = pre.parse_known_args(argv)
            args = argparse.Namespace(command=known.command, config=known.config)
            if args.command not in COMMANDS or not args.config:
                raise
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if args.config:
            args = _apply_config(parser, argv, args)
        return COMMANDS[args.command](Context(args))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CapacityError, ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
