"""Command-line front end.

Every run writes its outputs plus a JSON metadata file whose ``params`` block
can be passed back with ``--config`` to replay the run byte for byte.
Precedence is flags > config file > built-in defaults. ``SHEPPLAB_SEED``
overrides ``--seed`` when set.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

from . import asymptotics as asy
from . import montecarlo as mc
from . import pickands as pk
from .errors import ConfigurationError, FitError, NumericalError, RegimeError, ShepplabError
from .fbm_sim import PathGrid, sample_fbm_dense, sample_fbm_spectral, write_path_csv
from .streams import RngStream

SEED_ENV = "SHEPPLAB_SEED"
# Flags that locate files or tune parallelism; they never affect numbers.
_NOT_REPLAYED = {"config", "out", "workers"}


class UsageError(Exception):
    def __init__(self, message: str, parser: argparse.ArgumentParser | None = None):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, self)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _reps(text: str) -> int:
    # accept 1e6 style counts
    v = float(text)
    if v != int(v) or v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer count, got {text!r}")
    return int(v)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", default=None, help="key=value file or JSON metadata to replay")
    p.add_argument("--seed", type=int, default=0, help=f"master seed ({SEED_ENV} overrides)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    p.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="shepplab", description="Shepp statistic simulation lab",
                     formatter_class=fmt)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="dump fBm paths as CSV", formatter_class=fmt)
    p.add_argument("--h", type=float, default=0.25, help="Hurst index")
    p.add_argument("--T", type=float, default=1.0, help="path horizon")
    p.add_argument("--m", type=int, default=256, help="grid steps per unit time")
    p.add_argument("--paths", type=int, default=1, help="number of paths")
    p.add_argument("--method", choices=("spectral", "dense"), default="spectral")
    _common(p)

    p = sub.add_parser("tail", help="tail probabilities and fitted constant", formatter_class=fmt)
    p.add_argument("--h", type=float, default=0.25, help="Hurst index")
    p.add_argument("--T", type=float, default=1.0, help="horizon of start points")
    p.add_argument("--m", type=int, default=256, help="grid steps per unit time")
    p.add_argument("--u", type=_floats, default="2,2.5,3,3.5", help="thresholds")
    p.add_argument("--reps", type=_reps, default=100_000, help="replications")
    p.add_argument("--usable-rel", type=float, default=mc.USABLE_REL_ERR,
                   help="max stderr/p_hat for a threshold to enter the fit")
    _common(p)

    p = sub.add_parser("pickands", help="Pickands constant estimate and extrapolation",
                       formatter_class=fmt)
    p.add_argument("--alpha", type=float, default=1.0, help="index alpha in (0, 2]")
    p.add_argument("--lambda", dest="lam", type=_floats, default=str(pk.DEFAULT_LAMBDA),
                   help="horizons lambda")
    p.add_argument("--grid-step", type=float, default=pk.DEFAULT_GRID_STEP, help="grid step")
    p.add_argument("--coarsen", type=_ints, default="2",
                   help="extra grid factors evaluated on the same paths")
    p.add_argument("--reps", type=_reps, default=pk.DEFAULT_REPS, help="replications")
    p.add_argument("--method", choices=pk.METHODS, default="tilted")
    _common(p)

    p = sub.add_parser("asymptotics", help="evaluate the closed-form approximations",
                       formatter_class=fmt)
    p.add_argument("--h", type=float, default=0.25, help="Hurst index")
    p.add_argument("--T", type=float, default=1.0, help="horizon")
    p.add_argument("--u", type=_floats, default="3", help="thresholds")
    p.add_argument("--pickands", type=float, default=None, help="Pickands constant of index 2H")
    p.add_argument("--htilde", type=float, default=None, help="Brownian-case tail constant")
    p.add_argument("--eps", type=float, default=None, help="restricted-window exponent slack (H/2 if unset)")
    p.add_argument("--C", type=float, default=1.0, help="restricted-window bound constant")
    _common(p)

    p = sub.add_parser("gumbel", help="KS distance to the Gumbel limit", formatter_class=fmt)
    p.add_argument("--h", type=float, default=0.25, help="Hurst index")
    p.add_argument("--T", type=_floats, default="10,100,1000", help="horizons")
    p.add_argument("--m", type=int, default=256, help="grid steps per unit time")
    p.add_argument("--reps", type=_reps, default=10_000, help="replications per horizon")
    p.add_argument("--pickands", type=float, default=None, help="Pickands constant of index 2H (required)")
    _common(p)

    p = sub.add_parser("lemma31", help="restricted versus full window exceedances",
                       formatter_class=fmt)
    p.add_argument("--h", type=float, default=0.25, help="Hurst index")
    p.add_argument("--T", type=float, default=1.0, help="horizon")
    p.add_argument("--m", type=int, default=256, help="grid steps per unit time")
    p.add_argument("--u", type=_floats, default="1.5,2,2.5,3", help="thresholds")
    p.add_argument("--reps", type=_reps, default=1_000_000, help="replications")
    _common(p)

    p = sub.add_parser("scan-demo", help="Poisson scan statistic versus its Brownian limit",
                       formatter_class=fmt)
    p.add_argument("--lambda", dest="lam", type=_floats, default="10,100,1000", help="Poisson rates")
    p.add_argument("--tau", type=float, default=1.0, help="window length")
    p.add_argument("--T", type=float, default=10.0, help="horizon")
    p.add_argument("--m", type=int, default=256, help="grid steps per unit time (Brownian side)")
    p.add_argument("--reps", type=_reps, default=10_000, help="replications")
    _common(p)
    return parser


def _subparser(parser, name) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    raise UsageError(f"unknown subcommand {name!r}", parser)


def _valid_flags(p: argparse.ArgumentParser) -> list[str]:
    return [s for a in p._actions for s in a.option_strings if s.startswith("--")]


def _dests(p: argparse.ArgumentParser) -> dict[str, argparse.Action]:
    return {a.dest: a for a in p._actions if a.option_strings and a.dest != "help"}


def load_config(path) -> dict[str, str]:
    """Read a flat ``key=value`` file or a JSON metadata file into flag strings."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        meta = json.loads(text)
        params = meta.get("params", meta)
        return {str(k): str(v) for k, v in params.items()}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def _cli_str(v) -> str:
    if isinstance(v, (list, tuple)):
        return ",".join(_cli_str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse(argv) -> tuple[argparse.Namespace, dict]:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        # unrecognized flags are reported by the top-level parser; list the subcommand's
        names = [a for a in argv if a in _COMMANDS]
        if exc.parser is parser and names:
            exc.parser = _subparser(parser, names[0])
        raise
    sub = _subparser(parser, args.subcommand)
    info = {"seed_source": "flag"}
    if args.config:
        values = load_config(args.config)
        values.pop("subcommand", None)
        dests = _dests(sub)
        defaults = {}
        for key, value in values.items():
            dest = key.lstrip("-").replace("-", "_")
            dest = {"lambda": "lam"}.get(dest, dest)
            if dest not in dests or dest in ("config",):
                raise UsageError(f"unknown config key {key!r}", sub)
            defaults[dest] = None if value == "None" else value
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
        info["config_file"] = str(args.config)
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            args.seed = int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}", sub)
        info["seed_source"] = "env"
    RngStream(args.seed)  # range check
    if args.workers < 1:
        raise UsageError(f"--workers must be >= 1, got {args.workers}", sub)
    return args, info


def _params(args) -> dict:
    return {k: _cli_str(v) for k, v in vars(args).items()
            if k not in _NOT_REPLAYED and v is not None}


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(args, info, name: str, t0: float, extra=None) -> Path:
    meta = dict(info)
    if extra:
        meta.update(extra)
    return mc.write_metadata(_outdir(args) / f"{name}.json", args.subcommand, _params(args),
                             time.perf_counter() - t0, meta)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_simulate(args, info, t0):
    n = round(args.T * args.m)
    if n < 1 or abs(n - args.T * args.m) > 1e-9 * max(1.0, args.T * args.m):
        raise ConfigurationError(f"T*m must be a positive integer, got {args.T * args.m}")
    grid = PathGrid(n, 1.0 / args.m)
    sampler = sample_fbm_spectral if args.method == "spectral" else sample_fbm_dense
    out = _outdir(args)
    for k in range(args.paths):
        path = sampler(grid, args.h, RngStream(args.seed, k))
        write_path_csv(path, out / f"path_{k:05d}.csv")
    _finish(args, info, "simulate", t0)
    print(f"wrote {args.paths} path(s) of {n} steps to {out}")


def _cmd_tail(args, info, t0):
    cfg = mc.ExperimentConfig(args.h, args.T, args.m, args.u, args.reps, args.seed, args.workers)
    ests = mc.estimate_tail(cfg)
    mc.write_tail_csv(ests, _outdir(args) / "tail.csv", args.seed)
    for e in ests:
        print(f"u={e.u:g} p_hat={e.p_hat:.6g} stderr={e.stderr:.3g} "
              f"ci95=[{e.ci95[0]:.6g}, {e.ci95[1]:.6g}] count={e.count}")
    extra = {}
    try:
        fit = mc.fit_tail_constant(ests, args.h, args.T, args.usable_rel)
    except (FitError, RegimeError) as exc:
        print(f"no tail-constant fit: {exc}")
    else:
        for u, r, se in fit.ratios:
            print(f"ratio u={u:g} r={r:.6g} stderr={se:.3g}")
        print(f"fitted squared constant {fit.constant:.6g} band [{fit.band[0]:.6g}, {fit.band[1]:.6g}]"
              f" -> Pickands {fit.pickands:.6g}")
        extra["fit"] = {"constant": fit.constant, "band": fit.band, "used_u": fit.used_u}
        if fit.zholud is not None:
            print(f"Brownian-case constant {fit.zholud:.6g}")
            extra["fit"]["zholud"] = fit.zholud
    _finish(args, info, "tail", t0, extra)


def _cmd_pickands(args, info, t0):
    factors = sorted({1, *args.coarsen})
    results = pk.pickands_sweep(args.alpha, args.lam, args.grid_step, factors, args.reps,
                                args.seed, args.workers, args.method)
    pk.write_trace_csv(results, _outdir(args) / "pickands.csv")
    for e in results:
        flag = " (dominated by one replication)" if e.dominated else ""
        print(f"alpha={e.alpha:g} lambda={e.lam:g} grid_step={e.grid_step:g} "
              f"estimate={e.estimate:.6g} stderr={e.stderr:.3g}{flag}")
    extra = {}
    if len(args.lam) >= 3:
        ex = pk.pickands_extrapolate(results)
        print(f"extrapolated {ex.value:.6g} band [{ex.band[0]:.6g}, {ex.band[1]:.6g}] "
              f"model {ex.model}")
        extra["extrapolated"] = {"value": ex.value, "band": ex.band}
    _finish(args, info, "pickands", t0, extra)


def _cmd_asymptotics(args, info, t0):
    lines = []
    for u in args.u:
        if args.pickands is not None and args.h < 0.5:
            v = asy.theorem21_tail(asy.AsymptoticParams(args.h, args.T, args.pickands), u)
            lines.append(f"tail u={u:g} value={v.value:.6g} log={v.log:.6g}")
        if args.htilde is not None:
            v = asy.zholud_tail(args.T, u, args.htilde)
            lines.append(f"brownian_tail u={u:g} value={v.value:.6g} log={v.log:.6g}")
        if math.log(u) ** 2 < u * u:
            v = asy.lemma31_bound(args.h, args.T, u, args.eps, args.C)
            lines.append(f"restricted_bound u={u:g} value={v.value:.6g} log={v.log:.6g}")
    if args.pickands is not None and args.h < 0.5 and args.T > math.e:
        a, b = asy.gumbel_norming(args.h, args.T, args.pickands)
        lines.append(f"gumbel a_T={a:.10g} b_T={b:.10g}")
    if not lines:
        raise ConfigurationError("nothing to evaluate: pass --pickands (H < 1/2) or --htilde")
    print("\n".join(lines))


def _cmd_gumbel(args, info, t0):
    if args.pickands is None:
        raise ConfigurationError("gumbel needs --pickands")
    res = mc.gumbel_test(args.h, args.pickands, args.T, args.reps, args.m, args.seed, args.workers)
    mc.write_gumbel_csv(res, _outdir(args) / "gumbel.csv")
    for r in res:
        print(f"T={r.T:g} a_T={r.a_T:.6g} b_T={r.b_T:.6g} ks={r.ks_stat:.6g}")
    _finish(args, info, "gumbel", t0)


def _cmd_lemma31(args, info, t0):
    rows = mc.lemma31_check(args.h, args.T, args.m, args.u, args.reps, args.seed, args.workers)
    with (_outdir(args) / "lemma31.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u", "window", "restricted_count", "full_count", "n_reps", "ratio"])
        for r in rows:
            w.writerow([repr(r.u), r.window, r.restricted_count, r.full_count, r.n_reps,
                        f"{r.ratio:.17g}"])
            print(f"u={r.u:g} window={r.window} restricted={r.restricted_count} "
                  f"full={r.full_count} ratio={r.ratio:.6g}")
    _finish(args, info, "lemma31", t0)


def _cmd_scan(args, info, t0):
    rows = mc.scan_demo(args.lam, args.tau, args.T, args.reps, args.m, args.seed, args.workers)
    with (_outdir(args) / "scan.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "ks_distance", "n_reps"])
        for r in rows:
            w.writerow([repr(r.lam), f"{r.ks_distance:.17g}", r.n_reps])
            print(f"lambda={r.lam:g} ks={r.ks_distance:.6g}")
    _finish(args, info, "scan", t0)


_COMMANDS = {
    "simulate": _cmd_simulate,
    "tail": _cmd_tail,
    "pickands": _cmd_pickands,
    "asymptotics": _cmd_asymptotics,
    "gumbel": _cmd_gumbel,
    "lemma31": _cmd_lemma31,
    "scan-demo": _cmd_scan,
}


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if any(a in ("-h", "--help") for a in argv):
        try:
            build_parser().parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        except UsageError:
            pass
    try:
        args, info = parse(argv)
        _COMMANDS[args.subcommand](args, info, time.perf_counter())
    except UsageError as exc:
        msg = f"error: {exc}"
        if exc.parser is not None:
            msg += f" (valid flags: {' '.join(_valid_flags(exc.parser))})"
        print(msg, file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure in module {exc.module}: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, ShepplabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())
