"""Command line: ``gauge-measure integrate | experiment | setintegrate``.

Exit codes: 0 success, 1 bad configuration or arguments, 2 integrand not
integrable, 3 no convergence (or an experiment that does not converge),
4 a sequence that breaks its domination hypothesis.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import lab
from .config import THEOREMS, Config, Experiment, load_config, parse_config
from .convex import norm_of_set, validate_convexity
from .domain import MeasurableSet
from .errors import (
    ConfigError, GeneratorViolatesDomination, GridMismatch, NegativeScalar, NoConvergence, NonFiniteSum,
    NotConvexlyIntegrable, NotHKLIntegrable, RefinementBudgetExceeded, SignChangeResolutionFailure,
    TailNotControlled,
)
from .expr import ExprError, parse
from .hk import hk_integrate, hk_integrate_unbounded
from .measures import ScalarMeasure
from .setvalued import sv_kl_henstock_integral
from .vector import DirectionGrid, VectorMeasure, kl_henstock_integral

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRABILITY, EXIT_CONVERGENCE, EXIT_GENERATOR = 0, 1, 2, 3, 4

EXIT_CODES = (
    ((ConfigError, ExprError, GridMismatch, NegativeScalar, ValueError), EXIT_CONFIG),
    ((NotHKLIntegrable, NotConvexlyIntegrable, NonFiniteSum), EXIT_INTEGRABILITY),
    ((NoConvergence, RefinementBudgetExceeded, TailNotControlled, SignChangeResolutionFailure), EXIT_CONVERGENCE),
    ((GeneratorViolatesDomination,), EXIT_GENERATOR),
)


class _Usage(Exception):
    """Bad command line; reported with the subcommand's usage line."""


def _fmt(x: float) -> str:
    return repr(float(x))


def _vec(x) -> str:
    return "[" + ", ".join(_fmt(v) for v in np.asarray(x, dtype=float).reshape(-1)) + "]"


def _config(args) -> Config:
    return load_config(args.config) if args.config else Config()


def _set(text: str | None, cfg: Config) -> MeasurableSet:
    if text is None:
        return cfg.settings.domain
    try:
        return MeasurableSet.parse(text)
    except ValueError as exc:
        raise _Usage(f"bad --set {text!r}: {exc}") from None


def _integrand(args, cfg: Config):
    """(f, exempt, value at +inf) from --f or --integrand."""
    if args.f is not None and args.integrand is not None:
        raise _Usage("give either --f or --integrand, not both")
    if args.integrand is not None:
        if args.integrand not in cfg.integrands:
            raise _Usage(f"unknown integrand {args.integrand!r}")
        it = cfg.integrands[args.integrand]
        return it.fn, it.exempt, it.at_infinity
    text = args.f if args.f is not None else "1"
    try:
        return parse(text).bind(), (), None
    except ExprError as exc:
        raise _Usage(f"--f: {exc} (column {exc.column})") from None


def _exempt(args, extra) -> tuple[float, ...]:
    pts = list(extra)
    if args.exempt:
        try:
            pts += [float(x) for x in args.exempt.split(",") if x.strip()]
        except ValueError:
            raise _Usage(f"bad --exempt {args.exempt!r}") from None
    return tuple(pts)


def _tol(args, cfg: Config) -> float:
    tol = cfg.settings.tolerance if args.tol is None else args.tol
    if not tol > 0:
        raise _Usage("--tol must be positive")
    return tol


def cmd_integrate(args, out) -> int:
    cfg = _config(args)
    f, exempt, f_inf = _integrand(args, cfg)
    exempt = _exempt(args, exempt)
    A = _set(args.set, cfg)
    tol = _tol(args, cfg)
    if not cfg.settings.compactified:
        f_inf = None
    if args.measure == "lebesgue":
        mu = VectorMeasure((ScalarMeasure.lebesgue(),))
    elif args.measure in cfg.measures:
        mu = cfg.measures[args.measure]
    else:
        raise _Usage(f"unknown measure {args.measure!r}")
    kw = {"f_inf": f_inf} if f_inf is not None else {}
    if mu.dim == 1 and args.mode == "signed" and args.grid is None and not args.hemisphere:
        m = mu.components[0]
        if A.is_bounded:
            res = hk_integrate(f, A, m, tol, exempt=exempt)
        else:
            res = hk_integrate_unbounded(f, A, m, tol, exempt=exempt, **kw)
        print(f"value = {_fmt(res.value)}", file=out)
        print(f"error_estimate = {_fmt(res.error_estimate)}", file=out)
        return EXIT_OK
    grid = DirectionGrid.default(mu.dim, mu.norm, args.grid or cfg.settings.grid,
                                 args.hemisphere or False)
    res = kl_henstock_integral(f, A, mu, grid, tol, args.mode, exempt=exempt, **kw)
    print(f"x = {_vec(res.x)}", file=out)
    print(f"residual = {_fmt(res.residual)}", file=out)
    print(f"error_estimate = {_fmt(res.error_estimate)}", file=out)
    return EXIT_OK


def _experiment_config(exp: Experiment, cfg: Config, seed: int):
    """Runner config for a named experiment; defaults come from the stock instance."""
    v = exp.values
    st = cfg.settings
    th = exp.theorem
    if "sequence" not in v:
        base = lab.INSTANCES[th](seed=seed)
        over = {}
        if "n" in v:
            over["n_values"] = tuple(v["n"])
        for key in ("tolerance", "integration_tol"):
            if key in v:
                over[key] = v[key]
        return dataclasses.replace(base, **over)
    seq_expr = v["sequence"]

    def sequence(n, e=seq_expr):
        return e.bind(n=n)

    n_values = tuple(v.get("n", lab.LONG_N if th == "dct" else lab.BCT_N))
    common = dict(tolerance=v.get("tolerance", 1e-3), integration_tol=v.get("integration_tol", 1e-7),
                  seed=seed, theorem_id=th)
    if th in ("dct", "bct"):
        mu = v["measure"]
        dominating = v.get("dominating")
        if th == "bct" and "bound" in v:
            K = v["bound"]
            dominating = lambda t, K=K: np.full(np.shape(t), K)  # noqa: E731
        if dominating is None:
            raise GeneratorViolatesDomination(f"experiment {exp.name!r} needs a dominating function or bound")
        grid = DirectionGrid.default(mu.dim, mu.norm, st.grid)
        return lab.DCTConfig(mu, sequence, v["limit"], dominating, st.domain, n_values, grid=grid, **common)
    M = v["setmeasure"]
    grid = DirectionGrid.default(M.dim, M.norm, st.grid)
    return lab.SVConfig(M, sequence, v["limit"], st.domain, n_values, dominating=v.get("dominating"),
                        ui_table=tuple(v.get("ui", ())), grid=grid, **common)


def cmd_experiment(args, out) -> int:
    cfg = _config(args)
    name = args.name or args.theorem
    if name is None:
        raise _Usage("name a theorem or an experiment")
    if name in cfg.experiments:
        exp = cfg.experiments[name]
    elif name in THEOREMS:
        exp = Experiment(name, name, {})
    else:
        raise _Usage(f"unknown theorem or experiment {name!r}; theorems: {', '.join(THEOREMS)}")
    seed = args.seed if args.seed is not None else exp.values.get("seed", cfg.settings.seed)
    run_cfg = _experiment_config(exp, cfg, seed)
    report = lab.RUNNERS[exp.theorem](run_cfg)
    fmt = args.format or (Path(args.out).suffix.lstrip(".").lower() if args.out else "csv")
    if fmt not in ("csv", "json"):
        raise _Usage("--format must be csv or json")
    if args.out:
        lab.emit_report(report, fmt, args.out)
        print(f"verdict = {report.verdict}", file=out)
        print(f"report = {args.out}", file=out)
    else:
        out.write(lab.report_text(report, fmt))
    return EXIT_OK if report.passed else EXIT_CONVERGENCE


def _flag_setmeasure(args, cfg: Config):
    """Set-valued measure from --shape/--center/... flags, through the config parser."""
    lines = ["[setmeasure cli]", f"shape = {args.shape}"]
    for key in ("center", "radius", "radii", "generators", "weights", "support"):
        val = getattr(args, key)
        if val is not None:
            lines.append(f"{key} = {val}")
    if args.norm:
        lines.append(f"norm = {args.norm}")
    if args.center is None:
        lines.append("center = 0; 0")
    if args.shape == "ball" and args.radius is None:
        lines.append("radius = 1")
    try:
        tmp = parse_config("\n".join(lines) + "\n")
    except ConfigError as exc:
        raise _Usage(exc.args[0] if exc.args else str(exc)) from None
    return tmp.setmeasures["cli"]


def cmd_setintegrate(args, out) -> int:
    cfg = _config(args)
    f, exempt, _ = _integrand(args, cfg)
    exempt = _exempt(args, exempt)
    tol = _tol(args, cfg)
    if args.setmeasure is not None:
        if args.setmeasure not in cfg.setmeasures:
            raise _Usage(f"unknown set-valued measure {args.setmeasure!r}")
        M = cfg.setmeasures[args.setmeasure]
    else:
        M = _flag_setmeasure(args, cfg)
    A = _set(args.set, cfg)
    grid = DirectionGrid.default(M.dim, M.norm, args.grid or cfg.settings.grid)
    W = sv_kl_henstock_integral(f, A, M, grid, tol, exempt=exempt)
    ok, worst = validate_convexity(W.values, grid, 4 * tol + 1e-12 * max(1.0, norm_of_set(W)))
    print(f"norm = {_fmt(norm_of_set(W))}", file=out)
    print(f"convexity = {'pass' if ok else 'fail'} (worst violation {_fmt(worst)})", file=out)
    if not np.any(W.values):
        print("set = {0}", file=out)
    header = "\t".join([f"u{i + 1}" for i in range(grid.dim)] + ["support"])
    print(header, file=out)
    for u, h in zip(grid.directions, W.values):
        print("\t".join([_fmt(c) for c in u] + [_fmt(h)]), file=out)
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI file declaring named measures, integrands and experiments")
    p.add_argument("--tol", type=float, help="absolute tolerance (default from [settings], else 1e-9)")


def _add_integrand(p: argparse.ArgumentParser):
    p.add_argument("--f", help="integrand expression in t (default 1)")
    p.add_argument("--integrand", help="name of an [integrand NAME] section")
    p.add_argument("--set", help="integration set, e.g. '[0,1]' or '[0,0.5) U [2,inf)' (default: domain)")
    p.add_argument("--exempt", help="comma-separated points where f is ignored")
    p.add_argument("--grid", type=int, help="number of directions in the base grid")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gauge-measure", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrate", help="integral of f against a scalar or vector measure")
    _add_common(p)
    _add_integrand(p)
    p.add_argument("--measure", default="lebesgue", help="'lebesgue' or the name of a [measure NAME] section")
    p.add_argument("--mode", choices=("signed", "variation"), default="signed")
    p.add_argument("--hemisphere", action="store_true", help="keep one direction of each antipodal pair")
    p.set_defaults(handler=cmd_integrate)

    p = sub.add_parser("experiment", help="run a convergence experiment and write its report")
    _add_common(p)
    p.add_argument("theorem", nargs="?", help=f"one of {', '.join(THEOREMS)} or an [experiment NAME]")
    p.add_argument("--name", help="experiment name (alternative to the positional argument)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="report path; printed to stdout when omitted")
    p.add_argument("--format", choices=("csv", "json"))
    p.set_defaults(handler=cmd_experiment)

    p = sub.add_parser("setintegrate", help="integral of f against a set-valued measure")
    _add_common(p)
    _add_integrand(p)
    p.add_argument("--setmeasure", help="name of a [setmeasure NAME] section")
    p.add_argument("--shape", choices=("ball", "box", "zonotope"), default="ball")
    p.add_argument("--center", help="';'-separated coordinate expressions (default 0; 0)")
    p.add_argument("--radius", help="ball radius expression (default 1)")
    p.add_argument("--radii", help="';'-separated box half-widths")
    p.add_argument("--generators", help="zonotope generators, rows separated by ';'")
    p.add_argument("--weights", help="';'-separated zonotope weight expressions")
    p.add_argument("--support", help="support of the Lebesgue base measure (default: domain)")
    p.add_argument("--norm", choices=("euclidean", "sup", "one"))
    p.set_defaults(handler=cmd_setintegrate)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        return args.handler(args, out)
    except _Usage as exc:
        print(sub.format_usage().rstrip(), file=err)
        print(f"error: {exc}", file=err)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG
    except Exception as exc:
        for types, code in EXIT_CODES:
            if isinstance(exc, types):
                print(f"{type(exc).__name__}: {exc}", file=err)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
