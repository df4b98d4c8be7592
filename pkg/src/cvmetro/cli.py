"""Command-line front end: each subcommand writes ``<out>.csv`` and ``<out>.meta.json``.

Config files hold one ``key = value`` pair per line, where ``key`` is a long
option name of the chosen subcommand (dashes or underscores), ``#`` starts a
comment, and list values are separated by commas or spaces.  Flags given on
the command line override the file.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .curves import CurveData, git_describe

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3

FIGURES = [
    ("4", "fringes", "coherent-light fringes with Monte Carlo noise", "fringes --alpha2 1e6 --lambda 0 --seed 7"),
    ("5", "fringes", "fringes with a squeezed vacuum in the dark port", "fringes --alpha2 1e6 --lambda 10 --seed 7"),
    ("6", "ratio", "squeezed over classical sensitivity versus phase", "ratio --alpha2 1e6 --lambda 10"),
    ("7", "qfi-bounds", "optimal passive QFI and Heisenberg scaling", "qfi-bounds"),
    ("8", "config-opt", "passive interaction, passive detection", "config-opt --family passive-passive --eta 0.9"),
    ("9", "config-opt", "passive interaction, active detection", "config-opt --family passive-active"),
    ("10", "config-opt", "active interaction, active detection", "config-opt --family active-active"),
    ("11", "illumination", "covariance with and without the object", "illumination --seed 1"),
    ("12", "illumination", "target detection error probability", "illumination --seed 1 --m-b 57"),
    ("15", "nrf", "noise reduction factors versus transmission", "nrf --mu 1e2 --lam 1"),
    ("16", "holometer-ratio", "uncertainty ratio versus efficiency", "holometer-ratio --family twb --vary eta"),
    ("17", "holometer-ratio", "uncertainty ratio versus central phase", "holometer-ratio --family twb --vary phi0"),
    ("18", "holometer-ratio", "squeezed-vacuum ratio versus central phase", "holometer-ratio --family squeezed --vary phi0"),
    ("19", "holometer-ratio", "ratio versus squeezing energy", "holometer-ratio --family twb --vary lambda"),
    ("20", "holometer-ratio", "efficiency threshold for twin beams over squeezed vacua", "holometer-ratio --vary lambda --threshold"),
]


class ValidationError(ValueError):
    """Invalid user input; mapped to exit code 2."""


def _threads(args) -> int:
    n = args.threads if args.threads is not None else int(os.environ.get("CVMETRO_THREADS", "1"))
    if n < 1:
        raise ValidationError("--threads must be >= 1")
    return n


def ordered_map(fn, items, threads: int):
    """``map`` that keeps input order, optionally on a thread pool."""
    items = list(items)
    if threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _grid(lo, hi, points, log):
    if points < 1:
        raise ValidationError("points must be >= 1")
    if log:
        if lo <= 0 or hi <= 0:
            raise ValidationError("log grids need positive bounds")
        return np.geomspace(lo, hi, points)
    return np.linspace(lo, hi, points)


def _provenance(args, extra=None) -> dict:
    params = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in ("func", "out", "config", "threads") and not k.startswith("_")
    }
    prov = {"command": args.command, "parameters": params, "source": git_describe(), "version": __version__}
    if extra:
        prov.update(extra)
    return prov


# -- subcommands ---------------------------------------------------------------


def cmd_fringes(args) -> CurveData:
    from .interferometry import simulate_fringes, squeezed_mz

    config = squeezed_mz(args.alpha2, args.lam, args.eta, args.observable)
    grid = np.linspace(0.0, 2 * np.pi, args.points)
    curve = simulate_fringes(config, grid, args.shots, args.seed)
    curve.provenance = _provenance(args, curve.provenance)
    return curve


def cmd_ratio(args) -> CurveData:
    from .interferometry import sensitivity_ratio, squeezed_mz

    grid = np.linspace(0.0, 2 * np.pi, args.points)[1:-1]
    curve = sensitivity_ratio(
        squeezed_mz(args.alpha2, args.lam, args.eta, args.observable),
        squeezed_mz(args.alpha2, 0.0, args.eta, args.observable),
        grid,
    )
    curve.provenance = _provenance(args, curve.provenance)
    return curve


def cmd_qfi_bounds(args) -> CurveData:
    from .estimation import fit_scaling, optimal_passive_qfi, qfi_passive_closed_form

    n_grid = _grid(args.n_min, args.n_max, args.points, True)
    rows = ordered_map(optimal_passive_qfi, n_grid, _threads(args))
    closed = ordered_map(lambda n: optimal_passive_qfi(n, qfi=qfi_passive_closed_form), n_grid, _threads(args))
    beta = np.array([r[0] for r in rows])
    h = np.array([r[1] for r in rows])
    dphi = h**-0.5
    fit = fit_scaling(n_grid, dphi, min_points=min(8, len(n_grid)), min_decades=0.0)
    return CurveData(
        x_label="n_tot",
        y_label="dphi",
        x=n_grid,
        y=dphi,
        columns={
            "beta_tot_max": beta,
            "h_max": h,
            "beta_tot_max_closed_form": [r[0] for r in closed],
            "h_max_closed_form": [r[1] for r in closed],
        },
        y_units="rad",
        provenance=_provenance(args, {"slope": fit.exponent, "slope_stderr": fit.stderr}),
    )


def cmd_config_opt(args) -> CurveData:
    from .interferometry import optimize_configuration

    n_grid = _grid(args.n_min, args.n_max, args.points, True)

    def run(n):
        return optimize_configuration(
            args.family, float(n), eta=args.eta, r=args.r, starts=args.starts, seed=args.seed
        )

    opts = ordered_map(run, n_grid, _threads(args))
    s = np.array([o.sensitivity for o in opts])
    if not np.all(np.isfinite(s)):
        raise FloatingPointError("optimiser returned a non-finite sensitivity")
    return CurveData(
        x_label="n_tot",
        y_label="sensitivity",
        x=n_grid,
        y=s,
        columns={"s_times_n": s * n_grid, "phi": [o.phi for o in opts], "converged": [float(o.converged) for o in opts]},
        y_units="rad",
        provenance=_provenance(args),
    )


def cmd_illumination(args) -> CurveData:
    from .illumination import IlluminationConfig, error_probability

    base = IlluminationConfig(
        mu=args.mu, modes=args.modes, m_b=args.m_b, eta=args.eta, pixels=args.pixels, seed=args.seed
    )
    n_b = np.array(sorted(set(args.n_b)), dtype=float)
    jobs = [(src, nb) for nb in n_b for src in ("twb", "classical")]
    res = ordered_map(
        lambda job: error_probability(replace(base, source=job[0], n_b=float(job[1])), args.trials),
        jobs,
        _threads(args),
    )
    out = {}
    for (src, nb), r in zip(jobs, res):
        out.setdefault(src, []).append(r)
    cols = {}
    for src in ("twb", "classical"):
        cols[f"log10_p_err_{src}"] = [r.log10_p_err for r in out[src]]
        cols[f"delta_in_{src}"] = [r.fit_in[0] for r in out[src]]
        cols[f"delta_in_std_{src}"] = [r.fit_in[1] for r in out[src]]
        cols[f"delta_out_{src}"] = [r.fit_out[0] for r in out[src]]
        cols[f"delta_out_std_{src}"] = [r.fit_out[1] for r in out[src]]
    return CurveData(
        x_label="n_b",
        y_label="p_err_twb",
        x=n_b,
        y=[r.p_err for r in out["twb"]],
        columns={"p_err_classical": [r.p_err for r in out["classical"]], **cols},
        x_units="photons",
        provenance=_provenance(args),
    )


def cmd_holometer_ratio(args) -> CurveData:
    from .holometer import HolometerConfig, eta_threshold, ratio_curves

    grid = _grid(args.grid_min, args.grid_max, args.points, args.log)
    config = HolometerConfig(
        family=args.family,
        mu=args.mu,
        lam=args.lam,
        psi=args.psi,
        eta=args.eta,
        phi10=args.phi0,
        observable=args.observable,
    )
    threads = _threads(args)
    if args.threshold:
        if args.vary != "lambda":
            raise ValidationError("--threshold needs --vary lambda")
        twb = replace(config, family="twb", observable="diff_squared")
        sq = replace(config, family="squeezed", phi10=np.pi / 2, phi20=np.pi / 2, observable="dminus_product")
        th = ordered_map(lambda lam: eta_threshold(replace(twb, lam=lam), replace(sq, lam=lam)), grid, threads)
        return CurveData(
            x_label="lambda",
            y_label="eta_threshold",
            x=grid,
            y=th,
            x_units="photons",
            provenance=_provenance(args, {"against": "squeezed vacua at pi/2, dminus_product"}),
        )
    parts = ordered_map(lambda x: ratio_curves(config, args.vary, [x]), grid, threads)
    return CurveData(
        x_label=args.vary,
        y_label="R",
        x=grid,
        y=[p.y[0] for p in parts],
        columns={"U": [p.columns["U"][0] for p in parts], "U_CL": [p.columns["U_CL"][0] for p in parts]},
        provenance=_provenance(args, parts[0].provenance if parts else None),
    )


def cmd_nrf(args) -> CurveData:
    from .holometer import HolometerConfig, nrf_regimes

    config = HolometerConfig(family="twb", mu=args.mu, lam=args.lam, eta=args.eta)
    tau = _grid(args.tau_min, args.tau_max, args.points, False)
    parts = ordered_map(lambda t: nrf_regimes(config, [t]), tau, _threads(args))
    return CurveData(
        x_label="tau",
        y_label="nrf_minus",
        x=tau,
        y=[p.y[0] for p in parts],
        columns={k: [p.columns[k][0] for p in parts] for k in ("nrf_plus", "kappa", "bright")},
        provenance=_provenance(args),
    )


# -- parser --------------------------------------------------------------------


def _add_common(p, stochastic: bool):
    p.add_argument("--out", help="output stem (default: the subcommand name)")
    p.add_argument("--config", help="key = value file with option defaults")
    p.add_argument("--threads", type=int, default=None, help="worker threads (env CVMETRO_THREADS)")
    if stochastic:
        # checked after any config file is merged, so the file may supply it
        p.add_argument("--seed", type=int, default=None, help="random seed (required)")
        p.set_defaults(_needs_seed=True)


def _add_mz(p):
    p.add_argument("--alpha2", type=float, default=1e6, help="coherent photons")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="squeezed photons")
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--observable", default="D-", choices=["D-", "D+", "Nc", "Nd"])
    p.add_argument("--points", type=int, default=201)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvmetro", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fringes", help="Monte Carlo interference fringes")
    _add_mz(p)
    p.add_argument("--shots", type=int, default=1000)
    _add_common(p, True)
    p.set_defaults(func=cmd_fringes)

    p = sub.add_parser("ratio", help="squeezed over classical sensitivity")
    _add_mz(p)
    _add_common(p, False)
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("qfi-bounds", help="optimal passive QFI versus energy")
    p.add_argument("--n-min", type=float, default=10.0)
    p.add_argument("--n-max", type=float, default=1e4)
    p.add_argument("--points", type=int, default=13)
    _add_common(p, False)
    p.set_defaults(func=cmd_qfi_bounds)

    p = sub.add_parser("config-opt", help="optimised interferometer sensitivity")
    p.add_argument("--family", default="passive-active",
                   choices=["passive-passive", "passive-active", "active-passive", "active-active"])
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--r", type=float, default=6.0, help="detection OPA gain")
    p.add_argument("--n-min", type=float, default=10.0)
    p.add_argument("--n-max", type=float, default=1e3)
    p.add_argument("--points", type=int, default=3)
    p.add_argument("--starts", type=int, default=2)
    p.add_argument("--seed", type=int, default=0, help="multistart seed")
    _add_common(p, False)
    p.set_defaults(func=cmd_config_opt)

    p = sub.add_parser("illumination", help="target detection error probability")
    p.add_argument("--mu", type=float, default=0.075)
    p.add_argument("--modes", type=int, default=1000)
    p.add_argument("--m-b", type=int, default=1300)
    p.add_argument("--n-b", type=float, nargs="+", default=[1.0, 3.0, 10.0, 30.0, 100.0])
    p.add_argument("--eta", type=float, default=0.8)
    p.add_argument("--pixels", type=int, default=10_000)
    p.add_argument("--trials", type=int, default=100)
    _add_common(p, True)
    p.set_defaults(func=cmd_illumination)

    p = sub.add_parser("holometer-ratio", help="covariance uncertainty over the classical one")
    p.add_argument("--family", default="twb", choices=["twb", "squeezed", "classical"])
    p.add_argument("--vary", default="eta", choices=["eta", "phi0", "lambda"])
    p.add_argument("--mu", type=float, default=3e12)
    p.add_argument("--lam", type=float, default=0.5)
    p.add_argument("--psi", type=float, default=np.pi / 2)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--phi0", type=float, default=0.0)
    p.add_argument("--observable", default=None, choices=["dminus_product", "nc_product", "diff_squared"])
    p.add_argument("--grid-min", type=float, default=0.5)
    p.add_argument("--grid-max", type=float, default=1.0)
    p.add_argument("--points", type=int, default=26)
    p.add_argument("--log", action="store_true", help="logarithmic grid")
    p.add_argument("--threshold", action="store_true",
                   help="efficiency where twin beams overtake squeezed vacua, versus lambda")
    _add_common(p, False)
    p.set_defaults(func=cmd_holometer_ratio)

    p = sub.add_parser("nrf", help="noise reduction factors versus transmission")
    p.add_argument("--mu", type=float, default=1e2)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--tau-min", type=float, default=0.5)
    p.add_argument("--tau-max", type=float, default=1.0)
    p.add_argument("--points", type=int, default=51)
    _add_common(p, False)
    p.set_defaults(func=cmd_nrf)

    p = sub.add_parser("list-figures", help="figure to subcommand mapping")
    p.set_defaults(func=None)
    return parser


def read_config(path) -> dict:
    """Parse a ``key = value`` file into raw strings."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(parser, argv, args):
    """Re-parse with file values as defaults so that flags still win."""
    sub = next(a for a in parser._subparsers._group_actions if isinstance(a, argparse._SubParsersAction))
    subparser = sub.choices[args.command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in read_config(args.config).items():
        dest = "lam" if key == "lambda" else key
        if dest not in actions or dest in ("help", "config", "func"):
            raise ValidationError(f"unknown config key {key!r}")
        action = actions[dest]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = value.lower() in ("1", "true", "yes", "on")
            continue
        conv = action.type or str
        try:
            if action.nargs in ("+", "*"):
                defaults[dest] = [conv(v) for v in value.replace(",", " ").split()]
            else:
                defaults[dest] = conv(value)
        except ValueError as exc:
            raise ValidationError(f"bad value for {key!r}: {exc}") from exc
        if action.choices is not None and defaults[dest] not in action.choices:
            raise ValidationError(f"invalid choice for {key!r}: {value}")
        action.required = False
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def list_figures(stream=None):
    stream = sys.stdout if stream is None else stream
    for fig, command, what, example in FIGURES:
        print(f"fig. {fig:>2}  {command:<16} {what}  [cvmetro {example}]", file=stream)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.command == "list-figures":
        list_figures()
        return EXIT_OK
    try:
        if args.config:
            try:
                args = _apply_config(parser, argv, args)
            except OSError as exc:
                raise ValidationError(str(exc)) from exc
            except SystemExit as exc:
                return int(exc.code) if exc.code is not None else EXIT_OK
        if getattr(args, "_needs_seed", False) and args.seed is None:
            raise ValidationError(f"{args.command} needs --seed")
        with np.errstate(over="raise", invalid="raise", divide="ignore"):
            curve = args.func(args)
        stem = args.out or args.command
        csv_path, meta_path = curve.write(stem)
    except (FloatingPointError, ZeroDivisionError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"cvmetro: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, NotImplementedError) as exc:
        print(f"cvmetro: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"wrote {csv_path} and {meta_path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
