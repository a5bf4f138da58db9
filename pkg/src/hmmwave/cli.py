"""Command line interface.

Subcommands::

    run           one solver (dns, hom, eff or hmm); snapshots as x,u CSVs
    experiment    all four solvers for experiment one, two or three
    flux-study    raw and corrected HMM fluxes against the effective flux
    kernel-table  trapezoid error of the kernel integral versus grid size
    coeffs        Bloch effective coefficients barA, beta, gamma
    dispersion    the bottom Bloch band Omega(k) and B(k)

Any subcommand accepts ``--config FILE`` with ``key = value`` lines (``#``
starts a comment); keys are option names, and flags given on the command
line win over the file.

Exit status: 0 on success, 2 for usage or parameter errors, 3 for numerical
failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .errors import ConfigError, NumericalError
from .io import emit, write_csv

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3


def read_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; option dashes and underscores are interchangeable."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _int_list(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hmmwave", description="HMM for long-time wave propagation in 1D oscillatory media."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="file of 'key = value' lines supplying defaults")
        return p

    run = common(sub.add_parser("run", help="run one solver"))
    run.add_argument("--solver", choices=ex.SOLVERS, required=True)
    run.add_argument("--material", default="A1", help="A1|A2|A3|constant:<c>|sinefast:<alpha>,<beta>")
    run.add_argument("--eps", type=float, default=0.03)
    run.add_argument("--rho", type=int, default=80, help="macro cells per unit length")
    run.add_argument("--lambda", dest="lam", type=float, default=0.5, help="dt/h on the solver's grid")
    run.add_argument("--T", type=float, default=12.4976, help="final time")
    run.add_argument("--eta-ratio", type=float, default=20.0, help="eta = tau = ratio * eps")
    run.add_argument("--p", type=int, default=19, help="kernel vanishing moments")
    run.add_argument("--q", type=int, default=19, help="kernel smoothness")
    run.add_argument("--rho-eps", type=int, default=64, help="micro/DNS points per eps")
    run.add_argument("--micro-lambda", dest="micro_lam", type=float, default=0.5)
    run.add_argument("--snapshots", type=int, default=8, help="number of snapshot intervals")
    run.add_argument("--out", default="out", help="output directory")
    run.add_argument("--workers", type=int, default=None, help="processes for the flux table")

    exp = common(sub.add_parser("experiment", help="run experiment one, two or three"))
    exp.add_argument("name", choices=sorted(ex.EXPERIMENTS))
    exp.add_argument("--scale", type=float, default=1.0, help="shrink T and eps jointly by this factor")
    exp.add_argument("--snapshots", type=int, default=8)
    exp.add_argument("--out", default=None, help="output directory (default: experiment_<name>)")
    exp.add_argument("--workers", type=int, default=None)

    fs = common(sub.add_parser("flux-study", help="HMM flux errors over a range of eps"))
    fs.add_argument("--material", default="A2")
    fs.add_argument("--eps-list", default="0.1:0.001", help="a:b (log-spaced) or a comma list")
    fs.add_argument("--eps-count", type=int, default=7, help="number of values for an a:b range")
    fs.add_argument("--p", type=_int_list, default=[9], help="comma list of p values")
    fs.add_argument("--q", type=_int_list, default=[9], help="comma list of q values")
    fs.add_argument("--eta-ratio", type=float, default=20.0)
    fs.add_argument("--rho-eps", type=int, default=16)
    fs.add_argument("--lambda", dest="lam", type=float, default=0.5)
    fs.add_argument("--x", type=_float_list, default=[0.0, 0.3], help="comma list of macro points")
    fs.add_argument("--out", default=None, help="CSV file (or directory for several kernels); stdout if omitted")

    kt = common(sub.add_parser("kernel-table", help="kernel quadrature error table"))
    kt.add_argument("--p", type=int, default=9)
    kt.add_argument("--q", type=int, default=9)
    kt.add_argument("--n", type=_int_list, default=[10, 20, 40, 80, 160])
    kt.add_argument("--out", default=None)

    co = common(sub.add_parser("coeffs", help="Bloch effective coefficients"))
    co.add_argument("--material", default="A1")
    co.add_argument("--x", type=float, default=0.0)
    co.add_argument("--n-modes", type=int, default=128)
    co.add_argument("--out", default=None)

    di = common(sub.add_parser("dispersion", help="bottom Bloch band"))
    di.add_argument("--material", default="A1")
    di.add_argument("--x", type=float, default=0.0)
    di.add_argument("--k-samples", type=int, default=64)
    di.add_argument("--n-modes", type=int, default=64)
    di.add_argument("--out", default=None)
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    raise KeyError(name)


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # find --config first, leniently: the file may supply required options
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    config = probe.parse_known_args(argv)[0].config
    command = next((a for a in argv if a in COMMANDS), None)
    if not config or command is None:
        return parser.parse_args(argv)
    sp = _subparser(parser, command)
    known = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, value in read_config(config).items():
        if key not in known or key in ("help", "config"):
            raise ConfigError(f"{config}: unknown key {key!r} for '{command}'")
        action = known[key]
        defaults[key] = action.type(value) if action.type else value
    sp.set_defaults(**defaults)
    for action in sp._actions:
        if action.dest in defaults:
            action.required = False
    return parser.parse_args(argv)


def cmd_run(args) -> int:
    man = ex.RunManifest(
        solver=args.solver,
        material=args.material,
        eps=args.eps,
        rho=args.rho,
        lam=args.lam,
        T=args.T,
        eta_ratio=args.eta_ratio,
        p=args.p,
        q=args.q,
        rho_eps=args.rho_eps,
        micro_lam=args.micro_lam,
        snapshots=args.snapshots,
        out=args.out,
    )
    traj = ex.run_manifest(man, workers=args.workers)
    print(f"{args.solver}: {traj.info.get('steps', 0)} steps to T={traj.t_final:.6g}, wrote {len(traj.times)} snapshots to {args.out}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    out = args.out or f"experiment_{args.name}"
    _, rows = ex.run_experiment(args.name, out, args.scale, args.workers, args.snapshots)
    emit(None, ("solver_a", "solver_b", "l2"), rows)
    return EXIT_OK


def cmd_flux_study(args) -> int:
    eps_list = ex.parse_eps_list(args.eps_list, args.eps_count)
    kernels = [(p, q) for p in args.p for q in args.q]
    header = ("eps", "x", "i", "raw_err", "corrected_err", "effective_err")
    for p, q in kernels:
        rows = [
            row
            for eps in eps_list
            for x in args.x
            for row in ex.flux_study_rows(args.material, eps, x, p, q, args.eta_ratio, args.rho_eps, args.lam)
        ]
        if len(kernels) > 1:
            if not args.out:
                raise ConfigError("several kernels need --out DIR (one CSV per kernel)")
            write_csv(Path(args.out) / f"flux_p{p}_q{q}.csv", header, rows)
        else:
            emit(args.out, header, rows)
    return EXIT_OK


def cmd_kernel_table(args) -> int:
    emit(args.out, ("n", "rel_err"), ex.kernel_table_rows(args.p, args.q, args.n))
    return EXIT_OK


def cmd_coeffs(args) -> int:
    emit(args.out, ("barA", "beta", "gamma"), [ex.coeffs_row(args.material, args.x, args.n_modes)])
    return EXIT_OK


def cmd_dispersion(args) -> int:
    emit(args.out, ("k", "omega0_sq", "B"), ex.dispersion_rows(args.material, args.k_samples, args.x, args.n_modes))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "experiment": cmd_experiment,
    "flux-study": cmd_flux_study,
    "kernel-table": cmd_kernel_table,
    "coeffs": cmd_coeffs,
    "dispersion": cmd_dispersion,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
