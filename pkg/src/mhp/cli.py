"""Command-line front end.

Thin wrappers over the library: each subcommand reads/writes the documented
file formats and exits 0 on success, 1 when the only outcome is infeasible,
and 2 on usage or format errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .channel import SystemConfig, generate_channels
from .evaluation import min_sinr, total_power
from .fd_design import DesignError, sinr, solve_mmf, solve_qos
from .hybrid import FAMILIES, RHO_MODES, decompose, quantize_phases, reconstruct
from .io import (
    FileFormatError,
    read_channels,
    read_hybrid,
    read_precoder,
    write_channels,
    write_hybrid,
    write_precoder,
)
from .experiments import (
    SpecFormatError,
    emit_csv,
    format_report,
    load_experiment_spec,
    read_csv_records,
    run_experiment,
)

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_USAGE = 2


def _cmd_gen_channels(args) -> int:
    cfg = SystemConfig(
        n_antennas=args.n,
        group_sizes=tuple(args.k),
        n_paths=args.paths,
        spacing_ratio=args.spacing,
        noise_power=args.noise,
    )
    channels = generate_channels(cfg, args.seed)
    write_channels(args.out, channels)
    print(f"wrote {cfg.total_ues} channel vectors (N={cfg.n_antennas}) to {args.out}")
    return EXIT_OK


def _cmd_solve_fd(args) -> int:
    channels = read_channels(args.channels)
    try:
        if args.problem == "qos":
            if args.gamma is None:
                print("solve-fd: --gamma is required for the QoS problem", file=sys.stderr)
                return EXIT_USAGE
            design = solve_qos(
                channels, args.gamma, n_rand=args.n_rand, seed=args.seed
            )
            w = design.precoder.W
            print(
                f"QoS design: power={design.total_power:.9g} W "
                f"(relaxation bound {design.sdr_objective:.9g})"
            )
        else:
            if args.power is None:
                print("solve-fd: --power is required for the MMF problem", file=sys.stderr)
                return EXIT_USAGE
            design = solve_mmf(
                channels, args.power, n_rand=args.n_rand, seed=args.seed
            )
            w = design.precoder.W
            print(
                f"MMF design: min SINR={design.min_sinr:.9g} "
                f"(relaxation upper bound {design.sdr_gamma_upper:.9g})"
            )
    except DesignError as exc:
        print(f"solve-fd: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    write_precoder(args.out, w)
    print(f"wrote precoder to {args.out}")
    return EXIT_OK


def _cmd_decompose(args) -> int:
    w = read_precoder(args.precoder)
    hybrid = decompose(w, family=args.family, rho_mode=args.rho_mode)
    if args.bits != "inf":
        hybrid = quantize_phases(hybrid, int(args.bits))
    error = np.linalg.norm(reconstruct(hybrid) - w)
    scale = np.linalg.norm(w)
    rel = error / scale if scale > 0 else 0.0
    write_hybrid(args.out, hybrid)
    print(
        f"hybrid: n_rf={hybrid.n_rf}, {hybrid.n_phase_shifters} phase shifters, "
        f"relative reconstruction error {rel:.3e}"
    )
    print(f"wrote hybrid precoder to {args.out}")
    return EXIT_OK


def _load_any_precoder(path):
    with open(path, "r", encoding="utf-8") as fh:
        magic = fh.readline().strip()
    if magic == "mhp-hybrid 1":
        return reconstruct(read_hybrid(path))
    return read_precoder(path)


def _cmd_evaluate(args) -> int:
    channels = read_channels(args.channels)
    w = _load_any_precoder(args.precoder)
    print(f"total_power_watts {total_power(w):.12g}")
    print(f"min_sinr {min_sinr(channels, w):.12g}")
    if args.per_ue:
        for j, k, _ in channels.pairs():
            print(f"sinr[{j},{k}] {sinr(channels, w, j, k):.12g}")
    return EXIT_OK


def _cmd_run(args) -> int:
    spec = load_experiment_spec(args.spec)
    records = run_experiment(spec, workers=args.workers)
    emit_csv(records, args.out)
    n_infeasible = sum(1 for r in records if r.infeasible)
    print(f"wrote {len(records)} records to {args.out} ({n_infeasible} infeasible)")
    if records and all(r.infeasible for r in records):
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_report(args) -> int:
    records = read_csv_records(args.csv)
    sys.stdout.write(format_report(records))
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mhp",
        description="Multi-group multicast precoder design and hybrid factorization",
    )
    parser.add_argument("--version", action="version", version=f"mhp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-channels", help="generate and store a channel realization")
    p.add_argument("--n", type=int, required=True, help="antenna count")
    p.add_argument("--k", type=int, nargs="+", required=True, help="UEs per group")
    p.add_argument("--paths", type=int, default=3)
    p.add_argument("--spacing", type=float, default=0.5)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_channels)

    p = sub.add_parser("solve-fd", help="design the fully-digital precoder")
    p.add_argument("--problem", choices=("qos", "mmf"), required=True)
    p.add_argument("--channels", required=True)
    p.add_argument("--gamma", type=float, help="per-UE SINR target (QoS)")
    p.add_argument("--power", type=float, help="total power budget in W (MMF)")
    p.add_argument("--n-rand", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_solve_fd)

    p = sub.add_parser("decompose", help="factor a precoder into hybrid form")
    p.add_argument("--precoder", required=True)
    p.add_argument("--family", choices=FAMILIES, default="primary")
    p.add_argument("--bits", default="inf", help="phase resolution in bits or 'inf'")
    p.add_argument("--rho-mode", choices=RHO_MODES, default="per_group")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("evaluate", help="score a precoder against channels")
    p.add_argument("--channels", required=True)
    p.add_argument("--precoder", required=True, help="precoder or hybrid file")
    p.add_argument("--per-ue", action="store_true", help="print every UE's SINR")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("run", help="run a Monte Carlo experiment spec")
    p.add_argument("spec")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="aggregate a results CSV")
    p.add_argument("csv")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", help="start the HTTP design service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help/--version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (FileFormatError, SpecFormatError) as exc:
        print(f"mhp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"mhp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"mhp: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
