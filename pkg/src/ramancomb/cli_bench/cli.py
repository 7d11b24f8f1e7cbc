"""Command-line entry point: ``solve``, ``sweep`` and ``validate``."""

from __future__ import annotations

import argparse
import logging
import sys

from ..accuracy_control import ConvergenceError
from ..fiber_models import DomainError, RamanTableError
from ..spectrum import CombError
from ..srs_numerical import IntegrationError
from ..srs_perturbative import QuadratureError
from .config import ConfigError, load_config, worker_count
from .scenario import comb_from_config, run_scenario, span_from_config
from .sweep import run_bandwidth_sweep

log = logging.getLogger("ramancomb")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ramancomb",
        description="Inter-channel stimulated Raman scattering in wideband WDM fiber spans.",
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="worker count for sweeps (default: $RC_THREADS or 1)")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--override", action="append", default=[], metavar="PATH=VALUE",
                       help="set a config leaf, e.g. solver.k_max=6 (repeatable)")

    solve = sub.add_parser("solve", help="solve one scenario and write profiles, errors and plots")
    common(solve)
    solve.add_argument("--repeats", type=int, default=1, help="timing repetitions (median reported)")

    sweep = sub.add_parser("sweep", help="wall-time against bandwidth at matched tolerance")
    common(sweep)
    sweep.add_argument("--from", dest="from_thz", type=float, default=2.5, help="first bandwidth [THz]")
    sweep.add_argument("--to", dest="to_thz", type=float, default=40.0, help="last bandwidth [THz]")
    sweep.add_argument("--step", dest="step_thz", type=float, default=2.5, help="bandwidth step [THz]")

    validate = sub.add_parser("validate", help="check a configuration without solving")
    common(validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.override)
        workers = worker_count(args.threads)
        if args.command == "validate":
            comb = comb_from_config(cfg)
            span_from_config(cfg)
            print(f"ok: {len(comb)} channels, {comb.total_power_dbm:.2f} dBm total, "
                  f"{cfg['fiber']['span_length_km']:g} km span")
            return EXIT_OK
        if args.command == "solve":
            if args.repeats < 1:
                raise ConfigError([("--repeats", "must be at least 1")])
            result = run_scenario(cfg, repeats=args.repeats)
            pert = result.report.get("perturbative")
            if pert:
                print(f"selected order {pert['selected_order']} "
                      f"(bound {pert['error_estimate_db']:.4g} dB, tolerance {cfg['solver']['tolerance_dB']} dB)")
            if "errors_dB" in result.report:
                for k, e in result.report["errors_dB"]["max_abs_by_order"].items():
                    print(f"order {k}: max |error| {e:.4g} dB")
            for path in result.files:
                log.info("wrote %s", path)
            return EXIT_OK
        results = run_bandwidth_sweep(cfg, args.from_thz, args.to_thz, args.step_thz, workers=workers)
        for r in results:
            t = "-" if r.wall_time_s is None else f"{r.wall_time_s:.4g} s"
            e = "-" if r.max_error_db is None else f"{r.max_error_db:.3g} dB"
            print(f"{r.bandwidth_thz:6.2f} THz {r.channels:4d} ch  {r.solver:<12s} {t:>12s}  err {e}  {r.status}")
        return EXIT_OK
    except ConfigError as exc:
        for path, msg in exc.errors:
            print(f"config error: {path or '<root>'}: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except (CombError, DomainError, RamanTableError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (IntegrationError, QuadratureError, ValueError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
