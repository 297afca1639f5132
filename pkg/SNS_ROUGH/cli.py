"""Command-line entry point: simulate, verify and the ensemble experiments.

Exit codes are 0 on success, 1 on invalid input and 2 on a numerical abort. Every run writes
run-meta.json next to its outputs.

"""

import argparse
import json
import logging
import os
import sys
import time
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence

import pydantic

from SNS_ROUGH import config
from SNS_ROUGH.estimates import INEQUALITIES
from SNS_ROUGH.estimates import EstimateReport
from SNS_ROUGH.estimates import get_or_calibrate
from SNS_ROUGH.estimates import run_all
from SNS_ROUGH.estimates import run_inequality_suite
from SNS_ROUGH.estimates import verify_stochastic_moment_bound
from SNS_ROUGH.estimates import verify_yosida_growth
from SNS_ROUGH.exceptions import NumericalAbort
from SNS_ROUGH.exceptions import ValidationFailure
from SNS_ROUGH.experiments.convergence import DISTANCE_COLUMNS
from SNS_ROUGH.experiments.convergence import QUANTILE_COLUMNS
from SNS_ROUGH.experiments.convergence import run_convergence_in_n
from SNS_ROUGH.experiments.ou_moments import EXACTNESS_COLUMNS
from SNS_ROUGH.experiments.ou_moments import MOMENT_COLUMNS
from SNS_ROUGH.experiments.ou_moments import ou_exactness_check
from SNS_ROUGH.experiments.ou_moments import ou_moment_study
from SNS_ROUGH.experiments.settings import load_experiment_config
from SNS_ROUGH.experiments.settings import with_overrides
from SNS_ROUGH.experiments.tightness import TIGHTNESS_COLUMNS
from SNS_ROUGH.experiments.tightness import run_tightness_tables
from SNS_ROUGH.experiments.uniqueness import PATH_COLUMNS
from SNS_ROUGH.experiments.uniqueness import SCALING_COLUMNS
from SNS_ROUGH.experiments.uniqueness import SUMMARY_COLUMNS
from SNS_ROUGH.experiments.uniqueness import delta_scaling
from SNS_ROUGH.experiments.uniqueness import run_uniqueness_experiment
from SNS_ROUGH.noise import noise_assumption_report
from SNS_ROUGH.noise import noise_modes
from SNS_ROUGH.noise import rough_regime_certificate
from SNS_ROUGH.solver import DIAGNOSTIC_COLUMNS
from SNS_ROUGH.solver import EnergyReport
from SNS_ROUGH.solver import energy_report
from SNS_ROUGH.solver import simulate
from SNS_ROUGH.spectral import TorusGrid
from SNS_ROUGH.state import CalibrationStore
from SNS_ROUGH.storage import dump_field
from SNS_ROUGH.storage import dump_wiener
from SNS_ROUGH.storage import write_csv
from SNS_ROUGH.storage import write_run_meta
from SNS_ROUGH.utils.message import human_readable_duration
from SNS_ROUGH.utils.message import summary_message


logger = logging.getLogger(__name__)


EXIT_OK = 0

EXIT_INVALID = 1

EXIT_ABORT = 2


REPORT_COLUMNS = (
    "inequality_id", "samples", "max_ratio", "mean_ratio", "calibrated_constant", "constant_free", "exploratory",
    "d", "resolution", "g", "seed"
)

YOSIDA_COLUMNS = ("n", "discrete_sup", "analytic_sup", "relative_gap")

MOMENT_BOUND_COLUMNS = ("t", "estimate", "std_error", "exact_second_moment", "ratio", "expected_ratio", "ratio_std_error")

ROUGH_COLUMNS = (
    "J", "hs_sum", "gamma_sq", "hs_increment_ratio", "gamma_increment_ratio", "hs_relative_growth",
    "gamma_relative_change"
)


class ArgumentParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the invalid-input code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def parse_ladder(text: str) -> tuple:
    """Parse a comma-separated list of positive integers such as 1,4,16."""
    try:
        ladder = tuple(int(item) for item in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from None
    if any(n < 1 for n in ladder):
        raise argparse.ArgumentTypeError(f"ladder levels must be positive, got '{text}'")
    return ladder


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="master seed (overrides the configuration)")
    common.add_argument("--out-dir", help="output directory (default: $SNS_ROUGH_OUTPUT_DIR/<subcommand>)")
    common.add_argument("--paths", type=int, help="ensemble size (overrides the configuration)")
    common.add_argument("--n-ladder", type=parse_ladder, help="Yosida levels, for example 1,4,16")
    common.add_argument("--calibration-file", help="calibration store (default: $SNS_ROUGH_CALIBRATION_FILE)")

    parser = ArgumentParser(prog="sns-rough", description="Stochastic Navier-Stokes with rough multiplicative noise.")
    parser.add_argument("--version", action="version", version=config.VERSION)
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    simulate_parser = subparsers.add_parser("simulate", parents=[common], help="integrate one trajectory")
    simulate_parser.add_argument("--out", dest="out_dir", help="output directory (alias of --out-dir)")
    simulate_parser.add_argument("--dump", action="store_true", help="write SNSF dumps of v and of the Wiener path")

    verify_parser = subparsers.add_parser("verify", parents=[common], help="calibrate the functional inequalities")
    verify_parser.add_argument("--suite", default="all", choices=["all"] + list(INEQUALITIES))
    verify_parser.add_argument("--samples", type=int, default=config.CALIBRATION_SAMPLES)
    verify_parser.add_argument("--resolution", type=int, help="grid points per direction (default: the configuration's N)")
    verify_parser.add_argument("--out", help="report CSV (default: report.csv in the output directory)")

    ou_parser = subparsers.add_parser("ou-moments", parents=[common], help="moments of z_n along the Yosida ladder")
    ou_parser.add_argument("--exactness", action="store_true", help="also check the exact OU law mode by mode")

    subparsers.add_parser("uniqueness", parents=[common], help="coupled-pair pathwise uniqueness study")
    subparsers.add_parser("convergence", parents=[common], help="Cauchy distances along the Yosida ladder")
    subparsers.add_parser("tightness", parents=[common], help="empirical tails against Chebyshev bounds")
    return parser


class Run:
    """Resolved configuration and output locations of one CLI invocation."""

    def __init__(self, args: argparse.Namespace, argv: Sequence[str]):
        self.args = args
        self.argv = list(argv)
        self.subcommand = args.subcommand
        self.out_dir = args.out_dir or os.path.join(config.OUTPUT_DIR, args.subcommand)
        self.store = CalibrationStore(args.calibration_file)
        self.constants = {}

        cfg, self.raw = load_experiment_config(args.config)
        self.cfg = with_overrides(cfg, seed=args.seed, paths=args.paths, n_ladder=args.n_ladder)

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def write_meta(self):
        write_run_meta(self.out_dir, self.subcommand, self.argv, self.cfg.resolved(self.constants), self.raw)


def run_simulate(run: Run) -> Dict:
    base = run.cfg.base
    gn_constant = base.gn_constant
    if gn_constant is None:
        gn_constant = get_or_calibrate("GN", base.grid, base.noise.g, store=run.store)
    run.constants["GN"] = gn_constant

    try:
        traj = simulate(base)
    except NumericalAbort as abort:
        if abort.partial is not None:
            rows = [dict(zip(DIAGNOSTIC_COLUMNS, values)) for values in zip(*abort.partial.diagnostics.values())]
            write_csv(run.path("diagnostics.csv"), rows, DIAGNOSTIC_COLUMNS)
        raise

    report = energy_report(traj, gn_constant)
    write_csv(run.path("diagnostics.csv"), report.rows(), EnergyReport.COLUMNS)
    if run.args.dump:
        for i, (t, v) in enumerate(zip(traj.times, traj.v)):
            dump_field(run.path(os.path.join("fields", f"v_{i:05d}.snsf")), v, float(t))
        dump_wiener(run.path("wiener.snsf"), traj.wiener)

    summary = {
        "steps": base.steps,
        "sup_energy": report.sup_energy,
        "gronwall_constant": report.C,
        "majorant_holds": report.majorant_holds,
        "dissipation_holds": report.dissipation_holds,
        "residual_holds": report.residual_holds,
        "max_energy_residual": float(abs(report.energy_residual).max()) if len(report.energy_residual) else 0.0,
        "digest": traj.digest
    }
    with open(run.path("summary.json"), "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)

    if not report.majorant_holds:
        step = int((report.E_u > report.gronwall_majorant).argmax())
        raise NumericalAbort(step, "gronwall_majorant", float(report.E_u[step]), partial=report)
    return summary


def _report_rows(reports: List[EstimateReport]) -> List[Dict]:
    return [report.row() for report in reports]


def run_verify(run: Run) -> Dict:
    args = run.args
    base = run.cfg.base
    grid = TorusGrid(d=base.d, N=args.resolution or base.N, L=base.L, dealias_fraction=base.dealias_fraction)
    g = base.noise.g
    seed = base.seed

    if args.suite == "all":
        reports = run_all(args.samples, grid, g, seed)
    else:
        reports = [run_inequality_suite(args.suite, args.samples, grid, g, seed)]

    rows = _report_rows(reports)
    extras = sorted({column for row in rows for column in row if column not in REPORT_COLUMNS})
    write_csv(args.out or run.path("report.csv"), rows, REPORT_COLUMNS + tuple(extras))

    for report in reports:
        key = run.store.key(report.inequality_id, grid.d, grid.N, g)
        run.store.update_constant(key, report.calibrated_constant, report.dict())
        run.constants[key] = report.calibrated_constant
    run.store.save()

    summary = {report.inequality_id: report.calibrated_constant for report in reports}
    if args.suite != "all":
        return summary

    growth = verify_yosida_growth(1.0, grid=grid)
    write_csv(run.path("yosida_growth.csv"), [row.dict() for row in growth.rows], YOSIDA_COLUMNS)

    moments = verify_stochastic_moment_bound(2, max(2, run.cfg.paths), base)
    moment_rows = []
    for i, t in enumerate(moments.times):
        moment_rows.append({
            "t": t,
            "estimate": moments.estimates[i],
            "std_error": moments.std_errors[i],
            "exact_second_moment": moments.exact_second_moment[i] if moments.exact_second_moment else "",
            "ratio": moments.scaling_ratios[i],
            "expected_ratio": moments.expected_ratios[i],
            "ratio_std_error": moments.scaling_std_errors[i]
        })
    write_csv(run.path("moment_bound.csv"), moment_rows, MOMENT_BOUND_COLUMNS)

    largest = noise_modes(grid).count // 4
    J_values = (largest // 4, largest) if largest // 4 >= 4 else (largest,)
    rough = rough_regime_certificate(base.noise, grid, J_values)
    write_csv(run.path("rough_regime.csv"), [row.dict() for row in rough.rows], ROUGH_COLUMNS)

    assumptions = noise_assumption_report(base.noise, grid, seed=seed)
    assumption_row = assumptions.dict()
    write_csv(run.path("noise_assumptions.csv"), [assumption_row], tuple(assumption_row))

    summary.update({
        "yosida_growth": growth.passed,
        "moment_bound": moments.passed,
        "rough_regime": rough.rough,
        "noise_assumptions": assumptions.passed
    })
    return summary


def run_ou_moments(run: Run) -> Dict:
    report = ou_moment_study(run.cfg)
    write_csv(run.path("ou_moments.csv"), report.rows, MOMENT_COLUMNS)
    summary = {"uniform_in_n": report.uniform, "hs_norm_grows": report.hs_norm_grows}
    if run.args.exactness:
        exactness = ou_exactness_check(run.cfg)
        write_csv(run.path("ou_exactness.csv"), exactness.rows, EXACTNESS_COLUMNS)
        summary["exact_law"] = exactness.passed
    return summary


def run_uniqueness(run: Run) -> Dict:
    cfg = run.cfg
    ensemble = run_uniqueness_experiment(cfg, store=run.store)
    run.constants.update({"C_bar": ensemble.C_bar, "L_g": ensemble.L_g})
    write_csv(run.path("uniqueness.csv"), ensemble.summary_rows(), SUMMARY_COLUMNS)
    write_csv(run.path("uniqueness_paths.csv"), ensemble.path_rows(), PATH_COLUMNS)

    summary = {
        "delta0": ensemble.delta0,
        "supermartingale": ensemble.supermartingale_holds(),
        "coupled": ensemble.coupled,
        "identical": ensemble.identical
    }
    if cfg.uniqueness.delta_ladder:
        ensembles = []
        for i, delta0 in enumerate(cfg.uniqueness.delta_ladder):
            rung = run_uniqueness_experiment(cfg, delta0=delta0, store=run.store)
            write_csv(run.path(f"uniqueness_delta{i}.csv"), rung.summary_rows(), SUMMARY_COLUMNS)
            ensembles.append(rung)
        scaling = delta_scaling(ensembles)
        write_csv(run.path("delta_scaling.csv"), scaling.rows, SCALING_COLUMNS)
        summary["linear_in_delta0"] = scaling.linear
    return summary


def run_convergence(run: Run) -> Dict:
    table = run_convergence_in_n(run.cfg)
    write_csv(run.path("convergence_distances.csv"), table.distances, DISTANCE_COLUMNS)
    write_csv(run.path("convergence_quantiles.csv"), table.quantiles, QUANTILE_COLUMNS)
    return table.summary()


def run_tightness(run: Run) -> Dict:
    table = run_tightness_tables(run.cfg)
    write_csv(run.path("tightness.csv"), table.rows, TIGHTNESS_COLUMNS)
    summary = {"chebyshev_holds": table.holds}
    summary.update({f"uniformity_{name}": ratio for name, ratio in table.uniformity().items()})
    return summary


COMMANDS = {
    "simulate": run_simulate,
    "verify": run_verify,
    "ou-moments": run_ou_moments,
    "uniqueness": run_uniqueness,
    "convergence": run_convergence,
    "tightness": run_tightness
}


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand.

    Args:
        argv: Command-line arguments without the program name (sys.argv[1:] by default)

    Returns:
        Exit code

    """
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=config.LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exit_:
        return exit_.code if isinstance(exit_.code, int) else EXIT_INVALID

    try:
        run = Run(args, argv)
    except (ValidationFailure, pydantic.ValidationError, FileNotFoundError) as error:
        print(f"sns-rough {args.subcommand}: {error}", file=sys.stderr)
        return EXIT_INVALID

    start = time.monotonic()
    try:
        summary = COMMANDS[args.subcommand](run)
    except (ValidationFailure, pydantic.ValidationError, FileNotFoundError) as error:
        print(f"sns-rough {args.subcommand}: {error}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalAbort as abort:
        print(f"sns-rough {args.subcommand}: {abort}", file=sys.stderr)
        return EXIT_ABORT
    finally:
        run.write_meta()

    print(summary_message(f"{args.subcommand} finished in {human_readable_duration(time.monotonic() - start)}", summary))
    return EXIT_OK


def main():
    sys.exit(cli_main())
