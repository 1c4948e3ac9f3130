"""
vortexpatch - Two-Phase Vortex Patch Solver
===========================================

Command-line entry point.

    vortexpatch run data/square.conf --out out/square
    vortexpatch verify out/square
    vortexpatch oracle1d --lambda 60
    vortexpatch oracleradial --lambda 100 --radius 1
    vortexpatch threshold --config data/square.conf --lo 5 --hi 50

Exit codes: 0 success, 1 failure, 2 λ below the two-solution threshold.
"""

import argparse
import logging
import sys
from pathlib import Path

# Load .env file before importing Config (which reads env vars at import time)
from dotenv import load_dotenv

load_dotenv()

from rich.console import Console  # noqa: E402
from rich.logging import RichHandler  # noqa: E402
from rich.panel import Panel  # noqa: E402
from rich.table import Table  # noqa: E402

from vortexpatch.config import Config  # noqa: E402
from vortexpatch.core.oracles import oracle_1d, oracle_radial, threshold_1d  # noqa: E402
from vortexpatch.errors import VortexPatchError  # noqa: E402
from vortexpatch.report import RunReport  # noqa: E402
from vortexpatch.runner import EXIT_FAILURE, EXIT_OK, RunOrchestrator, VerifyOutcome  # noqa: E402
from vortexpatch.telemetry import setup_tracing  # noqa: E402

console = Console()
logger = logging.getLogger("vortexpatch")


def setup_logging(level: str = Config.LOG_LEVEL):
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=True, show_path=False)],
    )


# =============================================================================
# OUTPUT
# =============================================================================


def print_stages(report: RunReport):
    table = Table(title="ε stages")
    for column in ("ε", "J_ε(u0)", "J(u0)", "J_ε(u1)", "J(u1)", "max|∇u0|", "max|∇u1|", "bounds"):
        table.add_column(column, justify="right")
    for s in report.stages:
        ok = s.minimizer_bound_ok and s.mp_bounds_ok
        table.add_row(
            f"{s.eps:.4g}", f"{s.j_eps_u0:.6g}", f"{s.j_u0:.6g}", f"{s.j_eps_u1:.6g}", f"{s.j_u1:.6g}",
            f"{s.max_grad_u0:.4g}", f"{s.max_grad_u1:.4g}",
            "[green]✓[/green]" if ok else "[red]❌[/red]",
        )
    console.print(table)


def print_verdicts(report: RunReport):
    if report.verdicts is None:
        return
    lines = [
        f"{'[green]✓[/green]' if value else '[red]❌[/red]'} {name}" for name, value in report.verdicts.items()
    ]
    numbers = report.numbers
    lines.append(
        f"\nJ(u0) = {numbers.j_u0:.6g}   J(u1) = {numbers.j_u1:.6g}   |Ω| = {report.omega_measure:.6g}"
    )
    style = "green" if report.verdicts.all else "red"
    console.print(Panel("\n".join(lines), title="Verdicts", border_style=style))


def print_verify(outcome: VerifyOutcome):
    if outcome.error:
        console.print(f"[red]Verify Error: {outcome.error}[/red]")
        return
    table = Table(title="Recomputed from artifacts")
    table.add_column("Check")
    table.add_column("Stored")
    table.add_column("Recomputed")
    table.add_column("", justify="center")
    for check in outcome.checks:
        table.add_row(check.name, check.stored, check.recomputed, "✓" if check.ok else "[red]❌[/red]")
    console.print(table)
    if outcome.mismatches:
        console.print(f"[red]{len(outcome.mismatches)} discrepancies[/red]")
    else:
        console.print("[green]All verdicts reproduce[/green]")


def _write_lines(out_dir: Path | None, name: str, lines: list[str]):
    if out_dir is None:
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text("\n".join(lines) + "\n")


# =============================================================================
# COMMANDS
# =============================================================================


def cmd_run(args) -> int:
    config_path = Path(args.config)
    if not config_path.is_file():
        console.print(f"[red]Configuration not found: {config_path}[/red]")
        return EXIT_FAILURE

    out_dir = Path(args.out or Config.OUT_DIR)
    outcome = RunOrchestrator(threads=args.threads).run(config_path.read_text(), out_dir)

    if outcome.report is not None:
        report = outcome.report
        console.print(
            f"status [bold]{report.status}[/bold]  c1≈{report.c1_estimate:.6g}  "
            f"ε₀={report.eps_zero:.4g}  |Ω|={report.omega_measure:.6g}"
        )
        if report.stages:
            print_stages(report)
        print_verdicts(report)
    if outcome.error:
        console.print(f"[red]Error: {outcome.error}[/red]")
    console.print(f"[dim]Artifacts in {outcome.out_dir}[/dim]")
    return outcome.exit_code


def cmd_verify(args) -> int:
    outcome = RunOrchestrator(threads=args.threads).verify(Path(args.report_dir))
    print_verify(outcome)
    return outcome.exit_code


def cmd_oracle1d(args) -> int:
    oracle = oracle_1d(args.lam)
    lines = [
        f"oracle.lambda = {oracle.lam!r}",
        f"oracle.threshold = {threshold_1d()!r}",
        f"oracle.a_stable = {oracle.a_stable!r}",
        f"oracle.a_unstable = {oracle.a_unstable!r}",
        f"oracle.j_stable = {oracle.energy_stable!r}",
        f"oracle.j_unstable = {oracle.energy_unstable!r}",
    ]
    _print_oracle("1D oracle on (0, 1)", lines)
    _write_lines(Path(args.out) if args.out else None, "oracle1d.txt", lines)
    return EXIT_OK


def cmd_oracleradial(args) -> int:
    oracle = oracle_radial(args.lam, args.radius)
    lines = [
        f"oracle.lambda = {oracle.lam!r}",
        f"oracle.radius = {oracle.radius!r}",
        f"oracle.rho_stable = {oracle.rho_stable!r}",
        f"oracle.rho_unstable = {oracle.rho_unstable!r}",
        f"oracle.j_stable = {oracle.energy_stable!r}",
        f"oracle.j_unstable = {oracle.energy_unstable!r}",
    ]
    _print_oracle(f"Radial oracle, R = {oracle.radius:g}", lines)
    _write_lines(Path(args.out) if args.out else None, "oracleradial.txt", lines)
    return EXIT_OK


def _print_oracle(title: str, lines: list[str]):
    table = Table(title=title)
    table.add_column("Key")
    table.add_column("Value", justify="right")
    for line in lines:
        key, value = line.split(" = ", 1)
        table.add_row(key, value)
    console.print(table)


def cmd_threshold(args) -> int:
    config_text = Path(args.config).read_text()
    lam_star = RunOrchestrator(threads=args.threads).threshold(config_text, args.lo, args.hi, args.tol)
    console.print(f"λ* ≈ [bold]{lam_star:.6g}[/bold]")
    _write_lines(Path(args.out) if args.out else None, "threshold.txt", [f"threshold.lambda = {lam_star!r}"])
    return EXIT_OK


# =============================================================================
# ENTRY POINT
# =============================================================================


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", "-o", help="Output directory (default: VORTEXPATCH_OUT_DIR)")
    common.add_argument("--threads", type=int, default=None, help="Solver worker count (default 1)")

    parser = argparse.ArgumentParser(
        prog="vortexpatch",
        description="Two solutions of the vortex patch free boundary problem by ε-continuation",
    )
    parser.add_argument("--show-config", action="store_true", help="Print the effective defaults and exit")
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", parents=[common], help="Solve one configuration and write artifacts")
    run.add_argument("config", help="Run configuration file")
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser("verify", parents=[common], help="Recompute verdicts from a run's artifacts")
    verify.add_argument("report_dir", help="Directory written by `run`")
    verify.set_defaults(func=cmd_verify)

    o1 = sub.add_parser("oracle1d", parents=[common], help="Closed-form two-phase solutions on (0, 1)")
    o1.add_argument("--lambda", dest="lam", type=float, required=True)
    o1.set_defaults(func=cmd_oracle1d)

    orad = sub.add_parser("oracleradial", parents=[common], help="Closed-form radial solutions on a disk")
    orad.add_argument("--lambda", dest="lam", type=float, required=True)
    orad.add_argument("--radius", type=float, default=1.0)
    orad.set_defaults(func=cmd_oracleradial)

    thr = sub.add_parser("threshold", parents=[common], help="Estimate the two-solution threshold λ*")
    thr.add_argument("--config", required=True, help="Run configuration file (solve.lambda is ignored)")
    thr.add_argument("--lo", type=float, required=True)
    thr.add_argument("--hi", type=float, required=True)
    thr.add_argument("--tol", type=float, default=1e-2)
    thr.set_defaults(func=cmd_threshold)

    return parser


def main(argv: list[str] | None = None) -> int:
    """Main entry point for the vortexpatch CLI."""
    args = build_parser().parse_args(argv)

    setup_logging()
    setup_tracing()

    if args.show_config:
        Config.print_config(console)
        return EXIT_OK

    # Validate configuration
    issues = Config.validate()
    if issues:
        console.print("[red]Configuration Issues:[/red]")
        for issue in issues:
            console.print(f"[red]  - {issue}[/red]")
        return EXIT_FAILURE

    if not getattr(args, "func", None):
        build_parser().print_help()
        return EXIT_FAILURE

    if args.threads is not None and args.threads < 1:
        console.print(f"[red]--threads must be at least 1, got {args.threads}[/red]")
        return EXIT_FAILURE

    try:
        return args.func(args)
    except VortexPatchError as e:
        console.print(f"[red]Error: {e}[/red]")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
