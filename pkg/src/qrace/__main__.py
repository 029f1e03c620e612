"""CLI entrypoint for `python -m qrace` / `qrace` command."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections.abc import Callable
from typing import Any

from qrace import __version__
from qrace.config import settings
from qrace.engine import constants
from qrace.engine.appendix import (
    NoAlternatingEquilibrium,
    alt_coinciding_equilibria,
    alternating_equilibrium,
    convex_structure_check,
    tstar_relations_check,
)
from qrace.engine.dual import dual_sweep, helper_sum_check, payoff_ceiling, weak_duality_check
from qrace.engine.errors import CertificateError
from qrace.engine.io import (
    profile_from_file,
    rows_to_csv,
    schedule_from_file,
    schedule_from_values,
    schedule_to_csv,
    schedule_to_json,
    sweep_to_csv,
    write_text,
)
from qrace.engine.payoff import (
    MixedStrategy,
    RaceConfig,
    Role,
    Variant,
    payoff_matrix_2p,
    tie_event_probability,
)
from qrace.engine.reports import BoundReport, check_bound, inapplicable
from qrace.engine.schedules import (
    ProbabilitySchedule,
    bitcoin_schedule_params,
    convexity_report,
    density_report,
    grover_k,
    grover_schedule,
)
from qrace.engine.sim import (
    SimConfig,
    SweepRow,
    bitcoin_rows,
    consistency_report,
    run_simulation,
    sweep_from_config,
)
from qrace.engine.solve2 import (
    EquilibriumSolution,
    NoCoincidingEquilibrium,
    coinciding_equilibrium,
    collision_analytics,
    collision_bounds_check,
    exact_self_check,
    payoff_bounds_check,
    recurrence_check,
    well_supported_check,
)
from qrace.engine.solven import (
    multi_approx_check,
    multi_bounds_check,
    multi_coinciding_equilibrium,
    multi_tie_check,
    reduction_residual,
    worst_regret,
)
from qrace.engine.verify import (
    mangasarian_stone_value,
    race_evaluators,
    verify_profile,
    verify_profile_np,
)
from qrace.schemas import (
    AltCoincidingOut,
    BitcoinOut,
    BoundOut,
    BoundReportOut,
    CertificateOut,
    DeviationOut,
    MultiOut,
    ScheduleReportOut,
    SimulateOut,
    Solve2Out,
    SweepOut,
    SweepPointOut,
    SweepRowOut,
    VerifyOut,
    export_schemas,
    reports_out,
    values,
)

logger = logging.getLogger(__name__)

# Errors reported as "Error: ..." with exit status 1
_DOMAIN_ERRORS = (ValueError, ArithmeticError, CertificateError, OSError)

_VARIANTS = {
    "stingy": Variant.STINGY,
    "quantum": Variant.TIE_SPLITTING,
    "tie-splitting": Variant.TIE_SPLITTING,
}

# ---------------------------------------------------------------------------
# Table rendering
# ---------------------------------------------------------------------------

# SGR codes; verdict names double as style keys
_SGR = {"bold": "1", "holds": "32", "fails": "31", "inapplicable": "33"}

# Vectors longer than this are elided in table output
_MAX_INLINE = 6


def _use_color() -> bool:
    if os.getenv("NO_COLOR"):
        return False
    return hasattr(sys.stdout, "isatty") and sys.stdout.isatty()


def _paint(text: str, style: str) -> str:
    if not _use_color():
        return text
    return f"\033[{_SGR[style]}m{text}\033[0m"


def _short(value: Any) -> str:
    """Compact cell text: 6 significant digits, elided vectors, '-' for missing."""
    if value is None:
        return "-"
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, list):
        if any(isinstance(v, (dict, list)) for v in value):
            return f"<{len(value)} entries>"
        cells = [_short(v) for v in value]
        if len(cells) > _MAX_INLINE:
            cells = cells[:3] + ["..."] + cells[-2:]
            return f"[{', '.join(cells)}] ({len(value)} values)"
        return f"[{', '.join(cells)}]"
    return str(value)


def _report_block(report: dict[str, Any]) -> list[str]:
    """One line per check: name, verdict, then ``value rel bound`` with numbers right-aligned."""
    status = "holds" if report["holds"] else "fails"
    lines = [f"{_paint(report['name'], 'bold')} [{_paint(status, status)}]"]
    rows = [
        (c["name"], c["verdict"], _short(c.get("value")), c["relation"], _short(c.get("bound")))
        for c in report["checks"]
    ]
    widths = [max((len(row[i]) for row in rows), default=0) for i in range(5)]
    for check, (name, verdict, value, rel, bound) in zip(report["checks"], rows):
        line = (
            f"  {name.ljust(widths[0])}  {_paint(verdict.ljust(widths[1]), verdict)}"
            f"  {value.rjust(widths[2])} {rel.center(widths[3])} {bound.rjust(widths[4])}"
        )
        if check.get("detail"):
            line += f"  ({check['detail']})"
        lines.append(line.rstrip())
    return lines


def _render_table(doc: dict[str, Any], title: str) -> str:
    """Scalar fields as ``name : value`` under the command name, then each bound report."""
    fields = [(key, _short(value)) for key, value in doc.items() if not isinstance(value, dict)]
    width = max((len(key) for key, _ in fields), default=0)
    lines = [_paint(title, "bold")]
    lines.extend(f"  {key.ljust(width)} : {text}" for key, text in fields)
    for report in doc.get("bounds", {}).values():
        lines.append("")
        lines.extend(_report_block(report))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Input helpers
# ---------------------------------------------------------------------------

def _size(text: str) -> int:
    """Integer argument that also accepts scientific notation such as 1e6."""
    try:
        return int(text)
    except ValueError:
        value = float(text)
        if not value.is_integer():
            raise argparse.ArgumentTypeError(f"expected an integer, got {text}") from None
        return int(value)


def _load_schedule(args: argparse.Namespace) -> ProbabilitySchedule:
    if getattr(args, "grover_n", None) is not None:
        return grover_schedule(args.grover_n)
    if getattr(args, "probs", None) is not None:
        return schedule_from_values([v.strip() for v in args.probs.split(",") if v.strip()])
    return schedule_from_file(args.schedule)


def _load_col(args: argparse.Namespace, row: ProbabilitySchedule) -> ProbabilitySchedule:
    if getattr(args, "col_schedule", None):
        return schedule_from_file(args.col_schedule)
    return row


def _grover_n(args: argparse.Namespace) -> int | None:
    return getattr(args, "grover_n", None)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _emit(args: argparse.Namespace, json_text: str, csv_text: str | None = None) -> None:
    """Write the command's result in the requested format."""
    if args.format == "csv":
        if csv_text is None:
            print(f"Error: --format csv is not available for '{args.command}'", file=sys.stderr)
            sys.exit(2)
        write_text(csv_text, args.output)
    elif args.format == "table":
        data = json.loads(json_text)
        docs = data if isinstance(data, list) else [data]
        write_text("\n".join(_render_table(d, args.command) for d in docs), args.output)
    else:
        write_text(json_text, args.output)


def _weights_csv(x: MixedStrategy, y: MixedStrategy) -> str:
    rows = [(t, x.weight(t), y.weight(t)) for t in range(1, x.k + 1)]
    return rows_to_csv(["t", "row", "col"], rows)


def _solution_out(
    sol: EquilibriumSolution, k: int, tstar: int | None = None, **extra: Any
) -> Solve2Out:
    return Solve2Out(
        kind=str(sol.kind),
        k=k,
        tstar=tstar,
        start_t=sol.start_t,
        change_c=sol.change_c,
        row=values(sol.row.weights),
        col=values(sol.col.weights),
        payoff_row=float(sol.payoff_row),
        payoff_col=float(sol.payoff_col),
        swapped_exists=sol.swapped_exists,
        **extra,
    )


# ---------------------------------------------------------------------------
# Command handlers
# ---------------------------------------------------------------------------

def _cmd_schedule(args: argparse.Namespace) -> list[BoundReport]:
    """Build a schedule and print it, or its density and convexity report."""
    schedule = _load_schedule(args)
    if not args.report:
        _emit(args, schedule_to_json(schedule), schedule_to_csv(schedule))
        return []
    density = density_report(schedule)
    convexity = convexity_report(schedule)
    doc = ScheduleReportOut(
        k=schedule.k,
        ell=density.ell,
        ratio=density.ratio,
        convex=convexity.is_convex,
        worst_convexity_violation=convexity.worst_violation,
        probs=values(schedule.probs),
    )
    rows = [(t, schedule.p(t)) for t in range(1, schedule.k + 1)]
    _emit(args, doc.to_json(), rows_to_csv(["t", "p"], rows))
    return []


def _self_checks(
    sol: EquilibriumSolution,
    row: ProbabilitySchedule,
    col: ProbabilitySchedule,
    exact: bool,
) -> BoundReport:
    report = BoundReport(name="self_checks")
    rec = recurrence_check(sol.internals, row, col)
    report.add(check_bound("recurrence", rec.worst_residual, "<=", settings.tolerance, slack=0.0))
    row_eval, col_eval = race_evaluators(row, col)
    verdict = verify_profile(row_eval, col_eval, sol.row, sol.col)
    report.add(
        check_bound(
            "nash_epsilon", verdict.epsilon_well_supported, "<=", settings.tolerance, slack=0.0
        )
    )
    if exact and row is col:
        if row.k > settings.exact_check_max_k:
            report.add(inapplicable("exact_tstar", f"K={row.k} > {settings.exact_check_max_k}"))
        else:
            check = exact_self_check(row)
            report.add(check_bound("exact_tstar", check.tstar_float, "==", check.tstar_exact, 0.0))
            report.add(check_bound("exact_relative_error", check.max_relative_error, "<=", 1e-9))
    return report


def _cmd_solve2(args: argparse.Namespace) -> list[BoundReport]:
    """Coinciding equilibrium of a two-player stingy race."""
    row = _load_schedule(args)
    col = _load_col(args, row)
    sol = coinciding_equilibrium(row, None if col is row else col)
    if isinstance(sol, NoCoincidingEquilibrium):
        doc = Solve2Out(
            kind="coinciding",
            exists=False,
            reason=f"T*_A={sol.tstar_a} differs from T*_B={sol.tstar_b}",
            k=row.k,
        )
        _emit(args, doc.to_json())
        return []

    reports = [_self_checks(sol, row, col, args.exact_check)]
    extra: dict[str, Any] = {}
    if col is row:
        density = density_report(row)
        analytics = collision_analytics(sol, row)
        extra = {
            "sigma": float(analytics.sigma),
            "tie_probability": float(analytics.tie_probability),
            "no_winner_probability": float(analytics.no_winner_probability),
        }
        reports += [
            payoff_bounds_check(sol, row, density),
            collision_bounds_check(analytics, row, density),
        ]
    doc = _solution_out(sol, row.k, tstar=sol.start_t, bounds=reports_out(reports), **extra)
    _emit(args, doc.to_json(), _weights_csv(sol.row, sol.col))
    return reports


def _cmd_solven(args: argparse.Namespace) -> list[BoundReport]:
    """Symmetric equilibrium of an n-player stingy race, one document per n."""
    schedule = _load_schedule(args)
    density = density_report(schedule)
    docs: list[MultiOut] = []
    rows: list[tuple] = []
    all_reports: list[BoundReport] = []
    for n in args.n:
        sol = multi_coinciding_equilibrium(schedule, n)
        tie_cfg = RaceConfig.symmetric(schedule, n, Variant.TIE_SPLITTING)
        total_tie = float(tie_event_probability(tie_cfg, sol.profile))
        regret = worst_regret(RaceConfig.symmetric(schedule, n), sol.profile)
        reports = [
            multi_bounds_check(sol, schedule, density),
            multi_tie_check(sol, schedule, density),
            multi_approx_check(sol, schedule, density),
        ]
        all_reports += reports
        docs.append(
            MultiOut(
                n=n,
                k=schedule.k,
                tstar=sol.tstar,
                strategy=values(sol.strategy.weights),
                per_player_payoff=sol.per_player_payoff,
                total_tie_probability=total_tie,
                worst_regret=regret,
                reduction_residual=reduction_residual(sol, schedule),
                bounds=reports_out(reports),
            )
        )
        rows.append(
            (
                _grover_n(args),
                schedule.k,
                n,
                density.ell,
                sol.tstar,
                sol.per_player_payoff,
                total_tie,
                constants.multiplayer_tie_bound(density.ell, schedule.k, n),
                regret,
            )
        )
    if len(docs) == 1:
        json_text = docs[0].to_json()
    else:
        json_text = "[" + ",".join(d.to_json().strip() for d in docs) + "]\n"
    header = [
        "N",
        "K",
        "n",
        "ell",
        "Tstar",
        "per_player_payoff",
        "total_tie",
        "bound_8enl_over_K",
        "worst_regret",
    ]
    _emit(args, json_text, rows_to_csv(header, rows))
    return all_reports


def _cmd_alternating(args: argparse.Namespace) -> list[BoundReport]:
    """Alternating equilibrium of a symmetric stingy race."""
    schedule = _load_schedule(args)
    reports = [tstar_relations_check(schedule)]
    sol = alternating_equilibrium(schedule)
    if isinstance(sol, NoAlternatingEquilibrium):
        doc = Solve2Out(
            kind="alternating",
            exists=False,
            reason=sol.reason,
            k=schedule.k,
            tstar=sol.tstar_tilde,
            bounds=reports_out(reports),
        )
        _emit(args, doc.to_json())
        return reports
    doc = _solution_out(sol, schedule.k, tstar=sol.start_t, bounds=reports_out(reports))
    _emit(args, doc.to_json(), _weights_csv(sol.row, sol.col))
    return reports


def _cmd_altcoinc(args: argparse.Namespace) -> list[BoundReport]:
    """Every alternating-coinciding equilibrium of a symmetric stingy race."""
    schedule = _load_schedule(args)
    solutions = alt_coinciding_equilibria(schedule)
    reports = [convex_structure_check(schedule)]
    doc = AltCoincidingOut(
        k=schedule.k,
        equilibria=[_solution_out(s, schedule.k) for s in solutions],
        bounds=reports_out(reports),
    )
    rows = [
        (s.start_t, s.change_c, float(s.payoff_row), float(s.payoff_col)) for s in solutions
    ]
    _emit(args, doc.to_json(), rows_to_csv(["startT", "changeC", "payoffRow", "payoffCol"], rows))
    return reports


def _default_profile(
    args: argparse.Namespace, row: ProbabilitySchedule, col: ProbabilitySchedule
) -> tuple[MixedStrategy, ...]:
    if args.n == 2:
        sol = coinciding_equilibrium(row, None if col is row else col)
        if isinstance(sol, NoCoincidingEquilibrium):
            raise ValueError("No coinciding equilibrium to verify; pass --profile")
        return (sol.row, sol.col)
    return multi_coinciding_equilibrium(row, args.n).profile


def _cmd_verify(args: argparse.Namespace) -> list[BoundReport]:
    """Exact and approximate Nash verdicts for a profile."""
    row = _load_schedule(args)
    col = _load_col(args, row)
    variant = _VARIANTS[args.against or args.game]
    if args.profile:
        profile = profile_from_file(args.profile, row.k)
    else:
        profile = _default_profile(args, row, col)
    n = len(profile)
    density = density_report(row)
    claims = BoundReport(name="claims")
    ms = None

    if n == 2:
        x, y = profile
        if row.k <= settings.max_matrix_k:
            a = payoff_matrix_2p(row, col, variant, Role.ROW)
            b = payoff_matrix_2p(row, col, variant, Role.COLUMN)
            verdict = verify_profile(a, b, x, y)
            ms = float(mangasarian_stone_value(a, b, x, y))
        else:
            verdict = verify_profile(*race_evaluators(row, col, variant), x, y)
    else:
        if col is not row:
            raise ValueError("Races with more than two players take a single schedule")
        verdict = verify_profile_np(RaceConfig.symmetric(row, n, variant), profile)

    if variant == Variant.TIE_SPLITTING and col is row:
        if n == 2 and constants.two_player_gate(density.ell, row.k):
            bound = constants.well_supported_epsilon(density.ell, row.k)
            eps = verdict.epsilon_well_supported
            claims.add(check_bound("epsilon_well_supported", eps, "<=", bound))
        elif n > 2 and constants.multiplayer_gate(density.ell, row.k, n):
            bound = constants.multiplayer_epsilon(density.ell, row.k)
            claims.add(check_bound("epsilon_approx", verdict.epsilon_approx, "<=", bound))
        else:
            claims.add(inapplicable("epsilon", "density precondition unmet"))

    doc = VerifyOut(
        game=str(variant),
        is_exact=verdict.is_exact,
        epsilon_approx=verdict.epsilon_approx,
        epsilon_well_supported=verdict.epsilon_well_supported,
        payoffs=verdict.payoffs,
        deviations=[
            DeviationOut(player=d.player, best_time=d.best_time, gain=d.gain)
            for d in verdict.worst_deviations
        ],
        mangasarian_stone=ms,
        bounds=reports_out([claims]),
    )
    rows = [(d.player, d.best_time, d.gain) for d in verdict.worst_deviations]
    _emit(args, doc.to_json(), rows_to_csv(["player", "best_time", "gain"], rows))
    return [claims]


def _analytic_constants(ell: float, k: int) -> dict[str, float]:
    return {
        "tau": constants.tau(ell, k),
        "zUpper": constants.z_upper(ell, k),
        "payoffLower": constants.payoff_lower(ell, k),
        "payoffCeiling": constants.payoff_ceiling(ell, k),
        "tieProbabilityBound": constants.tie_probability_bound(ell, k),
        "sigmaBound": constants.sigma_bound(ell, k),
        "wellSupportedEpsilon": constants.well_supported_epsilon(ell, k),
        "multiplayerEpsilon": constants.multiplayer_epsilon(ell, k),
    }


def _cmd_bound(args: argparse.Namespace) -> list[BoundReport]:
    """Every applicable bound check, the dual certificate and an optional c-sweep."""
    if args.analytic_only:
        k = grover_k(args.grover_n)
        doc = BoundOut(
            k=k,
            ell=constants.GROVER_ELL,
            analytic_only=True,
            constants=_analytic_constants(constants.GROVER_ELL, k),
        )
        _emit(args, doc.to_json())
        return []

    schedule = _load_schedule(args)
    density = density_report(schedule)
    sol = coinciding_equilibrium(schedule)
    analytics = collision_analytics(sol, schedule)
    ceiling = payoff_ceiling(schedule, density)
    reports = [
        payoff_bounds_check(sol, schedule, density),
        collision_bounds_check(analytics, schedule, density),
        well_supported_check(schedule, density),
        ceiling.report,
        helper_sum_check(schedule, density),
    ]
    for n in args.n:
        multi = multi_coinciding_equilibrium(schedule, n)
        for report in (
            multi_bounds_check(multi, schedule, density),
            multi_tie_check(multi, schedule, density),
        ):
            report.name = f"{report.name}_n{n}"
            reports.append(report)
    if args.appendix:
        reports += [tstar_relations_check(schedule), convex_structure_check(schedule)]

    cert_out = None
    gap = None
    if ceiling.certificate is not None:
        cert = ceiling.certificate
        cert_out = CertificateOut(
            c=cert.c,
            s=cert.s,
            lam=cert.lam,
            d=cert.d,
            beta=cert.beta,
            objective=cert.objective,
            feasible=cert.feasible,
            certifies=cert.certifies,
            trivial=cert.trivial,
        )
        duality = weak_duality_check(cert, schedule)
        gap = duality.worst_gap
        weak = BoundReport(name="weak_duality")
        if gap is None:
            weak.add(inapplicable("gap", "no sampled point is primal feasible"))
        else:
            weak.add(check_bound("gap", gap, ">=", 0.0, slack=1e-10))
        reports.append(weak)

    sweep_points: list[SweepPointOut] = []
    smallest = None
    if args.dual_sweep:
        sweep = dual_sweep(schedule, args.dual_sweep)
        smallest = sweep.smallest_certified
        sweep_points = [
            SweepPointOut(
                c=p.c,
                beta=p.beta,
                objective=p.objective,
                certifies=p.certifies,
                beta_limit=p.beta_limit,
            )
            for p in sweep.points
        ]

    doc = BoundOut(
        k=schedule.k,
        ell=density.ell,
        constants=_analytic_constants(density.ell, schedule.k),
        certificate=cert_out,
        dual_sweep=sweep_points,
        smallest_certified=smallest,
        weak_duality_gap=gap,
        bounds=reports_out(reports),
    )
    rows = [
        (r.name, c.name, str(c.verdict), c.value, c.relation, c.bound)
        for r in reports
        for c in r.checks
    ]
    header = ["report", "check", "verdict", "value", "rel", "bound"]
    _emit(args, doc.to_json(), rows_to_csv(header, rows))
    return reports


def _sweep_out(rows: list[SweepRow]) -> SweepOut:
    return SweepOut(
        rows=[
            SweepRowOut(
                big_n=r.big_n,
                k=r.k,
                n=r.n,
                ell=r.ell,
                tstar=r.tstar,
                analytic_payoff=r.analytic_payoff,
                analytic_tie=r.analytic_tie,
                empirical_tie=r.empirical_tie,
                bound_8enl_over_k=r.bound,
                trials=r.trials,
                seed=r.seed,
            )
            for r in rows
        ]
    )


def _cmd_simulate(args: argparse.Namespace) -> list[BoundReport]:
    """Monte Carlo estimate of win, tie and no-winner frequencies."""
    if args.sweep_config:
        rows = sweep_from_config(args.sweep_config)
        _emit(args, _sweep_out(rows).to_json(), sweep_to_csv(rows))
        return []

    schedule = _load_schedule(args)
    cfg = RaceConfig.symmetric(schedule, args.n, _VARIANTS[args.variant])
    if args.profile:
        profile = profile_from_file(args.profile, schedule.k)
    else:
        profile = multi_coinciding_equilibrium(schedule, args.n).profile
    sc = SimConfig(cfg=cfg, profile=tuple(profile), trials=args.trials, seed=args.seed)
    result = run_simulation(sc)
    reports = [consistency_report(result, sc)] if args.consistency else []
    doc = SimulateOut(
        n=result.n,
        variant=str(result.variant),
        trials=result.trials,
        seed=result.seed,
        win_frequency=result.win_frequency,
        tie_frequency=result.tie_frequency,
        tie_frequency_by_multiplicity={
            str(m): f for m, f in result.tie_frequency_by_multiplicity.items()
        },
        no_winner_frequency=result.no_winner_frequency,
        payoff_estimate=[result.payoff_estimate(i) for i in range(result.n)],
        payoff_standard_error=[result.payoff_standard_error(i) for i in range(result.n)],
        consistency=BoundReportOut.from_report(reports[0]) if reports else None,
    )
    rows = [
        (i, result.win_counts[i], result.payoff_estimate(i), result.payoff_standard_error(i))
        for i in range(result.n)
    ]
    _emit(args, doc.to_json(), rows_to_csv(["player", "wins", "payoff", "se"], rows))
    return reports


def _cmd_bitcoin(args: argparse.Namespace) -> list[BoundReport]:
    """Analytic race parameters for a mining difficulty."""
    params = bitcoin_schedule_params(args.difficulty)
    doc = BitcoinOut(
        difficulty=params.difficulty,
        big_n=params.n,
        k=params.k,
        ell=params.ell,
        epsilon_bound=params.epsilon_bound,
        tie_bounds={str(n): params.tie_bound(n) for n in args.players},
        materializable=params.materializable,
    )
    _emit(args, doc.to_json(), sweep_to_csv(bitcoin_rows(args.difficulty, args.players)))
    return []


def _cmd_schemas(args: argparse.Namespace) -> list[BoundReport]:
    """Write the JSON schema of every document the CLI emits."""
    for path in export_schemas(args.out):
        print(path)
    return []


# ---------------------------------------------------------------------------
# Argument parser
# ---------------------------------------------------------------------------

def _add_output_args(parser: argparse.ArgumentParser) -> None:
    """Add --format, --output and --strict to a subparser."""
    parser.add_argument("--format", choices=["json", "csv", "table"], default="json",
                        help="Output format (default: json)")
    parser.add_argument("--output", "-o", metavar="FILE", default=None,
                        help="Write to FILE instead of stdout")
    parser.add_argument("--strict", action="store_true",
                        help="Exit 1 when any check fails or is inapplicable")


def _add_schedule_args(parser: argparse.ArgumentParser, required: bool = True) -> None:
    """Add the mutually exclusive schedule sources."""
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--grover-N", dest="grover_n", type=_size, metavar="N",
                       help="Grover race over N items")
    group.add_argument("--probs", metavar="P1,P2,...",
                       help="Comma-separated probabilities; p/q entries are exact")
    group.add_argument("--schedule", metavar="FILE", help="Schedule file (.json or .csv)")


def _build_parser() -> argparse.ArgumentParser:
    """Build the full CLI argument parser."""
    parser = argparse.ArgumentParser(
        prog="qrace",
        description="qrace - equilibria, bounds and simulation of quantum races",
    )
    parser.add_argument("--version", action="version", version=f"qrace {__version__}")
    parser.add_argument("--log-level", default=None,
                        choices=["debug", "info", "warning", "error"],
                        help=f"Log level (default: {settings.log_level})")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # --- schedule ---
    p_sched = subparsers.add_parser("schedule", help="Build and print a schedule")
    _add_schedule_args(p_sched)
    p_sched.add_argument("--report", action="store_true",
                         help="Print density and convexity instead of the schedule")
    _add_output_args(p_sched)

    # --- solve2 ---
    p_solve2 = subparsers.add_parser("solve2", help="Two-player coinciding equilibrium")
    _add_schedule_args(p_solve2)
    p_solve2.add_argument("--col-schedule", metavar="FILE",
                          help="Column player's schedule (default: same as the row player)")
    p_solve2.add_argument("--exact-check", action="store_true",
                          help="Recompute the internals in exact rational arithmetic")
    _add_output_args(p_solve2)

    # --- solven ---
    p_solven = subparsers.add_parser("solven", help="n-player coinciding equilibrium")
    _add_schedule_args(p_solven)
    p_solven.add_argument("--n", type=int, nargs="+", default=[3], help="Player counts")
    _add_output_args(p_solven)

    # --- alternating ---
    p_alt = subparsers.add_parser("alternating", help="Alternating equilibrium")
    _add_schedule_args(p_alt)
    _add_output_args(p_alt)

    # --- altcoinc ---
    p_ac = subparsers.add_parser("altcoinc", help="Alternating-coinciding equilibria")
    _add_schedule_args(p_ac)
    _add_output_args(p_ac)

    # --- verify ---
    p_verify = subparsers.add_parser("verify", help="Nash verdict for a strategy profile")
    _add_schedule_args(p_verify)
    p_verify.add_argument("--col-schedule", metavar="FILE",
                          help="Column player's schedule (two players only)")
    p_verify.add_argument("--game", choices=sorted(_VARIANTS), default="stingy",
                          help="Race the profile was solved for (default: stingy)")
    p_verify.add_argument("--against", choices=sorted(_VARIANTS), default=None,
                          help="Race to verify in (default: --game)")
    p_verify.add_argument("--profile", metavar="FILE",
                          help="Profile or solution JSON (default: the coinciding equilibrium)")
    p_verify.add_argument("--n", type=int, default=2, help="Players for the default profile")
    _add_output_args(p_verify)

    # --- bound ---
    p_bound = subparsers.add_parser("bound", help="Bound checks and dual certificate")
    _add_schedule_args(p_bound)
    p_bound.add_argument("--n", type=int, nargs="*", default=[],
                         help="Also check the multiplayer bounds for these player counts")
    p_bound.add_argument("--appendix", action="store_true",
                         help="Also check the alternating structure")
    p_bound.add_argument("--dual-sweep", type=int, metavar="POINTS", default=0,
                         help="Certificates over POINTS levels in [sqrt(2)-1, 1/2]")
    p_bound.add_argument("--analytic-only", action="store_true",
                         help="Report the analytic bounds without building the schedule")
    _add_output_args(p_bound)

    # --- simulate ---
    p_sim = subparsers.add_parser("simulate", help="Monte Carlo simulation")
    _add_schedule_args(p_sim, required=False)
    p_sim.add_argument("--n", type=int, default=2, help="Number of players (default: 2)")
    p_sim.add_argument("--variant", choices=sorted(_VARIANTS), default="stingy")
    p_sim.add_argument("--trials", type=_size, default=100_000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--profile", metavar="FILE",
                       help="Profile JSON (default: the n-player equilibrium)")
    p_sim.add_argument("--consistency", action="store_true",
                       help="Compare frequencies with the analytic probabilities")
    p_sim.add_argument("--sweep-config", metavar="FILE", help="YAML fork-rate sweep definition")
    _add_output_args(p_sim)

    # --- bitcoin ---
    p_btc = subparsers.add_parser("bitcoin", help="Analytic report for a mining difficulty")
    p_btc.add_argument("--difficulty", type=float, required=True)
    p_btc.add_argument("--players", type=int, nargs="+", default=[2])
    _add_output_args(p_btc)

    # --- schemas ---
    p_schemas = subparsers.add_parser("schemas", help="Export JSON schemas")
    p_schemas.add_argument("--out", metavar="DIR", required=True)

    return parser


def _check_args(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Reject conflicting flags before any computation."""
    if args.command == "simulate":
        has_schedule = any(
            getattr(args, name) is not None for name in ("grover_n", "probs", "schedule")
        )
        if args.sweep_config and has_schedule:
            parser.error("simulate: --sweep-config cannot be combined with a schedule")
        if not args.sweep_config and not has_schedule:
            parser.error("simulate: a schedule or --sweep-config is required")
    if args.command == "bound" and args.analytic_only and args.grover_n is None:
        parser.error("bound: --analytic-only needs --grover-N")
    if args.command == "verify" and args.col_schedule and args.n != 2:
        parser.error("verify: --col-schedule is for two players")


def _strict_failures(reports: list[BoundReport]) -> list[str]:
    out = []
    for report in reports:
        for check in report.checks:
            if not check.holds:
                out.append(f"{report.name}.{check.name}: {check.verdict}")
    return out


# ---------------------------------------------------------------------------
# Main entry point
# ---------------------------------------------------------------------------

def main(argv: list[str] | None = None) -> None:
    """Route CLI commands."""
    parser = _build_parser()
    args = parser.parse_args(argv)

    level = args.log_level or settings.log_level
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        stream=sys.stderr,
    )

    if args.command is None:
        parser.print_help()
        sys.exit(0)
    _check_args(parser, args)

    dispatch: dict[str, Callable[[argparse.Namespace], list[BoundReport]]] = {
        "schedule": _cmd_schedule,
        "solve2": _cmd_solve2,
        "solven": _cmd_solven,
        "alternating": _cmd_alternating,
        "altcoinc": _cmd_altcoinc,
        "verify": _cmd_verify,
        "bound": _cmd_bound,
        "simulate": _cmd_simulate,
        "bitcoin": _cmd_bitcoin,
        "schemas": _cmd_schemas,
    }

    try:
        reports = dispatch[args.command](args)
    except _DOMAIN_ERRORS as e:
        logger.debug(f"{args.command} failed", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)

    if getattr(args, "strict", False):
        problems = _strict_failures(reports)
        if problems:
            for line in problems:
                print(f"Strict: {line}", file=sys.stderr)
            sys.exit(1)


if __name__ == "__main__":
    main()
