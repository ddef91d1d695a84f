"""Command-line entry point: ``ieswpt {analyze,simulate,optimize,sweep,trace}``.

Data goes to standard output or ``--out``; diagnostics go to standard error.
Exit status: 0 success, 2 invalid input, 3 internal invariant breach.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .analytic import classify_regime, conventional_t_oc, phase_durations, t_oc_analytic, t_oc_upper_bound
from .config import ParseError, load_config
from .ledger import LedgerViolation, energy_ledger_check
from .model import ConstraintViolation, Piecewise3, ValidatedScenario
from .optimize import DegenerateObjective, Evaluator, default_grid, grid_search_qies, minimize_bound
from .oracle import run_fixed_step
from .sim import DecoupleRule, NonTermination, SimResult, run_event_sim
from .sweep import (
    PRESETS,
    Axis,
    SweepEvaluator,
    SweepRequest,
    axis_values,
    curve_csv,
    emit_csv,
    emit_trace_csv,
    fmt,
    preset_request,
    run_sweep,
)

log = logging.getLogger("ieswpt")

EXIT_OK, EXIT_INVALID, EXIT_INTERNAL = 0, 2, 3


def _scenario(args) -> ValidatedScenario:
    s = load_config(args.config)
    changes = {}
    if args.n is not None:
        changes["n"] = args.n
    if args.q_ies is not None:
        changes["q_ies"] = args.q_ies
    if args.t_d is not None:
        changes["t_d"] = args.t_d
    if args.p_r is not None:
        changes["p_r"] = args.p_r
    if args.profile == "piecewise3" and s.is_constant:
        changes["profile"] = Piecewise3(1.0)
    if args.initial_soc is not None:
        changes["initial_soc"] = args.initial_soc
    return s.with_(**changes) if changes else s


def _kv(out, key: str, value) -> None:
    out.write(f"{key}: {fmt(value) if isinstance(value, (int, float)) and not isinstance(value, bool) else value}\n")


def _print_sim(out, r: SimResult, prefix: str = "") -> None:
    _kv(out, prefix + "t_oc_s", r.t_oc)
    _kv(out, prefix + "per_receiver_finish_s", " ".join(fmt(v) for v in r.per_receiver_finish))
    _kv(out, prefix + "total_standby_s", r.total_standby)
    _kv(out, prefix + "switch_count", r.switch_count)
    _kv(out, prefix + "tx_busy_fraction", r.tx_busy_fraction)
    _kv(out, prefix + "event_count", r.event_count)


def cmd_analyze(args, out) -> int:
    s = _scenario(args)
    if not s.is_constant:
        raise ConstraintViolation("analyze needs the constant profile; use simulate for piecewise3")
    rx, n = s.receiver, s.n
    d = phase_durations(rx)
    reg = classify_regime(rx, n)
    b = t_oc_analytic(rx, n)
    for key in ("a", "b", "c", "k_l", "c_prime"):
        _kv(out, key, getattr(d, key))
    _kv(out, "n", n)
    _kv(out, "n_max", reg.n_max)
    _kv(out, "standby", str(reg.standby).lower())
    _kv(out, "final_case", reg.final_case.value if reg.final_case else "")
    _kv(out, "formula", b.formula_id.value)
    for k, v in b.components.items():
        _kv(out, f"component.{k}", v)
    _kv(out, "t_oc_s", b.t_oc)
    _kv(out, "t_oc_bound_s", t_oc_upper_bound(rx, n))
    conv = conventional_t_oc(rx, n)
    _kv(out, "t_oc_conventional_s", conv)
    _kv(out, "speedup", conv / b.t_oc)
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    s = _scenario(args)
    r = run_event_sim(s, trace=True, rule=args.rule)
    report = energy_ledger_check(r, s)
    _print_sim(out, r)
    _kv(out, "ledger_max_residual_j", report.max_residual)
    if s.is_constant:
        _kv(out, "t_oc_analytic_s", t_oc_analytic(s.receiver, s.n).t_oc)
    _kv(out, "t_oc_conventional_s", conventional_t_oc(s.receiver, s.n, s.profile, s.initial_soc))
    if args.dt is not None:
        o = run_fixed_step(s, args.dt, rule=args.rule)
        _print_sim(out, o, prefix="oracle.")
    return EXIT_OK


def cmd_optimize(args, out) -> int:
    s = _scenario(args)
    rx = s.receiver
    bm = None
    try:
        bm = minimize_bound(rx, s.n)
    except DegenerateObjective as exc:
        log.warning("bound minimisation skipped: %s", exc)
    else:
        _kv(out, "bound.q_star_j", bm.closed_form.q_star)
        _kv(out, "bound.t_star_s", bm.closed_form.t_star)
        _kv(out, "bound.golden_q_star_j", bm.golden_section.q_star)
        _kv(out, "bound.relative_gap", bm.relative_gap)
        _kv(out, "bound.boundary", str(bm.closed_form.boundary).lower())
    if args.min is not None or args.max is not None:
        lo = args.min if args.min is not None else 1e-7
        hi = args.max if args.max is not None else 0.5
        grid = axis_values(lo, hi, args.count or 400, log=args.log)
        if args.ratio:
            grid = tuple(v * rx.q_c for v in grid)
    else:
        grid = default_grid(rx.q_c, args.count or 400)
    evaluator = Evaluator.EVENT_SIM if "EventSim" in (args.evaluators or "") else Evaluator.ANALYTIC
    if not s.is_constant:
        evaluator = Evaluator.EVENT_SIM
    g = grid_search_qies(s, grid, evaluator, workers=args.jobs)
    _kv(out, "grid.evaluator", evaluator.value)
    _kv(out, "grid.points", len(g.curve))
    _kv(out, "grid.q_star_j", g.q_star)
    _kv(out, "grid.t_star_s", g.t_star)
    if args.out:
        curve_csv(g.curve, rx.q_c, args.out)
        log.info("wrote %s", args.out)
        if args.plot:
            from .plotting import plot_qies_curve

            plot_qies_curve(g.curve, rx.q_c, _plot_path(args), bm.closed_form.q_star if bm else None)
    return EXIT_OK


def _evaluators(text: str | None, default) -> tuple[SweepEvaluator, ...]:
    if not text:
        return default
    names = {e.value.lower(): e for e in SweepEvaluator}
    try:
        return tuple(names[t.strip().lower()] for t in text.split(",") if t.strip())
    except KeyError as exc:
        raise ConstraintViolation(f"unknown evaluator {exc.args[0]!r}; choose from {[e.value for e in SweepEvaluator]}") from None


def _plot_path(args) -> Path:
    return Path(args.out).with_suffix(".png")


def cmd_sweep(args, out) -> int:
    base = _scenario(args)
    if args.preset:
        req = preset_request(args.preset, base)
        if args.evaluators:
            req = SweepRequest(req.axis, req.values, _evaluators(args.evaluators, ()), req.base, req.ratio, args.rule)
    else:
        if not args.axis:
            raise ConstraintViolation("sweep needs --axis or --preset")
        axis = Axis(args.axis)
        if args.values:
            values = tuple(float(v) for v in args.values.split(","))
        elif args.min is not None and args.max is not None:
            values = axis_values(args.min, args.max, args.count, log=args.log, integer=axis is Axis.N)
        elif axis is Axis.P_R:
            values = (4.2, 6.0, 8.0)
        else:
            raise ConstraintViolation("sweep needs --values or --min/--max")
        default = (
            (SweepEvaluator.ANALYTIC, SweepEvaluator.BOUND)
            if base.is_constant
            else (SweepEvaluator.EVENT_SIM, SweepEvaluator.CONVENTIONAL)
        )
        req = SweepRequest(axis, values, _evaluators(args.evaluators, default), base, args.ratio, args.rule)
    curve = run_sweep(req, workers=args.jobs)
    emit_csv(curve, args.out or out)
    if args.out:
        log.info("wrote %s (%d rows)", args.out, len(curve.rows))
        if args.plot:
            from .plotting import plot_sweep

            plot_sweep(curve, _plot_path(args))
    return EXIT_OK


def cmd_trace(args, out) -> int:
    s = _scenario(args)
    r = run_event_sim(s, trace=True, rule=args.rule)
    energy_ledger_check(r, s)
    emit_trace_csv(r.trace, args.out or out)
    if args.out:
        log.info("wrote %s (%d events)", args.out, len(r.trace))
        if args.plot:
            from .plotting import plot_trace

            plot_trace(r.trace, s.n, _plot_path(args))
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "trace": cmd_trace,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="scenario file (key=value); defaults to the paper parameters")
    common.add_argument("--n", type=int, help="override the number of receivers")
    common.add_argument("--q-ies", type=float, help="override the IES capacity [J]")
    common.add_argument("--t-d", type=float, help="override the switching delay [s]")
    common.add_argument("--p-r", type=float, help="override the received power [W]")
    common.add_argument("--initial-soc", type=float, help="override the initial SOC")
    common.add_argument("--profile", choices=("constant", "piecewise3"), help="override the charge profile")
    common.add_argument("--rule", choices=[r.value for r in DecoupleRule], default="fill",
                        help="final-cycle decouple rule (default: fill)")
    common.add_argument("--out", help="output file (CSV); standard output if omitted")
    common.add_argument("--plot", action="store_true", help="also render a PNG next to --out")
    common.add_argument("--axis", choices=[a.value for a in Axis])
    common.add_argument("--values", help="comma-separated axis values")
    common.add_argument("--min", type=float)
    common.add_argument("--max", type=float)
    common.add_argument("--count", type=int)
    common.add_argument("--log", action="store_true", help="log spacing for --min/--max")
    common.add_argument("--ratio", action="store_true", help="q_ies values are fractions of q_c")
    common.add_argument("--evaluators", help="comma list of Analytic,Bound,EventSim,Conventional")
    common.add_argument("--preset", choices=sorted(PRESETS), help="figure preset (sweep only)")
    common.add_argument("--dt", type=float, help="also run the fixed-step oracle with this step [s]")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--seed", type=int, help="reserved; all runs are deterministic")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ieswpt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "analyze": "closed-form phase durations, regime and charge time",
        "simulate": "run the event simulator (and the fixed-step oracle with --dt)",
        "optimize": "size the IES: bound minimiser and grid scan",
        "sweep": "sweep one parameter and write a CSV",
        "trace": "write the event trace CSV",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose or args.out else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        return COMMANDS[args.command](args, sys.stdout)
    except (ParseError, ConstraintViolation, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except (LedgerViolation, NonTermination, ArithmeticError, RuntimeError) as exc:
        log.error("internal invariant breach: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
