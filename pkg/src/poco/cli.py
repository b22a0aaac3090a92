"""Command-line entry point.

Commands
--------
run-exp1 / run-exp2 / run-exp3
    Run one of the three studies and write curve.csv, summary.txt and
    manifest.json into the output directory.
run-custom
    Same harness with every knob taken from the config file.
check-bounds
    Batch-verify the regret bounds (single-step, multi-step, expert pool)
    and the aggregation inequality; nonzero exit when any run violates one.
project
    Project a vector onto a ball or simplex and print the result.
fit-ar
    Fit an autoregression to a CSV series by the Yule-Walker equations and
    print the coefficients.

Exit codes: 0 success, 1 a requested check failed, 2 config error,
3 data error, 4 runtime error.  The output directory defaults to --out,
then $POCO_OUT, then ./poco_out.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from poco import __version__
from poco.config import (
    ConfigError,
    default_out_dir,
    emit_results,
    parse_config,
    resolve_config,
)
from poco.descent import DescentConfig, run_predictive_ogd
from poco.domains import EuclideanBall, UnitSimplex
from poco.experiments import (
    Exp1Spec,
    Exp2Spec,
    Exp3Spec,
    ExperimentResult,
    _summarize_diffs,
    run_exp1,
    run_exp2,
    run_exp3,
    run_expert_bound_study,
    run_predictive_bound_study,
)
from poco.objectives import QuadraticTracking
from poco.predictors import Persistence, VarPredictor, fit_var_yule_walker
from poco.regret import build_ledger
from poco.scenarios import DataError, RiskProcessSpec, SwitchingProcessSpec, gen_switching

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


# ---------------------------------------------------------------------------
# config -> study specs
# ---------------------------------------------------------------------------

def _spec_exp1(cfg: dict) -> Exp1Spec:
    return Exp1Spec(
        horizon=cfg["horizon"],
        repetitions=cfg["repetitions"],
        eta=cfg["descent"]["eta"],
        weights=tuple(cfg["objective"]["weights"]),
        radius=cfg["domain"]["radius"],
        x1=tuple(cfg["descent"]["x1"]),
        dwell=tuple(cfg["scenario"]["dwell"]),
        noise_scale=cfg["scenario"]["noise_scale"],
        ar_order=cfg["predictor"]["order"],
        warmup=cfg["predictor"]["min_history"] or 2 * cfg["predictor"]["order"] + 1,
        refit_every=cfg["predictor"]["refit_every"],
        inner_steps=cfg["descent"]["inner_steps"],
        master_seed=cfg["seed"],
    )


def _auto_gamma(cfg: dict) -> float:
    """sqrt(8/(T D^2)) with the loss range D declared from the scenario box."""
    from poco.objectives import QuadraticTracking as _QT
    from poco.scenarios import switching_declared_box
    from poco.smad import suggested_gamma

    family = _QT(cfg["objective"]["weights"])
    cset = EuclideanBall(
        center=np.asarray(cfg["domain"]["center"]), radius=cfg["domain"]["radius"]
    )
    proc = SwitchingProcessSpec(
        state_a=tuple(cfg["scenario"]["state_a"]),
        state_b=tuple(cfg["scenario"]["state_b"]),
        dwell=tuple(cfg["scenario"]["dwell"]),
        noise_scale=cfg["scenario"]["noise_scale"],
        horizon=cfg["horizon"],
        noise_clip=cfg["scenario"]["noise_clip"],
    )
    d_range = family.derive_constants(cset, switching_declared_box(proc)).D
    return suggested_gamma(d_range, cfg["horizon"])


def _spec_exp2(cfg: dict) -> Exp2Spec:
    gamma = cfg["smad"]["gamma"]
    if gamma == "auto":
        gamma = _auto_gamma(cfg)
    return Exp2Spec(
        horizon=cfg["horizon"],
        repetitions=cfg["repetitions"],
        eta=cfg["descent"]["eta"],
        weights=tuple(cfg["objective"]["weights"]),
        radius=cfg["domain"]["radius"],
        x1=tuple(cfg["descent"]["x1"]),
        dwell=tuple(cfg["scenario"]["dwell"]),
        noise_scale=cfg["scenario"]["noise_scale"],
        expert_orders=tuple(cfg["smad"]["expert_orders"]),
        first_activation=cfg["smad"]["first_activation"],
        activation_every=cfg["smad"]["activation_every"],
        activation_times=(
            tuple(cfg["smad"]["activation_times"])
            if cfg["smad"]["activation_times"] is not None
            else None
        ),
        beta=cfg["smad"]["beta"],
        gamma=gamma,
        inner_steps=cfg["descent"]["inner_steps"],
        master_seed=cfg["seed"],
    )


def _spec_exp3(cfg: dict) -> Exp3Spec:
    sec = cfg["exp3"]
    risk = RiskProcessSpec(
        base=sec["risk_base"],
        warmup_days=sec["risk_warmup_days"],
        stay_prob=sec["risk_stay_prob"],
        jump_low=sec["risk_jump_low"],
        jump_high=sec["risk_jump_high"],
        noise_var=sec["risk_noise_var"],
        obs_every_days=sec["month_days"],
    )
    return Exp3Spec(
        csv_path=sec["csv_path"],
        risk_free=sec["risk_free"],
        synth_assets=sec["synth_assets"],
        synth_days=sec["synth_days"],
        lookbacks=tuple(sec["lookbacks"]),
        ar_orders=tuple(sec["ar_orders"]),
        client_lookback=sec["client_lookback"],
        eta=sec["eta"],
        gamma=sec["gamma"],
        beta=sec["beta"],
        observe_months=sec["observe_months"],
        eval_months=sec["eval_months"],
        repetitions=cfg["repetitions"],
        month_days=sec["month_days"],
        risk=risk,
        master_seed=cfg["seed"],
    )


def run_custom(cfg: dict) -> ExperimentResult:
    """Generic two-arm comparison built entirely from the config."""
    family = QuadraticTracking(cfg["objective"]["weights"])
    dom = cfg["domain"]
    if dom["kind"] == "ball":
        cset = EuclideanBall(center=np.asarray(dom["center"]), radius=dom["radius"])
    else:
        cset = UnitSimplex(dom["dimension"], mode=dom["projection_mode"])
    proc = SwitchingProcessSpec(
        state_a=tuple(cfg["scenario"]["state_a"]),
        state_b=tuple(cfg["scenario"]["state_b"]),
        dwell=tuple(cfg["scenario"]["dwell"]),
        noise_scale=cfg["scenario"]["noise_scale"],
        horizon=cfg["horizon"],
        noise_clip=cfg["scenario"]["noise_clip"],
    )
    des = cfg["descent"]
    x1 = np.asarray(des["x1"], dtype=float)

    def make_predictor():
        pred = cfg["predictor"]
        if pred["kind"] == "persistence":
            return Persistence()
        return VarPredictor(
            order=pred["order"],
            refit_every=pred["refit_every"],
            min_history=pred["min_history"],
            indices=pred["indices"],
        )

    seeds = np.random.SeedSequence(cfg["seed"]).spawn(cfg["repetitions"])
    diffs = np.empty((cfg["repetitions"], cfg["horizon"]))
    first = {}
    for r, child in enumerate(seeds):
        thetas = gen_switching(proc, child)
        baseline = run_predictive_ogd(
            family, cset, thetas,
            DescentConfig(des["eta"], des["inner_steps"], "standard"), x1,
        )
        method = run_predictive_ogd(
            family, cset, thetas,
            DescentConfig(des["eta"], des["inner_steps"], des["mode"]), x1,
            predictor=make_predictor() if des["mode"] == "predictive" else None,
        )
        diffs[r] = np.cumsum(method.losses - baseline.losses)
        if r == 0:
            first = {"baseline": baseline, "method": method}

    ledgers = {}
    if cfg["bounds"]["check"]:
        for arm, traj in first.items():
            ledgers[arm] = build_ledger(
                family, cset, traj, des["eta"], des["inner_steps"]
            )
    notes = [
        f"custom comparison: mode={des['mode']} repetitions={cfg['repetitions']} "
        f"horizon={cfg['horizon']} seed={cfg['seed']}",
        "curve = cumulative regret (method) - cumulative regret (baseline); "
        "regret decomposition below is for repetition 1",
    ]
    return ExperimentResult(curve=_summarize_diffs(diffs), ledgers=ledgers, notes=notes)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _load_config(args, experiment) -> dict:
    if args.config:
        cfg = parse_config(args.config, experiment=experiment)
    else:
        cfg = resolve_config({}, experiment=experiment)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "reps", None) is not None:
        cfg["repetitions"] = args.reps
    return cfg


def _emit_and_report(result: ExperimentResult, cfg: dict, args) -> int:
    out_dir = default_out_dir(args.out)
    lines = result.summary_lines()
    paths = emit_results(result.curve, lines, out_dir, cfg, __version__)
    if not args.quiet:
        for line in lines:
            print(line)
        print(f"wrote {paths['curve']}, {paths['summary']}, {paths['manifest']}")
    return EXIT_OK


def cmd_run_exp1(args) -> int:
    cfg = _load_config(args, "exp1")
    return _emit_and_report(run_exp1(_spec_exp1(cfg)), cfg, args)


def cmd_run_exp2(args) -> int:
    cfg = _load_config(args, "exp2")
    return _emit_and_report(run_exp2(_spec_exp2(cfg)), cfg, args)


def cmd_run_exp3(args) -> int:
    cfg = _load_config(args, "exp3")
    return _emit_and_report(run_exp3(_spec_exp3(cfg)), cfg, args)


def cmd_run_custom(args) -> int:
    cfg = _load_config(args, "custom")
    return _emit_and_report(run_custom(cfg), cfg, args)


def cmd_check_bounds(args) -> int:
    cfg = _load_config(args, args.experiment or "exp1")
    runs = args.runs or cfg["bounds"]["runs"]
    expert_runs = args.expert_runs or cfg["bounds"]["expert_runs"]
    base_spec = _spec_exp1(cfg)
    studies = []
    for k in (1, 2, 3):
        studies.append(run_predictive_bound_study(runs, inner_steps=k, spec=base_spec))
    studies.append(
        run_expert_bound_study(
            n_runs=expert_runs,
            horizon=cfg["horizon"],
            master_seed=cfg["seed"],
            eta=cfg["descent"]["eta"],
        )
    )
    lines = [f"bound verification (seed={cfg['seed']}, horizon={cfg['horizon']})"]
    all_ok = True
    for study in studies:
        lines.extend(study.summary_lines())
        all_ok = all_ok and study.all_hold
        all_ok = all_ok and all(
            rec.hedge_holds in (None, True) for rec in study.records
        )
    lines.append("RESULT: " + ("all bounds hold" if all_ok else "BOUND VIOLATION"))
    out_dir = default_out_dir(args.out)
    emit_results(None, lines, out_dir, cfg, __version__)
    if not args.quiet:
        for line in lines:
            print(line)
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


def _parse_vector(text: str) -> np.ndarray:
    parts = [p for chunk in text.split(",") for p in chunk.split()]
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ConfigError(f"could not parse vector {text!r}") from exc


def cmd_project(args) -> int:
    v = _parse_vector(args.vector)
    if args.kind == "ball":
        center = _parse_vector(args.center) if args.center else np.zeros(v.shape[0])
        cset = EuclideanBall(center=center, radius=args.radius)
    else:
        cset = UnitSimplex(args.dimension or v.shape[0], mode=args.mode)
    try:
        projected = cset.project(v)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(",".join(repr(float(x)) for x in projected))
    return EXIT_OK


def _read_series_csv(path: str) -> np.ndarray:
    import csv as _csv

    rows = []
    with open(path, newline="") as handle:
        for r, row in enumerate(_csv.reader(handle), start=1):
            if not row or not any(cell.strip() for cell in row):
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                if r == 1:
                    continue  # header
                raise DataError(f"{path}: unparsable row {r}")
    if not rows:
        raise DataError(f"{path}: no numeric rows")
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: ragged rows (widths {sorted(widths)})")
    return np.array(rows)


def cmd_fit_ar(args) -> int:
    series = _read_series_csv(args.csv)
    fit = fit_var_yule_walker(series, args.order)
    print(f"series: {series.shape[0]} observations, dimension {series.shape[1]}")
    print("mean: " + ",".join(repr(float(x)) for x in fit.mean))
    for h, phi in enumerate(fit.phis, start=1):
        for row in np.atleast_2d(phi):
            print(f"phi[{h}]: " + ",".join(repr(float(x)) for x in row))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_run_flags(sub):
    sub.add_argument("--config", help="path to a JSON config (or a manifest)")
    sub.add_argument("--out", help="output directory (default $POCO_OUT or ./poco_out)")
    sub.add_argument("--seed", type=int, help="master seed override")
    sub.add_argument("--reps", type=int, help="repetition count override")
    sub.add_argument("--quiet", action="store_true", help="suppress stdout report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poco",
        description="predictive online convex optimization: studies, bound checks, utilities",
    )
    parser.add_argument("--version", action="version", version=f"poco {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    for name, fn in (
        ("run-exp1", cmd_run_exp1),
        ("run-exp2", cmd_run_exp2),
        ("run-exp3", cmd_run_exp3),
        ("run-custom", cmd_run_custom),
    ):
        sub = subs.add_parser(name, help=f"{name.replace('-', ' ')}")
        _add_run_flags(sub)
        sub.set_defaults(func=fn)

    sub = subs.add_parser("check-bounds", help="verify the regret bounds empirically")
    _add_run_flags(sub)
    sub.add_argument("--runs", type=int, help="descent-bound runs per k (default 100)")
    sub.add_argument("--expert-runs", dest="expert_runs", type=int,
                     help="expert-pool bound runs (default 50)")
    sub.add_argument("--experiment", choices=("exp1", "exp2"), help="base config")
    sub.set_defaults(func=cmd_check_bounds)

    sub = subs.add_parser("project", help="project a vector onto a constraint set")
    sub.add_argument("--kind", choices=("ball", "simplex"), required=True)
    sub.add_argument("--vector", required=True, help="comma-separated coordinates")
    sub.add_argument("--center", help="ball center (defaults to the origin)")
    sub.add_argument("--radius", type=float, default=1.0)
    sub.add_argument("--dimension", type=int)
    sub.add_argument("--mode", choices=("exact", "renormalize"), default="exact")
    sub.set_defaults(func=cmd_project)

    sub = subs.add_parser("fit-ar", help="Yule-Walker fit of a CSV series")
    sub.add_argument("--csv", required=True)
    sub.add_argument("--order", type=int, required=True)
    sub.set_defaults(func=cmd_fit_ar)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not getattr(args, "quiet", False):
        logging.basicConfig(level=logging.INFO, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
