"""Command-line front end.

Each subcommand reads and validates its inputs completely before writing
anything; outputs are written to a temporary file and moved into place so a
failed run never leaves a partial file behind.

Exit status: 0 on success, 1 on bad input, 2 when estimation fails.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import asdict
from datetime import datetime
from typing import List, Optional, Sequence

import numpy as np

from . import aggregate, estimate, ingest, simulate, transform, validate
from .classify import classify_detailed
from .model import ClassifierConfig, MinuteInterval, ObservationSet, StepSurvivalFunction, WeibullParams

logger = logging.getLogger("stochcap")

EXIT_OK, EXIT_INPUT, EXIT_ESTIMATION = 0, 1, 2

MINUTES_COLUMNS = ("minute", "pce", "vehicle_count", "harmonic_mean_speed")
OBS_COLUMNS = ("timestamp", "intensity_pce_window", "breakdown")
STEP_COLUMNS = ("intensity_from", "intensity_to", "breakdowns", "at_risk", "exposure",
                "exposure_group", "partial_failure", "partial_survival", "survival", "cdf")
PLAN_COLUMNS = ("intensity", "duration_min")


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    """Six significant digits; empty for missing values."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".6g")


@contextlib.contextmanager
def _atomic_text(path):
    if path in (None, "-"):
        yield sys.stdout
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def _write_outputs(outputs):
    """Write ``[(path, text), ...]`` only after every text has been produced."""
    for path, text in outputs:
        with _atomic_text(path) as fh:
            fh.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def _read_csv(path, columns):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InputError(f"{path}: empty file")
        missing = [c for c in columns if c not in reader.fieldnames]
        if missing:
            raise InputError(f"{path}: missing column {missing[0]!r}")
        return list(reader)


# ---------------------------------------------------------------- file formats

def minutes_to_csv(minutes: Sequence[MinuteInterval]) -> str:
    rows = [(m.start.isoformat(timespec="minutes"), m.pce, m.vehicle_count, m.harmonic_mean_speed)
            for m in minutes]
    return _csv_text(MINUTES_COLUMNS, rows)


def read_minutes(path) -> List[MinuteInterval]:
    out = []
    for i, row in enumerate(_read_csv(path, MINUTES_COLUMNS), start=2):
        try:
            speed = row["harmonic_mean_speed"].strip()
            out.append(MinuteInterval(datetime.fromisoformat(row["minute"]), int(row["pce"]),
                                      float(speed) if speed else None, int(row["vehicle_count"])))
        except ValueError as exc:
            raise InputError(f"{path}:{i}: {exc}") from exc
    return out


def observations_to_csv(obs: ObservationSet) -> str:
    ts = obs.timestamp if obs.timestamp is not None else [None] * len(obs)
    rows = [("" if t is None else str(np.datetime64(t, "s")), int(i), int(b))
            for t, i, b in zip(ts, obs.intensity, obs.breakdown)]
    return _csv_text(OBS_COLUMNS, rows)


def read_observations(path, window_minutes=3, eval_step_minutes=1) -> ObservationSet:
    rows = _read_csv(path, OBS_COLUMNS)
    intensity, brk, ts = [], [], []
    for i, row in enumerate(rows, start=2):
        try:
            intensity.append(int(row["intensity_pce_window"]))
            flag = row["breakdown"].strip()
            if flag not in ("0", "1"):
                raise ValueError(f"breakdown must be 0 or 1, got {flag!r}")
            brk.append(flag == "1")
            ts.append(np.datetime64(row["timestamp"]) if row["timestamp"].strip() else None)
        except ValueError as exc:
            raise InputError(f"{path}:{i}: {exc}") from exc
    if any(t is None for t in ts):
        ts = None
    try:
        return ObservationSet(np.array(intensity, dtype=np.int64), brk, ts,
                              window_minutes=window_minutes, eval_step_minutes=eval_step_minutes)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def params_to_json(params: WeibullParams, likelihood=None, n_obs=None, n_breakdowns=None,
                   loglik=None) -> str:
    doc = {
        "scale": params.scale,
        "shape": params.shape,
        "window_minutes": params.window_minutes,
        "eval_step_minutes": params.eval_step_minutes,
        "likelihood": likelihood,
        "n_obs": n_obs,
        "n_breakdowns": n_breakdowns,
        "loglik": loglik,
    }
    return json.dumps(doc, indent=2) + "\n"


def read_params(path) -> WeibullParams:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        return WeibullParams(float(doc["scale"]), float(doc["shape"]),
                             int(doc.get("window_minutes", 3)), int(doc.get("eval_step_minutes", 1)))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: not a params file ({exc})") from exc
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def step_to_csv(s: StepSurvivalFunction) -> str:
    cdf = estimate.survival_to_cdf(s)
    rows = zip(s.level_from, s.level_to, s.events, s.at_risk, s.exposure, s.exposure_group,
               s.partial_failure, s.partial_survival, s.survival, cdf)
    return _csv_text(STEP_COLUMNS, rows)


def read_step(path) -> StepSurvivalFunction:
    rows = _read_csv(path, STEP_COLUMNS)
    try:
        cols = {c: [r[c] for r in rows] for c in STEP_COLUMNS}
        return StepSurvivalFunction(
            level_from=[int(v) for v in cols["intensity_from"]],
            level_to=[int(v) for v in cols["intensity_to"]],
            events=[int(v) for v in cols["breakdowns"]],
            at_risk=[int(v) for v in cols["at_risk"]],
            exposure=[int(v) for v in cols["exposure"]],
            exposure_group=[int(v) for v in cols["exposure_group"]],
            survival=[float(v) for v in cols["survival"]],
        )
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def comparison_to_csv(cmp: transform.ScenarioComparison) -> str:
    header = ["quantity", *[fmt(p) for p in cmp.levels], "median", "mean"]
    rows = [
        ["intensity_a", *cmp.intensity_a, cmp.median_a, cmp.intensity_a.mean()],
        ["intensity_b", *cmp.intensity_b, cmp.median_b, cmp.intensity_b.mean()],
        ["absolute_increase", *cmp.abs_increase, cmp.median_b - cmp.median_a, cmp.mean_abs_increase],
        ["relative_increase_pct", *(100 * cmp.rel_increase), 100 * cmp.median_rel_increase,
         100 * cmp.mean_rel_increase],
    ]
    return _csv_text(header, rows)


def read_plan(path):
    rows = _read_csv(path, PLAN_COLUMNS)
    try:
        return [(float(r["intensity"]), float(r["duration_min"])) for r in rows]
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------- subcommands

def cmd_ingest(args):
    parsed = ingest.parse_events(args.events)
    kept, summary = ingest.filter_events(parsed.records, args.max_speed, args.max_length)
    logger.info("parsed %d records (%d malformed); kept %d, invalid %d, implausible %d, "
                "duplicates %d", len(parsed.records), parsed.malformed, summary.kept,
                summary.invalid, summary.implausible, summary.duplicates)
    _write_outputs([(args.output, minutes_to_csv(aggregate.aggregate_minutes(kept)))])


def _classifier_config(args) -> ClassifierConfig:
    return ClassifierConfig(
        breakdown_speed=args.breakdown_speed, recovery_speed=args.recovery_speed,
        recovery_window=args.recovery_window, inconclusive_speed=args.inconclusive_speed,
        min_intensity=args.min_intensity, window_minutes=args.window,
        eval_step_minutes=args.step, queue_onset_shift=not args.no_queue_onset_shift)


def cmd_classify(args):
    cfg = _classifier_config(args)
    minutes = read_minutes(args.minutes)
    result = classify_detailed(minutes, config=cfg)
    dropped = sum(e.dropped is not None for e in result.events)
    logger.info("%d breakdown events (%d dropped), %d observations", len(result.events), dropped,
                len(result.observations))
    _write_outputs([(args.output, observations_to_csv(result.observations))])


def _optimizer(args) -> estimate.OptimizerConfig:
    return estimate.OptimizerConfig(grid_size=args.grid_size, xatol=args.xatol,
                                    max_iter=args.max_iter)


def cmd_fit(args):
    obs = read_observations(args.observations, args.window, args.step)
    fit = estimate.fit_mle(obs, kind=args.likelihood, opt=_optimizer(args))
    _write_outputs([(args.output, params_to_json(fit.params, fit.kind, fit.n_obs,
                                                 fit.n_breakdowns, fit.loglik))])


def cmd_plm(args):
    obs = read_observations(args.observations, args.window, args.step)
    _write_outputs([(args.output, step_to_csv(estimate.plm_estimate(obs)))])


def cmd_validate(args):
    if (args.params is None) == (args.step_function is None):
        raise InputError("give exactly one of --params or --step-function")
    model = read_params(args.params) if args.params else read_step(args.step_function)
    obs = read_observations(args.observations, args.window, args.step)
    emp = validate.empirical_cfb(obs)
    pred = validate.predicted_cfb(emp.levels, emp.exposure, model)
    report = validate.error_metrics(emp, pred)
    curves = _csv_text(("intensity", "exposure", "cfb_empirical", "cfb_predicted"),
                       zip(emp.levels, emp.exposure, emp.cumulative, pred.cumulative))
    outputs = [(args.output, curves)]
    if args.report:
        outputs.append((args.report, json.dumps(asdict(report), indent=2) + "\n"))
    _write_outputs(outputs)


def cmd_compare(args):
    a, b = read_params(args.params_a), read_params(args.params_b)
    try:
        levels = [float(v) for v in args.levels.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"--levels: {exc}") from exc
    cmp = transform.compare_scenarios(a, b, levels)
    _write_outputs([(args.output, comparison_to_csv(cmp))])


def cmd_transform(args):
    params = read_params(args.params)
    pb = transform.breakdown_prob_over(args.intensity, args.horizon, params, window=args.window)
    ps = transform.survival_prob_over(args.intensity, args.horizon, params, window=args.window)
    f = estimate.weibull_cdf(params, args.intensity)
    mean = median = None
    if f > 0:
        mean, median = transform.time_to_breakdown_stats(args.intensity, params)
    doc = {"intensity": args.intensity, "horizon_min": args.horizon,
           "breakdown_probability_per_test": f, "breakdown_probability": pb,
           "survival_probability": ps, "mean_time_to_breakdown_min": mean,
           "median_time_to_breakdown_min": median}
    _write_outputs([(args.output, json.dumps(doc, indent=2) + "\n")])


def cmd_synth(args):
    truth = read_params(args.truth)
    demand = simulate.DemandConfig(mean=args.demand_mean, volatility=args.volatility,
                                   reversion=args.reversion, lower=args.lower, upper=args.upper,
                                   daily_amplitude=args.daily_amplitude)
    obs, events = simulate.synth_observations(truth, demand, args.duration, args.seed,
                                              congestion_minutes=args.congestion,
                                              min_intensity=args.min_intensity)
    outputs = [(args.output, observations_to_csv(obs))]
    if args.events:
        outputs.append((args.events, "".join(json.dumps(e) + "\n" for e in events)))
    _write_outputs(outputs)


def cmd_simulate(args):
    plan = read_plan(args.plan)
    params = read_params(args.params)
    times = simulate.sample_times_to_breakdown(plan, params, args.samples, seed=args.seed)
    _write_outputs([(args.output, _csv_text(("sample", "breakdown_minute"),
                                            ((i, t) for i, t in enumerate(times))))])


# ---------------------------------------------------------------- parser

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stochcap", description="Stochastic highway capacity estimation.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out(sp):
        sp.add_argument("-o", "--output", default="-", help="output file ('-' for stdout)")

    def obs_window(sp):
        sp.add_argument("--window", type=_positive_int, default=3, help="aggregation window T_a, min")
        sp.add_argument("--step", type=_positive_int, default=1, help="evaluation step T_f, min")

    sp = sub.add_parser("ingest", help="raw detector events CSV -> minutes CSV")
    sp.add_argument("events")
    sp.add_argument("--max-speed", type=float, default=250.0)
    sp.add_argument("--max-length", type=float, default=30.0)
    out(sp)
    sp.set_defaults(func=cmd_ingest)

    d = ClassifierConfig()
    sp = sub.add_parser("classify", help="minutes CSV -> observations CSV")
    sp.add_argument("minutes")
    sp.add_argument("--breakdown-speed", type=float, default=d.breakdown_speed)
    sp.add_argument("--recovery-speed", type=float, default=d.recovery_speed)
    sp.add_argument("--recovery-window", type=_positive_int, default=d.recovery_window)
    sp.add_argument("--inconclusive-speed", type=float, default=d.inconclusive_speed)
    sp.add_argument("--min-intensity", type=_positive_int, default=d.min_intensity)
    sp.add_argument("--no-queue-onset-shift", action="store_true")
    obs_window(sp)
    out(sp)
    sp.set_defaults(func=cmd_classify)

    o = estimate.OptimizerConfig()
    sp = sub.add_parser("fit", help="observations CSV -> Weibull params JSON")
    sp.add_argument("observations")
    sp.add_argument("--likelihood", choices=("new", "old"), default="new")
    sp.add_argument("--grid-size", type=_positive_int, default=o.grid_size)
    sp.add_argument("--xatol", type=float, default=o.xatol)
    sp.add_argument("--max-iter", type=_positive_int, default=o.max_iter)
    obs_window(sp)
    out(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("plm", help="observations CSV -> product-limit step function CSV")
    sp.add_argument("observations")
    obs_window(sp)
    out(sp)
    sp.set_defaults(func=cmd_plm)

    sp = sub.add_parser("validate", help="CF_B curves and error metrics of a fitted model")
    sp.add_argument("observations")
    sp.add_argument("--params")
    sp.add_argument("--step-function")
    sp.add_argument("--report", help="ErrorReport JSON output")
    obs_window(sp)
    out(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("compare", help="capacity shift between two params files")
    sp.add_argument("params_a")
    sp.add_argument("params_b")
    sp.add_argument("--levels", default=",".join(str(v) for v in transform.DEFAULT_LEVELS))
    out(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("transform", help="horizon probabilities and time to breakdown")
    sp.add_argument("params")
    sp.add_argument("--intensity", type=float, required=True)
    sp.add_argument("--horizon", type=float, required=True, help="minutes")
    sp.add_argument("--window", type=_positive_int, default=None,
                    help="window of the given intensity; must match the params")
    out(sp)
    sp.set_defaults(func=cmd_transform)

    dd = simulate.DemandConfig()
    sp = sub.add_parser("synth", help="synthetic observations from known params")
    sp.add_argument("truth")
    sp.add_argument("--duration", type=_positive_int, required=True, help="minutes")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--demand-mean", type=float, default=dd.mean, help="PCE per minute")
    sp.add_argument("--volatility", type=float, default=dd.volatility)
    sp.add_argument("--reversion", type=float, default=dd.reversion)
    sp.add_argument("--lower", type=float, default=dd.lower)
    sp.add_argument("--upper", type=float, default=dd.upper)
    sp.add_argument("--daily-amplitude", type=float, default=dd.daily_amplitude)
    sp.add_argument("--congestion", type=int, default=15, help="minutes discarded per breakdown")
    sp.add_argument("--min-intensity", type=int, default=1)
    sp.add_argument("--events", help="event log output (JSON lines)")
    out(sp)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("simulate", help="sample breakdown times for an intensity plan")
    sp.add_argument("plan", help="CSV with columns intensity,duration_min")
    sp.add_argument("params")
    sp.add_argument("--samples", type=_positive_int, default=1000)
    sp.add_argument("--seed", type=int, required=True)
    out(sp)
    sp.set_defaults(func=cmd_simulate)
    return p


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except estimate.EstimationError as exc:
        print(f"stochcap {args.command}: estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except (ValueError, OSError) as exc:
        print(f"stochcap {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
