"""Command-line interface: ``fquant simulate | fit-predict | evaluate``.

Exit codes: 0 success, 2 bad configuration or input data, 3 I/O failure,
4 estimation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bandwidth import parse_k_grid, select_bandwidth
from .errors import EmptyNeighborhood, EstimationError, InputError
from .functional import SemiMetricSpec
from .io import read_table, read_truth
from .simulate import SimModel, generate, write_simulation
from .workflow import interval_coverage, mape, mean_interval_width

log = logging.getLogger("fquant")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_ESTIMATION = 0, 2, 3, 4


@dataclass
class RunConfig:
    command: str
    out: Path | None = None
    seed: int = 0
    levels: list[float] = field(default_factory=lambda: [0.05, 0.5, 0.95])
    ci_level: float = 0.9
    k_grid: list[int] = field(default_factory=lambda: list(range(5, 51, 5)))

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise InputError("levels must be strictly increasing")
        if any(not 0 < a < 1 for a in self.levels):
            raise InputError("levels must lie in (0, 1)")
        if not 0 < self.ci_level < 1:
            raise InputError("--ci-level must lie in (0, 1)")


def _levels(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}") from None


def _fmt(v) -> str:
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def _level_tag(a: float) -> str:
    return f"{a:g}"


def _threads() -> int:
    raw = os.environ.get("FQUANT_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"FQUANT_THREADS must be an integer, got {raw!r}") from None


# -- simulate ----------------------------------------------------------


def cmd_simulate(args) -> int:
    model = SimModel(
        n_points_per_curve=args.points,
        ar_coefficient=args.ar,
        link=args.link,
        noise_scale=args.noise_scale,
        error_dist=args.error_dist,
        censor_rate_target=args.censor_rate,
        seed=args.seed,
    )
    data = generate(model, args.n)
    csv_path, truth_path = write_simulation(data, args.out, stem=args.stem)
    log.info("wrote %s and %s (%d rows, %.1f%% censored)", csv_path, truth_path, len(data),
             100 * (1 - data.delta.mean()))
    return EXIT_OK


# -- fit-predict -------------------------------------------------------


def cmd_fit_predict(args) -> int:
    cfg = RunConfig("fit-predict", Path(args.out), args.seed, args.levels, args.ci_level, parse_k_grid(args.k_grid))
    train = read_table(args.train)
    if args.test is not None:
        test = read_table(args.test)
    elif args.split is not None:
        if not 0 < args.split < len(train):
            raise InputError(f"--split must lie in (0, {len(train)})")
        train, test = train.head(len(train) - args.split), train.tail_from(len(train) - args.split)
    else:
        raise InputError("give --test or --split")
    if test.curves.shape[1] != train.curves.shape[1]:
        raise InputError("train and test curves have different lengths")

    spec = SemiMetricSpec.from_name(args.semimetric)
    selection = select_bandwidth(train.curves, train.y, train.delta, args.cv_level, cfg.k_grid, spec, train.grid)
    model = selection.fit(train.curves, train.y, train.delta, semimetric=spec, grid=train.grid)
    log.info("selected k=%d, h_H=%.6g (score %.6g)", selection.k, selection.h_H, selection.cv_score)

    def predict(i):
        try:
            return model.predict_intervals(test.curves[i], cfg.levels, cfg.ci_level)
        except EmptyNeighborhood as exc:
            return exc

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(predict, range(len(test))))

    tags = [_level_tag(a) for a in cfg.levels]
    header = ["day_id"]
    for t in tags:
        header += [f"q_{t}", f"ci_lo_{t}", f"ci_hi_{t}", f"density_{t}", f"censor_surv_{t}", f"status_{t}"]
    header += ["n_eff", "h_K", "small_ball", "m1", "m2"]

    cfg.out.mkdir(parents=True, exist_ok=True)
    rows, plot_rows = [], []
    for i, (day, res) in enumerate(zip(test.day_ids, results)):
        if isinstance(res, EstimationError):
            if not args.skip_failures:
                raise res
            log.warning("skipping %s: %s", day, res)
            continue
        row = [day]
        for j in range(len(tags)):
            row += [
                _fmt(res.quantiles[j]), _fmt(res.ci_lower[j]), _fmt(res.ci_upper[j]),
                _fmt(res.density[j]), _fmt(res.censor_survival[j]), res.ci_status[j],
            ]
        row += [str(res.n_eff), _fmt(res.h_K), _fmt(res.small_ball), _fmt(res.m1), _fmt(res.m2)]
        rows.append(row)
        median = res.quantiles[cfg.levels.index(0.5)] if 0.5 in cfg.levels else float("nan")
        plot_rows.append([str(i + 1), day, _fmt(res.quantiles[0]), _fmt(median), _fmt(res.quantiles[-1])])

    with open(cfg.out / "predictions.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    with open(cfg.out / "plot_data.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["day_index", "day_id", "lower", "median", "upper"])
        writer.writerows(plot_rows)
    meta = {
        "k": selection.k,
        "h_H": selection.h_H,
        "cv_score": selection.cv_score,
        "k_grid": list(selection.grid),
        "cv_scores": [None if math.isinf(s) else s for s in selection.scores],
        "cv_level": args.cv_level,
        "semimetric": args.semimetric,
        "levels": cfg.levels,
        "ci_level": cfg.ci_level,
        "seed": cfg.seed,
        "n_train": len(train),
        "n_test": len(test),
    }
    (cfg.out / "bandwidth.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


# -- evaluate ----------------------------------------------------------


def read_predictions(path) -> tuple[list[str], dict[str, np.ndarray]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        fields = reader.fieldnames or []
    if "day_id" not in fields:
        raise InputError(f"{path}: not a prediction table")
    cols = {}
    for f in fields:
        if f.startswith("q_"):
            try:
                cols[f] = np.array([float(r[f]) if r[f] else np.nan for r in rows])
            except ValueError as exc:
                raise InputError(f"{path}: malformed column {f}") from exc
    if not cols:
        raise InputError(f"{path}: no quantile columns")
    return [r["day_id"] for r in rows], cols


def cmd_evaluate(args) -> int:
    days, cols = read_predictions(args.predictions)
    truth = read_truth(args.truth)
    levels = sorted(float(c[2:]) for c in cols)
    lower = args.lower_level if args.lower_level is not None else levels[0]
    upper = args.upper_level if args.upper_level is not None else levels[-1]
    for lv in (lower, upper, 0.5):
        if f"q_{_level_tag(lv)}" not in cols:
            raise InputError(f"predictions lack the {lv:g} quantile")
    keep = [i for i, d in enumerate(days) if d in truth]
    if not keep:
        raise InputError("no predicted day has a known true value")
    t = np.array([truth[days[i]] for i in keep])
    med = cols[f"q_{_level_tag(0.5)}"][keep]
    lo = cols[f"q_{_level_tag(lower)}"][keep]
    hi = cols[f"q_{_level_tag(upper)}"][keep]
    metrics = {
        "n_scored": len(keep),
        "n_predicted": len(days),
        "mape": mape(t, med),
        "coverage": interval_coverage(t, lo, hi),
        "mean_interval_width": mean_interval_width(lo, hi),
        "interval_levels": [lower, upper],
    }
    text = json.dumps(metrics, indent=1, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- entry point ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fquant", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a censored functional dataset with known truth")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--censor-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--stem", default="sim", help="file name stem (default: sim)")
    p.add_argument("--ar", type=float, default=0.5, help="AR(1) coefficient of the curve amplitudes")
    p.add_argument("--noise-scale", type=float, default=0.1)
    p.add_argument("--error-dist", choices=["normal", "exponential"], default="normal")
    p.add_argument("--link", choices=["mean", "max"], default="mean")
    p.add_argument("--points", type=int, default=24, help="samples per curve")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit-predict", help="select bandwidth, fit, and predict quantile intervals")
    p.add_argument("--train", required=True)
    p.add_argument("--test")
    p.add_argument("--split", type=int, help="use the last N rows of --train as the test set")
    p.add_argument("--levels", type=_levels, default=[0.05, 0.5, 0.95])
    p.add_argument("--ci-level", type=float, default=0.9)
    p.add_argument("--k-grid", default="5:50:5")
    p.add_argument("--cv-level", type=float, default=0.5, help="quantile level of the CV criterion")
    p.add_argument("--semimetric", choices=["deriv2", "l2"], default="deriv2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--skip-failures", action="store_true")
    p.set_defaults(func=cmd_fit_predict)

    p = sub.add_parser("evaluate", help="score predictions against true values")
    p.add_argument("--predictions", required=True)
    p.add_argument("--truth", required=True, help="simulation truth JSON or a data table CSV")
    p.add_argument("--lower-level", type=float)
    p.add_argument("--upper-level", type=float)
    p.add_argument("--out", help="metrics JSON path (default: stdout)")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"fquant: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"fquant: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EstimationError as exc:
        print(f"fquant: estimation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
