"""Command-line pipeline around the simulator and tracker.

Subcommands mirror the experiment stages and communicate through files in
the --out directory, one subdirectory per seed:

    simulate -> seedNNNN/scenario.cfg, gt.jsonl
    corrupt  -> seedNNNN/obs.jsonl
    filter   -> seedNNNN/beliefs.jsonl
    predict  -> seedNNNN/beliefs_cutCC.jsonl (one per prediction cut)
    eval     -> metrics.csv, recall.csv, gating.csv
    sweep    -> sweep.csv
    report   -> report.csv, plot_errors_by_cut.csv, plot_recall.csv,
                gating_summary.csv and, when sweep.csv exists, plot_sweep.csv

Exit codes: 0 success, 1 configuration problems (including bad command
lines and missing inputs), 2 numerical failures. All outputs are
deterministic for fixed seeds, so rerunning a pipeline reproduces every
file byte for byte. Aggregate rows are emitted only for series that are
defined for every sequence (the detector baseline has no friction
estimate, so that aggregate is omitted rather than written as NaN).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from ..errors import ConfigError, InitializationFailure, NumericalFailure
from .config import ExperimentConfig, load_config, load_preset
from .experiments import (
    DEFAULT_MULTIPLIERS,
    _pmap,
    corrupt_sequence,
    evaluate_sequence,
    filter_sequence,
    friction_sweep,
    resolve_workers,
    simulate_sequence,
)
from .metrics import METRIC_NAMES, aggregate
from .records import (
    config_header,
    read_beliefs,
    read_csv,
    read_ground_truth,
    read_observations,
    read_scenario,
    write_beliefs,
    write_csv,
    write_ground_truth,
    write_observations,
    write_scenario,
)

__all__ = ["main"]

_PREDICT_PREFIX = "beliefs_cut"


class _Parser(argparse.ArgumentParser):
    """Routes argparse usage errors through the config-error exit code."""

    def error(self, message):
        raise ConfigError(message)


def _seed_dir(out: Path, seed: int) -> Path:
    return out / f"seed{seed:04d}"


def _header(config: ExperimentConfig) -> list[tuple[str, str]]:
    return config_header(config)


def _resolve_config(args) -> ExperimentConfig:
    if args.config:
        config = load_config(args.config)
    elif getattr(args, "mode", None) == "ekfphys-f":
        config = load_preset("synthetic_ekfphys_f")
    else:
        config = load_preset("synthetic_ekfphys")
    if getattr(args, "mode", None):
        config = dataclasses.replace(config, mode=args.mode)
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(config, seeds=(args.seed,))
    return config


def _input(path: Path, stage: str) -> Path:
    if not path.exists():
        raise ConfigError(f"missing {path}; run '{stage}' first")
    return path


def _load_sequence(out: Path, seed: int, need_obs: bool = True):
    d = _input(_seed_dir(out, seed), "simulate")
    scenario = read_scenario(_input(d / "scenario.cfg", "simulate"))
    gt = read_ground_truth(_input(d / "gt.jsonl", "simulate"), scenario)
    log = read_observations(_input(d / "obs.jsonl", "corrupt")) if need_obs else None
    return d, gt, log


# ---------------------------------------------------------------------------
# pipeline commands (worker functions are module-level so pools can pickle them)


def _simulate_job(args):
    config, seed, out_name = args
    scenario, gt = simulate_sequence(config, seed)
    d = _seed_dir(Path(out_name), seed)
    d.mkdir(parents=True, exist_ok=True)
    write_scenario(d / "scenario.cfg", scenario)
    write_ground_truth(d / "gt.jsonl", gt)
    return seed


def _cmd_simulate(args) -> int:
    config = _resolve_config(args)
    out = Path(args.out)
    jobs = [(config, s, str(out)) for s in sorted(config.seeds)]
    _pmap(_simulate_job, jobs, resolve_workers(args.workers))
    print(f"simulated {len(jobs)} sequence(s) -> {out}")
    return 0


def _corrupt_job(args):
    config, seed, out_name = args
    d, gt, _ = _load_sequence(Path(out_name), seed, need_obs=False)
    write_observations(d / "obs.jsonl", corrupt_sequence(config, gt))
    return seed


def _cmd_corrupt(args) -> int:
    config = _resolve_config(args)
    out = Path(args.out)
    jobs = [(config, s, str(out)) for s in sorted(config.seeds)]
    _pmap(_corrupt_job, jobs, resolve_workers(args.workers))
    print(f"corrupted {len(jobs)} observation log(s) -> {out}")
    return 0


def _filter_job(args):
    config, seed, out_name = args
    d, gt, log = _load_sequence(Path(out_name), seed)
    write_beliefs(d / "beliefs.jsonl", filter_sequence(config, gt, log))
    return seed


def _cmd_filter(args) -> int:
    config = _resolve_config(args)
    out = Path(args.out)
    jobs = [(config, s, str(out)) for s in sorted(config.seeds)]
    _pmap(_filter_job, jobs, resolve_workers(args.workers))
    print(f"filtered {len(jobs)} sequence(s) [{config.mode}] -> {out}")
    return 0


def _predict_job(args):
    config, seed, out_name = args
    d, gt, log = _load_sequence(Path(out_name), seed)
    for cut in config.predict_cut_frames:
        beliefs = filter_sequence(config, gt, log, cut_frame=cut)
        write_beliefs(d / f"{_PREDICT_PREFIX}{cut:02d}.jsonl", beliefs)
    return seed


def _cmd_predict(args) -> int:
    config = _resolve_config(args)
    out = Path(args.out)
    jobs = [(config, s, str(out)) for s in sorted(config.seeds)]
    _pmap(_predict_job, jobs, resolve_workers(args.workers))
    cuts = ",".join(str(c) for c in config.predict_cut_frames)
    print(f"predicted {len(jobs)} sequence(s) from cuts {{{cuts}}} -> {out}")
    return 0


# ---------------------------------------------------------------------------
# evaluation commands


def _eval_job(args):
    config, seed, out_name = args
    d, gt, log = _load_sequence(Path(out_name), seed)
    beliefs = read_beliefs(_input(d / "beliefs.jsonl", "filter"))
    predictions = {}
    for f in sorted(d.glob(f"{_PREDICT_PREFIX}*.jsonl")):
        predictions[int(f.stem.removeprefix(_PREDICT_PREFIX))] = read_beliefs(f)
    return evaluate_sequence(config, gt, log, beliefs, predictions or None)


def _cmd_eval(args) -> int:
    from .experiments import build_report

    config = _resolve_config(args)
    out = Path(args.out)
    jobs = [(config, s, str(out)) for s in sorted(config.seeds)]
    report = build_report(config, _pmap(_eval_job, jobs, resolve_workers(args.workers)))
    header = _header(config)

    rows = []
    for s in report.sequences:
        sources = [("filter", s.filter_by_cut), ("observation", s.observation_by_cut)]
        if s.prediction_by_cut:
            sources.append(("prediction", s.prediction_by_cut))
        for source, by_cut in sources:
            for cut in sorted(by_cut):
                for metric, value in by_cut[cut].items():
                    rows.append([s.seed, source, cut, metric, value])
    write_csv(out / "metrics.csv", ["seed", "source", "cut", "metric", "value"], rows, header)

    recall_rows = [
        [t, report.filter_recall[i], report.observation_recall[i]]
        for i, t in enumerate(report.recall_thresholds)
    ]
    write_csv(
        out / "recall.csv",
        ["threshold", "filter_recall", "observation_recall"],
        recall_rows,
        header,
    )

    gating_rows = [
        [
            s.seed,
            s.gating.n_frames,
            s.gating.n_offered,
            s.gating.n_accepted,
            s.gating.n_rejected,
            s.outliers_offered,
            s.outliers_rejected,
            s.clean_offered,
            s.clean_rejected,
        ]
        for s in report.sequences
    ]
    write_csv(
        out / "gating.csv",
        [
            "seed",
            "frames",
            "offered",
            "accepted",
            "rejected",
            "outliers_offered",
            "outliers_rejected",
            "clean_offered",
            "clean_rejected",
        ],
        gating_rows,
        header,
    )
    print(f"evaluated {len(report.sequences)} sequence(s) -> {out}/metrics.csv")
    return 0


def _parse_multiplier_tokens(text: str):
    tokens = [p.strip() for p in text.split(",") if p.strip()]
    if not tokens:
        raise ConfigError("empty --multipliers list")
    return tokens


def _cmd_sweep(args) -> int:
    config = _resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    multipliers = (
        _parse_multiplier_tokens(args.multipliers) if args.multipliers else DEFAULT_MULTIPLIERS
    )
    report = friction_sweep(config, multipliers, workers=resolve_workers(args.workers))
    header = _header(config) + [("multipliers", ",".join(report.labels))]
    rows = [
        [e.label, e.seed, e.theta0, e.terminal_error, e.final_mu] for e in report.entries
    ]
    write_csv(
        out / "sweep.csv",
        ["multiplier", "seed", "theta0", "terminal_friction_error", "final_mu"],
        rows,
        header,
    )
    print(f"swept {len(report.labels)} initialization(s) x {len(config.seeds)} seed(s) -> {out}/sweep.csv")
    return 0


def _cmd_report(args) -> int:
    config = _resolve_config(args)
    out = Path(args.out)
    header = _header(config)

    _, m_cols, m_rows = read_csv(_input(out / "metrics.csv", "eval"))
    groups: dict[tuple[str, str, str], list[float]] = {}
    for row in m_rows:
        _, source, cut, metric, value = row
        groups.setdefault((source, cut, metric), []).append(float(value))
    report_rows = []
    for (source, cut, metric), values in groups.items():
        v = np.asarray(values)
        if not np.all(np.isfinite(v)):
            continue
        agg = aggregate(v)
        report_rows.append([source, int(cut), metric, agg.n, agg.mean, agg.median, agg.q1, agg.q3])
    write_csv(
        out / "report.csv",
        ["source", "cut", "metric", "n", "mean", "median", "q1", "q3"],
        report_rows,
        header,
    )
    write_csv(out / "plot_errors_by_cut.csv", m_cols, m_rows, header)

    _, r_cols, r_rows = read_csv(_input(out / "recall.csv", "eval"))
    write_csv(out / "plot_recall.csv", r_cols, r_rows, header)

    _, g_cols, g_rows = read_csv(_input(out / "gating.csv", "eval"))
    totals = {col: sum(int(row[i]) for row in g_rows) for i, col in enumerate(g_cols) if col != "seed"}
    outlier_fraction = (
        totals["outliers_rejected"] / totals["outliers_offered"]
        if totals["outliers_offered"]
        else float("nan")
    )
    clean_fraction = (
        totals["clean_rejected"] / totals["clean_offered"]
        if totals["clean_offered"]
        else float("nan")
    )
    write_csv(
        out / "gating_summary.csv",
        [
            "sequences",
            "offered",
            "accepted",
            "rejected",
            "outliers_offered",
            "outliers_rejected",
            "clean_offered",
            "clean_rejected",
            "outlier_rejected_fraction",
            "clean_rejected_fraction",
        ],
        [
            [
                len(g_rows),
                totals["offered"],
                totals["accepted"],
                totals["rejected"],
                totals["outliers_offered"],
                totals["outliers_rejected"],
                totals["clean_offered"],
                totals["clean_rejected"],
                outlier_fraction,
                clean_fraction,
            ]
        ],
        header,
    )

    emitted = ["report.csv", "plot_errors_by_cut.csv", "plot_recall.csv", "gating_summary.csv"]
    sweep_path = out / "sweep.csv"
    if sweep_path.exists():
        s_header, _, s_rows = read_csv(sweep_path)
        labels = s_header.get("multipliers", "").split(",")
        by_label: dict[str, list[float]] = {label: [] for label in labels if label}
        for label, _seed, _theta0, terminal, _mu in s_rows:
            by_label.setdefault(label, []).append(float(terminal))
        sweep_rows = []
        for label, values in by_label.items():
            agg = aggregate(values)
            sweep_rows.append([label, agg.n, agg.mean, agg.median, agg.q1, agg.q3])
        write_csv(
            out / "plot_sweep.csv",
            ["multiplier", "n", "mean", "median", "q1", "q3"],
            sweep_rows,
            header + [("multipliers", s_header.get("multipliers", ""))],
        )
        emitted.append("plot_sweep.csv")
    print(f"report -> {out} ({', '.join(emitted)})")
    return 0


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ekfphys", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "simulate": (_cmd_simulate, "sample scenarios and write ground-truth trajectories"),
        "corrupt": (_cmd_corrupt, "derive noisy observation logs from ground truth"),
        "filter": (_cmd_filter, "run the tracker over observation logs"),
        "predict": (_cmd_predict, "rerun the tracker with correction cut points"),
        "eval": (_cmd_eval, "compute per-sequence metrics tables"),
        "sweep": (_cmd_sweep, "rerun the suite across friction initializations"),
        "report": (_cmd_report, "aggregate metrics into report and plot-data files"),
    }
    for name, (func, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="experiment config file (default: synthetic preset)")
        p.add_argument("--seed", type=int, help="run a single seed instead of the config list")
        p.add_argument(
            "--mode",
            choices=("ekfphys", "ekfphys-f"),
            help="filter variant; overrides the config (theta0 is kept)",
        )
        p.add_argument("--out", required=True, help="pipeline working directory")
        p.add_argument(
            "--workers",
            type=int,
            help="process count (default: $EKFPHYS_WORKERS, else 1)",
        )
        if name == "sweep":
            p.add_argument(
                "--multipliers",
                help="comma-separated friction-initialization multipliers; "
                "numbers scale the true coefficient, 'mean' uses the suite mean "
                f"(default: {','.join(str(m) for m in DEFAULT_MULTIPLIERS)})",
            )
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    except (NumericalFailure, InitializationFailure) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
