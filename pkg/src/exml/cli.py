"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .acquisition import STRATEGIES
from .cascade import cascade_predict_batch, load_cascade, save_cascade, write_predictions_csv
from .config import VARIANTS, ExperimentConfig, SyntheticSpec
from .data import SyntheticConfig, generate_synthetic, write_dataset_files
from .errors import ConfigError, ExmlError, InputError
from .harness import (ExperimentReport, build_dataset, compute_true_ranking, format_summary, repetition_seeds,
                      run_experiment, write_report_outputs)

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
log = logging.getLogger("exml")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _load_config(args, required: bool) -> ExperimentConfig:
    if args.config is None:
        if required:
            raise UsageError("--config is required for this subcommand")
        config = ExperimentConfig()
    else:
        if not Path(args.config).is_file():
            raise ConfigError(f"config file {args.config} does not exist")
        config = ExperimentConfig.load(args.config)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "threads", None) is not None:
        changes["threads"] = args.threads
    if getattr(args, "budget_ratio", None) is not None:
        changes["budget_ratio"] = args.budget_ratio
    if getattr(args, "strategy", None) is not None:
        changes["strategies"] = (args.strategy,)
    if getattr(args, "variants", None) is not None:
        changes["variants"] = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    return config.replace(**changes) if changes else config


def cmd_synth(args) -> int:
    config = _load_config(args, required=False)
    spec = config.dataset
    if not isinstance(spec, SyntheticSpec):
        raise ConfigError("synth needs a synthetic dataset", "dataset.kind")
    ds = generate_synthetic(SyntheticConfig(spec.a, spec.n_per_class, spec.angles, config.seed,
                                            spec.n_test_per_class))
    out = Path(args.out)
    try:
        write_dataset_files(ds, out, {"seed": config.seed, "generator": asdict_spec(spec)})
    except OSError as exc:
        raise InputError(f"cannot write to {out}: {exc}") from exc
    print(f"wrote {len(ds.train)} training and {len(ds.test)} test rows with {ds.n_features} candidates to {out}")
    return EXIT_OK


def asdict_spec(spec) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(spec).items()}


def cmd_run(args) -> int:
    config = _load_config(args, required=True)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create {out}: {exc}") from exc
    model_dir = out / "models"

    def sink(index, models):
        if not models:
            return
        model_dir.mkdir(exist_ok=True)
        dim = models["initial"].dim
        for tag, casc in models.items():
            if tag == "initial":
                continue
            cols = [f"{casc.feature_name}__{j}" for j in range(casc.feature_width)] \
                if casc.feature_width > 1 else [casc.feature_name]
            save_cascade(casc, model_dir / f"cascade_rep{index:03d}_{tag}.json",
                         [f"x{j}" for j in range(dim)], cols)

    def progress(i, rec):
        log.info("repetition %d: %s %s", i, rec["status"], rec.get("accuracy", rec.get("error", "")))

    report = run_experiment(config, progress=progress, model_sink=sink)
    for p in write_report_outputs(report, out):
        log.info("wrote %s", p)
    print(format_summary(report))
    return EXIT_OK if report.successful else EXIT_RUNTIME


def cmd_rank(args) -> int:
    config = _load_config(args, required=True)
    seed = repetition_seeds(config)[0]
    ds = build_dataset(config, 0, seed)
    res = compute_true_ranking(ds, config.ranking_theta, config.train)
    path = Path(args.out)
    if path.suffix != ".csv":
        path.mkdir(parents=True, exist_ok=True)
        path = path / "ranking.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "feature_id", "feature_name", "accuracy"])
        for r, k in enumerate(res.ranking, start=1):
            w.writerow([r, k, ds.feature_names[k], repr(res.accuracies[k])])
    for r, k in enumerate(res.ranking, start=1):
        print(f"{r:>3} {ds.feature_names[k]:<20} {res.accuracies[k]:6.2f}")
    return EXIT_OK


def cmd_report(args) -> int:
    report = ExperimentReport.load(args.report)
    print(format_summary(report))
    if args.out:
        write_report_outputs(report, args.out)
    return EXIT_OK


def _read_table(path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if not rows:
        return [], []
    return rows[0], rows[1:]


def _columns(path, header, rows, names, first_line=2) -> np.ndarray:
    idx = [header.index(c) for c in names]
    out = np.empty((len(rows), len(names)))
    for i, r in enumerate(rows):
        for j, c in enumerate(idx):
            cell = r[c].strip() if c < len(r) else ""
            try:
                out[i, j] = float(cell) if cell else np.nan
            except ValueError:
                raise InputError(f"{path}:{i + first_line}: column {names[j]!r}: cannot parse {cell!r}") from None
    return out


def cmd_predict(args) -> int:
    model, meta = load_cascade(args.model)
    obs_cols = meta.get("observed_columns") or [f"x{j}" for j in range(model.initial.dim)]
    feat_cols = meta.get("feature_columns") or [model.feature_name or f"f{model.selected_feature}"]
    header, rows = _read_table(args.input)
    id_col = next((c for c in ("sample_id", "id") if c in header), None)
    if not header:
        rows = []
    else:
        missing = [c for c in obs_cols if c not in header]
        if missing:
            raise InputError(f"{args.input}: missing observed column {missing[0]!r}")
    X = _columns(args.input, header, rows, obs_cols) if rows else np.empty((0, len(obs_cols)))
    ids = [r[header.index(id_col)] for r in rows] if id_col else [str(i) for i in range(len(rows))]

    candidates = None
    if header and all(c in header for c in feat_cols):
        candidates = _columns(args.input, header, rows, feat_cols)
    elif args.candidates:
        c_header, c_rows = _read_table(args.candidates)
        if not all(c in c_header for c in feat_cols) or "id" not in c_header:
            raise InputError(f"{args.candidates}: needs 'id' and {feat_cols}")
        table = {r[c_header.index("id")]: r for r in c_rows}
        candidates = _columns(args.candidates, c_header, [table.get(s, [""] * len(c_header)) for s in ids],
                              feat_cols)
    pred = cascade_predict_batch(model, X, candidates, augment_all=args.augment_all)
    try:
        write_predictions_csv(args.out, ids, pred)
    except OSError as exc:
        raise InputError(f"cannot write {args.out}: {exc}") from exc
    log.info("wrote %d predictions to %s", len(ids), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="exml", description="Exploratory learning with unknown unknowns.")
    parser.add_argument("--version", action="version", version=f"exml {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, out_help, out_required=True):
        p.add_argument("--config", help="experiment configuration (JSON)")
        p.add_argument("--out", required=out_required, help=out_help)
        p.add_argument("--seed", type=int, help="override the configuration seed")

    p = sub.add_parser("synth", help="generate the synthetic dataset files")
    common(p, "output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run an experiment and write the report")
    common(p, "output directory")
    p.add_argument("--threads", type=int)
    p.add_argument("--variants", help=f"comma-separated subset of {','.join(VARIANTS)}")
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--budget-ratio", type=float)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("rank", help="compute the ground-truth feature ranking")
    common(p, "output directory or .csv path")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("report", help="summarise a report.json")
    p.add_argument("report", help="path to report.json")
    p.add_argument("--out", help="re-emit summary and plot CSVs into this directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("predict", help="apply a saved cascade to a CSV")
    p.add_argument("--model", required=True, help="cascade JSON written by 'run'")
    p.add_argument("--input", required=True, help="CSV with an id column and the observed columns")
    p.add_argument("--candidates", help="candidates.csv to join on id when the input lacks the feature")
    p.add_argument("--out", required=True, help="predictions CSV")
    p.add_argument("--augment-all", action="store_true", help="label every row with the augmented model")
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ExmlError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
