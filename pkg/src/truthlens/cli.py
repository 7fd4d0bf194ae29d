"""Command-line front-end.

Subcommands: stats, explain, evaluate, meta, argue, compare. Every command
writes deterministic JSON (stable key order) embedding the effective
configuration and the tool version; argue and compare additionally print a
text summary. Failures exit nonzero with a machine-readable error object
on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .argumentation import build_tree, render_text, to_json_dict
from .core import (
    DataKind,
    EvalConfig,
    Explanation,
    FeatureMap,
    FeatureStats,
    Instance,
    Model,
    NoiseLevel,
    TruthlensError,
    ValidationError,
    feature_stats_from_samples,
)
from .explainers import (
    exact_linear_explain,
    load_explanations,
    random_explain,
    surrogate_explain,
)
from .metaexplain import (
    aggregate_mean,
    aggregate_median,
    candidate_truthful_scores,
    truthful_meta_explanation,
)
from .metrics import complexity
from .models import HttpModel, LinearModelSpec, SubprocessModel, load_model_spec
from .truthfulness import EvaluationReport, average_changes, evaluate_explanation

DEFAULT_SEED = 42
COMPARE_DELTAS = (0.0, 1e-4, 1e-3, 1e-2)


# ---------------------------------------------------------------- files


@dataclass
class Dataset:
    path: str
    kind: DataKind
    fmap: FeatureMap
    instances: list[Instance]
    reference: list | None


def load_dataset(path: str) -> Dataset:
    if path.endswith(".csv"):
        return _load_csv_dataset(path)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as err:
            raise ValidationError(f"{path}: invalid JSON: {err}") from err
    if not isinstance(d, dict):
        raise ValidationError(f"{path}: expected a dataset object")
    try:
        kind = DataKind(d.get("kind", "tabular"))
    except ValueError:
        raise ValidationError(
            f"{path}: field 'kind': unknown value {d.get('kind')!r}"
        ) from None
    rows = d.get("instances")
    if not isinstance(rows, list) or not rows:
        raise ValidationError(f"{path}: field 'instances' must be a non-empty list")
    first = rows[0].get("values") if isinstance(rows[0], dict) else None
    if not isinstance(first, list):
        raise ValidationError(f"{path}: instance 0: field 'values' must be a list")
    raw_dim = len(first)
    names = tuple(str(n) for n in d.get("names", ()))
    if "groups" in d:
        try:
            groups = tuple(tuple(int(i) for i in g) for g in d["groups"])
        except (TypeError, ValueError) as err:
            raise ValidationError(f"{path}: field 'groups': {err}") from err
        fmap = FeatureMap(raw_dim, groups, names)
    else:
        fmap = FeatureMap.identity(raw_dim, names)

    instances = []
    for i, row in enumerate(rows):
        if not isinstance(row, dict) or "values" not in row:
            raise ValidationError(f"{path}: instance {i}: field 'values' is required")
        try:
            instances.append(
                Instance(str(row.get("id", f"i{i}")), np.asarray(row["values"], dtype=float), kind, fmap)
            )
        except (TypeError, ValueError) as err:
            raise ValidationError(f"{path}: instance {i}: {err}") from err
    reference = d.get("reference")
    if reference is not None and not isinstance(reference, list):
        raise ValidationError(f"{path}: field 'reference' must be a list of rows")
    return Dataset(path, kind, fmap, instances, reference)


def _load_csv_dataset(path: str) -> Dataset:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError as err:
                raise ValidationError(f"{path}: line {lineno}: {err}") from err
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    fmap = FeatureMap.identity(len(header), tuple(header))
    instances = [
        Instance(f"row{i}", np.asarray(r, dtype=float), DataKind.TABULAR, fmap)
        for i, r in enumerate(rows)
    ]
    return Dataset(path, DataKind.TABULAR, fmap, instances, rows)


def load_stats_file(path: str) -> FeatureStats:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as err:
            raise ValidationError(f"{path}: invalid JSON: {err}") from err
    try:
        return FeatureStats(
            min=np.asarray(d["min"], dtype=float),
            max=np.asarray(d["max"], dtype=float),
            mean=np.asarray(d["mean"], dtype=float),
            std=np.asarray(d["std"], dtype=float),
            sample_count=int(d["sample_count"]),
            source=str(d.get("source", path)),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ValidationError(f"{path}: malformed statistics file: {err}") from err


def resolve_stats(args, dataset: Dataset) -> FeatureStats:
    if getattr(args, "stats", None):
        stats = load_stats_file(args.stats)
    elif dataset.reference:
        stats = feature_stats_from_samples(dataset.reference, source=dataset.path)
    else:
        raise ValidationError(
            f"{dataset.path}: no reference data; provide --stats or a 'reference' block"
        )
    if stats.raw_dim != dataset.fmap.raw_dim:
        raise ValidationError(
            f"statistics cover {stats.raw_dim} raw features, dataset has {dataset.fmap.raw_dim}"
        )
    return stats


def resolve_model(spec: str) -> Model:
    if spec.startswith("builtin:"):
        return load_model_spec(spec[len("builtin:"):])
    if spec.startswith("http:"):
        url = spec[len("http:"):]
        if not url.startswith(("http://", "https://")):
            url = "http://" + url
        return HttpModel(url)
    if spec.startswith("exec:"):
        return SubprocessModel(spec[len("exec:"):])
    raise ValidationError(
        f"unknown model spec {spec!r}: use builtin:<spec.json>, http:<url> or exec:<command>"
    )


def load_explanation_files(paths) -> list[tuple[str, Explanation]]:
    out = []
    for path in paths:
        for e in load_explanations(path):
            out.append((path, e))
    return out


def group_by_instance(
    pairs, dataset: Dataset
) -> list[tuple[Instance, list[Explanation]]]:
    """Pair loaded explanations with dataset instances, keeping dataset
    order and per-file explanation order."""
    by_id: dict[str, Instance] = {x.id: x for x in dataset.instances}
    for path, e in pairs:
        if e.instance_id not in by_id:
            raise ValidationError(
                f"{path}: field 'instance_id': {e.instance_id!r} is not in the dataset"
            )
    grouped = []
    for x in dataset.instances:
        exps = [e for _, e in pairs if e.instance_id == x.id]
        if exps:
            grouped.append((x, exps))
    return grouped


# ---------------------------------------------------------------- output


def emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def envelope(schema: str, args, config: EvalConfig | None = None) -> dict:
    # deliberately excludes --jobs: worker count must never change output bytes
    d = {"schema": schema, "version": __version__}
    if config is not None:
        d["config"] = config.as_dict()
    return d


def config_from_args(args) -> EvalConfig:
    seed = args.seed
    if seed is None:
        env = os.environ.get("TRUTHLENS_SEED")
        try:
            seed = int(env) if env else DEFAULT_SEED
        except ValueError:
            raise ValidationError(
                f"environment variable TRUTHLENS_SEED is not an integer: {env!r}"
            ) from None
    return EvalConfig(
        noise_level=NoiseLevel(args.noise),
        delta=args.delta,
        seed=seed,
        clamp_images=args.clamp_images,
    )


def _pmap(fn, items, jobs: int) -> list:
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))  # map() keeps input order


# ---------------------------------------------------------------- commands


def cmd_stats(args) -> int:
    dataset = load_dataset(args.data)
    rows = dataset.reference if dataset.reference else [x.values for x in dataset.instances]
    stats = feature_stats_from_samples(rows, source=dataset.path)
    payload = envelope("truthlens/stats-v1", args)
    payload.update(
        {
            "min": list(stats.min),
            "max": list(stats.max),
            "mean": list(stats.mean),
            "std": list(stats.std),
            "sample_count": stats.sample_count,
            "source": stats.source,
        }
    )
    emit_json(payload, args.out)
    return 0


def cmd_explain(args) -> int:
    dataset = load_dataset(args.data)
    config = config_from_args(args)

    if args.method == "random":
        explanations = [
            random_explain(dataset.fmap, config.seed + i, x.id)
            for i, x in enumerate(dataset.instances)
        ]
    elif args.method == "exact-linear":
        model = resolve_model(args.model) if args.model else None
        if not isinstance(model, LinearModelSpec):
            raise ValidationError(
                "method exact-linear requires --model builtin:<linear spec>"
            )
        explanations = [
            exact_linear_explain(model, dataset.fmap, x.id) for x in dataset.instances
        ]
    else:  # surrogate
        if not args.model:
            raise ValidationError("method surrogate requires --model")
        model = resolve_model(args.model)
        stats = resolve_stats(args, dataset)
        explanations = _pmap(
            lambda x: surrogate_explain(
                model, x, stats,
                n_samples=args.n_samples,
                kernel_width=args.kernel_width,
                ridge=args.ridge,
                seed=config.seed,
            ),
            dataset.instances,
            args.jobs,
        )

    payload = envelope("truthlens/explanations-v1", args, config)
    payload["explanations"] = [
        {
            "explainer": e.explainer_name,
            "instance_id": e.instance_id,
            "scores": [float(s) for s in e.scores],
        }
        for e in explanations
    ]
    emit_json(payload, args.out)
    return 0


def _evaluate_grouped(grouped, model, stats, config, jobs) -> list[EvaluationReport]:
    def run(pair):
        x, exps = pair
        return [evaluate_explanation(e, x, model, stats, config) for e in exps]

    return [r for rs in _pmap(run, grouped, jobs) for r in rs]


def cmd_evaluate(args) -> int:
    dataset = load_dataset(args.data)
    config = config_from_args(args)
    model = resolve_model(args.model)
    stats = resolve_stats(args, dataset)
    pairs = load_explanation_files(args.explanations)
    grouped = group_by_instance(pairs, dataset)
    if not grouped:
        raise ValidationError("no explanation matches any dataset instance")
    reports = _evaluate_grouped(grouped, model, stats, config, args.jobs)
    payload = envelope("truthlens/reports-v1", args, config)
    payload["reports"] = [r.to_dict() for r in reports]
    emit_json(payload, args.out)
    return 0


def _load_reports_file(path: str) -> list[EvaluationReport]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as err:
            raise ValidationError(f"{path}: invalid JSON: {err}") from err
    if isinstance(d, dict) and "reports" in d:
        raw = d["reports"]
    elif isinstance(d, list):
        raw = d
    elif isinstance(d, dict):
        raw = [d]
    else:
        raise ValidationError(f"{path}: expected a report, a list, or a reports file")
    out = []
    for i, obj in enumerate(raw):
        try:
            out.append(EvaluationReport.from_dict(obj))
        except (ValidationError, ValueError) as err:
            raise ValidationError(f"{path}: report {i}: {err}") from err
    if not out:
        raise ValidationError(f"{path}: no reports found")
    return out


def _meta_from_reports(reports: list[EvaluationReport]):
    """Group reports by instance (input order) and compose one
    meta-explanation per instance."""
    order: list[str] = []
    groups: dict[str, list[EvaluationReport]] = {}
    for r in reports:
        if r.instance_id not in groups:
            order.append(r.instance_id)
            groups[r.instance_id] = []
        groups[r.instance_id].append(r)
    metas = []
    for iid in order:
        rs = groups[iid]
        cz = candidate_truthful_scores(rs)
        ac = average_changes(rs[0])
        metas.append(truthful_meta_explanation(cz, ac, instance_id=iid))
    return metas


def cmd_meta(args) -> int:
    if args.reports:
        if args.strategy != "truthful":
            raise ValidationError("--reports applies to the truthful strategy only")
        reports = _load_reports_file(args.reports)
        metas = _meta_from_reports(reports)
        payload = envelope("truthlens/meta-v1", args, reports[0].config)
        payload["strategy"] = args.strategy
        payload["explanations"] = [m.to_dict() for m in metas]
        emit_json(payload, args.out)
        return 0

    if not (args.data and args.explanations):
        raise ValidationError(
            "meta requires either --reports or --data and --explanations"
        )
    if args.strategy == "truthful" and not args.model:
        raise ValidationError("strategy truthful requires --model")
    dataset = load_dataset(args.data)
    config = config_from_args(args)
    pairs = load_explanation_files(args.explanations)
    grouped = group_by_instance(pairs, dataset)
    if not grouped:
        raise ValidationError("no explanation matches any dataset instance")

    payload = envelope("truthlens/meta-v1", args, config)
    payload["strategy"] = args.strategy
    if args.strategy in ("mean", "median"):
        agg = aggregate_mean if args.strategy == "mean" else aggregate_median
        payload["explanations"] = [
            {
                "explainer": e.explainer_name,
                "instance_id": e.instance_id,
                "scores": [float(s) for s in e.scores],
            }
            for e in (agg(exps) for _, exps in grouped)
        ]
    else:
        model = resolve_model(args.model)
        stats = resolve_stats(args, dataset)

        def run(pair):
            x, exps = pair
            reports = [evaluate_explanation(e, x, model, stats, config) for e in exps]
            cz = candidate_truthful_scores(reports, exps)
            return truthful_meta_explanation(cz, average_changes(reports[0]), instance_id=x.id)

        metas = _pmap(run, grouped, args.jobs)
        payload["explanations"] = [m.to_dict() for m in metas]
    emit_json(payload, args.out)
    return 0


def cmd_argue(args) -> int:
    reports = _load_reports_file(args.report)
    trees = [build_tree(r) for r in reports]
    sections = []
    for r, t in zip(reports, trees):
        sections.append(
            f"# instance {r.instance_id} / explainer {r.explainer_name}\n{render_text(t)}"
        )
    text = "\n\n".join(sections) + "\n"
    sys.stdout.write(text)
    payload = envelope("truthlens/arguments-v1", args, reports[0].config)
    payload["arguments"] = [
        {
            "instance_id": r.instance_id,
            "explainer": r.explainer_name,
            "tree": to_json_dict(t),
        }
        for r, t in zip(reports, trees)
    ]
    emit_json(payload, args.out)
    return 0


def cmd_compare(args) -> int:
    dataset = load_dataset(args.data)
    model = resolve_model(args.model)
    stats = resolve_stats(args, dataset)
    pairs = load_explanation_files(args.explanations)
    grouped = group_by_instance(pairs, dataset)
    if not grouped:
        raise ValidationError("no explanation matches any dataset instance")
    base = config_from_args(args)
    deltas = args.deltas if args.deltas is not None else list(COMPARE_DELTAS)
    levels = [NoiseLevel(n) for n in args.noise_levels]

    explainer_names: list[str] = []
    for _, exps in grouped:
        for e in exps:
            if e.explainer_name not in explainer_names:
                explainer_names.append(e.explainer_name)
    if args.with_meta:
        explainer_names.append("truthful-meta")

    rows = []
    lines = []
    for level in levels:
        for delta in deltas:
            config = EvalConfig(
                noise_level=level,
                delta=delta,
                seed=base.seed,
                clamp_images=base.clamp_images,
                clamp_timeseries=base.clamp_timeseries,
            )

            def run(pair, config=config):
                x, exps = pair
                reports = [evaluate_explanation(e, x, model, stats, config) for e in exps]
                if args.with_meta:
                    cz = candidate_truthful_scores(reports, exps)
                    meta = truthful_meta_explanation(
                        cz, average_changes(reports[0]), instance_id=x.id
                    )
                    reports.append(
                        evaluate_explanation(meta.explanation, x, model, stats, config)
                    )
                    exps = list(exps) + [meta.explanation]
                return reports, exps

            evaluated = _pmap(run, grouped, args.jobs)
            agg = {
                name: {"untruthful": 0, "t_sum": 0.0, "c_sum": 0, "n": 0}
                for name in explainer_names
            }
            for reports, exps in evaluated:
                for r, e in zip(reports, exps):
                    a = agg[r.explainer_name]
                    a["untruthful"] += r.untruthful_count
                    a["t_sum"] += r.truthfulness
                    a["c_sum"] += complexity(e, args.complexity_threshold)
                    a["n"] += 1
            lines.append(f"noise={level.value} delta={delta:g}")
            lines.append(
                f"  {'explainer':<16} {'untruthful':>10} {'truthfulness':>13} {'complexity':>11}"
            )
            for name in explainer_names:
                a = agg[name]
                if a["n"] == 0:
                    continue
                mean_t = a["t_sum"] / a["n"]
                mean_c = a["c_sum"] / a["n"]
                lines.append(
                    f"  {name:<16} {a['untruthful']:>10} {mean_t:>13.4f} {mean_c:>11.2f}"
                )
                rows.append(
                    {
                        "noise_level": level.value,
                        "delta": delta,
                        "explainer": name,
                        "untruthful_count": a["untruthful"],
                        "mean_truthfulness": mean_t,
                        "mean_complexity": mean_c,
                        "instances": a["n"],
                    }
                )
    sys.stdout.write("\n".join(lines) + "\n")

    payload = envelope("truthlens/compare-v1", args, base)
    payload["config"]["deltas"] = [float(d) for d in deltas]
    payload["config"]["noise_levels"] = [l.value for l in levels]
    payload["config"]["complexity_threshold"] = args.complexity_threshold
    payload["rows"] = rows
    emit_json(payload, args.out)
    return 0


# ---------------------------------------------------------------- parser


def _add_eval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--noise", choices=[n.value for n in NoiseLevel], default="normal",
                   help="noise level for alterations (default: normal)")
    p.add_argument("--delta", type=float, default=0.0001,
                   help="stability tolerance on prediction changes (default: 0.0001)")
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed (default: $TRUTHLENS_SEED or 42)")
    p.add_argument("--clamp-images", dest="clamp_images", action="store_true", default=True,
                   help="keep altered pixel values inside their observed range (default)")
    p.add_argument("--no-clamp-images", dest="clamp_images", action="store_false",
                   help="allow altered pixel values outside their observed range")


def _add_jobs_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--jobs", type=int, default=1,
                   help="instance-level worker threads (default: 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="truthlens",
        description="Truthfulness evaluation, meta-explanation and "
                    "argumentation for feature-importance explanations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="measure per-feature statistics of a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("explain", help="produce seed explanations")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=["exact-linear", "random", "surrogate"], required=True)
    p.add_argument("--model", help="builtin:<spec.json> | http:<url> | exec:<command>")
    p.add_argument("--stats", help="statistics JSON (default: computed from the dataset)")
    p.add_argument("--n-samples", type=int, default=1000)
    p.add_argument("--kernel-width", type=float, default=None)
    p.add_argument("--ridge", type=float, default=1e-6)
    p.add_argument("--out")
    _add_eval_flags(p)
    _add_jobs_flag(p)
    p.set_defaults(fn=cmd_explain)

    p = sub.add_parser("evaluate", help="evaluate explanations for truthfulness")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--explanations", nargs="+", required=True)
    p.add_argument("--stats")
    p.add_argument("--out")
    _add_eval_flags(p)
    _add_jobs_flag(p)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("meta", help="compose meta-explanations from seed explanations")
    p.add_argument("--data")
    p.add_argument("--model")
    p.add_argument("--explanations", nargs="+")
    p.add_argument("--reports", help="precomputed evaluation reports (truthful strategy)")
    p.add_argument("--strategy", choices=["truthful", "mean", "median"], default="truthful")
    p.add_argument("--stats")
    p.add_argument("--out")
    _add_eval_flags(p)
    _add_jobs_flag(p)
    p.set_defaults(fn=cmd_meta)

    p = sub.add_parser("argue", help="build argument trees from evaluation reports")
    p.add_argument("--report", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_argue)

    p = sub.add_parser("compare", help="sweep noise levels and deltas across explainers")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--explanations", nargs="+", required=True)
    p.add_argument("--deltas", type=float, nargs="+", default=None,
                   help="delta sweep (default: 0 1e-4 1e-3 1e-2)")
    p.add_argument("--noise-levels", nargs="+",
                   choices=[n.value for n in NoiseLevel],
                   default=[n.value for n in NoiseLevel],
                   help="noise levels to sweep (default: all)")
    p.add_argument("--with-meta", action="store_true",
                   help="also compose and evaluate the truthful meta-explanation")
    p.add_argument("--complexity-threshold", type=float, default=0.0)
    p.add_argument("--stats")
    p.add_argument("--out")
    _add_eval_flags(p)
    _add_jobs_flag(p)
    p.set_defaults(fn=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (TruthlensError, OSError) as err:
        _emit_error(err)
        return 1


def _emit_error(err: Exception) -> None:
    obj = {"error": {"type": type(err).__name__, "message": str(err)}}
    sys.stderr.write(json.dumps(obj, sort_keys=True) + "\n")


if __name__ == "__main__":
    sys.exit(main())
