"""Command-line entry point: ``aqg <subcommand>``.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 provider error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections import defaultdict
from pathlib import Path
from typing import Sequence

from aqg import agreement, metrics, report, stats
from aqg.dataset import dataset_stats, load_dataset
from aqg.errors import AQGError, ConfigError, DataError
from aqg.generation import (
    GenerationParams,
    HTTPProvider,
    MockProvider,
    ResponseCache,
    manifest_path,
    read_questions,
    run_experiment,
    write_questions,
)
from aqg.prompting import DEFAULT_TOKEN_BUDGET, PipelineConfig, PromptTemplate
from aqg.retrieval import build_index, load_corpus, load_index, save_index

logger = logging.getLogger("aqg")

GENERATE_DEFAULTS = {
    "method": "baseline",
    "icl_shots": 0,
    "retrieval_k": 0,
    "hybrid_shots": 0,
    "seed": 0,
    "strategy": "stratified",
    "token_budget": DEFAULT_TOKEN_BUDGET,
    "mock": False,
    "url": None,
    "model": "gpt-4",
    "temperature": 0.0,
    "max_tokens": 128,
    "cache_dir": ".aqg_cache",
    "max_in_flight": 4,
    "max_failure_fraction": 0.05,
    "train": None,
    "test": None,
    "index": None,
    "template": None,
    "out": None,
}
_INT_KEYS = {"icl_shots", "retrieval_k", "hybrid_shots", "seed", "token_budget", "max_tokens", "max_in_flight"}
_FLOAT_KEYS = {"temperature", "max_failure_fraction"}
_BOOL_KEYS = {"mock"}


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def read_config_file(path: str | Path) -> dict[str, object]:
    """``key = value`` lines; ``#`` starts a comment. Keys use underscores or dashes."""
    out: dict[str, object] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in GENERATE_DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            if key in _INT_KEYS:
                out[key] = int(value)
            elif key in _FLOAT_KEYS:
                out[key] = float(value)
            elif key in _BOOL_KEYS:
                out[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                out[key] = value
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return out


def resolve_generate_config(args: argparse.Namespace) -> dict[str, object]:
    """Merge with precedence flags > config file > defaults."""
    resolved = dict(GENERATE_DEFAULTS)
    if args.config:
        resolved.update(read_config_file(args.config))
    for key in GENERATE_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


def cmd_dataset_stats(args) -> int:
    records = load_dataset(args.file)
    counts = dataset_stats(records)
    width = max(len(s.value) for s in counts)
    for subject, n in counts.items():
        print(f"{subject.value:<{width}}  {n}")
    print(f"{'total':<{width}}  {sum(counts.values())}")
    return 0


def cmd_index(args) -> int:
    docs = load_corpus(args.corpus)
    if not docs:
        raise DataError(f"no corpus documents under {args.corpus}")
    index = build_index(docs, k1=args.k1, b=args.b)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_index(index, out)
    logger.info("indexed %d documents (avg length %.1f tokens) -> %s", index.doc_count, index.avg_doc_length, out)
    return 0


def cmd_generate(args) -> int:
    cfg = resolve_generate_config(args)
    if not cfg["test"]:
        raise UsageError("--test is required")
    if not cfg["out"]:
        raise UsageError("--out is required")
    if cfg["method"] in ("rag", "hybrid") and not cfg["index"]:
        raise UsageError(f"--method {cfg['method']} requires --index")
    if not cfg["mock"] and not cfg["url"]:
        raise UsageError("pass --mock or --url")
    config = PipelineConfig(
        method=cfg["method"],
        icl_shots=cfg["icl_shots"],
        retrieval_k=cfg["retrieval_k"],
        hybrid_shots=cfg["hybrid_shots"],
        seed=cfg["seed"],
        selection_strategy=cfg["strategy"],
        token_budget=cfg["token_budget"],
    )
    if config.shots and not cfg["train"]:
        raise UsageError(f"--method {cfg['method']} requires --train")
    params = GenerationParams(
        model_name="mock" if cfg["mock"] else cfg["model"],
        temperature=cfg["temperature"],
        max_output_tokens=cfg["max_tokens"],
    )
    test = load_dataset(cfg["test"])
    train = load_dataset(cfg["train"]) if cfg["train"] else []
    index = load_index(cfg["index"]) if config.uses_retrieval else None
    template = PromptTemplate.load(cfg["template"]) if cfg["template"] else PromptTemplate.default()
    provider = MockProvider() if cfg["mock"] else HTTPProvider(cfg["url"])
    cache = ResponseCache(cfg["cache_dir"]) if cfg["cache_dir"] else None
    result = run_experiment(
        test,
        config,
        params,
        provider,
        train=train,
        index=index,
        template=template,
        cache=cache,
        max_in_flight=cfg["max_in_flight"],
        max_failure_fraction=cfg["max_failure_fraction"],
    )
    manifest = dict(result.manifest)
    manifest["resolved_config"] = {k: cfg[k] for k in sorted(cfg) if k not in ("out",)}
    write_questions(result.questions, cfg["out"], manifest)
    cached = sum(q.from_cache for q in result.questions)
    logger.info(
        "%s: %d questions (%d from cache, %d failed) -> %s",
        config.label, len(result.questions), cached, len(result.failures), cfg["out"],
    )
    return 0


def cmd_evaluate(args) -> int:
    questions = read_questions(args.questions)
    gold = load_dataset(args.test)
    label = args.label
    mpath = manifest_path(args.questions)
    if label is None and mpath.exists():
        label = json.loads(mpath.read_text(encoding="utf-8")).get("label")
    label = label or Path(args.questions).stem
    result = metrics.evaluate_corpus(questions, gold)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "items.csv").write_text(metrics.items_to_csv(result.items), encoding="utf-8")
    (out / "summary.csv").write_text(metrics.summary_to_csv(label, result.summary), encoding="utf-8")
    for metric, score in result.summary.items():
        print(f"{metric.value:<10} {score.value:7.2f}")
    return 0


def cmd_agreement(args) -> int:
    ratings = agreement.load_ratings(args.ratings)
    table = agreement.kappa_table(ratings)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "kappa.csv").write_text(agreement.kappa_csv(table), encoding="utf-8")
    text = agreement.kappa_text(table)
    (out / "kappa.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def _parse_run(arg: str) -> tuple[str | None, Path]:
    if "=" in arg:
        label, path = arg.split("=", 1)
        return label, Path(path)
    return None, Path(arg)


def read_significance_csv(path: str | Path) -> dict[tuple[str, str], bool]:
    try:
        rows = list(csv.reader(Path(path).read_text(encoding="utf-8").splitlines()))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    if not rows or rows[0][:2] != ["model", "metric"] or "star" not in rows[0]:
        raise DataError(f"{path}: row 1: expected header with model, metric, ..., star")
    star_col = rows[0].index("star")
    out = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(rows[0]):
            raise DataError(f"{path}: row {lineno}: expected {len(rows[0])} fields, got {len(row)}")
        out[(row[0], row[1])] = row[star_col].strip().lower() in ("1", "true", "yes", "*")
    return out


def automatic_report(runs: Sequence[str], baselines: Sequence[str], alpha: float, significance_file: str | None):
    """Build the automatic-metric table and significance rows from evaluation dirs."""
    values: dict[str, dict[str, float]] = {}
    samples: dict[str, dict[str, stats.SampleVector]] = defaultdict(dict)
    columns = [m.value for m in metrics.AUTOMATIC_METRICS]
    for arg in runs:
        label, path = _parse_run(arg)
        summary_file = path / "summary.csv" if path.is_dir() else path
        file_label, vals = metrics.read_summary_csv(summary_file)
        label = label or file_label
        missing = [c for c in columns if c not in vals]
        if missing:
            raise DataError(f"{summary_file}: missing metrics {missing}")
        values[label] = {c: vals[c] for c in columns}
        items_file = summary_file.parent / "items.csv"
        if items_file.exists() and significance_file is None:
            per_metric: dict[str, list[float]] = defaultdict(list)
            for _, metric, v in metrics.read_items_csv(items_file):
                per_metric[metric].append(v)
            for col in columns:
                source = metrics.SENTENCE_BLEU if col == metrics.Metric.BLEU4.value else col
                if len(per_metric.get(source, ())) >= 2:
                    samples[col][label] = stats.SampleVector(per_metric[source], label)
    unknown = [b for b in baselines if b not in values]
    if unknown:
        raise ConfigError(f"baseline labels not among runs: {unknown}")
    sig_rows = []
    if significance_file:
        stars = read_significance_csv(significance_file)
    else:
        sig_rows = stats.significance_table(samples, baselines, alpha) if baselines else []
        stars = {(r.model, r.metric): r.star for r in sig_rows}
    return report.build_table(values, stars, columns), sig_rows


def human_report(ratings_file: str, baselines: Sequence[str], alpha: float):
    ratings = agreement.load_ratings(ratings_file)
    means = agreement.mean_ratings(ratings)
    per_item = agreement.item_means(ratings)
    models = list(dict.fromkeys(agreement.model_of(r) for r in ratings))
    criteria = [c for c in agreement.Criterion if any(k[1] is c for k in means)]
    columns = [c.short for c in criteria]
    values = {}
    for m in models:
        row = {}
        for c in criteria:
            if (m, c) not in means:
                raise DataError(f"model {m!r} has no ratings for {c.value}")
            row[c.short] = means[(m, c)]
        values[m] = row
    samples: dict[str, dict[str, stats.SampleVector]] = defaultdict(dict)
    for (m, c), vals in per_item.items():
        if len(vals) >= 2:
            samples[c.short][m] = stats.SampleVector(vals, m)
    sig_rows = stats.significance_table(samples, [b for b in baselines if b in models], alpha) if baselines else []
    stars = {(r.model, r.metric): r.star for r in sig_rows}
    return report.build_table(values, stars, columns), sig_rows


def cmd_report(args) -> int:
    if not args.run and not args.ratings:
        raise UsageError("nothing to report: pass --run and/or --ratings")
    out = Path(args.out_dir) / "reports"
    out.mkdir(parents=True, exist_ok=True)
    if args.run:
        table, sig_rows = automatic_report(args.run, args.baseline, args.alpha, args.significance)
        (out / "automatic.md").write_text(
            report.render(table, "markdown") + "\n" + report.report_notes(args.alpha), encoding="utf-8"
        )
        (out / "automatic.csv").write_text(report.render(table, "csv"), encoding="utf-8")
        if sig_rows:
            (out / "significance.csv").write_text(stats.significance_csv(sig_rows), encoding="utf-8")
        print(report.render(table, "plain"), end="")
    if args.ratings:
        table, sig_rows = human_report(args.ratings, args.baseline, args.alpha)
        (out / "human.md").write_text(
            report.render(table, "markdown") + "\n" + report.report_notes(args.alpha, human=True), encoding="utf-8"
        )
        (out / "human.csv").write_text(report.render(table, "csv"), encoding="utf-8")
        if sig_rows:
            (out / "human_significance.csv").write_text(stats.significance_csv(sig_rows), encoding="utf-8")
        print(report.render(table, "plain"), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="aqg", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ds = sub.add_parser("dataset", help="dataset utilities")
    ds_sub = ds.add_subparsers(dest="dataset_command", required=True, parser_class=_Parser)
    st = ds_sub.add_parser("stats", help="record counts per subject")
    st.add_argument("file")
    st.set_defaults(func=cmd_dataset_stats)

    ix = sub.add_parser("index", help="build a lexical index over a corpus directory")
    ix.add_argument("corpus")
    ix.add_argument("--out", required=True)
    ix.add_argument("--k1", type=float, default=1.5)
    ix.add_argument("--b", type=float, default=0.75)
    ix.set_defaults(func=cmd_index)

    g = sub.add_parser("generate", help="generate one question per test record")
    g.add_argument("--config", help="key = value file; flags override it")
    g.add_argument("--test")
    g.add_argument("--train")
    g.add_argument("--index")
    g.add_argument("--template")
    g.add_argument("--out")
    g.add_argument("--method", choices=["baseline", "icl", "rag", "hybrid"])
    g.add_argument("--icl-shots", type=int)
    g.add_argument("--retrieval-k", type=int)
    g.add_argument("--hybrid-shots", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--strategy", choices=["stratified", "similarity"])
    g.add_argument("--token-budget", type=int)
    g.add_argument("--mock", action="store_true", default=None)
    g.add_argument("--url")
    g.add_argument("--model")
    g.add_argument("--temperature", type=float)
    g.add_argument("--max-tokens", type=int)
    g.add_argument("--cache-dir")
    g.add_argument("--max-in-flight", type=int)
    g.add_argument("--max-failure-fraction", type=float)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evaluate", help="score generated questions against gold questions")
    e.add_argument("questions")
    e.add_argument("--test", required=True)
    e.add_argument("--out-dir", required=True)
    e.add_argument("--label")
    e.set_defaults(func=cmd_evaluate)

    a = sub.add_parser("agreement", help="Fleiss's kappa per criterion from a ratings CSV")
    a.add_argument("ratings")
    a.add_argument("--out-dir", required=True)
    a.set_defaults(func=cmd_agreement)

    r = sub.add_parser("report", help="render comparison tables")
    r.add_argument("--run", action="append", default=[], help="LABEL=DIR or DIR holding summary.csv (+ items.csv)")
    r.add_argument("--baseline", action="append", default=[], help="label of a baseline row (repeatable)")
    r.add_argument("--significance", help="precomputed significance CSV (model,metric,...,star)")
    r.add_argument("--ratings", help="human ratings CSV")
    r.add_argument("--alpha", type=float, default=0.05)
    r.add_argument("--out-dir", required=True)
    r.set_defaults(func=cmd_report)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except AQGError as exc:
        print(f"aqg: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
