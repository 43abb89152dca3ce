"""Command-line entry point.

One subcommand per pipeline stage so runs are resumable and auditable:
ingest -> filter -> extract -> generate -> serve/export/eval. The CLI stays
thin; every rule lives in the core modules. --dry-run validates the config
and prints the plan without touching providers or stores.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .agentflow.pipeline import run_pipeline
from .agentflow.providers import build_provider
from .config import AppConfig, validate_config
from .curation import Curation, POLICY_ALL, POLICY_TOP_K
from .errors import ConfigError, PipelineError, UsageError
from .evalbench import (
    aggregate,
    append_scores,
    generate_responses,
    grade_rubric,
    load_items,
    load_scores,
)
from .store import SampleStore
from .texmath import extract_from_source, report_to_jsonl

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_STAGE = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would sys.exit(2); we map it ourselves
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="derivemine", description="Derivation mining pipeline")
    parser.add_argument("--config", default="derivemine.yaml", help="config file path")
    parser.add_argument("--dry-run", action="store_true",
                        help="validate config and print the plan; no provider calls, no writes")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="ingest paper bundles into the corpus store")
    p_ingest.add_argument("--corpus", required=True, help="directory of per-paper bundles")
    p_ingest.add_argument("--meta", required=True, help="JSONL metadata sidecar, one object per paper")

    p_filter = sub.add_parser("filter", help="apply the reasoning-density filter")
    p_filter.add_argument("--paper", help="filter a single paper id")

    p_extract = sub.add_parser("extract", help="extract expressions from stored papers")
    p_extract.add_argument("--paper", help="extract a single paper id")

    p_generate = sub.add_parser("generate", help="run the agent chain for one paper")
    p_generate.add_argument("--paper", required=True)

    p_serve = sub.add_parser("serve", help="start the curation HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--ui-dir", default=None, help="static review UI bundle to mount at /ui")

    p_export = sub.add_parser("export", help="export the accepted dataset")
    p_export.add_argument("--name", required=True)
    p_export.add_argument("--policy", choices=[POLICY_ALL, POLICY_TOP_K], default=POLICY_ALL)
    p_export.add_argument("--k", type=int, default=None)

    p_eval = sub.add_parser("eval", help="run the evaluation protocol over an items file")
    p_eval.add_argument("--items", help="JSONL of {item_id, question, answer}")
    p_eval.add_argument("--out", required=True, help="output directory for scores and reports")
    p_eval.add_argument("--model", default=None, help="model name for the report")
    p_eval.add_argument("--k", type=int, default=3, help="responses per item")
    p_eval.add_argument("--scores", help="aggregate an existing scores JSONL instead of grading")

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = validate_config(args.config)
    except ConfigError as exc:
        for problem in exc.errors:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        handler = _HANDLERS[args.command]
        return handler(args, config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except KeyError as exc:
        print(f"NotFound: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except KeyboardInterrupt:
        logging.shutdown()  # stage internals flush transcripts per attempt
        print("interrupted", file=sys.stderr)
        return 130


def _cmd_ingest(args, config: AppConfig) -> int:
    bundles_dir = Path(args.corpus)
    meta_path = Path(args.meta)
    if not meta_path.exists():
        raise UsageError(f"metadata file not found: {meta_path}")
    entries = []
    with meta_path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                entries.append(json.loads(line))
    if args.dry_run:
        print(f"plan: ingest {len(entries)} papers from {bundles_dir} into {config.corpus_dir}")
        return EXIT_OK
    store = corpus_mod.CorpusStore(config.corpus_dir)
    for metadata in entries:
        paper_id = metadata.get("paper_id", "")
        bundle = bundles_dir / paper_id
        if not bundle.exists():
            for suffix in (".tar.gz", ".tgz"):
                candidate = bundles_dir / f"{paper_id}{suffix}"
                if candidate.exists():
                    bundle = candidate
                    break
        record = corpus_mod.ingest_paper(
            bundle, metadata, store, lexicon=config.filter_policy.marker_lexicon
        )
        print(f"ingested {record.paper_id}: markers={record.marker_profile.total}")
    print(f"corpus store: {store.records_path}")
    return EXIT_OK


def _cmd_filter(args, config: AppConfig) -> int:
    store = corpus_mod.CorpusStore(config.corpus_dir)
    ids = [args.paper] if args.paper else store.paper_ids()
    if args.dry_run:
        print(f"plan: filter {len(ids)} papers with min_marker_total="
              f"{config.filter_policy.min_marker_total}")
        return EXIT_OK
    for paper_id in ids:
        record = store.get(paper_id)
        verdict = corpus_mod.apply_filter(record, config.filter_policy)
        store.update(record)
        status = "accept" if verdict.accepted else (
            "reject (" + ", ".join(r.value for r in verdict.failed_rules) + ")"
        )
        print(f"{paper_id}: {status}")
    return EXIT_OK


def _cmd_extract(args, config: AppConfig) -> int:
    store = corpus_mod.CorpusStore(config.corpus_dir)
    ids = [args.paper] if args.paper else store.paper_ids()
    out_dir = config.store_dir / "expressions"
    if args.dry_run:
        print(f"plan: extract expressions for {len(ids)} papers into {out_dir}")
        return EXIT_OK
    out_dir.mkdir(parents=True, exist_ok=True)
    for paper_id in ids:
        record = store.get(paper_id)
        report = extract_from_source(record.body_text, file_path="body")
        out_path = out_dir / f"{paper_id}.jsonl"
        out_path.write_text(report_to_jsonl(report), encoding="utf-8")
        print(f"{paper_id}: {len(report.expressions)} expressions "
              f"({report.skipped_inline} inline skipped, "
              f"{report.duplicates_merged} duplicates merged) -> {out_path}")
    return EXIT_OK


def _cmd_generate(args, config: AppConfig) -> int:
    if args.dry_run:
        print(f"plan: run agent chain for paper {args.paper} with provider "
              f"{config.provider.name} ({config.provider.kind.value}), "
              f"max_attempts={config.provider.max_attempts}, concurrency={config.concurrency}")
        return EXIT_OK
    corpus_store = corpus_mod.CorpusStore(config.corpus_dir)
    store = SampleStore(config.store_dir)
    report = run_pipeline(
        args.paper,
        config.provider,
        store,
        corpus_store,
        concurrency=config.concurrency,
        prompt_overrides=config.prompt_overrides or None,
    )
    report_path = config.store_dir / f"pipeline-{args.paper}.json"
    report_path.write_text(
        json.dumps(report.to_dict(), sort_keys=True, indent=1), encoding="utf-8"
    )
    print(f"pipeline report: {report_path}")
    for stage, count in sorted(report.stage_counts.items()):
        print(f"  {stage}: {count}")
    return EXIT_OK


def _cmd_serve(args, config: AppConfig) -> int:
    if args.dry_run:
        print(f"plan: serve curation API on {args.host}:{args.port} "
              f"over store {config.store_dir}")
        return EXIT_OK
    import uvicorn

    from .service import create_app

    app = create_app(
        config.store_dir,
        exports_dir=config.exports_dir,
        ui_dir=args.ui_dir,
        lease_minutes=config.lease_minutes,
        required_accepts=config.required_accepts,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def _cmd_export(args, config: AppConfig) -> int:
    if args.policy == POLICY_TOP_K and not args.k:
        raise UsageError("--policy top_k_by_difficulty_rank requires --k")
    if args.dry_run:
        print(f"plan: export '{args.name}' with policy {args.policy}"
              + (f" (k={args.k})" if args.k else "") + f" into {config.exports_dir}")
        return EXIT_OK
    store = SampleStore(config.store_dir)
    curation = Curation(store)
    export, path = curation.export_dataset(
        args.name, policy=args.policy, k=args.k, out_dir=config.exports_dir
    )
    print(f"exported {len(export.items)} items -> {path}")
    return EXIT_OK


def _cmd_eval(args, config: AppConfig) -> int:
    out_dir = Path(args.out)
    model_name = args.model or config.provider.model_name or config.provider.name
    if args.scores:
        if args.dry_run:
            print(f"plan: aggregate scores from {args.scores} into {out_dir}")
            return EXIT_OK
        scores = load_scores(args.scores)
    else:
        if not args.items:
            raise UsageError("eval requires --items (or --scores for aggregation only)")
        items = load_items(args.items)
        if args.dry_run:
            print(f"plan: evaluate {len(items)} items with {args.k} responses each "
                  f"via provider {config.provider.name}; write to {out_dir}")
            return EXIT_OK
        out_dir.mkdir(parents=True, exist_ok=True)
        provider = build_provider(config.provider)
        scores = []
        responses_path = out_dir / "responses.jsonl"
        with responses_path.open("w", encoding="utf-8") as fh:
            for item in items:
                responses = generate_responses(
                    item, config.provider, k=args.k, provider=provider
                )
                for index, text in enumerate(responses):
                    fh.write(json.dumps(
                        {"item_id": item["item_id"], "response_index": index, "text": text},
                        sort_keys=True,
                    ) + "\n")
                    scores.append(grade_rubric(
                        item["question"], item["answer"], text, config.provider,
                        provider=provider, item_id=item["item_id"], response_index=index,
                    ))
        print(f"responses: {responses_path}")
    out_dir.mkdir(parents=True, exist_ok=True)
    scores_path = out_dir / "scores.jsonl"
    if not args.scores:
        scores_path.unlink(missing_ok=True)
        append_scores(scores_path, scores)
        print(f"scores: {scores_path}")
    report = aggregate(scores, model_name)
    (out_dir / "report.jsonl").write_text(report.to_jsonl(), encoding="utf-8")
    (out_dir / "report.csv").write_text(report.to_csv(scores), encoding="utf-8")
    table = report.to_table()
    (out_dir / "report.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    print(f"reports: {out_dir}/report.txt, report.csv, report.jsonl")
    return EXIT_OK


_HANDLERS = {
    "ingest": _cmd_ingest,
    "filter": _cmd_filter,
    "extract": _cmd_extract,
    "generate": _cmd_generate,
    "serve": _cmd_serve,
    "export": _cmd_export,
    "eval": _cmd_eval,
}


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
