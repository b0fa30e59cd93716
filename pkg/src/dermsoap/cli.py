"""Command-line surface tying the pipeline together.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 backend or
provider error, 5 pipeline aborted. All artifacts are written atomically and
stub/mock runs are byte-for-byte reproducible for a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import reports
from .banks import load_bank
from .config import (
    DETERMINISTIC_TIMESTAMP,
    PipelineConfig,
    load_config,
    make_backend,
    make_judge_backend,
    make_provider,
)
from .dataset import Caption, CaptionSource, LesionClass, load_records
from .errors import (
    BackendError,
    BankError,
    ConfigError,
    DegenerateInput,
    DermsoapError,
    DomainError,
    GenerationFailed,
    JudgeParseError,
    ParseError,
    PipelineAborted,
    ProviderError,
    SchemaError,
)
from .generation import SynthesisConfig, export_training, synthesize_weak_dataset
from .judge import judge_notes
from .metrics import ccs, chrf_pp, embed_f1, med_concept_eval, meteor, rouge_l, rouge_n
from .retrieval import build_index, chunk_documents, load_corpus, load_index, save_index
from .soap import parse_soap, validate_soap
from .stats import GroupedSamples, one_way_anova

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_BACKEND = 4
EXIT_ABORTED = 5

TABLE1_FIXTURE = "medconcepteval_reference.json"


def _data_path(*parts: str):
    return resources.files("dermsoap").joinpath("data", *parts)


def _read_jsonl(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records


def _load_id_text(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for doc in _read_jsonl(path):
        out[str(doc["id"])] = doc["text"]
    return out


# ---------------------------------------------------------------- commands


def cmd_index(args) -> int:
    cfg = load_config(args.config, args.seed)
    cfg.require_paths("corpus_dir", "output_dir")
    manifest = cfg.paths.corpus_manifest
    docs = load_corpus(cfg.paths.corpus_dir, manifest)
    if not docs:
        raise ConfigError(f"no documents found in {cfg.paths.corpus_dir}")
    chunks = chunk_documents(
        docs, cfg.retrieval.max_chunk_tokens, cfg.retrieval.overlap
    )
    provider = make_provider(cfg)
    sources = {doc.doc_id: doc.source_name for doc in docs}
    index = build_index(chunks, provider, sources)
    out_dir = Path(cfg.paths.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    snapshot = out_dir / "index.json"
    provider_info = {"kind": cfg.provider.kind, "dim": index.dim, "seed": cfg.seed}
    save_index(index, snapshot, provider_info)
    print(f"indexed {len(index)} chunks (dim {index.dim}) -> {snapshot}")
    return EXIT_OK


def cmd_synthesize(args) -> int:
    cfg = load_config(args.config, args.seed)
    cfg.require_paths("dataset_csv", "output_dir")
    out_dir = Path(cfg.paths.output_dir)
    snapshot = Path(args.index) if args.index else out_dir / "index.json"
    if not snapshot.exists():
        raise ConfigError(f"index snapshot not found: {snapshot} (run 'index' first)")

    index = load_index(snapshot)
    loaded = load_records(cfg.paths.dataset_csv)
    provider = make_provider(cfg)
    backend = make_backend(cfg)
    syn_cfg = SynthesisConfig(
        provider=provider,
        k=cfg.retrieval.k,
        token_budget=cfg.retrieval.token_budget,
        retries=cfg.backend.retries,
        failure_threshold=cfg.synthesis.failure_threshold,
        concurrency=cfg.synthesis.concurrency,
        caption_template=cfg.caption_template(),
        run_timestamp=DETERMINISTIC_TIMESTAMP if cfg.is_deterministic() else None,
    )
    result = synthesize_weak_dataset(loaded.records, index, backend, syn_cfg)

    out_dir.mkdir(parents=True, exist_ok=True)
    export_path = out_dir / "training.jsonl"
    written = export_training(result.triples, export_path)

    bank = load_bank(cfg.paths.descriptor_bank) if cfg.paths.descriptor_bank else None
    lint_counts: dict[str, int] = {}
    notes_meta = []
    for triple in result.triples:
        report = validate_soap(triple.note, bank)
        for lint in report.lints:
            lint_counts[lint.code] = lint_counts.get(lint.code, 0) + 1
        notes_meta.append(
            {
                "image_ref": triple.image_ref,
                "complete": report.complete,
                "chunk_ids": list(triple.provenance.chunk_ids),
                "lints": [lint.code for lint in report.lints],
            }
        )
    run_report = {
        "report": "synthesis",
        "records": len(loaded.records),
        "rejected_rows": len(loaded.rejects),
        "triples": len(result.triples),
        "failures": [
            {"index": f.index, "lesion_id": f.lesion_id, "error": f.error}
            for f in result.failures
        ],
        "lint_counts": lint_counts,
        "notes": notes_meta,
        "export": str(export_path),
    }
    reports.write_json_atomic(out_dir / "synthesis_report.json", run_report)
    reports.write_text_atomic(
        out_dir / "synthesis_report.txt",
        f"synthesized {len(result.triples)}/{len(loaded.records)} notes, "
        f"{len(result.failures)} failures, lints: {lint_counts or 'none'}\n",
    )
    print(f"wrote {written} training lines -> {export_path}")
    if result.failures:
        print(f"{len(result.failures)} record(s) failed; see synthesis_report.json")
    return EXIT_OK


_ROUGE_METRICS = ("rouge1_f1", "rouge2_f1", "rougeL_f1")


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config, args.seed)
    cfg.require_paths("output_dir")
    candidates = _load_id_text(args.candidates)
    references = _load_id_text(args.references)
    missing_refs = [cid for cid in candidates if cid not in references]
    missing_cands = [cid for cid in references if cid not in candidates]
    if missing_refs or missing_cands:
        raise SchemaError(
            "candidate/reference ids do not align; "
            f"missing references for {missing_refs or 'none'}, "
            f"missing candidates for {missing_cands or 'none'}"
        )

    general = make_provider(cfg)
    clinical = make_provider(cfg, clinical=True)
    baseline = cfg.metrics.rescale_baseline
    case_ids = list(candidates.keys())
    rows: dict[str, dict[str, float]] = {
        name: {}
        for name in _ROUGE_METRICS + ("meteor", "chrf_pp", "embed_f1_general", "embed_f1_clinical")
    }
    for cid in case_ids:
        cand, ref = candidates[cid], references[cid]
        rows["rouge1_f1"][cid] = rouge_n(cand, ref, 1).f1
        rows["rouge2_f1"][cid] = rouge_n(cand, ref, 2).f1
        rows["rougeL_f1"][cid] = rouge_l(cand, ref).f1
        rows["meteor"][cid] = meteor(cand, ref, cfg.metrics.meteor)
        rows["chrf_pp"][cid] = chrf_pp(cand, ref, cfg.metrics.chrf)
        rows["embed_f1_general"][cid] = reports.rescale_scores(
            embed_f1(cand, ref, general).f1, baseline
        )
        rows["embed_f1_clinical"][cid] = reports.rescale_scores(
            embed_f1(cand, ref, clinical).f1, baseline
        )

    document = reports.evaluation_document(case_ids, rows)
    out_dir = Path(cfg.paths.output_dir)
    reports.write_json_atomic(out_dir / "evaluation_report.json", document)
    table = reports.evaluation_table(document)
    reports.write_text_atomic(out_dir / "evaluation_report.txt", table)
    print(table, end="")
    return EXIT_OK


def cmd_medconcept(args) -> int:
    cfg = load_config(args.config, args.seed)
    cfg.require_paths("descriptor_bank", "output_dir")
    bank = load_bank(cfg.paths.descriptor_bank)
    provider = make_provider(cfg, clinical=True)
    notes_dir = Path(args.notes_dir)
    if not notes_dir.is_dir():
        raise ConfigError(f"notes directory not found: {notes_dir}")

    results = {}
    for condition in LesionClass:
        case_dir = notes_dir / condition.code
        if not case_dir.is_dir():
            continue
        cases = [
            parse_soap(path.read_text(encoding="utf-8"))
            for path in sorted(case_dir.glob("*.txt"))
        ]
        if not cases:
            continue
        results[condition.code] = med_concept_eval(cases, condition, bank, provider)
    if not results:
        raise SchemaError(f"no per-condition note directories with .txt files under {notes_dir}")

    document = reports.medconcept_document(results)
    out_dir = Path(cfg.paths.output_dir)
    reports.write_json_atomic(out_dir / "medconcept_report.json", document)
    table = reports.medconcept_table(document)
    reports.write_text_atomic(out_dir / "medconcept_report.txt", table)
    print(table, end="")
    return EXIT_OK


def cmd_ccs(args) -> int:
    cfg = load_config(args.config, args.seed)
    cfg.require_paths("output_dir")
    provider = make_provider(cfg, clinical=True)
    results = {}
    for doc in _read_jsonl(args.pairs):
        caption = Caption(doc["caption"], CaptionSource.TEMPLATE)
        note = parse_soap(doc["note"])
        results[str(doc["id"])] = ccs(caption, note, provider)
    if not results:
        raise SchemaError(f"no caption/note pairs found in {args.pairs}")

    document = reports.ccs_document(results)
    out_dir = Path(cfg.paths.output_dir)
    reports.write_json_atomic(out_dir / "ccs_report.json", document)
    table = reports.ccs_table(document)
    reports.write_text_atomic(out_dir / "ccs_report.txt", table)
    print(table, end="")
    return EXIT_OK


def cmd_anova(args) -> int:
    if args.report is None:
        text = _data_path(TABLE1_FIXTURE).read_text(encoding="utf-8")
        report_name = f"bundled {TABLE1_FIXTURE}"
    else:
        text = Path(args.report).read_text(encoding="utf-8")
        report_name = str(args.report)
    document = json.loads(text)
    rows = document.get("rows")
    if not isinstance(rows, list) or not rows:
        raise SchemaError(f"{report_name} does not look like a medconcept report (no rows)")

    key = "section" if args.group_by == "section" else "condition"
    grouped: dict[str, list[float]] = {}
    for row in rows:
        grouped.setdefault(row[key], []).append(float(row["avg_similarity"]))
    samples = GroupedSamples.from_pairs(sorted(grouped.items()))
    result = one_way_anova(samples)

    print(f"grouped by {args.group_by}: {result.summary()}")
    document = reports.anova_document(result, args.group_by)
    print(json.dumps(document, sort_keys=True))
    if args.output:
        out_dir = Path(args.output)
        reports.write_json_atomic(out_dir / f"anova_{args.group_by}.json", document)
        reports.write_text_atomic(
            out_dir / f"anova_{args.group_by}.txt",
            f"grouped by {args.group_by}: {result.summary()}\n",
        )
    return EXIT_OK


def cmd_judge(args) -> int:
    cfg = load_config(args.config, args.seed)
    cfg.require_paths("output_dir")
    backend = make_judge_backend(cfg)
    notes = []
    for doc in _read_jsonl(args.notes):
        notes.append(
            (
                str(doc["id"]),
                parse_soap(doc["note"]),
                Caption(doc["caption"], CaptionSource.TEMPLATE),
            )
        )
    if not notes:
        raise SchemaError(f"no notes found in {args.notes}")
    report = judge_notes(notes, backend)

    document = reports.judge_document(report)
    out_dir = Path(cfg.paths.output_dir)
    reports.write_json_atomic(out_dir / "judge_report.json", document)
    table = reports.judge_table(document)
    reports.write_text_atomic(out_dir / "judge_report.txt", table)
    print(table, end="")
    if report.failures:
        print(f"{len(report.failures)} note(s) failed; see judge_report.json")
    return EXIT_OK


SAMPLE_CONFIG = """\
# dermsoap pipeline configuration (paths are relative to this file)
paths:
  corpus_dir: corpus
  corpus_manifest: corpus_manifest.json
  dataset_csv: sample_lesions.csv
  descriptor_bank: descriptor_banks.json
  output_dir: out

provider:
  kind: stub        # stub | remote
  dim: 64
  # url: http://127.0.0.1:8760   # or set DERMSOAP_PROVIDER_URL

backend:
  kind: mock        # mock | remote
  retries: 2
  # url: http://127.0.0.1:8760   # or set DERMSOAP_BACKEND_URL

retrieval:
  k: 4
  max_chunk_tokens: 128
  overlap: 16
  token_budget: 512

metrics:
  meteor: {alpha: 0.9, beta: 3.0, gamma: 0.5, stemming: false}
  chrf: {char_order: 6, word_order: 2, beta: 2.0}

synthesis:
  failure_threshold: 0.25
  concurrency: 1

seed: 0
"""

_SAMPLE_FILES = (
    "corpus_manifest.json",
    "sample_lesions.csv",
    "descriptor_banks.json",
    TABLE1_FIXTURE,
    "ccs_pairs.jsonl",
)


def _copy_resource(entry, dest: Path) -> None:
    dest.write_bytes(entry.read_bytes())


def cmd_sample_data(args) -> int:
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    corpus_dest = dest / "corpus"
    corpus_dest.mkdir(exist_ok=True)
    for entry in _data_path("corpus").iterdir():
        _copy_resource(entry, corpus_dest / entry.name)
    for name in _SAMPLE_FILES:
        _copy_resource(_data_path(name), dest / name)
    cases_dest = dest / "eval_cases"
    cases_dest.mkdir(exist_ok=True)
    for entry in _data_path("eval_cases").iterdir():
        _copy_resource(entry, cases_dest / entry.name)
    (dest / "config.yaml").write_text(SAMPLE_CONFIG, encoding="utf-8")
    print(f"sample data and config.yaml written to {dest}")
    return EXIT_OK


# ---------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dermsoap",
        description="Weakly supervised SOAP note synthesis and evaluation pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="pipeline config YAML")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p = sub.add_parser("index", help="chunk and embed the corpus into a snapshot")
    add_common(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("synthesize", help="synthesize weakly supervised training triples")
    add_common(p)
    p.add_argument("--index", default=None, help="index snapshot (default: <output_dir>/index.json)")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("evaluate", help="score candidate notes against references")
    add_common(p)
    p.add_argument("--candidates", required=True, help="JSONL of {id, text}")
    p.add_argument("--references", required=True, help="JSONL of {id, text}")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("medconcept", help="descriptor-bank alignment per condition")
    add_common(p)
    p.add_argument("--notes-dir", required=True, help="directory with <CLASS>/<case>.txt notes")
    p.set_defaults(func=cmd_medconcept)

    p = sub.add_parser("ccs", help="caption/section coherence scores")
    add_common(p)
    p.add_argument("--pairs", required=True, help="JSONL of {id, caption, note}")
    p.set_defaults(func=cmd_ccs)

    p = sub.add_parser("anova", help="one-way ANOVA over a medconcept report")
    p.add_argument(
        "--report",
        default=None,
        help="medconcept report JSON (default: the bundled reference table)",
    )
    p.add_argument("--group-by", choices=("section", "condition"), required=True)
    p.add_argument("--output", default=None, help="directory for report files (optional)")
    p.set_defaults(func=cmd_anova)

    p = sub.add_parser("judge", help="LLM-as-a-judge scoring of generated notes")
    add_common(p)
    p.add_argument("--notes", required=True, help="JSONL of {id, caption, note}")
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("sample-data", help="copy the bundled fixtures and a ready config")
    p.add_argument("--dest", required=True, help="destination directory")
    p.set_defaults(func=cmd_sample_data)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        SchemaError,
        ParseError,
        BankError,
        DegenerateInput,
        DomainError,
        JudgeParseError,
        json.JSONDecodeError,
        KeyError,
        OSError,
    ) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (BackendError, ProviderError, GenerationFailed) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except PipelineAborted as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORTED
    except DermsoapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
