"""Report documents and their human-readable table renderings.

Every report is emitted twice: a keyed JSON document for machines and an
aligned-column text table for people. Files are written atomically
(temp + rename) so re-runs never leave partial output behind.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Optional, Sequence

from .judge import JudgeReport
from .metrics import CcsResult, SectionScore
from .soap import SectionKind
from .stats import AnovaResult

__all__ = [
    "write_text_atomic",
    "write_json_atomic",
    "format_table",
    "medconcept_document",
    "medconcept_table",
    "ccs_document",
    "ccs_table",
    "evaluation_document",
    "evaluation_table",
    "anova_document",
    "judge_document",
    "judge_table",
]


def write_text_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_json_atomic(path, payload) -> None:
    write_text_atomic(path, json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n")


def format_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Aligned-column plain-text table."""
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip(),
        "  ".join("-" * widths[i] for i in range(len(headers))),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def medconcept_document(results: dict[str, list[SectionScore]]) -> dict:
    """Rows of condition x section similarity: the shape the anova command reads."""
    rows = []
    for condition, scores in results.items():
        for score in scores:
            rows.append(
                {
                    "condition": condition,
                    "section": score.section.label,
                    "avg_similarity": score.avg_similarity,
                    "max_similarity": score.max_similarity,
                }
            )
    return {"report": "medconcept", "rows": rows}


def medconcept_table(document: dict) -> str:
    rows = [
        [r["condition"], r["section"], f"{r['avg_similarity']:.4f}", f"{r['max_similarity']:.4f}"]
        for r in document["rows"]
    ]
    return format_table(["Condition", "Section", "Avg Similarity", "Max Similarity"], rows)


def ccs_document(results: dict[str, CcsResult]) -> dict:
    cases = {}
    for case_id, result in results.items():
        cases[case_id] = {
            "sections": {kind.label: result.per_section[kind] for kind in SectionKind},
            "average": result.average,
        }
    return {"report": "ccs", "cases": cases}


def ccs_table(document: dict) -> str:
    case_ids = list(document["cases"].keys())
    headers = ["Sections"] + case_ids
    rows = []
    for kind in SectionKind:
        rows.append(
            [kind.label]
            + [f"{document['cases'][cid]['sections'][kind.label]:.4f}" for cid in case_ids]
        )
    rows.append(
        ["Average Score"] + [f"{document['cases'][cid]['average']:.4f}" for cid in case_ids]
    )
    return format_table(headers, rows)


def evaluation_document(
    case_ids: Sequence[str], metric_rows: dict[str, dict[str, float]]
) -> dict:
    """Metric-by-case score matrix (one row per metric, one column per case)."""
    return {"report": "evaluation", "cases": list(case_ids), "metrics": metric_rows}


def evaluation_table(document: dict) -> str:
    case_ids = document["cases"]
    headers = ["Metric"] + list(case_ids)
    rows = []
    for metric, by_case in document["metrics"].items():
        rows.append([metric] + [f"{by_case[cid]:.4f}" for cid in case_ids])
    return format_table(headers, rows)


def anova_document(result: AnovaResult, group_by: str) -> dict:
    doc = result.as_document()
    doc["grouped_by"] = group_by
    doc["report"] = "anova"
    return doc


def judge_document(report: JudgeReport) -> dict:
    return {
        "report": "judge",
        "criteria": [c.id for c in report.rubric.criteria],
        "scored": [
            {
                "id": note_id,
                "scores": scores.scores,
                "total": scores.total,
                "feedback": scores.feedback,
                "warnings": list(scores.warnings),
            }
            for note_id, scores in report.scored
        ],
        "failures": [{"id": note_id, "error": error} for note_id, error in report.failures],
        "summary": {
            "criterion_means": report.criterion_means(),
            "mean_total": report.mean_total(),
            "ranking": [{"id": nid, "total": total} for nid, total in report.ranking()],
        },
    }


def judge_table(document: dict) -> str:
    criteria = document["criteria"]
    headers = ["Note"] + criteria + ["Total"]
    by_id = {entry["id"]: entry for entry in document["scored"]}
    rows = []
    for ranked in document["summary"]["ranking"]:
        entry = by_id[ranked["id"]]
        rows.append(
            [entry["id"]]
            + [str(entry["scores"][c]) for c in criteria]
            + [str(entry["total"])]
        )
    means = document["summary"]["criterion_means"]
    rows.append(
        ["mean"] + [f"{means[c]:.2f}" for c in criteria] + [f"{document['summary']['mean_total']:.2f}"]
    )
    return format_table(headers, rows)


def rescale_scores(value: float, baseline: Optional[float]) -> float:
    """BERTScore-style baseline rescaling; identity when no baseline is set."""
    if baseline is None:
        return value
    return (value - baseline) / (1.0 - baseline)
