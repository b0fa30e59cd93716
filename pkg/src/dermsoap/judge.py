"""LLM-as-a-Judge orchestration over a four-criterion, 1-5 rubric."""

from __future__ import annotations

import re
from dataclasses import dataclass
from statistics import fmean
from typing import Optional, Sequence

from .dataset import Caption
from .errors import BackendError, GenerationFailed, JudgeParseError
from .generation import GenerationBackend, Prompt
from .soap import SoapNote, render_soap

__all__ = [
    "Criterion",
    "Rubric",
    "JudgeScores",
    "JudgeReport",
    "DEFAULT_RUBRIC",
    "MockJudgeBackend",
    "build_judge_prompt",
    "parse_judge_response",
    "judge_notes",
]


@dataclass(frozen=True)
class Criterion:
    id: str
    name: str
    description: str


@dataclass(frozen=True)
class Rubric:
    criteria: tuple[Criterion, ...]
    scale_min: int = 1
    scale_max: int = 5


DEFAULT_RUBRIC = Rubric(
    (
        Criterion(
            "structure",
            "Structure",
            "Does the clinical note correctly follow the structured SOAP format, "
            "with distinct and appropriate content under each section "
            "(Subjective: Chief Complaint and Medical History; Objective: "
            "Examination findings and Observations; Assessment: Investigations, "
            "Diagnosis, and Summary; Plan: Treatment Plan and Patient Education)?",
        ),
        Criterion(
            "readability",
            "Readability",
            "Is the language of the clinical note clear, concise, and readable "
            "for a medical professional without excessive complexity or ambiguity?",
        ),
        Criterion(
            "completeness",
            "Completeness",
            "Does the clinical note cover all the key details described in the "
            "input lesion description and context, and address all aspects of the "
            "clinical scenario, ensuring that no critical details are overlooked?",
        ),
        Criterion(
            "medical_relevance",
            "Medical Relevance",
            "Is the clinical content of the SOAP note medically relevant, "
            "plausible, and appropriate given the input description of the skin "
            "lesion?",
        ),
    )
)


@dataclass(frozen=True)
class JudgeScores:
    scores: dict[str, int]
    feedback: dict[str, str]
    warnings: tuple[str, ...] = ()

    @property
    def total(self) -> int:
        return sum(self.scores.values())


def build_judge_prompt(
    note: SoapNote, caption: Caption, rubric: Rubric = DEFAULT_RUBRIC
) -> Prompt:
    """Embed the rendered note, the input caption, and the rubric verbatim.

    The answer format is machine-readable: one line per criterion,
    "<criterion_id>: <score> — <feedback>". The judge sees only caption and
    note (no references).
    """
    criterion_lines = [
        f"- {c.id} ({c.name}): {c.description}" for c in rubric.criteria
    ]
    answer_lines = [f"{c.id}: <score> — <one sentence of feedback>" for c in rubric.criteria]
    system = (
        "You are a strict reviewer of clinical documentation. Rate the clinical "
        f"note on each criterion below using an integer from {rubric.scale_min} "
        f"(Poor) to {rubric.scale_max} (Excellent).\n\n"
        "Criteria:\n" + "\n".join(criterion_lines) + "\n\n"
        "Reply with exactly one line per criterion, in this order and format, "
        "and nothing else:\n" + "\n".join(answer_lines)
    )
    user = f"Input case description:\n{caption.text}\n\nClinical note:\n{render_soap(note)}"
    return Prompt(system=system, user=user)


def _normalize_key(text: str) -> str:
    return re.sub(r"[\s_]+", "_", text.strip().casefold())


_LINE_SPLIT = re.compile(
    r"^\s*[-*#>]*\s*(?P<key>[^:–—-]+?)\s*[:–—-]\s*(?P<rest>.+)$"
)
_SCORE = re.compile(r"\s*\**\s*(-?\d+)(?:\s*/\s*\d+)?\s*\**\s*[-–—:.,]*\s*(?P<feedback>.*)$")


def parse_judge_response(text: str, rubric: Rubric = DEFAULT_RUBRIC) -> JudgeScores:
    """Extract one integer score per criterion, tolerating markdown noise.

    Scores outside the rubric scale clamp to the nearest bound with a warning.
    The total is always recomputed from the per-criterion scores. A criterion
    with no parseable integer raises JudgeParseError naming it.
    """
    found: dict[str, tuple[int, str]] = {}
    key_map: dict[str, str] = {}
    for criterion in rubric.criteria:
        key_map[_normalize_key(criterion.id)] = criterion.id
        key_map[_normalize_key(criterion.name)] = criterion.id

    for line in text.splitlines():
        match = _LINE_SPLIT.match(line)
        if not match:
            continue
        cid = key_map.get(_normalize_key(match.group("key").strip("*_ ")))
        if cid is None or cid in found:
            continue
        score_match = _SCORE.match(match.group("rest"))
        if not score_match:
            continue
        found[cid] = (int(score_match.group(1)), score_match.group("feedback").strip())

    scores: dict[str, int] = {}
    feedback: dict[str, str] = {}
    warnings: list[str] = []
    for criterion in rubric.criteria:
        if criterion.id not in found:
            raise JudgeParseError(
                f"no parseable score for criterion {criterion.id!r}"
            )
        raw, note_text = found[criterion.id]
        clamped = min(max(raw, rubric.scale_min), rubric.scale_max)
        if clamped != raw:
            warnings.append(f"{criterion.id}: score {raw} clamped to {clamped}")
        scores[criterion.id] = clamped
        feedback[criterion.id] = note_text
    return JudgeScores(scores=scores, feedback=feedback, warnings=tuple(warnings))


@dataclass(frozen=True)
class JudgeReport:
    scored: tuple[tuple[str, JudgeScores], ...]
    failures: tuple[tuple[str, str], ...]
    rubric: Rubric = DEFAULT_RUBRIC

    def criterion_means(self) -> dict[str, float]:
        if not self.scored:
            return {c.id: 0.0 for c in self.rubric.criteria}
        return {
            c.id: fmean(scores.scores[c.id] for _, scores in self.scored)
            for c in self.rubric.criteria
        }

    def ranking(self) -> list[tuple[str, int]]:
        """(note id, total) pairs, highest total first; ties by id."""
        return sorted(
            ((note_id, scores.total) for note_id, scores in self.scored),
            key=lambda item: (-item[1], item[0]),
        )

    def mean_total(self) -> float:
        if not self.scored:
            return 0.0
        return fmean(scores.total for _, scores in self.scored)


def judge_notes(
    notes: Sequence[tuple[str, SoapNote, Caption]],
    backend: GenerationBackend,
    rubric: Rubric = DEFAULT_RUBRIC,
) -> JudgeReport:
    """Score each note with one backend call; per-note failures don't stop the batch."""
    scored: list[tuple[str, JudgeScores]] = []
    failures: list[tuple[str, str]] = []
    for note_id, note, caption in notes:
        prompt = build_judge_prompt(note, caption, rubric)
        try:
            response = backend.complete(prompt)
            scored.append((note_id, parse_judge_response(response, rubric)))
        except (BackendError, GenerationFailed, JudgeParseError) as exc:
            failures.append((note_id, str(exc)))
    return JudgeReport(tuple(scored), tuple(failures), rubric)


class MockJudgeBackend:
    """Deterministic judge for offline runs: a fixed score per criterion."""

    name = "mock-judge"

    def __init__(self, score: int = 4, rubric: Rubric = DEFAULT_RUBRIC,
                 per_criterion: Optional[dict[str, int]] = None):
        self.score = score
        self.rubric = rubric
        self.per_criterion = per_criterion or {}

    def complete(self, prompt: Prompt) -> str:
        lines = []
        for criterion in self.rubric.criteria:
            value = self.per_criterion.get(criterion.id, self.score)
            lines.append(f"{criterion.id}: {value} — deterministic mock rating")
        return "\n".join(lines)
