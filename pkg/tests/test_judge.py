import pytest

from dermsoap import (
    Caption,
    DEFAULT_RUBRIC,
    build_judge_prompt,
    judge_notes,
    parse_judge_response,
)
from dermsoap.errors import BackendError, JudgeParseError
from dermsoap.judge import Criterion, MockJudgeBackend, Rubric
from dermsoap.soap import SoapNote

NOTE = SoapNote(
    chief_complaint="itching lesion on the forearm",
    medical_history="no prior skin cancer",
    examination="pearly papule with telangiectasia",
    observations="central crusting",
    investigations="excisional biopsy",
    diagnosis="pending histology",
    summary="suspicious ulcerated papule",
    treatment="excision with margins",
    patient_education="sun protection",
)
CAPTION = Caption("itching lesion on the forearm, biopsy performed")


def test_default_rubric_has_four_paper_criteria():
    ids = [c.id for c in DEFAULT_RUBRIC.criteria]
    assert ids == ["structure", "readability", "completeness", "medical_relevance"]
    assert DEFAULT_RUBRIC.scale_min == 1
    assert DEFAULT_RUBRIC.scale_max == 5


def test_prompt_embeds_rubric_note_and_caption():
    prompt = build_judge_prompt(NOTE, CAPTION)
    for criterion in DEFAULT_RUBRIC.criteria:
        assert criterion.description in prompt.system
        assert f"{criterion.id}:" in prompt.system
    assert "Chief Complaint: itching lesion on the forearm" in prompt.user
    assert CAPTION.text in prompt.user


def test_prompt_deterministic():
    assert build_judge_prompt(NOTE, CAPTION) == build_judge_prompt(NOTE, CAPTION)


def test_prompt_respects_custom_rubric():
    rubric = Rubric(
        (
            Criterion("clarity", "Clarity", "Is it clear?"),
            Criterion("brevity", "Brevity", "Is it brief?"),
        )
    )
    prompt = build_judge_prompt(NOTE, CAPTION, rubric)
    assert "clarity" in prompt.system and "brevity" in prompt.system
    for criterion in DEFAULT_RUBRIC.criteria:
        assert criterion.description not in prompt.system


def test_parse_perfect_score():
    text = (
        "structure: 5 — clear\n"
        "readability: 5 — fine\n"
        "completeness: 5 — full\n"
        "medical_relevance: 5 — apt\n"
    )
    scores = parse_judge_response(text)
    assert scores.total == 20
    assert scores.feedback["structure"] == "clear"
    assert scores.warnings == ()


def test_parse_clamps_out_of_range():
    text = (
        "structure: 7 - too enthusiastic\n"
        "readability: 0 — harsh\n"
        "completeness: 3 — fine\n"
        "medical_relevance: 4 — fine\n"
    )
    scores = parse_judge_response(text)
    assert scores.scores["structure"] == 5
    assert scores.scores["readability"] == 1
    assert len(scores.warnings) == 2
    assert scores.total == 5 + 1 + 3 + 4


def test_parse_missing_criterion_names_it():
    text = "structure: 5 — ok\nreadability: 4 — ok\ncompleteness: 4 — ok\n"
    with pytest.raises(JudgeParseError) as err:
        parse_judge_response(text)
    assert "medical_relevance" in str(err.value)


def test_parse_tolerates_markdown_and_name_variants():
    text = (
        "- **Structure**: 4 — solid\n"
        "* Readability — 5: crisp\n"
        "**completeness:** 3/5 — missing details\n"
        "Medical Relevance: 4 — appropriate\n"
    )
    scores = parse_judge_response(text)
    assert scores.scores == {
        "structure": 4,
        "readability": 5,
        "completeness": 3,
        "medical_relevance": 4,
    }


def test_parse_ignores_reported_total():
    text = (
        "structure: 4 — a\n"
        "readability: 4 — b\n"
        "completeness: 4 — c\n"
        "medical_relevance: 4 — d\n"
        "total: 99\n"
    )
    assert parse_judge_response(text).total == 16


def test_total_always_recomputed_sum():
    backend = MockJudgeBackend(per_criterion={"structure": 5, "readability": 3,
                                              "completeness": 2, "medical_relevance": 4})
    scores = parse_judge_response(backend.complete(build_judge_prompt(NOTE, CAPTION)))
    assert scores.total == sum(scores.scores.values()) == 14


class FailOnSecond:
    name = "flaky-judge"

    def __init__(self):
        self.calls = 0
        self.inner = MockJudgeBackend()

    def complete(self, prompt):
        self.calls += 1
        if self.calls == 2:
            raise BackendError("judge offline", kind="transport")
        return self.inner.complete(prompt)


def test_judge_notes_means_and_totals():
    notes = [(f"n{i}", NOTE, CAPTION) for i in range(3)]
    report = judge_notes(notes, MockJudgeBackend(score=4))
    assert [scores.total for _, scores in report.scored] == [16, 16, 16]
    assert report.criterion_means() == {
        "structure": 4.0, "readability": 4.0, "completeness": 4.0, "medical_relevance": 4.0,
    }
    assert report.mean_total() == 16.0


def test_judge_notes_continues_past_failures():
    notes = [("a", NOTE, CAPTION), ("b", NOTE, CAPTION), ("c", NOTE, CAPTION)]
    report = judge_notes(notes, FailOnSecond())
    assert len(report.scored) == 2
    assert [nid for nid, _ in report.failures] == ["b"]


def test_ranking_sorted_descending_then_id():
    class VariedJudge:
        name = "varied"

        def __init__(self):
            self.queue = [2, 5, 5]

        def complete(self, prompt):
            value = self.queue.pop(0)
            return "\n".join(
                f"{c.id}: {value} — x" for c in DEFAULT_RUBRIC.criteria
            )

    report = judge_notes(
        [("low", NOTE, CAPTION), ("b_high", NOTE, CAPTION), ("a_high", NOTE, CAPTION)],
        VariedJudge(),
    )
    assert report.ranking() == [("a_high", 20), ("b_high", 20), ("low", 8)]


def test_exhaustive_scale_parse_small():
    # the full 625-combination sweep lives in the acceptance suite
    for a in (1, 5):
        for b in (1, 5):
            text = (
                f"structure: {a} — w\nreadability: {b} — x\n"
                f"completeness: {a} — y\nmedical_relevance: {b} — z\n"
            )
            scores = parse_judge_response(text)
            assert scores.total == 2 * a + 2 * b
