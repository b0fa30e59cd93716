"""Structured SOAP note model: parse, render, validate, lint.

The canonical wire format is plain text with one header line per section
followed by one "Label: value" line per field:

    Subjective:
    Chief Complaint: ...
    Medical History: ...

    Objective:
    Examination Findings: ...
    Observations: ...

    Assessment:
    Investigations: ...
    Diagnosis: ...
    Summary: ...

    Plan:
    Treatment Plan: ...
    Patient Education: ...

Parsing is deliberately forgiving: headers match case-insensitively,
markdown decoration ("## Subjective", "**Plan:**", bullets) is tolerated,
and lines that carry no recognized label fold into the field above them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields
from enum import Enum
from typing import TYPE_CHECKING, Optional

from .errors import ParseError

if TYPE_CHECKING:
    from .banks import DescriptorBank

__all__ = [
    "SectionKind",
    "SoapNote",
    "Lint",
    "ValidationReport",
    "SECTION_FIELDS",
    "FIELD_PATHS",
    "parse_soap",
    "render_soap",
    "validate_soap",
]


class SectionKind(Enum):
    """The four sections, in canonical order."""

    SUBJECTIVE = "Subjective"
    OBJECTIVE = "Objective"
    ASSESSMENT = "Assessment"
    PLAN = "Plan"

    @property
    def label(self) -> str:
        return self.value


# (attribute on SoapNote, rendered label), in schema order per section.
SECTION_FIELDS: dict[SectionKind, tuple[tuple[str, str], ...]] = {
    SectionKind.SUBJECTIVE: (
        ("chief_complaint", "Chief Complaint"),
        ("medical_history", "Medical History"),
    ),
    SectionKind.OBJECTIVE: (
        ("examination", "Examination Findings"),
        ("observations", "Observations"),
    ),
    SectionKind.ASSESSMENT: (
        ("investigations", "Investigations"),
        ("diagnosis", "Diagnosis"),
        ("summary", "Summary"),
    ),
    SectionKind.PLAN: (
        ("treatment", "Treatment Plan"),
        ("patient_education", "Patient Education"),
    ),
}

FIELD_PATHS: tuple[str, ...] = tuple(
    f"{kind.name.lower()}.{attr}" for kind in SectionKind for attr, _ in SECTION_FIELDS[kind]
)

_ATTR_TO_PATH = {path.split(".", 1)[1]: path for path in FIELD_PATHS}
_SECTION_BY_NAME = {kind.label.casefold(): kind for kind in SectionKind}
_FIELD_BY_LABEL = {
    kind: {label.casefold(): attr for attr, label in pairs}
    for kind, pairs in SECTION_FIELDS.items()
}

# Leading bullets / markdown heading markers / list numbers before a header word.
_LEAD_DECOR = re.compile(r"^[\s>#*+\-]*(?:\d+[.)]\s+)?")
_EDGE_MARKS = re.compile(r"^[*_\s]+|[*_:\s]+$")


@dataclass(frozen=True)
class SoapNote:
    """A nine-field SOAP note. Field values are stored stripped of outer whitespace."""

    chief_complaint: str = ""
    medical_history: str = ""
    examination: str = ""
    observations: str = ""
    investigations: str = ""
    diagnosis: str = ""
    summary: str = ""
    treatment: str = ""
    patient_education: str = ""

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, getattr(self, f.name).strip())

    def section_text(self, kind: SectionKind) -> str:
        """Non-empty field values of one section, in schema order, single-space joined."""
        parts = [getattr(self, attr) for attr, _ in SECTION_FIELDS[kind]]
        return " ".join(p for p in parts if p)

    def missing_fields(self) -> tuple[str, ...]:
        return tuple(
            path for path in FIELD_PATHS if not getattr(self, path.split(".", 1)[1])
        )

    def is_complete(self) -> bool:
        return not self.missing_fields()

    def to_fields(self) -> dict[str, str]:
        """Keyed document form: one entry per dotted field path."""
        return {path: getattr(self, path.split(".", 1)[1]) for path in FIELD_PATHS}

    @classmethod
    def from_fields(cls, mapping: dict[str, str]) -> "SoapNote":
        values = {}
        for path, value in mapping.items():
            attr = path.split(".", 1)[1] if "." in path else path
            if attr not in _ATTR_TO_PATH:
                raise KeyError(f"unknown SOAP field {path!r}")
            values[attr] = value
        return cls(**values)


@dataclass(frozen=True)
class Lint:
    code: str
    field: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    complete: bool
    missing_fields: tuple[str, ...]
    lints: tuple[Lint, ...]


def _split_header(line: str) -> tuple[str, str]:
    """Return (candidate header text, remainder after a colon) for one line."""
    text = _LEAD_DECOR.sub("", line)
    head, sep, rest = text.partition(":")
    head = _EDGE_MARKS.sub("", head)
    if not sep:
        # A bare "## Subjective" style header has no colon and no remainder.
        return head, ""
    # "**Label:** value" leaves the bold closer at the start of the remainder;
    # drop it only when detached from the value so bolded values survive.
    rest = re.sub(r"^[*_]+(\s|$)", r"\1", rest.strip())
    return head, rest.strip()


def parse_soap(text: str) -> SoapNote:
    """Parse free text into a SoapNote.

    Text before the first recognized section header is ignored. A field label
    is recognized only inside its own section; anything else on a content line
    is appended to the most recent field (or the section's first field when no
    label has been seen yet).

    Raises ParseError when none of the four section headers is present.
    """
    parts: dict[str, list[str]] = {
        attr: [] for kind in SectionKind for attr, _ in SECTION_FIELDS[kind]
    }
    section: Optional[SectionKind] = None
    current_attr: Optional[str] = None
    seen_sections: set[SectionKind] = set()

    def append_content(content: str) -> None:
        if section is None or not content:
            return
        target = current_attr or SECTION_FIELDS[section][0][0]
        parts[target].append(content)

    for raw_line in text.splitlines():
        line = raw_line.rstrip()
        if not line.strip():
            continue
        head, rest = _split_header(line)
        head_key = head.casefold()

        matched_section = _SECTION_BY_NAME.get(head_key)
        if matched_section is not None:
            section = matched_section
            seen_sections.add(matched_section)
            current_attr = None
            append_content(rest)
            continue

        if section is not None:
            attr = _FIELD_BY_LABEL[section].get(head_key)
            if attr is not None:
                current_attr = attr
                if rest:
                    parts[attr].append(rest)
                continue
            append_content(line.strip())

    if not seen_sections:
        raise ParseError("no SOAP section headers found")

    return SoapNote(**{attr: "\n".join(chunks) for attr, chunks in parts.items()})


def render_soap(note: SoapNote) -> str:
    """Render the canonical plain-text layout; byte-identical for equal notes."""
    blocks = []
    for kind in SectionKind:
        lines = [f"{kind.label}:"]
        for attr, label in SECTION_FIELDS[kind]:
            lines.append(f"{label}: {getattr(note, attr)}".rstrip())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def validate_soap(note: SoapNote, bank: "Optional[DescriptorBank]" = None) -> ValidationReport:
    """Report missing fields and, when a descriptor bank is given, placement lints.

    The DIAGNOSIS_IN_CHIEF_COMPLAINT lint fires when a condition's class name
    or code appears (case-insensitively, on word boundaries) in the chief
    complaint, where only presenting symptoms belong.
    """
    missing = note.missing_fields()
    lints: list[Lint] = []
    if bank is not None and note.chief_complaint:
        for condition in bank.classes:
            matched = [
                term
                for term in (condition.full_name, condition.code)
                if re.search(rf"\b{re.escape(term)}\b", note.chief_complaint, re.IGNORECASE)
            ]
            if matched:
                lints.append(
                    Lint(
                        code="DIAGNOSIS_IN_CHIEF_COMPLAINT",
                        field="subjective.chief_complaint",
                        message=(
                            f"diagnosis term(s) {', '.join(repr(t) for t in matched)} "
                            "appear in the chief complaint"
                        ),
                    )
                )
    return ValidationReport(
        complete=not missing, missing_fields=missing, lints=tuple(lints)
    )
