"""Lesion metadata ingestion and deterministic caption templating.

Input is a PAD-UFES-20-style CSV: one row per lesion, 26 columns mixing
demographics, anatomy, symptom flags, and an image reference. Columns the
pipeline does not model explicitly are preserved verbatim in ``extra`` so a
record can be written back to its source row.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Optional

from .errors import BackendError, SchemaError

if TYPE_CHECKING:
    from .generation import GenerationBackend

__all__ = [
    "LesionClass",
    "LesionRecord",
    "Caption",
    "CaptionSource",
    "CaptionTemplate",
    "ColumnMap",
    "RejectedRow",
    "LoadResult",
    "load_records",
    "record_to_row",
    "caption_from_record",
    "caption_via_backend",
]


class LesionClass(Enum):
    """The six lesion classes, keyed by dataset code."""

    BCC = "Basal Cell Carcinoma"
    MEL = "Melanoma"
    SCC = "Squamous Cell Carcinoma"
    ACK = "Actinic Keratosis"
    SEK = "Seborrheic Keratosis"
    NEV = "Nevus"

    @property
    def code(self) -> str:
        return self.name

    @property
    def full_name(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "LesionClass":
        key = text.strip()
        by_code = {m.name.casefold(): m for m in cls}
        by_name = {m.value.casefold(): m for m in cls}
        member = by_code.get(key.casefold()) or by_name.get(key.casefold())
        if member is None:
            raise ValueError(f"unknown lesion class {text!r}")
        return member


@dataclass(frozen=True)
class ColumnMap:
    """CSV column names for the explicitly modeled fields (PAD-UFES-20 defaults)."""

    patient_id: str = "patient_id"
    lesion_id: str = "lesion_id"
    image_ref: str = "img_id"
    diagnostic: str = "diagnostic"
    age: str = "age"
    gender: str = "gender"
    region: str = "region"
    diameter_1: str = "diameter_1"
    diameter_2: str = "diameter_2"
    itch: str = "itch"
    grew: str = "grew"
    hurt: str = "hurt"
    changed: str = "changed"
    bleed: str = "bleed"
    elevation: str = "elevation"
    biopsed: str = "biopsed"

    REQUIRED = ("diagnostic", "image_ref")


FLAG_FIELDS = ("itch", "grew", "hurt", "changed", "bleed", "elevation")


@dataclass(frozen=True, eq=True)
class LesionRecord:
    patient_id: str
    lesion_id: str
    image_ref: str
    diagnostic: LesionClass
    age: int = 0
    gender: str = ""
    region: str = ""
    diameter_1: Optional[float] = None
    diameter_2: Optional[float] = None
    itch: Optional[bool] = None
    grew: Optional[bool] = None
    hurt: Optional[bool] = None
    changed: Optional[bool] = None
    bleed: Optional[bool] = None
    elevation: Optional[bool] = None
    biopsed: bool = False
    extra: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class RejectedRow:
    line_no: int
    reason: str
    raw: dict[str, str]


@dataclass(frozen=True)
class LoadResult:
    records: tuple[LesionRecord, ...]
    rejects: tuple[RejectedRow, ...]


def _parse_flag(raw: str) -> Optional[bool]:
    value = raw.strip().casefold()
    if value == "true":
        return True
    if value == "false":
        return False
    return None  # UNK, blank, or anything unexpected


def _flag_to_cell(value: Optional[bool]) -> str:
    if value is None:
        return "UNK"
    return "TRUE" if value else "FALSE"


def _parse_diameter(raw: str) -> Optional[float]:
    value = raw.strip()
    if not value:
        return None
    d = float(value)
    if d < 0:
        raise ValueError(f"negative diameter {raw!r}")
    return d


def load_records(path, schema: Optional[ColumnMap] = None) -> LoadResult:
    """Load lesion records from a CSV file, in file order.

    Rows whose diagnostic does not parse to one of the six class codes are
    collected into ``rejects`` (with their file line number) instead of being
    dropped. Raises SchemaError when the diagnostic or image-id column is
    missing from the header.
    """
    schema = schema or ColumnMap()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for canonical in ColumnMap.REQUIRED:
            column = getattr(schema, canonical)
            if column not in header:
                raise SchemaError(f"required column {column!r} ({canonical}) not in header")

        named_columns = {
            getattr(schema, f.name) for f in schema.__dataclass_fields__.values()
        } & set(header)

        records: list[LesionRecord] = []
        rejects: list[RejectedRow] = []
        for line_no, row in enumerate(reader, start=2):
            try:
                diagnostic = LesionClass.parse(row.get(schema.diagnostic) or "")
            except ValueError as exc:
                rejects.append(RejectedRow(line_no, str(exc), dict(row)))
                continue

            def cell(canonical: str) -> str:
                return (row.get(getattr(schema, canonical)) or "").strip()

            try:
                age = int(float(cell("age"))) if cell("age") else 0
            except ValueError:
                age = 0
            try:
                d1 = _parse_diameter(cell("diameter_1"))
                d2 = _parse_diameter(cell("diameter_2"))
            except ValueError as exc:
                rejects.append(RejectedRow(line_no, str(exc), dict(row)))
                continue

            records.append(
                LesionRecord(
                    patient_id=cell("patient_id"),
                    lesion_id=cell("lesion_id"),
                    image_ref=cell("image_ref"),
                    diagnostic=diagnostic,
                    age=max(age, 0),
                    gender=cell("gender"),
                    region=cell("region"),
                    diameter_1=d1,
                    diameter_2=d2,
                    itch=_parse_flag(cell("itch")),
                    grew=_parse_flag(cell("grew")),
                    hurt=_parse_flag(cell("hurt")),
                    changed=_parse_flag(cell("changed")),
                    bleed=_parse_flag(cell("bleed")),
                    elevation=_parse_flag(cell("elevation")),
                    biopsed=cell("biopsed").casefold() == "true",
                    extra={
                        col: (row.get(col) or "")
                        for col in header
                        if col not in named_columns
                    },
                )
            )
    return LoadResult(tuple(records), tuple(rejects))


def record_to_row(record: LesionRecord, columns: list[str], schema: Optional[ColumnMap] = None) -> dict[str, str]:
    """Render a record back to a CSV row dict covering ``columns``.

    Tri-state flags normalize to TRUE/FALSE/UNK and biopsed to TRUE/FALSE;
    every other cell round-trips verbatim.
    """
    schema = schema or ColumnMap()
    by_column = {getattr(schema, f.name): f.name for f in schema.__dataclass_fields__.values()}
    row: dict[str, str] = {}
    for col in columns:
        canonical = by_column.get(col)
        if canonical is None:
            row[col] = record.extra.get(col, "")
        elif canonical in FLAG_FIELDS:
            row[col] = _flag_to_cell(getattr(record, canonical))
        elif canonical == "biopsed":
            row[col] = "TRUE" if record.biopsed else "FALSE"
        elif canonical == "diagnostic":
            row[col] = record.diagnostic.code
        elif canonical in ("diameter_1", "diameter_2"):
            value = getattr(record, canonical)
            row[col] = "" if value is None else f"{value:g}"
        elif canonical == "age":
            row[col] = str(record.age)
        else:
            row[col] = getattr(record, canonical)
    return row


class CaptionSource(Enum):
    TEMPLATE = "template"
    BACKEND = "backend"


@dataclass(frozen=True)
class Caption:
    text: str
    source: CaptionSource = CaptionSource.TEMPLATE

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("caption text must be non-empty")


# Positive / negative phrasing per symptom flag, in fixed order.
_SYMPTOM_PHRASES = {
    "itch": "itching",
    "grew": "recent growth",
    "hurt": "pain",
    "changed": "changes in appearance",
    "bleed": "bleeding",
    "elevation": "a raised surface",
}


@dataclass(frozen=True)
class CaptionTemplate:
    """Behavior switches for the slot-filling caption template.

    ``include_diagnosis`` is off by default: captions describe the
    presentation and leave the diagnosis to the generation step.
    """

    include_demographics: bool = True
    include_diagnosis: bool = False


DEFAULT_TEMPLATE = CaptionTemplate()


def caption_from_record(record: LesionRecord, template: CaptionTemplate = DEFAULT_TEMPLATE) -> Caption:
    """Deterministic clinical caption from structured features.

    Covers site, diameters (omitted when absent), each symptom flag that is
    not unknown, and biopsy status. The lesion class never appears unless the
    template explicitly opts in.
    """
    sentences: list[str] = []

    if template.include_demographics and (record.age or record.gender):
        bits = []
        if record.age:
            bits.append(f"aged {record.age}")
        if record.gender:
            bits.append(record.gender.lower())
        sentences.append(f"Patient {', '.join(bits)}.")

    site = record.region.lower().replace("_", " ") if record.region else "an unspecified site"
    lesion = f"Skin lesion located on the {site}" if record.region else f"Skin lesion at {site}"
    if record.diameter_1 is not None and record.diameter_2 is not None:
        lesion += f", measuring {record.diameter_1:.1f} mm by {record.diameter_2:.1f} mm"
    elif record.diameter_1 is not None:
        lesion += f", measuring {record.diameter_1:.1f} mm across"
    elif record.diameter_2 is not None:
        lesion += f", measuring {record.diameter_2:.1f} mm across"
    sentences.append(lesion + ".")

    present = [p for f, p in _SYMPTOM_PHRASES.items() if getattr(record, f) is True]
    absent = [p for f, p in _SYMPTOM_PHRASES.items() if getattr(record, f) is False]
    if present:
        sentences.append(f"The patient reports {_join_and(present)}.")
    if absent:
        sentences.append(f"There is {_join_and(['no ' + p for p in absent])}.")

    sentences.append(
        "The lesion has been confirmed by biopsy."
        if record.biopsed
        else "No biopsy has been performed."
    )

    if template.include_diagnosis:
        sentences.append(
            f"Documented diagnosis: {record.diagnostic.full_name} ({record.diagnostic.code})."
        )

    return Caption(" ".join(sentences), CaptionSource.TEMPLATE)


def _join_and(items: list[str]) -> str:
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + " and " + items[-1]


_REWRITE_SYSTEM = (
    "You are a clinical scribe. Rewrite the draft lesion caption below into one "
    "fluent, clinically phrased paragraph. Keep every stated fact, add nothing, "
    "and do not guess a diagnosis."
)


def caption_via_backend(
    record: LesionRecord,
    backend: "GenerationBackend",
    template: CaptionTemplate = DEFAULT_TEMPLATE,
    fallback: bool = True,
) -> Caption:
    """Rewrite the template caption through a generation backend.

    Transport/status failures fall back to the template caption when
    ``fallback`` is enabled. An empty completion is a protocol violation and
    always raises BackendError.
    """
    from .generation import Prompt  # local import to avoid a module cycle

    draft = caption_from_record(record, template)
    features = [
        f"age: {record.age}",
        f"gender: {record.gender or 'unknown'}",
        f"region: {record.region or 'unknown'}",
        f"diameter_1_mm: {record.diameter_1 if record.diameter_1 is not None else 'unknown'}",
        f"diameter_2_mm: {record.diameter_2 if record.diameter_2 is not None else 'unknown'}",
    ]
    features += [f"{name}: {_flag_to_cell(getattr(record, name)).lower()}" for name in FLAG_FIELDS]
    features.append(f"biopsed: {'true' if record.biopsed else 'false'}")
    prompt = Prompt(
        system=_REWRITE_SYSTEM,
        user=f"Draft caption:\n{draft.text}\n\nStructured features:\n" + "\n".join(features),
        image_ref=record.image_ref or None,
    )
    try:
        text = backend.complete(prompt)
    except BackendError as exc:
        if exc.kind == "empty" or not fallback:
            raise
        return draft
    if not text.strip():
        raise BackendError("backend returned an empty completion", kind="empty")
    return Caption(text.strip(), CaptionSource.BACKEND)
