"""Prompt building, generation backends, weak-supervision synthesis, export.

Backends are anything with ``name`` and ``complete(prompt) -> str``. A
deterministic mock ships in-tree so the whole pipeline runs offline; the
remote backend speaks a small JSON protocol that any conforming service
(including the bundled sidecar) can serve.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Optional, Protocol, Sequence

import requests

from .dataset import Caption, CaptionSource, CaptionTemplate, DEFAULT_TEMPLATE, LesionRecord, caption_from_record
from .embeddings import EmbeddingProvider
from .errors import BackendError, GenerationFailed, ParseError, PipelineAborted
from .retrieval import ContextBlock, VectorIndex, assemble_context, query
from .soap import SoapNote, parse_soap, render_soap

__all__ = [
    "Prompt",
    "GenerationBackend",
    "MockSoapBackend",
    "RemoteBackend",
    "TrainingTriple",
    "Provenance",
    "SynthesisConfig",
    "SynthesisResult",
    "build_soap_prompt",
    "generate_note",
    "synthesize_weak_dataset",
    "export_training",
    "read_training",
]


@dataclass(frozen=True)
class Prompt:
    system: str
    user: str
    image_ref: Optional[str] = None

    def __post_init__(self):
        if not self.user:
            raise ValueError("prompt user text must be non-empty")


class GenerationBackend(Protocol):
    name: str

    def complete(self, prompt: Prompt) -> str: ...


SOAP_SYSTEM_PROMPT = (
    "You are a clinical documentation assistant. Write a structured SOAP note "
    "for the case described by the user. Respond with exactly these four "
    "section headers and nine labeled fields, each on its own line, and "
    "nothing else:\n\n"
    "Subjective:\n"
    "Chief Complaint: <text>\n"
    "Medical History: <text>\n\n"
    "Objective:\n"
    "Examination Findings: <text>\n"
    "Observations: <text>\n\n"
    "Assessment:\n"
    "Investigations: <text>\n"
    "Diagnosis: <text>\n"
    "Summary: <text>\n\n"
    "Plan:\n"
    "Treatment Plan: <text>\n"
    "Patient Education: <text>\n\n"
    "Fill every field with clinically appropriate prose. Keep the patient's "
    "presenting symptoms in the Chief Complaint and state the diagnosis only "
    "under Assessment. Ground statements in the reference material when it is "
    "relevant."
)

CONTEXT_HEADER = "Reference material:"
CAPTION_HEADER = "Case description:"

REPAIR_INSTRUCTION = (
    "Your previous reply was not a valid structured note. Respond again using "
    "exactly the four section headers and nine field labels from the "
    "instructions, each on its own line, with every field filled."
)


def build_soap_prompt(caption: Caption, context: ContextBlock) -> Prompt:
    """Deterministic prompt: retrieval context (if any) followed by the caption."""
    parts = []
    if context.text:
        parts.append(f"{CONTEXT_HEADER}\n{context.text}")
    parts.append(f"{CAPTION_HEADER}\n{caption.text}")
    return Prompt(system=SOAP_SYSTEM_PROMPT, user="\n\n".join(parts))


def generate_note(backend: GenerationBackend, prompt: Prompt, retries: int = 2) -> SoapNote:
    """Call the backend and parse; retry malformed or incomplete output.

    Keeps the most complete candidate across attempts. Raises GenerationFailed
    only when every attempt yields text with no recognizable section at all.
    """
    if retries < 0:
        raise ValueError("retries must be >= 0")
    best: Optional[SoapNote] = None
    best_filled = -1
    attempt_prompt = prompt
    for attempt in range(retries + 1):
        text = backend.complete(attempt_prompt)
        try:
            note = parse_soap(text)
        except ParseError:
            note = None
        if note is not None:
            filled = 9 - len(note.missing_fields())
            if filled > best_filled:
                best, best_filled = note, filled
            if note.is_complete():
                return note
        if attempt < retries:
            attempt_prompt = replace(prompt, user=f"{prompt.user}\n\n{REPAIR_INSTRUCTION}")
    if best is None:
        raise GenerationFailed(
            f"backend {backend.name!r} produced no recognizable SOAP sections "
            f"in {retries + 1} attempts"
        )
    return best


class MockSoapBackend:
    """Deterministic offline backend: templates a complete note from the caption.

    The note text is a pure function of the prompt's case description, so
    stub-provider pipelines are reproducible byte for byte.
    """

    name = "mock-soap"

    _SYMPTOM_WORDS = (
        "itching",
        "bleeding",
        "pain",
        "growth",
        "changes in appearance",
        "raised surface",
    )

    def complete(self, prompt: Prompt) -> str:
        caption = self._extract_caption(prompt.user)
        symptoms = [w for w in self._SYMPTOM_WORDS if w in caption.lower()]
        symptom_clause = _join_list(symptoms) if symptoms else "a skin lesion of concern"
        biopsied = "biopsy" in caption.lower() and "no biopsy" not in caption.lower()
        note = SoapNote(
            chief_complaint=f"Patient presents with {symptom_clause}.",
            medical_history="No prior dermatologic history documented for this lesion.",
            examination=caption,
            observations="Lesion morphology and distribution noted as described above.",
            investigations=(
                "Histopathology obtained via biopsy."
                if biopsied
                else "Clinical and dermoscopic examination; no biopsy on record."
            ),
            diagnosis="Dermatologic lesion requiring clinicopathologic correlation.",
            summary="Findings are consistent with the presentation described in the case.",
            treatment="Dermatology follow-up with monitoring and management as indicated.",
            patient_education="Advise sun protection and prompt reporting of any lesion changes.",
        )
        return render_soap(note)

    @staticmethod
    def _extract_caption(user_text: str) -> str:
        marker = f"{CAPTION_HEADER}\n"
        pos = user_text.rfind(marker)
        body = user_text[pos + len(marker):] if pos >= 0 else user_text
        # Drop a trailing repair instruction if one was appended.
        return body.split("\n\n", 1)[0].strip()


def _join_list(items: Sequence[str]) -> str:
    items = list(items)
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + " and " + items[-1]


class RemoteBackend:
    """HTTP backend: POST {"system", "user", "image_ref"?} -> {"text": ...}."""

    def __init__(
        self,
        base_url: str,
        name: str = "remote",
        timeout: float = 60.0,
        session: Optional[requests.Session] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.name = name
        self.timeout = timeout
        self._session = session or requests.Session()

    def complete(self, prompt: Prompt) -> str:
        payload: dict = {"system": prompt.system, "user": prompt.user}
        if prompt.image_ref:
            payload["image_ref"] = prompt.image_ref
        try:
            resp = self._session.post(
                self.base_url + "/generate", json=payload, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise BackendError(f"backend request failed: {exc}", kind="transport") from exc
        if resp.status_code != 200:
            raise BackendError(
                f"backend returned status {resp.status_code}", kind="status"
            )
        try:
            text = resp.json().get("text", "")
        except ValueError as exc:
            raise BackendError(f"backend returned invalid JSON: {exc}", kind="status") from exc
        if not text.strip():
            raise BackendError("backend returned an empty completion", kind="empty")
        return text


@dataclass(frozen=True)
class Provenance:
    backend_name: str
    chunk_ids: tuple[str, ...]
    timestamp: str


@dataclass(frozen=True)
class TrainingTriple:
    image_ref: str
    caption: Caption
    note: SoapNote
    provenance: Provenance

    def is_complete(self) -> bool:
        return self.note.is_complete()


@dataclass(frozen=True)
class SynthesisFailure:
    index: int
    lesion_id: str
    error: str


@dataclass(frozen=True)
class SynthesisResult:
    triples: tuple[TrainingTriple, ...]
    failures: tuple[SynthesisFailure, ...]


@dataclass(frozen=True)
class SynthesisConfig:
    provider: EmbeddingProvider
    k: int = 4
    token_budget: int = 512
    retries: int = 2
    failure_threshold: float = 0.25
    concurrency: int = 1
    caption_template: CaptionTemplate = DEFAULT_TEMPLATE
    run_timestamp: Optional[str] = None  # fixed stamp for reproducible runs


def synthesize_weak_dataset(
    records: Sequence[LesionRecord],
    index: VectorIndex,
    backend: GenerationBackend,
    cfg: SynthesisConfig,
) -> SynthesisResult:
    """Caption, retrieve, prompt, and generate one training triple per record.

    Per-record failures are recorded and the pipeline continues; the run
    aborts only when the failure rate exceeds ``cfg.failure_threshold``.
    Triples come back in input order regardless of concurrency.
    """
    stamp = cfg.run_timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
    sources = index.sources

    def synthesize_one(record: LesionRecord) -> TrainingTriple:
        caption = caption_from_record(record, cfg.caption_template)
        hits = query(index, caption.text, cfg.k, cfg.provider)
        context = assemble_context(caption, hits, cfg.token_budget, sources)
        prompt = replace(build_soap_prompt(caption, context), image_ref=record.image_ref or None)
        note = generate_note(backend, prompt, cfg.retries)
        return TrainingTriple(
            image_ref=record.image_ref,
            caption=caption,
            note=note,
            provenance=Provenance(backend.name, context.cited, stamp),
        )

    outcomes: list = [None] * len(records)
    if cfg.concurrency > 1:
        with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
            futures = {pool.submit(synthesize_one, rec): i for i, rec in enumerate(records)}
            for future, i in futures.items():
                try:
                    outcomes[i] = future.result()
                except Exception as exc:
                    outcomes[i] = SynthesisFailure(i, records[i].lesion_id, str(exc))
    else:
        for i, record in enumerate(records):
            try:
                outcomes[i] = synthesize_one(record)
            except Exception as exc:
                outcomes[i] = SynthesisFailure(i, record.lesion_id, str(exc))

    triples = tuple(o for o in outcomes if isinstance(o, TrainingTriple))
    failures = tuple(o for o in outcomes if isinstance(o, SynthesisFailure))
    if records and len(failures) / len(records) > cfg.failure_threshold:
        raise PipelineAborted(
            f"{len(failures)}/{len(records)} records failed, above the "
            f"{cfg.failure_threshold:.0%} threshold"
        )
    return SynthesisResult(triples, failures)


def export_training(triples: Sequence[TrainingTriple], path) -> int:
    """Write one JSON document per line (atomically); returns the line count."""
    lines = []
    for triple in triples:
        lines.append(
            json.dumps(
                {
                    "image_ref": triple.image_ref,
                    "caption": {"text": triple.caption.text, "source": triple.caption.source.value},
                    "note": triple.note.to_fields(),
                    "provenance": {
                        "backend_name": triple.provenance.backend_name,
                        "chunk_ids": list(triple.provenance.chunk_ids),
                        "timestamp": triple.provenance.timestamp,
                    },
                },
                sort_keys=True,
                ensure_ascii=False,
            )
        )
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")
    os.replace(tmp, path)
    return len(lines)


def read_training(path) -> list[TrainingTriple]:
    """Inverse of export_training."""
    triples = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            doc = json.loads(line)
            triples.append(
                TrainingTriple(
                    image_ref=doc["image_ref"],
                    caption=Caption(
                        doc["caption"]["text"], CaptionSource(doc["caption"]["source"])
                    ),
                    note=SoapNote.from_fields(doc["note"]),
                    provenance=Provenance(
                        backend_name=doc["provenance"]["backend_name"],
                        chunk_ids=tuple(doc["provenance"]["chunk_ids"]),
                        timestamp=doc["provenance"]["timestamp"],
                    ),
                )
            )
    return triples
