"""Completion backends behind /generate.

The template generator is a deterministic offline stand-in that always emits
a fully labeled SOAP note, which keeps end-to-end pipeline runs possible with
no hosted model. The proxy generator forwards to any OpenAI-style chat
completions endpoint.
"""

from __future__ import annotations

from typing import Optional, Protocol

import requests

CASE_MARKER = "Case description:"


class Generator(Protocol):
    name: str

    def generate(self, system: str, user: str, image_ref: Optional[str]) -> str: ...


class TemplateGenerator:
    """Deterministic SOAP-shaped completion derived from the request text."""

    name = "template"

    def generate(self, system: str, user: str, image_ref: Optional[str]) -> str:
        case = user
        marker = user.rfind(CASE_MARKER)
        if marker >= 0:
            case = user[marker + len(CASE_MARKER):]
        case = case.strip().split("\n\n", 1)[0].strip() or "an unspecified skin lesion"
        lowered = case.lower()
        symptoms = [
            phrase
            for phrase in ("itching", "bleeding", "pain", "growth", "changes in appearance")
            if phrase in lowered
        ]
        complaint = ", ".join(symptoms) if symptoms else "a skin lesion under review"
        biopsied = "biopsy" in lowered and "no biopsy" not in lowered
        image_line = f" Image reference on file: {image_ref}." if image_ref else ""
        return (
            "Subjective:\n"
            f"Chief Complaint: Patient reports {complaint}.\n"
            "Medical History: No additional history supplied with this request.\n\n"
            "Objective:\n"
            f"Examination Findings: {case}\n"
            f"Observations: Morphology recorded as described.{image_line}\n\n"
            "Assessment:\n"
            "Investigations: "
            + ("Histopathology available from biopsy.\n" if biopsied
               else "Clinical examination only; no histology on file.\n")
            + "Diagnosis: Dermatologic lesion requiring correlation.\n"
            "Summary: Assessment generated from the supplied case description.\n\n"
            "Plan:\n"
            "Treatment Plan: Dermatology review with management per findings.\n"
            "Patient Education: Sun protection and prompt reporting of changes.\n"
        )


class ProxyGenerator:
    """Forwards generation to a hosted chat-completions API."""

    name = "proxy"

    def __init__(self, url: str, model: Optional[str] = None,
                 api_key: Optional[str] = None, timeout: float = 120.0):
        self.url = url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self._session = requests.Session()

    def generate(self, system: str, user: str, image_ref: Optional[str]) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        if self.model:
            payload["model"] = self.model
        resp = self._session.post(
            self.url + "/chat/completions", json=payload,
            headers=headers, timeout=self.timeout,
        )
        resp.raise_for_status()
        data = resp.json()
        return data["choices"][0]["message"]["content"] or ""


def build_generator(config) -> Generator:
    if config.generator == "template":
        return TemplateGenerator()
    if config.generator == "proxy":
        if not config.upstream_url:
            raise ValueError("proxy generator needs SIDECAR_UPSTREAM_URL")
        return ProxyGenerator(
            config.upstream_url, config.upstream_model, config.upstream_api_key
        )
    raise ValueError(f"unknown generator kind {config.generator!r}")
