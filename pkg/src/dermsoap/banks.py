"""Descriptor banks: curated concept phrases per lesion class."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

from .dataset import LesionClass
from .errors import BankError

__all__ = ["DescriptorBank", "load_bank"]


@dataclass(frozen=True)
class DescriptorBank:
    """Immutable map of lesion class to its concept phrases.

    A bank must cover all six classes, with at least one phrase per class and
    no duplicate phrases within a class.
    """

    entries: Mapping[LesionClass, tuple[str, ...]]

    def __post_init__(self):
        missing = [cls.code for cls in LesionClass if cls not in self.entries]
        if missing:
            raise BankError(f"descriptor bank missing classes: {', '.join(missing)}")
        for cls, phrases in self.entries.items():
            cleaned = tuple(p.strip() for p in phrases)
            if not cleaned or any(not p for p in cleaned):
                raise BankError(f"class {cls.code} needs at least one non-empty phrase")
            if len(set(cleaned)) != len(cleaned):
                raise BankError(f"class {cls.code} has duplicate phrases")
        object.__setattr__(
            self,
            "entries",
            {cls: tuple(p.strip() for p in phrases) for cls, phrases in self.entries.items()},
        )

    @property
    def classes(self) -> tuple[LesionClass, ...]:
        return tuple(cls for cls in LesionClass if cls in self.entries)

    def __contains__(self, condition: LesionClass) -> bool:
        return condition in self.entries

    def phrases(self, condition: LesionClass) -> tuple[str, ...]:
        if condition not in self.entries:
            raise BankError(f"no descriptor bank entry for {condition.code}")
        return self.entries[condition]


def load_bank(path) -> DescriptorBank:
    """Load a bank file: JSON object mapping class code to {name, phrases}."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict):
        raise BankError("descriptor bank file must contain a JSON object")
    entries: dict[LesionClass, tuple[str, ...]] = {}
    for code, body in payload.items():
        try:
            cls = LesionClass.parse(code)
        except ValueError as exc:
            raise BankError(str(exc)) from exc
        phrases = body.get("phrases") if isinstance(body, dict) else body
        if not isinstance(phrases, list):
            raise BankError(f"class {code}: expected a list of phrases")
        entries[cls] = tuple(str(p) for p in phrases)
    return DescriptorBank(entries)
