import random

import pytest

from dermsoap import SoapNote, StubEmbedder, load_bank
from dermsoap.cli import _data_path

WORD_POOL = [
    "lesion", "itching", "forearm", "scaly", "patch", "border", "pigmented",
    "raised", "crusting", "tender", "bleeding", "margin", "biopsy", "excision",
    "sunscreen", "review", "stable", "growth", "surface", "dermoscopy",
    "papule", "plaque", "nodule", "examination", "follow-up", "erythema",
    "keratotic", "ulcerated", "symmetric", "irregular",
]


def random_text(rng: random.Random, min_words: int = 1, max_words: int = 8) -> str:
    return " ".join(rng.choices(WORD_POOL, k=rng.randint(min_words, max_words)))


def random_note(rng: random.Random) -> SoapNote:
    return SoapNote(
        chief_complaint=random_text(rng),
        medical_history=random_text(rng),
        examination=random_text(rng),
        observations=random_text(rng),
        investigations=random_text(rng),
        diagnosis=random_text(rng),
        summary=random_text(rng),
        treatment=random_text(rng),
        patient_education=random_text(rng),
    )


@pytest.fixture
def stub():
    return StubEmbedder()


@pytest.fixture(scope="session")
def bank():
    return load_bank(_data_path("descriptor_banks.json"))


@pytest.fixture
def rng():
    return random.Random(20240811)
