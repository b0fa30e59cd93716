"""Evaluation metrics: lexical, character-level, embedding-based, and the
caption/concept alignment scores.

All metrics are pure functions of their inputs (plus an embedding provider
where noted). Definitions used here:

* rouge_n / rouge_l: clipped n-gram overlap and longest common subsequence
  over case-folded tokens, reported as precision/recall/F1.
* meteor: one-to-one unigram alignment (exact stage, optional suffix-stem
  stage), Fmean = P*R / (alpha*P + (1-alpha)*R), fragmentation penalty
  gamma * (chunks/matches)**beta.
* chrf_pp: clipped precision/recall for character n-grams (orders
  1..char_order, whitespace removed) and word n-grams (orders 1..word_order),
  averaged over all orders with any n-grams, combined as an F-beta and scaled
  to [0, 100].
* embed_f1: greedy max-cosine token matching in embedding space (no idf, no
  baseline rescaling).
* ccs: cosine between the caption embedding and each section embedding.
* med_concept_eval: per-section average/max cosine against a descriptor bank.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from statistics import fmean
from typing import Sequence

from .banks import DescriptorBank
from .dataset import Caption, LesionClass
from .embeddings import EmbeddingProvider, cosine, cosine_matrix
from .errors import BankError
from .soap import SectionKind, SoapNote
from .textnorm import tokenize

__all__ = [
    "PRF",
    "MeteorParams",
    "ChrfParams",
    "SectionScore",
    "CcsResult",
    "tokenize",
    "rouge_n",
    "rouge_l",
    "meteor",
    "chrf_pp",
    "embed_f1",
    "ccs",
    "med_concept_eval",
]


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "PRF":
        if precision + recall == 0.0:
            return cls(precision, recall, 0.0)
        return cls(precision, recall, 2.0 * precision * recall / (precision + recall))


ZERO_PRF = PRF(0.0, 0.0, 0.0)


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped_overlap(cand: Counter, ref: Counter) -> int:
    return sum(min(count, ref[gram]) for gram, count in cand.items())


def rouge_n(candidate: str, reference: str, n: int) -> PRF:
    """Clipped n-gram overlap precision/recall/F1."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cand = _ngram_counts(tokenize(candidate), n)
    ref = _ngram_counts(tokenize(reference), n)
    if not cand or not ref:
        return ZERO_PRF
    overlap = _clipped_overlap(cand, ref)
    return PRF.from_pr(overlap / sum(cand.values()), overlap / sum(ref.values()))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[-1]))
        previous = current
    return previous[-1]


def rouge_l(candidate: str, reference: str) -> PRF:
    """Longest-common-subsequence precision/recall/F1 over tokens."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return ZERO_PRF
    lcs = _lcs_length(cand, ref)
    return PRF.from_pr(lcs / len(cand), lcs / len(ref))


@dataclass(frozen=True)
class MeteorParams:
    alpha: float = 0.9
    beta: float = 3.0
    gamma: float = 0.5
    stemming: bool = False

    def validate(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")


_STEM_SUFFIXES = ("ing", "edly", "ies", "ed", "es", "ly", "s")


def _stem(token: str) -> str:
    for suffix in _STEM_SUFFIXES:
        if token.endswith(suffix) and len(token) - len(suffix) >= 3:
            return token[: -len(suffix)]
    return token


def _align_unigrams(cand: list[str], ref: list[str], stemming: bool) -> list[tuple[int, int]]:
    """One-to-one alignment: each candidate token binds to the earliest
    unmatched reference occurrence, exact matches first, then stems."""
    ref_used = [False] * len(ref)
    pairs: list[tuple[int, int]] = []
    cand_used: set[int] = set()
    for ci, token in enumerate(cand):
        for ri, rtoken in enumerate(ref):
            if not ref_used[ri] and rtoken == token:
                pairs.append((ci, ri))
                ref_used[ri] = True
                cand_used.add(ci)
                break
    if stemming:
        for ci, token in enumerate(cand):
            if ci in cand_used:
                continue
            stem = _stem(token)
            for ri, rtoken in enumerate(ref):
                if not ref_used[ri] and _stem(rtoken) == stem:
                    pairs.append((ci, ri))
                    ref_used[ri] = True
                    break
    pairs.sort()
    return pairs


def _chunk_count(pairs: list[tuple[int, int]]) -> int:
    chunks = 0
    prev = None
    for ci, ri in pairs:
        if prev is None or ci != prev[0] + 1 or ri != prev[1] + 1:
            chunks += 1
        prev = (ci, ri)
    return chunks


def meteor(candidate: str, reference: str, params: MeteorParams = MeteorParams()) -> float:
    """Alignment-based score in [0, 1]; zero when nothing matches."""
    params.validate()
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    pairs = _align_unigrams(cand, ref, params.stemming)
    matches = len(pairs)
    if matches == 0:
        return 0.0
    precision = matches / len(cand)
    recall = matches / len(ref)
    fmean_score = (precision * recall) / (params.alpha * precision + (1.0 - params.alpha) * recall)
    penalty = params.gamma * (_chunk_count(pairs) / matches) ** params.beta
    return fmean_score * (1.0 - penalty)


@dataclass(frozen=True)
class ChrfParams:
    char_order: int = 6
    word_order: int = 2
    beta: float = 2.0

    def validate(self) -> None:
        if self.char_order < 1 or self.word_order < 1:
            raise ValueError("n-gram orders must be >= 1")
        if self.beta <= 0.0:
            raise ValueError(f"beta must be > 0, got {self.beta}")


def _char_stream(text: str) -> str:
    return "".join(text.casefold().split())


def _order_pr(cand: Counter, ref: Counter) -> tuple[float, float]:
    overlap = _clipped_overlap(cand, ref)
    total_cand = sum(cand.values())
    total_ref = sum(ref.values())
    precision = overlap / total_cand if total_cand else 0.0
    recall = overlap / total_ref if total_ref else 0.0
    return precision, recall


def chrf_pp(candidate: str, reference: str, params: ChrfParams = ChrfParams()) -> float:
    """Character+word n-gram F-score in [0, 100]; identical texts score 100."""
    params.validate()
    cand_chars = _char_stream(candidate)
    ref_chars = _char_stream(reference)
    cand_words = tokenize(candidate)
    ref_words = tokenize(reference)

    precisions: list[float] = []
    recalls: list[float] = []
    for n in range(1, params.char_order + 1):
        cand = Counter(cand_chars[i : i + n] for i in range(len(cand_chars) - n + 1))
        ref = Counter(ref_chars[i : i + n] for i in range(len(ref_chars) - n + 1))
        if not cand and not ref:
            continue
        p, r = _order_pr(cand, ref)
        precisions.append(p)
        recalls.append(r)
    for n in range(1, params.word_order + 1):
        cand = _ngram_counts(cand_words, n)
        ref = _ngram_counts(ref_words, n)
        if not cand and not ref:
            continue
        p, r = _order_pr(cand, ref)
        precisions.append(p)
        recalls.append(r)

    if not precisions:
        return 0.0
    avg_p = fmean(precisions)
    avg_r = fmean(recalls)
    beta_sq = params.beta**2
    denom = beta_sq * avg_p + avg_r
    if denom == 0.0:
        return 0.0
    return 100.0 * (1.0 + beta_sq) * avg_p * avg_r / denom


def embed_f1(candidate: str, reference: str, provider: EmbeddingProvider) -> PRF:
    """Greedy max-cosine token matching; precision from the candidate side."""
    _, cand_vecs = provider.embed_tokens(candidate)
    _, ref_vecs = provider.embed_tokens(reference)
    if cand_vecs.shape[0] == 0 or ref_vecs.shape[0] == 0:
        return ZERO_PRF
    sims = cosine_matrix(cand_vecs, ref_vecs)
    precision = float(sims.max(axis=1).mean())
    recall = float(sims.max(axis=0).mean())
    return PRF.from_pr(precision, recall)


@dataclass(frozen=True)
class SectionScore:
    section: SectionKind
    avg_similarity: float
    max_similarity: float


@dataclass(frozen=True)
class CcsResult:
    per_section: dict[SectionKind, float]
    average: float

    def as_rows(self) -> list[tuple[str, float]]:
        rows = [(kind.label, self.per_section[kind]) for kind in SectionKind]
        rows.append(("Average Score", self.average))
        return rows


def ccs(caption: Caption, note: SoapNote, provider: EmbeddingProvider) -> CcsResult:
    """Caption/section semantic alignment: cosine per section, then the mean.

    Empty sections score 0 rather than being skipped, so a hollow note is
    penalized instead of crashing.
    """
    caption_vec = provider.embed_text(caption.text)
    per_section: dict[SectionKind, float] = {}
    for kind in SectionKind:
        section = note.section_text(kind)
        if not section.strip():
            per_section[kind] = 0.0
        else:
            per_section[kind] = cosine(caption_vec, provider.embed_text(section))
    return CcsResult(per_section, fmean(per_section.values()))


def med_concept_eval(
    cases: Sequence[SoapNote],
    condition: LesionClass,
    bank: DescriptorBank,
    provider: EmbeddingProvider,
) -> list[SectionScore]:
    """Per-section alignment of notes with a condition's descriptor bank.

    For each section: every case contributes the mean and max cosine between
    its section embedding and each bank phrase embedding; the reported
    avg_similarity is the mean of case means and max_similarity the max of
    case maxima (so max >= avg always holds).
    """
    if not cases:
        raise ValueError("med_concept_eval needs at least one case")
    if condition not in bank:
        raise BankError(f"no descriptor bank entry for {condition.code}")
    phrases = bank.phrases(condition)
    phrase_vecs = [provider.embed_text(p) for p in phrases]

    scores: list[SectionScore] = []
    for kind in SectionKind:
        case_means: list[float] = []
        case_maxes: list[float] = []
        for note in cases:
            section = note.section_text(kind)
            if not section.strip():
                sims = [0.0] * len(phrase_vecs)
            else:
                section_vec = provider.embed_text(section)
                sims = [cosine(section_vec, pv) for pv in phrase_vecs]
            case_means.append(fmean(sims))
            case_maxes.append(max(sims))
        scores.append(SectionScore(kind, fmean(case_means), max(case_maxes)))
    return scores
