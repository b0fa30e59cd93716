"""Pipeline configuration: one YAML file, environment overrides for URLs."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .dataset import CaptionTemplate
from .embeddings import EmbeddingProvider, RemoteEmbeddingClient, StubEmbedder
from .errors import ConfigError
from .generation import GenerationBackend, MockSoapBackend, RemoteBackend
from .judge import MockJudgeBackend
from .metrics import ChrfParams, MeteorParams

__all__ = ["PipelineConfig", "load_config", "make_provider", "make_backend", "make_judge_backend"]

ENV_PROVIDER_URL = "DERMSOAP_PROVIDER_URL"
ENV_CLINICAL_PROVIDER_URL = "DERMSOAP_CLINICAL_PROVIDER_URL"
ENV_BACKEND_URL = "DERMSOAP_BACKEND_URL"

# Timestamp used for provenance when running fully deterministic (stub + mock),
# so repeated runs produce byte-identical artifacts.
DETERMINISTIC_TIMESTAMP = "1970-01-01T00:00:00+00:00"


@dataclass
class PathsConfig:
    corpus_dir: Optional[Path] = None
    corpus_manifest: Optional[Path] = None
    dataset_csv: Optional[Path] = None
    descriptor_bank: Optional[Path] = None
    output_dir: Path = Path("out")


@dataclass
class ProviderConfig:
    kind: str = "stub"  # "stub" | "remote"
    dim: int = 64
    url: Optional[str] = None
    timeout: float = 30.0


@dataclass
class BackendConfig:
    kind: str = "mock"  # "mock" | "remote"
    url: Optional[str] = None
    timeout: float = 60.0
    retries: int = 2


@dataclass
class RetrievalConfig:
    k: int = 4
    max_chunk_tokens: int = 256
    overlap: int = 32
    token_budget: int = 512


@dataclass
class MetricsConfig:
    meteor: MeteorParams = field(default_factory=MeteorParams)
    chrf: ChrfParams = field(default_factory=ChrfParams)
    # Optional BERTScore-style baseline rescaling applied in reports only;
    # raw metric values stay in [0, 1].
    rescale_baseline: Optional[float] = None


@dataclass
class SynthesisSettings:
    failure_threshold: float = 0.25
    concurrency: int = 1
    include_diagnosis_in_caption: bool = False


@dataclass
class PipelineConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    clinical_provider: Optional[ProviderConfig] = None
    backend: BackendConfig = field(default_factory=BackendConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    synthesis: SynthesisSettings = field(default_factory=SynthesisSettings)
    seed: int = 0

    def caption_template(self) -> CaptionTemplate:
        return CaptionTemplate(include_diagnosis=self.synthesis.include_diagnosis_in_caption)

    def is_deterministic(self) -> bool:
        return self.provider.kind == "stub" and self.backend.kind == "mock"

    def require_paths(self, *names: str) -> None:
        for name in names:
            value = getattr(self.paths, name)
            if value is None:
                raise ConfigError(f"config is missing required path {name!r}")
            if name != "output_dir" and not Path(value).exists():
                raise ConfigError(f"configured {name} does not exist: {value}")


def _section(raw: dict, key: str) -> dict:
    value = raw.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"config section {key!r} must be a mapping")
    return value


_KNOWN_KEYS = {
    "paths",
    "provider",
    "clinical_provider",
    "backend",
    "retrieval",
    "metrics",
    "synthesis",
    "seed",
}


def load_config(path, seed_override: Optional[int] = None) -> PipelineConfig:
    """Parse the YAML config; relative paths resolve against the config file."""
    config_path = Path(path)
    with open(config_path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError("config file must contain a YAML mapping")
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    base = config_path.parent

    def resolve(value: Optional[str]) -> Optional[Path]:
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else base / p

    paths_raw = _section(raw, "paths")
    paths = PathsConfig(
        corpus_dir=resolve(paths_raw.get("corpus_dir")),
        corpus_manifest=resolve(paths_raw.get("corpus_manifest")),
        dataset_csv=resolve(paths_raw.get("dataset_csv")),
        descriptor_bank=resolve(paths_raw.get("descriptor_bank")),
        output_dir=resolve(paths_raw.get("output_dir")) or base / "out",
    )

    def provider_from(section: dict, env_url: Optional[str]) -> ProviderConfig:
        kind = section.get("kind", "stub")
        # A remote provider without an explicit dim asks the service's /health.
        cfg = ProviderConfig(
            kind=kind,
            dim=int(section.get("dim", 64 if kind == "stub" else 0)),
            url=env_url or section.get("url"),
            timeout=float(section.get("timeout", 30.0)),
        )
        if cfg.kind not in ("stub", "remote"):
            raise ConfigError(f"provider kind must be 'stub' or 'remote', got {cfg.kind!r}")
        if cfg.kind == "remote" and not cfg.url:
            raise ConfigError("remote provider needs a url (config or environment)")
        return cfg

    provider = provider_from(_section(raw, "provider"), os.environ.get(ENV_PROVIDER_URL))
    clinical_raw = raw.get("clinical_provider")
    clinical = (
        provider_from(clinical_raw, os.environ.get(ENV_CLINICAL_PROVIDER_URL))
        if isinstance(clinical_raw, dict)
        else None
    )

    backend_raw = _section(raw, "backend")
    backend = BackendConfig(
        kind=backend_raw.get("kind", "mock"),
        url=os.environ.get(ENV_BACKEND_URL) or backend_raw.get("url"),
        timeout=float(backend_raw.get("timeout", 60.0)),
        retries=int(backend_raw.get("retries", 2)),
    )
    if backend.kind not in ("mock", "remote"):
        raise ConfigError(f"backend kind must be 'mock' or 'remote', got {backend.kind!r}")
    if backend.kind == "remote" and not backend.url:
        raise ConfigError("remote backend needs a url (config or environment)")

    retrieval_raw = _section(raw, "retrieval")
    retrieval = RetrievalConfig(
        k=int(retrieval_raw.get("k", 4)),
        max_chunk_tokens=int(retrieval_raw.get("max_chunk_tokens", 256)),
        overlap=int(retrieval_raw.get("overlap", 32)),
        token_budget=int(retrieval_raw.get("token_budget", 512)),
    )

    metrics_raw = _section(raw, "metrics")
    meteor_raw = _section(metrics_raw, "meteor") if "meteor" in metrics_raw else {}
    chrf_raw = _section(metrics_raw, "chrf") if "chrf" in metrics_raw else {}
    metrics = MetricsConfig(
        meteor=MeteorParams(
            alpha=float(meteor_raw.get("alpha", 0.9)),
            beta=float(meteor_raw.get("beta", 3.0)),
            gamma=float(meteor_raw.get("gamma", 0.5)),
            stemming=bool(meteor_raw.get("stemming", False)),
        ),
        chrf=ChrfParams(
            char_order=int(chrf_raw.get("char_order", 6)),
            word_order=int(chrf_raw.get("word_order", 2)),
            beta=float(chrf_raw.get("beta", 2.0)),
        ),
        rescale_baseline=(
            float(metrics_raw["rescale_baseline"])
            if metrics_raw.get("rescale_baseline") is not None
            else None
        ),
    )

    synthesis_raw = _section(raw, "synthesis")
    synthesis = SynthesisSettings(
        failure_threshold=float(synthesis_raw.get("failure_threshold", 0.25)),
        concurrency=int(synthesis_raw.get("concurrency", 1)),
        include_diagnosis_in_caption=bool(
            synthesis_raw.get("include_diagnosis_in_caption", False)
        ),
    )

    seed = int(raw.get("seed", 0)) if seed_override is None else seed_override
    return PipelineConfig(
        paths=paths,
        provider=provider,
        clinical_provider=clinical,
        backend=backend,
        retrieval=retrieval,
        metrics=metrics,
        synthesis=synthesis,
        seed=seed,
    )


def make_provider(cfg: PipelineConfig, clinical: bool = False) -> EmbeddingProvider:
    """Instantiate the configured provider; the clinical one defaults to the general one."""
    section = cfg.clinical_provider if clinical and cfg.clinical_provider else cfg.provider
    if section.kind == "stub":
        return StubEmbedder(dim=section.dim, seed=cfg.seed)
    return RemoteEmbeddingClient(
        section.url, dim=section.dim or None, timeout=section.timeout
    )


def make_backend(cfg: PipelineConfig) -> GenerationBackend:
    if cfg.backend.kind == "mock":
        return MockSoapBackend()
    return RemoteBackend(cfg.backend.url, timeout=cfg.backend.timeout)


def make_judge_backend(cfg: PipelineConfig) -> GenerationBackend:
    if cfg.backend.kind == "mock":
        return MockJudgeBackend()
    return RemoteBackend(cfg.backend.url, name="remote-judge", timeout=cfg.backend.timeout)
