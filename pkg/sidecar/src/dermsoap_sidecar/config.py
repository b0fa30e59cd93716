"""Sidecar configuration from environment variables and an optional YAML file.

Environment variables win over the file. `SIDECAR_CONFIG` points at the file.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import yaml

ENV_PREFIX = "SIDECAR_"


@dataclass(frozen=True)
class SidecarConfig:
    encoder: str = "hash"  # "hash" | "transformer"
    model_name: str = "emilyalsentzer/Bio_ClinicalBERT"
    dim: int = 384  # hash encoder width; transformer uses the model's hidden size
    seed: int = 0
    generator: str = "template"  # "template" | "proxy"
    upstream_url: Optional[str] = None
    upstream_model: Optional[str] = None
    upstream_api_key: Optional[str] = None
    max_batch_size: int = 64
    host: str = "127.0.0.1"
    port: int = 8760


def _env(name: str) -> Optional[str]:
    return os.environ.get(ENV_PREFIX + name.upper())


def load_config(path: Optional[str] = None) -> SidecarConfig:
    path = path or _env("CONFIG")
    file_values: dict = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            file_values = yaml.safe_load(fh) or {}

    def pick(name: str, default):
        raw = _env(name)
        if raw is None:
            raw = file_values.get(name, default)
        if raw is None:
            return None
        if isinstance(default, bool):
            return str(raw).lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        return str(raw)

    return SidecarConfig(
        encoder=pick("encoder", "hash"),
        model_name=pick("model_name", "emilyalsentzer/Bio_ClinicalBERT"),
        dim=pick("dim", 384),
        seed=pick("seed", 0),
        generator=pick("generator", "template"),
        upstream_url=pick("upstream_url", None),
        upstream_model=pick("upstream_model", None),
        upstream_api_key=pick("upstream_api_key", None),
        max_batch_size=pick("max_batch_size", 64),
        host=pick("host", "127.0.0.1"),
        port=pick("port", 8760),
    )
