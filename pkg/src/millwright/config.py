"""One config document for every subsystem, JSON with per-section defaults."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from millwright.critic import CriticConfig
from millwright.errors import ConfigurationError
from millwright.gateway import BackendProfile
from millwright.kg.retrieval import RetrievalConfig


@dataclass
class AppConfig:
    backend: BackendProfile = field(default_factory=lambda: BackendProfile(kind="disabled"))
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    critic: CriticConfig = field(default_factory=CriticConfig)
    embedder_dim: int = 256
    theta_deg: float = 25.0
    comp_bound: float = 0.010
    kg_store_dir: str = ""
    kg_seed_dir: str = ""
    host: str = "127.0.0.1"
    port: int = 8777
    audit_dir: str = ""

    @classmethod
    def from_file(cls, path: str | Path) -> "AppConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "AppConfig":
        config = cls()
        if "backend" in raw:
            config.backend = BackendProfile(**raw["backend"])
        if "retrieval" in raw:
            config.retrieval = RetrievalConfig(**raw["retrieval"])
        if "critic" in raw:
            config.critic = CriticConfig(**raw["critic"])
        for key in ("embedder_dim", "theta_deg", "comp_bound", "kg_store_dir",
                    "kg_seed_dir", "host", "port", "audit_dir"):
            if key in raw:
                setattr(config, key, raw[key])
        return config
