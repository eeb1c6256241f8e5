"""Service configuration."""

from __future__ import annotations

import os
from dataclasses import dataclass

DEFAULT_MODEL = "allenai/unifiedqa-t5-small"
STUB_MODEL = "stub"


@dataclass(frozen=True)
class ServiceConfig:
    model_id: str = DEFAULT_MODEL
    host: str = "127.0.0.1"
    port: int = 8100
    max_input_chars: int = 4000  # context tail beyond this is truncated
    batch_size: int = 1

    @classmethod
    def from_env(cls) -> ServiceConfig:
        return cls(
            model_id=os.environ.get("QA_MODEL", DEFAULT_MODEL),
            host=os.environ.get("QA_HOST", "127.0.0.1"),
            port=int(os.environ.get("QA_PORT", "8100")),
            max_input_chars=int(os.environ.get("QA_MAX_INPUT_CHARS", "4000")),
            batch_size=int(os.environ.get("QA_BATCH_SIZE", "1")),
        )
