"""Deterministic fan-out from one master seed to per-stage sub-seeds."""

from __future__ import annotations

import hashlib


def sub_seed(master: int, stage: str) -> int:
    """Stable 64-bit sub-seed for a named stage of the pipeline.

    Hash-based so that adding a stage never shifts the seeds of others.
    """
    digest = hashlib.sha256(f"{master}/{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "little")
