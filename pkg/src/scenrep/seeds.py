"""Deterministic seed derivation.

All randomness in a pipeline run flows from one root seed. Stage and
per-item seeds are derived by hashing the root together with string
labels, so adding a stage never shifts the streams of another.
"""

from __future__ import annotations

import hashlib


def derive_seed(root: int, *labels: str | int) -> int:
    """Derive a child seed (u64) from a root seed and a label path.

    Stable across processes and platforms: SHA-256 over the canonical
    string "root/label1/label2/...", first 8 bytes little-endian.
    """
    text = "/".join([str(int(root))] + [str(part) for part in labels])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")
