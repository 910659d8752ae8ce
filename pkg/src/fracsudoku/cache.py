"""On-disk cache for shape-level reports (JSON with a sha256 checksum)."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Callable, Optional

ENV_VAR = "FRACSUDOKU_CACHE"
log = logging.getLogger(__name__)


def cache_dir(override: Optional[str] = None) -> Optional[Path]:
    """The cache directory from the flag, else the environment variable, else None (no caching)."""
    d = override or os.environ.get(ENV_VAR)
    return Path(d) if d else None


def _digest(payload) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def load(path: Path):
    """The cached payload, or None if the file is missing or fails its checksum."""
    try:
        doc = json.loads(path.read_text())
        if doc.get("sha256") == _digest(doc["payload"]):
            return doc["payload"]
    except (OSError, ValueError, KeyError, TypeError):
        pass
    if path.exists():
        log.warning("cache file %s is corrupt; rebuilding", path)
    return None


def store(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps({"payload": payload, "sha256": _digest(payload)}, sort_keys=True))
    tmp.replace(path)


def cached(kind: str, h: int, w: int, compute: Callable[[], object], directory: Optional[Path]):
    """Return the payload for ``(kind, h, w)``, computing and storing it on a miss."""
    if directory is None:
        return compute()
    path = Path(directory) / f"{kind}-{h}x{w}.json"
    payload = load(path)
    if payload is None:
        payload = compute()
        store(path, payload)
    return payload
