# depthfilter/utils/state.py
# Atomic JSON persistence, input checksums and the run manifest that accompanies
# every output file.

from __future__ import annotations
import hashlib
import json
import math
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import numpy as np

from .. import __version__
from .log import get_logger

LOG = get_logger(__name__)


def _jsonable(obj: Any) -> Any:
    """Convert numpy scalars/arrays and tuples to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        # JSON has no NaN/inf
        return val if math.isfinite(val) else None
    return obj


def dumps(payload: Any) -> str:
    """Deterministic JSON text: sorted keys, 2-space indent, trailing newline."""
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def atomic_write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile("w", dir=str(path.parent), delete=False, encoding="utf-8", newline="") as tmp:
        tmp.write(text)
        tmp_path = Path(tmp.name)
    tmp_path.replace(path)
    return path


def write_json(path: str | Path, payload: Any) -> Path:
    return atomic_write_text(path, dumps(payload))


def read_json(path: str | Path) -> Any:
    raw = Path(path).read_bytes()
    try:
        return json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        LOG.error("File %s is not valid UTF-8 JSON.", path)
        raise


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class RunManifest:
    """Provenance for one CLI invocation; written next to each output file.

    Everything except the two timestamps is a function of the invocation, so two
    runs with equal manifests (timestamps aside) produce byte-identical outputs.
    """

    command: str
    config: Dict[str, Any]
    seed: int
    tool_version: str = __version__
    inputs: Dict[str, str] = field(default_factory=dict)
    started_at: str = field(default_factory=_utc_now)
    finished_at: Optional[str] = None

    def add_inputs(self, paths: Iterable[str | Path]) -> None:
        for p in paths:
            self.inputs[str(p)] = sha256_file(p)

    def finish(self) -> None:
        self.finished_at = _utc_now()

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def write_beside(self, output: str | Path) -> Path:
        output = Path(output)
        target = output.with_name(output.name + ".manifest.json")
        return write_json(target, self.to_dict())
