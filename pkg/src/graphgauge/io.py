"""JSON reading/writing and run manifests.

Output is deterministic: keys sorted, fixed indentation, floats written with
Python's shortest round-trip representation, and no timestamps.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .errors import ValidationError


def read_json(path) -> Any:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise ValidationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {context}") from exc


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _clean(obj):
    # JSON has no inf/nan; write them as strings so the output stays valid
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "infinite" if obj > 0 else "-infinite"
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return _clean(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


@dataclass
class RunManifest:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    parameters: dict[str, Any] = field(default_factory=dict)
    version: str = __version__

    def add_input(self, name: str, path) -> None:
        self.inputs[name] = f"{Path(path).name}:sha256:{file_digest(path)}"

    def to_json(self) -> dict:
        return {"command": self.command, "inputs": dict(self.inputs),
                "parameters": dict(self.parameters), "version": self.version}
