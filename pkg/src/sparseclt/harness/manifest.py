"""Run manifest: everything needed to reproduce a run, plus per-check verdicts."""

from __future__ import annotations

import json
import platform
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np


def artifact_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


@dataclass
class RunManifest:
    mode: str
    config: dict
    base_seed: int
    replicas: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    version: str = field(default_factory=artifact_version)
    started: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    finished: str | None = None
    environment: dict = field(default_factory=lambda: {
        "python": platform.python_version(),
        "numpy": np.__version__,
    })

    def add_check(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append({"name": name, "passed": bool(passed), "detail": detail})

    def add_output(self, path, description: str) -> None:
        self.outputs.append({"path": str(path), "description": description})

    @property
    def all_passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def write(self, path) -> Path:
        path = Path(path)
        self.finished = datetime.now(timezone.utc).isoformat()
        doc = _jsonable(asdict(self))
        doc["all_passed"] = self.all_passed
        path.write_text(json.dumps(doc, indent=2, sort_keys=True))
        return path
