"""Run records, the append-only result cache and flat config files.

The cache is a JSON Lines file: one self-describing ``RunRecord`` object
per line.  Its location defaults to ``~/.cache/tcmcap/runs.jsonl`` and can
be moved with the ``TCMCAP_CACHE`` environment variable.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from . import __version__
from .plain_rdt import CapacityResult

__all__ = ["RunRecord", "RunCache", "default_cache_path", "read_config", "CACHE_ENV"]

CACHE_ENV = "TCMCAP_CACHE"
FORMAT_TAG = "tcmcap.runrecord/1"


def _encode(item):
    if isinstance(item, CapacityResult):
        return {"kind": "capacity", **item.to_dict()}
    return {"kind": "data", "value": item}


def _decode(obj):
    if obj.get("kind") == "capacity":
        return CapacityResult.from_dict(obj)
    return obj["value"]


@dataclass
class RunRecord:
    command: str
    parameters: dict[str, Any]
    results: list = field(default_factory=list)
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    tool_version: str = __version__

    def key(self) -> str:
        return json.dumps([self.command, self.parameters], sort_keys=True)

    def to_json(self) -> str:
        return json.dumps(
            {
                "format": FORMAT_TAG,
                "command": self.command,
                "parameters": self.parameters,
                "results": [_encode(r) for r in self.results],
                "timestamp": self.timestamp,
                "tool_version": self.tool_version,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line: str) -> "RunRecord":
        obj = json.loads(line)
        if obj.get("format") != FORMAT_TAG:
            raise ValueError(f"not a run record: {line[:60]!r}")
        return cls(
            command=obj["command"],
            parameters=obj["parameters"],
            results=[_decode(r) for r in obj["results"]],
            timestamp=obj["timestamp"],
            tool_version=obj["tool_version"],
        )

    def __eq__(self, other):
        if not isinstance(other, RunRecord):
            return NotImplemented
        return self.to_json() == other.to_json()


def default_cache_path() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "tcmcap" / "runs.jsonl"


class RunCache:
    """Append-only store of run records keyed by (command, parameters)."""

    def __init__(self, path: Path | str | None = None, tool_version: str = __version__):
        self.path = Path(path) if path is not None else default_cache_path()
        self.tool_version = tool_version
        self._index: dict[str, RunRecord] | None = None

    def _load(self) -> dict[str, RunRecord]:
        if self._index is None:
            self._index = {}
            if self.path.exists():
                for line in self.path.read_text(encoding="utf-8").splitlines():
                    if not line.strip():
                        continue
                    try:
                        rec = RunRecord.from_json(line)
                    except (ValueError, KeyError):
                        continue  # foreign or truncated line
                    if rec.tool_version == self.tool_version:
                        self._index[rec.key()] = rec
        return self._index

    def lookup(self, command: str, parameters: dict) -> RunRecord | None:
        return self._load().get(RunRecord(command, parameters).key())

    def append(self, record: RunRecord) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8", newline="\n") as fh:
            fh.write(record.to_json() + "\n")
        if record.tool_version == self.tool_version:
            self._load()[record.key()] = record


def read_config(path: Path | str) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment, keys may use dashes."""
    out = {}
    for n, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out
