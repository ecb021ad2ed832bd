"""Run manifests: config echo, file checksums, per-stage reports."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Any

from . import __version__


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    config_text: str = ""
    tool_version: str = __version__
    created_utc: str = ""
    inputs: dict[str, str] = field(default_factory=dict)   # path -> sha256
    outputs: dict[str, str] = field(default_factory=dict)  # path -> sha256
    stages: dict[str, Any] = field(default_factory=dict)   # stage -> report

    def __post_init__(self) -> None:
        if not self.created_utc:
            self.created_utc = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())

    def record_input(self, path: str) -> None:
        self.inputs[path] = sha256_file(path)

    def record_output(self, path: str) -> None:
        self.outputs[path] = sha256_file(path)

    def as_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "created_utc": self.created_utc,
            "config": self.config_text,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "stages": self.stages,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        return cls(
            config_text=data.get("config", ""),
            tool_version=data.get("tool_version", ""),
            created_utc=data.get("created_utc", ""),
            inputs=dict(data.get("inputs", {})),
            outputs=dict(data.get("outputs", {})),
            stages=dict(data.get("stages", {})),
        )


def write_manifest(manifest: RunManifest, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest.as_dict(), fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def read_manifest(path: str) -> RunManifest:
    with open(path, encoding="utf-8") as fh:
        return RunManifest.from_dict(json.load(fh))
