"""
Run manifest: everything needed to reproduce a run's outputs
"""
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from model.errors import ConfigError

TOOL_NAME = "lunar-trn"
TOOL_VERSION = "1.0.0"
MANIFEST_NAME = "manifest.yaml"


@dataclass
class RunManifest:
    command: str
    config: Dict[str, Any]
    seed: int
    catalog_sha256: str
    catalog_records: int
    catalog_path: Optional[str] = None
    outputs: Dict[str, Dict[str, str]] = field(default_factory=dict)     # name -> {file, sha256}
    tool: str = TOOL_NAME
    version: str = TOOL_VERSION

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tool": self.tool,
            "version": self.version,
            "command": self.command,
            "seed": self.seed,
            "catalog": {"path": self.catalog_path, "sha256": self.catalog_sha256, "records": self.catalog_records},
            "outputs": dict(self.outputs),
            "config": self.config,
        }


def write_manifest(manifest: RunManifest, out_dir: Union[str, Path]) -> Path:
    path = Path(out_dir) / MANIFEST_NAME
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(manifest.to_dict(), f, sort_keys=False, default_flow_style=False)
    return path


def read_manifest(path: Union[str, Path]) -> RunManifest:
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError("<manifest>", f"invalid YAML in {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("<manifest>", f"{path} is not a manifest")
    for key in ("command", "config", "seed", "catalog"):
        if key not in data:
            raise ConfigError(key, f"missing from manifest {path}")
    catalog = data["catalog"] or {}
    return RunManifest(command=data["command"], config=data["config"], seed=int(data["seed"]),
                       catalog_sha256=catalog.get("sha256", ""), catalog_records=int(catalog.get("records", 0)),
                       catalog_path=catalog.get("path"), outputs=data.get("outputs") or {},
                       tool=data.get("tool", TOOL_NAME), version=data.get("version", TOOL_VERSION))


def file_sha256(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
