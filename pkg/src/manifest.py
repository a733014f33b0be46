"""Run manifest: what was run, on which inputs, producing which files."""

import hashlib
import json
import logging
import os
from datetime import datetime, timezone
from pathlib import Path

logger = logging.getLogger(__name__)


def input_digest(data: dict) -> str:
    """SHA-256 of the canonical JSON encoding of the resolved inputs."""
    encoded = json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


class RunManifest:
    """Manifest stored as JSON next to the run's outputs.

    A manifest already present at the path is kept as the previous run and
    summarized into the new record when the run starts.
    """

    def __init__(self, manifest_path: Path):
        """Initialize manifest from file if it exists."""
        self.manifest_path = manifest_path
        self._data: dict = {}
        self.started = False

        if manifest_path.exists():
            try:
                self._data = json.loads(manifest_path.read_text())
            except json.JSONDecodeError:
                logger.warning(f"Ignoring unreadable manifest {manifest_path}")
                self._data = {}
        self._previous = dict(self._data)

    @property
    def data(self) -> dict:
        return dict(self._data)

    def matches(self, resolved: dict) -> bool:
        """True if the previously recorded run used inputs with the same digest."""
        return self._previous.get("input_digest") == input_digest(resolved)

    def start(self, command: str, resolved: dict) -> None:
        """Record the command and its inputs; may be called again once the inputs are fully resolved."""
        self._data = {
            "command": command,
            "config": resolved,
            "input_digest": input_digest(resolved),
            "started_at": self._data.get("started_at") if self.started else datetime.now(timezone.utc).isoformat(),
            "outputs": [],
            "exit_status": None,
        }
        if "input_digest" in self._previous:
            same = self.matches(resolved)
            self._data["previous_run"] = {
                "input_digest": self._previous["input_digest"],
                "exit_status": self._previous.get("exit_status"),
                "finished_at": self._previous.get("finished_at"),
                "same_inputs": same,
            }
            if same:
                logger.info(f"Inputs match the previous run recorded in {self.manifest_path}")
        self.started = True

    def finish(self, outputs: list[Path], exit_status: int) -> None:
        """Record outputs and exit status."""
        self._data["outputs"] = [str(p) for p in outputs]
        self._data["finished_at"] = datetime.now(timezone.utc).isoformat()
        self._data["exit_status"] = exit_status

    def save(self) -> None:
        """Save atomically (temp file + rename)."""
        tmp_path = self.manifest_path.with_name(self.manifest_path.name + ".tmp")
        tmp_path.write_text(json.dumps(self._data, indent=2, sort_keys=True))
        os.replace(tmp_path, self.manifest_path)
