"""Identifying the locally installed stack through system commands.

Commands run through an injectable runner so the whole probe can be replayed
from a recorded transcript; failures degrade to omissions (a component the
probe cannot see is simply "not installed"). Which command identifies which
component lives in the lexicon config, not in code.
"""

from __future__ import annotations

import hashlib
import json
import re
import shlex
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .model import StackLayer, Version, VersionedComponent, vc_sort_key
from .project import coerce_version
from .recognize import Lexicon

SNAPSHOT_SCHEMA_VERSION = 1

NATIVE = "native"
CONDA = "conda"

_CONDA_PROBE = "echo $CONDA_PREFIX"


class SnapshotLoadError(Exception):
    """Unreadable snapshot file or schema-version mismatch."""


class CommandRunner(Protocol):
    def run(self, command: str, args: tuple[str, ...] = ()) -> tuple[int, str, str]: ...


class SystemRunner:
    """Executes commands on the live machine. Shell syntax goes through sh."""

    def __init__(self, timeout: float = 15.0):
        self.timeout = timeout

    def run(self, command: str, args: tuple[str, ...] = ()) -> tuple[int, str, str]:
        if args:
            argv = [command, *args]
        elif any(ch in command for ch in "$|><"):
            argv = ["sh", "-c", command]
        else:
            argv = shlex.split(command)
        try:
            proc = subprocess.run(
                argv, capture_output=True, text=True, timeout=self.timeout, check=False
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            return 127, "", str(exc)
        return proc.returncode, proc.stdout, proc.stderr


class TranscriptRunner:
    """Replays a recorded transcript; unknown commands fail with exit 127."""

    def __init__(self, transcript: dict[str, dict]):
        self.transcript = dict(transcript)

    def run(self, command: str, args: tuple[str, ...] = ()) -> tuple[int, str, str]:
        key = " ".join([command, *args]) if args else command
        entry = self.transcript.get(key)
        if entry is None:
            return 127, "", f"not in transcript: {key}"
        return int(entry.get("exit", 0)), entry.get("stdout", ""), entry.get("stderr", "")

    @classmethod
    def from_json(cls, path: str | Path) -> TranscriptRunner:
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class CaptureEntry:
    command: str
    exit_status: int
    output_digest: str
    components: tuple[str, ...] = ()


@dataclass
class EnvSnapshot:
    environment_kind: str = NATIVE
    components: list[VersionedComponent] = field(default_factory=list)
    layers: dict[str, StackLayer] = field(default_factory=dict)
    capture_log: list[CaptureEntry] = field(default_factory=list)

    def get(self, component: str) -> VersionedComponent | None:
        for vc in self.components:
            if vc.component == component:
                return vc
        return None

    def sorted_components(self) -> list[VersionedComponent]:
        return sorted(self.components, key=vc_sort_key)


def _digest(stdout: str, stderr: str) -> str:
    return hashlib.sha256((stdout + "\x00" + stderr).encode("utf-8")).hexdigest()[:16]


def detect_environment(runner: CommandRunner) -> str:
    """Conda iff the conda prefix variable expands to a non-empty path."""
    status, stdout, _stderr = runner.run("sh", ("-c", _CONDA_PROBE))
    if status == 0 and stdout.strip():
        return CONDA
    return NATIVE


def _parse_freeze(stdout: str) -> list[tuple[str, str]]:
    out = []
    for line in stdout.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("-"):
            continue
        if "==" in line:
            name, _, version = line.partition("==")
            out.append((name.strip().lower(), version.strip()))
    return out


def _parse_conda_list(stdout: str) -> list[tuple[str, str]]:
    out = []
    for line in stdout.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) >= 2:
            out.append((parts[0].lower(), parts[1]))
    return out


class Prober:
    """Runs the per-layer probe plan and assembles a snapshot."""

    def __init__(self, runner: CommandRunner, lexicon: Lexicon | None = None):
        self.runner = runner
        self.lexicon = lexicon or Lexicon.default()
        self._cache: dict[str, tuple[int, str, str]] = {}
        self._order: list[str] = []

    def _run(self, command: str, args: tuple[str, ...] = ()) -> tuple[int, str, str]:
        key = " ".join([command, *args]) if args else command
        if key not in self._cache:
            self._cache[key] = self.runner.run(command, args)
            self._order.append(key)
        return self._cache[key]

    def probe(self) -> EnvSnapshot:
        status, stdout, _ = self._run("sh", ("-c", _CONDA_PROBE))
        kind = CONDA if status == 0 and stdout.strip() else NATIVE

        snapshot = EnvSnapshot(environment_kind=kind)
        present: dict[str, VersionedComponent] = {}
        source: dict[str, str] = {}  # component -> command that identified it

        def record(command_key: str, name: str, version: Version | None, layer: StackLayer,
                   override: bool = False) -> None:
            if name in present and not override:
                return
            present[name] = VersionedComponent(name, version)
            snapshot.layers[name] = layer
            source[name] = command_key

        # Package listing covers the library layer (and, under conda, drivers).
        listing_cmd = "conda list" if kind == CONDA else "pip freeze"
        status, stdout, _ = self._run(listing_cmd)
        if status == 0:
            rows = _parse_conda_list(stdout) if kind == CONDA else _parse_freeze(stdout)
            for raw_name, raw_version in rows:
                name = self.lexicon.canonicalize(raw_name)
                if name == "python" and kind == CONDA:
                    continue  # the interpreter probe owns the runtime entry
                version = coerce_version(raw_version)
                if version is None:
                    continue
                layer = self.lexicon.layer_of(name) or StackLayer.LIBRARY
                record(listing_cmd, name, version, layer)

        covered_by_listing = {StackLayer.LIBRARY, StackLayer.DRIVER} if kind == CONDA else set()
        for spec in self.lexicon.components:
            probes = self.lexicon.probes.get(spec.canonical_name, [])
            if not probes:
                continue
            if spec.layer in covered_by_listing:
                continue  # no per-component commands for what conda already listed
            for probe in probes:
                status, stdout, stderr = self._run(probe["command"])
                if status != 0:
                    continue
                output = stdout + "\n" + stderr
                require = probe.get("require")
                if require and not re.search(require, output):
                    continue
                m = re.search(probe["pattern"], output)
                if not m:
                    continue
                if m.groups():
                    version = coerce_version(m.group(1))
                    if version is None:
                        continue
                else:
                    version = None  # presence probe (hardware)
                record(probe["command"], spec.canonical_name, version, spec.layer, override=True)
                break

        snapshot.components = sorted(present.values(), key=vc_sort_key)
        by_command: dict[str, list[str]] = {}
        for name, cmd in source.items():
            by_command.setdefault(cmd, []).append(name)
        snapshot.capture_log = [
            CaptureEntry(
                command=key,
                exit_status=self._cache[key][0],
                output_digest=_digest(self._cache[key][1], self._cache[key][2]),
                components=tuple(sorted(by_command.get(key, ()))),
            )
            for key in self._order
        ]
        return snapshot


def probe_local_stack(runner: CommandRunner, lexicon: Lexicon | None = None) -> EnvSnapshot:
    return Prober(runner, lexicon).probe()


def snapshot_to_dict(snapshot: EnvSnapshot) -> dict:
    return {
        "schema_version": SNAPSHOT_SCHEMA_VERSION,
        "environment_kind": snapshot.environment_kind,
        "components": [
            {
                "name": vc.component,
                "version": vc.version.text if vc.version else None,
                "layer": snapshot.layers.get(vc.component, StackLayer.LIBRARY).value,
            }
            for vc in snapshot.sorted_components()
        ],
        "capture_log": [
            {
                "command": e.command,
                "exit_status": e.exit_status,
                "output_digest": e.output_digest,
                "components": list(e.components),
            }
            for e in snapshot.capture_log
        ],
    }


def snapshot_from_dict(data: dict) -> EnvSnapshot:
    found = data.get("schema_version")
    if found != SNAPSHOT_SCHEMA_VERSION:
        raise SnapshotLoadError(
            f"snapshot schema version mismatch: expected {SNAPSHOT_SCHEMA_VERSION}, found {found}"
        )
    from .model import parse_version

    snapshot = EnvSnapshot(environment_kind=data.get("environment_kind", NATIVE))
    for row in data.get("components", []):
        version = parse_version(row["version"]) if row.get("version") else None
        snapshot.components.append(VersionedComponent(row["name"], version))
        snapshot.layers[row["name"]] = StackLayer(row.get("layer", "library"))
    snapshot.capture_log = [
        CaptureEntry(
            command=row["command"],
            exit_status=int(row.get("exit_status", 0)),
            output_digest=row.get("output_digest", ""),
            components=tuple(row.get("components", [])),
        )
        for row in data.get("capture_log", [])
    ]
    snapshot.components.sort(key=vc_sort_key)
    return snapshot


def save_snapshot(snapshot: EnvSnapshot, path: str | Path) -> None:
    payload = json.dumps(snapshot_to_dict(snapshot), indent=2) + "\n"
    Path(path).write_text(payload, encoding="utf-8")


def load_snapshot(path: str | Path) -> EnvSnapshot:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SnapshotLoadError(f"cannot read snapshot {path}: {exc}") from exc
    return snapshot_from_dict(data)
