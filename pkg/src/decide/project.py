"""Building the required stack of a project from its requirements file and imports.

The requirements file is authoritative for version constraints; the import
scan only adds component names with unbounded constraints. Names are
canonicalized through the lexicon when known (``sklearn`` becomes
``scikit-learn``); unknown names pass through untouched.
"""

from __future__ import annotations

import logging
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .model import Version, VersionConstraint, VersionParseError, compare_versions, parse_version
from .recognize import Lexicon

log = logging.getLogger(__name__)

ORIGIN_REQUIREMENTS = "requirements-file"
ORIGIN_IMPORT_SCAN = "import-scan"

_SPECIFIER_RE = re.compile(r"(===|==|~=|!=|>=|<=|>|<)\s*([^,;\s]+)")
_NAME_RE = re.compile(r"^\s*([A-Za-z0-9][A-Za-z0-9._+-]*)")
_IMPORT_RE = re.compile(r"^\s*import\s+(.+)$")
_FROM_RE = re.compile(r"^\s*from\s+([.\w]+)\s+import\b")


@dataclass(frozen=True)
class RequiredEntry:
    component: str
    constraint: VersionConstraint
    origin: str

    def __str__(self) -> str:
        return f"{self.component} {self.constraint} ({self.origin})"


@dataclass
class RequiredStack:
    entries: list[RequiredEntry] = field(default_factory=list)

    def get(self, component: str) -> RequiredEntry | None:
        for entry in self.entries:
            if entry.component == component:
                return entry
        return None

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def coerce_version(text: str, warnings: list[str] | None = None) -> Version | None:
    """Parse a pinned version leniently.

    Local/pre-release suffixes ("1.15.0+cu101", "2.0.1.post1") are stripped
    with a warning; at most the first three numeric segments are kept.
    """
    text = text.strip()
    try:
        return parse_version(text)
    except VersionParseError:
        pass
    m = re.match(r"v?(\d+(?:\.\d+){0,2})", text)
    if not m:
        return None
    if warnings is not None:
        warnings.append(f"version {text!r} truncated to {m.group(1)!r}")
    try:
        return parse_version(m.group(1))
    except VersionParseError:
        return None


def _bump_last_segment(v: Version) -> Version:
    segments = list(v.segments)
    segments[-1] += 1
    return Version(tuple(segments))


def _intersect(c1: VersionConstraint, c2: VersionConstraint) -> VersionConstraint:
    if c1.empty or c2.empty:
        return VersionConstraint(empty=True)
    lower, lower_inc = c1.lower, c1.lower_inclusive
    if c2.lower is not None:
        if lower is None or compare_versions(c2.lower, lower) > 0:
            lower, lower_inc = c2.lower, c2.lower_inclusive
        elif compare_versions(c2.lower, lower) == 0:
            lower_inc = lower_inc and c2.lower_inclusive
    upper, upper_inc = c1.upper, c1.upper_inclusive
    if c2.upper is not None:
        if upper is None or compare_versions(c2.upper, upper) < 0:
            upper, upper_inc = c2.upper, c2.upper_inclusive
        elif compare_versions(c2.upper, upper) == 0:
            upper_inc = upper_inc and c2.upper_inclusive
    if lower is not None and upper is not None:
        cmp = compare_versions(lower, upper)
        if cmp > 0 or (cmp == 0 and not (lower_inc and upper_inc)):
            return VersionConstraint(empty=True)
    return VersionConstraint(lower, lower_inc, upper, upper_inc)


def _constraint_from_specifier(op: str, raw: str, warnings: list[str]) -> VersionConstraint | None:
    if op == "!=":
        warnings.append(f"exclusion specifier '!={raw}' ignored")
        return None
    if raw.endswith(".*"):
        # "==1.5.*" behaves like a compatible-release pin on the prefix.
        raw, op = raw[:-2], "~="
    version = coerce_version(raw, warnings)
    if version is None:
        warnings.append(f"unparseable version in specifier '{op}{raw}'")
        return None
    if op in ("==", "==="):
        return VersionConstraint.exact(version)
    if op == ">=":
        return VersionConstraint(lower=version)
    if op == ">":
        return VersionConstraint(lower=version, lower_inclusive=False)
    if op == "<=":
        return VersionConstraint(upper=version)
    if op == "<":
        return VersionConstraint(upper=version, upper_inclusive=False)
    if op == "~=":
        return VersionConstraint(
            lower=version, upper=_bump_last_segment(version), upper_inclusive=False
        )
    warnings.append(f"unknown specifier operator {op!r}")
    return None


def parse_requirements(text: str, warnings: list[str] | None = None) -> list[RequiredEntry]:
    """Parse requirements-file content into required entries.

    Comments, extras and environment markers are stripped. Comma-joined
    specifiers intersect; conflicting ones produce an empty (unsatisfiable)
    constraint. Unparseable lines are skipped with a warning, never an abort.
    """
    warnings = warnings if warnings is not None else []
    entries: list[RequiredEntry] = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("-"):
            warnings.append(f"line {lineno}: option line skipped: {line!r}")
            continue
        if "://" in line or line.startswith("git+"):
            warnings.append(f"line {lineno}: URL requirement skipped: {line!r}")
            continue
        line = line.split(";", 1)[0].strip()  # environment marker
        name_match = _NAME_RE.match(line)
        if not name_match:
            warnings.append(f"line {lineno}: cannot parse requirement: {line!r}")
            continue
        name = name_match.group(1).lower()
        rest = line[name_match.end():].strip()
        rest = re.sub(r"^\[[^\]]*\]", "", rest).strip()  # extras
        constraint = VersionConstraint.unbounded()
        if rest:
            specs = _SPECIFIER_RE.findall(rest)
            leftover = _SPECIFIER_RE.sub("", rest).replace(",", "").strip()
            if not specs or leftover:
                warnings.append(f"line {lineno}: cannot parse specifiers in {line!r}")
                if not specs:
                    continue
            for op, version_text in specs:
                piece = _constraint_from_specifier(op, version_text, warnings)
                if piece is not None:
                    constraint = _intersect(constraint, piece)
            if constraint.empty:
                warnings.append(f"line {lineno}: specifiers conflict, constraint unsatisfiable")
        entries.append(RequiredEntry(name, constraint, ORIGIN_REQUIREMENTS))
    return entries


def _local_module_names(source_root: Path) -> set[str]:
    names: set[str] = set()
    for p in source_root.rglob("*.py"):
        names.add(p.stem)
        for parent in p.parents:
            if parent == source_root:
                break
            if (parent / "__init__.py").exists():
                names.add(parent.name)
    return names


def _join_continuations(text: str) -> list[str]:
    lines = []
    pending = ""
    for line in text.splitlines():
        if line.rstrip().endswith("\\"):
            pending += line.rstrip()[:-1] + " "
            continue
        lines.append(pending + line)
        pending = ""
    if pending:
        lines.append(pending)
    return lines


def scan_imports(source_root: str | Path, warnings: list[str] | None = None) -> set[str]:
    """Root package names imported anywhere under ``source_root``.

    Relative imports, standard-library modules, and modules defined inside
    the tree itself are excluded. This is a statement-level scan, not a full
    parse; imports inside string literals can slip through.
    """
    warnings = warnings if warnings is not None else []
    root = Path(source_root)
    local = _local_module_names(root)
    stdlib = set(sys.stdlib_module_names)
    found: set[str] = set()
    for path in sorted(root.rglob("*.py")):
        try:
            text = path.read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            warnings.append(f"unreadable file skipped: {path} ({exc})")
            continue
        for line in _join_continuations(text):
            m = _FROM_RE.match(line)
            if m:
                module = m.group(1)
                if module.startswith("."):
                    continue
                found.add(module.split(".", 1)[0])
                continue
            m = _IMPORT_RE.match(line)
            if m:
                for part in m.group(1).split(","):
                    part = part.strip().split(" as ")[0].strip()
                    if not part or part.startswith("."):
                        continue
                    head = part.split(".", 1)[0]
                    if re.fullmatch(r"\w+", head):
                        found.add(head)
    return {name for name in found if name not in stdlib and name not in local}


def build_required_stack(
    reqs: list[RequiredEntry], imports: set[str], lexicon: Lexicon
) -> RequiredStack:
    """Merge both sources, one entry per component, file constraints winning.

    Entry order is requirements-file order followed by the import-only names
    alphabetically; that order later drives detection.
    """
    entries: list[RequiredEntry] = []
    seen: set[str] = set()
    for entry in reqs:
        name = lexicon.canonicalize(entry.component)
        if name in seen:
            continue
        seen.add(name)
        entries.append(RequiredEntry(name, entry.constraint, entry.origin))
    for raw in sorted(imports):
        name = lexicon.canonicalize(raw)
        if name in seen:
            continue
        seen.add(name)
        entries.append(RequiredEntry(name, VersionConstraint.unbounded(), ORIGIN_IMPORT_SCAN))
    return RequiredStack(entries)


def analyze_project(
    project_dir: str | Path,
    lexicon: Lexicon,
    requirements_path: str | Path | None = None,
    warnings: list[str] | None = None,
) -> RequiredStack:
    """Required stack of a project directory (requirements.txt + import scan)."""
    warnings = warnings if warnings is not None else []
    project_dir = Path(project_dir)
    req_path = Path(requirements_path) if requirements_path else project_dir / "requirements.txt"
    reqs: list[RequiredEntry] = []
    if req_path.exists():
        reqs = parse_requirements(req_path.read_text(encoding="utf-8"), warnings)
    else:
        warnings.append(f"no requirements file at {req_path}")
    imports = scan_imports(project_dir, warnings)
    return build_required_stack(reqs, imports, lexicon)
