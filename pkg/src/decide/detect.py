"""Detecting version incompatibilities between a required and a local stack.

Each required component is checked against its constraint and against the
knowledge graph. A missing or conflicting component gets a fix inferred by
scanning its graph-known candidate versions from the latest downward; a
candidate survives when no incompatible edge connects it to the rest of the
stack. When a component runs out of candidates the search backtracks
chronologically through the stack of earlier choices. Absence of graph
knowledge never blocks anything.

Installed components that are themselves listed in the required stack are
judged on their own turn rather than vetoing other components' candidates;
everything else installed is immovable context.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .envprobe import EnvSnapshot
from .kg import KnowledgeGraph, candidate_versions, relation_between
from .model import (
    Relation,
    Version,
    VersionedComponent,
    version_satisfies,
    version_sort_key,
)
from .project import RequiredEntry, RequiredStack

KIND_CONSTRAINT = "constraint-violation"
KIND_GRAPH = "graph-incompatibility"
KIND_UNSATISFIABLE = "unsatisfiable"

ORDER_FILE = "file"
ORDER_ALPHA = "alpha"


@dataclass
class Issue:
    kind: str
    subject: RequiredEntry
    conflicting: VersionedComponent | None = None
    suggested_version: Version | None = None
    evidence_posts: tuple[int, ...] = ()


@dataclass
class IncompatibilityReport:
    issues: list[Issue] = field(default_factory=list)
    satisfiable: bool = True
    assignments: list[VersionedComponent] = field(default_factory=list)

    @property
    def has_issues(self) -> bool:
        return bool(self.issues)


def _constraint_allows(version: Version, entry: RequiredEntry) -> bool:
    if entry.constraint.empty:
        return False
    if version.wildcard:
        # Wildcard graph nodes are filtered on their concrete prefix.
        probe = Version(version.segments)
        return version_satisfies(probe, entry.constraint)
    return version_satisfies(version, entry.constraint)


def _installed_satisfies(installed: VersionedComponent, entry: RequiredEntry) -> bool:
    if installed.version is None:
        # Versionless (hardware) components violate nothing but an actual bound.
        return entry.constraint.is_unbounded
    return _constraint_allows(installed.version, entry)


class _Search:
    def __init__(self, entries: list[RequiredEntry], local: EnvSnapshot, kg: KnowledgeGraph):
        self.entries = entries
        self.kg = kg
        self.required_names = {e.component for e in entries}
        self.installed = {vc.component: vc for vc in local.components}
        self.immovable = [
            vc for vc in local.sorted_components() if vc.component not in self.required_names
        ]
        self.issues: list[Issue] = []
        self.issue_for: dict[int, Issue] = {}
        self.classified: set[int] = set()
        self.needs_fix: dict[int, bool] = {}
        self.candidates: dict[int, list[Version]] = {}
        self.result: list[VersionedComponent] | None = None

    def context(self, position: int, chosen: dict[str, VersionedComponent]):
        """Components a candidate must not conflict with at this position."""
        ctx = list(chosen.values())
        ctx.extend(self.immovable)
        for j in range(position):
            entry = self.entries[j]
            name = entry.component
            if name in chosen:
                continue
            vc = self.installed.get(name)
            if vc is not None:
                ctx.append(vc)
        return ctx

    def conflict_with(self, vc: VersionedComponent, ctx) -> tuple[VersionedComponent, tuple[int, ...]] | None:
        for other in ctx:
            if other.component == vc.component and other.key == vc.key:
                continue
            answer = relation_between(self.kg, vc, other)
            if answer is not None and answer.relation is Relation.INCOMPATIBLE:
                posts = tuple(sorted({ref.post_id for ref in answer.evidence_posts}))
                return other, posts
        return None

    def classify(self, i: int, chosen: dict[str, VersionedComponent]) -> None:
        """First-visit issue detection for entry ``i``; backtracking revisits skip it."""
        if i in self.classified:
            return
        self.classified.add(i)
        entry = self.entries[i]
        installed = self.installed.get(entry.component)
        cands = [
            v
            for v in candidate_versions(self.kg, entry.component)
            if _constraint_allows(v, entry)
        ]
        # Latest first: fix inference prefers the newest admissible version.
        self.candidates[i] = sorted(cands, key=version_sort_key, reverse=True)

        if entry.constraint.empty:
            self.issues.append(Issue(kind=KIND_UNSATISFIABLE, subject=entry, conflicting=installed))
            self.issue_for[i] = self.issues[-1]
            self.needs_fix[i] = bool(self.candidates[i])
            return
        if installed is None:
            # Absent components carry no issue; fix inference just proposes a
            # version when the graph knows any.
            self.needs_fix[i] = bool(self.candidates[i])
            return
        if not _installed_satisfies(installed, entry):
            self.issues.append(Issue(kind=KIND_CONSTRAINT, subject=entry, conflicting=installed))
            self.issue_for[i] = self.issues[-1]
            self.needs_fix[i] = True
            return
        ctx = self.context(i, chosen)
        hit = self.conflict_with(installed, ctx)
        if hit is not None:
            other, posts = hit
            self.issues.append(
                Issue(kind=KIND_GRAPH, subject=entry, conflicting=other, evidence_posts=posts)
            )
            self.issue_for[i] = self.issues[-1]
            self.needs_fix[i] = True
            return
        self.needs_fix[i] = False

    def solve(self, i: int, chosen: dict[str, VersionedComponent]) -> bool:
        if i == len(self.entries):
            self.result = list(chosen.values())
            return True
        entry = self.entries[i]
        self.classify(i, chosen)
        if not self.needs_fix[i]:
            return self.solve(i + 1, chosen)
        ctx = self.context(i + 1, chosen)  # own installed version excluded via supersession
        for version in self.candidates[i]:
            vc = VersionedComponent(entry.component, version)
            ctx_without_self = [c for c in ctx if c.component != entry.component]
            if self.conflict_with(vc, ctx_without_self) is not None:
                continue
            if i in self.issue_for:
                self.issue_for[i].suggested_version = version
            chosen[entry.component] = vc
            if self.solve(i + 1, chosen):
                return True
            del chosen[entry.component]
        if not self.candidates[i]:
            # Nothing to choose from: the component stays as it is (installed
            # or absent); the graph simply has no version to suggest.
            return self.solve(i + 1, chosen)
        return False


def detect(
    required: RequiredStack,
    local: EnvSnapshot,
    kg: KnowledgeGraph,
    order: str = ORDER_FILE,
) -> IncompatibilityReport:
    """Run the full detection over a required stack.

    ``order`` selects processing order: "file" keeps requirements order with
    import-scanned entries after, "alpha" sorts every entry by name. Earlier
    entries win the latest-version preference.
    """
    entries = list(required.entries)
    if order == ORDER_ALPHA:
        entries.sort(key=lambda e: e.component)
    elif order != ORDER_FILE:
        raise ValueError(f"unknown processing order: {order!r}")

    search = _Search(entries, local, kg)
    solved = search.solve(0, {})
    report = IncompatibilityReport(issues=search.issues, satisfiable=solved)
    if solved and search.result is not None:
        report.assignments = sorted(search.result, key=lambda vc: vc.component)
    if not solved:
        # The search is over, but later entries still deserve a first-visit
        # classification so cheap definite issues are not silently dropped.
        for i in range(len(entries)):
            search.classify(i, {})
    return report


POST_URL = "https://stackoverflow.com/questions/{post_id}"


def _issue_dict(issue: Issue) -> dict:
    return {
        "kind": issue.kind,
        "component": issue.subject.component,
        "constraint": str(issue.subject.constraint),
        "origin": issue.subject.origin,
        "conflicting": (
            {
                "name": issue.conflicting.component,
                "version": issue.conflicting.version.text if issue.conflicting.version else None,
            }
            if issue.conflicting
            else None
        ),
        "suggested_version": issue.suggested_version.text if issue.suggested_version else None,
        "evidence_posts": list(issue.evidence_posts),
        "evidence_urls": [POST_URL.format(post_id=p) for p in issue.evidence_posts],
    }


def report_to_dict(report: IncompatibilityReport) -> dict:
    return {
        "issues": [_issue_dict(issue) for issue in report.issues],
        "resolution": (
            {
                "status": "satisfiable",
                "assignments": [
                    {"name": vc.component, "version": vc.version.text if vc.version else None}
                    for vc in report.assignments
                ],
            }
            if report.satisfiable
            else {"status": "no_solution"}
        ),
    }


def render_report(report: IncompatibilityReport, format: str = "text") -> str:
    """Human-readable text or a stable JSON document."""
    if format == "json":
        return json.dumps(report_to_dict(report), indent=2) + "\n"
    if format != "text":
        raise ValueError(f"unknown report format: {format!r}")

    lines: list[str] = []
    if not report.issues:
        lines.append("No version incompatibilities detected.")
    for n, issue in enumerate(report.issues, start=1):
        lines.append(f"Issue {n}: {issue.kind}")
        lines.append(f"  component: {issue.subject.component} (constraint {issue.subject.constraint})")
        if issue.conflicting is not None:
            lines.append(f"  conflicts with: {issue.conflicting}")
        if issue.suggested_version is not None:
            lines.append(f"  suggested version: {issue.suggested_version}")
        for post_id in issue.evidence_posts:
            lines.append(f"  see {POST_URL.format(post_id=post_id)}")
    if report.satisfiable:
        if report.assignments:
            versions = ", ".join(str(vc) for vc in report.assignments)
            lines.append(f"Proposed versions: {versions}")
    else:
        lines.append("No consistent version assignment could be found.")
    return "\n".join(lines) + "\n"
