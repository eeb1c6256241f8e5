"""Core domain types: stack layers, versions, constraints, and the knowledge graph.

Everything here is an immutable value object; graph construction happens in
:mod:`decide.kg` and all reads are safe to share across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum


class StackLayer(Enum):
    """The five layers a stack component can belong to."""

    LIBRARY = "library"
    RUNTIME = "runtime"
    DRIVER = "driver"
    OS_CONTAINER = "os_container"
    HARDWARE = "hardware"


class Relation(Enum):
    """Pairwise relation stored on a graph edge. Unknown = no edge."""

    COMPATIBLE = "compatible"
    INCOMPATIBLE = "incompatible"


class VersionParseError(ValueError):
    """Raised when a version string does not parse."""


_VERSION_RE = re.compile(r"^v?(\d+(?:\.\d+){0,2})(\.x)?$", re.IGNORECASE)


@dataclass(frozen=True, order=False)
class Version:
    """A dotted numeric version with up to three segments.

    ``wildcard`` is true when the textual form ended in ``.x``; the segments
    hold only the concrete numbers before the wildcard.
    """

    segments: tuple[int, ...]
    wildcard: bool = False

    def __post_init__(self) -> None:
        if not 1 <= len(self.segments) <= 3:
            raise VersionParseError(f"version needs 1-3 segments, got {self.segments!r}")
        if any(s < 0 for s in self.segments):
            raise VersionParseError(f"negative version segment in {self.segments!r}")

    @property
    def text(self) -> str:
        base = ".".join(str(s) for s in self.segments)
        return base + ".x" if self.wildcard else base

    def __str__(self) -> str:
        return self.text


def parse_version(text: str) -> Version:
    """Parse a version string such as ``v2.3``, ``1.13.5`` or ``1.3.x``.

    A leading ``v`` is stripped and a trailing ``.x`` sets the wildcard flag.
    """
    m = _VERSION_RE.match(text.strip())
    if not m:
        raise VersionParseError(f"not a version: {text!r}")
    segments = tuple(int(s) for s in m.group(1).split("."))
    return Version(segments=segments, wildcard=m.group(2) is not None)


def compare_versions(a: Version, b: Version) -> int:
    """Total order on versions: -1, 0 or 1.

    Missing trailing segments compare as zero (``2.0`` equals ``2.0.0``);
    the wildcard flag is ignored.
    """
    width = max(len(a.segments), len(b.segments))
    pa = a.segments + (0,) * (width - len(a.segments))
    pb = b.segments + (0,) * (width - len(b.segments))
    if pa < pb:
        return -1
    if pa > pb:
        return 1
    return 0


def version_sort_key(v: Version) -> tuple:
    """Ascending sort key; wildcards sort just after the equal concrete prefix."""
    padded = v.segments + (0,) * (3 - len(v.segments))
    return (padded, 1 if v.wildcard else 0, len(v.segments))


@dataclass(frozen=True)
class VersionConstraint:
    """An interval of acceptable versions.

    An absent bound means unbounded on that side. ``empty`` marks a constraint
    that no version can satisfy (e.g. produced by conflicting specifiers).
    """

    lower: Version | None = None
    lower_inclusive: bool = True
    upper: Version | None = None
    upper_inclusive: bool = True
    empty: bool = False

    def __post_init__(self) -> None:
        if self.empty:
            return
        if self.lower is not None and self.upper is not None:
            if compare_versions(self.lower, self.upper) > 0:
                raise ValueError(f"constraint lower bound {self.lower} above upper {self.upper}")

    @classmethod
    def unbounded(cls) -> VersionConstraint:
        return cls()

    @classmethod
    def exact(cls, v: Version) -> VersionConstraint:
        return cls(lower=v, upper=v)

    @property
    def is_unbounded(self) -> bool:
        return not self.empty and self.lower is None and self.upper is None

    def __str__(self) -> str:
        if self.empty:
            return "<empty>"
        if self.is_unbounded:
            return "any"
        lo = f"[{self.lower}" if self.lower_inclusive else f"({self.lower}"
        hi = f"{self.upper}]" if self.upper_inclusive else f"{self.upper})"
        if self.lower is None:
            lo = "(-"
        if self.upper is None:
            hi = "-)"
        return f"{lo}, {hi}"


def version_satisfies(v: Version, c: VersionConstraint) -> bool:
    """True iff ``v`` lies within the constraint, honoring inclusivity flags."""
    if v.wildcard:
        raise ValueError(f"cannot test a wildcard version {v} against a constraint")
    if c.empty:
        return False
    if c.lower is not None:
        cmp = compare_versions(v, c.lower)
        if cmp < 0 or (cmp == 0 and not c.lower_inclusive):
            return False
    if c.upper is not None:
        cmp = compare_versions(v, c.upper)
        if cmp > 0 or (cmp == 0 and not c.upper_inclusive):
            return False
    return True


def version_unifies(concrete: Version, pattern: Version) -> bool:
    """Whether a concrete version matches a stored version pattern.

    Wildcard patterns match any concrete version they prefix (``1.3.x``
    covers ``1.3.5`` and also ``1.3`` itself); non-wildcard patterns match
    on equality under :func:`compare_versions`.
    """
    if concrete.wildcard:
        raise ValueError(f"left operand must be concrete, got {concrete}")
    if not pattern.wildcard:
        return compare_versions(concrete, pattern) == 0
    width = len(pattern.segments)
    padded = concrete.segments + (0,) * max(0, width - len(concrete.segments))
    return padded[:width] == pattern.segments


@dataclass(frozen=True)
class ComponentSpec:
    """A recognizable stack component: canonical name, aliases and layer."""

    canonical_name: str
    aliases: frozenset[str]
    layer: StackLayer

    def __post_init__(self) -> None:
        if not self.canonical_name:
            raise ValueError("component needs a canonical name")
        if self.canonical_name != self.canonical_name.lower():
            raise ValueError(f"canonical name must be lowercase: {self.canonical_name!r}")
        if self.canonical_name in self.aliases:
            raise ValueError(f"{self.canonical_name!r} listed as its own alias")


@dataclass(frozen=True)
class VersionedComponent:
    """A component name with an optional version.

    The version may be absent for hardware-layer components only; the caller
    owns that layer check since this value type does not know layers.
    """

    component: str
    version: Version | None = None

    @property
    def key(self) -> tuple[str, str | None]:
        return (self.component, self.version.text if self.version else None)

    @property
    def node_id(self) -> str:
        return f"{self.component}@{self.version.text}" if self.version else self.component

    def __str__(self) -> str:
        return f"{self.component} {self.version}" if self.version else self.component


@dataclass(frozen=True)
class EvidenceRef:
    """One post's vote recorded on a graph edge."""

    post_id: int
    relation: Relation
    loss: float


@dataclass(frozen=True)
class KGEdge:
    """An undirected (in)compatibility edge between two graph nodes.

    ``conf`` is always ``(compatible_count - incompatible_count) /
    (compatible_count + incompatible_count)``; a zero value is never stored
    (neutral pairs are discarded before edges are created).
    """

    a: VersionedComponent
    b: VersionedComponent
    compatible_count: int
    incompatible_count: int
    evidence_posts: tuple[EvidenceRef, ...]
    conf: float = field(init=False)

    def __post_init__(self) -> None:
        if self.compatible_count < 0 or self.incompatible_count < 0:
            raise ValueError("evidence counts must be non-negative")
        total = self.compatible_count + self.incompatible_count
        if total < 1:
            raise ValueError("an edge needs at least one piece of evidence")
        if self.compatible_count == self.incompatible_count:
            raise ValueError("neutral evidence (conf = 0) must be discarded, not stored")
        if self.a.key == self.b.key:
            raise ValueError("self-loop edges are not allowed")
        # Canonical endpoint order keeps the unordered pair stable.
        if vc_sort_key(self.a) > vc_sort_key(self.b):
            first, second = self.b, self.a
            object.__setattr__(self, "a", first)
            object.__setattr__(self, "b", second)
        object.__setattr__(
            self, "conf", (self.compatible_count - self.incompatible_count) / total
        )

    @property
    def relation(self) -> Relation:
        return Relation.COMPATIBLE if self.conf > 0 else Relation.INCOMPATIBLE

    @property
    def pair_key(self) -> tuple:
        return (vc_sort_key(self.a), vc_sort_key(self.b))


def vc_sort_key(vc: VersionedComponent) -> tuple:
    """Canonical ordering for versioned components: name, then version."""
    v = vc.version
    return (vc.component, version_sort_key(v) if v else ((-1, -1, -1), 0, 0), v.text if v else "")


def canonical_pair(a: VersionedComponent, b: VersionedComponent) -> tuple[VersionedComponent, VersionedComponent]:
    """Order an unordered pair canonically (by name, then version)."""
    return (a, b) if vc_sort_key(a) <= vc_sort_key(b) else (b, a)


class KnowledgeGraph:
    """Undirected graph of versioned components with weighted relation edges.

    Nodes are keyed by ``(canonical_name, version text or None)``; there is at
    most one edge per unordered node pair. Construction happens through a
    single writer; once built, concurrent reads are safe.
    """

    def __init__(self) -> None:
        self._nodes: dict[tuple[str, str | None], VersionedComponent] = {}
        self._edges: dict[tuple, KGEdge] = {}
        self._layers: dict[str, StackLayer] = {}
        self._by_component: dict[str, list[VersionedComponent]] = {}

    def add_node(self, vc: VersionedComponent, layer: StackLayer | None = None) -> VersionedComponent:
        existing = self._nodes.get(vc.key)
        if existing is None:
            self._nodes[vc.key] = vc
            self._by_component.setdefault(vc.component, []).append(vc)
        if layer is not None:
            self._layers.setdefault(vc.component, layer)
        return self._nodes[vc.key]

    def add_edge(self, edge: KGEdge) -> None:
        if edge.a.key not in self._nodes or edge.b.key not in self._nodes:
            raise ValueError("edge endpoints must be added as nodes first")
        self._edges[edge.pair_key] = edge

    @property
    def nodes(self) -> list[VersionedComponent]:
        return sorted(self._nodes.values(), key=vc_sort_key)

    @property
    def edges(self) -> list[KGEdge]:
        return [self._edges[k] for k in sorted(self._edges)]

    def layer_of(self, component: str) -> StackLayer | None:
        return self._layers.get(component)

    @property
    def component_layers(self) -> dict[str, StackLayer]:
        return dict(self._layers)

    def nodes_for(self, component: str) -> list[VersionedComponent]:
        return sorted(self._by_component.get(component, []), key=vc_sort_key)

    def edge_between_nodes(self, a: VersionedComponent, b: VersionedComponent) -> KGEdge | None:
        ka, kb = vc_sort_key(a), vc_sort_key(b)
        return self._edges.get((ka, kb) if ka <= kb else (kb, ka))

    def __len__(self) -> int:
        return len(self._nodes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return (
            self._nodes == other._nodes
            and self._edges == other._edges
            and self._layers == other._layers
        )
