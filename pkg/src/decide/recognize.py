"""Recognition of stack-component and version-number mentions in paragraphs.

Component names are matched case-insensitively on token boundaries against a
configurable lexicon; version numbers are matched by three regex shapes
(dotted numbers with an optional leading ``v``, wildcard ``.x`` forms, and
bare integers glued to a component name such as ``cuda-8``).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .model import ComponentSpec, StackLayer, Version, VersionParseError, parse_version

_TOKEN_RE = re.compile(r"[A-Za-z0-9_]+(?:\.[A-Za-z0-9_]+)*")

# Dotted versions: 3.7, 2.4.3, v2.3, v1.13.5
_DOTTED_RE = re.compile(r"\bv?\d+(?:\.\d+){1,2}\b", re.IGNORECASE)
# Wildcard versions: 3.x, 1.3.x, v1.x, v2.2.x
_WILDCARD_RE = re.compile(r"\bv?\d+(?:\.\d+)?\.x\b", re.IGNORECASE)


@dataclass(frozen=True)
class Token:
    surface: str
    start: int  # char offset
    end: int


def tokenize(text: str) -> list[Token]:
    """Split text into word tokens, keeping internal dots ("1.13" is one token)."""
    return [Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


@dataclass(frozen=True)
class ComponentMention:
    component: str  # canonical name
    token_span: tuple[int, int]  # [start, end) token indices
    char_span: tuple[int, int]
    surface: str


@dataclass(frozen=True)
class VersionMention:
    version: Version
    token_span: tuple[int, int]
    char_span: tuple[int, int]
    surface: str


class Lexicon:
    """Case-insensitive component lookup with disjoint alias sets."""

    def __init__(self, components: list[ComponentSpec]):
        self.components = list(components)
        self.probes: dict[str, list[dict]] = {}  # canonical name -> probe rows
        self._by_name: dict[str, ComponentSpec] = {}
        for spec in components:
            for name in (spec.canonical_name, *spec.aliases):
                name = name.lower()
                owner = self._by_name.get(name)
                if owner is not None and owner is not spec:
                    raise ValueError(
                        f"name {name!r} claimed by both {owner.canonical_name!r} "
                        f"and {spec.canonical_name!r}"
                    )
                self._by_name[name] = spec
        # Phrases tokenized once so multi-word names match across separators.
        self._phrases: dict[tuple[str, ...], ComponentSpec] = {
            tuple(t.surface.lower() for t in tokenize(name)): spec
            for name, spec in self._by_name.items()
        }
        self._max_phrase = max((len(p) for p in self._phrases), default=1)

    def lookup(self, name: str) -> ComponentSpec | None:
        return self._by_name.get(name.lower().strip())

    def canonicalize(self, name: str) -> str:
        """Canonical name when known, the lowercased input otherwise."""
        spec = self.lookup(name)
        return spec.canonical_name if spec else name.lower().strip()

    def layer_of(self, name: str) -> StackLayer | None:
        spec = self.lookup(name)
        return spec.layer if spec else None

    def phrase_at(self, tokens: list[str], i: int) -> tuple[ComponentSpec, int] | None:
        """Longest lexicon phrase starting at token ``i``, or None."""
        limit = min(self._max_phrase, len(tokens) - i)
        for width in range(limit, 0, -1):
            spec = self._phrases.get(tuple(tokens[i : i + width]))
            if spec is not None:
                return spec, width
        return None

    @classmethod
    def from_json(cls, path: str | Path) -> Lexicon:
        with open(path, encoding="utf-8") as fh:
            rows = json.load(fh)
        return cls._from_rows(rows)

    @classmethod
    def default(cls) -> Lexicon:
        text = resources.files("decide.data").joinpath("components.json").read_text("utf-8")
        return cls._from_rows(json.loads(text))

    @classmethod
    def _from_rows(cls, rows: list[dict]) -> Lexicon:
        specs = []
        probes: dict[str, list[dict]] = {}
        for row in rows:
            spec = ComponentSpec(
                canonical_name=row["canonical"].lower(),
                aliases=frozenset(a.lower() for a in row.get("aliases", [])),
                layer=StackLayer(row["layer"]),
            )
            specs.append(spec)
            if row.get("probes"):
                probes[spec.canonical_name] = row["probes"]
        lexicon = cls(specs)
        lexicon.probes = probes
        return lexicon


def _version_spans(text: str, lexicon: Lexicon):
    """Version matches as (start, end, text, adjacent_component_span_or_None).

    Where dotted/wildcard matches overlap, the longest wins; bare integers
    only match when glued to a lexicon name ("cuda-8", "windows 64").
    """
    raw: list[tuple[int, int, str]] = []
    for rx in (_WILDCARD_RE, _DOTTED_RE):
        for m in rx.finditer(text):
            raw.append((m.start(), m.end(), m.group()))
    raw.sort(key=lambda t: (-(t[1] - t[0]), t[0]))
    kept: list[tuple[int, int, str]] = []
    for start, end, surface in raw:
        if all(end <= s or start >= e for s, e, _ in kept):
            kept.append((start, end, surface))
    spans = [(s, e, surf, None) for s, e, surf in kept]
    for phrase, spec in lexicon._by_name.items():
        rx = re.compile(rf"\b{re.escape(phrase)}[-_ ](v?\d+)\b", re.IGNORECASE)
        for m in rx.finditer(text):
            vs, ve = m.span(1)
            if all(ve <= s or vs >= e for s, e, _, _ in spans):
                spans.append((vs, ve, m.group(1), (m.start(), vs - 1, spec.canonical_name)))
    spans.sort(key=lambda t: t[:2])
    return spans


def recognize(text: str, lexicon: Lexicon) -> tuple[list[ComponentMention], list[VersionMention]]:
    """Find component and version mentions in a paragraph's text.

    Aliases are mapped to canonical names; matching is case-insensitive and
    requires token boundaries, so "numpy" does not fire inside "numpydoc".
    Bare integers count as versions only when glued to a component name.
    """
    tokens = tokenize(text)
    lowered = [t.surface.lower() for t in tokens]

    components: list[ComponentMention] = []
    i = 0
    while i < len(tokens):
        hit = lexicon.phrase_at(lowered, i)
        if hit is None:
            i += 1
            continue
        spec, width = hit
        start, end = tokens[i].start, tokens[i + width - 1].end
        components.append(
            ComponentMention(
                component=spec.canonical_name,
                token_span=(i, i + width),
                char_span=(start, end),
                surface=text[start:end],
            )
        )
        i += width

    def token_span_for(start: int, end: int) -> tuple[int, int] | None:
        overlap = [k for k, t in enumerate(tokens) if t.start < end and t.end > start]
        return (overlap[0], overlap[-1] + 1) if overlap else None

    versions: list[VersionMention] = []
    for start, end, surface, adjacent in _version_spans(text, lexicon):
        try:
            version = parse_version(surface)
        except VersionParseError:
            continue
        span = token_span_for(start, end)
        if span is None:
            continue
        if adjacent is None and any(
            c.token_span[0] <= span[0] and span[1] <= c.token_span[1] for c in components
        ):
            # A dotted number inside a component's own tokens is not a version.
            continue
        versions.append(
            VersionMention(version=version, token_span=span, char_span=(start, end), surface=surface)
        )
        if adjacent is not None:
            cs, ce, canonical = adjacent
            covered = any(c.char_span[0] <= cs and ce <= c.char_span[1] for c in components)
            if not covered:
                cspan = token_span_for(cs, ce)
                if cspan is not None:
                    components.append(
                        ComponentMention(
                            component=canonical,
                            token_span=cspan,
                            char_span=(cs, ce),
                            surface=text[cs:ce],
                        )
                    )
    components.sort(key=lambda c: c.char_span)
    versions.sort(key=lambda v: v.char_span)
    return components, versions


def qualifying_components(pairs, lexicon: Lexicon):
    """Versioned components a paragraph contributes for relation extraction.

    Non-hardware components without a matched version are dropped; hardware
    components stay, versionless. Duplicates collapse to one entry.
    """
    from .model import VersionedComponent, vc_sort_key

    seen: dict[tuple, VersionedComponent] = {}
    for pair in pairs:
        name = pair.component.component
        if pair.version is None and lexicon.layer_of(name) is not StackLayer.HARDWARE:
            continue
        vc = VersionedComponent(name, pair.version.version if pair.version else None)
        seen.setdefault(vc.key, vc)
    return sorted(seen.values(), key=vc_sort_key)


def paragraph_qualifies(pairs, lexicon: Lexicon) -> bool:
    """True when at least two distinct components survive the version gate."""
    names = {vc.component for vc in qualifying_components(pairs, lexicon)}
    return len(names) >= 2
