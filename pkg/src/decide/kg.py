"""Consolidating per-post evidence into the weighted knowledge graph.

Per pair of versioned components, the confidence weight is
``(#compatible - #incompatible) / (#compatible + #incompatible)``; its sign
is the stored relation and neutral pairs (conf = 0) are discarded. Two
alternative strategies reweight the vote by post score or let the single
lowest-loss prediction win.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .model import (
    EvidenceRef,
    KGEdge,
    KnowledgeGraph,
    Relation,
    StackLayer,
    Version,
    VersionedComponent,
    parse_version,
    vc_sort_key,
    version_sort_key,
    version_unifies,
)
from .qa import Evidence
from .recognize import Lexicon

KG_SCHEMA_VERSION = 1


class ConsolidationStrategy(Enum):
    MAJORITY_VOTE = "majority"
    WEIGHTED_MAJORITY_VOTE = "weighted"
    VOTE_BY_LOSS = "loss"


class KGLoadError(Exception):
    """Unreadable graph file or schema-version mismatch."""


@dataclass
class ConsolidationStats:
    evidence_in: int = 0
    deduplicated: int = 0
    discarded_neutral: int = 0
    edges: int = 0


def _dedup(evidence: list[Evidence]) -> tuple[list[Evidence], int]:
    """Collapse duplicate (post, pair, template) entries, keeping the lowest loss."""
    best: dict[tuple, Evidence] = {}
    order = sorted(
        evidence,
        key=lambda e: (e.post_id, vc_sort_key(e.pair[0]), vc_sort_key(e.pair[1]),
                       e.template_used, e.loss, e.relation.value),
    )
    for ev in order:
        key = (ev.post_id, ev.pair[0].key, ev.pair[1].key, ev.template_used)
        if key not in best or ev.loss < best[key].loss:
            best[key] = ev
    kept = sorted(
        best.values(),
        key=lambda e: (vc_sort_key(e.pair[0]), vc_sort_key(e.pair[1]), e.post_id, e.template_used),
    )
    return kept, len(evidence) - len(kept)


def consolidate(
    evidence: list[Evidence],
    post_scores: dict[int, int] | None = None,
    strategy: ConsolidationStrategy = ConsolidationStrategy.MAJORITY_VOTE,
    lexicon: Lexicon | None = None,
    stats: ConsolidationStats | None = None,
) -> KnowledgeGraph:
    """Build the knowledge graph from an evidence multiset.

    The result is independent of evidence order. Every referenced versioned
    component becomes a node; components unknown to the lexicon are recorded
    as library-layer. Under the weighted strategy, negative post scores are
    floored at zero and unknown posts count as score one.
    """
    post_scores = post_scores or {}
    lexicon = lexicon or Lexicon.default()
    stats = stats if stats is not None else ConsolidationStats()
    stats.evidence_in = len(evidence)

    deduped, removed = _dedup(evidence)
    stats.deduplicated = removed

    groups: dict[tuple, list[Evidence]] = {}
    for ev in deduped:
        groups.setdefault((ev.pair[0].key, ev.pair[1].key), []).append(ev)

    kg = KnowledgeGraph()

    def node(vc: VersionedComponent) -> VersionedComponent:
        layer = lexicon.layer_of(vc.component) or StackLayer.LIBRARY
        return kg.add_node(vc, layer)

    for key in sorted(groups):
        group = groups[key]
        a, b = group[0].pair
        refs = tuple(
            EvidenceRef(ev.post_id, ev.relation, ev.loss)
            for ev in sorted(group, key=lambda e: (e.post_id, e.relation.value, e.loss))
        )
        if strategy is ConsolidationStrategy.MAJORITY_VOTE:
            compat = sum(1 for ev in group if ev.relation is Relation.COMPATIBLE)
            incompat = len(group) - compat
        elif strategy is ConsolidationStrategy.WEIGHTED_MAJORITY_VOTE:
            compat = sum(
                max(post_scores.get(ev.post_id, 1), 0)
                for ev in group
                if ev.relation is Relation.COMPATIBLE
            )
            incompat = sum(
                max(post_scores.get(ev.post_id, 1), 0)
                for ev in group
                if ev.relation is Relation.INCOMPATIBLE
            )
        else:  # VOTE_BY_LOSS: the globally lowest-loss prediction wins outright
            winner = min(group, key=lambda e: (e.loss, e.post_id, e.relation.value))
            compat, incompat = (1, 0) if winner.relation is Relation.COMPATIBLE else (0, 1)

        if compat == incompat:
            stats.discarded_neutral += len(group)
            continue
        node(a)
        node(b)
        kg.add_edge(
            KGEdge(a=a, b=b, compatible_count=compat, incompatible_count=incompat, evidence_posts=refs)
        )
        stats.edges += 1
    return kg


def _node_dict(vc: VersionedComponent) -> dict:
    return {
        "id": vc.node_id,
        "name": vc.component,
        "version": vc.version.text if vc.version else None,
    }


def kg_to_dict(kg: KnowledgeGraph) -> dict:
    layers = kg.component_layers
    return {
        "schema_version": KG_SCHEMA_VERSION,
        "components": [
            {"name": name, "layer": layers[name].value} for name in sorted(layers)
        ],
        "nodes": [_node_dict(vc) for vc in kg.nodes],
        "edges": [
            {
                "a": e.a.node_id,
                "b": e.b.node_id,
                "relation": e.relation.value,
                "conf": e.conf,
                "compatible_count": e.compatible_count,
                "incompatible_count": e.incompatible_count,
                "evidence": [
                    {"post_id": r.post_id, "relation": r.relation.value, "loss": r.loss}
                    for r in e.evidence_posts
                ],
            }
            for e in kg.edges
        ],
    }


def kg_from_dict(data: dict) -> KnowledgeGraph:
    found = data.get("schema_version")
    if found != KG_SCHEMA_VERSION:
        raise KGLoadError(f"graph schema version mismatch: expected {KG_SCHEMA_VERSION}, found {found}")
    kg = KnowledgeGraph()
    layers = {row["name"]: StackLayer(row["layer"]) for row in data.get("components", [])}
    by_id: dict[str, VersionedComponent] = {}
    for row in data.get("nodes", []):
        version = parse_version(row["version"]) if row.get("version") else None
        vc = VersionedComponent(row["name"], version)
        kg.add_node(vc, layers.get(row["name"], StackLayer.LIBRARY))
        by_id[row["id"]] = vc
    for row in data.get("edges", []):
        try:
            a, b = by_id[row["a"]], by_id[row["b"]]
        except KeyError as exc:
            raise KGLoadError(f"edge references unknown node {exc}") from exc
        refs = tuple(
            EvidenceRef(int(r["post_id"]), Relation(r["relation"]), float(r["loss"]))
            for r in row.get("evidence", [])
        )
        kg.add_edge(
            KGEdge(
                a=a,
                b=b,
                compatible_count=int(row["compatible_count"]),
                incompatible_count=int(row["incompatible_count"]),
                evidence_posts=refs,
            )
        )
    return kg


def save_kg(kg: KnowledgeGraph, path: str | Path) -> None:
    """Write the graph as canonical JSON; identical graphs give identical bytes."""
    payload = json.dumps(kg_to_dict(kg), indent=2, sort_keys=False) + "\n"
    Path(path).write_text(payload, encoding="utf-8")


def load_kg(path: str | Path) -> KnowledgeGraph:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise KGLoadError(f"cannot read graph file {path}: {exc}") from exc
    return kg_from_dict(data)


@dataclass(frozen=True)
class RelationAnswer:
    relation: Relation
    conf: float
    evidence_posts: tuple[EvidenceRef, ...]
    edge: KGEdge


def _matching_nodes(kg: KnowledgeGraph, query: VersionedComponent) -> list[VersionedComponent]:
    """Stored nodes a query component can stand for, most specific first."""
    exact = [n for n in kg.nodes_for(query.component) if n.key == query.key]
    if query.version is None or query.version.wildcard:
        return exact
    unified = [
        n
        for n in kg.nodes_for(query.component)
        if n.key != query.key
        and n.version is not None
        and version_unifies(query.version, n.version)
    ]
    unified.sort(key=lambda n: (-len(n.version.segments), n.version.wildcard, vc_sort_key(n)))
    return exact + unified


def relation_between(
    kg: KnowledgeGraph, a: VersionedComponent, b: VersionedComponent
) -> RelationAnswer | None:
    """Edge lookup with wildcard unification; None means unknown.

    Exact node matches are preferred; otherwise a concrete query version may
    stand in for a stored ``.x`` node (or a zero-padded equal version).
    """
    for na in _matching_nodes(kg, a):
        for nb in _matching_nodes(kg, b):
            edge = kg.edge_between_nodes(na, nb)
            if edge is not None:
                return RelationAnswer(
                    relation=edge.relation,
                    conf=edge.conf,
                    evidence_posts=edge.evidence_posts,
                    edge=edge,
                )
    return None


def candidate_versions(kg: KnowledgeGraph, component: str) -> list[Version]:
    """Distinct stored versions of a component, ascending.

    Wildcards sort right after the concrete version with the same prefix.
    """
    versions = {n.version.text: n.version for n in kg.nodes_for(component) if n.version}
    return sorted(versions.values(), key=version_sort_key)
