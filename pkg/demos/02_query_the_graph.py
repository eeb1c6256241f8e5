"""Query a knowledge graph: pair relations and candidate versions.

Run demos/01_build_knowledge_graph.py first to produce demos/out_kg.json.
"""

from pathlib import Path

from decide import VersionedComponent, candidate_versions, load_kg, parse_version, relation_between

ROOT = Path(__file__).resolve().parents[1]
kg = load_kg(ROOT / "demos" / "out_kg.json")


def vc(name, version=None):
    return VersionedComponent(name, parse_version(version) if version else None)


queries = [
    (vc("cuda", "10.1"), vc("tensorflow", "1.13")),
    (vc("cuda", "10.0"), vc("tensorflow", "1.13")),
    (vc("apple m1"), vc("scikit-learn", "1.0")),
    (vc("numpy", "1.22"), vc("scipy", "1.7.3")),   # discarded as neutral -> unknown
    (vc("tensorflow", "2.6"), vc("keras", "2.4.3")),  # matches the stored 2.x node
]

for a, b in queries:
    answer = relation_between(kg, a, b)
    if answer is None:
        print(f"{a} vs {b}: unknown")
    else:
        posts = [ref.post_id for ref in answer.evidence_posts]
        print(f"{a} vs {b}: {answer.relation.value} (conf {answer.conf:+.2f}, posts {posts})")

# The wildcard node is why "tensorflow 2.6" found an edge above: the graph
# stores keras 2.4.3 <-> tensorflow 2.x, and 2.6 unifies with 2.x.

print("\nstored cuda versions, ascending:")
for version in candidate_versions(kg, "cuda"):
    print("  cuda", version)
