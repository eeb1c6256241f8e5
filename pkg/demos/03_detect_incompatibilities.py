"""Detect version issues for a project against a recorded environment.

The project pins tensorflow 1.15 and scipy 1.7.3 and imports cuda and numpy;
the machine snapshot has cuda 10.2 and numpy 1.24 installed. The graph knows
tensorflow 1.15 works with cuda 10.0 but not 10.2, and that scipy 1.7.3
clashes with numpy 1.24 - so detection flags both conflicts, suggests the
cuda downgrade, and cites the posts the knowledge came from.
"""

from pathlib import Path

from decide import detect, load_kg, load_snapshot, render_report
from decide.project import analyze_project
from decide.recognize import Lexicon

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "tests" / "fixtures"

lexicon = Lexicon.default()
kg = load_kg(FIXTURES / "kg_motivating.json")
snapshot = load_snapshot(FIXTURES / "env.json")

print("locally installed:")
for comp in snapshot.sorted_components():
    print("  ", comp)

required = analyze_project(FIXTURES / "proj", lexicon)
print("\nrequired by the project:")
for entry in required:
    print(f"   {entry.component:12} {entry.constraint}  [{entry.origin}]")

report = detect(required, snapshot, kg)
print("\n" + render_report(report, "text"))

# There is no numpy version in this graph that satisfies scipy 1.7.3, so the
# resolution is reported as unsolvable even though the cuda fix is known.
