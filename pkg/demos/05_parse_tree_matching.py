"""Why token distance is not enough to pair versions with components.

In "For your installation of tensorflow, 10.0 version of CUDA library
should be used", the number 10.0 sits right next to tensorflow but belongs
to CUDA. A dependency parse settles it: the deeper the lowest common
ancestor of the two mentions, the tighter their grammatical bond.
"""

from pathlib import Path

from decide import Lexicon, lca_depth, parse_conllu, recognize
from decide.matching import match_paragraph

ROOT = Path(__file__).resolve().parents[1]
SENTENCE = "For your installation of tensorflow, 10.0 version of CUDA library should be used."

lexicon = Lexicon.default()
components, versions = recognize(SENTENCE, lexicon)
print("mentions found:", [c.surface for c in components], [v.surface for v in versions])

tree = parse_conllu((ROOT / "tests" / "fixtures" / "cuda_sentence.conllu").read_text())[0]
# Token indices in the tree: tensorflow=4, 10.0=6, CUDA=9 (0-based).
print("LCA depth of (10.0, CUDA):      ", lca_depth(tree, 6, 9))
print("LCA depth of (10.0, tensorflow):", lca_depth(tree, 6, 4))

print("\nwith the parse:")
for pair in match_paragraph(SENTENCE, components, versions, [tree]):
    version = pair.version.surface if pair.version else "(no version)"
    print(f"   {pair.component.component:12} -> {version:12} mode={pair.mode} depth={pair.lca_depth}")

print("\nwithout a parse (nearest-mention fallback):")
for pair in match_paragraph(SENTENCE, components, versions, None):
    version = pair.version.surface if pair.version else "(no version)"
    print(f"   {pair.component.component:12} -> {version:12} mode={pair.mode}")
