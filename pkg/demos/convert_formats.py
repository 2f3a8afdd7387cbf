"""One analysis, three equivalent views.

A labeled nesting tree, its list of labeled spans, and its dependency
structure over the components carry the same information. This script
loads the sample corpus and walks each compound through all three views,
checking the round trips as it goes.
"""

from pathlib import Path

from sancomp import (
    dependency_to_tree,
    load_label_inventory,
    render_bracket,
    spans_to_tree,
    tree_to_dependency,
    tree_to_spans,
)
from sancomp.corpus import compound_surfaces, parse_corpus

here = Path(__file__).parent
inventory = load_label_inventory(here / "data" / "labels.coarse", mode="coarse")
sentences = parse_corpus(here / "data" / "sample.corpus")

for sentence in sentences:
    print(f"\n=== {sentence.sid}: {' '.join(t.surface for t in sentence.tokens)}")
    for comp in sentence.compounds:
        surfaces = compound_surfaces(sentence, comp)
        tree = comp.gold_tree
        print(f"  nesting    {render_bracket(tree, surfaces)}")

        spans = tree_to_spans(tree)
        print("  spans      " + "  ".join(f"({s.start},{s.end},{s.label.name})" for s in spans))
        assert spans_to_tree(spans, comp.n_components) == tree

        arcs = tree_to_dependency(tree, inventory.head_rules)
        shown = ", ".join(
            f"{surfaces[d - 1]} -> {'Global' if h == 0 else surfaces[h - 1]} [{lab.name}]"
            for d, (h, lab) in sorted(arcs.items())
        )
        print(f"  arcs       {shown}")

        # the canonical binarization restores the tree whenever the tree is
        # canonical (nearest dependent first, left wins distance ties)
        rebuilt = dependency_to_tree(arcs)
        marker = "=" if rebuilt == tree else "~"
        print(f"  rebuilt {marker}  {render_bracket(rebuilt, surfaces)}")
