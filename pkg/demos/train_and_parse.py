"""Train a small model on a patterned corpus and inspect its predictions.

The corpus is synthetic but deterministic: compounds built from 'ta...'
stems branch left with label T6, compounds from 'ba...' stems branch right
with label BV. A model that picks up on the component forms solves it
exactly, which makes the whole train -> parse -> evaluate loop visible in
a few seconds.
"""

import numpy as np

from sancomp import Label, LabelInventory, ModelConfig
from sancomp.core import _with_structural
from sancomp.corpus import compound_surfaces, parse_corpus_text
from sancomp.metrics import build_report, span_index_from_parses, span_index_gold
from sancomp.parser import parse, train
from sancomp.treeops import render_bracket

TA = ["tara", "tanu", "tapas", "taru", "tala"]
BA = ["bala", "bandhu", "bīja", "bahu", "budha"]
CONTEXT = ["gacchati", "paśyati", "rāmaḥ", "sītā", "vanam", "nagaram"]


def chain(components, label, leftward):
    if leftward:
        text = components[0]
        for c in components[1:]:
            text = f"<{text}-{c}>{label}"
    else:
        text = components[-1]
        for c in reversed(components[:-1]):
            text = f"<{c}-{text}>{label}"
    return text


rng = np.random.default_rng(0)
records = []
for i in range(50):
    stems, label, leftward = (TA, "T6", True) if i % 2 == 0 else (BA, "BV", False)
    comps = list(rng.choice(stems, size=3 + i % 3, replace=False))
    records.append(
        f"{CONTEXT[i % 6]} <{'-'.join(comps)}> {CONTEXT[(i + 3) % 6]}\n"
        f"{chain(comps, label, leftward)}\n"
    )
sentences = parse_corpus_text("\n".join(records))

inventory = LabelInventory(
    _with_structural([Label("T6"), Label("BV")]), {"T6": "right", "BV": "right"}
)
config = ModelConfig(
    word_dim=16, char_dim=8, char_feature_dim=12, span_dim=6,
    lstm_hidden=24, arc_mlp_dim=20, label_mlp_dim=12, seed=3,
)
print("training (stops once the training set is solved)...")
model, stats = train(
    sentences, sentences, config, inventory=inventory, stop_dev_em=1.0,
    log=lambda e: print(f"  epoch {e.epoch:3d}  loss {e.loss:.4f}  LSS {e.dev_lss:.3f}  EM {e.dev_em:.3f}")
    if e.epoch % 5 == 0 or e.dev_em == 1.0 else None,
)
print(f"best epoch: {stats.best_epoch}")

parsed = parse(sentences, model)
report = build_report(span_index_from_parses(parsed), span_index_gold(sentences))
print("\n" + report.render_table())

print("\nsample predictions:")
for ps in parsed[:4]:
    for cp in ps.parses:
        surfaces = compound_surfaces(ps.sentence, cp.compound)
        print(f"  {render_bracket(cp.tree, surfaces)}")
