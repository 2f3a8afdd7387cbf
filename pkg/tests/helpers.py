"""Shared test fixtures: oracle generators and the synthetic training corpus."""

import itertools

import numpy as np

from sancomp.core import Label, ModelConfig
from sancomp.treeops import ROOT_LABEL, enumerate_parses

LL = Label("L")   # head-left label: arcs point leftward
RR = Label("R")   # head-right label: arcs point rightward
SIDE_RULES = {"L": "left", "R": "right"}


def arcs_by_sides(tree, sides):
    """Derive compound arcs from a bracketing with an explicit side per node.

    Independent of tree_to_dependency: labels are assigned by arc direction,
    so they are always consistent with SIDE_RULES.
    """
    arcs = {}
    it = iter(sides)

    def rec(t):
        if t.is_leaf:
            return t.component
        hl = rec(t.left)
        hr = rec(t.right)
        side = next(it)
        head, dep = (hl, hr) if side == "left" else (hr, hl)
        arcs[dep] = (head, LL if dep > head else RR)
        return head

    root = rec(tree)
    arcs[root] = (0, ROOT_LABEL)
    return arcs


def all_projective_arc_sets(n):
    """Every projective single-root arc set over n nodes (bracketing x sides)."""
    seen = {}
    for tree in enumerate_parses(n):
        for sides in itertools.product(("left", "right"), repeat=n - 1):
            arcs = arcs_by_sides(tree, sides)
            key = tuple(arcs[d][0] for d in range(1, n + 1))
            seen.setdefault(key, arcs)
    return list(seen.values())


def all_projective_head_vectors(n):
    """Head vectors (head of 1..n; 0 = root) of all projective single-root trees."""
    return [
        tuple(arcs[d][0] for d in range(1, n + 1))
        for arcs in all_projective_arc_sets(n)
    ]


def tiny_config(**overrides):
    """Small dimensions for fast tests; training hyperparameters stay published."""
    base = dict(
        word_dim=16,
        char_dim=8,
        char_feature_dim=12,
        span_dim=6,
        lstm_hidden=24,
        arc_mlp_dim=20,
        label_mlp_dim=12,
        seed=3,
    )
    base.update(overrides)
    return ModelConfig(**base)


_TA_STEMS = ["tara", "tanu", "tapas", "taru", "tala"]
_BA_STEMS = ["bala", "bandhu", "bīja", "bahu", "budha"]
_CONTEXT = ["gacchati", "paśyati", "rāmaḥ", "sītā", "vanam", "nagaram"]


def _left_chain(components, label):
    text = components[0]
    for comp in components[1:]:
        text = f"<{text}-{comp}>{label}"
    return text


def _right_chain(components, label):
    text = components[-1]
    for comp in reversed(components[:-1]):
        text = f"<{comp}-{text}>{label}"
    return text


def synthetic_corpus_text(n_sentences=50, seed=0):
    """Deterministic-pattern corpus: 'ta' compounds left-branch with label T6,
    'ba' compounds right-branch with label BV; 3-5 components each."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n_sentences):
        n_comp = 3 + i % 3
        if i % 2 == 0:
            stems, chain, label = _TA_STEMS, _left_chain, "T6"
        else:
            stems, chain, label = _BA_STEMS, _right_chain, "BV"
        components = list(rng.choice(stems, size=n_comp, replace=False))
        before = _CONTEXT[i % len(_CONTEXT)]
        after = _CONTEXT[(i + 3) % len(_CONTEXT)]
        records.append(
            f"{before} <{'-'.join(components)}> {after}\n{chain(components, label)}\n"
        )
    return "\n".join(records)


SYNTH_LABELS_TEXT = "T6\tright\nBV\tright\n"
