"""Nesting trees, span tuples, dependency graphs, and conversions between them.

A compound analysis has three equivalent views:

* a binary nesting tree (full parenthesization) with a relation label at
  each internal node,
* the list of N-1 labeled span tuples (one per internal node),
* a labeled dependency structure over the components plus the Global node,
  where the compound head attaches to Global with CompoundRoot.

Everything here is a pure function over immutable values and can be mapped
over compounds in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Sequence, Union

from .core import (
    COMPOUND_ROOT,
    GLOBAL_RELATION,
    Compound,
    GraphError,
    FormatError,
    Label,
    Sentence,
    validate_label_name,
)

ROOT_LABEL = Label(COMPOUND_ROOT, "structural")
GLOBAL_LABEL = Label(GLOBAL_RELATION, "structural")


@dataclass(frozen=True)
class Leaf:
    """A single component, identified by its 1-based index."""

    component: int

    def iter_labels(self) -> Iterator[Optional[Label]]:
        return iter(())

    @property
    def is_leaf(self) -> bool:
        return True


@dataclass(frozen=True)
class Node:
    """A binary combination of two adjacent subtrees with a relation label.

    The head side of the node is not stored: it is derived from the head
    rule of the label, keeping the rule table the single source of truth.
    label None marks an unlabeled bracketing (enumeration output only).
    """

    left: "NestingTree"
    right: "NestingTree"
    label: Optional[Label] = None

    def iter_labels(self) -> Iterator[Optional[Label]]:
        yield from self.left.iter_labels()
        yield self.label
        yield from self.right.iter_labels()

    @property
    def is_leaf(self) -> bool:
        return False


NestingTree = Union[Leaf, Node]


@dataclass(frozen=True, order=True)
class SpanTuple:
    """One labeled span (start, end, label), indices 1-based inclusive."""

    start: int
    end: int
    label: Optional[Label] = None

    def __post_init__(self):
        if not 1 <= self.start < self.end:
            raise ValueError(f"bad span ({self.start}, {self.end})")
        if self.label is not None and self.label.is_structural:
            raise ValueError("span labels must be non-structural")


@dataclass(frozen=True)
class DependencyGraph:
    """Per-sentence labeled arcs over {Global} ∪ tokens.

    Node 0 is Global and has no head; node i >= 1 is sentence token i.
    """

    heads: tuple[Optional[int], ...]
    labels: tuple[Optional[Label], ...]

    def __post_init__(self):
        if len(self.heads) != len(self.labels) or not self.heads:
            raise ValueError("heads/labels length mismatch")
        if self.heads[0] is not None or self.labels[0] is not None:
            raise ValueError("Global node must have no head")

    @property
    def n_nodes(self) -> int:
        return len(self.heads)


def tree_leaves(tree: NestingTree) -> list[int]:
    """In-order component indices."""
    if tree.is_leaf:
        return [tree.component]
    return tree_leaves(tree.left) + tree_leaves(tree.right)


def tree_size(tree: NestingTree) -> int:
    """Number of components under the tree."""
    return len(tree_leaves(tree))


def validate_tree(tree: NestingTree) -> None:
    """Check the full-parenthesization invariant: leaves are exactly 1..N in order."""
    leaves = tree_leaves(tree)
    if leaves != list(range(1, len(leaves) + 1)):
        raise GraphError(f"leaf sequence {leaves} is not 1..{len(leaves)}")


def catalan(n: int) -> int:
    """Exact n-th Catalan number; the size of the parse space for n+1 components."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return math.comb(2 * n, n) // (n + 1)


def enumerate_parses(n_components: int, label: Optional[Label] = None) -> Iterator[NestingTree]:
    """Stream every distinct binary bracketing of n_components leaves.

    Yields catalan(n_components - 1) trees, each internal node carrying the
    caller-supplied default label (labels are not combinatorially expanded).
    The stream is lazy: counts grow as Catalan numbers.
    """
    if n_components < 2:
        raise ValueError("n_components must be >= 2")
    return _trees(1, n_components, label)


def _trees(i: int, j: int, label: Optional[Label]) -> Iterator[NestingTree]:
    if i == j:
        yield Leaf(i)
        return
    for k in range(j - 1, i - 1, -1):
        for left in _trees(i, k, label):
            for right in _trees(k + 1, j, label):
                yield Node(left, right, label)


def tree_to_spans(tree: NestingTree) -> list[SpanTuple]:
    """One tuple per internal node, ordered by (width, start)."""
    spans: list[SpanTuple] = []

    def rec(t: NestingTree) -> tuple[int, int]:
        if t.is_leaf:
            return t.component, t.component
        lo, _ = rec(t.left)
        _, hi = rec(t.right)
        spans.append(SpanTuple(lo, hi, t.label))
        return lo, hi

    rec(tree)
    spans.sort(key=lambda s: (s.end - s.start, s.start))
    return spans


def spans_to_tree(spans: Sequence[SpanTuple], n: int) -> NestingTree:
    """Invert tree_to_spans: rebuild the unique tree with the given span set.

    Raises GraphError("not a full parenthesization") when the spans are
    crossing, duplicated, or do not compose into a binary bracketing.
    """
    if len(spans) != n - 1:
        raise GraphError(
            f"not a full parenthesization: {len(spans)} spans for {n} components"
        )
    # pieces maps the start of each fully-built block to (tree, end)
    pieces: dict[int, tuple[NestingTree, int]] = {i: (Leaf(i), i) for i in range(1, n + 1)}
    for span in sorted(spans, key=lambda s: (s.end - s.start, s.start)):
        if span.end > n:
            raise GraphError(f"not a full parenthesization: span {span} exceeds {n}")
        left = pieces.get(span.start)
        if left is None:
            raise GraphError(f"not a full parenthesization: no block starts at {span.start}")
        ltree, lend = left
        right = pieces.get(lend + 1)
        if right is None or right[1] != span.end or lend >= span.end:
            raise GraphError(f"not a full parenthesization: span {span} is not binary")
        rtree, rend = right
        del pieces[lend + 1]
        pieces[span.start] = (Node(ltree, rtree, span.label), rend)
    if len(pieces) != 1:
        raise GraphError("not a full parenthesization: blocks left unmerged")
    return pieces[1][0]


def tree_to_dependency(
    tree: NestingTree,
    rules: Mapping[str, str],
    offset: int = 0,
) -> dict[int, tuple[int, Label]]:
    """Convert a labeled tree into compound arcs.

    At each internal node the head component is the head of the child on the
    label's head-rule side; the other child's head component receives an arc
    to it, labeled with the node's label. The root component attaches to
    Global (node 0) with CompoundRoot. Component i maps to node offset + i.

    Returns dependent node -> (head node, label). The arcs always form a
    projective single-root tree over the compound.
    """
    arcs: dict[int, tuple[int, Label]] = {}

    def rec(t: NestingTree) -> int:
        if t.is_leaf:
            return t.component
        hl, hr = rec(t.left), rec(t.right)
        if t.label is None:
            raise GraphError("unknown label: node is unlabeled")
        side = rules.get(t.label.name)
        if side not in ("left", "right"):
            raise GraphError(f"unknown label {t.label.name!r}")
        head, dep = (hl, hr) if side == "left" else (hr, hl)
        arcs[offset + dep] = (offset + head, t.label)
        return head

    root = rec(tree)
    arcs[offset + root] = (0, ROOT_LABEL)
    return arcs


def dependency_to_tree(
    arcs: Mapping[int, tuple[int, Optional[Label]]],
    rules: Optional[Mapping[str, str]] = None,
) -> NestingTree:
    """Canonical binarization of compound arcs (component space, head 0 = Global).

    Each head combines with its dependents nearest-first; when a left and a
    right dependent tie on distance the left one attaches first (lower in
    the tree). Children order is positional, so the result is total over
    projective single-root inputs regardless of label head rules; `rules` is
    accepted for symmetry with tree_to_dependency and not consulted.
    """
    del rules
    n = len(arcs)
    if set(arcs) != set(range(1, n + 1)):
        raise GraphError(f"arcs must cover components 1..{n} exactly")
    roots = [d for d, (h, _) in arcs.items() if h == 0]
    if len(roots) != 1:
        raise GraphError("multiple roots" if len(roots) > 1 else "no root")
    children: dict[int, list[int]] = {i: [] for i in range(1, n + 1)}
    for dep, (head, _) in arcs.items():
        if head != 0:
            if not 1 <= head <= n:
                raise GraphError(f"head {head} outside the compound")
            children[head].append(dep)
    for start in arcs:
        seen = set()
        node = start
        while node != 0:
            if node in seen:
                raise GraphError("cycle")
            seen.add(node)
            node = arcs[node][0]

    def build(head: int) -> tuple[NestingTree, int, int]:
        tree: NestingTree = Leaf(head)
        lo = hi = head
        # nearest dependent first; on a distance tie the left one first
        for dep in sorted(children[head], key=lambda d: (abs(d - head), d - head)):
            sub, dep_lo, dep_hi = build(dep)
            label = arcs[dep][1]
            if dep < head:
                if dep_hi != lo - 1:
                    raise GraphError("non-projective arcs")
                tree, lo = Node(sub, tree, label), dep_lo
            else:
                if dep_lo != hi + 1:
                    raise GraphError("non-projective arcs")
                tree, hi = Node(tree, sub, label), dep_hi
        return tree, lo, hi

    tree, lo, hi = build(roots[0])
    if (lo, hi) != (1, n):
        raise GraphError("non-projective arcs")
    return tree


def compound_arcs(graph: DependencyGraph, compound: Compound) -> dict[int, tuple[int, Optional[Label]]]:
    """Extract a compound's arcs from a sentence graph, re-indexed to 1..N."""
    shift = compound.token_start - 1
    out: dict[int, tuple[int, Optional[Label]]] = {}
    for pos in compound.component_positions():
        head = graph.heads[pos]
        out[pos - shift] = (0 if head == 0 else head - shift, graph.labels[pos])
    return out


def graph_from_arcs(
    sentence: Sentence,
    arcs: Mapping[int, tuple[int, Label]],
) -> DependencyGraph:
    """Assemble a sentence graph from compound arcs (sentence-node space).

    Plain-word nodes are attached to Global with GlobalRelation; component
    nodes must all be covered by `arcs`.
    """
    heads: list[Optional[int]] = [None]
    labels: list[Optional[Label]] = [None]
    for pos, tok in enumerate(sentence.tokens, start=1):
        if tok.is_component:
            if pos not in arcs:
                raise GraphError(f"missing arc for component token {pos}")
            head, label = arcs[pos]
            heads.append(head)
            labels.append(label)
        else:
            heads.append(0)
            labels.append(GLOBAL_LABEL)
    return DependencyGraph(tuple(heads), tuple(labels))


def validate_graph(graph: DependencyGraph, sentence: Sentence) -> list[str]:
    """Return human-readable descriptions of every invariant violation (empty = valid)."""
    violations: list[str] = []
    if graph.n_nodes != len(sentence) + 1:
        return [f"graph has {graph.n_nodes} nodes for {len(sentence)} tokens"]

    for i in range(1, graph.n_nodes):
        head, label = graph.heads[i], graph.labels[i]
        if head is None or not 0 <= head < graph.n_nodes or head == i:
            violations.append(f"token {i} has invalid head {head}")
        if label is None:
            violations.append(f"token {i} has no label")
    if violations:
        return violations

    for start in range(1, graph.n_nodes):
        seen = set()
        node = start
        while node != 0:
            if node in seen:
                violations.append(f"cycle through token {start}")
                break
            seen.add(node)
            node = graph.heads[node]

    component_positions = set()
    for comp in sentence.compounds:
        component_positions.update(comp.component_positions())
    for i, tok in enumerate(sentence.tokens, start=1):
        if i in component_positions:
            continue
        if graph.heads[i] != 0:
            violations.append(f"plain token {i} head must be Global")
        elif graph.labels[i].name != GLOBAL_RELATION:
            violations.append(f"plain token {i} label must be {GLOBAL_RELATION}")

    for comp in sentence.compounds:
        roots = []
        for pos in comp.component_positions():
            head, label = graph.heads[pos], graph.labels[pos]
            if head == 0:
                roots.append(pos)
                if label.name != COMPOUND_ROOT:
                    violations.append(
                        f"compound {comp.id} root token {pos} label must be {COMPOUND_ROOT}"
                    )
            else:
                if not comp.token_start <= head <= comp.token_end:
                    violations.append(
                        f"compound {comp.id} token {pos} head {head} outside compound"
                    )
                if label.is_structural:
                    violations.append(
                        f"compound {comp.id} token {pos} has structural label {label.name}"
                    )
        if len(roots) != 1:
            violations.append(
                f"compound {comp.id} has {len(roots)} {COMPOUND_ROOT} arcs, expected 1"
            )
            continue
        try:
            dependency_to_tree(compound_arcs(graph, comp))
        except GraphError as e:
            violations.append(f"compound {comp.id}: {e}")
    return violations


# --- bracketed nesting text format ---------------------------------------
#
# node  := atom | '<' node '-' node '>' label?
# atom and label are runs of characters outside {'<', '>', '-', whitespace};
# whitespace between tokens is ignored. The canonical renderer emits no
# spaces, e.g. "<<a-b>T1-c>T2".

_DELIMS = set("<>-")


def parse_bracket(text: str) -> tuple[NestingTree, list[str]]:
    """Parse a bracketed nesting string; return (tree over 1..N, leaf surfaces)."""
    leaves: list[str] = []
    pos = 0

    def skip_ws():
        nonlocal pos
        while pos < len(text) and text[pos].isspace():
            pos += 1

    def read_run() -> str:
        nonlocal pos
        start = pos
        while pos < len(text) and not text[pos].isspace() and text[pos] not in _DELIMS:
            pos += 1
        return text[start:pos]

    def parse_node() -> NestingTree:
        nonlocal pos
        skip_ws()
        if pos >= len(text):
            raise FormatError("unexpected end of nesting string")
        if text[pos] != "<":
            atom = read_run()
            if not atom:
                raise FormatError(f"expected component at position {pos} in {text!r}")
            leaves.append(atom)
            return Leaf(len(leaves))
        pos += 1
        left = parse_node()
        skip_ws()
        if pos >= len(text) or text[pos] != "-":
            raise FormatError(f"expected '-' at position {pos} in {text!r}")
        pos += 1
        right = parse_node()
        skip_ws()
        if pos >= len(text) or text[pos] != ">":
            raise FormatError(f"unbalanced brackets in {text!r}")
        pos += 1
        skip_ws()
        name = read_run()
        label = None
        if name:
            try:
                validate_label_name(name)
            except ValueError as e:
                raise FormatError(str(e)) from None
            label = Label(name)
        return Node(left, right, label)

    tree = parse_node()
    skip_ws()
    if pos != len(text):
        raise FormatError(f"trailing characters at position {pos} in {text!r}")
    return tree, leaves


def render_bracket(tree: NestingTree, leaves: Optional[Sequence[str]] = None) -> str:
    """Canonical (space-free) rendering; leaf i prints leaves[i-1] or its index."""
    if tree.is_leaf:
        return str(tree.component) if leaves is None else leaves[tree.component - 1]
    left = render_bracket(tree.left, leaves)
    right = render_bracket(tree.right, leaves)
    name = tree.label.name if tree.label is not None else ""
    return f"<{left}-{right}>{name}"
