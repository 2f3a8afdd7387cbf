"""Corpus parsing/serialization, CoNLL export, and dataset statistics.

Record format (UTF-8, `#` comment lines allowed):

    line 1    tokens separated by whitespace; a multi-component compound is
              marked as <comp1-comp2-...>
    line 2..  one bracketed nesting annotation per marked compound, in
              left-to-right order (may be omitted entirely for unannotated
              input)
    blank line terminates the record

Hyphens are reserved as the component separator and may not occur inside
component surface forms. Sentence ids are positional ("s1", "s2", ...);
compound ids are "<sid>.c<k>". Parsing is streaming and single-pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .core import (
    Compound,
    FormatError,
    Label,
    Sentence,
    STRUCTURAL_NAMES,
    Token,
)
from .treeops import (
    DependencyGraph,
    NestingTree,
    parse_bracket,
    render_bracket,
    tree_leaves,
)


def _records(lines) -> list[tuple[int, list[tuple[int, str]]]]:
    """Group numbered lines into blank-line-separated records."""
    records = []
    current: list[tuple[int, str]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if line.strip().startswith("#"):
            continue
        if not line.strip():
            if current:
                records.append((current[0][0], current))
                current = []
            continue
        current.append((lineno, line))
    if current:
        records.append((current[0][0], current))
    return records


def _parse_marker(token: str, lineno: int) -> Optional[list[str]]:
    """Component list for a <a-b-...> marker, None for a plain token."""
    if not token.startswith("<"):
        if ">" in token or "<" in token:
            raise FormatError(f"line {lineno}: unbalanced brackets in token {token!r}")
        return None
    if not token.endswith(">"):
        raise FormatError(f"line {lineno}: unbalanced brackets in token {token!r}")
    inner = token[1:-1]
    if "<" in inner or ">" in inner:
        raise FormatError(f"line {lineno}: nested brackets in token {token!r}")
    components = inner.split("-")
    if any(not c for c in components):
        raise FormatError(f"line {lineno}: empty component in {token!r}")
    if len(components) < 2:
        raise FormatError(f"line {lineno}: compound {token!r} needs at least 2 components")
    return components


def _annotation_tree(text: str, components: Sequence[str], cid: str, lineno: int) -> NestingTree:
    try:
        tree, leaves = parse_bracket(text)
    except FormatError as e:
        raise FormatError(f"line {lineno}: invalid nesting string: {e}") from None
    if len(leaves) != len(components):
        raise FormatError(
            f"line {lineno}: annotation for {cid} has {len(leaves)} components, "
            f"marker has {len(components)}"
        )
    if list(leaves) != list(components):
        raise FormatError(
            f"line {lineno}: annotation components {leaves} do not match marker {list(components)}"
        )
    for label in tree.iter_labels():
        if label is None:
            raise FormatError(f"line {lineno}: annotation for {cid} has an unlabeled node")
        if label.name in STRUCTURAL_NAMES:
            raise FormatError(f"line {lineno}: structural label {label.name} in annotation")
    return tree


def parse_corpus(path, mode: str = "with_context") -> list[Sentence]:
    """Load a corpus file; in without_context mode every compound becomes its
    own single-compound sentence with the context tokens dropped."""
    if mode not in ("with_context", "without_context"):
        raise ValueError(f"mode must be with_context or without_context, got {mode!r}")
    with open(path, encoding="utf-8") as fh:
        records = _records(fh)
    sentences = []
    for index, (_, lines) in enumerate(records, start=1):
        sentences.append(_parse_record(f"s{index}", lines))
    if mode == "without_context":
        sentences = strip_context(sentences)
    return sentences


def parse_corpus_text(text: str, mode: str = "with_context") -> list[Sentence]:
    records = _records(text.splitlines())
    sentences = [
        _parse_record(f"s{i}", lines) for i, (_, lines) in enumerate(records, start=1)
    ]
    return strip_context(sentences) if mode == "without_context" else sentences


def _parse_record(sid: str, lines: list[tuple[int, str]]) -> Sentence:
    lineno, sentence_line = lines[0]
    tokens: list[Token] = []
    markers: list[tuple[str, int, list[str]]] = []  # (cid, start, components)
    for raw in sentence_line.split():
        components = _parse_marker(raw, lineno)
        if components is None:
            tokens.append(Token(raw))
            continue
        cid = f"{sid}.c{len(markers) + 1}"
        start = len(tokens) + 1
        for k, surface in enumerate(components, start=1):
            tokens.append(Token(surface, is_component=True, compound_id=cid, component_index=k))
        markers.append((cid, start, components))

    annotations = lines[1:]
    if annotations and len(annotations) != len(markers):
        raise FormatError(
            f"line {lineno}: record has {len(markers)} compounds "
            f"but {len(annotations)} annotation lines"
        )
    compounds = []
    for k, (cid, start, components) in enumerate(markers):
        tree = None
        if annotations:
            ann_lineno, ann_text = annotations[k]
            tree = _annotation_tree(ann_text, components, cid, ann_lineno)
        compounds.append(Compound(cid, start, start + len(components) - 1, gold_tree=tree))
    try:
        return Sentence(tuple(tokens), tuple(compounds), sid=sid)
    except ValueError as e:
        raise FormatError(f"line {lineno}: {e}") from None


def strip_context(sentences: Sequence[Sentence]) -> list[Sentence]:
    """One single-compound sentence per compound, context tokens dropped.

    Compound ids are preserved so metric alignment against the unstripped
    gold standard keeps working.
    """
    out = []
    for sent in sentences:
        for k, comp in enumerate(sent.compounds, start=1):
            tokens = tuple(
                sent.tokens[pos - 1] for pos in comp.component_positions()
            )
            moved = Compound(comp.id, 1, comp.n_components, gold_tree=comp.gold_tree)
            out.append(Sentence(tokens, (moved,), sid=f"{sent.sid}.{k}" if sent.sid else ""))
    return out


def compound_surfaces(sentence: Sentence, compound: Compound) -> list[str]:
    return [sentence.tokens[pos - 1].surface for pos in compound.component_positions()]


def render_corpus(sentences: Sequence[Sentence]) -> str:
    """Canonical rendering; parse_corpus(render_corpus(x)) round-trips."""
    records = []
    for sent in sentences:
        parts = []
        by_start = {c.token_start: c for c in sent.compounds}
        pos = 1
        while pos <= len(sent.tokens):
            comp = by_start.get(pos)
            if comp is None:
                parts.append(sent.tokens[pos - 1].surface)
                pos += 1
            else:
                parts.append("<" + "-".join(compound_surfaces(sent, comp)) + ">")
                pos = comp.token_end + 1
        lines = [" ".join(parts)]
        annotated = [c for c in sent.compounds if c.gold_tree is not None]
        if annotated:
            if len(annotated) != len(sent.compounds):
                raise ValueError(f"sentence {sent.sid}: mixed annotated/unannotated compounds")
            for comp in sent.compounds:
                lines.append(render_bracket(comp.gold_tree, compound_surfaces(sent, comp)))
        records.append("\n".join(lines))
    return "\n\n".join(records) + "\n"


def write_corpus(sentences: Sequence[Sentence], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_corpus(sentences))


# --- CoNLL-style export ------------------------------------------------------

_CONLL_COLUMNS = 5  # ID FORM HEAD DEPREL COMPOUND_ID


def write_conll(sentences: Sequence[Sentence], graphs: Sequence[DependencyGraph], path) -> None:
    """One `ID FORM HEAD DEPREL COMPOUND_ID` line per token, Global = head 0."""
    if len(sentences) != len(graphs):
        raise ValueError("sentences/graphs length mismatch")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_conll(sentences, graphs))


def render_conll(sentences: Sequence[Sentence], graphs: Sequence[DependencyGraph]) -> str:
    blocks = []
    for sent, graph in zip(sentences, graphs):
        if graph.n_nodes != len(sent) + 1:
            raise ValueError(f"graph/sentence size mismatch for {sent.sid}")
        lines = []
        for i, tok in enumerate(sent.tokens, start=1):
            label = graph.labels[i]
            lines.append(
                f"{i}\t{tok.surface}\t{graph.heads[i]}\t{label.name}\t{tok.compound_id or '_'}"
            )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def parse_conll(path) -> list[tuple[Sentence, DependencyGraph]]:
    with open(path, encoding="utf-8") as fh:
        records = _records(fh)
    out = []
    for index, (_, lines) in enumerate(records, start=1):
        out.append(_parse_conll_record(f"s{index}", lines))
    return out


def _parse_conll_record(sid: str, lines: list[tuple[int, str]]) -> tuple[Sentence, DependencyGraph]:
    tokens: list[Token] = []
    heads: list[Optional[int]] = [None]
    labels: list[Optional[Label]] = [None]
    raw_compounds: list[tuple[str, int]] = []  # (cid, position), in order
    for expected, (lineno, line) in enumerate(lines, start=1):
        cols = line.split("\t")
        if len(cols) != _CONLL_COLUMNS:
            raise FormatError(f"line {lineno}: expected {_CONLL_COLUMNS} columns")
        idx, form, head, deprel, cid = cols
        if int(idx) != expected:
            raise FormatError(f"line {lineno}: token id {idx} out of sequence")
        heads.append(int(head))
        kind = "structural" if deprel in STRUCTURAL_NAMES else "fine"
        labels.append(Label(deprel, kind))
        if cid == "_":
            tokens.append(Token(form))
        else:
            raw_compounds.append((cid, expected))
            component_index = sum(1 for c, _ in raw_compounds if c == cid)
            tokens.append(Token(form, is_component=True, compound_id=cid,
                                component_index=component_index))
    compounds = []
    for cid in dict.fromkeys(c for c, _ in raw_compounds):
        positions = [p for c, p in raw_compounds if c == cid]
        if positions != list(range(positions[0], positions[-1] + 1)):
            raise FormatError(f"compound {cid} is not contiguous")
        compounds.append(Compound(cid, positions[0], positions[-1]))
    sentence = Sentence(tuple(tokens), tuple(compounds), sid=sid)
    return sentence, DependencyGraph(tuple(heads), tuple(labels))


# --- dataset statistics ------------------------------------------------------


@dataclass(frozen=True)
class DatasetStats:
    n_records: int
    n_compounds: int
    histogram: dict[int, int]        # component count -> compounds
    label_freq: dict[str, int]       # label name -> internal-node occurrences


def corpus_stats(sentences: Sequence[Sentence]) -> DatasetStats:
    histogram: dict[int, int] = {}
    label_freq: dict[str, int] = {}
    n_compounds = 0
    for sent in sentences:
        for comp in sent.compounds:
            n_compounds += 1
            histogram[comp.n_components] = histogram.get(comp.n_components, 0) + 1
            if comp.gold_tree is not None:
                for label in comp.gold_tree.iter_labels():
                    label_freq[label.name] = label_freq.get(label.name, 0) + 1
    return DatasetStats(len(sentences), n_compounds, histogram, label_freq)


def stats_csv(stats: DatasetStats) -> str:
    lines = ["section,key,value"]
    lines.append(f"totals,records,{stats.n_records}")
    lines.append(f"totals,compounds,{stats.n_compounds}")
    for n in sorted(stats.histogram):
        lines.append(f"histogram,{n},{stats.histogram[n]}")
    for name in sorted(stats.label_freq):
        lines.append(f"labels,{name},{stats.label_freq[name]}")
    return "\n".join(lines)
