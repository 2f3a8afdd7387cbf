"""Biaffine arc/label scoring, constrained projective decoding, and training.

Decoding is exact under the factorized objective: plain tokens are forced
to the Global node, and each compound independently receives its
maximum-scoring projective single-root tree via an Eisner dynamic program
over arc scores augmented with each arc's best label score. The root arc
is forced to CompoundRoot; internal arcs take their argmax non-structural
label. Every decoded graph satisfies the dependency-graph invariants, so
the full compound span is always among the predicted spans.

Ties prefer the lower head index, then the lower label index.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import numkit as nk
from .core import (
    COMPOUND_ROOT,
    LabelInventory,
    ModelConfig,
    SancompError,
    Sentence,
    collect_labels_from_data,
)
from .encoder import ContextualVectors, TokenEncoder, Vocabulary, build_vocab
from .treeops import (
    DependencyGraph,
    NestingTree,
    SpanTuple,
    compound_arcs,
    dependency_to_tree,
    graph_from_arcs,
    tree_to_dependency,
    tree_to_spans,
)


@dataclass
class ScoreMatrices:
    """arc[d][h] scores head h for dependent d; label[d][h][l] scores label l there."""

    arc: nk.Tensor      # (n_nodes, n_nodes)
    label: nk.Tensor    # (n_nodes, n_nodes, L)

    @property
    def n_nodes(self) -> int:
        return self.arc.shape[0]


class BiaffineScorer:
    """Four ReLU perceptron heads feeding arc and per-label biaffine forms."""

    def __init__(self, store: nk.ParamStore, config: ModelConfig, n_labels: int,
                 rng: np.random.Generator):
        self.store = store
        self.config = config
        self.n_labels = n_labels
        h2 = 2 * config.lstm_hidden
        a, b = config.arc_mlp_dim, config.label_mlp_dim
        def glorot(shape):
            limit = np.sqrt(6.0 / (shape[-2] + shape[-1]))
            return rng.uniform(-limit, limit, shape)

        for name, shape in (
            ("mlp.arc_dep", (h2, a)),
            ("mlp.arc_head", (h2, a)),
            ("mlp.label_dep", (h2, b)),
            ("mlp.label_head", (h2, b)),
        ):
            store.add(f"{name}.W", glorot(shape))
            store.add(f"{name}.b", np.zeros(shape[1]))
        # bilinear weights random, bias terms zero (the usual recipe for
        # this scorer family; an all-zero bilinear would block gradient
        # flow into the encoder on the first update)
        store.add("biaffine.arc.U", glorot((a, a)))
        store.add("biaffine.arc.b", np.zeros(a))
        store.add("biaffine.label.U", glorot((n_labels, b, b)))
        store.add("biaffine.label.u", np.zeros((n_labels, b)))
        store.add("biaffine.label.v", np.zeros((n_labels, b)))
        store.add("biaffine.label.bias", np.zeros(n_labels))

    def _mlp(self, h: nk.Tensor, name: str) -> nk.Tensor:
        return nk.relu(nk.affine(h, self.store[f"{name}.W"], self.store[f"{name}.b"]))

    def score(self, hidden: nk.Tensor) -> ScoreMatrices:
        """hidden: (n_nodes, 2*lstm_hidden) including the Global row."""
        st = self.store
        n = hidden.shape[0]
        arc_dep = self._mlp(hidden, "mlp.arc_dep")
        arc_head = self._mlp(hidden, "mlp.arc_head")
        bilinear = nk.matmul(nk.matmul(arc_dep, st["biaffine.arc.U"]), nk.transpose(arc_head))
        head_bias = nk.reshape(nk.matmul(arc_head, st["biaffine.arc.b"]), (1, n))
        arc = nk.add(bilinear, head_bias)

        lab_dep = self._mlp(hidden, "mlp.label_dep")
        lab_head = self._mlp(hidden, "mlp.label_head")
        planes = []
        for l in range(self.n_labels):
            u_l = nk.plane(st["biaffine.label.U"], l)
            bil = nk.matmul(nk.matmul(lab_dep, u_l), nk.transpose(lab_head))
            dep_term = nk.reshape(nk.matmul(lab_dep, nk.row(st["biaffine.label.u"], l)), (n, 1))
            head_term = nk.reshape(nk.matmul(lab_head, nk.row(st["biaffine.label.v"], l)), (1, n))
            bias = nk.element(st["biaffine.label.bias"], l)
            planes.append(nk.add(nk.add(nk.add(bil, dep_term), head_term), bias))
        label = nk.stack(planes, axis=-1)
        return ScoreMatrices(arc, label)


def eisner_single_root(aug: np.ndarray, root_scores: np.ndarray) -> list[Optional[int]]:
    """Maximum projective single-root tree over nodes 1..n.

    aug[d][h] is the augmented score of head h for dependent d (1-based);
    root_scores[r] scores r as the single root. Returns heads[1..n] with 0
    marking the root. Score ties resolve toward lower head indices.
    """
    n = aug.shape[0] - 1
    if n == 1:
        return [None, 0]
    neg = -np.inf
    ir = np.full((n + 1, n + 1), neg)
    il = np.full((n + 1, n + 1), neg)
    cr = np.full((n + 1, n + 1), neg)
    cl = np.full((n + 1, n + 1), neg)
    bir = np.zeros((n + 1, n + 1), dtype=int)
    bil = np.zeros((n + 1, n + 1), dtype=int)
    bcr = np.zeros((n + 1, n + 1), dtype=int)
    bcl = np.zeros((n + 1, n + 1), dtype=int)
    for i in range(1, n + 1):
        cr[i][i] = cl[i][i] = 0.0
    for width in range(1, n):
        for i in range(1, n - width + 1):
            j = i + width
            # incomplete items share the split set; the preferred split
            # differs so that equal-score trees attach to lower heads
            best, barg = neg, -1
            for q in range(j - 1, i - 1, -1):
                s = cr[i][q] + cl[q + 1][j]
                if s > best:
                    best, barg = s, q
            ir[i][j] = best + aug[j][i]
            bir[i][j] = barg
            best, barg = neg, -1
            for q in range(i, j):
                s = cr[i][q] + cl[q + 1][j]
                if s > best:
                    best, barg = s, q
            il[i][j] = best + aug[i][j]
            bil[i][j] = barg
            best, barg = neg, -1
            for q in range(j, i, -1):
                s = ir[i][q] + cr[q][j]
                if s > best:
                    best, barg = s, q
            cr[i][j] = best
            bcr[i][j] = barg
            best, barg = neg, -1
            for q in range(i, j):
                s = cl[i][q] + il[q][j]
                if s > best:
                    best, barg = s, q
            cl[i][j] = best
            bcl[i][j] = barg

    best_root, best_total = 1, -np.inf
    for r in range(1, n + 1):
        total = cl[1][r] + cr[r][n] + root_scores[r]
        if total > best_total:
            best_root, best_total = r, total

    heads: list[Optional[int]] = [None] * (n + 1)
    heads[best_root] = 0

    def rec_cr(i, j):
        if i == j:
            return
        q = bcr[i][j]
        rec_ir(i, q)
        rec_cr(q, j)

    def rec_cl(i, j):
        if i == j:
            return
        q = bcl[i][j]
        rec_cl(i, q)
        rec_il(q, j)

    def rec_ir(i, j):
        heads[j] = i
        q = bir[i][j]
        rec_cr(i, q)
        rec_cl(q + 1, j)

    def rec_il(i, j):
        heads[i] = j
        q = bil[i][j]
        rec_cr(i, q)
        rec_cl(q + 1, j)

    rec_cl(1, best_root)
    rec_cr(best_root, n)
    return heads


def decode(scores: ScoreMatrices, sentence: Sentence, inventory: LabelInventory) -> DependencyGraph:
    """Constrained decoding; total over any scores, always a valid graph."""
    arc = np.asarray(scores.arc.data, dtype=np.float64)
    label = np.asarray(scores.label.data, dtype=np.float64)
    ns_indices = np.asarray([inventory.index(lab.name) for lab in inventory.non_structural])
    root_index = inventory.compound_root_index
    if ns_indices.size == 0:
        raise SancompError("inventory has no non-structural labels")
    ns_scores = label[:, :, ns_indices]
    best_ns = ns_scores.max(axis=-1)
    best_ns_arg = ns_scores.argmax(axis=-1)

    arcs: dict[int, tuple[int, object]] = {}
    for comp in sentence.compounds:
        nodes = list(comp.component_positions())
        n = len(nodes)
        aug = np.full((n + 1, n + 1), -np.inf)
        for di, d_node in enumerate(nodes, start=1):
            for hi, h_node in enumerate(nodes, start=1):
                if di != hi:
                    aug[di][hi] = arc[d_node, h_node] + best_ns[d_node, h_node]
        root_scores = np.zeros(n + 1)
        for ri, r_node in enumerate(nodes, start=1):
            root_scores[ri] = arc[r_node, 0] + label[r_node, 0, root_index]
        heads = eisner_single_root(aug, root_scores)
        for di, d_node in enumerate(nodes, start=1):
            if heads[di] == 0:
                arcs[d_node] = (0, inventory.get(COMPOUND_ROOT))
            else:
                h_node = nodes[heads[di] - 1]
                chosen = inventory.labels[ns_indices[best_ns_arg[d_node, h_node]]]
                arcs[d_node] = (h_node, chosen)
    return graph_from_arcs(sentence, arcs)


def loss(scores: ScoreMatrices, gold: DependencyGraph, inventory: LabelInventory) -> nk.Tensor:
    """Mean over non-Global nodes of head cross-entropy plus gold-arc label cross-entropy."""
    terms = []
    for d in range(1, gold.n_nodes):
        head = gold.heads[d]
        terms.append(nk.softmax_cross_entropy(nk.row(scores.arc, d), head))
        label_logits = nk.row(nk.plane(scores.label, d), head)
        terms.append(nk.softmax_cross_entropy(label_logits, inventory.index(gold.labels[d].name)))
    return nk.scale(nk.add_n(terms), 1.0 / (gold.n_nodes - 1))


def gold_graph(sentence: Sentence, inventory: LabelInventory) -> DependencyGraph:
    """Dependency view of a sentence's gold trees under the inventory head rules."""
    arcs: dict[int, tuple[int, object]] = {}
    for comp in sentence.compounds:
        if comp.gold_tree is None:
            raise SancompError(f"compound {comp.id} has no gold annotation")
        arcs.update(tree_to_dependency(comp.gold_tree, inventory.head_rules, offset=comp.token_start - 1))
    return graph_from_arcs(sentence, arcs)


@dataclass(frozen=True)
class CompoundParse:
    compound: object
    tree: NestingTree
    spans: tuple[SpanTuple, ...]


@dataclass(frozen=True)
class ParsedSentence:
    sentence: Sentence
    graph: DependencyGraph
    parses: tuple[CompoundParse, ...]


class Model:
    """Bundles config, inventory, vocabulary, and all trainable parameters."""

    def __init__(self, config: ModelConfig, vocab: Vocabulary, inventory: LabelInventory,
                 pretrained=None, dtype=np.float32):
        self.config = config
        self.vocab = vocab
        self.inventory = inventory
        self.rng = np.random.default_rng(config.seed)
        self.store = nk.ParamStore(dtype=dtype)
        self.encoder = TokenEncoder(self.store, config, vocab, self.rng, pretrained)
        self.scorer = BiaffineScorer(self.store, config, len(inventory), self.rng)

    def _contextual_rows(self, sentence: Sentence, contextual: Optional[ContextualVectors]):
        if not self.config.use_contextual_vectors:
            return None
        if contextual is None:
            raise SancompError("model requires contextual vectors but none were provided")
        return contextual.rows_for(sentence.sid, len(sentence))

    def score_sentence(self, sentence: Sentence, train: bool = False,
                       contextual: Optional[ContextualVectors] = None) -> ScoreMatrices:
        rows = self._contextual_rows(sentence, contextual)
        hidden = self.encoder.encode(sentence, train=train, rng=self.rng, contextual=rows)
        return self.scorer.score(hidden)

    def sentence_loss(self, sentence: Sentence, train: bool = True,
                      contextual: Optional[ContextualVectors] = None) -> nk.Tensor:
        scores = self.score_sentence(sentence, train=train, contextual=contextual)
        return loss(scores, gold_graph(sentence, self.inventory), self.inventory)

    def parse_sentence(self, sentence: Sentence,
                       contextual: Optional[ContextualVectors] = None) -> ParsedSentence:
        scores = self.score_sentence(sentence, train=False, contextual=contextual)
        graph = decode(scores, sentence, self.inventory)
        parses = []
        for comp in sentence.compounds:
            tree = dependency_to_tree(compound_arcs(graph, comp))
            parses.append(CompoundParse(comp, tree, tuple(tree_to_spans(tree))))
        return ParsedSentence(sentence, graph, tuple(parses))


def parse(sentences: Sequence[Sentence], model: Model,
          contextual: Optional[ContextualVectors] = None) -> list[ParsedSentence]:
    """Decode + convert each compound; pure given frozen parameters."""
    return [model.parse_sentence(s, contextual) for s in sentences]


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    dev_uss: float
    dev_lss: float
    dev_em: float


@dataclass
class TrainStats:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0  # 1-based; selected by dev labeled-span F1


def train(
    train_sentences: Sequence[Sentence],
    dev_sentences: Sequence[Sentence],
    config: ModelConfig,
    inventory: Optional[LabelInventory] = None,
    pretrained=None,
    contextual: Optional[ContextualVectors] = None,
    stop_dev_em: Optional[float] = None,
    log=None,
) -> tuple[Model, TrainStats]:
    """Mini-batch Adam training with seeded shuffling and per-epoch dev eval.

    Returns the parameters from the best dev-LSS epoch. stop_dev_em, when
    set, ends training early once dev exact match reaches the threshold
    (used by overfitting checks; the epoch budget still applies).
    """
    from .corpus import strip_context
    from .metrics import exact_match, span_index_from_parses, span_index_gold, span_scores

    if not train_sentences:
        raise SancompError("empty training set")
    if not dev_sentences:
        dev_sentences = train_sentences
    if not config.use_context:
        train_sentences = strip_context(train_sentences)
        dev_sentences = strip_context(dev_sentences)
    if inventory is None:
        inventory = collect_labels_from_data(train_sentences)
    model = Model(config, build_vocab(train_sentences), inventory, pretrained)
    gold_index = span_index_gold(dev_sentences)

    stats = TrainStats()
    best_lss = -1.0
    best_values = model.store.values()
    for epoch in range(1, config.epochs + 1):
        order = model.rng.permutation(len(train_sentences))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            model.store.zero_grad()
            for idx in batch:
                sent_loss = model.sentence_loss(train_sentences[int(idx)], train=True,
                                                contextual=contextual)
                nk.backward(nk.scale(sent_loss, 1.0 / len(batch)))
                total += sent_loss.item()
            nk.adam_step(model.store, config.learning_rate)
        parsed = parse(dev_sentences, model, contextual)
        pred_index = span_index_from_parses(parsed)
        uss, lss = span_scores(pred_index, gold_index)
        em = exact_match(pred_index, gold_index)
        epoch_stats = EpochStats(epoch, total / len(train_sentences), uss.f1, lss.f1, em)
        stats.epochs.append(epoch_stats)
        if log is not None:
            log(epoch_stats)
        if lss.f1 > best_lss:
            best_lss = lss.f1
            stats.best_epoch = epoch
            best_values = model.store.values()
        if stop_dev_em is not None and em >= stop_dev_em:
            break
    model.store.load_values(best_values)
    return model, stats


# --- model file ------------------------------------------------------------

MODEL_MAGIC = b"DNCT"
MODEL_VERSION = 1


def _write_block(fh, text: str) -> None:
    payload = text.encode("utf-8")
    fh.write(struct.pack("<I", len(payload)))
    fh.write(payload)


def save_model(model: Model, path) -> None:
    """Binary model file; save/load round-trips bit-exactly."""
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", MODEL_VERSION))
        _write_block(fh, model.config.to_text())
        _write_block(fh, model.inventory.to_text())
        _write_block(fh, model.vocab.to_text())
        names = model.store.names()
        fh.write(struct.pack("<I", len(names)))
        for name in names:
            _write_block(fh, name)
            data = model.store[name].data
            fh.write(struct.pack("<I", data.ndim))
            fh.write(struct.pack(f"<{data.ndim}I", *data.shape))
            fh.write(np.ascontiguousarray(data, dtype="<f4").tobytes())


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise SancompError(f"{self.path}: truncated model file")
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def block(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def load_model(path) -> Model:
    with open(path, "rb") as fh:
        reader = _Reader(fh.read(), path)
    if reader.take(4) != MODEL_MAGIC:
        raise SancompError(f"{path}: not a model file")
    if reader.u32() != MODEL_VERSION:
        raise SancompError(f"{path}: unsupported model version")
    config = ModelConfig.from_text(reader.block())
    inventory = LabelInventory.from_text(reader.block())
    vocab = Vocabulary.from_text(reader.block())
    values: dict[str, np.ndarray] = {}
    for _ in range(reader.u32()):
        name = reader.block()
        rank = reader.u32()
        shape = struct.unpack(f"<{rank}I", reader.take(4 * rank))
        count = int(np.prod(shape)) if shape else 1
        values[name] = np.frombuffer(reader.take(4 * count), dtype="<f4").reshape(shape).copy()
    model = Model(config, vocab, inventory)
    if set(values) != set(model.store.names()):
        raise SancompError(f"{path}: parameter set does not match the configuration")
    model.store.load_values(values)
    return model
