import numpy as np
import pytest

from helpers import (
    all_projective_head_vectors,
    synthetic_corpus_text,
    tiny_config,
)

from sancomp import numkit as nk
from sancomp.core import Compound, Label, LabelInventory, SancompError, Sentence, Token, _with_structural
from sancomp.corpus import parse_corpus_text
from sancomp.encoder import build_vocab
from sancomp.metrics import (
    exact_match,
    global_span_accuracy,
    span_index_from_parses,
    span_index_gold,
    span_scores,
)
from sancomp.parser import (
    Model,
    ScoreMatrices,
    decode,
    gold_graph,
    load_model,
    loss,
    parse,
    save_model,
    train,
)
from sancomp.treeops import validate_graph

INV = LabelInventory(
    _with_structural([Label("A"), Label("B"), Label("C")]),
    {"A": "right", "B": "right", "C": "left"},
)
L = len(INV)  # 5: three relation labels + two structural


def single_compound_sentence(n, sid="s1"):
    tokens = tuple(
        Token(f"k{i}", is_component=True, compound_id=f"{sid}.c1", component_index=i)
        for i in range(1, n + 1)
    )
    return Sentence(tokens, (Compound(f"{sid}.c1", 1, n),), sid=sid)


def matrices_from_arrays(arc, label):
    return ScoreMatrices(nk.constant(arc), nk.constant(label))


def compound_score(graph, sentence, arc, label, inventory):
    """Augmented score of a decoded graph's compound arcs (oracle-side)."""
    total = 0.0
    for comp in sentence.compounds:
        for pos in comp.component_positions():
            head = graph.heads[pos]
            lab = graph.labels[pos]
            total += arc[pos, head] + label[pos, head, inventory.index(lab.name)]
    return total


def brute_force_max(sentence, arc, label, inventory):
    """Exhaustive max over all projective single-root analyses per compound."""
    ns = [inventory.index(lab.name) for lab in inventory.non_structural]
    root_idx = inventory.compound_root_index
    total = 0.0
    for comp in sentence.compounds:
        nodes = list(comp.component_positions())
        best = -np.inf
        for heads in all_projective_head_vectors(len(nodes)):
            score = 0.0
            for local_dep, local_head in enumerate(heads, start=1):
                d = nodes[local_dep - 1]
                if local_head == 0:
                    score += arc[d, 0] + label[d, 0, root_idx]
                else:
                    h = nodes[local_head - 1]
                    score += arc[d, h] + max(label[d, h, li] for li in ns)
            best = max(best, score)
        total += best
    return total


class TestScore:
    def build(self, n_tokens):
        config = tiny_config()
        sent = single_compound_sentence(n_tokens)
        model = Model(config, build_vocab([sent]), INV)
        return model, sent

    def test_shapes(self):
        model, sent = self.build(3)
        scores = model.score_sentence(sent)
        assert scores.arc.shape == (4, 4)
        assert scores.label.shape == (4, 4, L)

    def test_doubling_u_doubles_bilinear_part(self):
        model, sent = self.build(3)
        store = model.store
        rng = np.random.default_rng(0)
        store["biaffine.arc.U"].data = rng.uniform(-0.5, 0.5, store["biaffine.arc.U"].shape).astype(np.float32)
        store["biaffine.arc.b"].data[:] = 0.0
        once = model.score_sentence(sent).arc.data.copy()
        store["biaffine.arc.U"].data = 2.0 * store["biaffine.arc.U"].data
        twice = model.score_sentence(sent).arc.data
        assert np.allclose(twice, 2.0 * once, atol=1e-5)

    def test_full_loss_grad_check(self):
        config = tiny_config(
            word_dim=6, char_dim=4, char_feature_dim=6, span_dim=4,
            lstm_hidden=5, arc_mlp_dim=7, label_mlp_dim=5, dropout=0.0,
        )
        tokens = (
            Token("ka", is_component=True, compound_id="s1.c1", component_index=1),
            Token("kha", is_component=True, compound_id="s1.c1", component_index=2),
            Token("ga", is_component=True, compound_id="s1.c1", component_index=3),
            Token("vanam"),
        )
        from sancomp.treeops import Leaf, Node

        tree = Node(Node(Leaf(1), Leaf(2), Label("A")), Leaf(3), Label("B"))
        sent = Sentence(tokens, (Compound("s1.c1", 1, 3, gold_tree=tree),), sid="s1")
        model = Model(config, build_vocab([sent]), INV, dtype=np.float64)
        err = nk.grad_check(lambda: model.sentence_loss(sent, train=False), model.store)
        assert err < 1e-3


class TestDecode:
    def test_all_equal_scores_tiebreak_flat(self):
        sent = single_compound_sentence(3)
        scores = matrices_from_arrays(np.zeros((4, 4), np.float32), np.zeros((4, 4, L), np.float32))
        graph = decode(scores, sent, INV)
        # documented tie-break: lower head index wins
        assert graph.heads == (None, 0, 1, 1)
        assert graph.labels[1].name == "CompoundRoot"
        assert graph.labels[2].name == "A" and graph.labels[3].name == "A"
        assert validate_graph(graph, sent) == []

    def test_rigged_chain(self):
        sent = single_compound_sentence(3)
        arc = np.zeros((4, 4), np.float32)
        arc[1, 2] = arc[2, 3] = arc[3, 0] = 10.0
        label = np.zeros((4, 4, L), np.float32)
        label[1, 2, INV.index("B")] = 1.0
        graph = decode(matrices_from_arrays(arc, label), sent, INV)
        assert graph.heads == (None, 2, 3, 0)
        assert graph.labels[1].name == "B"

    def test_plain_tokens_forced_to_global(self):
        tokens = (
            Token("w1"),
            Token("a", is_component=True, compound_id="c0", component_index=1),
            Token("b", is_component=True, compound_id="c0", component_index=2),
            Token("w2"),
        )
        sent = Sentence(tokens, (Compound("c0", 2, 3),), sid="s1")
        arc = np.random.default_rng(0).normal(size=(5, 5)).astype(np.float32)
        label = np.random.default_rng(1).normal(size=(5, 5, L)).astype(np.float32)
        graph = decode(matrices_from_arrays(arc, label), sent, INV)
        assert graph.heads[1] == 0 and graph.labels[1].name == "GlobalRelation"
        assert graph.heads[4] == 0 and graph.labels[4].name == "GlobalRelation"
        assert validate_graph(graph, sent) == []

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_matches_brute_force(self, n):
        rng = np.random.default_rng(100 + n)
        sent = single_compound_sentence(n)
        for _ in range(25):
            arc = rng.normal(size=(n + 1, n + 1)).astype(np.float32)
            label = rng.normal(size=(n + 1, n + 1, L)).astype(np.float32)
            graph = decode(matrices_from_arrays(arc, label), sent, INV)
            assert validate_graph(graph, sent) == []
            achieved = compound_score(graph, sent, arc.astype(np.float64), label.astype(np.float64), INV)
            best = brute_force_max(sent, arc.astype(np.float64), label.astype(np.float64), INV)
            assert abs(achieved - best) < 1e-9

    def test_label_permutation_invariance_at_arc_level(self):
        # label-symmetric scores: permuting inventory order keeps the arc set
        sent = single_compound_sentence(4)
        rng = np.random.default_rng(5)
        arc = rng.normal(size=(5, 5)).astype(np.float32)
        label = np.broadcast_to(rng.normal(size=(5, 5, 1)), (5, 5, L)).astype(np.float32).copy()
        permuted = LabelInventory(
            _with_structural([Label("C"), Label("A"), Label("B")]),
            {"A": "right", "B": "right", "C": "left"},
        )
        g1 = decode(matrices_from_arrays(arc, label), sent, INV)
        g2 = decode(matrices_from_arrays(arc, label), sent, permuted)
        assert g1.heads == g2.heads


class TestLoss:
    def test_peaked_scores_near_zero(self):
        sent = single_compound_sentence(3)
        text_sent = parse_corpus_text("<k1-k2-k3> w\n<<k1-k2>A-k3>B\n")[0]
        gold = gold_graph(text_sent, INV)
        arc = np.zeros((5, 5), np.float32)
        label = np.zeros((5, 5, L), np.float32)
        for d in range(1, 5):
            arc[d, gold.heads[d]] = 60.0
            label[d, gold.heads[d], INV.index(gold.labels[d].name)] = 60.0
        value = loss(matrices_from_arrays(arc, label), gold, INV)
        assert value.item() < 1e-6

    def test_uniform_scores_entropy(self):
        sent = Sentence((Token("w"),), (), sid="s1")
        gold = gold_graph(sent, INV)
        scores = matrices_from_arrays(np.zeros((2, 2), np.float32), np.zeros((2, 2, L), np.float32))
        value = loss(scores, gold, INV)
        assert value.item() == pytest.approx(np.log(2) + np.log(L), abs=1e-6)

    def test_grad_check_random_scores(self):
        sent = parse_corpus_text("<k1-k2-k3> w\n<<k1-k2>A-k3>B\n")[0]
        gold = gold_graph(sent, INV)
        store = nk.ParamStore(dtype=np.float64)
        rng = np.random.default_rng(8)
        arc = store.add("arc", rng.normal(size=(5, 5)))
        label = store.add("label", rng.normal(size=(5, 5, L)))
        err = nk.grad_check(lambda: loss(ScoreMatrices(arc, label), gold, INV), store)
        assert err < 1e-3


def small_corpus():
    return parse_corpus_text(synthetic_corpus_text(12, seed=1))


class TestTrain:
    def test_empty_training_set(self):
        with pytest.raises(SancompError, match="empty"):
            train([], [], tiny_config())

    def test_loss_decreases_and_stats(self):
        sentences = small_corpus()
        config = tiny_config(epochs=8)
        model, stats = train(sentences, sentences, config)
        assert len(stats.epochs) == 8
        assert stats.epochs[-1].loss < stats.epochs[0].loss
        assert 1 <= stats.best_epoch <= 8

    def test_determinism(self):
        sentences = small_corpus()
        config = tiny_config(epochs=3)
        _, s1 = train(sentences, sentences, config)
        _, s2 = train(sentences, sentences, config)
        assert s1.epochs == s2.epochs
        assert s1.best_epoch == s2.best_epoch

    @pytest.mark.parametrize("ablation", ["full", "no_span", "contextual"])
    def test_gradient_flows_to_every_parameter(self, ablation):
        sentences = small_corpus()
        config = tiny_config()
        contextual = None
        if ablation == "no_span":
            config = config.replace(use_span_encoding=False)
        elif ablation == "contextual":
            from sancomp.encoder import ContextualVectors

            config = config.replace(use_contextual_vectors=True, word_dim=8)
            contextual = ContextualVectors(
                8,
                {s.sid: np.ones((len(s), 8), dtype=np.float32) for s in sentences},
            )
        model = Model(config, build_vocab(sentences), LabelInventory(
            _with_structural([Label("T6"), Label("BV")]), {"T6": "right", "BV": "right"}
        ))
        model.store.zero_grad()
        nk.backward(model.sentence_loss(sentences[0], train=True, contextual=contextual))
        for name, param in model.store.items():
            assert param.grad is not None and np.linalg.norm(param.grad) > 0, name

    def test_loss_non_increasing_after_early_epochs(self):
        sentences = parse_corpus_text(synthetic_corpus_text(30, seed=0))
        model, stats = train(sentences, sentences, tiny_config(epochs=15))
        losses = [e.loss for e in stats.epochs]
        for i in range(4, len(losses) - 1):
            assert losses[i + 1] <= losses[i], (i + 1, losses)

    def test_ablation_no_span_encoding(self):
        sentences = small_corpus()
        config = tiny_config(epochs=2, use_span_encoding=False)
        model, stats = train(sentences, sentences, config)
        assert "embed.span" not in model.store
        assert stats.epochs[-1].dev_lss >= 0.0

    def test_without_context_strips(self):
        sentences = small_corpus()
        config = tiny_config(epochs=1, use_context=False)
        model, stats = train(sentences, sentences, config)
        context_word = "gacchati"
        assert model.vocab.word_id(context_word) == 1  # unknown: context dropped

    def test_no_context_equals_standalone_compound(self):
        from sancomp.corpus import strip_context

        full = parse_corpus_text("w1 <tara-tanu-tapas> w2\n<<tara-tanu>T6-tapas>T6\n")
        model, _ = train(full, full, tiny_config(epochs=2, use_context=False))
        stripped = strip_context(full)[0]
        standalone = parse_corpus_text("<tara-tanu-tapas>\n<<tara-tanu>T6-tapas>T6\n")[0]
        h_stripped = model.encoder.encode(stripped).data
        h_standalone = model.encoder.encode(standalone).data
        assert np.array_equal(h_stripped, h_standalone)
        p1 = model.parse_sentence(stripped)
        p2 = model.parse_sentence(standalone)
        assert p1.parses[0].tree == p2.parses[0].tree


class TestParseOutput:
    def trained(self):
        sentences = small_corpus()
        config = tiny_config(epochs=4)
        model, _ = train(sentences, sentences, config)
        return model, sentences

    def test_contracts(self):
        model, sentences = self.trained()
        parsed = parse(sentences, model)
        for ps in parsed:
            assert validate_graph(ps.graph, ps.sentence) == []
            for cp in ps.parses:
                n = cp.compound.n_components
                assert len(cp.spans) == n - 1
                assert any(s.start == 1 and s.end == n for s in cp.spans)

    def test_two_components_single_span(self):
        sentences = parse_corpus_text("<a-b> w\n<a-b>T6\n")
        config = tiny_config(epochs=1)
        model, _ = train(sentences, sentences, config)
        parsed = parse(sentences, model)
        assert len(parsed[0].parses[0].spans) == 1

    def test_global_span_always_found(self):
        model, sentences = self.trained()
        pred = span_index_from_parses(parse(sentences, model))
        gold = span_index_gold(sentences)
        assert global_span_accuracy(pred, gold) == 1.0


class TestModelFile:
    def test_roundtrip_bit_exact(self, tmp_path):
        sentences = small_corpus()
        config = tiny_config(epochs=2)
        model, _ = train(sentences, sentences, config)
        path = tmp_path / "model.dnct"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.config == model.config
        assert loaded.inventory == model.inventory
        assert loaded.vocab == model.vocab
        for name in model.store.names():
            assert np.array_equal(loaded.store[name].data, model.store[name].data), name
        # saved bytes are reproducible
        path2 = tmp_path / "model2.dnct"
        save_model(loaded, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_identical_parses_after_reload(self, tmp_path):
        sentences = small_corpus()
        model, _ = train(sentences, sentences, tiny_config(epochs=2))
        path = tmp_path / "model.dnct"
        save_model(model, path)
        loaded = load_model(path)
        p1 = span_index_from_parses(parse(sentences, model))
        p2 = span_index_from_parses(parse(sentences, loaded))
        assert p1 == p2

    def test_reject_garbage(self, tmp_path):
        path = tmp_path / "bad.dnct"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(SancompError, match="not a model file"):
            load_model(path)
