import numpy as np
import pytest

from helpers import tiny_config

from sancomp import numkit as nk
from sancomp.core import SancompError, Sentence, Token
from sancomp.encoder import (
    ContextualVectors,
    TokenEncoder,
    Vocabulary,
    build_vocab,
    load_pretrained_vectors,
    read_contextual_vectors,
    write_contextual_vectors,
)


def sentence(*surfaces, sid="s1"):
    return Sentence(tuple(Token(s) for s in surfaces), (), sid=sid)


def make_encoder(config, sentences, pretrained=None, dtype=np.float32):
    store = nk.ParamStore(dtype=dtype)
    vocab = build_vocab(sentences)
    rng = np.random.default_rng(config.seed)
    return TokenEncoder(store, config, vocab, rng, pretrained), store, vocab


class TestVocabulary:
    def test_shared_word_single_index(self):
        vocab = build_vocab([sentence("rāmaḥ", "gacchati"), sentence("rāmaḥ", "vanam")])
        assert vocab.word_id("rāmaḥ") == vocab.word_id("rāmaḥ")
        assert len([w for w in vocab.words if w == "rāmaḥ"]) == 1

    def test_unseen_maps_to_unk(self):
        vocab = build_vocab([sentence("a", "b")])
        assert vocab.word_id("never-seen") == 1
        assert vocab.char_ids("q") == [0]

    def test_min_count_drops_hapax(self):
        vocab = build_vocab([sentence("twice", "once"), sentence("twice")], min_count=2)
        assert vocab.word_id("once") == 1  # UNK
        assert vocab.word_id("twice") > 1

    def test_deterministic_sorted_assignment(self):
        v1 = build_vocab([sentence("b", "a", "c")])
        v2 = build_vocab([sentence("c", "a"), sentence("b")])
        assert v1.words == v2.words

    def test_text_roundtrip(self):
        vocab = build_vocab([sentence("rāmaḥ", "सीता")])
        assert Vocabulary.from_text(vocab.to_text()) == vocab


class TestEmbedTokens:
    def test_published_dims_concatenate_to_450(self):
        config = tiny_config(word_dim=300, char_feature_dim=100, span_dim=50,
                             char_dim=16, lstm_hidden=8)
        enc, _, _ = make_encoder(config, [sentence("a", "b")])
        vectors = enc.embed_tokens(sentence("a", "b"))
        assert all(v.shape == (450,) for v in vectors)

    def test_no_span_encoding_drops_to_400(self):
        config = tiny_config(word_dim=300, char_feature_dim=100, span_dim=50,
                             char_dim=16, lstm_hidden=8, use_span_encoding=False)
        enc, store, _ = make_encoder(config, [sentence("a", "b")])
        assert "embed.span" not in store
        vectors = enc.embed_tokens(sentence("a", "b"))
        assert all(v.shape == (400,) for v in vectors)

    def test_identical_tokens_identical_vectors(self):
        config = tiny_config()
        enc, _, _ = make_encoder(config, [sentence("same", "same")])
        v1, v2 = enc.embed_tokens(sentence("same", "same"))
        assert np.array_equal(v1.data, v2.data)

    def test_span_table_has_two_rows_selected_by_flag(self):
        config = tiny_config()
        comp = Token("x", is_component=True, compound_id="c", component_index=1)
        comp2 = Token("x", is_component=True, compound_id="c", component_index=2)
        from sancomp.core import Compound

        sent = Sentence((comp, comp2, Token("x")), (Compound("c", 1, 2),), sid="s1")
        enc, store, _ = make_encoder(config, [sent])
        assert store["embed.span"].shape == (2, config.span_dim)
        vectors = enc.embed_tokens(sent)
        span_of = lambda v: v.data[-config.span_dim:]
        assert np.array_equal(span_of(vectors[0]), store["embed.span"].data[0])
        assert np.array_equal(span_of(vectors[2]), store["embed.span"].data[1])
        assert not np.array_equal(span_of(vectors[0]), span_of(vectors[2]))


class TestEncode:
    def test_single_token_shape(self):
        config = tiny_config()
        enc, _, _ = make_encoder(config, [sentence("only")])
        hidden = enc.encode(sentence("only"))
        assert hidden.shape == (2, 2 * config.lstm_hidden)

    def test_shape_contract_many_tokens(self):
        config = tiny_config()
        sent = sentence("a", "b", "c", "d", "e")
        enc, _, _ = make_encoder(config, [sent])
        assert enc.encode(sent).shape == (6, 2 * config.lstm_hidden)

    def test_bidirectional_sensitivity(self):
        config = tiny_config()
        enc, _, _ = make_encoder(config, [sentence("a", "b")])
        forward = enc.encode(sentence("a", "b")).data
        flipped = enc.encode(sentence("b", "a")).data
        assert not np.allclose(forward[1], flipped[2])

    def test_deterministic_without_dropout(self):
        config = tiny_config(dropout=0.0)
        sent = sentence("a", "b", "c")

        def run():
            enc, _, _ = make_encoder(config, [sent])
            return enc.encode(sent, train=True, rng=np.random.default_rng(0)).data

        assert np.array_equal(run(), run())

    def test_empty_sentence_rejected(self):
        config = tiny_config()
        enc, _, _ = make_encoder(config, [sentence("a")])
        with pytest.raises(ValueError):
            enc.encode(Sentence((), (), sid="s0"))


class TestPretrainedVectors:
    def test_vec_file_with_header(self, tmp_path):
        path = tmp_path / "emb.vec"
        path.write_text("2 3\nrāmaḥ 0.1 0.2 0.3\nvanam 1 2 3\n", encoding="utf-8")
        vectors = load_pretrained_vectors(path)
        assert set(vectors) == {"rāmaḥ", "vanam"}
        assert np.allclose(vectors["rāmaḥ"], [0.1, 0.2, 0.3])

    def test_initializes_known_rows(self, tmp_path):
        path = tmp_path / "emb.vec"
        dim = 16
        values = " ".join(["0.5"] * dim)
        path.write_text(f"known {values}\n", encoding="utf-8")
        config = tiny_config(word_dim=dim)
        enc, store, vocab = make_encoder(
            config, [sentence("known", "unknown")], pretrained=load_pretrained_vectors(path)
        )
        word_table = store["embed.word"].data
        assert np.allclose(word_table[vocab.word_id("known")], 0.5)
        assert not np.allclose(word_table[vocab.word_id("unknown")], 0.5)
        assert store["embed.word"].requires_grad  # fine-tuned, not frozen

    def test_dim_mismatch(self, tmp_path):
        path = tmp_path / "emb.vec"
        path.write_text("known 1.0 2.0\n", encoding="utf-8")
        with pytest.raises(SancompError, match="dim"):
            make_encoder(tiny_config(word_dim=16), [sentence("known")],
                         pretrained=load_pretrained_vectors(path))


class TestContextualVectors:
    def test_file_roundtrip(self, tmp_path):
        path = tmp_path / "ctx.nctv"
        data = {
            "s1": np.arange(12, dtype=np.float32).reshape(3, 4),
            "s2": np.ones((2, 4), dtype=np.float32),
        }
        write_contextual_vectors(path, data)
        loaded = read_contextual_vectors(path)
        assert loaded.dim == 4
        assert set(loaded.by_sentence) == {"s1", "s2"}
        assert np.array_equal(loaded.by_sentence["s1"], data["s1"])

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.nctv"
        path.write_bytes(b"XXXX" + b"\x00" * 8)
        with pytest.raises(Exception, match="not a contextual vector file"):
            read_contextual_vectors(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "ctx.nctv"
        write_contextual_vectors(path, {"s1": np.ones((2, 3), dtype=np.float32)})
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(Exception, match="truncated"):
            read_contextual_vectors(path)

    def test_encode_with_contextual(self):
        dim = 8
        config = tiny_config(word_dim=dim, use_contextual_vectors=True)
        sent = sentence("a", "b", sid="s1")
        enc, store, _ = make_encoder(config, [sent])
        assert "embed.word" not in store
        ctx = ContextualVectors(dim, {"s1": np.ones((2, dim), dtype=np.float32)})
        hidden = enc.encode(sent, contextual=ctx.rows_for("s1", 2))
        assert hidden.shape == (3, 2 * config.lstm_hidden)

    def test_missing_sentence_errors(self):
        ctx = ContextualVectors(4, {})
        with pytest.raises(SancompError, match="missing contextual"):
            ctx.rows_for("nope", 3)

    def test_token_count_mismatch_errors(self):
        ctx = ContextualVectors(4, {"s1": np.ones((2, 4), dtype=np.float32)})
        with pytest.raises(SancompError, match="shape"):
            ctx.rows_for("s1", 3)

    def test_missing_rows_at_embed_time(self):
        config = tiny_config(word_dim=4, use_contextual_vectors=True)
        sent = sentence("a", "b", sid="s1")
        enc, _, _ = make_encoder(config, [sent])
        with pytest.raises(SancompError, match="missing contextual vector"):
            enc.embed_tokens(sent, contextual=None)
