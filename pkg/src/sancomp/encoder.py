"""Token representation and the sentence encoder.

Each token vector is the concatenation of a word embedding (or a
precomputed contextual vector), a character-convolution feature (window 3,
max-pooled), and a span-encoding vector chosen from two learned rows by
whether the token is a compound component. A 2-layer bidirectional LSTM
produces the hidden states; the Global node gets a dedicated learned state
projected to the same output width.

A frozen encoder is safe for concurrent inference; training mutates one
confined ParamStore.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from . import numkit as nk
from .core import FormatError, ModelConfig, SancompError, Sentence

PAD = "<pad>"
UNK = "<unk>"


class Vocabulary:
    """Word and character index maps. Build from the training split only."""

    def __init__(self, words: Sequence[str], chars: Sequence[str]):
        self.words = tuple(words)
        self.chars = tuple(chars)
        if self.words[:2] != (PAD, UNK) or self.chars[:1] != (UNK,):
            raise ValueError("vocabulary must reserve PAD/UNK entries")
        self._word_index = {w: i for i, w in enumerate(self.words)}
        self._char_index = {c: i for i, c in enumerate(self.chars)}
        if len(self._word_index) != len(self.words) or len(self._char_index) != len(self.chars):
            raise ValueError("duplicate vocabulary entries")

    def __eq__(self, other):
        return (
            isinstance(other, Vocabulary)
            and self.words == other.words
            and self.chars == other.chars
        )

    @property
    def n_words(self) -> int:
        return len(self.words)

    @property
    def n_chars(self) -> int:
        return len(self.chars)

    def word_id(self, surface: str) -> int:
        return self._word_index.get(surface, 1)

    def char_ids(self, surface: str) -> list[int]:
        return [self._char_index.get(c, 0) for c in surface]

    def to_text(self) -> str:
        lines = [f"W\t{w}" for w in self.words[2:]]
        lines += [f"C\t{c}" for c in self.chars[1:]]
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "Vocabulary":
        words, chars = [PAD, UNK], [UNK]
        for line in text.splitlines():
            if not line:
                continue
            kind, _, entry = line.partition("\t")
            (words if kind == "W" else chars).append(entry)
        return cls(words, chars)


def build_vocab(sentences: Sequence[Sentence], min_count: int = 1) -> Vocabulary:
    """Deterministic (sorted) index assignment over the given sentences."""
    counts: dict[str, int] = {}
    chars: set[str] = set()
    for sent in sentences:
        for tok in sent.tokens:
            counts[tok.surface] = counts.get(tok.surface, 0) + 1
            chars.update(tok.surface)
    words = [PAD, UNK] + sorted(w for w, c in counts.items() if c >= min_count)
    return Vocabulary(words, [UNK] + sorted(chars))


def load_pretrained_vectors(path) -> dict[str, np.ndarray]:
    """Read the common .vec text layout: optional `count dim` header, then rows."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if lineno == 1 and len(parts) == 2:
                continue  # header
            if len(parts) < 2:
                continue
            token = parts[0]
            values = np.asarray([float(v) for v in parts[1:] if v], dtype=np.float32)
            if dim is None:
                dim = values.size
            elif values.size != dim:
                raise FormatError(f"{path}:{lineno}: vector of size {values.size}, expected {dim}")
            vectors[token] = values
    return vectors


# --- contextual vector files (NCTV) ---------------------------------------

NCTV_MAGIC = b"NCTV"
NCTV_VERSION = 1


@dataclass(frozen=True)
class ContextualVectors:
    """Per-sentence, per-token dense vectors keyed by sentence id."""

    dim: int
    by_sentence: Mapping[str, np.ndarray]

    def rows_for(self, sid: str, n_tokens: int) -> np.ndarray:
        rows = self.by_sentence.get(sid)
        if rows is None:
            raise SancompError(f"missing contextual vectors for sentence {sid!r}")
        if rows.shape != (n_tokens, self.dim):
            raise SancompError(
                f"contextual vectors for {sid!r} have shape {rows.shape}, "
                f"expected ({n_tokens}, {self.dim})"
            )
        return rows


def write_contextual_vectors(path, by_sentence: Mapping[str, np.ndarray]) -> None:
    dims = {arr.shape[1] for arr in by_sentence.values()}
    if len(dims) != 1:
        raise ValueError("all sentences must share one vector dimension")
    dim = dims.pop()
    with open(path, "wb") as fh:
        fh.write(NCTV_MAGIC)
        fh.write(struct.pack("<II", NCTV_VERSION, dim))
        for sid, arr in by_sentence.items():
            sid_bytes = sid.encode("utf-8")
            fh.write(struct.pack("<I", len(sid_bytes)))
            fh.write(sid_bytes)
            fh.write(struct.pack("<I", arr.shape[0]))
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_contextual_vectors(path) -> ContextualVectors:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != NCTV_MAGIC:
        raise FormatError(f"{path}: not a contextual vector file")
    version, dim = struct.unpack_from("<II", data, 4)
    if version != NCTV_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    offset = 12
    by_sentence: dict[str, np.ndarray] = {}
    while offset < len(data):
        try:
            (sid_len,) = struct.unpack_from("<I", data, offset)
            offset += 4
            sid = data[offset:offset + sid_len].decode("utf-8")
            offset += sid_len
            (n_tokens,) = struct.unpack_from("<I", data, offset)
            offset += 4
            need = n_tokens * dim * 4
            payload = data[offset:offset + need]
            if len(payload) != need:
                raise struct.error("short read")
            offset += need
        except (struct.error, UnicodeDecodeError):
            raise FormatError(f"{path}: truncated or corrupt record") from None
        by_sentence[sid] = np.frombuffer(payload, dtype="<f4").reshape(n_tokens, dim).copy()
    return ContextualVectors(dim, by_sentence)


# --- the encoder -----------------------------------------------------------


def _uniform(rng: np.random.Generator, shape, scale=0.1) -> np.ndarray:
    return rng.uniform(-scale, scale, shape)


def _glorot(rng: np.random.Generator, shape) -> np.ndarray:
    fan_in, fan_out = shape[0], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)


class TokenEncoder:
    """Embedding tables plus the stacked bidirectional recurrent encoder.

    The span-encoding table has exactly two learned rows: row 0 is selected
    for compound components, row 1 for everything else. With contextual
    vectors enabled the word table is not created; the file's vectors stand
    in for word embeddings (config.word_dim must equal the file dimension).
    """

    def __init__(
        self,
        store: nk.ParamStore,
        config: ModelConfig,
        vocab: Vocabulary,
        rng: np.random.Generator,
        pretrained: Optional[Mapping[str, np.ndarray]] = None,
    ):
        self.store = store
        self.config = config
        self.vocab = vocab
        cfg = config
        if not cfg.use_contextual_vectors:
            word = _uniform(rng, (vocab.n_words, cfg.word_dim))
            if cfg.use_pretrained_vectors and pretrained:
                for i, w in enumerate(vocab.words):
                    vec = pretrained.get(w)
                    if vec is None:
                        continue
                    if vec.size != cfg.word_dim:
                        raise SancompError(
                            f"pretrained vectors have dim {vec.size}, config.word_dim is {cfg.word_dim}"
                        )
                    word[i] = vec
            store.add("embed.word", word)
        store.add("embed.char", _uniform(rng, (vocab.n_chars, cfg.char_dim)))
        store.add("charconv.W", _glorot(rng, (3 * cfg.char_dim, cfg.char_feature_dim)))
        store.add("charconv.b", np.zeros(cfg.char_feature_dim))
        if cfg.use_span_encoding:
            store.add("embed.span", _uniform(rng, (2, cfg.span_dim)))
        in_dim = self.embed_dim
        for layer in range(cfg.lstm_layers):
            for direction in ("fw", "bw"):
                prefix = f"lstm.l{layer}.{direction}"
                store.add(f"{prefix}.Wx", _glorot(rng, (in_dim, 4 * cfg.lstm_hidden)))
                store.add(f"{prefix}.Wh", _glorot(rng, (cfg.lstm_hidden, 4 * cfg.lstm_hidden)))
                store.add(f"{prefix}.b", np.zeros(4 * cfg.lstm_hidden))
            in_dim = 2 * cfg.lstm_hidden
        store.add("global.emb", _uniform(rng, (cfg.lstm_hidden,)))
        store.add("global.W", _glorot(rng, (cfg.lstm_hidden, 2 * cfg.lstm_hidden)))
        store.add("global.b", np.zeros(2 * cfg.lstm_hidden))

    @property
    def embed_dim(self) -> int:
        cfg = self.config
        dim = cfg.word_dim + cfg.char_feature_dim
        if cfg.use_span_encoding:
            dim += cfg.span_dim
        return dim

    @property
    def output_dim(self) -> int:
        return 2 * self.config.lstm_hidden

    def _char_feature(self, surface: str) -> nk.Tensor:
        ids = self.vocab.char_ids(surface)
        emb = nk.rows(self.store["embed.char"], ids)
        conv = nk.relu(nk.affine(nk.windows3(emb), self.store["charconv.W"], self.store["charconv.b"]))
        return nk.maxpool_rows(conv)

    def embed_tokens(self, sentence: Sentence, contextual: Optional[np.ndarray] = None) -> list[nk.Tensor]:
        """Per-token concatenation [word or contextual ; char feature ; span]."""
        cfg = self.config
        if cfg.use_contextual_vectors:
            if contextual is None or contextual.shape != (len(sentence), cfg.word_dim):
                raise SancompError(
                    f"sentence {sentence.sid!r}: missing contextual vector for a token"
                )
        vectors = []
        for pos, tok in enumerate(sentence.tokens):
            if cfg.use_contextual_vectors:
                parts = [nk.constant(contextual[pos], dtype=self.store.dtype)]
            else:
                parts = [nk.row(self.store["embed.word"], self.vocab.word_id(tok.surface))]
            parts.append(self._char_feature(tok.surface))
            if cfg.use_span_encoding:
                parts.append(nk.row(self.store["embed.span"], 0 if tok.is_component else 1))
            vectors.append(nk.concat(parts))
        return vectors

    def _run_direction(self, inputs: Sequence[nk.Tensor], prefix: str) -> list[nk.Tensor]:
        cfg = self.config
        wx, wh, b = self.store[f"{prefix}.Wx"], self.store[f"{prefix}.Wh"], self.store[f"{prefix}.b"]
        h = nk.constant(np.zeros(cfg.lstm_hidden), dtype=self.store.dtype)
        c = nk.constant(np.zeros(cfg.lstm_hidden), dtype=self.store.dtype)
        states = []
        size = cfg.lstm_hidden
        for x in inputs:
            gates = nk.add(nk.add(nk.matmul(x, wx), nk.matmul(h, wh)), b)
            i = nk.sigmoid(nk.slice1d(gates, 0, size))
            f = nk.sigmoid(nk.slice1d(gates, size, 2 * size))
            g = nk.tanh(nk.slice1d(gates, 2 * size, 3 * size))
            o = nk.sigmoid(nk.slice1d(gates, 3 * size, 4 * size))
            c = nk.add(nk.mul(f, c), nk.mul(i, g))
            h = nk.mul(o, nk.tanh(c))
            states.append(h)
        return states

    def encode(
        self,
        sentence: Sentence,
        train: bool = False,
        rng: Optional[np.random.Generator] = None,
        contextual: Optional[np.ndarray] = None,
    ) -> nk.Tensor:
        """Hidden states (M'+1, 2*lstm_hidden); row 0 is the Global node."""
        if len(sentence) == 0:
            raise ValueError("cannot encode an empty sentence")
        cfg = self.config
        seq = self.embed_tokens(sentence, contextual)
        for layer in range(cfg.lstm_layers):
            fwd = self._run_direction(seq, f"lstm.l{layer}.fw")
            bwd = self._run_direction(seq[::-1], f"lstm.l{layer}.bw")[::-1]
            seq = [nk.concat([f, b]) for f, b in zip(fwd, bwd)]
            if layer + 1 < cfg.lstm_layers and train and cfg.dropout > 0.0:
                seq = [nk.dropout(v, cfg.dropout, rng, train) for v in seq]
        global_state = nk.tanh(
            nk.affine(self.store["global.emb"], self.store["global.W"], self.store["global.b"])
        )
        return nk.stack([global_state] + seq)
