"""Run a pretrained transformer over corpus sentences and export token vectors.

Compound locations are conveyed to the model by inserting literal bracket
characters around each compound's components before subtokenization; the
bracket words' subtokens are dropped from pooling, as are special tokens.
Every toolkit token maps to its subtoken group via the fast tokenizer's
word alignment, pooled by mean or by first subtoken.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from . import nctv
from .corpus_reader import SentenceTokens, read_corpus, split_compounds

POOLINGS = ("mean-subtokens", "first-subtoken")


class ExportError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExportManifest:
    corpus_path: str
    model_id: str
    output_path: str
    layer: int = -1
    pooling: str = "mean-subtokens"
    context: bool = True
    device: str = "cpu"

    def __post_init__(self):
        if self.pooling not in POOLINGS:
            raise ValueError(f"pooling must be one of {POOLINGS}")


def _bracketed_words(sentence: SentenceTokens) -> tuple[list[str], list[int]]:
    """Model input words plus, per word, the toolkit-token index (-1 = drop)."""
    words: list[str] = []
    keep: list[int] = []
    opens = {start: end for start, end in sentence.compound_spans}
    closes = {end for _, end in sentence.compound_spans}
    for index, token in enumerate(sentence.tokens):
        if index in opens:
            words.append("<")
            keep.append(-1)
        words.append(token.surface)
        keep.append(index)
        if index + 1 in closes:
            words.append(">")
            keep.append(-1)
    return words, keep


def _encode_sentence(sentence, tokenizer, model, layer, pooling, device) -> np.ndarray:
    words, keep = _bracketed_words(sentence)
    encoding = tokenizer(words, is_split_into_words=True, return_tensors="pt")
    word_ids = encoding.word_ids()
    with torch.no_grad():
        output = model(**{k: v.to(device) for k, v in encoding.items()}, output_hidden_states=True)
    hidden = output.hidden_states
    if not -len(hidden) <= layer < len(hidden):
        raise ExportError(f"layer {layer} out of range for a model with {len(hidden)} hidden states")
    states = hidden[layer][0].cpu().numpy()  # (n_subtokens, dim)

    groups: dict[int, list[int]] = {}
    for position, word_id in enumerate(word_ids):
        if word_id is None:
            continue  # special token
        token_index = keep[word_id]
        if token_index < 0:
            continue  # bracket character
        groups.setdefault(token_index, []).append(position)

    vectors = np.zeros((len(sentence.tokens), states.shape[1]), dtype=np.float32)
    for token_index, token in enumerate(sentence.tokens):
        positions = groups.get(token_index)
        if not positions:
            raise ExportError(
                f"sentence {sentence.sid}: token {token.surface!r} aligned to zero subtokens"
            )
        if pooling == "first-subtoken":
            vectors[token_index] = states[positions[0]]
        else:
            vectors[token_index] = states[positions].mean(axis=0)
    return vectors


def export(manifest: ExportManifest) -> dict:
    """Write the NCTV file; returns a small summary dict."""
    sentences = read_corpus(manifest.corpus_path)
    if not manifest.context:
        sentences = split_compounds(sentences)
    try:
        tokenizer = AutoTokenizer.from_pretrained(manifest.model_id)
        model = AutoModel.from_pretrained(manifest.model_id)
    except Exception as e:
        raise ExportError(f"cannot resolve pretrained model {manifest.model_id!r}: {e}") from e
    if not getattr(tokenizer, "is_fast", False):
        raise ExportError("a fast tokenizer is required for subtoken-to-word alignment")
    device = torch.device(manifest.device)
    model = model.to(device)
    model.eval()

    entries = []
    dim = None
    n_tokens = 0
    for sentence in sentences:
        vectors = _encode_sentence(
            sentence, tokenizer, model, manifest.layer, manifest.pooling, device
        )
        if dim is None:
            dim = vectors.shape[1]
        elif vectors.shape[1] != dim:
            raise ExportError("hidden size changed between sentences")
        n_tokens += vectors.shape[0]
        entries.append((sentence.sid, vectors))
    if dim is None:
        raise ExportError(f"{manifest.corpus_path}: no sentences to export")
    nctv.write(manifest.output_path, entries, dim)
    return {"sentences": len(entries), "tokens": n_tokens, "dim": dim}
