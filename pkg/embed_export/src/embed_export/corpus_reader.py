"""Reader for the corpus record format (an independent consumer).

Only the sentence line of each record matters here; annotation lines are
skipped. The conventions mirror the toolkit's documented format: records
are blank-line separated, `#` lines are comments, compounds appear as
`<comp1-comp2-...>`, sentence ids are positional ("s1", "s2", ...), and
context-free mode flattens to one sentence per compound with ids
"<sid>.<k>".
"""

from __future__ import annotations

from dataclasses import dataclass


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class TokenRef:
    surface: str
    is_component: bool


@dataclass(frozen=True)
class SentenceTokens:
    sid: str
    tokens: tuple[TokenRef, ...]
    compound_spans: tuple[tuple[int, int], ...]  # 0-based [start, end) token ranges


def read_corpus(path) -> list[SentenceTokens]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    sentences = []
    at_record_start = True
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped.startswith("#"):
            continue
        if not stripped:
            at_record_start = True
            continue
        if at_record_start:
            sentences.append(_parse_sentence_line(f"s{len(sentences) + 1}", stripped, lineno))
            at_record_start = False
        # else: annotation line, irrelevant for embedding export
    return sentences


def _parse_sentence_line(sid: str, line: str, lineno: int) -> SentenceTokens:
    tokens: list[TokenRef] = []
    spans: list[tuple[int, int]] = []
    for raw in line.split():
        if raw.startswith("<"):
            if not raw.endswith(">") or "<" in raw[1:-1] or ">" in raw[1:-1]:
                raise CorpusError(f"line {lineno}: malformed compound marker {raw!r}")
            components = raw[1:-1].split("-")
            if len(components) < 2 or any(not c for c in components):
                raise CorpusError(f"line {lineno}: malformed compound marker {raw!r}")
            start = len(tokens)
            tokens.extend(TokenRef(c, True) for c in components)
            spans.append((start, len(tokens)))
        else:
            if "<" in raw or ">" in raw:
                raise CorpusError(f"line {lineno}: unbalanced brackets in token {raw!r}")
            tokens.append(TokenRef(raw, False))
    if not tokens:
        raise CorpusError(f"line {lineno}: empty sentence")
    return SentenceTokens(sid, tuple(tokens), tuple(spans))


def split_compounds(sentences: list[SentenceTokens]) -> list[SentenceTokens]:
    """Context-free view: one sentence per compound, ids '<sid>.<k>'."""
    out = []
    for sent in sentences:
        for k, (start, end) in enumerate(sent.compound_spans, start=1):
            out.append(
                SentenceTokens(
                    f"{sent.sid}.{k}",
                    sent.tokens[start:end],
                    ((0, end - start),),
                )
            )
    return out
