"""Span-level evaluation: USS/LSS micro-F1, exact match, buckets, throughput.

Predictions and gold standards are both "span indexes": a mapping from
compound id to the set of its labeled span tuples. Scores pool tuples
across all compounds (micro average); a macro variant averages
per-compound F1 instead. All metrics are pure and permutation-invariant
over compound and span order.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .core import SancompError, Sentence
from .treeops import SpanTuple, tree_to_spans

SpanIndex = Mapping[str, Iterable[SpanTuple]]


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class Bucket:
    lss_f1: float
    count: int


@dataclass(frozen=True)
class EvalReport:
    uss: PRF
    lss: PRF
    em: float
    buckets: dict[int, Bucket]
    global_span_accuracy: float
    sentences_per_second: Optional[float] = None

    def render_table(self) -> str:
        lines = [
            f"{'metric':<24}{'P':>9}{'R':>9}{'F1':>9}",
            f"{'USS':<24}{self.uss.precision:>9.4f}{self.uss.recall:>9.4f}{self.uss.f1:>9.4f}",
            f"{'LSS':<24}{self.lss.precision:>9.4f}{self.lss.recall:>9.4f}{self.lss.f1:>9.4f}",
            f"{'EM':<24}{self.em:>27.4f}",
            f"{'global span accuracy':<24}{self.global_span_accuracy:>27.4f}",
        ]
        for n in sorted(self.buckets):
            bucket = self.buckets[n]
            lines.append(f"{f'LSS (N={n})':<24}{bucket.lss_f1:>27.4f}  [{bucket.count} compounds]")
        if self.sentences_per_second is not None:
            lines.append(f"{'sentences/second':<24}{self.sentences_per_second:>27.2f}")
        return "\n".join(lines)

    def to_tsv(self) -> str:
        rows = [
            ("uss_precision", self.uss.precision),
            ("uss_recall", self.uss.recall),
            ("uss_f1", self.uss.f1),
            ("lss_precision", self.lss.precision),
            ("lss_recall", self.lss.recall),
            ("lss_f1", self.lss.f1),
            ("em", self.em),
            ("global_span_accuracy", self.global_span_accuracy),
        ]
        if self.sentences_per_second is not None:
            rows.append(("sentences_per_second", self.sentences_per_second))
        return "\n".join(f"{key}\t{value:.6f}" for key, value in rows)

    def buckets_csv(self) -> str:
        lines = ["n_components,lss_f1,count"]
        for n in sorted(self.buckets):
            bucket = self.buckets[n]
            lines.append(f"{n},{bucket.lss_f1:.6f},{bucket.count}")
        return "\n".join(lines)


def span_index_gold(sentences: Sequence[Sentence]) -> dict[str, frozenset[SpanTuple]]:
    """Gold span sets per compound id, derived from the attached trees."""
    index: dict[str, frozenset[SpanTuple]] = {}
    for sent in sentences:
        for comp in sent.compounds:
            if comp.gold_tree is None:
                raise SancompError(f"compound {comp.id} has no gold annotation")
            index[comp.id] = frozenset(tree_to_spans(comp.gold_tree))
    return index


def span_index_from_parses(parsed) -> dict[str, frozenset[SpanTuple]]:
    """Predicted span sets per compound id from parser output."""
    index: dict[str, frozenset[SpanTuple]] = {}
    for sent in parsed:
        for cp in sent.parses:
            index[cp.compound.id] = frozenset(cp.spans)
    return index


def _labeled(cid: str, spans: Iterable[SpanTuple]) -> set[tuple]:
    return {(cid, s.start, s.end, s.label.name if s.label else "") for s in spans}


def _unlabeled(cid: str, spans: Iterable[SpanTuple]) -> set[tuple]:
    return {(cid, s.start, s.end) for s in spans}


def _prf(tp: int, n_pred: int, n_gold: int) -> PRF:
    if n_pred == 0 and n_gold == 0:
        return PRF(1.0, 1.0, 1.0)
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PRF(precision, recall, f1)


def _check_aligned(pred: SpanIndex, gold: SpanIndex) -> None:
    if set(pred) != set(gold):
        missing = set(gold) - set(pred)
        extra = set(pred) - set(gold)
        raise SancompError(
            f"prediction/gold compound ids differ (missing: {sorted(missing)[:3]}, "
            f"extra: {sorted(extra)[:3]})"
        )


def span_scores(pred: SpanIndex, gold: SpanIndex, average: str = "micro") -> tuple[PRF, PRF]:
    """(USS, LSS): span F1 with labels stripped, and with labels included.

    Duplicate tuples are deduplicated (spans form sets by construction).
    """
    _check_aligned(pred, gold)
    if average not in ("micro", "macro"):
        raise ValueError("average must be 'micro' or 'macro'")
    if average == "micro":
        results = []
        for project in (_unlabeled, _labeled):
            pred_set, gold_set = set(), set()
            for cid in gold:
                pred_set |= project(cid, pred[cid])
                gold_set |= project(cid, gold[cid])
            results.append(_prf(len(pred_set & gold_set), len(pred_set), len(gold_set)))
        return results[0], results[1]
    uss_vals, lss_vals = [], []
    for cid in gold:
        for project, out in ((_unlabeled, uss_vals), (_labeled, lss_vals)):
            p, g = project(cid, pred[cid]), project(cid, gold[cid])
            out.append(_prf(len(p & g), len(p), len(g)))

    def avg(values: list[PRF]) -> PRF:
        if not values:
            return PRF(1.0, 1.0, 1.0)
        return PRF(
            sum(v.precision for v in values) / len(values),
            sum(v.recall for v in values) / len(values),
            sum(v.f1 for v in values) / len(values),
        )

    return avg(uss_vals), avg(lss_vals)


def exact_match(pred: SpanIndex, gold: SpanIndex) -> float:
    """Fraction of compounds with every labeled span correct."""
    _check_aligned(pred, gold)
    if not gold:
        return 1.0
    hits = sum(
        1 for cid in gold if _labeled(cid, pred[cid]) == _labeled(cid, gold[cid])
    )
    return hits / len(gold)


def _component_count(spans: Iterable[SpanTuple]) -> int:
    return max(s.end for s in spans)


def bucket_by_components(pred: SpanIndex, gold: SpanIndex,
                         max_components: int = 10) -> dict[int, Bucket]:
    """Per-N LSS micro-F1 for N in [2, max_components]; larger N excluded.

    Excluded compounds still count toward the overall scores, just not here.
    """
    _check_aligned(pred, gold)
    groups: dict[int, list[str]] = {}
    for cid in gold:
        n = _component_count(gold[cid])
        if 2 <= n <= max_components:
            groups.setdefault(n, []).append(cid)
    buckets = {}
    for n, cids in sorted(groups.items()):
        _, lss = span_scores({c: pred[c] for c in cids}, {c: gold[c] for c in cids})
        buckets[n] = Bucket(lss.f1, len(cids))
    return buckets


def global_span_accuracy(pred: SpanIndex, gold: SpanIndex) -> float:
    """Fraction of compounds whose prediction contains the full span (1, N)."""
    _check_aligned(pred, gold)
    if not gold:
        return 1.0
    hits = 0
    for cid in gold:
        n = _component_count(gold[cid])
        if any(s.start == 1 and s.end == n for s in pred[cid]):
            hits += 1
    return hits / len(gold)


def build_report(pred: SpanIndex, gold: SpanIndex, average: str = "micro",
                 sentences_per_second: Optional[float] = None) -> EvalReport:
    uss, lss = span_scores(pred, gold, average)
    return EvalReport(
        uss=uss,
        lss=lss,
        em=exact_match(pred, gold),
        buckets=bucket_by_components(pred, gold),
        global_span_accuracy=global_span_accuracy(pred, gold),
        sentences_per_second=sentences_per_second,
    )


@dataclass(frozen=True)
class ThroughputStats:
    sentences_per_second: float  # median over timed passes
    pass_rates: tuple[float, ...]


def measure_throughput(parse_fn: Callable[[Sequence[Sentence]], object],
                       sentences: Sequence[Sentence],
                       warmup: int = 1, passes: int = 3) -> ThroughputStats:
    """Median wall-clock sentences/second over >= 3 timed passes (warmup excluded)."""
    if len(sentences) < 1:
        raise SancompError("throughput needs at least one sentence")
    if passes < 1:
        raise SancompError("passes must be >= 1")
    passes = max(passes, 3)
    for _ in range(warmup):
        parse_fn(sentences)
    rates = []
    for _ in range(passes):
        started = time.perf_counter()
        parse_fn(sentences)
        elapsed = time.perf_counter() - started
        rates.append(len(sentences) / elapsed if elapsed > 0 else float("inf"))
    return ThroughputStats(statistics.median(rates), tuple(rates))
