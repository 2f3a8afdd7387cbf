"""What the span metrics measure, on a worked example.

For a four-component compound the gold analysis has three labeled spans.
The prediction below gets the smallest span and the full span right but
invents (3,4) instead of (1,3): one true positive lost, one false positive
gained, and the compound no longer matches exactly.
"""

from sancomp import Label, SpanTuple
from sancomp.metrics import (
    bucket_by_components,
    exact_match,
    global_span_accuracy,
    span_scores,
)

A, B, C = Label("A"), Label("B"), Label("C")

gold = {"c1": {SpanTuple(1, 2, A), SpanTuple(1, 3, B), SpanTuple(1, 4, C)}}
pred = {"c1": {SpanTuple(1, 2, A), SpanTuple(3, 4, B), SpanTuple(1, 4, C)}}

uss, lss = span_scores(pred, gold)
print("two of three tuples survive:")
print(f"  USS  P={uss.precision:.4f} R={uss.recall:.4f} F1={uss.f1:.4f}")
print(f"  LSS  P={lss.precision:.4f} R={lss.recall:.4f} F1={lss.f1:.4f}")
print(f"  EM   {exact_match(pred, gold):.4f}")
print(f"  global span found: {global_span_accuracy(pred, gold):.4f}")

# labels only ever remove credit: same spans, one label flipped
gold2 = {"c2": {SpanTuple(1, 2, A)}}
pred2 = {"c2": {SpanTuple(1, 2, B)}}
uss2, lss2 = span_scores(pred2, gold2)
print(f"\nlabel-only error: USS {uss2.f1:.1f} vs LSS {lss2.f1:.1f}")

# per-size breakdown pools tuples within each component-count bucket
gold.update(gold2)
pred.update(pred2)
print("\nbuckets (component count -> LSS F1, compounds):")
for n, bucket in bucket_by_components(pred, gold).items():
    print(f"  N={n}: {bucket.lss_f1:.4f} over {bucket.count}")
