"""How fast does the space of compound analyses grow?

An N-component compound admits every full binary bracketing of its
components, so the number of candidate structures is the Catalan number
C(N-1). This script prints the growth table and then materializes the
whole (tiny) space for a three-component compound.
"""

from sancomp import catalan, enumerate_parses, render_bracket

print("components  analyses (Catalan)")
for n in range(2, 17):
    print(f"{n:>10}  {catalan(n - 1):>12,}")

components = ["rāja", "putra", "gṛham"]
print(f"\nall bracketings of {'-'.join(components)}:")
for tree in enumerate_parses(len(components)):
    print(" ", render_bracket(tree, components))

# the stream is lazy, so counting a large space does not materialize it
n = 12
count = sum(1 for _ in enumerate_parses(n))
print(f"\nenumerated {count:,} bracketings for {n} components "
      f"(catalan({n - 1}) = {catalan(n - 1):,})")
