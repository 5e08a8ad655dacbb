#!/usr/bin/env python3
"""The preimage-counting measures and their weak limit.

Weighting depth-m preimages by their branch products and normalizing by
degree**m gives a probability measure; as m grows these converge to the
measure of maximal entropy (the balanced, or Lyubich, measure).  Two
closed forms make the convergence checkable: the squaring map equilibrates
to the uniform circle measure, and z^2 - 2 to the arcsine law on [-2, 2].
"""

from lyubich_lab import (builtin_map, convergence_report, default_root,
                         integrate, iterated_preimages, measure_from_tree,
                         measures_match, pushforward)
from lyubich_lab import test_functions as tf

quad = builtin_map("quad")
cheb = builtin_map("chebyshev")

print("== exact rational weights ==")
mu = measure_from_tree(iterated_preimages(cheb, 2, 2))
for point, weight in mu.atoms():
    print(f"  atom {point.value.real:+.0f}  weight {weight}")
print("  (weights are exact fractions with denominator degree**m)")

print()
print("== the pushforward identity, exactly ==")
tree = iterated_preimages(cheb, 2, 8)
ok = all(
    measures_match(pushforward(measure_from_tree(tree, k), cheb),
                   measure_from_tree(tree, k - 1))
    for k in range(8, 0, -1))
print("pushforward(mu_m) == mu_(m-1) for every level m <= 8:", ok)

print()
print("== moments against closed forms ==")
mu12 = measure_from_tree(iterated_preimages(quad, 1, 12))
print(f"circle:  integral of Re(z)^2 at depth 12 = "
      f"{integrate(mu12, tf.RE2).real:.6f}   (uniform measure gives 0.5)")
mu14 = measure_from_tree(iterated_preimages(cheb, 2, 14))
print(f"arcsine: integral of x^2 at depth 14     = "
      f"{integrate(mu14, tf.RE2).real:.6f}   (law on [-2,2] gives 2)")
print(f"arcsine: integral of x^4 at depth 14     = "
      f"{integrate(mu14, tf.RE4).real:.6f}   (law on [-2,2] gives 6)")

print()
print("== the limit does not depend on the starting point ==")
report = convergence_report(quad, [1.0, -0.5 + 0.3j], [4, 8, 12], [tf.RE2])
print("delta to previous depth / spread across roots, for Re(z)^2:")
for rec in report["records"]:
    if rec["w"][0] == 1.0:
        diff = "--" if rec["diff_prev_m"] is None else f"{rec['diff_prev_m']:.2e}"
        print(f"  m={rec['m']:2d}  value={rec['value'][0]:.6f}  "
              f"diff={diff}  spread={rec['spread_across_w']:.2e}")
print("default root convention (repelling fixed point):",
      default_root(quad).value, default_root(cheb).value)
