#!/usr/bin/env python3
"""Fibers and iterated preimage trees.

A rational map of degree n sends n points (with multiplicity) onto each
target, so pulling a point back m times yields a tree whose level-k
multiplicities always sum to n**k.  This walk-through builds fibers and
trees for the benchmark maps and exports one tree as CSV.
"""

from lyubich_lab import (builtin_map, iterated_preimages, preimages,
                         sampled_tree)

quad = builtin_map("quad")          # z^2
cheb = builtin_map("chebyshev")     # z^2 - 2

print("== single fibers ==")
print("solutions of z^2 = 4:      ", [(p.value, m) for p, m in preimages(quad, 4).atoms])
print("solutions of z^2 - 2 = -2: ", [(p.value, m) for p, m in preimages(cheb, -2).atoms])
print("   (the double root at 0 carries multiplicity 2: the fiber mass is")
print("    always exactly the degree)")

print()
print("== iterated tree for z^2 - 2 rooted at w = 2 ==")
tree = iterated_preimages(cheb, 2, depth := 4)
for k in range(depth + 1):
    atoms = tree.level_atoms(k)
    mass = sum(m for _, m in atoms)
    labels = ", ".join(f"{p.value.real:+.3f}({m})" for p, m in atoms[:6])
    more = " ..." if len(atoms) > 6 else ""
    print(f"level {k}: {len(atoms):3d} atoms, multiplicity sum {mass:4d}"
          f" = 2^{k}   [{labels}{more}]")

print()
print("== Monte Carlo surrogate trees ==")
single = sampled_tree(quad, 1, 20, branches_per_node=1, seed=5)
orbit_point = single.level(20).points[0]
print("one random backward orbit of z^2 after 20 steps:", orbit_point)
print("|z| =", abs(orbit_point), " (backward orbits of z^2 live on the circle)")

full = iterated_preimages(quad, 1, 3)
both = sampled_tree(quad, 1, 3, branches_per_node=2, seed=5)
same = all((both.level(k).points == full.level(k).points).all()
           for k in range(4))
print("branches_per_node = degree reproduces the full tree exactly:", same)

tree.to_csv("chebyshev_tree.csv")
print()
print("wrote chebyshev_tree.csv (columns: level, re, im, cumulative_mult, parent_index)")
