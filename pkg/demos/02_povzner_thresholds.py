"""How mass disparity delays the onset of moment control.

The normalised Povzner constant C_n(r) must drop below 1 before the loss term
of the moment equation dominates. For equal masses this happens almost
immediately; as r moves away from 1/2 the threshold order k* grows quickly.
"""
import numpy as np

from boltzmix import AngularKernel, CrossSection, SpeciesSet
from boltzmix.povzner import find_kstar_pair, kstar_global, povzner_renormalized

kernel = AngularKernel.constant(1 / (4 * np.pi))
print(" r      C_3(r)    C_10(r)   k*")
for r in np.arange(0.5, 0.91, 0.05):
    print(f"{r:4.2f}  {povzner_renormalized(3, r):8.4f}  {povzner_renormalized(10, r):8.4f}  "
          f"{find_kstar_pair(r, kernel):g}")

print("\nlarge-n behaviour is algebraic, about 2 r_hi^2 / (r_lo^3 (n + 1)):")
for n in (10, 100, 1000):
    print(f"  n = {n:5d}: C_n(0.7) = {povzner_renormalized(n, 0.7):.4e}")

for masses in ([1.0, 1.2], [1.0, 3.0]):
    s = kstar_global(SpeciesSet(masses), CrossSection.uniform(2))
    print(f"\nmasses {masses}: k* = {s.k_star:g} (per-pair table {s.k_star_pairs.tolist()})")
