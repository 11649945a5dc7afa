"""Binary collisions between species of different mass conserve momentum and
energy exactly, and post-collision brackets split the bracket energy E into a
convex pair p + lambda mu, q - lambda mu. This script fuzzes both facts.
"""
import numpy as np

from boltzmix import CollisionInput, SpeciesSet, collide, energy_identity
from boltzmix.collision import verify_corpus

rng = np.random.default_rng(0)
species = SpeciesSet([1.0, 3.0])
inp = CollisionInput([1.0, -0.5, 2.0], [0.0, 0.3, -1.0], 0, 1)
sigma = np.array([0.0, 0.0, 1.0])
out = collide(inp, sigma, species)
terms = energy_identity(inp, species)
print("post-collision velocities:", out.v_prime, out.v_star_prime)
print(f"E = {terms.E:.6f}, p = {terms.p:.6f}, q = {terms.q:.6f}, lambda = {terms.lam:.6f}")
b2 = 1 + species.mass(0) / species.total_mass * out.v_prime @ out.v_prime
print(f"<v'>^2 = {b2:.12f}  vs  p + lambda sigma.V_hat = {terms.p + terms.lam * sigma @ terms.V_hat:.12f}")

report = verify_corpus(rng, 200_000)
print("\nfuzzed collisions (masses log-uniform in [0.1, 10]):")
for key, value in report.items():
    print(f"  {key:30s} {value:.3g}")
