"""
The two-level worked example
============================

Eight copies of ``rho = diag(3/200, 197/200)`` versus the coherent target
``|+><+|`` on a qubit with energies ``(0, ln 3)`` at ``beta = 1``.
"""

import numpy as np

from cgpo_kit.presets import paper_rho
from cgpo_kit.worked_example import catalyst_size, measure_prepare_weight, reproduce_example

report = reproduce_example()
v = report.values
print(f"F(rho) = {v['F_rho']:.5f}   F(|+>) = {v['F_rho_prime']:.5f}")
print(f"bracket min eigenvalue = {v['bracket_min_eigenvalue']:.3e}  (oracle bound {v['bracket_oracle_bound']:.3e})")

# the mixing weight decides the distance to |+><+|^8
for row in v["xi_scan"][::20]:
    print(f"c = {row['c']:.4f}   d1 = {row['distance']:.5f}")

# a measure-and-prepare Gibbs-preserving map with the likelihood-ratio test reaches this weight
c = measure_prepare_weight(np.diag(paper_rho()).real, [0.75, 0.25])
print(f"measure-and-prepare weight c = {c:.6f}, d1 = {v['measure_prepare_distance']:.5f}")

print("single-shot covariant search at eps = 0.01:", v["single_shot"]["status"])
print("catalyst:", catalyst_size())
print("all checks:", report.checks)
