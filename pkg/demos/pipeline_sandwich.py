"""
The estimate / shift / map / shift sandwich
===========================================

A Gibbs-preserving map on one set that is not covariant becomes covariant
once it is wrapped between a shift back by one estimate and a shift forward
by another. The price is an error on each set, bounded by two shift terms
and the error of the inner map.
"""

import numpy as np

from cgpo_kit.channels import apply, is_covariant
from cgpo_kit.feasibility import random_gp_channel
from cgpo_kit.presets import paper_hamiltonian
from cgpo_kit.protocols.pipeline import PipelineParams, cgpo_pipeline, covariance_defect, error_budget_sweep
from cgpo_kit.qcore import plus_state, random_density_matrix, tensor_power, trace_distance
from cgpo_kit.thermo import gibbs_state

H = paper_hamiltonian()
params = PipelineParams(4, 2, 1, 1, 1, L=8)
lam = random_gp_channel(H.tensor_power(2), H.beta, seed=3)
print("inner map covariant:", is_covariant(lam).passed)

ch = cgpo_pipeline(lam, params, H, plus_state())
rng = np.random.default_rng(0)
inputs = [random_density_matrix(16, rng) for _ in range(5)]
print("sandwich covariant:", is_covariant(ch).passed,
      " defect on a t grid:", covariance_defect(ch, np.linspace(0, H.period, 16), inputs))
g = gibbs_state(H)
print("Gibbs error:", trace_distance(apply(ch, tensor_power(g, 4)), tensor_power(g, 2)))

P = plus_state()
rho, target = 0.9 * P + 0.1 * g, 0.6 * P + 0.4 * g
for row in error_budget_sweep(rho, target, H, H.beta, PipelineParams(6, 2, 2, 1, 1), [8, 16], [0.05, 0.1]):
    print(f"L = {row['L']:2d}  delta1 = {row['delta1']:.2f}  measured = {row['measured']:.3f}  bound = {row['bound']:.3f}")
