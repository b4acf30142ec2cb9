"""
Lorenz curves and the extended second laws
==========================================

A qutrit distribution pushed through a random Gibbs-preserving stochastic
matrix: its Lorenz curve drops and every extended free energy decreases.
"""

import math

import numpy as np

from cgpo_kit import HarmonicHamiltonian
from cgpo_kit.feasibility import blackwell_oracle, random_gp_stochastic_matrix
from cgpo_kit.thermo import extended_free_energy, gibbs_distribution, lorenz_curve

H = HarmonicHamiltonian((0, 1, 2), 1.0, 0.7)
g = gibbs_distribution(H)
p = np.array([0.05, 0.15, 0.8])
T = random_gp_stochastic_matrix(H, H.beta, seed=1)
q = T @ p

print("Gibbs:", np.round(g, 4), " T g - g:", np.abs(T @ g - g).max())
print("curve(p) :", [tuple(round(c, 3) for c in pt) for pt in lorenz_curve(p, g).breakpoints])
print("curve(Tp):", [tuple(round(c, 3) for c in pt) for pt in lorenz_curve(q, g).breakpoints])
print("p -> Tp allowed:", blackwell_oracle(p, q, H, H.beta), " Tp -> p allowed:", blackwell_oracle(q, p, H, H.beta))

for a in (0.0, 0.5, 1.0, 2.0, math.inf, -1.0):
    fa, fb = extended_free_energy(p, H, H.beta, a), extended_free_energy(q, H, H.beta, a)
    print(f"alpha = {a:>5}:  F_alpha(p) = {fa:8.4f}   F_alpha(Tp) = {fb:8.4f}")
