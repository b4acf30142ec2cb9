"""
Correlated catalysts
====================

A covariant Gibbs-preserving map on three copies is compiled into a
one-copy conversion with a catalyst of two system copies and a 3-level
label. The catalyst comes back exactly; the system ends in the average
single-copy marginal.

The second half shows the limit of covariant maps: an incoherent input
cannot be turned into a coherent output, with or without a catalyst.
"""

from cgpo_kit.presets import paper_hamiltonian, paper_rho
from cgpo_kit.protocols.catalyst import build_catalyst
from cgpo_kit.protocols.convert import CatalyticBudget, correlated_catalytic_convert, search_cgpo_map
from cgpo_kit.qcore import plus_state
from cgpo_kit.thermo import gibbs_state

H = paper_hamiltonian()
g = gibbs_state(H)
P = plus_state()
rho, target = 0.9 * P + 0.1 * g, 0.5 * P + 0.5 * g

lam = search_cgpo_map(rho, target, H, H.beta, 3, CatalyticBudget(bisection_steps=6))
cat, report, _ = build_catalyst(lam, rho, target)
print(f"catalyst dimension {cat.dim}, exactness {report.catalyst_exactness:.1e}")
print(f"system error {report.system_error:.2e}, mutual information {report.mutual_information:.2e}")

rep = correlated_catalytic_convert(rho, target, H, H.beta, CatalyticBudget(max_copies=2, bisection_steps=6))
print("coherent -> less coherent:", rep.status, f"error {rep.error:.2e} via {rep.route}")

rep = correlated_catalytic_convert(paper_rho(), P, H, H.beta, CatalyticBudget(max_copies=1, bisection_steps=6))
print("incoherent -> |+>:", rep.status, f"error {rep.error:.4f} (never below 1 for a diagonal output)")
rep = correlated_catalytic_convert(g, paper_rho(), H, H.beta)
print("Gibbs -> rho:", rep.status, f"free-energy gap {rep.gap:.4f}")
