"""
Covariant phase estimation
==========================

The circular variance of the time estimate from ``m`` copies of ``|+>``
falls roughly like ``1/m``.
"""

from cgpo_kit.presets import paper_hamiltonian
from cgpo_kit.protocols.phase import loglog_slope, variance_scaling
from cgpo_kit.qcore import plus_state

H = paper_hamiltonian()
ms = [2, 4, 8, 16, 32, 64]
rows = variance_scaling(plus_state(), H, ms, shots=20_000, seed=0)
for r in rows:
    print(f"m = {r['m']:3d}  L = {r['L']:4d}  sampled var = {r['variance']:.4e}  exact var = {r['exact_variance']:.4e}")
print("log-log slope (sampled):", round(loglog_slope(ms, [r["variance"] for r in rows]), 3))
print("log-log slope (exact):  ", round(loglog_slope(ms, [r["exact_variance"] for r in rows]), 3))
