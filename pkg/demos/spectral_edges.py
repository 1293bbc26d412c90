"""Where the bulk ends and when a spike escapes it.

For an identity bulk the upper edge of Sigma_hat - Sigma0 is the familiar
(1 + sqrt(phi))^2 - 1 in the scaled units used here, and a spike becomes
visible once it exceeds 1 + sqrt(phi). A heterogeneous bulk moves both.
The last part checks the prediction against a quick simulation.

    python demos/spectral_edges.py
"""

import numpy as np

from covspec.harness import run_bbp
from covspec.rmt import SpectralEnsemble, SpikeModel, bbp_kappa, support_edges

for phi in (0.25, 1.0, 4.0):
    ident = SpectralEnsemble(np.ones(50), np.zeros(50), phi)
    sol = support_edges(ident)
    print(f"phi={phi:<5} MP edges ({sol.E_minus:.4f}, {sol.E_plus:.4f})  refinement {sol.refinement}")

print()
for bulk in (np.ones(100), np.linspace(0.5, 1.5, 100)):
    for phi in (0.25, 1.0):
        model = SpikeModel(d=[4.0], v1=[1.0], r1=[1.0], v2=bulk, r2=np.ones_like(bulk), phi=phi)
        k = bbp_kappa(model)
        label = "identity" if np.all(bulk == 1) else "spread  "
        print(f"{label} bulk, phi={phi:<5} kappa={k.kappa:.4f}  (classical {1 + np.sqrt(phi):.4f})")

# a small spiked simulation: power should rise through d = 2 at phi = 1
n = p = 150
grid = [1.4, 1.8, 2.2, 2.6, 3.0]
res = run_bbp(grid, n, p, reps=100, B=200, seed=5)
print(f"\nsingle spike over identity, n=p={n}")
for d, row in zip(grid, res.rows):
    print(f"  d={d:.1f}  power {row['rejection_rate']:.2f}")
