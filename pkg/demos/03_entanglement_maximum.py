"""Biased qubit: the entanglement peaks at an interior coupling strength.

Any finite level asymmetry changes the story qualitatively.  The bias acts as
a local field that polarizes the qubit once it exceeds the collapsing
renormalized tunneling scale, and a polarized qubit is weakly entangled.  The
competition between falling <sigma_x> and rising <sigma_z> makes the Bloch
vector length non-monotonic, so the entropy passes through a maximum at some
alpha_M < 1 and then drops toward zero.

The golden-section refinement locates alpha_M to 0.01.
"""

import sys

from spinboson_nrg import NRGConfig, SpinBosonPoint, find_alpha_max, run_point

config = NRGConfig()
eps_over_delta = 0.1
delta_ratio = 0.04

print("scanning alpha at eps/Delta = 0.1 ...", file=sys.stderr)
print(f"{'alpha':>6} {'<sigma_x>':>10} {'<sigma_z>':>10} {'E [bits]':>9}")
for i in range(1, 10):
    alpha = round(0.1 * i, 1)
    rec = run_point(
        SpinBosonPoint(alpha=alpha, epsilon=eps_over_delta, delta_ratio=delta_ratio),
        config,
    )
    print(f"{alpha:6.1f} {rec.sx:10.5f} {rec.sz:10.5f} {rec.entropy:9.5f}")

print("\nrefining the maximum ...", file=sys.stderr)
result = find_alpha_max(eps_over_delta, delta_ratio, config)
print(f"\nalpha_M = {result.alpha_m:.3f}  with  E(alpha_M) = {result.entropy_max:.5f} bits")
print(f"({result.n_evaluations} solver evaluations)")
print("\nShrinking eps/Delta pushes alpha_M toward 1 and raises the peak;"
      " the maximum exists for arbitrarily small bias.")
