"""Phase structure at zero field.

Spontaneous symmetry breaking occurs exactly when the spectral radius of
the odd-odd block of M^2 exceeds 1.  For a two-layer machine with
balanced layers that radius is (mu/2)^2, so the transition sits at
mu = 2.  The second half maximizes the radius over the layer-size simplex
for a fixed coupling chain: the optimum always equals (max mu)^2 / 4 and
is reached by concentrating mass around the strongest edge.
"""

import numpy as np

from nishimori_dbm import (
    ModelSpec,
    maximizer_conditions,
    optimize_form_factors,
    perron_instability_check,
    scan,
)

template = ModelSpec(k=2, alpha=[0.5, 0.5], mu=[1.0], h=[0.0, 0.0])
grid = np.round(np.arange(1.0, 3.01, 0.2), 10)
print("two balanced layers, coupling sweep at h = 0:")
print(f"  {'mu':>5} {'rho':>8} {'x_bar_1':>10}  phase")
for point in scan(template, "mu_edge", grid):
    print(f"  {point.grid_value:5.2f} {point.rho:8.4f} {point.x_bar[0]:10.6f}"
          f"  {point.phase.value}")

print("\nstability probe along the Perron direction (quadratic response "
      "of the reduced objective):")
for mu in (1.5, 3.0):
    spec = ModelSpec(k=2, alpha=[0.5, 0.5], mu=[mu], h=[0.0, 0.0])
    rep = perron_instability_check(spec)
    print(f"  mu={mu}: rho={rep.rho:.3f} -> {rep.verdict}; "
          f"measured {rep.delta_pi[1]:+.3e} vs predicted {rep.predicted[1]:+.3e}")

print("\nbest layer sizes for fixed couplings (radius maximization over the "
      "simplex):")
for mu in ([1.0, 3.0], [2.0, 2.0, 1.0], [1.5, 1.5, 1.5, 1.5]):
    alpha, rho = optimize_form_factors(mu)
    conds = maximizer_conditions(alpha, mu)
    print(f"  mu={mu}: alpha* = {np.round(alpha, 4).tolist()}, "
          f"rho* = {rho:.6f} (= max(mu)^2/4 = {max(mu) ** 2 / 4:.6f}), "
          f"patterns {conds}")
