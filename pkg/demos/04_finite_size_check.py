"""Finite-size verification of the limiting theory.

Exact enumeration over disorder samples shows three signatures of the
mean-equals-variance coupling law at finite N: the disorder-averaged layer
magnetizations approach the solution of the consistency equation as N
grows, magnetizations and overlaps coincide sample-on-average, and the
random pressure concentrates at rate 1/N.
"""

import numpy as np

from nishimori_dbm import ModelSpec, SystemSize, p_var, quenched_run, solve_fixed_point

spec = ModelSpec(k=2, alpha=[0.5, 0.5], mu=[4.0], h=[0.1, 0.1])
theory = solve_fixed_point(spec, tol=1e-11)
p_limit = p_var(theory.x_bar, spec)
print("theory: x_bar =", np.round(theory.x_bar, 8).tolist(),
      f" limiting pressure = {p_limit:.8f}")

print("\nenumeration, 150 disorder samples per size:")
print(f"  {'N':>3} {'E<m_1>':>9} {'E<q_1>':>9} {'|Em-x|':>8} "
      f"{'E[p_N]':>9} {'Var(p_N)':>10}")
for n in (8, 12, 16, 20, 24):
    rep = quenched_run(spec, SystemSize.from_spec(spec, n), 150, 7,
                       engine="enumeration")
    print(f"  {n:3d} {rep.m_mean[0]:9.5f} {rep.q_mean[0]:9.5f} "
          f"{abs(rep.m_mean[0] - theory.x_bar[0]):8.5f} "
          f"{rep.p_mean:9.5f} {rep.p_variance:10.3e}")

print("\nmagnetization-overlap identity (holds on the mean-equals-variance")
print("line; quoted as gap vs 4 x combined standard error):")
rep = quenched_run(spec, SystemSize.from_spec(spec, 20), 150, 7,
                   engine="enumeration")
for r in range(spec.k):
    combined = float(np.hypot(rep.m_stderr[r], rep.q_stderr[r]))
    print(f"  layer {r + 1}: |E<m> - E<q>| = "
          f"{abs(rep.m_mean[r] - rep.q_mean[r]):.5f} vs {4 * combined:.5f}")

print("\nblock-Gibbs sampling at N = 600 (20 disorder samples, 1500 sweeps):")
rep = quenched_run(spec, SystemSize.from_spec(spec, 600), 20, 11,
                   engine="block_gibbs", sweeps=1500, burn_in=300)
print("  E<m> =", np.round(rep.m_mean, 5).tolist(),
      " stderr =", np.round(rep.m_stderr, 5).tolist())
print("  gap to theory:", np.round(np.abs(rep.m_mean - theory.x_bar), 5).tolist())
