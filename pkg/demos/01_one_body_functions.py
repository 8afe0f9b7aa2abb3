"""Walkthrough of the one-body building blocks.

Everything downstream is assembled from two Gaussian expectations and
their derivatives:

    psi(x) = E log 2 cosh(z sqrt(x) + x)     (one-body pressure)
    F(h)   = E tanh(z sqrt(h) + h)           (magnetization function)

The mean-equals-variance argument ties them together, F = 2 psi' - 1, and
makes the odd and even moments of tanh coincide.  The residual of that
identity under the quadrature rule doubles as a built-in error meter.
"""

from nishimori_dbm import big_f, big_f_inverse, big_f_prime, nishimori_residual, psi

print("values of psi (increasing, convex, psi(0) = log 2):")
for x in (0.0, 0.5, 1.0, 2.0, 5.0, 20.0):
    print(f"  psi({x:5.2f}) = {psi(x):.12f}")

print("\nvalues of F (increasing, concave, saturating at 1):")
for h in (0.0, 0.5, 1.0, 2.0, 5.0, 20.0):
    print(f"  F({h:5.2f}) = {big_f(h):.12f}   F'({h:5.2f}) = {big_f_prime(h):.12f}")

print("\nF and its inverse round-trip:")
for y in (0.1, 0.5, 0.9):
    h = big_f_inverse(y)
    print(f"  F^-1({y}) = {h:.12f},  F(F^-1({y})) - {y} = {big_f(h) - y:+.2e}")

print("\nthe derivative identity F = 2 psi' - 1 by finite differences:")
for h in (0.5, 2.0, 10.0):
    d = 1e-6
    two_psi_prime = (psi(h + d) - psi(h - d)) / d
    print(f"  h={h:5.2f}:  F = {big_f(h):.10f},  2 psi' - 1 = {two_psi_prime - 1.0:.10f}")

print("\nquadrature error meter: |E tanh^(2n-1) - E tanh^(2n)| (exactly 0 in")
print("the continuum; the residual is pure quadrature error):")
for h in (1e-4, 1.0, 25.0, 100.0):
    res = max(nishimori_residual(h, n) for n in (1, 2, 3))
    print(f"  h={h:8.4f}: worst residual over n=1..3 is {res:.2e}")
