"""Variational pressure, consistency equations, and the three solvers.

The limiting pressure of the K-layer machine is the min-max value of

    p_var(x) = sum_r alpha_r psi((M x)_r + h_r)
             + sum_r Delta_{r,r+1}/2 [(1 - x_r)(1 - x_{r+1}) - 2 x_r x_{r+1}]

over order parameters x in [0, 1)^K, sup over odd components, inf over even
ones.  Its stationary points satisfy the consistency equation

    x_r = F((M x)_r + h_r),

and the gradient takes the compact form (Delta / 2)(F(Mx + h) - x).

Three mutually checking solvers are provided:

* ``solve_fixed_point`` -- damped iteration of the monotone map
  T(x) = F(Mx + h), initialized just below 1 so the decreasing orbit selects
  the maximal fixed point;
* ``solve_pi_ascent`` (K even) -- projected gradient ascent on the auxiliary
  function pi(x_o) = inf_{x_e} p_var, whose inner infimum is available in
  closed form through the triangular block M^(oe);
* ``solve_nested_bisection`` (all h_r > 0) -- the constructive uniqueness
  scheme: auxiliary ratio variables a_r with alpha_r x_r a_r =
  alpha_{r+1} x_{r+1} reduce the coupled system to nested scalar root
  problems that are solved level by level, the top level at a_K = 0.

Note on the auxiliary chain: with the ratio convention above, the
consistency equation decouples as x_r = F(Theta_r(a) x_r + h_r) with

    Theta_r(a) = alpha_r ( mu_{r-1,r} / a_{r-1} + mu_{r,r+1} a_r ),

boundary terms dropped at r = 1 and r = K.  This is the unique choice for
which (M x)_r = Theta_r(a) x_r holds identically along the chain relation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import brentq

from .model import ModelSpec, build_effective, decouple, spectral_radius_oo
from .special_functions import (
    NEG_CLAMP,
    QuadratureRule,
    big_f,
    big_f_inverse,
    big_f_prime,
    default_rule,
    psi,
)

__all__ = [
    "Phase",
    "Method",
    "VariationalSolution",
    "AuxiliaryChain",
    "p_var",
    "grad_p_var",
    "consistency_map",
    "solve_fixed_point",
    "pi_value",
    "grad_pi",
    "hessian_pi",
    "hessian_pi_symmetrized",
    "solve_pi_ascent",
    "scalar_solution",
    "nested_bisection_chain",
    "solve_nested_bisection",
]

# Iterates are kept strictly below 1; F saturates in double precision long
# before this bound matters physically.
X_UPPER = 1.0 - 1e-9

# |rho - 1| window inside which the h = 0 phase is reported as unresolved.
CRITICAL_WINDOW = 1e-6

# Components below this threshold count as zero for phase classification.
ZERO_X_TOL = 1e-6


class Phase(enum.Enum):
    ZERO_SOLUTION = "zero_solution"
    BROKEN_SYMMETRY = "broken_symmetry"
    FIELD_DRIVEN = "field_driven"
    UNRESOLVED = "unresolved"


class Method(enum.Enum):
    FIXED_POINT = "fixed_point"
    PI_ASCENT = "pi_ascent"
    NESTED_BISECTION = "nested_bisection"


@dataclass(frozen=True)
class VariationalSolution:
    """Solver output: optimizer, pressure, residuals, and classification."""

    x_bar: np.ndarray
    pressure: float
    gradient_norm: float
    residual: float
    phase: Phase
    method: Method
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "x_bar": self.x_bar.tolist(),
            "pressure": self.pressure,
            "gradient_norm": self.gradient_norm,
            "residual": self.residual,
            "phase": self.phase.value,
            "method": self.method.value,
            "iterations": self.iterations,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class AuxiliaryChain:
    """Decoupling ratios a_r and the resulting scalar couplings Theta_r."""

    a: np.ndarray
    theta: np.ndarray


# ---------------------------------------------------------------------------
# chain-level helpers (operate on raw (alpha, mu, h) arrays so that decoupled
# sub-chains, whose alpha do not sum to 1, can reuse them)
# ---------------------------------------------------------------------------


def _chain_m(alpha: np.ndarray, mu: np.ndarray) -> np.ndarray:
    k = len(alpha)
    m = np.zeros((k, k))
    idx = np.arange(k - 1)
    m[idx, idx + 1] = mu * alpha[1:]
    m[idx + 1, idx] = mu * alpha[:-1]
    return m


def _chain_delta_pairs(alpha: np.ndarray, mu: np.ndarray) -> np.ndarray:
    return alpha[:-1] * mu * alpha[1:]


def _p_var_core(x, alpha, mu, h, rule) -> float:
    m = _chain_m(alpha, mu)
    args = m @ x + h
    if np.any(args < -NEG_CLAMP):
        raise ValueError("(M x)_r + h_r must be nonnegative")
    args = np.maximum(args, 0.0)
    body = float(alpha @ psi(args, rule))
    pair = (1.0 - x[:-1]) * (1.0 - x[1:]) - 2.0 * x[:-1] * x[1:]
    return body + 0.5 * float(_chain_delta_pairs(alpha, mu) @ pair)


def _validate_x(x, k: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (k,):
        raise ValueError(f"order parameter must have shape ({k},)")
    if np.any(x < -NEG_CLAMP) or np.any(x >= 1.0):
        raise ValueError("order parameter components must lie in [0, 1)")
    return np.maximum(x, 0.0)


# ---------------------------------------------------------------------------
# pressure, gradient, consistency map
# ---------------------------------------------------------------------------


def p_var(x, spec: ModelSpec, rule: QuadratureRule | None = None) -> float:
    """Variational pressure at order parameter x in [0, 1)^K."""
    x = _validate_x(x, spec.k)
    return _p_var_core(x, spec.alpha, spec.mu, spec.h, rule or default_rule())


def grad_p_var(x, spec: ModelSpec, rule: QuadratureRule | None = None) -> np.ndarray:
    """Gradient (Delta / 2)(F(Mx + h) - x); zero exactly at consistency points."""
    x = _validate_x(x, spec.k)
    rule = rule or default_rule()
    em = build_effective(spec)
    args = np.maximum(em.m @ x + spec.h, 0.0)
    return 0.5 * em.delta @ (big_f(args, rule) - x)


def consistency_map(x, spec: ModelSpec, rule: QuadratureRule | None = None) -> np.ndarray:
    """T(x)_r = F((Mx)_r + h_r); monotone self-map of [0, 1)^K."""
    x = _validate_x(x, spec.k)
    rule = rule or default_rule()
    em = build_effective(spec)
    return big_f(np.maximum(em.m @ x + spec.h, 0.0), rule)


def _classify(x: np.ndarray, spec: ModelSpec, rho: float) -> Phase:
    if np.any(spec.h > 0.0):
        return Phase.FIELD_DRIVEN
    if abs(rho - 1.0) < CRITICAL_WINDOW:
        return Phase.UNRESOLVED
    if np.max(x) < ZERO_X_TOL:
        return Phase.ZERO_SOLUTION
    if np.min(x) > ZERO_X_TOL:
        return Phase.BROKEN_SYMMETRY
    return Phase.UNRESOLVED  # mixed components: decoupled sub-chains disagree


def _finish(x: np.ndarray, spec: ModelSpec, method: Method, iterations: int,
            converged: bool, rule: QuadratureRule) -> VariationalSolution:
    em = build_effective(spec)
    t = big_f(np.maximum(em.m @ x + spec.h, 0.0), rule)
    residual = float(np.max(np.abs(t - x)))
    grad = 0.5 * em.delta @ (t - x)
    return VariationalSolution(
        x_bar=x,
        pressure=_p_var_core(x, spec.alpha, spec.mu, spec.h, rule),
        gradient_norm=float(np.max(np.abs(grad))),
        residual=residual,
        phase=_classify(x, spec, spectral_radius_oo(em)),
        method=method,
        iterations=iterations,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# solver 1: damped fixed point
# ---------------------------------------------------------------------------


def solve_fixed_point(spec: ModelSpec, init=None, damping: float = 0.5,
                      tol: float = 1e-10, max_iter: int = 200_000,
                      rule: QuadratureRule | None = None) -> VariationalSolution:
    """Damped iteration x <- (1 - g) x + g T(x) of the consistency map.

    The default start (1 - 1e-6) * ones lies above the maximal fixed point
    for all moderate couplings, so the monotone-decreasing orbit selects it.
    The damping factor is halved whenever the residual increases.
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    rule = rule or default_rule()
    em = build_effective(spec)
    x = np.full(spec.k, 1.0 - 1e-6) if init is None else _validate_x(init, spec.k)
    gamma = damping
    prev_res = np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        t = big_f(np.maximum(em.m @ x + spec.h, 0.0), rule)
        res = float(np.max(np.abs(t - x)))
        if res < tol:
            converged = True
            break
        if res > prev_res and gamma > 1.0 / 64.0:
            gamma *= 0.5
        x = (1.0 - gamma) * x + gamma * t
        prev_res = res
    return _finish(x, spec, Method.FIXED_POINT, it, converged, rule)


# ---------------------------------------------------------------------------
# the auxiliary function pi and its derivatives (K even)
# ---------------------------------------------------------------------------


class _PiChain:
    """Parity-split views of one irreducible even-length chain."""

    def __init__(self, alpha, mu, h, rule):
        k = len(alpha)
        if k % 2 != 0:
            raise ValueError("the pi machinery requires an even number of layers")
        self.alpha = np.asarray(alpha, dtype=float)
        self.mu = np.asarray(mu, dtype=float)
        self.h = np.asarray(h, dtype=float)
        self.rule = rule
        self.k = k
        m = _chain_m(self.alpha, self.mu)
        odd = np.arange(0, k, 2)
        even = np.arange(1, k, 2)
        self.m_oe = m[np.ix_(odd, even)]  # lower bidiagonal
        self.m_eo = m[np.ix_(even, odd)]  # upper bidiagonal
        self.alpha_o = self.alpha[odd]
        self.alpha_e = self.alpha[even]
        self.h_o = self.h[odd]
        self.h_e = self.h[even]
        if np.any(np.diag(self.m_oe) == 0.0):
            raise ValueError(
                "M^(oe) is singular (some mu_{r,r+1} or alpha_r is zero); "
                "split the chain with model.decouple first"
            )

    def x_even_inf(self, x_o: np.ndarray) -> np.ndarray:
        """Closed-form inner minimizer: M^(oe) x_e = F^{-1}(x_o) - h_o."""
        rhs = big_f_inverse(x_o, self.rule) - self.h_o
        return solve_triangular(self.m_oe, rhs, lower=True)

    def value(self, x_o: np.ndarray) -> float:
        x = self.assemble(x_o, self.x_even_inf(x_o))
        return _p_var_core(x, self.alpha, self.mu, self.h, self.rule)

    def grad(self, x_o: np.ndarray) -> np.ndarray:
        inner = big_f(np.maximum(self.m_eo @ x_o + self.h_e, 0.0), self.rule)
        return 0.5 * self.alpha_o * (
            -big_f_inverse(x_o, self.rule) + self.h_o + self.m_oe @ inner
        )

    def hessian(self, x_o: np.ndarray) -> np.ndarray:
        d_oo, core = self._hessian_parts(x_o)
        return 0.5 * (self.alpha_o / d_oo)[:, None] * core

    def hessian_symmetrized(self, x_o: np.ndarray) -> np.ndarray:
        """Congruent symmetric form sharing the Hessian's eigenvalue signs.

        S = diag(sqrt(d a)) M^(oe) D^(ee) M^(eo) diag(sqrt(d / a)) is
        symmetric because Delta^(oe) transposes onto Delta^(eo), and its
        spectrum equals that of [(D M)^2]^(oo).
        """
        d_oo, _ = self._hessian_parts(x_o)
        d_ee = big_f_prime(np.maximum(self.m_eo @ x_o + self.h_e, 0.0), self.rule)
        s = (
            np.sqrt(d_oo * self.alpha_o)[:, None]
            * self.m_oe
            * d_ee[None, :]
            @ self.m_eo
            * np.sqrt(d_oo / self.alpha_o)[None, :]
        )
        c = np.sqrt(self.alpha_o / d_oo)
        return 0.5 * c[:, None] * (-np.eye(len(x_o)) + s) * c[None, :]

    def _hessian_parts(self, x_o):
        # D^(oo) is evaluated at the inner minimizer, where the odd
        # arguments of F' collapse to F^{-1}(x_o).
        d_oo = big_f_prime(big_f_inverse(x_o, self.rule), self.rule)
        d_ee = big_f_prime(np.maximum(self.m_eo @ x_o + self.h_e, 0.0), self.rule)
        core = -np.eye(len(x_o)) + (d_oo[:, None] * self.m_oe) @ (d_ee[:, None] * self.m_eo)
        return d_oo, core

    def assemble(self, x_o: np.ndarray, x_e: np.ndarray) -> np.ndarray:
        x = np.empty(self.k)
        x[0::2] = x_o
        x[1::2] = x_e
        return x


def _pi_chain(spec: ModelSpec, rule) -> _PiChain:
    return _PiChain(spec.alpha, spec.mu, spec.h, rule or default_rule())


def _validate_x_odd(x_o, k: int) -> np.ndarray:
    x_o = np.asarray(x_o, dtype=float)
    if x_o.shape != (k // 2,):
        raise ValueError(f"odd-component vector must have shape ({k // 2},)")
    if np.any(x_o < -NEG_CLAMP) or np.any(x_o >= 1.0):
        raise ValueError("odd components must lie in [0, 1)")
    return np.maximum(x_o, 0.0)


def pi_value(x_o, spec: ModelSpec, rule: QuadratureRule | None = None) -> float:
    """pi(x_o) = inf over even components of p_var, by the closed-form minimizer.

    The infimum runs over the convex set {x_e : M^(oe) x_e + h_o >= 0}, on
    which p_var is convex in x_e; the minimizer may leave [0, 1)^(K/2) even
    though the final saddle point never does.
    """
    chain = _pi_chain(spec, rule)
    return chain.value(_validate_x_odd(x_o, spec.k))


def grad_pi(x_o, spec: ModelSpec, rule: QuadratureRule | None = None) -> np.ndarray:
    """Gradient (alpha^(oo)/2)[-F^{-1}(x_o) + h_o + M^(oe) F(M^(eo) x_o + h_e)].

    Diverges to -inf componentwise as the corresponding x_o component
    approaches 1 (F^{-1} blows up), which rules out boundary maximizers.
    """
    chain = _pi_chain(spec, rule)
    return chain.grad(_validate_x_odd(x_o, spec.k))


def hessian_pi(x_o, spec: ModelSpec, rule: QuadratureRule | None = None) -> np.ndarray:
    """Hessian (alpha^(oo) [D^(oo)]^{-1} / 2)(-1 + [ (D M)^2 ]^(oo)) of pi."""
    chain = _pi_chain(spec, rule)
    return chain.hessian(_validate_x_odd(x_o, spec.k))


def hessian_pi_symmetrized(x_o, spec: ModelSpec,
                           rule: QuadratureRule | None = None) -> np.ndarray:
    """Symmetric matrix congruent to the Hessian of pi (same inertia)."""
    chain = _pi_chain(spec, rule)
    return chain.hessian_symmetrized(_validate_x_odd(x_o, spec.k))


# ---------------------------------------------------------------------------
# solver 2: projected gradient ascent on pi (K even)
# ---------------------------------------------------------------------------


def _pi_ascent_core(alpha, mu, h, tol, max_iter, rule):
    """Projected Barzilai-Borwein ascent with Armijo backtracking on pi.

    Iterates live in [0, X_UPPER]^(K/2).  Convergence is declared on the
    consistency residual of the reconstructed full order parameter, the
    same metric the fixed-point solver uses.
    """
    chain = _PiChain(alpha, mu, h, rule)
    m = _chain_m(chain.alpha, chain.mu)

    def full_residual(x_o):
        x_e = big_f(np.maximum(chain.m_eo @ x_o + chain.h_e, 0.0), rule)
        x = chain.assemble(x_o, x_e)
        t = big_f(np.maximum(m @ x + chain.h, 0.0), rule)
        return x, float(np.max(np.abs(t - x)))

    x = np.full(chain.k // 2, 0.9)
    f = chain.value(x)
    g = chain.grad(x)
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        x_full, res = full_residual(x)
        if res < tol:
            converged = True
            break
        accepted = False
        s = step
        cand = x
        for _ in range(70):
            cand = np.clip(x + s * g, 0.0, X_UPPER)
            dx = cand - x
            if not np.any(dx):
                break
            f_cand = chain.value(cand)
            if f_cand >= f + 1e-4 * float(g @ dx):
                accepted = True
                break
            s *= 0.5
        if not accepted:
            # pi differences saturate in floating point near flat maxima;
            # fall back to accepting steps that shrink the consistency
            # residual, which stays measurable down to machine precision
            s = step
            for _ in range(70):
                cand = np.clip(x + s * g, 0.0, X_UPPER)
                dx = cand - x
                if not np.any(dx):
                    break
                if full_residual(cand)[1] < res:
                    accepted = True
                    f_cand = chain.value(cand)
                    break
                s *= 0.5
            if not accepted:
                converged = res < max(tol, 1e2 * np.finfo(float).eps)
                break
        g_new = chain.grad(cand)
        dg = g_new - g
        denom = abs(float(dx @ dg))
        step = min(max(float(dx @ dx) / denom, 1e-8), 1e8) if denom > 0 else 1.0
        x, f, g = cand, f_cand, g_new
    x_full, _ = full_residual(x)
    return x_full, it, converged


# ---------------------------------------------------------------------------
# solver 3: nested bisection along the decoupling chain (h > 0)
# ---------------------------------------------------------------------------


def scalar_solution(t: float, h: float, rule: QuadratureRule | None = None,
                    tol: float = 1e-14) -> float:
    """Unique positive root of x = F(t x + h) for t, h > 0.

    Strictly increasing in both arguments.  Solved by Newton started at
    F(t + h) >= root, safeguarded by the bracket [0, 1]: on the right of
    the root g(x) = F(tx + h) - x is concave and decreasing, so the
    iterates descend monotonically onto the root.
    """
    if t <= 0.0 or h <= 0.0:
        raise ValueError("scalar_solution requires t > 0 and h > 0")
    rule = rule or default_rule()
    lo, hi = 0.0, 1.0
    x = big_f(t + h, rule)
    for _ in range(200):
        arg = max(t * x + h, 0.0)
        g = big_f(arg, rule) - x
        if abs(g) < tol:
            return x
        if g > 0.0:
            lo = max(lo, x)
        else:
            hi = min(hi, x)
        gp = t * big_f_prime(arg, rule) - 1.0
        x_new = x - g / gp if gp != 0.0 else 0.5 * (lo + hi)
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < 1e-16:
            return x_new
        x = x_new
    return x


def _theta_chain(alpha, mu, a) -> np.ndarray:
    """Theta_r(a) = alpha_r (mu_{r-1,r} / a_{r-1} + mu_{r,r+1} a_r)."""
    k = len(alpha)
    theta = np.zeros(k)
    theta[0] = alpha[0] * mu[0] * a[0]
    for r in range(1, k - 1):
        theta[r] = alpha[r] * (mu[r - 1] / a[r - 1] + mu[r] * a[r])
    theta[k - 1] = alpha[k - 1] * mu[k - 2] / a[k - 2]
    return theta


def _nested_core(alpha, mu, h, rule, xtol=1e-13):
    """Solve the consistency system by the nested level construction.

    Level r (0-based) determines a_r from X_0(a) a_0 ... a_r =
    X_{r+1}(1/a_r, a_{r+1}); the left side increases from 0 to infinity in
    a_r while the right side decreases, so each level is a bracketed
    monotone root problem.  Levels below r are re-solved for every trial
    value of a_r, the top level is solved with a_K = 0.
    """
    k = len(alpha)
    evals = 0

    def x_scalar(r, theta_r):
        return scalar_solution(theta_r, h[r], rule)

    def theta_interior(r, a_prev, a_next):
        tail = mu[r] * a_next if r < k - 1 else 0.0
        head = mu[r - 1] / a_prev if r >= 1 else 0.0
        return alpha[r] * (head + tail)

    def cascade(r, a_next):
        """Return [a_0, ..., a_r] solving levels 0..r given a_{r+1} = a_next."""
        nonlocal evals

        def gap(a_r):
            nonlocal evals
            evals += 1
            if r == 0:
                lower = []
                x0 = x_scalar(0, alpha[0] * mu[0] * a_r)
                lhs = alpha[0] * x0 * a_r
            else:
                lower = cascade(r - 1, a_r)
                x0 = x_scalar(0, alpha[0] * mu[0] * lower[0])
                lhs = alpha[0] * x0 * float(np.prod(lower)) * a_r
            rhs = alpha[r + 1] * x_scalar(r + 1, theta_interior(r + 1, a_r, a_next))
            return lhs - rhs

        lo, hi = 1e-12, 1.0
        while gap(hi) <= 0.0:
            lo = hi
            hi *= 2.0
            if hi > 2.0**60:
                raise RuntimeError("bracket expansion failed in nested bisection")
        if gap(lo) >= 0.0:
            while gap(lo) >= 0.0:
                hi = lo
                lo *= 0.5
                if lo < 1e-300:
                    raise RuntimeError("bracket shrink failed in nested bisection")
        root = brentq(gap, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=300)
        if r == 0:
            return [root]
        return cascade(r - 1, root) + [root]

    if k == 1:
        return np.array([big_f(h[0], rule)]), np.zeros(0), np.zeros(1), evals
    a = np.array(cascade(k - 2, 0.0))
    theta = _theta_chain(alpha, mu, a)
    x = np.array([x_scalar(r, theta[r]) for r in range(k)])
    return x, a, theta, evals


def nested_bisection_chain(spec: ModelSpec, rule: QuadratureRule | None = None,
                           max_k: int = 6) -> tuple[np.ndarray, AuxiliaryChain]:
    """Run the nested construction on an irreducible spec; return (x, chain).

    The output satisfies the ratio relation alpha_r x_r a_r =
    alpha_{r+1} x_{r+1} and the scalar reduction (M x)_r = Theta_r(a) x_r.
    """
    _check_nested_preconditions(spec, max_k)
    rule = rule or default_rule()
    x, a, theta, _ = _nested_core(spec.alpha, spec.mu, spec.h, rule)
    return x, AuxiliaryChain(a=a, theta=theta)


def _check_nested_preconditions(spec: ModelSpec, max_k: int):
    if spec.k > max_k:
        raise ValueError(
            f"nested bisection cost grows exponentially; K={spec.k} exceeds cap {max_k}"
        )
    if np.any(spec.h <= 0.0):
        raise ValueError("nested bisection requires h_r > 0 for every layer")


# ---------------------------------------------------------------------------
# segment handling shared by the pi-ascent and nested solvers
# ---------------------------------------------------------------------------


def _solve_by_segments(spec: ModelSpec, core, rule, method: Method,
                       even_only: bool) -> VariationalSolution:
    segments = decouple(spec)
    if len(segments) == 1 and segments[0] == (0, spec.k):
        x, iterations, converged = core(spec.alpha, spec.mu, spec.h)
        return _finish(x, spec, method, iterations, converged, rule)

    # reducible chain: solve each positive segment independently, then fill
    # zero-alpha layers from the consistency equation (they do not act back)
    x = np.zeros(spec.k)
    iterations = 0
    converged = True
    for start, stop in segments:
        length = stop - start
        if length == 1:
            x[start] = big_f(spec.h[start], rule)
            continue
        if even_only and length % 2 != 0:
            raise ValueError(
                f"decoupled segment [{start}, {stop}) has odd length; "
                "the pi machinery needs even segments (use solve_fixed_point)"
            )
        seg_x, seg_it, seg_conv = core(
            spec.alpha[start:stop], spec.mu[start:stop - 1], spec.h[start:stop]
        )
        x[start:stop] = seg_x
        iterations += seg_it
        converged = converged and seg_conv
    em = build_effective(spec)
    zero_layers = np.flatnonzero(spec.alpha == 0.0)
    if zero_layers.size:
        x[zero_layers] = big_f(
            np.maximum((em.m @ x + spec.h)[zero_layers], 0.0), rule
        )
    return _finish(x, spec, method, iterations, converged, rule)


def solve_pi_ascent(spec: ModelSpec, tol: float = 1e-10, max_iter: int = 50_000,
                    rule: QuadratureRule | None = None) -> VariationalSolution:
    """Maximize pi over the odd components and reconstruct the even ones.

    Requires K even.  Zero form factors or zero couplings trigger the
    decoupling path: segments are solved independently and layers with
    alpha_r = 0 are filled from the consistency equation afterwards.
    """
    if spec.k % 2 != 0:
        raise ValueError("solve_pi_ascent requires an even number of layers")
    rule = rule or default_rule()

    def core(alpha, mu, h):
        return _pi_ascent_core(alpha, mu, h, tol, max_iter, rule)

    return _solve_by_segments(spec, core, rule, Method.PI_ASCENT, even_only=True)


def solve_nested_bisection(spec: ModelSpec, tol: float = 1e-10, max_k: int = 6,
                           rule: QuadratureRule | None = None) -> VariationalSolution:
    """Solve the consistency system by the nested level construction.

    Requires all h_r > 0 and K at most ``max_k`` (the cost is exponential
    in K).  ``tol`` bounds the reported consistency residual; the internal
    root solves run tighter than any meaningful choice of it.
    """
    _check_nested_preconditions(spec, max_k)
    rule = rule or default_rule()

    def core(alpha, mu, h):
        x, _, _, evals = _nested_core(alpha, mu, h, rule)
        return x, evals, True

    solution = _solve_by_segments(spec, core, rule, Method.NESTED_BISECTION,
                                  even_only=False)
    if solution.residual > tol:
        raise RuntimeError(
            f"nested bisection residual {solution.residual:.3e} exceeds tol {tol:.3e}"
        )
    return solution
