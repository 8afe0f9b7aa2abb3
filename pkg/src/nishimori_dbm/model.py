"""Model parameters and the spectral quantities driving the phase transition.

A K-layer machine is specified by the form factors alpha (relative layer
sizes, summing to 1), the symmetric tridiagonal interaction strengths mu
(stored as the K-1 superdiagonal entries mu[r] between layers r+1 and r+2,
1-based), and nonnegative external field parameters h.

Two derived matrices control everything downstream:

    Delta[r, s] = alpha_r * mu_rs * alpha_s      (symmetric)
    M[r, s]     = mu_rs * alpha_s                (Delta = diag(alpha) @ M)

Layer parity follows the 1-based convention of the chain: layer 1 is odd.
In 0-based storage, odd layers are indices 0, 2, 4, ... and even layers are
1, 3, 5, ....  The zero-field symmetry breaking criterion is governed by
the spectral radius of the odd-odd block of M^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelSpec",
    "EffectiveMatrices",
    "OddEvenSplit",
    "build_effective",
    "odd_even_split",
    "m_squared_oo",
    "spectral_radius_oo",
    "perron_vector",
    "decouple",
]

SIMPLEX_TOL = 1e-12


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ModelSpec:
    """Parameters (K, alpha, mu, h) of one machine.

    ``mu`` holds the superdiagonal of the symmetric tridiagonal interaction
    matrix; the diagonal is zero by construction (no intra-layer couplings).
    """

    k: int
    alpha: np.ndarray
    mu: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("layer count K must be at least 2")
        alpha = _frozen_array(self.alpha)
        mu = _frozen_array(self.mu)
        h = _frozen_array(self.h)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "h", h)
        if alpha.shape != (self.k,):
            raise ValueError(f"alpha must have length K={self.k}")
        if mu.shape != (self.k - 1,):
            raise ValueError(f"mu must hold the K-1={self.k - 1} superdiagonal entries")
        if h.shape != (self.k,):
            raise ValueError(f"h must have length K={self.k}")
        if np.any(alpha < 0):
            raise ValueError("form factors alpha must be nonnegative")
        if abs(alpha.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"form factors must sum to 1 (got {alpha.sum()!r})")
        if np.any(mu < 0):
            raise ValueError("couplings mu must be nonnegative")
        if np.any(h < 0):
            raise ValueError("field parameters h must be nonnegative")

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        """Build from a config mapping with keys K, alpha, mu, h."""
        known = {"K", "alpha", "mu", "h"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown model keys: {sorted(unknown)}")
        missing = known - set(data)
        if missing:
            raise ValueError(f"missing model keys: {sorted(missing)}")
        return cls(k=int(data["K"]), alpha=data["alpha"], mu=data["mu"], h=data["h"])

    def to_dict(self) -> dict:
        return {
            "K": self.k,
            "alpha": self.alpha.tolist(),
            "mu": self.mu.tolist(),
            "h": self.h.tolist(),
        }

    def mu_matrix(self) -> np.ndarray:
        """Full K x K symmetric tridiagonal coupling matrix."""
        m = np.zeros((self.k, self.k))
        idx = np.arange(self.k - 1)
        m[idx, idx + 1] = self.mu
        m[idx + 1, idx] = self.mu
        return m

    def with_updates(self, alpha=None, mu=None, h=None) -> "ModelSpec":
        return ModelSpec(
            k=self.k,
            alpha=self.alpha if alpha is None else alpha,
            mu=self.mu if mu is None else mu,
            h=self.h if h is None else h,
        )


@dataclass(frozen=True)
class EffectiveMatrices:
    """Delta = diag(alpha) mu_matrix diag(alpha) and M = mu_matrix diag(alpha)."""

    delta: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "delta", _frozen_array(self.delta))
        object.__setattr__(self, "m", _frozen_array(self.m))


def build_effective(spec: ModelSpec) -> EffectiveMatrices:
    """Assemble the effective interaction matrices from a spec.

    Delta[r, r+1] = alpha_r mu_{r,r+1} alpha_{r+1}; M[r, r+1] = mu_{r,r+1}
    alpha_{r+1} and M[r+1, r] = mu_{r,r+1} alpha_r; all other entries zero.
    """
    mu_full = spec.mu_matrix()
    m = mu_full * spec.alpha[None, :]
    # assemble Delta from its superdiagonal so symmetry holds bitwise
    pairs = spec.alpha[:-1] * spec.mu * spec.alpha[1:]
    delta = np.zeros((spec.k, spec.k))
    idx = np.arange(spec.k - 1)
    delta[idx, idx + 1] = pairs
    delta[idx + 1, idx] = pairs
    return EffectiveMatrices(delta=delta, m=m)


def _parity_indices(k: int) -> tuple[np.ndarray, np.ndarray]:
    # 1-based odd layers live at 0-based indices 0, 2, ...
    return np.arange(0, k, 2), np.arange(1, k, 2)


@dataclass(frozen=True)
class OddEvenSplit:
    """The four parity blocks of a K x K matrix (1-based parity)."""

    oo: np.ndarray
    oe: np.ndarray
    eo: np.ndarray
    ee: np.ndarray

    def reassemble(self) -> np.ndarray:
        k = self.oo.shape[0] + self.ee.shape[0]
        odd, even = _parity_indices(k)
        out = np.zeros((k, k))
        out[np.ix_(odd, odd)] = self.oo
        out[np.ix_(odd, even)] = self.oe
        out[np.ix_(even, odd)] = self.eo
        out[np.ix_(even, even)] = self.ee
        return out


def odd_even_split(a: np.ndarray) -> OddEvenSplit:
    """Split a square matrix into its odd/even row-column blocks."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("odd_even_split expects a square matrix")
    odd, even = _parity_indices(a.shape[0])
    return OddEvenSplit(
        oo=a[np.ix_(odd, odd)],
        oe=a[np.ix_(odd, even)],
        eo=a[np.ix_(even, odd)],
        ee=a[np.ix_(even, even)],
    )


def m_squared_oo(em: EffectiveMatrices) -> np.ndarray:
    """The odd-odd block of M^2, a nonnegative square matrix of side ceil(K/2)."""
    return odd_even_split(em.m @ em.m).oo


def _power_iteration(a: np.ndarray, tol: float, max_iter: int):
    """Dominant eigenpair of a nonnegative matrix from the all-ones vector.

    Returns (value, vector, converged).  The vector is normalized to unit
    sum.  Residual criterion: ||A v - lam v||_inf <= tol * max(1, lam).
    """
    n = a.shape[0]
    v = np.full(n, 1.0 / n)
    lam = 0.0
    for _ in range(max_iter):
        w = a @ v
        s = w.sum()
        if s <= 0.0:
            return 0.0, v, True  # ones vector annihilated: nilpotent block
        lam = s / v.sum()
        w = w / s
        if np.max(np.abs(a @ w - lam * w)) <= tol * max(1.0, lam):
            return lam, w, True
        v = w
    return lam, v, False


def spectral_radius_oo(em: EffectiveMatrices, tol: float = 1e-12,
                       max_iter: int = 20000) -> float:
    """rho([M^2]^(oo)) by power iteration with a dense-eigenvalue fallback.

    The iteration starts from the all-ones vector (strictly positive,
    deterministic).  For irreducible specs the block is primitive, so the
    iteration converges; reducible blocks fall back to a dense solve.
    """
    block = m_squared_oo(em)
    if not np.any(block):
        return 0.0
    lam, _, converged = _power_iteration(block, tol, max_iter)
    if not converged:
        lam = float(np.max(np.abs(np.linalg.eigvals(block))))
    return float(lam)


def perron_vector(em: EffectiveMatrices, tol: float = 1e-12,
                  max_iter: int = 20000) -> np.ndarray:
    """Strictly positive principal eigenvector of [M^2]^(oo), unit sum.

    Requires an irreducible block: every alpha_r > 0 and every coupling
    mu_{r,r+1} > 0, which makes the block's graph strongly connected.
    """
    k = em.m.shape[0]
    # M[r+1, r] = mu_{r,r+1} alpha_r and M[r, r+1] = mu_{r,r+1} alpha_{r+1};
    # joint positivity of both diagonals is equivalent to all alpha_r > 0
    # and all mu_{r,r+1} > 0.
    sub = np.array([em.m[r + 1, r] for r in range(k - 1)])
    sup = np.array([em.m[r, r + 1] for r in range(k - 1)])
    if np.any(sub <= 0) or np.any(sup <= 0):
        raise ValueError(
            "perron_vector requires all alpha_r > 0 and all mu_{r,r+1} > 0 "
            "(block-reducible chain; see model.decouple)"
        )
    block = m_squared_oo(em)
    lam, v, converged = _power_iteration(block, tol, max_iter)
    if not converged:
        raise RuntimeError("power iteration did not converge on an irreducible block")
    if np.any(v <= 0):
        raise RuntimeError("Perron vector has nonpositive components")
    return v


def decouple(spec: ModelSpec) -> list[tuple[int, int]]:
    """Split the chain into independent sub-machines.

    Returns half-open 0-based index ranges (start, stop) of maximal segments
    whose layers all have alpha_r > 0 and whose internal couplings are all
    positive.  Layers with alpha_r = 0 belong to no segment: they do not act
    back on the chain (their M-columns vanish) and their order parameter is
    filled in afterwards from the consistency equation.
    """
    segments = []
    start = None
    for r in range(spec.k):
        if spec.alpha[r] == 0.0:
            if start is not None:
                segments.append((start, r))
                start = None
            continue
        if start is None:
            start = r
        cut_after = r == spec.k - 1 or (r < spec.k - 1 and spec.mu[r] == 0.0)
        if cut_after:
            segments.append((start, r + 1))
            start = None
    return segments
