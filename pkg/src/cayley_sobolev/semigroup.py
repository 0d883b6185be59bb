"""Heat semigroup and the square root of -Delta on a Dirichlet truncation."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import expm_multiply

from .cayley import CayleyBall

DENSE_LIMIT = 3000


class HaloError(RuntimeError):
    """The truncation is too small for the requested evaluation."""


class QuadratureError(RuntimeError):
    """The certified quadrature error exceeds the requested tolerance."""


@lru_cache(maxsize=8)
def _eigensystem(ball: CayleyBall):
    evals, evecs = linalg.eigh(-ball.laplacian_matrix.toarray())
    return evals, evecs


def spectral_decomposition(ball: CayleyBall) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of the (positive definite) truncated ``-Delta``."""
    return _eigensystem(ball)


def _outer_sphere_share(ball: CayleyBall, v: np.ndarray) -> float:
    peak = np.abs(v).max(initial=0.0)
    if peak == 0:
        return 0.0
    return float(np.abs(v[ball.distance == ball.radius]).max(initial=0.0) / peak)


def heat_apply(
    ball: CayleyBall,
    u: np.ndarray,
    t: float,
    halo_tol: float | None = None,
    method: str = "auto",
) -> np.ndarray:
    """``exp(t Delta) u`` for the Dirichlet Laplacian of the ball.

    Dense eigendecomposition below ``DENSE_LIMIT`` vertices, otherwise
    ``scipy.sparse.linalg.expm_multiply``.  With ``halo_tol`` set, the result
    is rejected when its largest value on the outer sphere exceeds
    ``halo_tol`` times its peak, i.e. when the truncation visibly matters.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    u = np.asarray(u, dtype=float)
    if t == 0:
        return u.copy()
    if method == "auto":
        method = "dense" if len(ball) < DENSE_LIMIT else "krylov"
    if method == "dense":
        evals, evecs = _eigensystem(ball)
        out = evecs @ (np.exp(-t * evals) * (evecs.T @ u))
    else:
        out = expm_multiply(t * ball.laplacian_matrix, u)
    if halo_tol is not None:
        share = _outer_sphere_share(ball, out)
        if share > halo_tol:
            raise HaloError(
                f"heat kernel reaches the ball boundary at t={t} (share {share:.2e})"
            )
    return out


@dataclass
class QuadratureConfig:
    """Composite Gauss-Legendre rule in ``tau = sqrt(t)``.

    The first panel is ``[0, first_panel]``; later panels double in length
    up to ``sqrt(t_max)``.
    """

    nodes: int = 16
    first_panel: float = 0.5
    t_max: float = 1e4
    tol: float = 1e-8


@dataclass
class HalfLaplacianResult:
    values: np.ndarray
    tail_bound: float
    quadrature_estimate: float


def _panels(cfg: QuadratureConfig) -> list[tuple[float, float]]:
    tau_max = np.sqrt(cfg.t_max)
    edges = [0.0, min(cfg.first_panel, tau_max)]
    while edges[-1] < tau_max:
        edges.append(min(2 * edges[-1], tau_max))
    return list(zip(edges[:-1], edges[1:]))


def half_laplacian(
    ball: CayleyBall,
    u: np.ndarray,
    quadrature: QuadratureConfig | None = None,
    full: bool = False,
):
    """``(-Delta)^{1/2} u`` from the heat-semigroup integral.

    Uses ``(-Delta)^{1/2} u = Gamma(-1/2)^{-1} int_0^inf (e^{t Delta} u - u)
    t^{-3/2} dt`` with ``Gamma(-1/2) = -2 sqrt(pi)``.  After ``t = tau^2``
    the integrand ``2 (e^{tau^2 Delta} u - u) / tau^2`` is bounded at 0.
    Beyond ``t_max`` the ``-u`` part is integrated exactly (``-2u/sqrt(T)``)
    and the remainder is bounded by ``2 ||e^{T Delta} u|| / sqrt(T)`` because
    the semigroup is a contraction.
    """
    cfg = quadrature or QuadratureConfig()
    u = np.asarray(u, dtype=float)
    unorm = np.linalg.norm(u)
    if unorm == 0:
        res = HalfLaplacianResult(np.zeros_like(u), 0.0, 0.0)
        return res if full else res.values
    x, w = np.polynomial.legendre.leggauss(cfg.nodes)
    xh, wh = np.polynomial.legendre.leggauss(cfg.nodes // 2)
    acc = np.zeros_like(u)
    acc_half = np.zeros_like(u)
    for a, b in _panels(cfg):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        for nodes, weights, target in ((x, w, acc), (xh, wh, acc_half)):
            for tau, wt in zip(mid + half * nodes, half * weights):
                integrand = 2.0 * (heat_apply(ball, u, tau * tau) - u) / (tau * tau)
                target += wt * integrand
    T = cfg.t_max
    acc += -2.0 * u / np.sqrt(T)
    acc_half += -2.0 * u / np.sqrt(T)
    tail = 2.0 * np.linalg.norm(heat_apply(ball, u, T)) / np.sqrt(T)
    scale = 1.0 / (-2.0 * np.sqrt(np.pi))
    values = scale * acc
    tail_bound = abs(scale) * tail
    q_est = abs(scale) * np.linalg.norm(acc - acc_half)
    ref = max(np.linalg.norm(values), 1e-300)
    if tail_bound / ref > cfg.tol:
        raise QuadratureError(
            f"tail bound {tail_bound:.2e} exceeds tolerance; increase t_max"
        )
    res = HalfLaplacianResult(values, float(tail_bound), float(q_est))
    return res if full else res.values


def spectral_half_laplacian(ball: CayleyBall, u: np.ndarray) -> np.ndarray:
    """Dense oracle: ``V diag(sqrt(lambda)) V^T u``."""
    evals, evecs = _eigensystem(ball)
    return evecs @ (np.sqrt(np.maximum(evals, 0.0)) * (evecs.T @ np.asarray(u, float)))
