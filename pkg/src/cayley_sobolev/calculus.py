"""Difference calculus on truncated Cayley graphs.

Every operator treats the exterior of the ball as zero (Dirichlet).  An
operator is exact on the infinite graph at a vertex whose neighbourhood of
the relevant radius lies inside the ball: radius 1 for the Laplacian, the
Gamma operator and first differences, radius 2 for second differences.
``validity_mask`` returns that region.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from .cayley import CayleyBall


def validity_mask(ball: CayleyBall, halo: int) -> np.ndarray:
    return ball.distance <= ball.radius - halo


def shift(ball: CayleyBall, u: np.ndarray, i: int) -> np.ndarray:
    """``x -> u(x s_i)`` with zero outside the ball."""
    j = ball.neighbors[:, i]
    return np.where(j >= 0, u[np.maximum(j, 0)], 0.0)


def directional_diff(ball: CayleyBall, u: np.ndarray, i: int) -> np.ndarray:
    """``d_i u(x) = u(x s_i) - u(x)``."""
    u = np.asarray(u, dtype=float)
    return shift(ball, u, i) - u


def second_diff(ball: CayleyBall, u: np.ndarray, i: int, j: int) -> np.ndarray:
    """``d_j d_i u``; exact for u supported at distance <= radius - 2."""
    return directional_diff(ball, directional_diff(ball, u, i), j)


def laplacian(ball: CayleyBall, u: np.ndarray) -> np.ndarray:
    """``Delta u(x) = sum_{y~x} (u(y) - u(x))``."""
    return ball.laplacian_matrix @ np.asarray(u, dtype=float)


def laplacian_via_hessian(ball: CayleyBall, u: np.ndarray) -> np.ndarray:
    """``1/2 sum_i d_{s_i^-1} d_{s_i} u``, which is ``-Delta u``."""
    inv = ball.spec.inverse_index
    out = np.zeros(len(ball))
    for i in range(ball.degree):
        out += second_diff(ball, u, i, inv[i])
    return 0.5 * out


def gamma(ball: CayleyBall, u: np.ndarray) -> np.ndarray:
    """Carre du champ ``1/2 sum_{y~x} |u(y) - u(x)|^2``."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(len(ball))
    for i in range(ball.degree):
        out += directional_diff(ball, u, i) ** 2
    return 0.5 * out


def lp_norm(u: np.ndarray, p: float) -> float:
    u = np.abs(np.asarray(u, dtype=float))
    if np.isinf(p):
        return float(u.max(initial=0.0))
    return float(np.sum(u**p) ** (1.0 / p))


def gradient_norm_p(ball: CayleyBall, u: np.ndarray, p: float) -> float:
    """``||u||_{D^{1,p}} = (sum_x sum_{y~x} |u(y)-u(x)|^p)^{1/p}``."""
    total = sum(
        np.sum(np.abs(directional_diff(ball, u, i)) ** p) for i in range(ball.degree)
    )
    return float(total ** (1.0 / p))


def hessian_power_sum(ball: CayleyBall, u: np.ndarray, p: float) -> float:
    """``sum_{i,j} sum_x |d_j d_i u(x)|^p`` over ordered generator pairs."""
    m = ball.degree
    total = 0.0
    for i in range(m):
        di = directional_diff(ball, u, i)
        for j in range(m):
            total += np.sum(np.abs(directional_diff(ball, di, j)) ** p)
    return float(total)


def hessian_norm(ball: CayleyBall, u: np.ndarray, p: float) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    return hessian_power_sum(ball, u, p) ** (1.0 / p)


@dataclass
class NormReport:
    p: float
    lp: float
    d1p: float
    d2p: float
    d2p_tilde: float

    def holder_bound(self, m: int) -> float:
        """Upper bound ``1/2 m^{(p-1)/p} ||Hess u||_p`` for ``||Delta u||_p``."""
        return 0.5 * m ** ((self.p - 1) / self.p) * self.d2p_tilde


def norm_report(ball: CayleyBall, u: np.ndarray, p: float) -> NormReport:
    return NormReport(
        p=p,
        lp=lp_norm(u, p),
        d1p=gradient_norm_p(ball, u, p),
        d2p=lp_norm(laplacian(ball, u), p),
        d2p_tilde=hessian_norm(ball, u, p),
    )


@dataclass
class ChainRuleReport:
    """Per-vertex outcome of the discrete chain-rule check.

    ``ratio`` is ``(Delta phi(f) - phi'(f) Delta f) / Gamma f`` and must fall
    in ``[lower, upper]``, the range of ``phi''`` over the values of f on the
    closed 1-ball.  Only vertices with ``Gamma f > 0`` whose 1-ball lies in the
    truncation are checked (``index``).
    """

    index: np.ndarray
    ratio: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    member: np.ndarray
    margin: np.ndarray

    @property
    def fraction(self) -> float:
        return float(self.member.mean()) if len(self.member) else 1.0


def _range_of(fn: Callable, a: float, b: float, n_grid: int = 65) -> tuple[float, float]:
    if b - a <= 0:
        v = float(fn(a))
        return v, v
    s = np.linspace(a, b, n_grid)
    vals = np.asarray(fn(s), dtype=float)
    lo, hi = float(vals.min()), float(vals.max())
    h = (b - a) / (n_grid - 1)
    for sign, k in ((1.0, int(np.argmin(vals))), (-1.0, int(np.argmax(vals)))):
        left, right = max(a, s[k] - h), min(b, s[k] + h)
        res = optimize.minimize_scalar(
            lambda t: sign * float(fn(t)), bounds=(left, right), method="bounded",
            options={"xatol": 1e-12 * max(1.0, abs(b - a))},
        )
        val = sign * res.fun
        if sign > 0:
            lo = min(lo, val)
        else:
            hi = max(hi, val)
    return lo, hi


def chain_rule_check(
    ball: CayleyBall,
    f: np.ndarray,
    phi: Callable,
    dphi: Callable,
    d2phi: Callable,
    atol: float = 1e-10,
) -> ChainRuleReport:
    f = np.asarray(f, dtype=float)
    inner = np.nonzero(validity_mask(ball, 1))[0]
    nb = ball.neighbors[inner]
    fx = f[inner]
    fy = f[nb]
    phi_f = np.asarray(phi(f), dtype=float)
    lap_phi = (phi_f[nb] - phi_f[inner][:, None]).sum(axis=1)
    lap_f = (fy - fx[:, None]).sum(axis=1)
    gam = 0.5 * ((fy - fx[:, None]) ** 2).sum(axis=1)
    pos = gam > 0
    inner, fx, fy = inner[pos], fx[pos], fy[pos]
    ratio = (lap_phi[pos] - np.asarray(dphi(fx), dtype=float) * lap_f[pos]) / gam[pos]
    lo_v = np.minimum(fx, fy.min(axis=1))
    hi_v = np.maximum(fx, fy.max(axis=1))
    lower = np.empty(len(inner))
    upper = np.empty(len(inner))
    cache: dict = {}
    for k, (a, b) in enumerate(zip(lo_v, hi_v)):
        key = (a, b)
        if key not in cache:
            cache[key] = _range_of(d2phi, a, b)
        lower[k], upper[k] = cache[key]
    margin = np.minimum(ratio - lower, upper - ratio)
    scale = atol * np.maximum(1.0, np.abs(ratio))
    return ChainRuleReport(inner, ratio, lower, upper, margin >= -scale, margin)
