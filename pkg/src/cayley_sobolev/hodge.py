"""Edge 1-forms, divergence and the Hodge splitting on a truncated ball.

Edges are the undirected edges with both endpoints in the ball, oriented
from the lower vertex index to the higher one.  ``grad f(e) = f(head) -
f(tail)`` and ``div a(x) = (inflow) - (outflow)``; with these conventions
``div grad = -Delta`` at every vertex whose star lies in the ball.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, cg

from .cayley import CayleyBall


class SolverError(RuntimeError):
    pass


@dataclass
class EdgeFunction:
    ball: CayleyBall
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.ball.edges),):
            raise ValueError("one value per undirected edge expected")

    @property
    def edges(self) -> np.ndarray:
        return self.ball.edges

    def inner(self, other: EdgeFunction) -> float:
        return float(self.values @ other.values)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def incidence(ball: CayleyBall) -> sparse.csr_matrix:
    """Signed incidence ``B`` (edges x vertices) so that ``grad = B``."""
    e = ball.edges
    m = len(e)
    rows = np.repeat(np.arange(m), 2)
    cols = e.ravel()
    vals = np.tile([-1.0, 1.0], m)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(m, len(ball)))


def gradient(ball: CayleyBall, f: np.ndarray) -> EdgeFunction:
    e = ball.edges
    f = np.asarray(f, dtype=float)
    return EdgeFunction(ball, f[e[:, 1]] - f[e[:, 0]])


def divergence(alpha: EdgeFunction) -> np.ndarray:
    e = alpha.edges
    n = len(alpha.ball)
    return np.bincount(e[:, 1], alpha.values, minlength=n) - np.bincount(
        e[:, 0], alpha.values, minlength=n
    )


def jacobi_cg(A: sparse.spmatrix, b: np.ndarray, rtol: float = 1e-12, maxiter=None):
    """Conjugate gradients with diagonal preconditioning on an SPD matrix."""
    d = A.diagonal()
    M = LinearOperator(A.shape, matvec=lambda x: x / d, dtype=float)
    if not np.any(b):
        return np.zeros_like(b)
    x, info = cg(A, b, rtol=rtol, atol=0.0, M=M, maxiter=maxiter or 20 * A.shape[0])
    if info != 0:
        raise SolverError(f"CG did not converge (info={info})")
    return x


def dirichlet_poisson(ball: CayleyBall, g: np.ndarray, rtol: float = 1e-13) -> np.ndarray:
    """Solve ``-Delta f = g`` at distance < radius with f = 0 on the outer sphere."""
    idx = np.nonzero(ball.distance < ball.radius)[0]
    A = (-ball.laplacian_matrix)[idx][:, idx].tocsr()
    f = np.zeros(len(ball))
    f[idx] = jacobi_cg(A, np.asarray(g, dtype=float)[idx], rtol=rtol)
    return f


@dataclass
class HodgeResult:
    f: np.ndarray
    h: EdgeFunction
    grad_f: EdgeFunction
    div_residual: float
    orthogonality: float
    reconstruction: float


def hodge_decompose(alpha: EdgeFunction, rtol: float = 1e-13) -> HodgeResult:
    """Split ``alpha = grad f + h`` with ``div h = 0`` on the interior.

    The potential f lives on the interior vertices (distance < radius) and
    vanishes on the outer sphere and beyond; it solves ``-Delta f = div
    alpha`` there (the Dirichlet weak form).
    """
    ball = alpha.ball
    idx = np.nonzero(ball.distance < ball.radius)[0]
    f = dirichlet_poisson(ball, divergence(alpha), rtol=rtol)
    grad_f = gradient(ball, f)
    h = EdgeFunction(ball, alpha.values - grad_f.values)
    div_h = divergence(h)
    return HodgeResult(
        f=f,
        h=h,
        grad_f=grad_f,
        div_residual=float(np.abs(div_h[idx]).max(initial=0.0)),
        orthogonality=abs(grad_f.inner(h)),
        reconstruction=float(np.abs(grad_f.values + h.values - alpha.values).max(initial=0.0)),
    )
