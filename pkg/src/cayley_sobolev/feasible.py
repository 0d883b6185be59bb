"""Finite-dimensional feasible sets for the second-order Sobolev quotient.

Each model parametrises finitely many unknowns ``x`` and maps them to a
function ``u`` on an evaluation ball.  It exposes the smoothed energy, the
constraint ``||u||_q^q`` and their gradients in ``x``, a descent metric, the
translation move, the Euler-Lagrange residual and a Newton polish of the
optimality system.

``DirichletModel``
    ``u`` is supported on ``B(R)``; ``x = u``.  Works on any group.
``GreenModel``
    ``Delta u`` is supported on ``B(R)`` and ``u = G * w`` with ``w = -Delta
    u`` and G the lattice Green's function, so u has the ``|x|^{2-N}`` tail of
    the true extremal.  ``x = w``.  Lattice groups only.
``HessianL1Model``
    ``u`` supported on ``B(R)`` with energy ``sum_{i,j} |d_j d_i u|``.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, gmres, splu

from .calculus import lp_norm
from .cayley import CayleyBall, GroupSpec, build_ball, translate_function
from .green import lattice_green
from .hodge import dirichlet_poisson


def phi(t: np.ndarray, r: float) -> np.ndarray:
    """``|t|^{r-2} t`` written so that it is defined at 0."""
    return np.sign(t) * np.abs(t) ** (r - 1)


def dphi(t: np.ndarray, r: float) -> np.ndarray:
    return (r - 1) * np.abs(t) ** (r - 2)


def smooth_power(t: np.ndarray, p: float, eps: float):
    """``sum (t^2 + eps^2)^{p/2}`` and its derivative in t."""
    if eps > 0 and p < 2:
        s = t * t + eps * eps
        return float(np.sum(s ** (p / 2))), p * s ** ((p - 2) / 2) * t
    return float(np.sum(np.abs(t) ** p)), p * phi(t, p)


class Model:
    """Interface shared by the feasible-set models."""

    name = "base"
    ball: CayleyBall
    n: int
    p: float
    q: float
    R: int

    def field(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def energy_grad(self, x: np.ndarray, eps: float) -> tuple[float, np.ndarray]:
        raise NotImplementedError

    def energy(self, x: np.ndarray, eps: float = 0.0) -> float:
        return self.energy_grad(x, eps)[0]

    def qnorm(self, x: np.ndarray) -> float:
        return lp_norm(self.field(x), self.q)

    def normal(self, x: np.ndarray) -> np.ndarray:
        """Gradient of ``||u||_q^q / q`` with respect to x."""
        raise NotImplementedError

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return x / self.qnorm(x)

    def metric(self, x: np.ndarray, eps: float):
        """Callable applying the inverse descent metric."""
        return lambda v: v

    def translate(self, x: np.ndarray, k: int, tol: float):
        """Move the vertex ``k`` of the evaluation ball to the identity.

        Returns the translated unknowns, or None when the move would leave
        the feasible set or drop more than ``tol`` of the mass.
        """
        raise NotImplementedError

    def interior(self) -> np.ndarray:
        """Vertices of the evaluation ball where the Euler-Lagrange equation holds."""
        raise NotImplementedError

    def el_residual(self, x: np.ndarray, K: float) -> np.ndarray:
        """``Delta(phi_p(Delta u)) - K phi_q(u)`` on ``interior()``."""
        raise NotImplementedError

    def ratio(self, X: np.ndarray) -> np.ndarray:
        """Sobolev quotient for each column of X."""
        raise NotImplementedError

    def polish(self, x: np.ndarray, tol: float) -> np.ndarray | None:
        return None

    def comparison(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Solution v of ``-Delta v = |Delta u|`` and the unknowns of a feasible copy.

        v dominates |u| by the maximum principle.
        """
        raise NotImplementedError

    def initial(self, init: str, seed: int = 0) -> np.ndarray:
        raise NotImplementedError

    def _bump(self, init: str, seed: int, ball: CayleyBall, n: int) -> np.ndarray:
        sigma = self.R / 4
        if ball.spec.kind == "lattice":
            f = np.sum(ball.elements[:n].astype(float) ** 2, axis=1)
        else:
            f = ball.distance[:n].astype(float) ** 2
        u = np.exp(-f / sigma**2)
        if init == "random":
            u = u * (0.5 + np.random.default_rng(seed).random(n))
        return u


class DirichletModel(Model):
    """``u`` supported on ``B(R)``; operators on the work ball ``B(R + 2)``.

    ``D`` is the Laplacian from ``B(R)`` to ``B(R + 1)``, so ``sum |D u|^p``
    is the full-group energy.  A constrained critical point satisfies ``p D^T
    phi_p(D u) = lam q phi_q(u)``; pairing with u gives ``lam = p K / q``.
    """

    name = "dirichlet"

    def __init__(self, spec: GroupSpec, R: int, p: float, q: float,
                 ball: CayleyBall | None = None):
        self.ball = ball if ball is not None else build_ball(spec, R + 2)
        self.R, self.p, self.q = R, p, q
        self.n = self.ball.count_within(R)
        self.n1 = self.ball.count_within(R + 1)
        L = self.ball.laplacian_matrix
        self.D = L[: self.n1, : self.n].tocsr()
        self.DT = self.D.T.tocsr()
        self._lu = None

    def field(self, x):
        out = np.zeros(len(self.ball))
        out[: self.n] = x
        return out

    def qnorm(self, x):
        return lp_norm(x, self.q)

    def energy_grad(self, x, eps):
        val, g = smooth_power(self.D @ x, self.p, eps)
        return val, self.DT @ g

    def normal(self, x):
        return phi(x, self.q)

    def metric(self, x, eps):
        if self._lu is None:
            self._lu = splu((self.DT @ self.D).tocsc())
        return self._lu.solve

    def translate(self, x, k, tol):
        v, dropped = translate_function(self.ball, self.field(x), self.ball.elements[k],
                                        q=self.q)
        if dropped > tol or np.any(v[self.n:]):
            return None
        return v[: self.n]

    def interior(self):
        return self.ball.distance <= self.R

    def el_residual(self, x, K):
        return self.DT @ phi(self.D @ x, self.p) - K * phi(x, self.q)

    def ratio(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float).T).T
        num = np.sum(np.abs(self.D @ X) ** self.p, axis=0)
        return num / np.sum(np.abs(X) ** self.q, axis=0) ** (self.p / self.q)

    def initial(self, init, seed=0):
        return self.normalize(self._bump(init, seed, self.ball, self.n))

    def comparison(self, x):
        v = dirichlet_poisson(self.ball, np.abs(self.ball.laplacian_matrix @ self.field(x)))
        return v, v[: self.n].copy()

    def polish(self, x, tol, max_iter=30):
        """Newton's method on the smooth Lane-Emden form of the optimality system.

        Unknowns ``(u, v, K)`` with ``D u + phi_{p'}(v) = 0``, ``D^T v + K
        phi_q(u) = 0`` and ``sum |u|^q = 1``; ``p' = p/(p-1) >= 2`` keeps the
        system differentiable where ``D u`` vanishes.
        """
        p, q = self.p, self.q
        pc = p / (p - 1)
        n0, n1 = self.n, self.n1
        D, DT = self.D, self.DT
        u, v, K = x, -phi(D @ x, p), self.energy(x)

        def F(u, v, K):
            return np.concatenate([D @ u + phi(v, pc), DT @ v + K * phi(u, q),
                                   [np.sum(np.abs(u) ** q) - 1.0]])

        r = F(u, v, K)
        rn0 = np.abs(r).max()
        for _ in range(max_iter):
            if np.abs(r).max() < tol:
                break
            J = sparse.bmat([
                [D, sparse.diags(dphi(v, pc)), None],
                [sparse.diags(K * dphi(u, q)), DT, sparse.csr_matrix(phi(u, q)[:, None])],
                [sparse.csr_matrix(q * phi(u, q)[None, :]), None, None],
            ], format="csc")
            try:
                delta = splu(J).solve(-r)
            except RuntimeError:
                break
            lam = 1.0
            while lam > 1e-4:
                un, vn = u + lam * delta[:n0], v + lam * delta[n0:n0 + n1]
                Kn = K + lam * delta[-1]
                rn = F(un, vn, Kn)
                if np.abs(rn).max() < np.abs(r).max():
                    break
                lam *= 0.5
            else:
                break
            u, v, K, r = un, vn, Kn, rn
        if not np.abs(r).max() < rn0:
            return None
        return u


class GreenModel(Model):
    """``u = G * w`` with ``w = -Delta u`` supported on ``B(R)`` in Z^N.

    The objective is ``sum_{B(R)} |w|^p`` and the constraint ``sum_E |u|^q =
    1`` is taken on the evaluation ball ``E = B(R + halo)``.  Dropping the
    mass of ``|u|^q`` outside E can only lower the denominator, so the
    quotient is an upper bound for the quotient of the untruncated u; with
    ``|u| ~ |x|^{2-N}`` the neglected part is ``O((R + halo)^{N - q(N-2)})``.
    """

    name = "green"

    def __init__(self, spec: GroupSpec, R: int, p: float, q: float, halo: int = 6,
                 ball: CayleyBall | None = None):
        if spec.kind != "lattice":
            raise ValueError("the Green's-function model needs a lattice group")
        self.ball = ball if ball is not None else build_ball(spec, R + halo)
        self.R, self.p, self.q, self.halo = R, p, q, halo
        self.n = self.ball.count_within(R)
        self.G = green_block(self.ball.elements, self.ball.elements[: self.n])

    def field(self, x):
        return self.G @ x

    def energy_grad(self, x, eps):
        return smooth_power(x, self.p, eps)

    def normal(self, x):
        return self.G.T @ phi(self.G @ x, self.q)

    def metric(self, x, eps):
        if self.p >= 2:
            return lambda v: v
        w = (x * x + max(eps, 1e-12) ** 2) ** ((2 - self.p) / 2)
        return lambda v: w * v

    def translate(self, x, k, tol):
        full = np.zeros(len(self.ball))
        full[: self.n] = x
        v, dropped = translate_function(self.ball, full, self.ball.elements[k], q=self.p)
        if dropped > 0 or np.any(v[self.n:]):
            return None
        return v[: self.n]

    def interior(self):
        return self.ball.distance <= self.R - 1

    def _v_residual(self, x, K):
        """``phi_p(w) - K G^T phi_q(u)`` on ``B(R)``."""
        return phi(x, self.p) - K * self.normal(x)

    def el_residual(self, x, K):
        # Delta(phi_p(Delta u)) - K phi_q(u) = -Delta r on B(R-1), r the residual above
        r = np.zeros(len(self.ball))
        r[: self.n] = self._v_residual(x, K)
        lap = self.ball.laplacian_matrix @ r
        return -lap[self.interior()]

    def ratio(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float).T).T
        num = np.sum(np.abs(X) ** self.p, axis=0)
        den = np.sum(np.abs(self.G @ X) ** self.q, axis=0) ** (self.p / self.q)
        return num / den

    def initial(self, init, seed=0):
        u = np.zeros(len(self.ball))
        u[: self.n] = self._bump(init, seed, self.ball, self.n)
        w = -(self.ball.laplacian_matrix @ u)[: self.n]
        return self.normalize(w)

    def comparison(self, x):
        return self.field(np.abs(x)), np.abs(x)

    def polish(self, x, tol, max_iter=20):
        """Newton-Krylov on ``v = K G^T phi_q(G phi_{p'}(v))``, ``||u||_q = 1``.

        Unknowns ``v = phi_p(w)`` on ``B(R)`` and K; the map ``phi_{p'}`` is
        C^1 because ``p' >= 2``.
        """
        p, q, G = self.p, self.q, self.G
        pc = p / (p - 1)
        n = self.n
        v, K = phi(x, p), self.energy(x)

        def F(v, K):
            u = G @ phi(v, pc)
            return np.concatenate([v - K * (G.T @ phi(u, q)), [np.sum(np.abs(u) ** q) - 1.0]])

        r = F(v, K)
        r0 = np.abs(r).max()
        for _ in range(max_iter):
            if np.abs(r).max() < tol:
                break
            u = G @ phi(v, pc)
            a = dphi(u, q)
            b = dphi(v, pc)
            nq = G.T @ phi(u, q)
            qphi = q * phi(u, q)

            def jv(z, u=u, a=a, b=b, nq=nq, qphi=qphi, K=K):
                dv, dK = z[:n], z[n]
                du = G @ (b * dv)
                top = dv - dK * nq - K * (G.T @ (a * du))
                return np.concatenate([top, [qphi @ du]])

            J = LinearOperator((n + 1, n + 1), matvec=jv, dtype=float)
            delta, info = gmres(J, -r, rtol=1e-13, atol=0.0, restart=200, maxiter=5)
            lam = 1.0
            while lam > 1e-4:
                vn, Kn = v + lam * delta[:n], K + lam * delta[n]
                rn = F(vn, Kn)
                if np.abs(rn).max() < np.abs(r).max():
                    break
                lam *= 0.5
            else:
                break
            v, K, r = vn, Kn, rn
        if not np.abs(r).max() < r0:
            return None
        return phi(v, pc)


def green_block(targets: np.ndarray, sources: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Dense ``G(t - s)`` via a table over the bounding cube of differences."""
    dim = targets.shape[1]
    M = int(np.abs(targets).max(initial=0) + np.abs(sources).max(initial=0))
    axes = np.meshgrid(*([np.arange(M + 1)] * dim), indexing="ij")
    cube = np.stack([a.ravel() for a in axes], axis=1)
    table = lattice_green(cube).reshape((M + 1,) * dim)
    out = np.empty((len(targets), len(sources)))
    src = sources.astype(np.int32)
    for start in range(0, len(targets), chunk):
        diff = np.abs(targets[start:start + chunk, None, :].astype(np.int32) - src[None])
        out[start:start + chunk] = table[tuple(diff[..., k] for k in range(dim))]
    return out


class HessianL1Model(DirichletModel):
    """``u`` supported on ``B(R)`` with energy ``||Hess u||_1`` (lattice)."""

    name = "hessian-l1"

    def __init__(self, spec: GroupSpec, R: int, q: float, ball: CayleyBall | None = None):
        super().__init__(spec, R, 1.0, q, ball=ball)
        nb = self.ball.neighbors
        n_all = len(self.ball)
        rows = np.arange(n_all)
        blocks = []
        for i in range(self.ball.degree):
            j = nb[:, i]
            ok = j >= 0
            Di = sparse.csr_matrix((np.ones(ok.sum()), (rows[ok], j[ok])), shape=(n_all, n_all))
            blocks.append(Di - sparse.identity(n_all, format="csr"))
        H = [(Dj @ Di)[:, : self.n] for Di in blocks for Dj in blocks]
        self.H = sparse.vstack(H).tocsr()
        self.HT = self.H.T.tocsr()

    def energy_grad(self, x, eps):
        val, g = smooth_power(self.H @ x, 1.0, eps)
        return val, self.HT @ g

    def metric(self, x, eps):
        if self._lu is None:
            self._lu = splu((self.HT @ self.H).tocsc())
        return self._lu.solve

    def ratio(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float).T).T
        num = np.sum(np.abs(self.H @ X), axis=0)
        return num / np.sum(np.abs(X) ** self.q, axis=0) ** (1.0 / self.q)

    def el_residual(self, x, K):
        return np.zeros(0)

    def polish(self, x, tol):
        """Support cleanup: zero the entries below ``t max|x|`` for a sweep of t.

        Smoothing leaves an ``O(eps)`` floor of tiny entries that the
        nonsmooth objective penalises linearly; the best thresholded copy is
        returned when it lowers the true quotient, otherwise None.
        """
        a = np.abs(x)
        best, best_K = None, float(self.ratio(x)[0])
        for t in np.logspace(-10, -2, 9):
            y = np.where(a >= t * a.max(), x, 0.0)
            K = float(self.ratio(y)[0])
            if K < best_K:
                best, best_K = y, K
        return best
