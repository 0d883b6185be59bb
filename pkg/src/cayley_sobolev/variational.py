"""Best constant of the second-order Sobolev inequality.

``K = inf ||Delta u||_p^p`` over finitely supported u with ``||u||_q = 1``.
The minimisation runs on one of the finite feasible sets of
:mod:`cayley_sobolev.feasible` by projected gradient descent on the q-sphere
with Armijo backtracking, a smoothing schedule for ``|t|^p`` when ``p < 2``,
translation of the peak to the identity after accepted steps, and a final
Newton polish of the optimality system.

At a constrained critical point ``p Delta(phi_p(Delta u)) = lam q phi_q(u)``;
pairing with u gives ``lam = p K / q`` and therefore ``Delta(phi_p(Delta u)) =
K phi_q(u)`` with ``K = ||Delta u||_p^p``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .calculus import laplacian, lp_norm, validity_mask
from .cayley import CayleyBall, GroupSpec, TranslationError, translate_function
from .feasible import (
    DirichletModel,
    GreenModel,
    HessianL1Model,
    Model,
    dphi,
    phi,
    smooth_power,
)

__all__ = [
    "ConfigError", "ConvergenceError", "MinimizationConfig", "MinimizationResult",
    "ELGradient", "InterpolationReport", "TailProfile", "phi", "dphi",
    "critical_exponent", "rayleigh", "el_gradient", "translate_to_argmax",
    "interpolation_check", "tail_profile", "brezis_lieb_gap", "make_model",
    "minimize_best_constant", "minimize_hessian_l1",
]

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


def critical_exponent(N: float, p: float) -> float:
    """``p** = N p / (N - 2p)``."""
    return N * p / (N - 2 * p)


@dataclass
class MinimizationConfig:
    """Problem and optimiser settings.

    ``model`` selects the feasible set: ``"green"`` (``Delta u`` supported on
    ``B(R)``, lattice only), ``"dirichlet"`` (u supported on ``B(R)``) or
    ``"auto"`` (green on lattices, dirichlet otherwise).  ``halo`` is the
    extra radius of the evaluation ball of the green model.
    """

    spec: GroupSpec = field(default_factory=lambda: GroupSpec.lattice(3))
    p: float = 1.2
    q: float = 7.0
    domain_radius: int = 10
    init: str = "radial-bump"
    seed: int = 0
    step: float = 1.0
    armijo_beta: float = 0.5
    armijo_c: float = 1e-4
    tol_grad: float = 1e-5
    max_iter: int = 300
    epsilon_schedule: tuple = (1e-2, 1e-4, 1e-6, 1e-8)
    restarts: int = 5
    model: str = "auto"
    halo: int = 6
    polish: bool = True
    polish_tol: float = 1e-12
    translate_tol: float = 1e-10

    @property
    def N(self) -> int:
        return self.spec.homogeneous_dim

    @property
    def p_crit(self) -> float:
        return critical_exponent(self.N, self.p)

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1)

    @property
    def q_conj(self) -> float:
        return self.q / (self.q - 1)

    @property
    def q_interp(self) -> float:
        """Default intermediate exponent ``(p** + q) / 2``."""
        return 0.5 * (self.p_crit + self.q)

    @property
    def resolved_model(self) -> str:
        if self.model == "auto":
            return "green" if self.spec.kind == "lattice" else "dirichlet"
        return self.model

    def validate(self, hessian_l1: bool = False) -> MinimizationConfig:
        N = self.N
        if N < 3:
            raise ConfigError("homogeneous dimension must be at least 3")
        if hessian_l1:
            if self.spec.kind != "lattice":
                raise ConfigError("the Hessian l1 problem is set on Z^N only")
            if not self.q > N / (N - 2):
                raise ConfigError(f"need q > N/(N-2) = {N / (N - 2):.4g}")
        else:
            if not 1 < self.p < N / 2:
                raise ConfigError(f"need 1 < p < N/2 = {N / 2}")
            if not self.q > self.p_crit * (1 + 1e-12):
                raise ConfigError(f"need q > p** = {self.p_crit:.4g}")
        if self.domain_radius < 3:
            raise ConfigError("domain_radius must be at least 3")
        if self.init not in ("radial-bump", "random"):
            raise ConfigError(f"unknown init {self.init!r}")
        if self.model not in ("auto", "green", "dirichlet"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.resolved_model == "green" and self.spec.kind != "lattice":
            raise ConfigError("the green model needs a lattice group")
        if self.halo < 2:
            raise ConfigError("halo must be at least 2")
        if self.max_iter < 1 or self.tol_grad <= 0:
            raise ConfigError("max_iter must be positive and tol_grad > 0")
        if not 0 < self.armijo_beta < 1 or not 0 < self.armijo_c < 1:
            raise ConfigError("Armijo parameters must lie in (0, 1)")
        return self


@dataclass
class MinimizationResult:
    """Outcome of one minimisation (the best over restarts).

    ``u_star`` lives on ``ball`` (zero outside it for the dirichlet model;
    for the green model the ball is the evaluation ball and u has a tail
    beyond it that is not part of the normalisation).  ``el_residual`` is the
    sup of ``Delta(phi_p(Delta u)) - K phi_q(u)`` over ``interior``.
    """

    u_star: np.ndarray
    K_est: float
    objective_history: list
    el_residual: float
    argmax_vertex: tuple
    ball: CayleyBall
    domain_radius: int
    iterations: int
    converged: bool
    p: float
    q: float
    model: str
    unknowns: np.ndarray
    interior: np.ndarray
    proj_grad_norm: float = float("nan")
    translations: int = 0
    qnorm_drift: float = 0.0
    restart_index: int = 0
    restart_K: list = field(default_factory=list)
    restart_residual: list = field(default_factory=list)

    @property
    def el_residual_normalized(self) -> float:
        return self.el_residual / np.abs(self.u_star).max() ** (self.q - 1)

    @property
    def laplacian(self) -> np.ndarray:
        """``Delta u_star`` on the ball (exact at distance <= radius - 1)."""
        return laplacian(self.ball, self.u_star)

    def summary(self) -> dict:
        return {
            "K_est": self.K_est,
            "el_residual": self.el_residual,
            "el_residual_normalized": self.el_residual_normalized,
            "iterations": self.iterations,
            "converged": self.converged,
            "model": self.model,
            "domain_radius": self.domain_radius,
            "argmax_vertex": list(self.argmax_vertex),
            "restart_index": self.restart_index,
            "restart_K": list(self.restart_K),
            "proj_grad_norm": self.proj_grad_norm,
        }


def rayleigh(ball: CayleyBall, u: np.ndarray, p: float, q: float,
             region: np.ndarray | None = None) -> float:
    """``||Delta u||_p^p / ||u||_q^p``.

    Exact for u supported on ``B(radius - 1)``.  ``region`` restricts the
    Laplacian sum (e.g. to the validity region when u does not vanish near
    the boundary).
    """
    u = np.asarray(u, dtype=float)
    uq = lp_norm(u, q)
    if uq == 0:
        raise ValueError("rayleigh quotient of the zero function")
    lap = np.abs(laplacian(ball, u)) ** p
    if region is not None:
        lap = lap[region]
    return float(np.sum(lap) / uq**p)


@dataclass
class ELGradient:
    free: np.ndarray
    projected: np.ndarray


def el_gradient(ball: CayleyBall, u: np.ndarray, p: float, q: float, epsilon: float = 0.0,
                domain: np.ndarray | None = None) -> ELGradient:
    """Gradient of ``J(u) = sum |Delta u|^p`` and its part tangent to the q-sphere.

    The free gradient is ``p Delta(phi(Delta u))`` with ``phi(t) = (t^2 +
    eps^2)^{(p-2)/2} t`` (``|t|^{p-2} t`` for ``eps = 0`` or ``p >= 2``); it is
    returned on ``domain`` (default: distance <= radius - 1, where it is the
    exact derivative for functions supported there) and zero elsewhere.  The
    projection removes the component along ``phi_q(u)``.
    """
    u = np.asarray(u, dtype=float)
    dom = validity_mask(ball, 1) if domain is None else np.asarray(domain, bool)
    _, dJ = smooth_power(laplacian(ball, u), p, epsilon)
    free = np.where(dom, laplacian(ball, dJ), 0.0)
    n = np.where(dom, phi(u, q), 0.0)
    nn = n @ n
    proj = free - (free @ n) / nn * n if nn > 0 else free.copy()
    return ELGradient(free, proj)


def translate_to_argmax(ball: CayleyBall, u: np.ndarray, tol: float | None = 1e-10,
                        q: float = 2.0) -> np.ndarray:
    """Translate u so that the maximiser of |u| sits at the identity.

    Ties go to the first vertex in canonical order.  Raises
    ``TranslationError`` when more than ``tol`` of the ``l^q`` mass leaves
    the ball.
    """
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        raise ValueError("cannot normalise the zero function")
    k = int(np.argmax(np.abs(u)))
    if k == 0:
        return u.copy()
    v, dropped = translate_function(ball, u, ball.elements[k], q=q)
    if tol is not None and dropped > tol:
        raise TranslationError(f"translation drops {dropped:.2e} of the mass")
    return v


@dataclass
class InterpolationReport:
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else 0.0

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12)


def interpolation_check(u: np.ndarray, q_prime: float, q: float) -> InterpolationReport:
    """``||u||_q^q <= ||u||_{q'}^{q'} ||u||_inf^{q-q'}`` for ``q' < q``."""
    if not q_prime < q:
        raise ValueError("need q' < q")
    a = np.abs(np.asarray(u, dtype=float))
    return InterpolationReport(
        float(np.sum(a**q)), float(np.sum(a**q_prime) * a.max(initial=0.0) ** (q - q_prime))
    )


@dataclass
class TailProfile:
    radii: np.ndarray
    mu: np.ndarray
    nu: np.ndarray


def tail_profile(ball: CayleyBall, u: np.ndarray, p: float, q: float, radii,
                 region: np.ndarray | None = None) -> TailProfile:
    """Word-metric tails ``mu(R) = sum_{d>R} |Delta u|^p``, ``nu(R) = sum_{d>R} |u|^q``.

    ``region`` masks the vertices where ``Delta u`` is trusted (all by default).
    """
    radii = np.asarray(radii)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be increasing")
    lap = np.abs(laplacian(ball, u)) ** p
    if region is not None:
        lap = np.where(region, lap, 0.0)
    uq = np.abs(np.asarray(u, dtype=float)) ** q
    mu = np.array([lap[ball.distance > r].sum() for r in radii])
    nu = np.array([uq[ball.distance > r].sum() for r in radii])
    return TailProfile(radii, mu, nu)


def brezis_lieb_gap(u_n: np.ndarray, u: np.ndarray, p: float, ball: CayleyBall | None = None,
                    region: np.ndarray | None = None) -> float:
    """``(||u_n||_p^p - ||u_n - u||_p^p) - ||u||_p^p``.

    With a ball, the same quantity is computed for ``Delta u_n``, ``Delta u``
    summed over ``region`` (a boolean mask; the whole ball by default).
    """
    u_n = np.asarray(u_n, dtype=float)
    u = np.asarray(u, dtype=float)
    if ball is not None:
        u_n, u = laplacian(ball, u_n), laplacian(ball, u)
        if region is not None:
            u_n, u = u_n[region], u[region]

    # summed pointwise so that disjoint supports give exactly zero
    a, b, c = np.abs(u_n) ** p, np.abs(u_n - u) ** p, np.abs(u) ** p
    return float(np.sum((a - b) - c))


# ---------------------------------------------------------------------------
# optimiser


def make_model(cfg: MinimizationConfig, hessian_l1: bool = False) -> Model:
    if hessian_l1:
        return HessianL1Model(cfg.spec, cfg.domain_radius, cfg.q)
    if cfg.resolved_model == "green":
        return GreenModel(cfg.spec, cfg.domain_radius, cfg.p, cfg.q, halo=cfg.halo)
    return DirichletModel(cfg.spec, cfg.domain_radius, cfg.p, cfg.q)


@dataclass
class _Trace:
    history: list
    iterations: int = 0
    translations: int = 0
    qnorm_drift: float = 0.0


def _tangent(g, n):
    return g - (g @ n) / (n @ n) * n


def _descend(model: Model, x: np.ndarray, cfg: MinimizationConfig, eps: float,
             trace: _Trace) -> tuple[np.ndarray, float]:
    """Projected gradient with Armijo backtracking at fixed smoothing ``eps``.

    The direction is the metric gradient projected onto the tangent space
    of the constraint; candidates are renormalised onto the sphere.  Returns
    the final iterate and its relative tangent-gradient norm.
    """
    J, g = model.energy_grad(x, eps)
    step = cfg.step
    gnorm = np.inf
    for _ in range(cfg.max_iter):
        n = model.normal(x)
        P = model.metric(x, eps)
        Pg, Pn = P(g), P(n)
        d = Pg - (n @ Pg) / (n @ Pn) * Pn
        gnorm = np.linalg.norm(_tangent(g, n)) / max(J, 1e-300)
        slope = g @ d
        if gnorm < cfg.tol_grad or slope <= 0:
            break
        while step > 1e-14:
            cand = model.normalize(x - step * d)
            Jc = model.energy(cand, eps)
            if Jc <= J - cfg.armijo_c * step * slope:
                break
            step *= cfg.armijo_beta
        else:
            break
        x, J = cand, Jc
        trace.iterations += 1
        trace.qnorm_drift = max(trace.qnorm_drift, abs(model.qnorm(x) - 1.0))
        k = int(np.argmax(np.abs(model.field(x))))
        if k != 0:
            y = model.translate(x, k, cfg.translate_tol)
            if y is not None:
                y = model.normalize(y)
                Jy = model.energy(y, eps)
                if Jy <= J:
                    x, J = y, Jy
                    trace.translations += 1
        trace.history.append(J)
        J, g = model.energy_grad(x, eps)
        step = min(step / cfg.armijo_beta, cfg.step)
    return x, float(gnorm)


def _run_once(model: Model, cfg: MinimizationConfig, x0: np.ndarray,
              polish: bool = True) -> MinimizationResult:
    smooth = model.p < 2
    schedule = tuple(cfg.epsilon_schedule) if smooth else (0.0,)
    x = model.normalize(x0)
    trace = _Trace(history=[])
    gnorm = np.inf
    for eps in schedule:
        # the smoothed energy decreases with eps, so the history stays monotone
        trace.history.append(model.energy(x, eps))
        x, gnorm = _descend(model, x, cfg, eps, trace)
    K = model.energy(x)
    if polish and cfg.polish:
        y = model.polish(x, cfg.polish_tol)
        if y is not None and np.all(np.isfinite(y)):
            y = model.normalize(y)
            Ky = model.energy(y)
            ry, rx = model.el_residual(y, Ky), model.el_residual(x, K)
            if rx.size:
                better = np.abs(ry).max() < np.abs(rx).max()
            else:  # no smooth optimality system: compare objectives
                better = Ky < K
            peak_ok = int(np.argmax(np.abs(model.field(y)))) == 0
            if better and peak_ok and Ky <= trace.history[-1]:
                x, K = y, Ky
    trace.history.append(K)
    u = model.field(x)
    res = float(np.abs(model.el_residual(x, K)).max(initial=0.0))
    k = int(np.argmax(np.abs(u)))
    result = MinimizationResult(
        u_star=u, K_est=K, objective_history=trace.history, el_residual=res,
        argmax_vertex=tuple(int(c) for c in model.ball.elements[k]), ball=model.ball,
        domain_radius=model.R, iterations=trace.iterations, converged=False,
        p=model.p, q=model.q, model=model.name, unknowns=x, interior=model.interior(),
        proj_grad_norm=gnorm, translations=trace.translations,
        qnorm_drift=trace.qnorm_drift,
    )
    result.converged = bool(result.el_residual_normalized < 10 * cfg.tol_grad)
    return result


def _best_of(model: Model, cfg: MinimizationConfig, **kw) -> MinimizationResult:
    starts = [model.initial(cfg.init, cfg.seed)]
    starts += [model.initial("random", cfg.seed + 1 + k) for k in range(cfg.restarts)]
    best = None
    Ks, rs = [], []
    for k, x0 in enumerate(starts):
        res = _run_once(model, cfg, x0, **kw)
        res.restart_index = k
        Ks.append(res.K_est)
        rs.append(res.el_residual_normalized)
        log.info("start %d: K=%.12g residual=%.3e", k, res.K_est, res.el_residual_normalized)
        if best is None or res.K_est < best.K_est:
            best = res
    best.restart_K = Ks
    best.restart_residual = rs
    return best


def minimize_best_constant(config: MinimizationConfig, model: Model | None = None
                           ) -> MinimizationResult:
    """Estimate ``K = inf ||Delta u||_p^p`` over ``||u||_q = 1``.

    Runs the configured start and ``config.restarts`` randomised starts and
    keeps the smallest ``K_est`` (ties go to the lower start index).
    """
    cfg = config.validate()
    return _best_of(model or make_model(cfg), cfg)


def minimize_hessian_l1(config: MinimizationConfig, model: HessianL1Model | None = None
                        ) -> MinimizationResult:
    """Estimate ``inf ||Hess u||_1`` over ``||u||_q = 1`` on a lattice.

    u is supported on ``B(R)``; the absolute value is smoothed as ``sqrt(t^2
    + eps^2)`` along the epsilon schedule.  ``converged`` reports whether the
    last stage reached the gradient tolerance; the objective is not
    differentiable at its minimiser, so it usually does not.
    """
    cfg = config.validate(hessian_l1=True)
    model = model or make_model(cfg, hessian_l1=True)
    res = _best_of(model, cfg)
    res.converged = bool(res.proj_grad_norm < cfg.tol_grad)
    return res
