"""Property suite behind the ``checks`` command.

Each check returns a :class:`CheckResult`; ``run_checks`` filters them by
name.  ``laplacian_fn`` lets a caller substitute a (deliberately broken)
Laplacian to confirm that the suite notices.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import calculus as calc
from .cayley import CayleyBall, GroupSpec, build_ball
from .hodge import EdgeFunction, gradient, hodge_decompose
from .semigroup import half_laplacian, spectral_half_laplacian
from .variational import brezis_lieb_gap


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: {self.value:.3e} (threshold {self.threshold:.1e})"
                f" {self.detail}".rstrip())


def _supported_inside(ball: CayleyBall, rng, halo: int = 1) -> np.ndarray:
    u = rng.standard_normal(len(ball))
    u[~calc.validity_mask(ball, halo)] = 0.0
    return u


def sign_error_laplacian(ball: CayleyBall, u: np.ndarray) -> np.ndarray:
    """Mutation canary: the first generator enters with the wrong sign."""
    u = np.asarray(u, dtype=float)
    out = calc.laplacian(ball, u)
    return out - 2.0 * calc.directional_diff(ball, u, 0)


def check_identity(radius: int, lap: Callable, rng) -> CheckResult:
    err = 0.0
    for spec, R in ((GroupSpec.lattice(3), radius), (GroupSpec.heisenberg(), 4)):
        ball = build_ball(spec, R)
        inner = calc.validity_mask(ball, 1)
        for _ in range(100):
            u = rng.standard_normal(len(ball))
            diff = calc.laplacian_via_hessian(ball, u) + lap(ball, u)
            err = max(err, np.abs(diff[inner]).max())
    return CheckResult("laplacian-hessian identity", err < 1e-12, err, 1e-12)


def check_symmetry(radius: int, lap: Callable, rng) -> CheckResult:
    err = 0.0
    for spec, R in ((GroupSpec.lattice(3), radius), (GroupSpec.heisenberg(), 4)):
        ball = build_ball(spec, R)
        for _ in range(20):
            u, v = _supported_inside(ball, rng), _supported_inside(ball, rng)
            a, b = lap(ball, u) @ v, u @ lap(ball, v)
            err = max(err, abs(a - b) / max(1.0, abs(a)))
    return CheckResult("laplacian symmetry", err < 1e-12, err, 1e-12)


def check_green(radius: int, lap: Callable, rng) -> CheckResult:
    err = 0.0
    for spec, R in ((GroupSpec.lattice(3), radius), (GroupSpec.heisenberg(), 4)):
        ball = build_ball(spec, R)
        for _ in range(20):
            u = _supported_inside(ball, rng)
            a = -lap(ball, u) @ u
            b = calc.gamma(ball, u).sum()
            err = max(err, abs(a - b) / max(1.0, abs(b)))
    return CheckResult("green identity", err < 1e-12, err, 1e-12)


def check_chain_quadratic(radius: int, lap: Callable, rng) -> CheckResult:
    ball = build_ball(GroupSpec.lattice(3), radius)
    inner = calc.validity_mask(ball, 1)
    err = 0.0
    for _ in range(50):
        f = rng.standard_normal(len(ball))
        lhs = lap(ball, f * f)
        rhs = 2 * f * lap(ball, f) + 2 * calc.gamma(ball, f)
        err = max(err, np.abs(lhs - rhs)[inner].max())
    return CheckResult("chain rule (quadratic)", err < 1e-12, err, 1e-12)


def check_chain_log(radius: int, lap: Callable, rng) -> CheckResult:
    ball = build_ball(GroupSpec.lattice(3), min(radius, 5))
    worst = 1.0
    for _ in range(50):
        f = rng.integers(-3, 4, len(ball)).astype(float)
        rep = calc.chain_rule_check(
            ball, f,
            lambda s: np.log1p(s * s),
            lambda s: 2 * s / (1 + s * s),
            lambda s: 2 * (1 - s * s) / (1 + s * s) ** 2,
        )
        worst = min(worst, rep.fraction)
    return CheckResult("chain rule (log(1+s^2))", worst == 1.0, worst, 1.0,
                       "membership fraction")


def check_holder(radius: int, lap: Callable, rng) -> CheckResult:
    ball = build_ball(GroupSpec.lattice(3), radius)
    worst = 0.0
    for p in (1.0, 1.2, 2.0, 3.0):
        for _ in range(10):
            u = _supported_inside(ball, rng, halo=2)
            rep = calc.norm_report(ball, u, p)
            worst = max(worst, rep.d2p / rep.holder_bound(ball.degree))
    return CheckResult("hoelder chain", worst <= 1 + 1e-12, worst, 1.0,
                       "max ||Delta u||_p / bound")


def check_hodge(radius: int, lap: Callable, rng) -> CheckResult:
    ball = build_ball(GroupSpec.lattice(2), 10)
    worst = 0.0
    detail = []
    for _ in range(5):
        alpha = EdgeFunction(ball, rng.standard_normal(len(ball.edges)))
        res = hodge_decompose(alpha)
        worst = max(worst, res.div_residual, res.orthogonality * 1e-2, res.reconstruction)
        detail.append(res.div_residual)
    g = gradient(ball, ball.delta())
    pure = hodge_decompose(g)
    worst = max(worst, pure.h.norm())
    return CheckResult("hodge decomposition", worst < 1e-10, worst, 1e-10)


def check_halflap(radius: int, lap: Callable, rng) -> CheckResult:
    ball = build_ball(GroupSpec.lattice(2), 5)
    u = rng.standard_normal(len(ball))
    u[ball.distance > 2] = 0.0
    h = half_laplacian(ball, u)
    ref = spectral_half_laplacian(ball, u)
    e1 = np.linalg.norm(h - ref) / np.linalg.norm(ref)
    big = build_ball(GroupSpec.lattice(2), 8)
    w = np.zeros(len(big))
    w[: ball.count_within(3)] = rng.standard_normal(ball.count_within(3))
    hh = half_laplacian(big, half_laplacian(big, w))
    target = -calc.laplacian(big, w)
    e2 = np.linalg.norm(hh - target) / np.linalg.norm(target)
    ok = e1 < 1e-4 and e2 < 1e-3
    return CheckResult("half-laplacian", ok, max(e1, e2 * 0.1), 1e-4,
                       f"spectral {e1:.2e}, composed {e2:.2e}")


def gaussian(ball: CayleyBall, center, width: float = 1.0) -> np.ndarray:
    """``exp(-|x - c|^2 / width^2)`` on a lattice ball."""
    d = ball.elements - np.asarray(center)[None, :]
    return np.exp(-np.sum(d * d, axis=1) / width**2)


def brezis_lieb_sequence(ball: CayleyBall, ns=(10, 100, 1000), shift: int = 5) -> list[float]:
    """Gaps for ``u_n = u + bump / n`` with overlapping Gaussians (p = 2).

    For p = 2 the gap is exactly ``2 <u, bump> / n``.
    """
    dim = ball.elements.shape[1]
    u = gaussian(ball, np.zeros(dim))
    c = np.zeros(dim, dtype=int)
    c[0] = shift
    bump = gaussian(ball, c)
    return [brezis_lieb_gap(u + bump / n, u, 2.0) for n in ns]


def check_brezis_lieb(radius: int, lap: Callable, rng) -> CheckResult:
    ball = build_ball(GroupSpec.lattice(3), radius)
    u = np.zeros(len(ball))
    u[: ball.count_within(1)] = rng.random(ball.count_within(1))
    bump = np.zeros(len(ball))
    bump[ball.index_of((radius, 0, 0))] = 1.0
    disjoint = abs(brezis_lieb_gap(u + bump, u, 1.5))
    gaps = np.abs(brezis_lieb_sequence(ball))
    ok = disjoint == 0.0 and gaps[-1] < 1e-6 and bool(np.all(np.diff(gaps) < 0))
    return CheckResult("brezis-lieb", ok, max(disjoint, gaps[-1]), 1e-6,
                       f"disjoint {disjoint:.1e}, gaps {', '.join(f'{g:.1e}' for g in gaps)}")


CHECKS = {
    "identity": check_identity,
    "symmetry": check_symmetry,
    "green": check_green,
    "chain-quadratic": check_chain_quadratic,
    "chain-log": check_chain_log,
    "holder": check_holder,
    "hodge": check_hodge,
    "halflap": check_halflap,
    "brezis-lieb": check_brezis_lieb,
}


def run_checks(radius: int = 6, names: list[str] | None = None, seed: int = 0,
               laplacian_fn: Callable | None = None) -> list[CheckResult]:
    """Run the named checks (substring match; all by default)."""
    lap = laplacian_fn or calc.laplacian
    selected = [k for k in CHECKS if not names or any(n in k for n in names)]
    if names and not selected:
        raise KeyError(f"no check matches {names}; available: {', '.join(CHECKS)}")
    out = []
    for key in selected:
        rng = np.random.default_rng(seed)
        t = time.perf_counter()
        res = CHECKS[key](radius, lap, rng)
        res.seconds = time.perf_counter() - t
        out.append(res)
    return out
