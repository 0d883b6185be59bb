"""Explicit cutoff functions on Z^N and the decay of their norms.

``FirstOrderLog``: ``eta(x) = clip((log R - log|x|) / (log R - log r), 0, 1)``.

``SecondOrderSmooth``: ``eta(x) = phi(|x|^2)`` with ``phi(s) = clip(log(1 - (1 -
s/R)^3) / log(1 - (1 - r/R)^3), 0, 1)``; here r and R are scales of the
squared distance.

Both functions are invariant under the hyperoctahedral group (coordinate
permutations and sign changes), and so are the per-vertex quantities
``sum_i |d_i eta|^N``, ``|Delta eta|^{N/2}`` and ``sum_{i,j} |d_j d_i
eta|^{N/2}``.  Lattice sums are therefore taken over orbit representatives
``0 <= x_1 <= ... <= x_N`` weighted by orbit sizes, which makes radii of a few
hundred feasible in dimensions 3 and 4.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .cayley import GroupSpec, ResourceLimitError, build_ball, vertex_cap

FIRST = "first"
SECOND = "second"
_KIND_ALIASES = {"first": FIRST, "firstorderlog": FIRST, "first-order": FIRST,
                 "second": SECOND, "secondordersmooth": SECOND, "second-order": SECOND}


def _kind(kind: str) -> str:
    try:
        return _KIND_ALIASES[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown cutoff kind {kind!r}") from None


@dataclass(frozen=True)
class CutoffSpec:
    N: int
    r: float
    R: float
    kind: str = FIRST

    def __post_init__(self):
        object.__setattr__(self, "kind", _kind(self.kind))
        if self.N < 1:
            raise ValueError("N must be positive")
        if not self.r > 1:
            raise ValueError("need r > 1")
        if not self.R > self.r:
            raise ValueError("need R > r")
        if self.kind == SECOND and not self.r > 100:
            raise ValueError("the second-order cutoff needs r > 100")

    @property
    def outer_radius(self) -> float:
        """Euclidean radius of the support."""
        return self.R if self.kind == FIRST else float(np.sqrt(self.R))

    @property
    def inner_radius(self) -> float:
        return self.r if self.kind == FIRST else float(np.sqrt(self.r))

    def profile(self, s: np.ndarray) -> np.ndarray:
        """eta as a function of the squared norm ``s = |x|^2``."""
        s = np.asarray(s, dtype=float)
        if self.kind == FIRST:
            return first_profile(s, self.r, self.R)
        return second_profile(s, self.r, self.R)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.int64)
        return self.profile(np.sum(pts * pts, axis=-1))


def first_profile(s: np.ndarray, r: float, R: float) -> np.ndarray:
    rho = np.sqrt(s)
    with np.errstate(divide="ignore"):
        v = (np.log(R) - np.log(rho)) / (np.log(R) - np.log(r))
    return np.clip(v, 0.0, 1.0)


def second_profile(s: np.ndarray, r: float, R: float) -> np.ndarray:
    inner = np.clip(1.0 - s / R, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.log1p(-inner**3) / np.log1p(-((1.0 - r / R) ** 3))
    v = np.where(s <= r, 1.0, np.where(s >= R, 0.0, v))
    return np.clip(v, 0.0, 1.0)


def second_profile_derivative(s: np.ndarray, r: float, R: float) -> np.ndarray:
    """``phi'(s)`` on ``(r, R)`` from the closed form."""
    s = np.asarray(s, dtype=float)
    a = 1.0 - s / R
    denom = np.log1p(-((1.0 - r / R) ** 3))
    return (3.0 * a**2 / R) / (1.0 - a**3) / denom


def _lattice_ball(spec: CutoffSpec):
    radius = int(np.ceil(np.sqrt(spec.N) * spec.outer_radius)) + 1
    return build_ball(GroupSpec.lattice(spec.N), radius)


def eta_first(spec: CutoffSpec):
    """``(ball, values)`` of the logarithmic cutoff on an l^1 ball covering its support."""
    if spec.kind != FIRST:
        raise ValueError("eta_first needs a FirstOrderLog spec")
    ball = _lattice_ball(spec)
    return ball, spec(ball.elements)


def eta_second(spec: CutoffSpec):
    """``(ball, values)`` of the smooth second-order cutoff."""
    if spec.kind != SECOND:
        raise ValueError("eta_second needs a SecondOrderSmooth spec")
    ball = _lattice_ball(spec)
    return ball, spec(ball.elements)


# ---------------------------------------------------------------------------
# orbit sums


def orbit_representatives(N: int, top: int, rho2: int) -> np.ndarray:
    """Sorted ``0 <= x_1 <= ... <= x_N = top`` with ``|x|^2 <= rho2``."""
    if top * top > rho2:
        return np.zeros((0, N), dtype=np.int64)
    rows = np.array([[top]], dtype=np.int64)
    budget = np.array([rho2 - top * top], dtype=np.int64)
    for _ in range(N - 1):
        cmax = np.minimum(rows[:, -1], np.floor(np.sqrt(budget)).astype(np.int64))
        # guard against floating sqrt rounding up
        cmax = np.where(cmax * cmax > budget, cmax - 1, cmax)
        cnt = cmax + 1
        idx = np.repeat(np.arange(len(rows)), cnt)
        start = np.repeat(np.cumsum(cnt) - cnt, cnt)
        c = np.arange(int(cnt.sum())) - start
        rows = np.concatenate([rows[idx], c[:, None]], axis=1)
        budget = budget[idx] - c * c
    return rows[:, ::-1]


def orbit_size(X: np.ndarray) -> np.ndarray:
    """Number of lattice points in the hyperoctahedral orbit of each sorted row."""
    N = X.shape[1]
    size = 2.0 ** np.count_nonzero(X, axis=1) * factorial(N)
    run = np.ones(len(X))
    for k in range(1, N):
        same = X[:, k] == X[:, k - 1]
        run = np.where(same, run + 1, 1)
        size = size / np.where(same, run, 1)
    return size


def _directions(N: int) -> np.ndarray:
    G = np.zeros((2 * N, N))
    for k in range(N):
        G[2 * k, k], G[2 * k + 1, k] = 1.0, -1.0
    return G


def _vertex_quantities(spec: CutoffSpec, X: np.ndarray, need_hessian: bool):
    """Per-representative gradient, Laplacian and Hessian power sums."""
    N = spec.N
    G = _directions(N)
    s = np.sum(X * X, axis=1).astype(float)
    Xa = X @ G.T
    e0 = spec.profile(s)
    ei = spec.profile(s[:, None] + 2 * Xa + 1)
    d = ei - e0[:, None]
    out = {"gradient": np.sum(np.abs(d) ** N, axis=1), "laplacian": d.sum(axis=1)}
    if need_hessian:
        aa = np.sum((G[:, None, :] + G[None, :, :]) ** 2, axis=-1)
        eij = spec.profile(s[:, None, None] + 2 * Xa[:, :, None] + 2 * Xa[:, None, :] + aa)
        H = eij - ei[:, :, None] - ei[:, None, :] + e0[:, None, None]
        out["hessian"] = np.sum(np.abs(H) ** (N / 2), axis=(1, 2))
    return s, out


@dataclass
class CutoffNorms:
    """Lattice norms of one cutoff, with the collar and interior splits.

    ``records`` maps a record name to its value: ``gradient`` is
    ``||grad eta||_N^N``; ``laplacian`` and ``hessian`` are
    ``||Delta eta||_{N/2}^{N/2}`` and ``||Hess eta||_{N/2}^{N/2}``.  ``collar``
    holds the same sums restricted to ``Y = {rho_in - 2 <= |x| <= rho_in + 2}``
    and ``interior`` to ``X = {rho_in + 2 < |x| < rho_out - 2}``.
    ``pointwise_bound`` is ``sup_X |Delta eta| f log(R/r)`` (second order).
    """

    spec: CutoffSpec
    records: dict
    collar: dict
    interior: dict
    pointwise_bound: float
    representatives: int
    lattice_points: float


def cutoff_norms(spec: CutoffSpec, cap: int | None = None, block: int = 65536) -> CutoffNorms:
    """Exact lattice sums of the cutoff norms via orbit representatives.

    ``cap`` (default: the vertex cap) bounds the number of representatives
    held at once; exceeding it raises ``ResourceLimitError``.
    """
    cap = vertex_cap() if cap is None else cap
    N = spec.N
    second = spec.kind == SECOND
    names = ("laplacian", "gradient", "hessian") if second else ("gradient",)
    rho_out, rho_in = spec.outer_radius, spec.inner_radius
    reach = 2 if second else 1
    rho_max = rho_out + reach
    rho2 = int(np.floor(rho_max**2))
    tot = dict.fromkeys(names, 0.0)
    col = dict.fromkeys(names, 0.0)
    inn = dict.fromkeys(names, 0.0)
    bound = 0.0
    n_rep = 0
    n_pts = 0.0
    log_ratio = np.log(spec.R / spec.r)
    for top in range(int(np.floor(rho_max)) + 1):
        X = orbit_representatives(N, top, rho2)
        if len(X) > cap:
            raise ResourceLimitError(
                f"{len(X)} orbit representatives at once exceed the cap {cap}")
        for start in range(0, len(X), block):
            Xb = X[start:start + block]
            w = orbit_size(Xb)
            s, q = _vertex_quantities(spec, Xb, second)
            rho = np.sqrt(s)
            in_y = (rho >= rho_in - 2) & (rho <= rho_in + 2)
            in_x = (rho > rho_in + 2) & (rho < rho_out - 2)
            vals = {"gradient": q["gradient"]}
            if second:
                vals["laplacian"] = np.abs(q["laplacian"]) ** (N / 2)
                vals["hessian"] = q["hessian"]
                if in_x.any():
                    b = np.abs(q["laplacian"][in_x]) * s[in_x] * log_ratio
                    bound = max(bound, float(b.max()))
            for k in names:
                tot[k] += float(vals[k] @ w)
                col[k] += float(vals[k][in_y] @ w[in_y])
                inn[k] += float(vals[k][in_x] @ w[in_x])
            n_rep += len(Xb)
            n_pts += float(w.sum())
    return CutoffNorms(spec, tot, col, inn, bound, n_rep, n_pts)


@dataclass
class DecayTable:
    """Cutoff norms along an increasing list of outer scales.

    ``slopes[name]`` is the least-squares slope of ``log(record)`` against
    ``log log(R/r)`` over the last ``fit_points`` rows.
    """

    kind: str
    N: int
    r: float
    R_list: list
    records: dict
    collar: dict
    interior: dict
    pointwise_bound: list
    representatives: list
    fit_points: int = 4
    slopes: dict = field(default_factory=dict)
    interior_slopes: dict = field(default_factory=dict)

    @property
    def loglog(self) -> np.ndarray:
        return np.log(np.log(np.asarray(self.R_list, dtype=float) / self.r))

    @property
    def expected_slopes(self) -> dict:
        if self.kind == FIRST:
            return {"gradient": 1.0 - self.N}
        return {"laplacian": 1.0 - self.N / 2, "hessian": 1.0 - self.N / 2,
                "gradient": 1.0 - self.N}

    def strictly_decreasing(self, name: str, which: str = "records") -> bool:
        vals = np.asarray(getattr(self, which)[name])
        return bool(np.all(np.diff(vals) < 0))

    def rows(self):
        """``(R, loglog(R/r), value, name)`` in R order, one per record."""
        for i, R in enumerate(self.R_list):
            for name, vals in self.records.items():
                yield R, float(self.loglog[i]), vals[i], name

    def summary(self) -> dict:
        return {
            "kind": self.kind, "N": self.N, "r": self.r, "R_list": list(self.R_list),
            "fit_points": self.fit_points, "slopes": self.slopes,
            "expected_slopes": self.expected_slopes,
            "interior_slopes": self.interior_slopes,
            "collar": self.collar, "collar_decreasing": {
                k: self.strictly_decreasing(k, "collar") for k in self.collar},
            "records_decreasing": {k: self.strictly_decreasing(k) for k in self.records},
            "pointwise_bound": self.pointwise_bound,
            "representatives": self.representatives,
        }


def fit_slope(x: np.ndarray, y: np.ndarray, k: int) -> float:
    x, y = np.asarray(x, float)[-k:], np.asarray(y, float)[-k:]
    return float(np.polyfit(x, np.log(y), 1)[0])


def decay_study(kind: str, N: int, r: float, R_list, fit_points: int = 4,
                cap: int | None = None) -> DecayTable:
    kind = _kind(kind)
    R_list = [float(R) for R in R_list]
    if len(R_list) < 2 or np.any(np.diff(R_list) <= 0):
        raise ValueError("R_list must be strictly increasing with at least two entries")
    if fit_points < 2 or fit_points > len(R_list):
        raise ValueError("fit_points must be between 2 and len(R_list)")
    norms = [cutoff_norms(CutoffSpec(N, r, R, kind), cap=cap) for R in R_list]
    names = list(norms[0].records)
    table = DecayTable(
        kind=kind, N=N, r=float(r), R_list=R_list,
        records={k: [n.records[k] for n in norms] for k in names},
        collar={k: [n.collar[k] for n in norms] for k in names},
        interior={k: [n.interior[k] for n in norms] for k in names},
        pointwise_bound=[n.pointwise_bound for n in norms],
        representatives=[n.representatives for n in norms],
        fit_points=fit_points,
    )
    x = table.loglog
    table.slopes = {k: fit_slope(x, table.records[k], fit_points) for k in names}
    table.interior_slopes = {
        k: fit_slope(x, table.interior[k], fit_points)
        for k in names if min(table.interior[k][-fit_points:]) > 0
    }
    return table


DEFAULT_FIRST = dict(N=3, r=10.0, R_list=[10 ** (2 + k / 4) for k in range(5)])
DEFAULT_SECOND = dict(N=4, r=200.0, R_list=[200.0 * 2**k for k in range(3, 9)])
