"""Cayley graphs of Z^N and the discrete Heisenberg group.

Balls in the word metric are enumerated breadth-first from the identity and
stored in a canonical order: by word distance, then lexicographically by
coordinates.  Because of that order the ball of radius ``k`` is always a
prefix of the ball of radius ``R >= k``, which the rest of the package uses
to restrict functions to smaller domains by slicing.

Edges are right multiplications ``x -> x s``; translations act on the left,
so they are graph automorphisms.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

DEFAULT_VERTEX_CAP = 5_000_000
CAP_ENV_VAR = "CAYLEY_SOBOLEV_MAX_VERTICES"


class ResourceLimitError(RuntimeError):
    """Raised when a construction would exceed the configured vertex cap."""


class TranslationError(ValueError):
    """Raised when a translation pushes too much mass out of the ball."""


def vertex_cap() -> int:
    value = os.environ.get(CAP_ENV_VAR)
    return int(value) if value else DEFAULT_VERTEX_CAP


@dataclass(frozen=True)
class GroupSpec:
    """A group together with its symmetric generating set.

    ``kind`` is ``"lattice"`` (Z^dim with the unit vectors and their
    negatives) or ``"heisenberg"`` (integer triples ``(a, b, c)`` with
    ``(a1,b1,c1)(a2,b2,c2) = (a1+a2, b1+b2, c1+c2+a1*b2)``, generated by
    ``(+-1,0,0)`` and ``(0,+-1,0)``).
    """

    kind: str
    dim: int = 3

    def __post_init__(self):
        if self.kind not in ("lattice", "heisenberg"):
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.kind == "heisenberg":
            object.__setattr__(self, "dim", 3)
        if self.dim < 1:
            raise ValueError("lattice dimension must be positive")

    @classmethod
    def lattice(cls, dim: int) -> GroupSpec:
        return cls("lattice", dim)

    @classmethod
    def heisenberg(cls) -> GroupSpec:
        return cls("heisenberg", 3)

    @property
    def coord_len(self) -> int:
        return self.dim

    @property
    def homogeneous_dim(self) -> int:
        """Growth degree: N for Z^N, 4 for the Heisenberg group."""
        return 4 if self.kind == "heisenberg" else self.dim

    @cached_property
    def generators(self) -> np.ndarray:
        """Generators ordered ``+e_1, -e_1, +e_2, -e_2, ...``."""
        k = 2 if self.kind == "heisenberg" else self.dim
        gens = np.zeros((2 * k, self.coord_len), dtype=np.int64)
        for i in range(k):
            gens[2 * i, i] = 1
            gens[2 * i + 1, i] = -1
        return gens

    @property
    def n_generators(self) -> int:
        return len(self.generators)

    @cached_property
    def inverse_index(self) -> np.ndarray:
        """``inverse_index[i]`` is the index of ``s_i^{-1}``."""
        gens = self.generators
        inv = inverse(self, gens)
        out = np.empty(len(gens), dtype=np.int64)
        for i, g in enumerate(inv):
            (j,) = np.nonzero((gens == g).all(axis=1))[0]
            out[i] = j
        return out

    def identity(self) -> np.ndarray:
        return np.zeros(self.coord_len, dtype=np.int64)


def _check(spec: GroupSpec, a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    if a.shape[-1] != spec.coord_len:
        raise ValueError(
            f"element has {a.shape[-1]} coordinates, group expects {spec.coord_len}"
        )
    return a


def group_multiply(spec: GroupSpec, a, b) -> np.ndarray:
    """Product ``ab``; broadcasts over leading axes."""
    a = _check(spec, a)
    b = _check(spec, b)
    out = a + b
    if spec.kind == "heisenberg":
        out = out.copy()
        out[..., 2] += a[..., 0] * b[..., 1]
    return out


def inverse(spec: GroupSpec, a) -> np.ndarray:
    a = _check(spec, a)
    out = -a
    if spec.kind == "heisenberg":
        out = out.copy()
        out[..., 2] += a[..., 0] * a[..., 1]
    return out


class _KeyIndex:
    """Exact lookup of integer coordinate rows via packed int64 keys."""

    def __init__(self, coords: np.ndarray, bound: int):
        self.bound = bound
        self.base = 2 * bound + 1
        keys = self.pack(coords)
        self.order = np.argsort(keys, kind="stable")
        self.sorted_keys = keys[self.order]

    def pack(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64)
        key = np.zeros(coords.shape[:-1], dtype=np.int64)
        inside = np.ones(coords.shape[:-1], dtype=bool)
        for k in range(coords.shape[-1]):
            c = coords[..., k]
            inside &= np.abs(c) <= self.bound
            key = key * self.base + (np.clip(c, -self.bound, self.bound) + self.bound)
        return np.where(inside, key, -1)

    def lookup(self, coords: np.ndarray) -> np.ndarray:
        """Index of each row, or -1 when absent."""
        keys = self.pack(coords)
        pos = np.searchsorted(self.sorted_keys, keys)
        pos = np.clip(pos, 0, len(self.sorted_keys) - 1)
        found = (self.sorted_keys[pos] == keys) & (keys >= 0)
        return np.where(found, self.order[pos], -1)


def _coord_bound(spec: GroupSpec, radius: int) -> int:
    if spec.kind == "heisenberg":
        return max(radius * radius, radius, 1) + 1
    return radius + 1


@dataclass(frozen=True, eq=False)
class CayleyBall:
    """Word-metric ball ``B_e(radius)`` with neighbour table.

    ``neighbors[i, k]`` is the index of ``elements[i] * s_k`` or ``-1`` when
    that vertex lies outside the ball.  Functions on the ball are plain
    float arrays aligned with ``elements`` and are implicitly zero outside.
    """

    spec: GroupSpec
    radius: int
    elements: np.ndarray
    distance: np.ndarray
    neighbors: np.ndarray
    _index: _KeyIndex = field(repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def degree(self) -> int:
        return self.spec.n_generators

    def index_of(self, element) -> int:
        idx = int(self._index.lookup(np.asarray(element, dtype=np.int64)[None])[0])
        if idx < 0:
            raise KeyError(f"{tuple(element)} not in ball of radius {self.radius}")
        return idx

    def lookup(self, elements) -> np.ndarray:
        """Vectorised ``index_of`` returning -1 for elements outside."""
        return self._index.lookup(np.asarray(elements, dtype=np.int64))

    def count_within(self, r: int) -> int:
        """Number of vertices at distance <= r (a prefix of the ordering)."""
        return int(np.searchsorted(self.distance, r, side="right"))

    def within(self, r: int) -> np.ndarray:
        return self.distance <= r

    def delta(self, element=None) -> np.ndarray:
        u = np.zeros(len(self))
        u[0 if element is None else self.index_of(element)] = 1.0
        return u

    @cached_property
    def laplacian_matrix(self) -> sparse.csr_matrix:
        """Dirichlet Laplacian ``(A - m I)``: the exterior is held at zero."""
        n, m = self.neighbors.shape
        rows = np.repeat(np.arange(n), m)
        cols = self.neighbors.ravel()
        keep = cols >= 0
        adj = sparse.csr_matrix(
            (np.ones(keep.sum()), (rows[keep], cols[keep])), shape=(n, n)
        )
        return (adj - m * sparse.identity(n, format="csr")).tocsr()

    @cached_property
    def edges(self) -> np.ndarray:
        """Undirected edges inside the ball as ``(tail, head)`` with tail < head."""
        n, m = self.neighbors.shape
        tails = np.repeat(np.arange(n), m)
        heads = self.neighbors.ravel()
        keep = heads > tails
        e = np.stack([tails[keep], heads[keep]], axis=1)
        return e[np.lexsort((e[:, 1], e[:, 0]))]

    def check_symmetric(self) -> bool:
        inv = self.spec.inverse_index
        n, m = self.neighbors.shape
        for k in range(m):
            j = self.neighbors[:, k]
            ok = j >= 0
            if not np.array_equal(self.neighbors[j[ok], inv[k]], np.arange(n)[ok]):
                return False
        return True


def build_ball(spec: GroupSpec, radius: int, cap: int | None = None) -> CayleyBall:
    """Breadth-first enumeration of the closed ball of the given radius."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    cap = vertex_cap() if cap is None else cap
    gens = spec.generators
    bound = _coord_bound(spec, radius)
    probe = _KeyIndex(np.zeros((0, spec.coord_len), dtype=np.int64), bound)

    layers = [spec.identity()[None, :]]
    prev_keys = np.zeros(0, dtype=np.int64)
    cur_keys = probe.pack(layers[0])
    total = 1
    for _ in range(radius):
        layer = layers[-1]
        cand = group_multiply(spec, layer[:, None, :], gens[None, :, :]).reshape(
            -1, spec.coord_len
        )
        keys = probe.pack(cand)
        keys, first = np.unique(keys, return_index=True)
        fresh = ~np.isin(keys, cur_keys) & ~np.isin(keys, prev_keys)
        new = cand[first[fresh]]
        new = new[np.lexsort(new.T[::-1])]
        total += len(new)
        if total > cap:
            raise ResourceLimitError(
                f"ball of radius {radius} exceeds the vertex cap {cap}"
            )
        layers.append(new)
        prev_keys, cur_keys = cur_keys, keys[fresh]

    elements = np.concatenate(layers)
    distance = np.concatenate(
        [np.full(len(layer), k, dtype=np.int64) for k, layer in enumerate(layers)]
    )
    index = _KeyIndex(elements, bound)
    prods = group_multiply(spec, elements[:, None, :], gens[None, :, :])
    neighbors = index.lookup(prods)
    return CayleyBall(spec, radius, elements, distance, neighbors, index)


@dataclass
class GrowthSequence:
    """``values[n]`` = number of elements at word distance <= n."""

    spec: GroupSpec
    values: np.ndarray

    def fit_dimension(self, n_min: int = 1, n_max: int | None = None) -> float:
        """Least-squares slope of log(beta(n)) against log(n) on [n_min, n_max]."""
        n_max = len(self.values) - 1 if n_max is None else n_max
        n = np.arange(max(n_min, 1), n_max + 1)
        slope, _ = np.polyfit(np.log(n), np.log(self.values[n]), 1)
        return float(slope)


def growth_sequence(spec: GroupSpec, n_max: int, cap: int | None = None) -> GrowthSequence:
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    ball = build_ball(spec, n_max, cap=cap)
    counts = np.bincount(ball.distance, minlength=n_max + 1)
    return GrowthSequence(spec, np.cumsum(counts))


def translate_function(ball: CayleyBall, u: np.ndarray, g, q: float = 2.0):
    """Left translation ``v(x) = u(g x)`` restricted to the ball.

    Returns ``(v, dropped)`` where ``dropped`` is the share of
    ``sum |u|^q`` sitting on vertices ``y`` whose preimage ``g^{-1} y`` falls
    outside the ball; that mass is lost by the truncation.
    """
    u = np.asarray(u, dtype=float)
    spec = ball.spec
    g = _check(spec, g)
    src = ball.lookup(group_multiply(spec, g[None, :], ball.elements))
    v = np.where(src >= 0, u[np.maximum(src, 0)], 0.0)
    hit = np.zeros(len(ball), dtype=bool)
    hit[src[src >= 0]] = True
    total = np.sum(np.abs(u) ** q)
    lost = np.sum(np.abs(u[~hit]) ** q)
    dropped = float(lost / total) if total > 0 else 0.0
    return v, dropped
