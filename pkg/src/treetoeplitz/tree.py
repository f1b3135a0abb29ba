"""Geometry of the Cayley tree T_kappa.

Vertices are encoded as words over branch indices, relative to a fixed
root ``o`` (the empty word).  The first letter of a word picks one of the
``kappa + 1`` neighbours of the root, every later letter one of the
``kappa`` forward children.  Graph distance then reduces to word algebra:

    d(u, v) = depth(u) + depth(v) - 2 * (longest common prefix)

so no adjacency structure is ever stored; balls grow exponentially and
only distances enter the Toeplitz kernels built on top of this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetError, ValidationError

Word = tuple[int, ...]

#: Hard default on the number of vertices a single ball may contain.
DEFAULT_VERTEX_BUDGET = 100_000


def validate_word(kappa: int, word: Sequence[int]) -> Word:
    """Check branch indices of ``word`` and return it as a tuple.

    The first index must lie in ``0..kappa`` (root has kappa+1 neighbours),
    all later ones in ``0..kappa-1``.
    """
    if kappa < 1:
        raise ValidationError(f"kappa must be >= 1, got {kappa}")
    w = tuple(int(i) for i in word)
    for pos, i in enumerate(w):
        hi = kappa if pos == 0 else kappa - 1
        if not 0 <= i <= hi:
            raise ValidationError(
                f"branch index {i} at position {pos} out of range 0..{hi} "
                f"for kappa={kappa}"
            )
    return w


def sphere_size(kappa: int, l: int) -> int:
    """Number of vertices at distance exactly ``l`` from any fixed vertex."""
    if l < 0:
        raise ValidationError(f"sphere level must be >= 0, got {l}")
    if l == 0:
        return 1
    return (kappa + 1) * kappa ** (l - 1)


def ball_size(kappa: int, radius: int) -> int:
    """Number of vertices at distance <= ``radius`` from a fixed vertex."""
    return 1 + sum(sphere_size(kappa, l) for l in range(1, radius + 1))


def tree_distance(u: Sequence[int], v: Sequence[int]) -> int:
    """Graph distance between two word-encoded vertices of the same tree."""
    k = 0
    for a, b in zip(u, v):
        if a != b:
            break
        k += 1
    return len(u) + len(v) - 2 * k


def geodesic_ray(kappa: int, n: int) -> list[Word]:
    """Vertices v_0 .. v_n along branch 0 with d(v_k, v_m) = |k - m|."""
    if n < 0:
        raise ValidationError(f"ray length must be >= 0, got {n}")
    return [(0,) * k for k in range(n + 1)]


@dataclass(frozen=True)
class Ball:
    """All vertices within ``radius`` of the root, in canonical order.

    The order (by depth, then lexicographically by word) is deterministic
    for fixed ``(kappa, radius)`` and fixes matrix row/column order for
    every operator built on the ball.
    """

    kappa: int
    radius: int
    vertices: tuple[Word, ...]
    _index: dict[Word, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {w: i for i, w in enumerate(self.vertices)}
        )

    def __len__(self) -> int:
        return len(self.vertices)

    def index_of(self, word: Sequence[int]) -> int:
        return self._index[tuple(word)]

    def depths(self) -> np.ndarray:
        return np.array([len(w) for w in self.vertices], dtype=np.int64)

    def sphere_indices(self, l: int) -> np.ndarray:
        """Indices of all vertices at distance ``l`` from the root."""
        return np.flatnonzero(self.depths() == l)

    def to_json(self) -> str:
        return json.dumps(
            {
                "kappa": self.kappa,
                "radius": self.radius,
                "vertices": [list(w) for w in self.vertices],
            }
        )

    @staticmethod
    def from_json(text: str) -> "Ball":
        obj = json.loads(text)
        ball = enumerate_ball(obj["kappa"], obj["radius"])
        got = tuple(tuple(w) for w in obj["vertices"])
        if got != ball.vertices:
            raise ValidationError("ball JSON does not match canonical enumeration")
        return ball


def enumerate_ball(
    kappa: int, radius: int, budget: int = DEFAULT_VERTEX_BUDGET
) -> Ball:
    """Enumerate B_radius(o) in canonical (depth, lexicographic) order.

    Raises ``BudgetError`` before any allocation if the ball would exceed
    ``budget`` vertices; exponential blowup is an error, never a silent
    truncation.
    """
    if kappa < 1:
        raise ValidationError(f"kappa must be >= 1, got {kappa}")
    if radius < 0:
        raise ValidationError(f"radius must be >= 0, got {radius}")
    total = ball_size(kappa, radius)
    if total > budget:
        raise BudgetError(
            f"ball too large: B_{radius} on T_{kappa} has {total} vertices "
            f"(budget {budget})"
        )
    verts: list[Word] = [()]
    layer: list[Word] = [()]
    for depth in range(1, radius + 1):
        first = range(kappa + 1) if depth == 1 else range(kappa)
        layer = sorted(p + (i,) for p in layer for i in first)
        verts.extend(layer)
    return Ball(kappa=kappa, radius=radius, vertices=tuple(verts))


def pairwise_distances(ball: Ball) -> np.ndarray:
    """Dense matrix of pairwise graph distances over ``ball``.

    Vectorized over row chunks; for two padded words the common prefix
    stops at the first differing letter, and padding (-1) never matches a
    real letter, so capping at the smaller depth is exact.
    """
    n = len(ball)
    R = max(ball.radius, 1)
    words = np.full((n, R), -1, dtype=np.int16)
    for i, w in enumerate(ball.vertices):
        if w:
            words[i, : len(w)] = w
    depths = ball.depths()
    out = np.empty((n, n), dtype=np.int32)
    chunk = max(1, 2**22 // (n * R))
    for i0 in range(0, n, chunk):
        blk = words[i0 : i0 + chunk]
        eq = blk[:, None, :] == words[None, :, :]
        cpl = np.cumprod(eq, axis=2).sum(axis=2)
        cpl = np.minimum(cpl, np.minimum(depths[i0 : i0 + chunk, None], depths[None, :]))
        out[i0 : i0 + chunk] = depths[i0 : i0 + chunk, None] + depths[None, :] - 2 * cpl
    return out


def relabel_branches(
    ball: Ball, root_perm: Sequence[int], child_perm: Sequence[int]
) -> list[int]:
    """Distance-preserving relabeling of a ball (a stand-in automorphism).

    Applies ``root_perm`` (a permutation of 0..kappa) to the first letter
    of every word and ``child_perm`` (a permutation of 0..kappa-1) to all
    later letters.  Returns ``perm`` with ``perm[i]`` the new index of the
    vertex that sat at index ``i``, i.e. the canonical index of the
    relabeled word.
    """
    kappa = ball.kappa
    if sorted(root_perm) != list(range(kappa + 1)):
        raise ValidationError("root_perm must permute 0..kappa")
    if sorted(child_perm) != list(range(kappa)):
        raise ValidationError("child_perm must permute 0..kappa-1")
    perm = []
    for w in ball.vertices:
        new = tuple(
            root_perm[i] if pos == 0 else child_perm[i] for pos, i in enumerate(w)
        )
        perm.append(ball.index_of(new))
    return perm


def bfs_distances(ball: Ball, source: int) -> np.ndarray:
    """Distances from ``source`` to every ball vertex via explicit BFS.

    Builds the parent/child adjacency and walks it; this is the brute
    oracle against which the word-prefix formula is checked.
    """
    n = len(ball)
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, w in enumerate(ball.vertices):
        if w:
            p = ball.index_of(w[:-1])
            adj[p].append(i)
            adj[i].append(p)
    dist = np.full(n, -1, dtype=np.int64)
    dist[source] = 0
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist
