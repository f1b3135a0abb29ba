"""Radial Toeplitz operators materialized on finite balls.

A coefficient sequence alpha induces the kernel K(x, y) = alpha(d(x, y));
restricting x, y to a ball gives a dense symmetric matrix whose entries
are constant along distance classes.  The finite matrix is the
compression of the infinite operator to the ball (never a periodization):
identities that truncation can break are therefore asserted only on
interior vertices, and norm claims only in the large-radius limit.

The radial subspace (vectors constant on spheres around the root) is
invariant for every such operator; compressing to it reproduces, via the
sphere-indicator basis, the Gram matrix of multiplication by the symbol
in the normalized polynomial basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetError, CertificationError, ValidationError
from .polynomials import eval_P_table, l2_norm_sq
from .symbols import RadialSymbol
from .tree import Ball, enumerate_ball, pairwise_distances, tree_distance

#: Dense-storage cap: balls above this size are refused by the operator
#: layer even when the tree layer could enumerate them.
DEFAULT_MATRIX_BUDGET = 3_100

#: Relative residual allowed for an eigenpair of a symmetric matrix.
EIG_RESIDUAL_RTOL = 1e-8


def _check_coverage(alpha: RadialSymbol, ball: Ball) -> None:
    if not alpha.exact and alpha.n_max < 2 * ball.radius:
        raise ValidationError(
            f"numeric symbol defined to n_max={alpha.n_max} is too short for "
            f"ball diameter {2 * ball.radius}"
        )
    if alpha.kappa != ball.kappa:
        raise ValidationError(
            f"symbol kappa={alpha.kappa} does not match ball kappa={ball.kappa}"
        )


@dataclass
class TruncatedOperator:
    """Dense symmetric matrix of T_alpha restricted to a ball."""

    ball: Ball
    matrix: np.ndarray
    symbol: RadialSymbol
    _eig: tuple[np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """Cached eigendecomposition (ascending eigenvalues, column vectors).

        Raises ``CertificationError`` if any eigenpair residual exceeds
        ``EIG_RESIDUAL_RTOL`` times the spectral norm.
        """
        if self._eig is None:
            w, v = np.linalg.eigh(self.matrix)
            scale = max(abs(w[0]), abs(w[-1]), 1e-300)
            resid = np.linalg.norm(self.matrix @ v - v * w, axis=0).max()
            if resid > EIG_RESIDUAL_RTOL * scale:
                raise CertificationError(
                    f"eigendecomposition residual {resid:.3e} exceeds "
                    f"{EIG_RESIDUAL_RTOL:.1e} * {scale:.3e}"
                )
            self._eig = (w, v)
        return self._eig

    def spectral_norm(self) -> float:
        w, _ = self.eigensystem()
        return float(max(abs(w[0]), abs(w[-1])))


def build_matrix(
    alpha: RadialSymbol,
    ball: Ball,
    budget: int = DEFAULT_MATRIX_BUDGET,
) -> TruncatedOperator:
    """Materialize T_alpha on a ball in canonical vertex order."""
    _check_coverage(alpha, ball)
    if len(ball) > budget:
        raise BudgetError(
            f"ball with {len(ball)} vertices exceeds dense-matrix budget {budget}"
        )
    lookup = np.zeros(2 * ball.radius + 1)
    for d in range(2 * ball.radius + 1):
        lookup[d] = float(alpha.value(d))
    M = lookup[pairwise_distances(ball)]
    return TruncatedOperator(ball=ball, matrix=M, symbol=alpha)


def exact_matrix(alpha: RadialSymbol, ball: Ball) -> np.ndarray:
    """Object-dtype matrix of exact rational entries (small balls only).

    Used where a claim is 'exact as rationals', e.g. the interior
    operator-multiplicativity identity.
    """
    if not alpha.exact:
        raise ValidationError("exact_matrix needs an exact symbol")
    D = pairwise_distances(ball)
    lookup = [alpha.value(d) for d in range(2 * ball.radius + 1)]
    out = np.empty(D.shape, dtype=object)
    for i in range(D.shape[0]):
        for j in range(D.shape[1]):
            out[i, j] = lookup[D[i, j]]
    return out


def interior_indices(ball: Ball, margin: int) -> np.ndarray:
    """Indices of vertices at depth <= radius - margin.

    On these vertices an identity with combined symbol support <= margin
    is unaffected by the truncation boundary.
    """
    return np.flatnonzero(ball.depths() <= ball.radius - margin)


@dataclass(frozen=True)
class RadialBasis:
    """Orthonormal sphere-indicator vectors f_0 .. f_R over a ball."""

    ball: Ball
    matrix: np.ndarray  # shape (radius+1, |ball|), rows are f_n

    @staticmethod
    def for_ball(ball: Ball) -> "RadialBasis":
        depths = ball.depths()
        F = np.zeros((ball.radius + 1, len(ball)))
        for n in range(ball.radius + 1):
            idx = depths == n
            F[n, idx] = 1.0 / np.sqrt(idx.sum())
        return RadialBasis(ball=ball, matrix=F)


def radial_compress(op: TruncatedOperator, basis: RadialBasis | None = None) -> np.ndarray:
    """Compression C[n, m] = <T f_m, f_n> to the radial subspace.

    Because every sphere S_m lies inside the ball, each entry equals the
    exact infinite-volume pairing, which by the multiplication-operator
    picture is integral phi P_n P_m dPi / (||P_n|| ||P_m||).
    """
    if basis is None:
        basis = RadialBasis.for_ball(op.ball)
    if basis.ball is not op.ball and basis.ball != op.ball:
        raise ValidationError("basis built on a different ball")
    return basis.matrix @ op.matrix @ basis.matrix.T


def spectrum(op: TruncatedOperator) -> np.ndarray:
    """Sorted (ascending) eigenvalues with certified residuals."""
    w, _ = op.eigensystem()
    return w.copy()


def operator_norm_estimate(
    alpha: RadialSymbol,
    kappa: int,
    radii: Sequence[int],
    budget: int = DEFAULT_MATRIX_BUDGET,
) -> list[tuple[int, float]]:
    """Spectral norms of ball truncations, nondecreasing in the radius.

    The truncations exhaust the infinite operator, so the values converge
    upward to the true operator norm (equality only in the limit).
    """
    out = []
    for radius in sorted(radii):
        ball = enumerate_ball(kappa, radius, budget=max(budget, 1))
        op = build_matrix(alpha, ball, budget=budget)
        out.append((radius, op.spectral_norm()))
    return out


@dataclass(frozen=True)
class RadialNormCheck:
    radius: int
    full_norm: float
    radial_norm: float

    @property
    def gap(self) -> float:
        return self.full_norm - self.radial_norm


def radial_norm_check(
    alpha: RadialSymbol,
    kappa: int,
    radius: int,
    budget: int = DEFAULT_MATRIX_BUDGET,
    image_support: int | None = None,
) -> RadialNormCheck:
    """Compare sup ||T eta|| over all ball vectors vs radial ball vectors.

    The image of a ball vector extends outside the ball (up to the symbol
    support beyond the boundary), so both norms are computed through the
    rectangular matrix A[y, x] = alpha(d(y, x)) with x in B_radius and y
    in B_{radius + support}.  In infinite volume the two norms agree; at
    finite radius the gap is generally strictly positive and shrinks as
    the radius grows.
    """
    if image_support is None:
        image_support = max(alpha.support(), 0)
    small = enumerate_ball(kappa, radius)
    big = enumerate_ball(kappa, radius + image_support)
    if len(big) > budget:
        raise BudgetError(
            f"image ball with {len(big)} vertices exceeds budget {budget}; "
            f"pass a smaller image_support"
        )
    vals = np.array(
        [float(alpha.value(d)) for d in range(2 * (radius + image_support) + 1)]
    )
    A = np.empty((len(big), len(small)))
    for j, x in enumerate(small.vertices):
        A[:, j] = vals[[tree_distance(y, x) for y in big.vertices]]
    full = float(np.linalg.svd(A, compute_uv=False)[0])
    basis = RadialBasis.for_ball(small)
    radial = float(np.linalg.svd(A @ basis.matrix.T, compute_uv=False)[0])
    return RadialNormCheck(radius=radius, full_norm=full, radial_norm=radial)


def normalized_gram_reference(
    kappa: int,
    radius: int,
    phi_on_rule,
    rule,
) -> np.ndarray:
    """Gram matrix G[n, m] = integral phi P_n P_m dPi / (||P_n|| ||P_m||).

    Quadrature realization of the multiplication operator in the
    normalized polynomial basis; the commutative-diagram counterpart of
    :func:`radial_compress`.
    """
    P = eval_P_table(kappa, radius, rule.nodes)
    norms = np.array(
        [np.sqrt(float(l2_norm_sq(kappa, n))) for n in range(radius + 1)]
    )
    Pn = P / norms[:, None]
    W = np.asarray(phi_on_rule, dtype=float) * rule.weights
    return (Pn * W) @ Pn.T
