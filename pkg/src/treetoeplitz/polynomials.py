"""Cartier-Dunau polynomials and their orthogonality measure.

The polynomials are defined by the three-term recursion

    P_0 = 1,  P_1(t) = t,
    t P_n = kappa/(kappa+1) P_{n+1} + 1/(kappa+1) P_{n-1},   n >= 1,

and are orthogonal with respect to the Kesten-type probability measure

    dPi_kappa(t) = (kappa+1)/(2 pi) * sqrt(4 kappa (kappa+1)^{-2} - t^2)
                   / (1 - t^2) dt

supported on [-2 sqrt(kappa)/(kappa+1), 2 sqrt(kappa)/(kappa+1)].  For
kappa = 1 the recursion is the Chebyshev one and Pi_1 is the arcsine law.

Leading coefficients and squared L2 norms are rational and kept exact;
floats appear only at evaluation boundaries.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ValidationError

#: Forward recursion values grow like ((kappa+1)/kappa)^n off the support,
#: so degrees are capped by default; raise the cap knowingly if needed.
DEFAULT_DEGREE_CAP = 64


def support_halfwidth(kappa: int) -> float:
    """Half-width 2 sqrt(kappa)/(kappa+1) of supp Pi_kappa."""
    return 2.0 * math.sqrt(kappa) / (kappa + 1)


def eval_P(kappa: int, n: int, t: float, degree_cap: int = DEFAULT_DEGREE_CAP) -> float:
    """Value of P_n(t) by the forward recursion."""
    if n < 0:
        raise ValidationError(f"degree must be >= 0, got {n}")
    if n > degree_cap:
        raise ValidationError(
            f"degree {n} exceeds cap {degree_cap}; raise degree_cap explicitly"
        )
    if n == 0:
        return 1.0
    prev, cur = 1.0, float(t)
    for _ in range(1, n):
        prev, cur = cur, ((kappa + 1) * t * cur - prev) / kappa
        if not math.isfinite(cur):
            raise ValidationError(f"recursion overflow at kappa={kappa}, t={t}")
    return cur


def eval_P_table(
    kappa: int,
    n_max: int,
    t: np.ndarray,
    degree_cap: int = DEFAULT_DEGREE_CAP,
) -> np.ndarray:
    """Array of shape (n_max+1, len(t)) with rows P_0(t) .. P_{n_max}(t)."""
    if n_max < 0:
        raise ValidationError(f"n_max must be >= 0, got {n_max}")
    if n_max > degree_cap:
        raise ValidationError(
            f"n_max {n_max} exceeds cap {degree_cap}; raise degree_cap explicitly"
        )
    t = np.asarray(t, dtype=float)
    out = np.empty((n_max + 1, t.size))
    out[0] = 1.0
    if n_max >= 1:
        out[1] = t
    for n in range(1, n_max):
        out[n + 1] = ((kappa + 1) * t * out[n] - out[n - 1]) / kappa
    if not np.all(np.isfinite(out)):
        raise ValidationError(f"recursion overflow at kappa={kappa}")
    return out


def leading_coeff(kappa: int, n: int) -> Fraction:
    """Leading coefficient k_n of P_n: 1 for n <= 1, ((kappa+1)/kappa)^(n-1) after."""
    if n < 0:
        raise ValidationError(f"degree must be >= 0, got {n}")
    if n <= 1:
        return Fraction(1)
    return Fraction(kappa + 1, kappa) ** (n - 1)


def l2_norm_sq(kappa: int, n: int) -> Fraction:
    """Squared L2(Pi_kappa) norm of P_n: 1 for n = 0, 1/(kappa^{n-1}(kappa+1)) after.

    This equals 1 / #S_n(o), the reciprocal sphere size of the tree.
    """
    if n < 0:
        raise ValidationError(f"degree must be >= 0, got {n}")
    if n == 0:
        return Fraction(1)
    return Fraction(1, kappa ** (n - 1) * (kappa + 1))


def eval_Q(kappa: int, n: int, t: float, degree_cap: int = DEFAULT_DEGREE_CAP) -> float:
    """Monic companion value: Q_0 = (kappa+1)/kappa, Q_1 = t,
    Q_{n+1} = t Q_n - kappa/(kappa+1)^2 Q_{n-1}."""
    if n < 0:
        raise ValidationError(f"degree must be >= 0, got {n}")
    if n > degree_cap:
        raise ValidationError(
            f"degree {n} exceeds cap {degree_cap}; raise degree_cap explicitly"
        )
    if n == 0:
        return (kappa + 1) / kappa
    prev, cur = (kappa + 1) / kappa, float(t)
    b = kappa / (kappa + 1) ** 2
    for _ in range(1, n):
        prev, cur = cur, t * cur - b * prev
    return cur


def density(kappa: int, t: float) -> float:
    """Density of Pi_kappa at ``t``; zero outside the support interval."""
    c = support_halfwidth(kappa)
    if abs(t) >= c:
        return 0.0
    return (kappa + 1) / (2 * math.pi) * math.sqrt(c * c - t * t) / (1.0 - t * t)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights approximating integration against Pi_kappa.

    Weights are positive and sum to 1 (Pi_kappa is a probability measure);
    all nodes lie inside the support interval.
    """

    kappa: int
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return self.nodes.size

    def integrate(self, values: np.ndarray) -> float:
        """Integral of a function given by its values on the nodes."""
        return float(np.dot(np.asarray(values, dtype=float), self.weights))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node", "weight"])
            for x, w in zip(self.nodes, self.weights):
                writer.writerow([repr(float(x)), repr(float(w))])


def _gauss_legendre_on(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def make_quadrature(kappa: int, n_nodes: int = 256) -> QuadratureRule:
    """Quadrature for Pi_kappa via the substitution t = c cos(theta).

    With c the support half-width, the substituted integrand

        (kappa+1)/(2 pi) * c^2 sin^2(theta) / (1 - c^2 cos^2(theta))

    is analytic on [0, pi] (no endpoint singularity), so an n-node
    Gauss-Legendre rule in theta converges spectrally for smooth f.
    """
    if n_nodes < 2:
        raise ValidationError(f"need at least 2 nodes, got {n_nodes}")
    c = support_halfwidth(kappa)
    theta, w = _gauss_legendre_on(0.0, math.pi, n_nodes)
    t = c * np.cos(theta)
    dens = (kappa + 1) / (2 * math.pi) * (c * np.sin(theta)) ** 2 / (1.0 - t * t)
    return QuadratureRule(kappa=kappa, nodes=t, weights=w * dens)


def make_arc_quadrature(
    kappa: int, t_lo: float, t_hi: float, n_nodes: int = 256
) -> QuadratureRule:
    """Quadrature for Pi_kappa restricted to the interval [t_lo, t_hi].

    Same theta substitution as :func:`make_quadrature`, applied on the
    sub-arc.  Used piecewise for step-function symbols, whose jumps would
    otherwise destroy the spectral accuracy of the global rule.
    """
    if n_nodes < 2:
        raise ValidationError(f"need at least 2 nodes, got {n_nodes}")
    c = support_halfwidth(kappa)
    lo = max(-c, min(float(t_lo), c))
    hi = max(-c, min(float(t_hi), c))
    if hi <= lo:
        return QuadratureRule(
            kappa=kappa, nodes=np.empty(0), weights=np.empty(0)
        )
    th_lo = math.acos(hi / c)
    th_hi = math.acos(lo / c)
    theta, w = _gauss_legendre_on(th_lo, th_hi, n_nodes)
    t = c * np.cos(theta)
    dens = (kappa + 1) / (2 * math.pi) * (c * np.sin(theta)) ** 2 / (1.0 - t * t)
    return QuadratureRule(kappa=kappa, nodes=t, weights=w * dens)
