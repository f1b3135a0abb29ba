"""Symbol transform and the radial convolution it turns into products.

The transform of a symbol phi is

    alpha(n) = integral P_n(t) phi(t) dPi_kappa(t),

computed either exactly (rational arithmetic, polynomial symbols) or by
quadrature.  The radial convolution ``convolve`` realizes operator
composition on coefficient sequences: T_{a1 (*) a2} = T_{a1} T_{a2}.
``brute_force_convolve`` evaluates the defining vertex sum directly on an
enumerated ball and is the independent oracle for ``convolve``.

The two transform paths (exact recursion vs quadrature) must agree; that
cross-check is the module's central self-test.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .polynomials import (
    DEFAULT_DEGREE_CAP,
    QuadratureRule,
    eval_P_table,
    make_arc_quadrature,
    make_quadrature,
)
from .symbols import (
    GridSymbol,
    PolynomialSymbol,
    RadialSymbol,
    StepSymbol,
    SymbolFunction,
)
from .tree import enumerate_ball, geodesic_ray, tree_distance

#: Default number of quadrature nodes; transform tolerances downstream
#: assume at least 128.
DEFAULT_QUAD_NODES = 256

#: Largest trailing weighted mass a numeric symbol may carry into a
#: convolution before truncation is considered unsafe.
DEFAULT_TAIL_TOL = 1e-2


def _hat_from_rule(
    kappa: int,
    n_max: int,
    rule: QuadratureRule,
    phi_values: np.ndarray,
    degree_cap: int,
) -> np.ndarray:
    if len(rule) == 0:
        return np.zeros(n_max + 1)
    P = eval_P_table(kappa, n_max, rule.nodes, degree_cap=degree_cap)
    return P @ (np.asarray(phi_values, dtype=float) * rule.weights)


def hat_numeric(
    phi: SymbolFunction,
    kappa: int,
    n_max: int,
    rule: QuadratureRule | None = None,
    n_nodes: int = DEFAULT_QUAD_NODES,
    degree_cap: int = DEFAULT_DEGREE_CAP,
) -> RadialSymbol:
    """Quadrature transform alpha(n) = integral P_n phi dPi_kappa, n <= n_max.

    Step symbols are integrated piecewise (one sub-arc rule per constant
    piece) so that jumps cost no accuracy; everything else is evaluated
    pointwise on the global rule.
    """
    if n_max < 0:
        raise ValidationError(f"n_max must be >= 0, got {n_max}")
    if isinstance(phi, StepSymbol):
        n = len(rule) if rule is not None else n_nodes
        vals = np.zeros(n_max + 1)
        for lo, hi, v in zip(phi.breakpoints, phi.breakpoints[1:], phi.values):
            if v == 0.0:
                continue
            piece = make_arc_quadrature(kappa, lo, hi, n_nodes=n)
            vals += v * _hat_from_rule(
                kappa, n_max, piece, np.ones(len(piece)), degree_cap
            )
        return RadialSymbol(
            kappa=kappa, values=tuple(vals), exact=False, quad_nodes=n
        )
    if rule is None:
        rule = make_quadrature(kappa, n_nodes)
    elif rule.kappa != kappa:
        raise ValidationError(f"rule is for kappa={rule.kappa}, symbol for {kappa}")
    if isinstance(phi, GridSymbol):
        phi_values = phi.on_nodes(len(rule))
    elif isinstance(phi, PolynomialSymbol):
        phi_values = phi(rule.nodes)
    elif callable(phi):
        phi_values = np.asarray(phi(rule.nodes), dtype=float)
    else:
        raise ValidationError(f"cannot evaluate symbol of type {type(phi).__name__}")
    vals = _hat_from_rule(kappa, n_max, rule, phi_values, degree_cap)
    return RadialSymbol(
        kappa=kappa, values=tuple(vals), exact=False, quad_nodes=len(rule)
    )


def monomial_transform(kappa: int, m: int) -> list[Fraction]:
    """Exact transform of t^m as a coefficient list of length m+1.

    Built by the recursion seeded at the transform of 1 (the identity
    coefficient sequence delta_0):

        b_{m+1}(0) = b_m(1),
        b_{m+1}(n) = kappa/(kappa+1) b_m(n+1) + 1/(kappa+1) b_m(n-1),  n >= 1.
    """
    if m < 0:
        raise ValidationError(f"monomial degree must be >= 0, got {m}")
    beta: list[Fraction] = [Fraction(1)]
    for cur in range(m):
        get = lambda n: beta[n] if 0 <= n < len(beta) else Fraction(0)
        nxt = [get(1)]
        for n in range(1, cur + 2):
            nxt.append(
                Fraction(kappa, kappa + 1) * get(n + 1)
                + Fraction(1, kappa + 1) * get(n - 1)
            )
        beta = nxt
    return beta


def hat_polynomial_exact(coeffs: Sequence, kappa: int) -> RadialSymbol:
    """Exact rational transform of a polynomial symbol.

    The result is supported on 0..degree (P_0..P_D span the polynomials
    of degree <= D), with exact zeros beyond.
    """
    cs = [Fraction(c) for c in coeffs]
    if not cs:
        raise ValidationError("need at least one coefficient")
    vals = [Fraction(0)] * len(cs)
    for m, c in enumerate(cs):
        if c == 0:
            continue
        for n, b in enumerate(monomial_transform(kappa, m)):
            vals[n] += c * b
    return RadialSymbol(kappa=kappa, values=tuple(vals), exact=True)


def _check_pair(a1: RadialSymbol, a2: RadialSymbol) -> None:
    if a1.kappa != a2.kappa:
        raise ValidationError(
            f"mixed kappa: {a1.kappa} vs {a2.kappa}"
        )


def truncation_bound(a1: RadialSymbol, a2: RadialSymbol) -> float:
    """Cauchy-Schwarz bound on the convolution error from truncated tails.

    Uses the kappa^l-weighted masses of the stored coefficients; zero for
    exact (finitely supported) inputs.
    """
    _check_pair(a1, a2)
    if a1.exact and a2.exact:
        return 0.0
    t1, t2 = a1.tail_mass(), a2.tail_mass()
    w1, w2 = a1.weighted_mass(), a2.weighted_mass()
    return math.sqrt(t1 * w2) + math.sqrt(t2 * w1)


def convolve(
    a1: RadialSymbol,
    a2: RadialSymbol,
    n_max_out: int | None = None,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> RadialSymbol:
    """Radial convolution of two coefficient sequences.

    Case split on the output distance n (kappa = tree branching number,
    weights are sphere/branch counts along a geodesic):

    * n = 0:  a1(0)a2(0) + sum_{l>=1} (kappa+1) kappa^{l-1} a1(l) a2(l)
    * n = 1:  sum_{l>=0} kappa^l [a1(l)a2(l+1) + a1(l+1)a2(l)]
    * n >= 2: the l-sum above with shift n, plus the interior terms
              sum_{i=1}^{n-1} a1(i)a2(n-i)
              + sum_{i=1}^{n-1} sum_{l>=1} (kappa-1) kappa^{l-1}
                a1(l+i) a2(l+n-i)

    Exact when both inputs are exact.  For numeric inputs the stored
    tails must be small enough (see ``truncation_bound`` for the error
    report).
    """
    _check_pair(a1, a2)
    kappa = a1.kappa
    exact = a1.exact and a2.exact
    if not exact:
        for a in (a1, a2):
            if not a.exact and a.tail_mass() > tail_tol:
                raise ValidationError(
                    f"insufficient tail decay: trailing weighted mass "
                    f"{a.tail_mass():.3e} exceeds {tail_tol:.1e}"
                )
    if n_max_out is None:
        if exact:
            n_max_out = max(a1.support() + a2.support(), 0)
        else:
            n_max_out = min(a1.n_max, a2.n_max)

    zero = Fraction(0) if exact else 0.0

    def g1(l: int):
        v = a1.value(l)
        return v if exact else float(v)

    def g2(l: int):
        v = a2.value(l)
        return v if exact else float(v)

    L = max(a1.n_max, a2.n_max)
    out = []
    for n in range(n_max_out + 1):
        if n == 0:
            tot = g1(0) * g2(0)
            for l in range(1, L + 1):
                tot += (kappa + 1) * kappa ** (l - 1) * g1(l) * g2(l)
        else:
            tot = zero
            for l in range(0, L + 1):
                tot += kappa**l * (g1(l) * g2(l + n) + g1(l + n) * g2(l))
            if n >= 2:
                for i in range(1, n):
                    tot += g1(i) * g2(n - i)
                for i in range(1, n):
                    for l in range(1, L + 1):
                        tot += (
                            (kappa - 1)
                            * kappa ** (l - 1)
                            * g1(l + i)
                            * g2(l + n - i)
                        )
        out.append(tot)
    quad = None
    for a in (a1, a2):
        if a.quad_nodes is not None:
            quad = a.quad_nodes if quad is None else min(quad, a.quad_nodes)
    return RadialSymbol(kappa=kappa, values=tuple(out), exact=exact, quad_nodes=quad)


def brute_force_convolve(
    a1: RadialSymbol,
    a2: RadialSymbol,
    n: int,
    budget: int | None = None,
):
    """Defining vertex sum sum_x a1(d(v_0, x)) a2(d(x, v_n)) on T_kappa.

    Both symbols must be finitely supported.  Every contributing vertex x
    satisfies d(v_0, x) <= D1 and d(v_0, x) <= n + D2, so enumerating the
    ball of radius min(D1, n + D2) around v_0 captures the whole sum.
    Exact when both inputs are exact.
    """
    _check_pair(a1, a2)
    if n < 0:
        raise ValidationError(f"distance must be >= 0, got {n}")
    kappa = a1.kappa
    exact = a1.exact and a2.exact
    d1, d2 = a1.support(), a2.support()
    if d1 < 0 or d2 < 0:
        return Fraction(0) if exact else 0.0
    radius = min(d1, n + d2)
    kwargs = {} if budget is None else {"budget": budget}
    ball = enumerate_ball(kappa, radius, **kwargs)
    v_n = geodesic_ray(kappa, n)[-1]
    tot = Fraction(0) if exact else 0.0
    for x in ball.vertices:
        f1 = a1.value(len(x))
        if f1 == 0:
            continue
        f2 = a2.value(tree_distance(x, v_n))
        if f2 == 0:
            continue
        tot += (f1 * f2) if exact else float(f1) * float(f2)
    return tot
