"""Symbol functions on the spectral interval and radial kernel coefficients.

A symbol is a bounded real function phi on supp Pi_kappa; its transform
is the coefficient sequence alpha(n) of a radial Toeplitz kernel
K(x, y) = alpha(d(x, y)).  Three symbol representations are supported:

* ``PolynomialSymbol`` -- exact rational coefficients, ascending degree;
* ``StepSymbol``       -- piecewise constant on consecutive intervals;
* ``GridSymbol``       -- values sampled on the nodes of a quadrature rule.

``RadialSymbol`` holds the transformed sequence, either exact (rational,
finitely supported) or numeric (floats truncated at ``n_max`` with the
quadrature resolution recorded).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

import numpy as np

from .errors import ValidationError
from .polynomials import support_halfwidth


@dataclass(frozen=True)
class PolynomialSymbol:
    """phi(t) = sum coeffs[k] t^k with exact rational coefficients."""

    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise ValidationError("polynomial symbol needs at least one coefficient")
        object.__setattr__(
            self, "coeffs", tuple(Fraction(c) for c in self.coeffs)
        )

    @property
    def degree(self) -> int:
        deg = 0
        for k, c in enumerate(self.coeffs):
            if c != 0:
                deg = k
        return deg

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c in reversed(self.coeffs):
            out = out * t + float(c)
        return out


@dataclass(frozen=True)
class StepSymbol:
    """Piecewise constant symbol: values[i] on [breakpoints[i], breakpoints[i+1]).

    Breakpoints are strictly increasing and clipped to the closure of
    supp Pi_kappa by the transform; the symbol is 0 outside the covered
    range.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if len(bp) < 2 or len(vals) != len(bp) - 1:
            raise ValidationError(
                "step symbol needs n+1 breakpoints for n values"
            )
        if any(b1 >= b2 for b1, b2 in zip(bp, bp[1:])):
            raise ValidationError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for lo, hi, v in zip(self.breakpoints, self.breakpoints[1:], self.values):
            out = np.where((t >= lo) & (t < hi), v, out)
        out = np.where(t == self.breakpoints[-1], self.values[-1], out)
        return out


@dataclass(frozen=True)
class GridSymbol:
    """Symbol given by its values on the nodes of a quadrature rule."""

    values: tuple[float, ...]

    def on_nodes(self, n_nodes: int) -> np.ndarray:
        if len(self.values) != n_nodes:
            raise ValidationError(
                f"grid symbol has {len(self.values)} values, rule has {n_nodes} nodes"
            )
        return np.asarray(self.values, dtype=float)


SymbolFunction = Union[PolynomialSymbol, StepSymbol, GridSymbol, Callable]


def indicator_symbol(a: float, b: float) -> StepSymbol:
    """Indicator of the interval [a, b]."""
    return StepSymbol(breakpoints=(a, b), values=(1.0,))


def upper_arc_indicator(kappa: int, fraction: float) -> StepSymbol:
    """Indicator of the top spectral arc theta in [0, fraction*pi].

    In t coordinates this is [c cos(fraction*pi), c] with c the support
    half-width.  For kappa = 1 and fraction = a this is the symbol of the
    discrete sine kernel S_a.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValidationError(f"arc fraction must be in (0, 1], got {fraction}")
    c = support_halfwidth(kappa)
    return indicator_symbol(c * math.cos(fraction * math.pi), c)


@dataclass(frozen=True)
class RadialSymbol:
    """Coefficients alpha(0..n_max) of a radial Toeplitz kernel on T_kappa.

    ``exact`` symbols store Fractions and are finitely supported by
    construction (alpha(n) = 0 for n beyond the stored range).  Numeric
    symbols store floats truncated at ``n_max`` with the quadrature node
    count recorded in ``quad_nodes``.
    """

    kappa: int
    values: tuple
    exact: bool
    quad_nodes: int | None = None

    def __post_init__(self):
        if self.kappa < 1:
            raise ValidationError(f"kappa must be >= 1, got {self.kappa}")
        if self.exact:
            vals = tuple(Fraction(v) for v in self.values)
        else:
            vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)

    @property
    def n_max(self) -> int:
        return len(self.values) - 1

    def value(self, n: int):
        """alpha(n); exact zeros beyond the stored support."""
        if n < 0:
            raise ValidationError(f"distance must be >= 0, got {n}")
        if n > self.n_max:
            return Fraction(0) if self.exact else 0.0
        return self.values[n]

    def support(self) -> int:
        """Largest n with alpha(n) != 0, or -1 for the zero symbol."""
        for n in range(self.n_max, -1, -1):
            if self.values[n] != 0:
                return n
        return -1

    def as_floats(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def weighted_mass(self, start: int = 0) -> float:
        """sum_{l >= start} kappa^l alpha(l)^2 over the stored range.

        This is the square-summability proxy behind boundedness of the
        induced operator row.
        """
        return float(
            sum(
                self.kappa**l * float(self.values[l]) ** 2
                for l in range(start, self.n_max + 1)
            )
        )

    def tail_mass(self) -> float:
        """Weighted mass of the trailing stored block (decay diagnostic)."""
        if self.exact:
            return 0.0
        tail = max(2, (self.n_max + 1) // 8)
        return self.weighted_mass(start=self.n_max + 1 - tail)

    def to_json(self) -> str:
        if self.exact:
            vals = [str(Fraction(v)) for v in self.values]
        else:
            vals = [float(v) for v in self.values]
        return json.dumps({"kappa": self.kappa, "exact": self.exact, "values": vals})

    @staticmethod
    def from_json(text: str) -> "RadialSymbol":
        obj = json.loads(text)
        try:
            kappa, exact, vals = obj["kappa"], obj["exact"], obj["values"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad radial symbol JSON: {exc}") from exc
        if exact:
            values = tuple(Fraction(v) for v in vals)
        else:
            values = tuple(float(v) for v in vals)
        return RadialSymbol(kappa=int(kappa), values=values, exact=bool(exact))


def delta_symbol(kappa: int, n: int, weight=1) -> RadialSymbol:
    """The exact symbol weight * delta_n."""
    vals = [Fraction(0)] * (n + 1)
    vals[n] = Fraction(weight)
    return RadialSymbol(kappa=kappa, values=tuple(vals), exact=True)


def symbol_to_json(sym: SymbolFunction) -> str:
    """Serialize a symbol function spec (poly/step/indicator forms)."""
    if isinstance(sym, PolynomialSymbol):
        return json.dumps(
            {"type": "poly", "coeffs": [str(c) for c in sym.coeffs]}
        )
    if isinstance(sym, StepSymbol):
        return json.dumps(
            {
                "type": "step",
                "breakpoints": list(sym.breakpoints),
                "values": list(sym.values),
            }
        )
    raise ValidationError(f"cannot serialize symbol of type {type(sym).__name__}")


def symbol_from_json(text: str) -> SymbolFunction:
    """Parse a symbol function spec.

    Forms: {"type": "poly", "coeffs": [...rationals...]},
    {"type": "step", "breakpoints": [...], "values": [...]},
    {"type": "indicator", "a": .., "b": ..}.
    """
    try:
        obj = json.loads(text)
        kind = obj["type"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValidationError(f"bad symbol JSON: {exc}") from exc
    if kind == "poly":
        return PolynomialSymbol(coeffs=tuple(Fraction(c) for c in obj["coeffs"]))
    if kind == "step":
        return StepSymbol(
            breakpoints=tuple(obj["breakpoints"]), values=tuple(obj["values"])
        )
    if kind == "indicator":
        return indicator_symbol(float(obj["a"]), float(obj["b"]))
    raise ValidationError(f"unknown symbol type {kind!r}")


_POLY_RE = re.compile(r"^poly:(.+)$")
_STEP_RE = re.compile(r"^step:(.+)$")
_STEP_ARC_RE = re.compile(r"^step:a=([^;,()]+)$")
_INDICATOR_RE = re.compile(r"^indicator:\(([^,]+),([^)]+)\)$")
_PIECE_RE = re.compile(r"^\(([^,]+),([^)]+)\)=(.+)$")


def _parse_fraction(tok: str) -> Fraction:
    try:
        return Fraction(tok.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"bad rational token {tok!r}") from exc


def _parse_float(tok: str) -> float:
    try:
        return float(Fraction(tok.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"bad numeric token {tok!r}") from exc


def parse_symbol_spec(spec: str, kappa: int) -> SymbolFunction:
    """Parse the symbol mini-grammar used by the CLI.

    Forms::

        poly:c0,c1,...          exact rationals, e.g. poly:0,1 or poly:1/2,0,-1/3
        step:(a,b)=v;(b,c)=w    piecewise constant on consecutive intervals
        step:a=F                indicator of the top arc theta in [0, F*pi]
        indicator:(a,b)         indicator of [a, b]
    """
    spec = spec.strip()
    m = _STEP_ARC_RE.match(spec)
    if m:
        return upper_arc_indicator(kappa, _parse_float(m.group(1)))
    m = _POLY_RE.match(spec)
    if m:
        toks = m.group(1).split(",")
        return PolynomialSymbol(coeffs=tuple(_parse_fraction(t) for t in toks))
    m = _INDICATOR_RE.match(spec)
    if m:
        return indicator_symbol(_parse_float(m.group(1)), _parse_float(m.group(2)))
    m = _STEP_RE.match(spec)
    if m:
        breakpoints: list[float] = []
        values: list[float] = []
        for piece in m.group(1).split(";"):
            pm = _PIECE_RE.match(piece.strip())
            if not pm:
                raise ValidationError(f"bad step piece {piece!r}")
            lo, hi, v = (
                _parse_float(pm.group(1)),
                _parse_float(pm.group(2)),
                _parse_float(pm.group(3)),
            )
            if breakpoints and abs(lo - breakpoints[-1]) > 1e-12:
                raise ValidationError(
                    f"step pieces must be consecutive, got gap before {piece!r}"
                )
            if not breakpoints:
                breakpoints.append(lo)
            breakpoints.append(hi)
            values.append(v)
        return StepSymbol(breakpoints=tuple(breakpoints), values=tuple(values))
    raise ValidationError(f"unrecognized symbol spec {spec!r}")
