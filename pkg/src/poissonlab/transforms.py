"""Catalog of measure-preserving transformations of the line and half-line.

Each transform carries the analytic metadata the dynamics and verification
layers need: closed-form evaluation, preimage branches with derivatives
(for the Lebesgue-preservation witness sum of 1/|T'|), an explicit singular
set, and a per-step backward-reach bound ``(r, x_r)`` guaranteeing
``T(x) >= x - r`` for all ``x >= x_r``.  The catalog is closed: the five
kinds below are the only ones the lab knows about.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NotInvertibleHere, SingularPoint

__all__ = [
    "Side",
    "Kind",
    "Transform",
    "PreimageBranch",
    "boole_signed",
    "boole_unsigned",
    "random_walk",
    "translation",
    "z2_translation",
    "apply",
    "apply_array",
    "apply_iter",
    "preimages",
    "unit_preimage_sum_residual",
    "SINGULAR_EPS",
]

# Orbits within this absolute distance of a singular point abort loudly;
# Monte Carlo callers resample the replica (measure-zero event).
SINGULAR_EPS = 1e-12


class Side(enum.Enum):
    HALF_LINE = "half_line"  # (0, inf)
    FULL_LINE = "full_line"  # all of R


class Kind(enum.Enum):
    BOOLE_SIGNED = "boole-signed"
    BOOLE_UNSIGNED = "boole-unsigned"
    RANDOM_WALK = "random-walk"
    TRANSLATION = "translation"
    Z2_TRANSLATION = "z2-translation"


@dataclass(frozen=True)
class Transform:
    """Immutable descriptor of one catalog transformation.

    ``step_reach``/``reach_threshold`` encode the backward-reach bound:
    for every x >= reach_threshold in the domain, T(x) >= x - step_reach.
    """

    kind: Kind
    domain: Side
    params: tuple[float, ...]
    step_reach: float
    reach_threshold: float

    @property
    def displacement(self) -> float:
        """Constant shift for translation-like kinds."""
        if self.kind is Kind.TRANSLATION:
            return self.params[0]
        if self.kind is Kind.Z2_TRANSLATION:
            a, b, m, n = self.params
            return a * m + b * n
        raise TypeError(f"{self.kind} has no constant displacement")

    def label(self) -> str:
        if self.kind is Kind.TRANSLATION:
            return f"translation:{self.params[0]:g}"
        if self.kind is Kind.Z2_TRANSLATION:
            a, b, m, n = self.params
            return f"z2:{a:g},{b:g}@({m:g},{n:g})"
        return self.kind.value


@dataclass(frozen=True)
class PreimageBranch:
    """One solution x of T(x)=y together with |T'(x)|."""

    x: float
    deriv_abs: float


def boole_signed() -> Transform:
    """x - 1/x on the full line.  Singular set {0}."""
    return Transform(Kind.BOOLE_SIGNED, Side.FULL_LINE, (), 1.0, 1.0)


def boole_unsigned() -> Transform:
    """|x - 1/x| on (0, inf).  Singular set {1} (maps to 0)."""
    return Transform(Kind.BOOLE_UNSIGNED, Side.HALF_LINE, (), 1.0, 1.0)


def random_walk() -> Transform:
    """floor(x) +- 1 with doubling fractional part; full line, no singular set."""
    return Transform(Kind.RANDOM_WALK, Side.FULL_LINE, (), 1.5, 0.0)


def translation(c: float, side: Side = Side.HALF_LINE) -> Transform:
    """Rigid shift x + c.  Half-line translations require c >= 0."""
    if side is Side.HALF_LINE and c < 0:
        raise ValueError("half-line translation needs c >= 0")
    return Transform(Kind.TRANSLATION, side, (float(c),), abs(float(c)), 0.0)


def z2_translation(a: float, b: float, m: int, n: int) -> Transform:
    """The (m, n) element of the x + a*m + b*n group action on the line."""
    disp = a * m + b * n
    return Transform(
        Kind.Z2_TRANSLATION, Side.FULL_LINE, (float(a), float(b), float(m), float(n)),
        abs(disp), 0.0,
    )


def _check_domain(t: Transform, x: float) -> None:
    if t.domain is Side.HALF_LINE and x <= 0.0:
        raise DomainError(f"{t.label()}: x={x!r} outside (0, inf)")


def apply(t: Transform, x: float, step: int = 0) -> float:
    """Evaluate T(x) by the closed-form formula.

    Raises DomainError if x is outside the domain and SingularPoint if x is
    within SINGULAR_EPS of the singular set (where the image leaves the
    domain or the formula is undefined).  ``step`` is only used to label
    the error when called from an orbit.
    """
    _check_domain(t, x)
    k = t.kind
    if k is Kind.BOOLE_SIGNED:
        if abs(x) <= SINGULAR_EPS:
            raise SingularPoint(f"boole-signed undefined at x={x!r}", step, x)
        return x - 1.0 / x
    if k is Kind.BOOLE_UNSIGNED:
        if abs(x - 1.0) <= SINGULAR_EPS:
            raise SingularPoint(f"boole-unsigned maps x={x!r} to 0", step, x)
        return abs(x - 1.0 / x)
    if k is Kind.RANDOM_WALK:
        f = x - math.floor(x)
        g = 2.0 * x - math.floor(2.0 * x)
        d = 1.0 if 0.0 < f <= 0.5 else -1.0
        return math.floor(x) + g + d
    # translation kinds
    return x + t.displacement


def apply_array(t: Transform, xs: np.ndarray, step: int = 0) -> np.ndarray:
    """Vectorized ``apply`` with the same domain/singularity policy."""
    k = t.kind
    if k is Kind.BOOLE_SIGNED:
        if np.any(np.abs(xs) <= SINGULAR_EPS):
            raise SingularPoint("boole-signed orbit hit 0", step)
        return xs - 1.0 / xs
    if k is Kind.BOOLE_UNSIGNED:
        if np.any(xs <= 0.0):
            raise DomainError("boole-unsigned needs positive points")
        if np.any(np.abs(xs - 1.0) <= SINGULAR_EPS):
            raise SingularPoint("boole-unsigned orbit hit 1", step)
        return np.abs(xs - 1.0 / xs)
    if k is Kind.RANDOM_WALK:
        f = xs - np.floor(xs)
        g = 2.0 * xs - np.floor(2.0 * xs)
        d = np.where((f > 0.0) & (f <= 0.5), 1.0, -1.0)
        return np.floor(xs) + g + d
    return xs + t.displacement


def apply_iter(t: Transform, x: float, n: int) -> float:
    """n-fold composition T^n(x); apply_iter(t, x, 0) == x.

    SingularPoint carries the step index at which the orbit died.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    y = x
    for k in range(n):
        y = apply(t, y, step=k)
    return y


def _boole_branches(y: float) -> list[PreimageBranch]:
    # roots of x^2 - y x - 1 = 0; |T'| = 1 + 1/x^2 on both
    s = math.sqrt(y * y + 4.0)
    out = []
    for x in ((y + s) / 2.0, (y - s) / 2.0):
        out.append(PreimageBranch(x, 1.0 + 1.0 / (x * x)))
    return out


def preimages(t: Transform, y: float) -> list[PreimageBranch]:
    """All solutions of T(x)=y in the domain, each with |T'(x)|.

    ``y`` must lie in the interior of the range, off branch boundaries;
    otherwise NotInvertibleHere.
    """
    k = t.kind
    if k is Kind.BOOLE_SIGNED:
        return _boole_branches(y)
    if k is Kind.BOOLE_UNSIGNED:
        if y <= 0.0:
            raise NotInvertibleHere(f"boole-unsigned range is (0, inf); y={y!r}")
        s = math.sqrt(y * y + 4.0)
        return [
            PreimageBranch((y + s) / 2.0, 1.0 + 1.0 / ((y + s) / 2.0) ** 2),
            PreimageBranch((-y + s) / 2.0, 1.0 + 1.0 / ((-y + s) / 2.0) ** 2),
        ]
    if k is Kind.RANDOM_WALK:
        if y == math.floor(y):
            raise NotInvertibleHere(f"integer y={y!r} is a branch boundary")
        m = math.floor(y)
        up = (m - 1) + (y - m) / 2.0  # f in (0, 1/2), moved up
        down = (m + 1) + (y - m + 1.0) / 2.0  # f in (1/2, 1), moved down
        return [PreimageBranch(up, 2.0), PreimageBranch(down, 2.0)]
    # translation kinds: single branch, slope 1
    x = y - t.displacement
    if t.domain is Side.HALF_LINE and x <= 0.0:
        raise NotInvertibleHere(f"y={y!r} outside the half-line range")
    return [PreimageBranch(x, 1.0)]


def unit_preimage_sum_residual(t: Transform, y: float) -> float:
    """|sum over branches of 1/|T'| - 1|, the Lebesgue-preservation witness."""
    total = sum(1.0 / b.deriv_abs for b in preimages(t, y))
    return abs(total - 1.0)


def sharp_frontier(t: Transform, level: float, k: int) -> float | None:
    """Kind-specific improvement on the linear backward-reach frontier.

    Returns W such that no point above W at time 0 can lie at or below
    ``level`` within k steps, or None when only the generic linear bound
    applies.  For the unsigned Boole map, (x - 1/x)^2 > x^2 - 2 for x >= 1
    gives W = sqrt(max(level,1)^2 + 2k); for nonnegative shifts points
    never move left, so W = level.
    """
    if t.kind is Kind.BOOLE_UNSIGNED:
        m = max(level, 1.0)
        return math.sqrt(m * m + 2.0 * k)
    if t.kind in (Kind.TRANSLATION, Kind.Z2_TRANSLATION) and t.displacement >= 0.0:
        return level
    return None
