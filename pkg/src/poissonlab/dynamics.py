"""Suspension dynamics, factor maps, and the leftmost-return transformation.

A transform T of the half-line acts on configurations point by point (the
suspension T_*), and jointly on a marked point and a configuration (the
marked product).  The leftmost return time kappa is the first k >= 1 at
which the image of the initially-leftmost point is again the minimum of
the image configuration; the leftmost map applies the suspension kappa
times.  All of it runs over lazily extended windows, with per-kind reach
certificates making the lazily computed answers exact for the infinite
process (see :mod:`poissonlab.engine`).

The z2 helpers realize the rigid two-parameter translation group action on
the full line and its invariant gap event, the standard counterexample to
product ergodicity for group actions.  The printed form of that event's
interval is read as the open interval (x-1, x+1) centered on the mark (as
printed, the endpoints are reversed and the interval would be empty).
"""

from __future__ import annotations

import numpy as np

from .engine import LazyRealization, OrbitState, certified_frontier, ensure_window
from .errors import (
    EmptyConfiguration,
    NotInX0,
    WindowTooSmall,
)
from .point_process import Configuration, MarkedConfiguration, Window, _spacing_points
from .streams import StreamKey
from .transforms import Side, Transform, apply, apply_array, z2_translation

__all__ = [
    "MarkedConfiguration",
    "OrbitState",
    "ensure_window",
    "suspend",
    "union_mark",
    "in_X0",
    "sample_mu0",
    "pi0",
    "pi0_inv",
    "kappa",
    "leftmost_guarantee",
    "leftmost_map",
    "induced_step",
    "z2_invariant_event",
]

DEFAULT_KAPPA_CAP = 100_000
DEFAULT_WINDOW_POINTS_BUDGET = 1_000_000.0


def _budget_hi(lam: float, budget: float | None) -> float:
    # window budget is expressed in expected points
    return (DEFAULT_WINDOW_POINTS_BUDGET if budget is None else budget) / lam


def suspend(t: Transform, c: Configuration) -> list[float]:
    """Image multiset {T(x) : x in c}, re-sorted.

    The domain may fold, so positions above the reach-adjusted bound of the
    window are incomplete; callers needing certified regions go through
    :class:`OrbitState`.
    """
    if not c.points:
        return []
    return sorted(apply_array(t, c.points_array()).tolist())


def union_mark(x: float, c: Configuration) -> Configuration:
    """The factor map: insert the mark into the configuration (set union)."""
    if not (c.window.lo < x <= c.window.hi):
        raise WindowTooSmall(f"mark {x!r} outside window ({c.window.lo}, {c.window.hi}]")
    if x in c.points:
        return c
    pts = np.sort(np.append(c.points_array(), x))
    return Configuration(tuple(pts), c.window, c.intensity, c.stream)


def in_X0(m: MarkedConfiguration) -> bool:
    """Whether no configuration point lies at or left of the mark."""
    c = m.config
    if c.window.side is not Side.HALF_LINE or c.window.lo != 0.0:
        raise WindowTooSmall("membership needs a half-line window anchored at 0")
    if m.distinguished > c.window.hi:
        raise WindowTooSmall("window does not cover (0, distinguished]")
    return not c.points or c.points[0] > m.distinguished


def sample_mu0(lam: float, s: StreamKey, w_hi: float) -> MarkedConfiguration:
    """Sample of the normalized product measure restricted to the gap event.

    The mark has density lam*exp(-lam*x) on (0, inf); the configuration is
    Poisson(lam) on (x, w_hi] and known-empty on (0, x].
    """
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    gen = s.generator()
    x = float(gen.exponential(1.0 / lam))
    hi = max(w_hi, x)
    pts = _spacing_points(gen, lam, x, hi) if hi > x else np.empty(0)
    cfg = Configuration(tuple(pts), Window(0.0, hi, Side.HALF_LINE), lam, s)
    return MarkedConfiguration(x, cfg)


def pi0(m: MarkedConfiguration) -> Configuration:
    """Union the mark into the configuration; defined on the gap event only."""
    if not in_X0(m):
        raise NotInX0("a configuration point lies at or left of the mark")
    return union_mark(m.distinguished, m.config)


def pi0_inv(c: Configuration) -> MarkedConfiguration:
    """Split off the leftmost point as the mark; inverse of :func:`pi0`."""
    if not c.points:
        raise EmptyConfiguration("cannot split an empty configuration")
    rest = Configuration(c.points[1:], c.window, c.intensity, c.stream)
    return MarkedConfiguration(c.points[0], rest)


def leftmost_guarantee(t: Transform, L: float, k: int) -> float:
    """Frontier W = max(L, x_r) + k*r: no time-0 point above W can lie below
    L after at most k steps of a transform with backward reach (r, x_r)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return max(L, t.reach_threshold) + k * t.step_reach


def kappa(t: Transform, c: Configuration, cap: int = DEFAULT_KAPPA_CAP,
          budget: float | None = None) -> int:
    """Leftmost return time: smallest k >= 1 after which the image of the
    initially-leftmost point is again the configuration minimum.

    Exact for the infinite process via certified lazy window extension.
    Raises Censored(cap), SingularPoint, or WindowBudgetExceeded.
    """
    state = OrbitState.from_config(t, c, budget_hi=_budget_hi(c.intensity, budget))
    return state.next_return(cap)


def leftmost_map(t: Transform, c: Configuration, cap: int = DEFAULT_KAPPA_CAP,
                 budget: float | None = None,
                 complete_below: float | None = None) -> Configuration:
    """Apply the suspension kappa times; the resulting configuration is
    complete (fully sampled) on (0, complete_below], default the input
    window.  Its law is again the Poisson law when T preserves Lebesgue
    measure and is conservative."""
    state = OrbitState.from_config(t, c, budget_hi=_budget_hi(c.intensity, budget))
    state.next_return(cap)
    level = c.window.hi if complete_below is None else complete_below
    level = max(level, float(state.images[0]))
    state.ensure_complete(level)
    return state.snapshot(level, include_marked=True)


def induced_step(t: Transform, m: MarkedConfiguration, cap: int = DEFAULT_KAPPA_CAP,
                 budget: float | None = None,
                 complete_below: float | None = None) -> MarkedConfiguration:
    """First-return map of the marked product to the gap event.

    Applies the product map until the orbit re-enters the event; the step
    count coincides with kappa of the unioned configuration (the two code
    paths share the return engine; the suite cross-checks them).
    """
    if not in_X0(m):
        raise NotInX0("marked sample must start inside the gap event")
    state = OrbitState.from_marked(t, m, budget_hi=_budget_hi(m.config.intensity, budget))
    state.next_return(cap)
    level = m.config.window.hi if complete_below is None else complete_below
    level = max(level, float(state.images[0]))
    state.ensure_complete(level)
    cfg = state.snapshot(level, include_marked=False)
    return MarkedConfiguration(float(state.images[0]), cfg)


def z2_elements(a: float, b: float, grid: list[tuple[int, int]]) -> list[Transform]:
    """Concrete transforms for the listed (m, n) group elements."""
    return [z2_translation(a, b, mm, nn) for mm, nn in grid]


def z2_invariant_event(a: float, b: float, lam: float, m: MarkedConfiguration,
                       grid: list[tuple[int, int]]) -> bool:
    """Membership in the gap event E = {no point within open distance 1 of
    the mark}, asserted invariant under every listed group element.

    The window must cover the mark plus-minus (1 + the largest grid
    displacement) so each shifted membership test is decided by sampled
    points only.
    """
    c = m.config
    if c.window.side is not Side.FULL_LINE:
        raise WindowTooSmall("the group acts on the full line")
    if lam != c.intensity:
        raise ValueError("lam disagrees with the configuration's intensity")
    x = m.distinguished
    elems = z2_elements(a, b, grid)
    max_disp = max((abs(e.displacement) for e in elems), default=0.0)
    if not (c.window.lo <= x - (1.0 + max_disp) and x + (1.0 + max_disp) <= c.window.hi):
        raise WindowTooSmall("window does not cover the mark +- (1 + max displacement)")

    pts = c.points_array()

    def member(mark: float, points: np.ndarray) -> bool:
        return not bool(np.any((points > mark - 1.0) & (points < mark + 1.0)))

    base = member(x, pts)
    for e in elems:
        shifted = member(apply(e, x), apply_array(e, pts))
        if shifted != base:
            raise AssertionError(
                f"gap event not invariant under {e.label()} (rigid shift broke a tie)")
    return base
