"""Exact sampling of Poisson point processes on windows of the line.

Half-line windows are sampled by exponential spacings so that extension to
a larger window is memoryless and exact; full-line windows use a Poisson
count followed by uniform placement.  Intervals are half-open (lo, hi]
throughout, matching the cylinder-event convention.  Every sampler is a
pure function of its parameters and a :class:`~poissonlab.streams.StreamKey`.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyConfiguration, WindowTooSmall
from .streams import StreamKey
from .transforms import Side

__all__ = [
    "Window",
    "Configuration",
    "MarkedConfiguration",
    "CylinderEvent",
    "sample",
    "extend",
    "count",
    "leftmost",
    "sample_conditioned",
    "sample_hat",
    "sample_tilde",
    "cylinder_probability",
    "cylinder_occurs",
    "config_to_json",
    "config_from_json",
]


@dataclass(frozen=True)
class Window:
    """Half-open observation window (lo, hi]."""

    lo: float
    hi: float
    side: Side = Side.HALF_LINE

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"window needs lo < hi, got ({self.lo}, {self.hi}]")
        if self.side is Side.HALF_LINE and self.lo < 0.0:
            raise ValueError("half-line windows need lo >= 0")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def covers(self, a: float, b: float) -> bool:
        return self.lo <= a and b <= self.hi


@dataclass(frozen=True)
class Configuration:
    """Finite restriction of a Poisson realization to a window.

    ``points`` are strictly increasing and lie in (window.lo, window.hi];
    ``stream`` records the root key that generated the realization, which
    also seeds any lazy window extensions derived from it.
    """

    points: tuple[float, ...]
    window: Window
    intensity: float
    stream: StreamKey

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))
        if self.intensity <= 0.0:
            raise ValueError("intensity must be positive")
        pts = self.points
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("points must be strictly increasing")
        if pts and not (self.window.lo < pts[0] and pts[-1] <= self.window.hi):
            raise ValueError("points must lie in (window.lo, window.hi]")

    def __len__(self) -> int:
        return len(self.points)

    def points_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.float64)


@dataclass(frozen=True)
class MarkedConfiguration:
    """A distinguished point paired with an independent configuration.

    The distinguished point is not required to be a member of the
    configuration; it is the x component of a sample of the product space.
    """

    distinguished: float
    config: Configuration


@dataclass(frozen=True)
class CylinderEvent:
    """Event prescribing exact counts over consecutive intervals.

    ``breakpoints`` = (0, a_1, ..., a_N) strictly increasing starting at 0;
    ``counts`` = (n_1, ..., n_N) with n_k the required number of points in
    (a_{k-1}, a_k].
    """

    breakpoints: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if len(bp) < 2 or bp[0] != 0.0:
            raise ValueError("breakpoints must start at 0 and contain >= 2 entries")
        if any(b <= a for a, b in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if len(self.counts) != len(bp) - 1:
            raise ValueError("need one count per interval")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be nonnegative")


# ---------------------------------------------------------------------------
# raw samplers (generator-level; public ops wrap these with StreamKeys)
# ---------------------------------------------------------------------------


def _spacing_points(gen: np.random.Generator, lam: float, lo: float, hi: float) -> np.ndarray:
    """Exponential-spacing Poisson sample of (lo, hi], sorted."""
    scale = 1.0 / lam
    batch = max(16, int(lam * (hi - lo) * 1.25) + 16)
    chunks = []
    cur = lo
    while True:
        xs = cur + np.cumsum(gen.exponential(scale, size=batch))
        keep = int(np.searchsorted(xs, hi, side="right"))
        chunks.append(xs[:keep])
        if keep < batch:
            break
        cur = float(xs[-1])
    pts = np.concatenate(chunks) if len(chunks) > 1 else chunks[0]
    if pts.size:
        # zero spacings have probability ~2^-53; drop rather than bias
        keep = np.ones(pts.size, dtype=bool)
        keep[1:] = np.diff(pts) > 0.0
        keep &= pts > lo
        pts = pts[keep]
    return pts


def _count_uniform_points(gen: np.random.Generator, lam: float, lo: float, hi: float) -> np.ndarray:
    """Count-then-uniform Poisson sample of (lo, hi], sorted."""
    n = int(gen.poisson(lam * (hi - lo)))
    u = hi - gen.random(n) * (hi - lo)  # lands in (lo, hi]
    u.sort()
    if u.size:
        keep = np.ones(u.size, dtype=bool)
        keep[1:] = np.diff(u) > 0.0
        u = u[keep]
    return u


def _region_points(gen: np.random.Generator, lam: float, lo: float, hi: float, side: Side) -> np.ndarray:
    if hi <= lo:
        return np.empty(0, dtype=np.float64)
    if side is Side.HALF_LINE:
        return _spacing_points(gen, lam, lo, hi)
    return _count_uniform_points(gen, lam, lo, hi)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def sample(lam: float, w: Window, s: StreamKey) -> Configuration:
    """Poisson(lam * Lebesgue) sample restricted to the window."""
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    pts = _region_points(s.generator(), lam, w.lo, w.hi, w.side)
    return Configuration(tuple(pts), w, lam, s)


def extend(c: Configuration, new_hi: float, s: StreamKey) -> Configuration:
    """Configuration plus a fresh Poisson sample of (window.hi, new_hi].

    The points of ``c`` are preserved verbatim; the result is distributed
    as a one-shot sample on the enlarged window.
    """
    if not new_hi > c.window.hi:
        raise ValueError(f"new_hi must exceed {c.window.hi}, got {new_hi}")
    fresh = _region_points(s.generator(), c.intensity, c.window.hi, new_hi, c.window.side)
    fresh = fresh[fresh > c.window.hi]
    w = Window(c.window.lo, new_hi, c.window.side)
    return Configuration(c.points + tuple(fresh), w, c.intensity, c.stream)


def count(c: Configuration, interval: tuple[float, float]) -> int:
    """Number of points in the half-open interval (a, b]."""
    a, b = interval
    if b <= a:
        raise ValueError("interval needs a < b")
    if not c.window.covers(a, b):
        raise WindowTooSmall(f"interval ({a}, {b}] exits window ({c.window.lo}, {c.window.hi}]")
    return bisect.bisect_right(c.points, b) - bisect.bisect_right(c.points, a)


def leftmost(c: Configuration) -> float:
    """Smallest point; exact for the infinite process on half-line windows
    anchored at 0, because everything left of window.hi is fully sampled."""
    if c.window.side is not Side.HALF_LINE or c.window.lo != 0.0:
        raise WindowTooSmall("leftmost needs a half-line window anchored at 0")
    if not c.points:
        raise EmptyConfiguration("no points sampled below window.hi")
    return c.points[0]


def _conditioned_points(
    gen: np.random.Generator, B: tuple[float, float], j: int, lam: float, w: Window
) -> tuple[np.ndarray, np.ndarray]:
    """(uniform points in B, Poisson points on w minus B); draw order fixed."""
    b_lo, b_hi = B
    if not (w.lo <= b_lo < b_hi <= w.hi):
        raise WindowTooSmall(f"B=({b_lo}, {b_hi}] not inside window ({w.lo}, {w.hi}]")
    if j < 0:
        raise ValueError("j must be nonnegative")
    inside = b_hi - gen.random(j) * (b_hi - b_lo)
    inside.sort()
    left = _region_points(gen, lam, w.lo, b_lo, w.side)
    right = _region_points(gen, lam, b_hi, w.hi, w.side)
    return inside, np.concatenate([left, right])


def sample_conditioned(
    B: tuple[float, float], j: int, lam: float, w: Window, s: StreamKey
) -> Configuration:
    """Poisson sample conditioned to exactly j points in B.

    Construction: j i.i.d. uniforms on B plus an independent Poisson(lam)
    sample of the window outside B.
    """
    inside, outside = _conditioned_points(s.generator(), B, j, lam, w)
    pts = np.sort(np.concatenate([inside, outside]))
    return Configuration(tuple(pts), w, lam, s)


def sample_hat(
    B: tuple[float, float], j: int, lam: float, w: Window, s: StreamKey
) -> MarkedConfiguration:
    """Uniform mark in B paired with an independent j-in-B conditioned sample."""
    gen = s.generator()
    b_lo, b_hi = B
    x = b_hi - gen.random() * (b_hi - b_lo)
    inside, outside = _conditioned_points(gen, B, j, lam, w)
    pts = np.sort(np.concatenate([inside, outside]))
    return MarkedConfiguration(float(x), Configuration(tuple(pts), w, lam, s))


def sample_tilde(
    B: tuple[float, float], j: int, lam: float, w: Window, s: StreamKey
) -> tuple[list[float], Configuration]:
    """j i.i.d. uniforms on B plus an independent Poisson sample avoiding B."""
    inside, outside = _conditioned_points(s.generator(), B, j, lam, w)
    return list(inside), Configuration(tuple(outside), w, lam, s)


def cylinder_probability(e: CylinderEvent, lam: float) -> float:
    """Exact probability exp(-lam*a_N) * prod (lam*(a_k - a_{k-1}))^{n_k} / n_k!."""
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    a_n = e.breakpoints[-1]
    p = math.exp(-lam * a_n)
    for (a, b), n in zip(zip(e.breakpoints, e.breakpoints[1:]), e.counts):
        p *= (lam * (b - a)) ** n / math.factorial(n)
    return p


def cylinder_occurs(e: CylinderEvent, c: Configuration) -> bool:
    """Whether the configuration realizes the prescribed counts."""
    return all(
        count(c, (a, b)) == n
        for (a, b), n in zip(zip(e.breakpoints, e.breakpoints[1:]), e.counts)
    )


# ---------------------------------------------------------------------------
# serialization (CLI fixtures and golden tests)
# ---------------------------------------------------------------------------


def config_to_json(c: Configuration) -> dict:
    return {
        "lambda": c.intensity,
        "window": {"lo": c.window.lo, "hi": c.window.hi, "side": c.window.side.value},
        "points": list(c.points),
        "stream": c.stream.to_json(),
    }


def config_from_json(obj: dict) -> Configuration:
    w = Window(obj["window"]["lo"], obj["window"]["hi"], Side(obj["window"]["side"]))
    return Configuration(
        tuple(obj["points"]), w, obj["lambda"], StreamKey.from_json(obj["stream"])
    )
