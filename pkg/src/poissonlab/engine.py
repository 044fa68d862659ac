"""Lazy orbit engine for leftmost-return dynamics on the half-line.

The engine tracks the images of every sampled time-0 point under repeated
application of a half-line transform, extending the time-0 sampling window
on demand.  A "return" at step k is certified when the marked point's image
is the minimum of all tracked images AND the materialized frontier F rules
out any unsampled time-0 point (all above F) having dropped below that
minimum within k steps.  The frontier certificates are per-kind backward
reach bounds; for the unsigned Boole map (x - 1/x)^2 > x^2 - 2 gives the
quadratic certificate F >= sqrt(max(L,1)^2 + 2k), which keeps windows
O(sqrt(steps)) rather than O(steps).

Extensions are region addressed: the region (F, 2F] of a realization rooted
at key R is always sampled under the child key derived from the bit pattern
of F.  Content is therefore a pure function of (intensity, root key, initial
window) no matter how eagerly or lazily regions are materialized, which is
what makes lazy evaluation exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    Censored,
    DomainError,
    EmptyConfiguration,
    SingularPoint,
    WindowBudgetExceeded,
    WindowTooSmall,
)
from .point_process import Configuration, MarkedConfiguration, Window, _region_points
from .streams import StreamKey
from .transforms import Kind, Side, Transform, sharp_frontier

__all__ = ["OrbitState", "LazyRealization", "ensure_window", "certified_frontier"]

try:  # pragma: no cover - exercised implicitly everywhere
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap


# kernel exit codes
_RETURNED = 0
_NEED_EXT = 1
_BUDGET = 2
_SINGULAR = 3

# StreamKey namespaces under a configuration's root key
_EXT_TAG = 1  # lazy extension regions
_SNAP_TAG = 2  # streams handed to snapshot configurations

_IMAGE_EPS = 1e-12  # an image this close to 0 means the source hit the singular set


def certified_frontier(t: Transform, level: float, k: int) -> float:
    """Smallest frontier W certifying: no time-0 point above W can lie at or
    below ``level`` after at most k steps.  Uses the best available per-kind
    bound, never worse than the generic linear reach."""
    linear = max(level, t.reach_threshold) + k * t.step_reach
    sharp = sharp_frontier(t, level, k)
    return linear if sharp is None else min(linear, sharp)


def _float_words(x: float) -> tuple[int, int]:
    bits = struct.unpack("<Q", struct.pack("<d", float(x)))[0]
    return bits >> 32, bits & 0xFFFFFFFF


class LazyRealization:
    """Region-addressed, lazily materialized time-0 Poisson realization."""

    def __init__(self, lam: float, root: StreamKey, lo: float, frontier: float,
                 points: np.ndarray, side: Side, budget_hi: float):
        self.lam = lam
        self.root = root
        self.lo = lo
        self.frontier = float(frontier)
        self.points = np.array(points, dtype=np.float64)
        self.side = side
        self.budget_hi = budget_hi

    @classmethod
    def from_config(cls, c: Configuration, budget_hi: float | None = None) -> "LazyRealization":
        if budget_hi is None:
            budget_hi = 1e6 / c.intensity
        return cls(c.intensity, c.stream, c.window.lo, c.window.hi,
                   c.points_array(), c.window.side, budget_hi)

    def region_key(self, boundary: float) -> StreamKey:
        hi_w, lo_w = _float_words(boundary)
        return self.root.child(_EXT_TAG, hi_w, lo_w)

    def ensure(self, hi: float) -> np.ndarray:
        """Materialize regions through ``hi``; returns the new time-0 points."""
        if hi <= self.frontier:
            return np.empty(0, dtype=np.float64)
        if hi > self.budget_hi:
            raise WindowBudgetExceeded(hi, self.budget_hi)
        fresh: list[np.ndarray] = []
        while self.frontier < hi:
            a = self.frontier
            b = 2.0 * a
            gen = self.region_key(a).generator()
            pts = _region_points(gen, self.lam, a, b, self.side)
            pts = pts[pts > a]
            fresh.append(pts)
            self.frontier = b
        if fresh:
            new = np.concatenate(fresh)
            self.points = np.concatenate([self.points, new])
            return new
        return np.empty(0, dtype=np.float64)


# ---------------------------------------------------------------------------
# steppers.  The Boole kernel is the hot path; the numpy mirror reproduces it
# bit for bit and backs the cross-path exactness tests.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _boole_run_nb(images, k_abs0, max_steps, frontier_sq):  # pragma: no cover
    k = 0
    n = images.shape[0]
    while k < max_steps:
        k += 1
        mn = np.inf
        arg = -1
        for i in range(n):
            x = images[i]
            y = x - 1.0 / x
            if y < 0.0:
                y = -y
            images[i] = y
            if y < mn:
                mn = y
                arg = i
        if mn <= _IMAGE_EPS:
            return _SINGULAR, k
        if arg == 0:
            m = mn if mn > 1.0 else 1.0
            if frontier_sq >= m * m + 2.0 * (k_abs0 + k):
                return _RETURNED, k
            return _NEED_EXT, k
    return _BUDGET, k


@njit(cache=True)
def _boole_replay_nb(pts, ksteps):  # pragma: no cover
    for i in range(pts.shape[0]):
        x = pts[i]
        for _ in range(ksteps):
            y = x - 1.0 / x
            if y < 0.0:
                y = -y
            if y <= _IMAGE_EPS:
                return i
            x = y
        pts[i] = x
    return -1


def _boole_run_np(images, k_abs0, max_steps, frontier_sq):
    k = 0
    while k < max_steps:
        k += 1
        np.abs(images - 1.0 / images, out=images)
        arg = int(np.argmin(images))
        mn = float(images[arg])
        if mn <= _IMAGE_EPS:
            return _SINGULAR, k
        if arg == 0:
            m = mn if mn > 1.0 else 1.0
            if frontier_sq >= m * m + 2.0 * (k_abs0 + k):
                return _RETURNED, k
            return _NEED_EXT, k
    return _BUDGET, k


def _boole_replay_np(pts, ksteps):
    for _ in range(ksteps):
        if pts.size == 0:
            return -1
        np.abs(pts - 1.0 / pts, out=pts)
        if float(np.min(pts)) <= _IMAGE_EPS:
            return int(np.argmin(pts))
    return -1


def _shift_run(disp, images, k_abs0, max_steps, frontier, t: Transform):
    k = 0
    while k < max_steps:
        k += 1
        images += disp
        arg = int(np.argmin(images))
        mn = float(images[arg])
        if mn <= 0.0:
            # half-line translations with c >= 0 can never produce this
            return _SINGULAR, k
        if arg == 0:
            if frontier >= certified_frontier(t, mn, k_abs0 + k):
                return _RETURNED, k
            return _NEED_EXT, k
    return _BUDGET, k


@dataclass
class _RunTotals:
    """Mutable counters shared by multi-return drivers."""

    censored_events: int = 0
    singular_events: int = 0


class OrbitState:
    """Lazy orbit of a marked point plus a configuration under T x T_*.

    ``images[0]`` is the marked point's current position; ``images[1:]``
    track the configuration points (parallel to the realization's time-0
    array).  ``step`` counts applications of the transform since time 0,
    ``window_hi`` is the materialized time-0 frontier.
    """

    def __init__(self, t: Transform, lazy: LazyRealization, marked0: float,
                 use_numba: bool | None = None):
        if t.domain is not Side.HALF_LINE:
            raise DomainError("leftmost dynamics require a half-line transform")
        if t.kind not in (Kind.BOOLE_UNSIGNED, Kind.TRANSLATION):
            raise DomainError(f"no half-line engine for {t.kind}")
        self.t = t
        self.lazy = lazy
        self.marked0 = float(marked0)
        self.time0 = np.concatenate([[self.marked0], lazy.points])
        self.images = self.time0.copy()
        self.step = 0
        self.use_numba = _HAVE_NUMBA if use_numba is None else use_numba

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_config(cls, t: Transform, c: Configuration,
                    budget_hi: float | None = None, use_numba: bool | None = None) -> "OrbitState":
        """Orbit of a plain configuration; the marked point is its leftmost."""
        if c.window.side is not Side.HALF_LINE or c.window.lo != 0.0:
            raise WindowTooSmall("need a half-line window anchored at 0")
        if not c.points:
            raise EmptyConfiguration("cannot track an empty configuration")
        lazy = LazyRealization.from_config(c, budget_hi)
        lazy.points = lazy.points[1:]  # leftmost becomes the marked point
        return cls(t, lazy, c.points[0], use_numba)

    @classmethod
    def from_marked(cls, t: Transform, m: MarkedConfiguration,
                    budget_hi: float | None = None, use_numba: bool | None = None) -> "OrbitState":
        """Orbit of a marked sample; the mark is tracked separately."""
        c = m.config
        if c.window.side is not Side.HALF_LINE or c.window.lo != 0.0:
            raise WindowTooSmall("need a half-line window anchored at 0")
        return cls(t, LazyRealization.from_config(c, budget_hi), m.distinguished, use_numba)

    # -- spec-facing views ---------------------------------------------------

    @property
    def window_hi(self) -> float:
        return self.lazy.frontier

    @property
    def base(self) -> MarkedConfiguration:
        """Time-0 marked sample currently materialized."""
        pts = np.sort(self.time0[1:])
        cfg = Configuration(tuple(pts), Window(self.lazy.lo, self.lazy.frontier, self.lazy.side),
                            self.lazy.lam, self.lazy.root)
        return MarkedConfiguration(self.marked0, cfg)

    # -- internals -----------------------------------------------------------

    def _run_kernel(self, max_steps: int):
        t = self.t
        if t.kind is Kind.BOOLE_UNSIGNED:
            fsq = self.lazy.frontier * self.lazy.frontier
            runner = _boole_run_nb if self.use_numba else _boole_run_np
            return runner(self.images, self.step, max_steps, fsq)
        return _shift_run(t.displacement, self.images, self.step, max_steps,
                          self.lazy.frontier, t)

    def _replay(self, pts: np.ndarray, ksteps: int) -> np.ndarray:
        if pts.size == 0 or ksteps == 0:
            return pts
        if self.t.kind is Kind.BOOLE_UNSIGNED:
            replayer = _boole_replay_nb if self.use_numba else _boole_replay_np
            bad = replayer(pts, ksteps)
            if bad >= 0:
                raise SingularPoint("revealed point hit the singular set during replay",
                                    self.step, float(pts[bad]))
            return pts
        return pts + ksteps * self.t.displacement

    def _extend_to(self, required: float) -> None:
        """Materialize through ``required``, replaying new points to the
        current step and adding them to the tracked images."""
        new = self.lazy.ensure(required)
        if new.size:
            self.time0 = np.concatenate([self.time0, new])
            imgs = self._replay(new.copy(), self.step)
            self.images = np.concatenate([self.images, imgs])

    def _grow_for(self, level: float, extra_capacity: int = 0) -> None:
        k_target = self.step + max(extra_capacity, self.step, 64)
        self._extend_to(certified_frontier(self.t, level, k_target))

    def _marked_certified(self) -> bool:
        arg = int(np.argmin(self.images))
        if arg != 0:
            return False
        level = float(self.images[0])
        return self.lazy.frontier >= certified_frontier(self.t, level, self.step)

    # -- public dynamics -----------------------------------------------------

    def next_return(self, cap: int) -> int:
        """Advance to the next certified leftmost return of the marked point.

        Returns the number of steps taken (kappa for this segment, >= 1).
        Raises Censored(cap) after cap uncertified steps (the state stays
        advanced), SingularPoint on near-singular orbits, and
        WindowBudgetExceeded when certification would blow the window cap.
        """
        if cap < 1:
            raise ValueError("cap must be >= 1")
        taken = 0
        while taken < cap:
            status, ds = self._run_kernel(cap - taken)
            taken += ds
            self.step += ds
            if status == _RETURNED:
                return taken
            if status == _SINGULAR:
                raise SingularPoint("orbit hit the singular set", self.step)
            if status == _NEED_EXT:
                self._grow_for(float(self.images[0]))
                if self._marked_certified():
                    return taken
                # a newly revealed point undercut the mark; keep searching
        raise Censored(cap)

    def certify_min(self) -> float:
        """Certified minimum of the current (infinite-process) image."""
        # the required frontier is nondecreasing in the candidate level, so
        # one growth round certifies even if a revealed point takes over
        for _ in range(4):
            level = float(np.min(self.images))
            if self.lazy.frontier >= certified_frontier(self.t, level, self.step):
                return level
            self._grow_for(level)
        raise AssertionError("frontier certification did not converge")

    def re_anchor(self) -> float:
        """Make the current certified minimum the marked point (used after a
        censored segment).  Returns the new marked image."""
        level = self.certify_min()
        arg = int(np.argmin(self.images))
        if arg != 0:
            self.images[0], self.images[arg] = self.images[arg], self.images[0]
            self.time0[0], self.time0[arg] = self.time0[arg], self.time0[0]
            self.marked0 = float(self.time0[0])
        return level

    def prefetch(self, expected_steps: int) -> None:
        """Pre-materialize the frontier needed for roughly ``expected_steps``
        more steps, capped at half the window budget.  Revealing early is
        free (region-addressed content is materialization-order invariant)
        and avoids long mid-flight replays."""
        want = certified_frontier(self.t, 1.0, self.step + expected_steps)
        self._extend_to(min(want, self.lazy.budget_hi * 0.5))

    def advance(self, k: int) -> None:
        """Apply k plain suspension steps (no return search)."""
        for _ in range(k):
            status, _ = self._run_kernel(1)
            self.step += 1
            if status == _SINGULAR:
                raise SingularPoint("orbit hit the singular set", self.step)

    def ensure_complete(self, level: float) -> float:
        """Extend so the current image is fully known on (0, level]."""
        self._extend_to(certified_frontier(self.t, level, self.step))
        return level

    def snapshot(self, level: float, include_marked: bool = True) -> Configuration:
        """Configuration of the current image restricted to (0, level].

        Only valid up to the completeness level certified by
        :meth:`ensure_complete`.  The returned configuration carries a
        fresh snapshot stream: extending it samples new independent Poisson
        points, which is exact in law but leaves the original orbit.
        """
        imgs = self.images if include_marked else self.images[1:]
        pts = np.sort(imgs[imgs <= level])
        stream = self.lazy.root.child(_SNAP_TAG, self.step & 0xFFFFFFFF)
        return Configuration(tuple(pts), Window(0.0, level, Side.HALF_LINE),
                             self.lazy.lam, stream)


def ensure_window(c: Configuration, hi: float, budget_hi: float | None = None) -> Configuration:
    """Region-addressed pre-materialization of a configuration through ``hi``.

    Eager and lazy materialization agree point for point: this is the same
    content the orbit engine would reveal on demand.
    """
    lazy = LazyRealization.from_config(c, budget_hi)
    lazy.ensure(hi)
    pts = np.sort(lazy.points)
    w = Window(c.window.lo, lazy.frontier, c.window.side)
    return Configuration(tuple(pts), w, c.intensity, c.stream)
