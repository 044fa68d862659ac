import math

import numpy as np
import pytest

from poissonlab.dynamics import (
    in_X0,
    induced_step,
    kappa,
    leftmost_guarantee,
    leftmost_map,
    pi0,
    pi0_inv,
    sample_mu0,
    suspend,
    union_mark,
    z2_invariant_event,
)
from poissonlab.engine import OrbitState, ensure_window
from poissonlab.errors import (
    Censored,
    DomainError,
    EmptyConfiguration,
    NotInX0,
    SingularPoint,
    WindowBudgetExceeded,
    WindowTooSmall,
)
from poissonlab.point_process import (
    Configuration,
    MarkedConfiguration,
    Window,
    count,
    leftmost,
    sample,
)
from poissonlab.stats import chi_square_counts
from poissonlab.streams import StreamKey
from poissonlab.transforms import (
    Side,
    apply,
    apply_iter,
    boole_signed,
    boole_unsigned,
    random_walk,
    translation,
)

KEY = StreamKey(303)
BU = boole_unsigned()
TR = translation(1.0)


def cfg(points, hi=4.0, lam=1.0, key=KEY):
    return Configuration(points, Window(0.0, hi), lam, key)


class TestSuspend:
    def test_translation(self):
        assert suspend(TR, cfg((0.5, 2.0))) == [1.5, 3.0]

    def test_boole_unsigned_folds(self):
        out = suspend(BU, cfg((0.6, 0.9)))
        assert out == pytest.approx([0.211111, 1.066667], abs=1e-6)

    def test_intertwining_all_transforms(self):
        # factor map commutes with the joint dynamics, exactly on doubles
        rng = np.random.default_rng(5)
        half = [(BU, Window(0.0, 6.0)), (TR, Window(0.0, 6.0))]
        full = [(boole_signed(), Window(-6.0, 6.0, Side.FULL_LINE)),
                (random_walk(), Window(-6.0, 6.0, Side.FULL_LINE))]
        for seed in range(250):
            for t, w in half + full:
                c = sample(1.0, w, StreamKey(1000 + seed))
                lo, hi = w.lo, w.hi
                x = float(hi - rng.random() * (hi - lo))
                if x in c.points:
                    continue
                try:
                    lhs = suspend(t, union_mark(x, c))
                    rhs = sorted([apply(t, x)] + suspend(t, c))
                except SingularPoint:
                    continue
                assert lhs == rhs


class TestUnionMark:
    def test_insert(self):
        assert union_mark(0.5, cfg((2.0, 3.0))).points == (0.5, 2.0, 3.0)

    def test_set_semantics(self):
        c = cfg((2.0, 3.0))
        assert union_mark(2.0, c).points == (2.0, 3.0)

    def test_window_too_small(self):
        with pytest.raises(WindowTooSmall):
            union_mark(9.0, cfg((2.0,)))


class TestGapEvent:
    def test_in_X0(self):
        assert in_X0(MarkedConfiguration(1.0, cfg((2.0, 3.0))))
        assert not in_X0(MarkedConfiguration(1.0, cfg((0.5, 3.0))))

    def test_in_X0_window_check(self):
        with pytest.raises(WindowTooSmall):
            in_X0(MarkedConfiguration(9.0, cfg((2.0,))))

    def test_sample_mu0_always_in_X0(self):
        for i in range(1000):
            assert in_X0(sample_mu0(1.0, KEY.child(1, i), 6.0))

    def test_sample_mu0_mark_tail(self):
        n = 100_000
        hits = sum(sample_mu0(1.0, KEY.child(2, i), 0.5).distinguished > 1.0
                   for i in range(n))
        target = math.exp(-1.0)
        assert abs(hits / n - target) <= 3 * math.sqrt(target * (1 - target) / n)

    def test_pi0_pushforward_poisson_counts(self):
        n = 20_000
        counts = np.zeros(9, dtype=int)
        for i in range(n):
            m = sample_mu0(1.0, KEY.child(3, i), 6.0)
            counts[min(count(pi0(m), (0.0, 1.0)), 8)] += 1
        probs = [math.exp(-1.0) / math.factorial(k) for k in range(8)]
        probs.append(1.0 - sum(probs))
        assert chi_square_counts(counts, probs).p_value > 0.01

    def test_pi0_roundtrips(self):
        assert pi0_inv(cfg((0.5, 2.0, 3.0))).distinguished == 0.5
        assert pi0_inv(cfg((0.5, 2.0, 3.0))).config.points == (2.0, 3.0)
        for i in range(1000):
            c = sample(1.0, Window(0.0, 6.0), KEY.child(4, i))
            if not c.points:
                continue
            assert pi0(pi0_inv(c)).points == c.points
            m = sample_mu0(1.0, KEY.child(5, i), 6.0)
            back = pi0_inv(pi0(m))
            assert back.distinguished == m.distinguished
            assert back.config.points == m.config.points

    def test_pi0_errors(self):
        with pytest.raises(NotInX0):
            pi0(MarkedConfiguration(1.0, cfg((0.5,))))
        with pytest.raises(EmptyConfiguration):
            pi0_inv(cfg(()))


class TestKappa:
    def test_translation_always_one(self):
        for i in range(200):
            c = sample(1.0, Window(0.0, 8.0), KEY.child(6, i))
            if not c.points:
                continue
            assert kappa(TR, c, 100) == 1

    def test_fixture_one_step(self):
        assert kappa(BU, cfg((0.5, 3.0))) == 1  # T(0.5)=1.5 < T(3)=2.6667

    def test_fixture_two_steps(self):
        assert kappa(BU, cfg((0.6, 0.9))) == 2

    def test_kappa_at_least_one(self):
        for i in range(300):
            c = sample(1.0, Window(0.0, 8.0), KEY.child(7, i))
            if not c.points:
                continue
            try:
                assert kappa(BU, c, 50_000) >= 1
            except Censored:
                pass

    def test_censored_carries_cap(self):
        with pytest.raises(Censored) as err:
            kappa(BU, cfg((0.01, 0.5)), cap=10)  # 0.01 jumps to ~100
        assert err.value.cap == 10

    def test_rejects_full_line(self):
        with pytest.raises(DomainError):
            kappa(boole_signed(), cfg((0.5, 3.0)))

    def test_empty_config(self):
        with pytest.raises(EmptyConfiguration):
            kappa(BU, cfg(()))

    def test_singular_orbit(self):
        with pytest.raises(SingularPoint):
            kappa(BU, cfg((1.0, 3.0)))  # 1 maps to 0

    def test_window_budget(self):
        with pytest.raises(WindowBudgetExceeded):
            kappa(BU, cfg((0.001, 0.5)), cap=100_000, budget=32.0)

    def test_lazy_exactness_w_vs_2w(self):
        # pre-materializing the next region never changes kappa or content
        for seed in range(1000):
            c1 = sample(1.0, Window(0.0, 8.0), StreamKey(9000 + seed))
            if not c1.points:
                continue
            c2 = ensure_window(c1, 16.0)
            assert c2.points[: len(c1.points)] == c1.points
            try:
                k1 = kappa(BU, c1, 20_000)
            except Censored:
                continue
            assert k1 == kappa(BU, c2, 20_000)


class TestLeftmostGuarantee:
    def test_spec_values(self):
        assert leftmost_guarantee(BU, 2.0, 3) == 5.0
        assert leftmost_guarantee(translation(0.5), 1.0, 4) == 3.0
        assert leftmost_guarantee(random_walk(), 0.0, 2) == 3.0

    def test_threshold_floor(self):
        assert leftmost_guarantee(BU, 0.2, 1) == 2.0  # max(L, 1) + 1


class TestLeftmostMap:
    def test_translation_example(self):
        out = leftmost_map(TR, cfg((0.5, 2.0)))
        assert out.points == (1.5, 3.0)

    def test_definition_identity(self):
        for i in range(200):
            c = sample(1.0, Window(0.0, 8.0), KEY.child(8, i))
            if not c.points:
                continue
            try:
                k = kappa(BU, c, 50_000)
                out = leftmost_map(BU, c, 50_000)
            except Censored:
                continue
            assert leftmost(out) == apply_iter(BU, leftmost(c), k)

    def test_invariance_smoke(self):
        n = 10_000
        hits = censored = 0
        for i in range(n):
            c = sample(1.0, Window(0.0, 8.0), KEY.child(9, i))
            if not c.points:
                continue
            try:
                out = leftmost_map(BU, c, 40_000)
            except Censored:
                censored += 1
                continue
            hits += count(out, (0.0, 1.0)) == 0
        eff = n - censored
        target = math.exp(-1.0)
        assert abs(hits / eff - target) <= 4 * math.sqrt(target * (1 - target) / eff)


class TestInducedStep:
    def test_translation_moves_mark_one_step(self):
        m = MarkedConfiguration(1.0, cfg((2.0, 3.0)))
        out = induced_step(TR, m, 100)
        assert out.distinguished == 2.0
        assert in_X0(out)

    def test_conjugacy_and_return_match(self):
        censored = 0
        for i in range(300):
            m = sample_mu0(1.0, KEY.child(10, i), 6.0)
            try:
                stepped = induced_step(BU, m, 100_000)
                via = leftmost_map(BU, pi0(m), 100_000)
                k_union = kappa(BU, pi0(m), 100_000)
                k_marked = OrbitState.from_marked(BU, m).next_return(100_000)
            except Censored:
                censored += 1
                continue
            assert pi0(stepped).points == via.points
            assert k_union == k_marked
        assert censored < 15

    def test_requires_gap_event(self):
        with pytest.raises(NotInX0):
            induced_step(BU, MarkedConfiguration(1.0, cfg((0.5,))), 100)


class TestZ2Event:
    GRID = [(m, n) for m in range(-2, 3) for n in range(-2, 3)]

    def full_cfg(self, points, half=7.0):
        return Configuration(points, Window(-half, half, Side.FULL_LINE), 1.0, KEY)

    def test_gap_preserved(self):
        m = MarkedConfiguration(0.0, self.full_cfg((-3.0, 2.0)))
        assert z2_invariant_event(1.0, math.sqrt(2.0), 1.0, m, [(1, 1)]) is True
        assert z2_invariant_event(1.0, math.sqrt(2.0), 1.0, m, self.GRID) is True

    def test_occupied_stays_occupied(self):
        m = MarkedConfiguration(0.0, self.full_cfg((0.5,)))
        assert z2_invariant_event(1.0, math.sqrt(2.0), 1.0, m, self.GRID) is False

    def test_window_requirement(self):
        m = MarkedConfiguration(0.0, self.full_cfg((0.5,), half=2.0))
        with pytest.raises(WindowTooSmall):
            z2_invariant_event(1.0, math.sqrt(2.0), 1.0, m, self.GRID)

    def test_empirical_gap_probability(self):
        n = 3000
        hits = 0
        for i in range(n):
            c = sample(1.0, Window(-7.0, 7.0, Side.FULL_LINE), KEY.child(11, i))
            m = MarkedConfiguration(0.0, c)
            hits += z2_invariant_event(1.0, math.sqrt(2.0), 1.0, m, self.GRID)
        target = math.exp(-2.0)
        assert abs(hits / n - target) <= 4 * math.sqrt(target * (1 - target) / n)
