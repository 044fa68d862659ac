import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poissonlab.errors import EmptyConfiguration, WindowTooSmall
from poissonlab.point_process import (
    Configuration,
    CylinderEvent,
    Window,
    config_from_json,
    config_to_json,
    count,
    cylinder_occurs,
    cylinder_probability,
    extend,
    leftmost,
    sample,
    sample_conditioned,
    sample_hat,
    sample_tilde,
)
from poissonlab.stats import chi_square_counts, ks_test
from poissonlab.streams import StreamKey
from poissonlab.transforms import Side

KEY = StreamKey(101)
W01 = Window(0.0, 1.0)


def fixture_config(points=(0.5, 2.0, 3.0), hi=4.0):
    return Configuration(points, Window(0.0, hi), 1.0, KEY)


class TestSample:
    def test_determinism(self):
        a = sample(1.0, Window(0.0, 10.0), StreamKey(7))
        b = sample(1.0, Window(0.0, 10.0), StreamKey(7))
        assert a.points == b.points

    def test_points_sorted_in_window(self):
        for seed in range(50):
            c = sample(2.0, Window(0.0, 5.0), StreamKey(seed))
            pts = np.array(c.points)
            assert np.all(np.diff(pts) > 0)
            assert np.all((pts > 0.0) & (pts <= 5.0))

    def test_full_line_window(self):
        c = sample(1.5, Window(-3.0, 3.0, Side.FULL_LINE), StreamKey(3))
        assert all(-3.0 < p <= 3.0 for p in c.points)

    def test_void_probability(self):
        n = 100_000
        empty = sum(
            not sample(1.0, W01, KEY.child(i)).points for i in range(n)
        )
        p = empty / n
        sigma = math.sqrt(math.exp(-1) * (1 - math.exp(-1)) / n)
        assert abs(p - math.exp(-1)) <= 3 * sigma

    def test_mean_count(self):
        n = 100_000
        gen_key = StreamKey(55)
        total = sum(len(sample(1.0, Window(0.0, 2.0), gen_key.child(i))) for i in range(n))
        mean = total / n
        assert abs(mean - 2.0) <= 3 * math.sqrt(2.0 / n)

    def test_counts_independent_across_disjoint_intervals(self):
        n = 100_000
        k = StreamKey(77)
        c1 = np.empty(n)
        c2 = np.empty(n)
        for i in range(n):
            c = sample(1.0, Window(0.0, 2.0), k.child(i))
            c1[i] = count(c, (0.0, 1.0))
            c2[i] = count(c, (1.0, 2.0))
        cov = float(np.mean(c1 * c2) - np.mean(c1) * np.mean(c2))
        # Var(N1*...) under independence: cov estimator sd ~ sqrt(lam^2(1+2lam)/n)-ish; 4 sigma with lam=1
        assert abs(cov) <= 4 * math.sqrt(3.0 / n)


class TestExtend:
    def test_points_preserved_verbatim(self):
        c = sample(1.0, Window(0.0, 2.0), StreamKey(8))
        e = extend(c, 5.0, StreamKey(8, (1,)))
        assert e.points[: len(c.points)] == c.points
        assert e.window.hi == 5.0
        assert all(p > 2.0 for p in e.points[len(c.points):])

    def test_rejects_non_growth(self):
        c = sample(1.0, Window(0.0, 2.0), StreamKey(8))
        with pytest.raises(ValueError):
            extend(c, 2.0, StreamKey(9))

    def test_total_count_is_poisson_of_union(self):
        n = 20_000
        key = StreamKey(31)
        counts = np.zeros(12, dtype=int)
        for i in range(n):
            c = sample(1.0, W01, key.child(i))
            e = extend(c, 2.0, key.child(i, 1))
            counts[min(len(e.points), 11)] += 1
        probs = [math.exp(-2.0) * 2.0 ** k / math.factorial(k) for k in range(11)]
        probs.append(1.0 - sum(probs))
        res = chi_square_counts(counts, probs)
        assert res.p_value > 0.01


class TestCountLeftmost:
    def test_count_basic(self):
        c = fixture_config()
        assert count(c, (1.0, 3.0)) == 2
        assert count(c, (0.0, 4.0)) == 3
        assert count(c, (3.0, 4.0)) == 0

    def test_count_empty_config(self):
        c = Configuration((), Window(0.0, 4.0), 1.0, KEY)
        assert count(c, (0.0, 4.0)) == 0

    def test_count_window_too_small(self):
        with pytest.raises(WindowTooSmall):
            count(fixture_config(), (3.0, 5.0))

    def test_half_open_boundaries(self):
        c = fixture_config()
        assert count(c, (0.5, 2.0)) == 1  # excludes 0.5, includes 2.0

    def test_leftmost_basic(self):
        assert leftmost(fixture_config((0.7, 1.1))) == 0.7

    def test_leftmost_empty(self):
        with pytest.raises(EmptyConfiguration):
            leftmost(Configuration((), Window(0.0, 2.0), 1.0, KEY))

    def test_leftmost_needs_anchored_half_line(self):
        c = Configuration((1.5,), Window(1.0, 2.0), 1.0, KEY)
        with pytest.raises(WindowTooSmall):
            leftmost(c)

    def test_leftmost_law(self):
        n = 100_000
        key = StreamKey(13)
        t1 = np.empty(n)
        for i in range(n):
            c = sample(1.0, Window(0.0, 16.0), key.child(i))
            while not c.points:  # ~e^-16, effectively never
                c = extend(c, c.window.hi * 2, key.child(i, 1))
            t1[i] = leftmost(c)
        band = float(np.mean((t1 > 1.0) & (t1 <= 2.0)))
        target = math.exp(-1.0) - math.exp(-2.0)
        assert abs(band - target) <= 3 * math.sqrt(target * (1 - target) / n)
        res = ks_test(t1, lambda x: 1.0 - math.exp(-max(x, 0.0)))
        assert res.p_value > 0.01


class TestConditional:
    def test_count_in_B_always_j(self):
        w = Window(0.0, 3.0)
        for j in (0, 1, 2, 5):
            for i in range(200):
                c = sample_conditioned((0.0, 1.0), j, 1.0, w, KEY.child(j, i))
                assert count(c, (0.0, 1.0)) == j

    def test_min_of_two_uniforms(self):
        n = 10_000
        key = StreamKey(99)
        mins = np.empty(n)
        for i in range(n):
            c = sample_conditioned((0.0, 1.0), 2, 1.0, Window(0.0, 2.0), key.child(i))
            in_b = [p for p in c.points if p <= 1.0]
            mins[i] = min(in_b)
        res = ks_test(mins, lambda t: 1.0 - (1.0 - min(max(t, 0.0), 1.0)) ** 2)
        assert res.p_value > 0.01

    def test_j_zero_is_poisson_off_B(self):
        n = 20_000
        key = StreamKey(45)
        counts = np.zeros(10, dtype=int)
        for i in range(n):
            c = sample_conditioned((0.0, 1.0), 0, 1.0, Window(0.0, 2.0), key.child(i))
            assert count(c, (0.0, 1.0)) == 0
            counts[min(count(c, (1.0, 2.0)), 9)] += 1
        probs = [math.exp(-1.0) / math.factorial(k) for k in range(9)]
        probs.append(1.0 - sum(probs))
        assert chi_square_counts(counts, probs).p_value > 0.01

    def test_hat_structure(self):
        w = Window(0.0, 3.0)
        for i in range(300):
            m = sample_hat((0.0, 1.0), 1, 1.0, w, KEY.child(7, i))
            assert 0.0 < m.distinguished <= 1.0
            assert count(m.config, (0.0, 1.0)) == 1

    def test_hat_independence(self):
        n = 20_000
        key = StreamKey(46)
        xs = np.empty(n)
        cs = np.empty(n)
        for i in range(n):
            m = sample_hat((0.0, 1.0), 1, 1.0, Window(0.0, 3.0), key.child(i))
            xs[i] = m.distinguished
            cs[i] = count(m.config, (1.0, 2.0))
        corr = np.corrcoef(xs, cs)[0, 1]
        assert abs(corr) <= 3.0 / math.sqrt(n)

    def test_tilde_structure(self):
        w = Window(0.0, 3.0)
        pts_all = []
        for i in range(3000):
            pts, c = sample_tilde((0.0, 1.0), 2, 1.0, w, KEY.child(8, i))
            assert len(pts) == 2
            assert count(c, (0.0, 1.0)) == 0
            pts_all.extend(pts)
        res = ks_test(np.array(pts_all), lambda t: min(max(t, 0.0), 1.0))
        assert res.p_value > 0.01


class TestCylinder:
    def test_exact_values(self):
        assert cylinder_probability(CylinderEvent((0.0, 1.0), (1,)), 1.0) == pytest.approx(
            math.exp(-1.0), abs=1e-12)
        assert cylinder_probability(CylinderEvent((0.0, 1.0, 2.0), (1, 2)), 1.0) == pytest.approx(
            math.exp(-2.0) / 2.0, abs=1e-12)
        assert cylinder_probability(CylinderEvent((0.0, 1.0, 2.0, 3.0), (0, 0, 0)), 1.0) == pytest.approx(
            math.exp(-3.0), abs=1e-12)

    def test_scales_with_intensity(self):
        # void probability over (0, 2] at lam = 1.5
        assert cylinder_probability(CylinderEvent((0.0, 2.0), (0,)), 1.5) == pytest.approx(
            math.exp(-3.0), abs=1e-15)

    def test_normalization_truncated(self):
        total = 0.0
        for n1 in range(13):
            for n2 in range(13):
                total += cylinder_probability(CylinderEvent((0.0, 1.0, 2.0), (n1, n2)), 1.0)
        assert abs(total - 1.0) < 1e-9

    def test_empirical_frequencies(self):
        n = 20_000
        key = StreamKey(222)
        ev1 = CylinderEvent((0.0, 1.0), (1,))
        ev2 = CylinderEvent((0.0, 1.0, 2.0), (1, 2))
        hits1 = hits2 = 0
        for i in range(n):
            c = sample(1.0, Window(0.0, 2.0), key.child(i))
            hits1 += cylinder_occurs(ev1, c)
            hits2 += cylinder_occurs(ev2, c)
        for hits, ev in ((hits1, ev1), (hits2, ev2)):
            p = cylinder_probability(ev, 1.0)
            assert abs(hits / n - p) <= 4 * math.sqrt(p * (1 - p) / n)

    def test_validation(self):
        with pytest.raises(ValueError):
            CylinderEvent((1.0, 2.0), (1,))  # must start at 0
        with pytest.raises(ValueError):
            CylinderEvent((0.0, 1.0), (1, 2))  # count arity


class TestSerialization:
    def test_round_trip(self):
        c = sample(2.0, Window(0.0, 4.0), StreamKey(12, (3,)))
        blob = json.dumps(config_to_json(c), sort_keys=True)
        c2 = config_from_json(json.loads(blob))
        assert c2.points == c.points
        assert c2.window == c.window
        assert c2.intensity == c.intensity
        assert c2.stream == c.stream

    def test_validation_rejects_disorder(self):
        with pytest.raises(ValueError):
            Configuration((2.0, 1.0), Window(0.0, 4.0), 1.0, KEY)
        with pytest.raises(ValueError):
            Configuration((5.0,), Window(0.0, 4.0), 1.0, KEY)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1),
       st.floats(min_value=0.2, max_value=4.0),
       st.floats(min_value=0.2, max_value=4.0))
def test_count_additivity_property(seed, a_frac, b_frac):
    c = sample(1.0, Window(0.0, 8.0), StreamKey(seed))
    a = min(a_frac, b_frac)
    b = max(a_frac, b_frac) + 0.5
    mid = (a + b) / 2.0
    assert count(c, (a, mid)) + count(c, (mid, b)) == count(c, (a, b))
