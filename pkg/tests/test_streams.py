import numpy as np
import pytest

from poissonlab.streams import StreamKey


def test_same_key_same_draws():
    a = StreamKey(123, (1, 2)).generator().random(8)
    b = StreamKey(123, (1, 2)).generator().random(8)
    assert np.array_equal(a, b)


def test_child_paths_differ():
    root = StreamKey(9)
    draws = {tuple(root.child(i).generator().random(4)) for i in range(32)}
    assert len(draws) == 32
    assert root.child(1, 2) != root.child(1).child(3)
    assert root.child(1).child(2) == root.child(1, 2)


def test_children_look_independent():
    root = StreamKey(2024)
    xs = np.array([root.child(i).generator().random() for i in range(2000)])
    # crude: uniform mean/variance within 5 sigma
    assert abs(xs.mean() - 0.5) < 5 * (1.0 / np.sqrt(12 * 2000))
    corr = np.corrcoef(xs[:-1], xs[1:])[0, 1]
    assert abs(corr) < 5 / np.sqrt(2000)


def test_json_round_trip():
    k = StreamKey(7, (3, 0, 12))
    assert StreamKey.from_json(k.to_json()) == k


def test_validation():
    with pytest.raises(ValueError):
        StreamKey(-1)
    with pytest.raises(ValueError):
        StreamKey(3, (-2,))
