"""Named substream derivation: disjoint, deterministic, order-sensitive."""

import numpy as np
import pytest

from fedmulti.streams import substream


def test_same_names_same_stream():
    a = substream(7, "sampling", 3).random(16)
    b = substream(7, "sampling", 3).random(16)
    assert np.array_equal(a, b)


def test_different_names_differ():
    draws = {
        name: tuple(substream(7, *name).random(4))
        for name in [("sampling", 0), ("sampling", 1), ("scheduler", 0), ("scheduler",)]
    }
    values = list(draws.values())
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            assert values[i] != values[j]


def test_name_order_matters():
    a = tuple(substream(0, "a", "b").random(4))
    b = tuple(substream(0, "b", "a").random(4))
    assert a != b


def test_master_seed_separates():
    a = tuple(substream(1, "x").random(4))
    b = tuple(substream(2, "x").random(4))
    assert a != b


def test_negative_parts_rejected():
    with pytest.raises(ValueError):
        substream(-1, "x")
    with pytest.raises(ValueError):
        substream(3, -2)
