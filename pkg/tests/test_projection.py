import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from adavol import project
from oracles import project_bisect

vectors = st.integers(1, 4).flatmap(lambda d: arrays(np.float64, d, elements=st.floats(-2, 2)))
caps = st.floats(0.05, 1.0)


@pytest.mark.parametrize("v,cap,expected", [
    ((0.2, 0.3), 0.99, (0.2, 0.3)),
    ((-0.1, 0.5), 0.99, (0.0, 0.5)),
    ((0.8, 0.8), 1.0, (0.5, 0.5)),
])
def test_examples(v, cap, expected):
    np.testing.assert_allclose(project(v, cap), expected, atol=1e-15)


def test_one_dimensional():
    assert project([1.7], 0.99)[0] == pytest.approx(0.99)
    assert project([-3.0], 0.99)[0] == 0.0


@given(vectors, caps)
def test_feasible_and_matches_bisection(v, cap):
    x = project(v, cap)
    assert np.all(x >= 0) and x.sum() <= cap + 1e-12
    np.testing.assert_allclose(x, project_bisect(v, cap), atol=1e-10)


@given(vectors, caps)
def test_idempotent(v, cap):
    x = project(v, cap)
    np.testing.assert_allclose(project(x, cap), x, atol=1e-15)


@given(st.integers(1, 3).flatmap(lambda d: arrays(np.float64, d, elements=st.floats(-1, 1.5))), caps)
def test_no_closer_lattice_point(v, cap):
    x = project(v, cap)
    best = np.sum((x - v) ** 2)
    step = 1e-3
    offsets = np.array(list(itertools.product((-2, -1, 0, 1, 2), repeat=len(v)))) * step
    cand = x + offsets
    feas = np.all(cand >= 0, axis=1) & (cand.sum(axis=1) <= cap)
    dist = np.sum((cand[feas] - v) ** 2, axis=1)
    assert np.all(dist >= best - 1e-12)


def test_cap_must_be_positive():
    with pytest.raises(ValueError):
        project([0.1], 0.0)
