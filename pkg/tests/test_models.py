from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zlab.models import IntLineModel, TabulatedRModel, get_model

M = IntLineModel()
e = IntLineModel.embed
carriers = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
times = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def test_rho_hat_values():
    assert M.rho_hat(0.25, 0.25) == 0
    assert M.rho_hat(0.0, 1.0) == 1
    assert M.rho_hat(e(0), e(1)) == 0.25


def test_embedding_values():
    assert e(0) == 0.5
    assert e(1) == 0.75
    assert e(math.inf) == 1.0 and e(-math.inf) == 0.0
    assert M.real(e(3.0)) == pytest.approx(3.0)


def test_boundary_distance_values():
    assert M.boundary_distance(0.5) == 0.5
    assert M.boundary_distance(0.0) == 0
    assert M.boundary_distance(e(2)) == pytest.approx(1 / 6, abs=1e-15)


def test_action_values():
    assert M.act(0, 0.3) == 0.3
    assert M.act(1, e(0)) == 0.75
    assert M.act(-3, e(3)) == 0.5
    assert M.act(5, 0.0) == 0.0 and M.act(-5, 1.0) == 1.0


def test_zset_homotopy_values():
    assert M.zset_homotopy(0.3, 0.0) == 0.3
    assert M.zset_homotopy(0.1, 1.0) == 0.5
    assert M.zset_homotopy(0.5, 0.7) == 0.5


def test_r_values():
    assert M.r_value(1) == 2
    assert M.r_value(2) == 3
    assert M.r_value(0) == 1


def test_r_value_matches_boundary_distance_oracle():
    # r(g) is the unique n with 1/2^n <= rho(g.x0, boundary) < 1/2^(n-1)
    for g in range(-300, 301):
        d = 1.0 / (2 * (1 + abs(g)))
        n = M.r_value(g)
        assert 2.0 ** -n <= d < 2.0 ** -(n - 1)
        assert base_r_value(g) == n


def base_r_value(g):
    # the generic definition through boundary_distance
    return super(IntLineModel, M).r_value(g)


def test_elements_with_r_partition():
    seen = []
    for n in range(1, 8):
        for g in M.elements_with_r(n):
            assert M.r_value(g) == n
            seen.append(g)
    assert sorted(seen) == [g for g in range(-63, 64) if g != 0]


def test_validation_errors():
    with pytest.raises(ValueError):
        M.rho_hat(-0.1, 0.5)
    with pytest.raises(ValueError):
        M.act(0.5, 0.5)
    with pytest.raises(ValueError):
        M.zset_homotopy(0.5, 1.5)
    with pytest.raises(ValueError):
        get_model("torus")


def test_tabulated_model_overrides_only_table():
    T = TabulatedRModel({1: 5})
    assert T.r_value(1) == 5
    assert T.r_value(2) == 3
    with pytest.raises(ValueError):
        TabulatedRModel({1: 0})


def test_sample_is_seeded_and_plain_float():
    a = M.sample(np.random.default_rng(3), 5)
    b = M.sample(np.random.default_rng(3), 5)
    assert a == b and all(type(x) is float for x in a)


def test_interval_and_translates():
    C = M.interval(-1, 1)
    assert C.hull == (e(-1), e(1))
    assert M.set_diameter(C) == pytest.approx(0.5)
    assert M.elements_meeting(C, C) == [-2, -1, 0, 1, 2]


def test_translate_null_bound_dominates_sampled():
    C = M.interval(-1, 1)
    for n in range(4, 10):
        bound = M.translate_null_bound(C, n)
        for g in M.elements_with_r(n):
            assert M.set_diameter(M.translate_set(g, C)) <= bound + 1e-15


@given(carriers, times)
def test_homotopy_stays_in_carrier(u, t):
    v = M.zset_homotopy(u, t)
    assert 0.0 <= v <= 1.0


@given(carriers, times)
def test_homotopy_is_interior_at_positive_time(u, t):
    if t > 0:
        assert not M.is_boundary(M.zset_homotopy(u, t))


@given(carriers, st.integers(min_value=1, max_value=20))
def test_homotopy_is_slowed(u, n):
    # points at boundary distance >= 2^-n stay put up to time 2^-n
    t = 2.0 ** -n
    if M.boundary_distance(u) >= t:
        for s in (t / 3, t / 2, t):
            assert M.zset_homotopy(u, s) == u


@given(carriers)
def test_homotopy_ends_at_basepoint(u):
    assert M.zset_homotopy(u, 1.0) == 0.5


@given(carriers, st.integers(-50, 50), st.integers(-50, 50))
def test_action_is_a_group_action(u, g, h):
    assert M.act(g, M.act(h, u)) == pytest.approx(M.act(g + h, u), abs=1e-12)


@settings(max_examples=200)
@given(carriers, carriers, carriers)
def test_rho_hat_is_a_metric(a, b, c):
    assert M.rho_hat(a, b) == M.rho_hat(b, a)
    assert M.rho_hat(a, c) <= M.rho_hat(a, b) + M.rho_hat(b, c) + 1e-15
