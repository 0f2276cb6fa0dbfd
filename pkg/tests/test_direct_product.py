from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zlab.direct_product import JoinCompactification as JC
from zlab.direct_product import (JoinPoint, ProductNullChecker, ProductPoint, ProperMap, ProperMetric, build_proper_metric,
                                 canonical_cover, cover_count, parse_join, product_cover_contains, reparam_hat,
                                 reproduce_counterexample, variation_R)
from zlab.models import IntLineModel

e = IntLineModel.embed
INF = math.inf
LINE = IntLineModel()


# proper metric


def test_proper_metric_values():
    metric = ProperMetric(LINE)
    assert metric.dist(0.5, 0.5) == 0
    for n in (1, 2, 5, 100):
        # gauge 2|e(n) - 1/2| = n / (1 + n), and h^-1 of that is n
        expected = math.hypot(n / (2 * (1 + n)), n)
        assert metric.radius(e(n)) == pytest.approx(expected, rel=1e-12)
        assert float(metric.radius_of_real(n)) == pytest.approx(expected, rel=1e-12)


def test_proper_metric_is_unbounded_and_monotone():
    metric = ProperMetric(LINE)
    radii = [metric.radius(e(float(n))) for n in range(0, 2000, 50)]
    assert all(a < b for a, b in zip(radii, radii[1:]))
    assert metric.radius(1.0 - 1e-12) > 1e10
    assert metric.real_of_radius(float(metric.radius_of_real(7.0))) == pytest.approx(7.0, rel=1e-12)


@settings(max_examples=200)
@given(st.floats(0.001, 0.999), st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_proper_metric_axioms(a, b, c):
    metric = ProperMetric(LINE)
    assert metric.dist(a, b) == metric.dist(b, a)
    assert metric.dist(a, c) <= metric.dist(a, b) + metric.dist(b, c) + 1e-9


# the proper map p


def test_p_values(join):
    p = join.proper_x
    assert p(0.5) == 0.0
    assert p(0.0) == INF
    r1 = float(p.radii[1])
    ds = np.linspace(0, r1, 101)
    vals = p.of_radius(ds)
    assert vals[0] == 0 and vals[-1] == 1.0
    assert np.all((vals >= 0) & (vals <= 1)) and np.all(np.diff(vals) > 0)


def test_p_shell_brackets(join):
    from zlab.verify import check_proper_map

    rep = check_proper_map(join, imax=12, boundary_samples=4, time_samples=50)
    assert rep["shell_violations"] == 0
    assert rep["R_p_C1"]["R"] <= 2.0


def test_variation_values(join):
    p = join.proper_x
    assert variation_R(p, (0.0, 0.0), range(-50, 51))["R"] == 0.0
    c1 = variation_R(p, (-0.5, 0.5), range(-200, 201))
    assert c1["R"] <= 2.0 and c1["k_C"] == 1
    pair = variation_R(p, (-0.5, 1.5), range(-200, 201))
    assert pair["k_C"] == 2 and pair["R"] <= 4.0
    assert cover_count((-1.0, 1.0)) == 3


def test_proper_map_json_round_trip(join):
    p2 = ProperMap.from_json(join.proper_x.to_json(), IntLineModel())
    assert np.array_equal(p2.radii, join.proper_x.radii)
    assert np.array_equal(p2.times, join.proper_x.times)
    with pytest.raises(ValueError):
        ProperMap(join.proper_x.metric, [1.0, 0.5], [1.0, 0.5, 0.25])


def test_xi_knots(join):
    p = join.proper_x
    assert p.xi(1.0) == 1.0 and p.xi(0.0) == 0.0
    assert p.xi(1 / 3) == p.times[3]
    assert p.xi_unshifted(1 / 3) == p.times[2]


def test_alpha_hat_values(join):
    p = join.proper_x
    for b in (0.0, 1.0):
        assert p(p.alpha_hat(b, 1.0)) == 0.0
        assert 1.0 <= p(p.alpha_hat(b, 0.5)) <= 4.0


def test_alpha_prime_values(join):
    p = join.proper_x
    for b in (0.0, 1.0):
        assert p.alpha_prime(b, 0.0) == 0.5
        assert 8 < p(p.alpha_prime(b, 9.0)) < 12
        assert p.alpha_prime(b, INF) == b
    for t in (0.0, 1.0, 7.5, 1e6):
        assert p.alpha_prime(0.5, t) == 0.5


@settings(max_examples=300, deadline=None)
@given(st.floats(0.01, 1.0), st.sampled_from([0.0, 1.0]))
def test_alpha_hat_bracket(join, t, b):
    v = join.proper_x(join.proper_x.alpha_hat(b, t))
    assert 1 / t - 1 <= v <= 1 / t + 2


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 90.0), st.sampled_from([0.0, 1.0]))
def test_alpha_prime_bracket(join, s, b):
    v = join.proper_x(join.proper_x.alpha_prime(b, s))
    assert s - 1 < v < s + 3


def test_reparam_hat_matches_proper_map(join):
    p = join.proper_x
    hat = reparam_hat(LINE.zset_homotopy, p.times)
    raw = reparam_hat(LINE.zset_homotopy, p.times, unshifted=True)
    for t in np.linspace(0.0, 1.0, 41):
        for b in (0.0, 0.3, 1.0):
            assert hat(b, t) == p.alpha_hat(b, t)
            assert raw(b, t) == p.alpha_hat(b, t, unshifted=True)


def test_reparam_hat_rejects_bad_times():
    for times in ([], [0.9, 0.5], [1.0, 0.5, 0.5], [1.0, 0.5, 0.0]):
        with pytest.raises(ValueError):
            reparam_hat(LINE.zset_homotopy, times)


def test_build_proper_metric():
    metric = build_proper_metric(LINE)
    assert isinstance(metric, ProperMetric)
    assert metric.dist(0.5, 0.5) == 0


def test_unshifted_knots_break_the_bracket(join):
    # the unshifted time change misses [1/t - 1, 1/t + 2] somewhere on a grid
    p = join.proper_x
    bad = sum(not (1 / t - 1 <= p(p.alpha_hat(0.0, t, unshifted=True)) <= 1 / t + 2)
              for t in np.linspace(0.05, 1.0, 100))
    assert bad > 0


# join points, slopes and neighborhoods


def test_join_point_identifications():
    assert JoinPoint(0.0, 1.0, 0.0) == JoinPoint(0.0, None, 0.0)
    assert JoinPoint(0.0, 1.0, INF) == JoinPoint(None, 1.0, INF)
    assert JoinPoint(0.0, 1.0, 2.0) != JoinPoint(1.0, 1.0, 2.0)
    assert parse_join("xbar=0|ybar=1|mu=0.5") == JoinPoint(0.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        JoinPoint(None, 1.0, 0.5)
    with pytest.raises(ValueError):
        JoinPoint(0.0, 1.0, -1.0)


def test_slope_values(join):
    p = join.proper_x
    assert join.slope(0.5, 0.5) == INF
    x2 = e(p.metric.real_of_radius(float(p.radii[2])))
    y1 = e(p.metric.real_of_radius(float(p.radii[1])))
    assert join.slope(x2, y1) == pytest.approx(0.5, rel=1e-9)
    assert join.slope(y1, 0.5) == 0.0


def test_nbhd_values(join):
    p = join.proper_x
    eps = 0.2
    # rho(x, xbar) = eps / 2 and slope eps / 2
    x = eps / 2
    px = p(x)
    target_q = px * eps / 2
    y = e(p.metric.real_of_radius(float(np.interp(target_q, np.arange(p.imax + 1), p.radii))))
    assert join.slope(x, y) == pytest.approx(eps / 2, rel=1e-6)
    assert join.nbhd_contains(JoinPoint(0.0, None, 0.0), eps, ProductPoint(x, y))
    # 1 / mu equal to eps exactly fails the strict inequality
    assert not join.nbhd_contains(JoinPoint(None, 1.0, INF), 0.5, JoinPoint(0.0, 1.0, 2.0))
    center = JoinPoint(0.0, 1.0, 1.0)
    assert join.nbhd_contains(center, 0.3, JoinPoint(0.0, 1.0, 1.2))
    assert not join.nbhd_contains(center, 0.3, JoinPoint(0.0, 1.0, 1.3))
    assert not join.nbhd_contains(center, 0.3, JoinPoint(0.0, None, 0.0))
    with pytest.raises(ValueError):
        join.nbhd_contains(center, 1.5, JoinPoint(0.0, 1.0, 1.2))


def test_check_point_rejects_mixed_points(join):
    with pytest.raises(ValueError):
        join.check_point(ProductPoint(0.0, 0.5))
    with pytest.raises(ValueError):
        join.check_point(JoinPoint(0.3, None, 0.0))


# rays and homotopies


def test_slope_interval_values():
    lo, hi = JC.slope_interval(1.0, 10.0)
    r2 = math.sqrt(2)
    assert lo == pytest.approx((10 - 2 * r2) / (10 + 3 * r2), rel=1e-14)
    assert hi == pytest.approx((10 + 3 * r2) / (10 - 2 * r2), rel=1e-14)
    assert (round(lo, 5), round(hi, 5)) == (0.50353, 1.98599)
    with pytest.raises(ValueError):
        JC.slope_interval(1.0, 2.0)


def test_ray_values(join):
    z = JoinPoint(0.0, None, 0.0)
    for t in (0.0, 3.0, 50.0):
        assert join.ray_gamma_prime(z, t).y == 0.5
    inner = ProductPoint(0.2, 0.9)
    assert join.ray_gamma_prime(inner, 0.0) == join.base


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 20.0), st.floats(3.0, 60.0), st.sampled_from([0.0, 1.0]), st.sampled_from([0.0, 1.0]))
def test_ray_slope_inside_interval(join, mu, k, xb, yb):
    t = k * math.sqrt(mu * mu + 1)
    z = join.ray_gamma_prime(JoinPoint(xb, yb, mu), t)
    lo, hi = join.slope_interval(mu, t)
    assert lo < join.slope(z.x, z.y) < hi


def test_gamma_values(join):
    z = JoinPoint(None, 1.0, INF)
    assert join.homotopy_gamma(z, 0.0) == z
    assert join.homotopy_gamma(z, 1.0) == join.base
    out = join.homotopy_gamma(z, 0.5)
    assert out == ProductPoint(0.5, join.beta_prime(1.0, 1.0))
    assert join.is_interior(out)
    assert join.homotopy_gamma(ProductPoint(0.3, 0.6), 1.0) == join.base


def test_gamma_homotopy_sweep(join):
    from zlab.verify import check_gamma_homotopy

    assert check_gamma_homotopy(join, samples=200, steps=10)["pass"]


def test_product_zset_homotopy_values(join):
    assert join.product_zset_homotopy(0.2, 0.0, 0.0) == (0.2, 0.0)
    assert join.product_zset_homotopy(0.2, 0.0, 1.0) == (0.5, 0.5)
    x, y = join.product_zset_homotopy(0.0, 1.0, 0.25)
    assert 0 < x < 1 and 0 < y < 1


def test_product_action_values(join):
    z = JoinPoint(0.0, 1.0, 0.7)
    assert join.extend_action_product(0, 0, z) == z
    assert join.extend_action_product(3, -2, z) == JoinPoint(0.0, 1.0, 0.7)
    assert join.extend_action_product(3, 0, JoinPoint(1.0, None, 0.0)) == JoinPoint(1.0, None, 0.0)
    assert join.extend_action_product(1, 2, ProductPoint(0.5, 0.5)) == ProductPoint(e(1), e(2))


# the product-topology counterexample


def test_product_cover_sets():
    xs = np.linspace(-1, 1, 21)
    assert not any(product_cover_contains(i, xs, 0.0) for i in range(4))
    assert product_cover_contains(0, [0.0, 0.7], 1e6)
    with pytest.raises(ValueError):
        product_cover_contains(4, xs, 0.0)


def test_counterexample_values(join):
    rep = reproduce_counterexample(100, 0.1, join)
    assert rep["product_never_fits"]
    assert rep["n0"] == 15 and rep["n0_negative"] == -15
    assert rep["pass"]
    # oracle: q(n) grows without bound while p stays bounded on C
    pmax = rep["p_max_on_C"]
    q = join.proper_y.of_real(np.arange(1, 101, dtype=float))
    first = int(np.argmax(q > pmax / 0.1)) + 1
    assert first <= 15
    with pytest.raises(ValueError):
        reproduce_counterexample(0)


# the product null condition


def test_certificate_values(join):
    cert = ProductNullChecker(join, (-1.0, 1.0), (-1.0, 1.0), 0.1).certificate(300)
    assert (cert["R_p"], cert["R_q"]) == (6.0, 6.0)
    assert cert["growth_threshold"] == pytest.approx(2640.0)
    assert (cert["J"], cert["K"], cert["P_J"], cert["Q_K"]) == (2641.0, 19.0, 26435.0, 215.0)


def test_gamma_rectangles_and_size(join):
    chk = ProductNullChecker(join, (-1.0, 1.0), (-1.0, 1.0), 0.1)
    rects = chk.gamma_rectangles(chk.certificate(300))
    assert rects == [(2642, 26436), (216, 20)]
    # brute-force count of the union on a shrunken copy checks the formula
    small = [(3, 7), (5, 2)]
    brute = sum(1 for g in range(-9, 10) for h in range(-9, 10) if chk.in_gamma(small, g, h))
    assert chk.gamma_size(small) == brute
    assert chk.gamma_size(rects) == 279_433_805


def _cover_element(cover, k):
    for kind in ("zero", "inf", "mid"):
        items = getattr(cover, kind)
        if k < len(items):
            return kind, items[k]
        k -= len(items)
    n = int(round((cover.box_hi - cover.box_lo) / cover.box_step))
    return "box", divmod(k, n)


def test_fit_against_cloud_membership(join):
    chk = ProductNullChecker(join, (-1.0, 1.0), (-1.0, 1.0), 0.1)
    cert = chk.certificate(300)
    rects = chk.gamma_rectangles(cert)
    cover = canonical_cover(0.1, chk._box_real(cert))
    rng = np.random.default_rng(7)
    gs, hs = chk._sample_cells(rng, rects, 300)
    res = chk.fit(cover, gs, hs)
    xs = np.linspace(-1, 1, 9)
    checked = 0
    for g, h, k in zip(gs, hs, res["index"]):
        if chk.in_gamma(rects, g, h):
            continue
        assert k >= 0
        kind, item = _cover_element(cover, int(k))
        cloud = [ProductPoint(e(g + a), e(h + b)) for a in xs for b in xs]
        if kind == "box":
            ax, ay = item
            s, lo = cover.box_step, cover.box_lo
            assert all(lo + ax * s < z.x < lo + (ax + 2) * s and lo + ay * s < z.y < lo + (ay + 2) * s for z in cloud)
        else:
            if kind == "zero":
                center, eps = JoinPoint(item[0], None, 0.0), item[1]
            elif kind == "inf":
                center, eps = JoinPoint(None, item[0], INF), item[1]
            else:
                center, eps = JoinPoint(item[0], item[1], item[2]), item[3]
            assert all(join.nbhd_contains(center, eps, z) for z in cloud)
        checked += 1
    assert checked > 200


def test_null_check_small_budget(join):
    rep = ProductNullChecker(join, (-1.0, 1.0), (-1.0, 1.0), 0.1).check(60, 3000, seed=1)
    assert rep["pass"]
    assert rep["misfits"] == 0 and rep["grid_nonexceptional_misfits"] == 0
    assert rep["max_diam_mu_far"] < 0.05


def test_null_check_is_reproducible(join):
    chk = ProductNullChecker(join, (-1.0, 1.0), (-1.0, 1.0), 0.1)
    assert chk.check(40, 2000, seed=9) == chk.check(40, 2000, seed=9)


def test_delta_range(join):
    with pytest.raises(ValueError):
        ProductNullChecker(join, (-1.0, 1.0), (-1.0, 1.0), 1.0)
