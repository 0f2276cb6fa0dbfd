from __future__ import annotations

import numpy as np

from zlab import verify
from zlab.free_product import FreeProductSpace


def test_metric_check_passes_and_is_seeded():
    a = verify.check_metric_axioms(2000, depth=6, seed=42)
    assert a["pass"] and a["max_triangle_violation"] <= 1e-9 and a["max_symmetry_violation"] == 0
    assert verify.check_metric_axioms(2000, depth=6, seed=42) == a


def test_metric_check_independent_of_jobs():
    one = verify.check_metric_axioms(7000, depth=6, seed=5, jobs=1)
    two = verify.check_metric_axioms(7000, depth=6, seed=5, jobs=2)
    assert one == two


def test_corrupted_metric_fails_with_witness():
    rep = verify.check_metric_axioms(2000, depth=6, seed=42, corrupt=True)
    assert not rep["pass"]
    assert rep["max_triangle_violation"] > 1e-9
    assert len(rep["worst_triple"]) == 3


def test_single_point_twice_passes():
    S = FreeProductSpace()
    p = S.point(S.fp.parse("g:1"), "Y", 0.3)
    assert S.dist(p, p) == 0
    assert verify.track_diameter([p, p], S.dist) == 0


def test_constant_homotopy_has_zero_tracks():
    S = FreeProductSpace()
    rng = np.random.default_rng(0)
    pts = [S.random_point(rng, 5) for _ in range(50)]
    rep = verify.check_homotopy_tracks(lambda p, t: p, pts, np.linspace(0, 1, 11), S.dist, bound=1e-12)
    assert rep["max_track_diameter"] == 0 and rep["pass"]


def test_total_boundedness_large_eps():
    rep = verify.check_total_boundedness(5.0, 2000)
    assert rep["pass"] and rep["net_size"] == 1


def test_total_boundedness_small_budget():
    reps = [verify.check_total_boundedness(eps, 3000, seed=1) for eps in (0.5, 0.125)]
    assert all(r["pass"] for r in reps)
    assert reps[1]["net_size"] > reps[0]["net_size"]


def test_scale_law_small():
    rep = verify.check_scale_law(30, depth=6, samples=500, seed=3)
    assert rep["pass"] and rep["max_ratio"] <= 1.0


def test_null_free_values():
    assert verify.check_null_free(4.0, 6, 200)["gamma"] == []
    rep = verify.check_null_free(0.25, 6, 300)
    assert rep["gamma"] == ["1"] and rep["pass"]
    assert verify.check_null_free_stability(0.25, (6, 8))["pass"]


def test_properness_is_stable():
    rep = verify.check_properness()
    assert rep["pass"] and len(rep["meeting"][4]) == 17


def test_gluing_points_fixed_before_deadline():
    S = FreeProductSpace()
    assert verify.check_gluing_fixed(S, S.build_z_epsilon(0.5), depth=4, steps=20)["pass"]


def test_words_up_to_counts():
    # 1 + 2*4 + 2*4*4 words over four letter elements
    assert len(verify.words_up_to(2)) == 1 + 8 + 32


def test_t_of_w_example():
    rep = verify.t_of_w_example()
    assert rep["pass"] and rep["values"] == {"w": 1 / 64, "w'gh": 1 / 32, "w'g": 1 / 4}


def test_run_all_smoke():
    rep = verify.run_all(seed=42, depth=6, scale=0.02)
    assert set(rep["passed"]) == {
        "1_t_of_w", "2_metric_axioms", "3_scale_law", "4_total_boundedness", "5_homotopy_K", "6_homotopy_P",
        "7_proper_map", "8_brackets", "9_ray_slopes", "10_counterexample", "11_null_product", "12_null_free",
    }
    assert rep["pass"]
