"""Property checks for both constructions.

Every check returns a plain dict with a ``pass`` flag and the worst
witness found.  Sampling checks take a seed; large sample budgets are cut
into fixed chunks seeded from one SeedSequence, so the result does not
depend on how many worker processes run the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .direct_product import JoinCompactification, JoinPoint, ProductNullChecker, reproduce_counterexample, variation_R
from .free_product import End, FreeProductSpace, TranslateBoundary, WPoint, ZEpsilonIndex, line_compactum
from .models import IntLineModel, TabulatedRModel
from .words import ONE, Letter, ReducedWord, format_word

CHUNK = 5000
DEFAULT_SEED = 42


def _chunks(n: int, seed: int) -> list:
    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    return list(zip(sizes, seqs))


def _run_chunks(fn, args: tuple, n: int, seed: int, jobs: int = 1) -> list:
    work = _chunks(n, seed)
    if jobs <= 1 or len(work) <= 1:
        return [fn(size, ss, *args) for size, ss in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futs = [pool.submit(fn, size, ss, *args) for size, ss in work]
        return [f.result() for f in futs]


def _space(models: tuple = ("int-line", "int-line")) -> FreeProductSpace:
    from .models import get_model

    return FreeProductSpace(get_model(models[0]), get_model(models[1]))


def _pt(p) -> str:
    return str(p)


# metric axioms -------------------------------------------------------------------


def _metric_chunk(size, ss, depth, models, corrupt):
    S = _space(models)
    rng = np.random.default_rng(ss)
    dist = S.dist if not corrupt else _corrupted(S)
    worst_tri, worst_sym, zero_fail = 0.0, 0.0, 0
    witness = None
    for _ in range(size):
        a, b, c = (S.random_point(rng, depth) for _ in range(3))
        ab, ba, bc, ac = dist(a, b), dist(b, a), dist(b, c), dist(a, c)
        worst_sym = max(worst_sym, abs(ab - ba))
        gap = ac - (ab + bc)
        if gap > worst_tri:
            worst_tri = gap
            witness = [_pt(a), _pt(b), _pt(c)]
        if dist(a, a) != 0.0 or ((ab == 0.0) != (a == b)):
            zero_fail += 1
    return worst_tri, worst_sym, zero_fail, witness


def _corrupted(S: FreeProductSpace):
    """A deliberately broken metric: the leg inside the lowest common copy is halved."""

    def dist(a, b):
        if a.word.letters == b.word.letters and a.side == b.side:
            return S.dist(a, b)
        level, side = S._meeting(a, b)
        da, ca = S._ascend(a.word.letters, a.side, a.local, level, side)
        db, cb = S._ascend(b.word.letters, b.side, b.local, level, side)
        mid = math.ldexp(S.models[side].rho_hat(ca, cb), -S._rsums(a.word.letters[:level])[-1])
        return da + 0.5 * mid + db

    return dist


def check_metric_axioms(n: int = 10_000, depth: int = 8, seed: int = DEFAULT_SEED, tol: float = 1e-9,
                        jobs: int = 1, models=("int-line", "int-line"), corrupt: bool = False) -> dict:
    if n < 1:
        raise ValueError("need at least one sample")
    parts = _run_chunks(_metric_chunk, (depth, models, corrupt), n, seed, jobs)
    tri = max(p[0] for p in parts)
    sym = max(p[1] for p in parts)
    zero = sum(p[2] for p in parts)
    witness = max(parts, key=lambda p: p[0])[3]
    return {"check": "metric_axioms", "samples": n, "depth": depth, "max_triangle_violation": tri,
            "max_symmetry_violation": sym, "identity_failures": zero, "worst_triple": witness, "tolerance": tol,
            "pass": tri <= tol and sym == 0.0 and zero == 0}


# scale law ---------------------------------------------------------------------


def check_scale_law(nwords: int = 200, depth: int = 6, samples: int = 1000, seed: int = DEFAULT_SEED) -> dict:
    """Within-translate distances never exceed r*(w) and nearly reach it."""
    S = _space()
    rng = np.random.default_rng(seed)
    worst_ratio_hi, worst_ratio_lo = 0.0, math.inf
    for _ in range(nwords):
        w = S.random_word(rng, int(rng.integers(1, depth + 1)))
        side = S.side_of(w)
        scale = S.rstar(w).value
        locs = S.models[side].sample(rng, samples) + S.models[side].boundary_sample()
        pts = [S.point(w, side, u) for u in locs]
        lo, hi = min(range(len(locs)), key=locs.__getitem__), max(range(len(locs)), key=locs.__getitem__)
        sup = S.dist(pts[lo], pts[hi])
        cert = scale * S.models[side].set_diameter(_hull(locs))
        worst_ratio_hi = max(worst_ratio_hi, cert / scale, sup / scale)
        worst_ratio_lo = min(worst_ratio_lo, sup / scale)
    return {"check": "scale_law", "words": nwords, "depth": depth, "max_ratio": worst_ratio_hi,
            "min_sampled_ratio": worst_ratio_lo, "pass": worst_ratio_hi <= 1.0 and worst_ratio_lo >= 0.95}


def _hull(locs):
    from .models import CarrierSet

    return CarrierSet(tuple(locs), 0.0, (min(locs), max(locs)), None)


# total boundedness ---------------------------------------------------------------


def _cover_chunk(size, ss, eps, depth, end_depth, models):
    S = _space(models)
    net = S.epsilon_net(eps, depth=32)
    rng = np.random.default_rng(ss)
    worst, uncovered, witness = 0.0, 0, None
    for i in range(size):
        p = S.random_end(rng, end_depth) if i % 5 == 0 else S.random_point(rng, depth)
        d, _ = S.nearest_center(net, p)
        if d > worst:
            worst, witness = d, _pt(p)
        if d >= eps:
            uncovered += 1
    return worst, uncovered, witness


def check_total_boundedness(eps: float, samples: int = 100_000, depth: int = 8, end_depth: int = 16,
                            seed: int = DEFAULT_SEED, jobs: int = 1, models=("int-line", "int-line")) -> dict:
    if not eps > 0:
        raise ValueError("eps must be positive")
    S = _space(models)
    net = S.epsilon_net(eps)
    parts = _run_chunks(_cover_chunk, (eps, depth, end_depth, models), samples, seed, jobs)
    worst = max(p[0] for p in parts)
    return {"check": "total_boundedness", "eps": eps, "net_size": len(net), "k": net.k, "samples": samples,
            "uncovered": sum(p[1] for p in parts), "max_gap": worst,
            "worst_point": max(parts, key=lambda p: p[0])[2], "pass": sum(p[1] for p in parts) == 0}


# homotopy tracks ----------------------------------------------------------------


def track_diameter(points: list, dist) -> float:
    pts = list(dict.fromkeys(points))
    best = 0.0
    for i, a in enumerate(pts):
        for b in pts[i + 1:]:
            d = dist(a, b)
            if d > best:
                best = d
    return best


def check_homotopy_tracks(homotopy, points: list, tgrid, dist, bound: float | None = None) -> dict:
    worst, witness = 0.0, None
    for p in points:
        d = track_diameter([homotopy(p, float(t)) for t in tgrid], dist)
        if d > worst:
            worst, witness = d, _pt(p)
    return {"check": "homotopy_tracks", "samples": len(points), "steps": len(tgrid), "max_track_diameter": worst,
            "bound": bound, "worst_point": witness, "pass": bound is None or worst < bound}


def _k_chunk(size, ss, eps, depth, steps, models):
    S = _space(models)
    idx = S.build_z_epsilon(eps)
    rng = np.random.default_rng(ss)
    pts = [S.random_point(rng, depth) for _ in range(size)]
    rep = check_homotopy_tracks(lambda p, t: S.homotopy_K(p, t, idx), pts, np.linspace(0, 1, steps), S.dist)
    return rep["max_track_diameter"], rep["worst_point"]


def words_up_to(depth: int, elements=(1, -1, 2, -2)) -> list:
    """All reduced words of length <= depth over the given letter elements."""
    out = [ONE]
    frontier = [ONE]
    for _ in range(depth):
        nxt = []
        for w in frontier:
            factors = ("G", "H") if not w.letters else ("H" if w.letters[-1].factor == "G" else "G",)
            for f in factors:
                for a in elements:
                    nxt.append(ReducedWord._trusted(w.letters + (Letter(f, a),)))
        out.extend(nxt)
        frontier = nxt
    return out


def check_gluing_fixed(S: FreeProductSpace, idx: ZEpsilonIndex, depth: int = 6, steps: int = 50) -> dict:
    """K(w.x0, t) = w.x0 exactly for every grid time t <= t(w)."""
    grid = np.linspace(0, 1, steps)
    failures, checked = [], 0
    for w in words_up_to(depth):
        g = S.gluing_point(w)
        tw = 1.0 if idx.core_length(w) == len(w) else idx.t_value(w.letters)
        times = [float(t) for t in grid if t <= tw] + [tw, tw / 2]
        for t in times:
            checked += 1
            if S.homotopy_K(g, t, idx) != g:
                failures.append((format_word(w), t))
    return {"check": "gluing_fixed", "depth": depth, "evaluations": checked, "failures": failures[:20],
            "pass": not failures}


def check_homotopy_K(eps: float = 0.5, samples: int = 10_000, steps: int = 50, depth: int = 6,
                     seed: int = DEFAULT_SEED, jobs: int = 1, models=("int-line", "int-line")) -> dict:
    S = _space(models)
    idx = S.build_z_epsilon(eps)
    parts = _run_chunks(_k_chunk, (eps, depth, steps, models), samples, seed, jobs)
    worst = max(p[0] for p in parts)
    glue = check_gluing_fixed(S, idx, depth, steps)
    return {"check": "homotopy_K", "eps": eps, "M_size": len(idx.core), "samples": samples, "steps": steps,
            "max_track_diameter": worst, "bound": 2 * eps, "worst_point": max(parts, key=lambda p: p[0])[1],
            "gluing": glue, "pass": worst < 2 * eps and glue["pass"]}


# homotopy P ---------------------------------------------------------------------


def check_homotopy_P(samples: int = 1000, end_depth: int = 12, depth: int = 6, steps: int = 50,
                     seed: int = DEFAULT_SEED) -> dict:
    """P(., 0) = id; past each point's tail bound, P lands in W exactly."""
    S = _space()
    rng = np.random.default_rng(seed)
    grid = np.linspace(0, 1, steps)
    id_fail, boundary_out, approx, checked = 0, 0, 0, 0
    end_at_one = 0
    for i in range(samples):
        if i % 2 == 0:
            p = S.random_end(rng, int(rng.integers(2, end_depth + 1)))
            tail = S.rstar(p.prefix).value
        else:
            w = S.random_word(rng, int(rng.integers(0, depth + 1)))
            side = S.side_of(w) or ("X" if rng.random() < 0.5 else "Y")
            p = S.point(w, side, float(rng.integers(0, 2)))
            tail = 0.0
        if S.homotopy_P(p, 0.0) != p:
            id_fail += 1
        for t in grid[1:]:
            out = S.homotopy_P(p, float(t))
            if t > tail:
                checked += 1
                if not _interior(S, out):
                    boundary_out += 1
            elif not isinstance(out, (WPoint,)):
                approx += 1
        if isinstance(p, End) and S.homotopy_P(p, 1.0) != S.basepoint:
            end_at_one += 1
    return {"check": "homotopy_P", "samples": samples, "identity_failures": id_fail,
            "certified_evaluations": checked, "boundary_outputs": boundary_out,
            "interval_answers_below_tail": approx, "end_not_contracted": end_at_one,
            "pass": id_fail == 0 and boundary_out == 0 and end_at_one == 0}


def _interior(S: FreeProductSpace, out) -> bool:
    return (isinstance(out, WPoint) and not isinstance(out, TranslateBoundary)
            and not S.models[out.side].is_boundary(out.local))


# free null condition --------------------------------------------------------------


def check_null_free(eps: float = 0.25, depth: int = 6, samples: int = 2000, C=None, seed: int = DEFAULT_SEED) -> dict:
    """Exceptional translates of C by exact scale certificates, plus a fit check.

    The cover is the net of radius 4 eps: every point lies within 3 eps of
    a center, so any set of diameter < eps fits in one ball.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    S = _space()
    C = C or line_compactum()
    gamma, truncated = S.exceptional_translates(C, eps, depth)
    net = S.epsilon_net(4 * eps)
    rng = np.random.default_rng(seed)
    gset = set(gamma)
    misfits, defects, worst = 0, 0, 0.0
    tested = 0
    for _ in range(samples):
        w = S.random_word(rng, int(rng.integers(0, depth + 1)))
        if w in gset:
            continue
        tested += 1
        diam = S.translate_diameter(w, C)
        if diam >= eps:
            misfits += 1
            continue
        g = S.gluing_point(w)
        d, _ = S.nearest_center(net, g)
        if d >= 3 * eps:
            defects += 1
        sup = d + diam
        worst = max(worst, sup)
        if sup >= 4 * eps:
            misfits += 1
    return {"check": "null_free", "eps": eps, "depth": depth, "gamma": [format_word(w) for w in gamma],
            "gamma_size": len(gamma), "truncated": truncated, "tested": tested, "misfits": misfits,
            "cover_defects": defects, "max_sup_distance": worst, "cover_radius": 4 * eps,
            "pass": misfits == 0 and defects == 0 and not truncated}


def check_null_free_stability(eps: float = 0.25, depths=(6, 8)) -> dict:
    S = _space()
    C = line_compactum()
    sets = {d: [format_word(w) for w in S.exceptional_translates(C, eps, d)[0]] for d in depths}
    first = sets[depths[0]]
    return {"check": "null_free_stability", "eps": eps, "gamma_by_depth": sets,
            "pass": all(v == first for v in sets.values())}


def check_properness(depths=(4, 6)) -> dict:
    S = _space()
    C = line_compactum(-1.0, 1.0)
    sets = {d: [format_word(w) for w in S.translates_meeting(C, d)] for d in depths}
    first = sets[depths[0]]
    return {"check": "properness", "meeting": sets, "pass": all(v == first for v in sets.values())}


# direct product --------------------------------------------------------------------


def check_proper_map(J: JoinCompactification | None = None, imax: int = 12, boundary_samples: int = 100,
                     time_samples: int = 100, grange: int = 200) -> dict:
    J = J or JoinCompactification()
    p, model = J.proper_x, J.model_x
    bd = model.boundary_sample()
    viol, worst = 0, None
    for i in range(1, imax + 1):
        ts = np.linspace(p.times[i], p.times[i - 1], time_samples, endpoint=False)
        for k in range(boundary_samples):
            b = bd[k % len(bd)]
            for t in ts:
                v = p(model.zset_homotopy(b, float(t)))
                if not (i - 1 < v <= i + 1):
                    viol += 1
                    worst = {"i": i, "t": float(t), "p": v}
    var = variation_R(p, (-0.5, 0.5), range(-grange, grange + 1))
    return {"check": "proper_map", "p_at_basepoint": p(model.basepoint), "shell_violations": viol,
            "worst": worst, "R_p_C1": var, "radii": p.radii[1:imax + 1].tolist(),
            "times": p.times[: imax + 1].tolist(),
            "pass": p(model.basepoint) == 0.0 and viol == 0 and var["R"] <= 2.0}


def check_brackets(J: JoinCompactification | None = None, n: int = 100, t_min: float = 0.05) -> dict:
    """p(alpha_hat(xbar, t)) in [1/t - 1, 1/t + 2] and p(alpha'(xbar, s)) in (s - 1, s + 3)."""
    J = J or JoinCompactification()
    p, bd = J.proper_x, J.model_x.boundary_sample()
    hat_v, prime_v = 0, 0
    for t in np.linspace(t_min, 1.0, n):
        s = 1.0 / t - 1.0
        for k in range(n):
            b = bd[k % len(bd)]
            v = p(p.alpha_hat(b, float(t)))
            if not (1 / t - 1 <= v <= 1 / t + 2):
                hat_v += 1
            w = p(p.alpha_prime(b, float(s)))
            if not (s - 1 < w < s + 3):
                prime_v += 1
    return {"check": "brackets", "grid": [n, n], "alpha_hat_violations": hat_v, "alpha_prime_violations": prime_v,
            "pass": hat_v == 0 and prime_v == 0}


def check_ray_slopes(J: JoinCompactification | None = None, mus=(0.1, 1.0, 10.0)) -> dict:
    J = J or JoinCompactification()
    rows = []
    for mu in mus:
        t = 10.0 * math.sqrt(mu * mu + 1.0)
        z = J.ray_gamma_prime(JoinPoint(1.0, 1.0, mu), t)
        lo, hi = J.slope_interval(mu, t)
        m = J.slope(z.x, z.y)
        rows.append({"mu": mu, "t": t, "slope": m, "interval": [lo, hi], "inside": lo < m < hi})
    return {"check": "ray_slopes", "rows": rows, "interval_mu1_t10": list(J.slope_interval(1.0, 10.0)),
            "pass": all(r["inside"] for r in rows)}


def check_counterexample(N: int = 100, eps: float = 0.1, J=None) -> dict:
    rep = reproduce_counterexample(N, eps, J)
    rep["check"] = "counterexample"
    return rep


def check_null_product(delta: float = 0.1, grid: int = 300, samples: int = 200_000, seed: int = DEFAULT_SEED,
                       J=None) -> dict:
    J = J or JoinCompactification()
    rep = ProductNullChecker(J, (-1.0, 1.0), (-1.0, 1.0), delta).check(grid, samples, seed)
    rep["check"] = "null_product"
    return rep


def check_gamma_homotopy(J=None, samples: int = 1000, steps: int = 25, seed: int = DEFAULT_SEED) -> dict:
    """gamma(z, 0) = z, gamma(z, t) interior for t > 0, gamma(z, 1) = (x0, y0)."""
    J = J or JoinCompactification()
    rng = np.random.default_rng(seed)
    bad_start, bad_inside, bad_end = 0, 0, 0
    for _ in range(samples):
        kind = rng.integers(0, 3)
        xb, yb = float(rng.integers(0, 2)), float(rng.integers(0, 2))
        mu = [0.0, math.inf, float(np.exp(rng.uniform(-3, 3)))][kind]
        z = JoinPoint(xb if mu != math.inf else None, yb if mu != 0 else None, mu)
        if J.homotopy_gamma(z, 0.0) != z:
            bad_start += 1
        for t in np.linspace(0, 1, steps)[1:]:
            if not J.is_interior(J.homotopy_gamma(z, float(t))):
                bad_inside += 1
        if J.homotopy_gamma(z, 1.0) != J.base:
            bad_end += 1
    return {"check": "gamma_homotopy", "samples": samples, "start_failures": bad_start,
            "boundary_outputs": bad_inside, "end_failures": bad_end,
            "pass": bad_start == 0 and bad_inside == 0 and bad_end == 0}


# orchestration ---------------------------------------------------------------------


def t_of_w_example() -> dict:
    """The worked example w = w'.g.h.g' with r(g') = 1, r(h) = 3, r(g) = 2 and j(w) = 4."""
    X = TabulatedRModel({1: 2, 5: 1})
    S = FreeProductSpace(X, IntLineModel())
    w = S.fp.parse("h:1,g:1,h:2,g:5")
    idx = ZEpsilonIndex(S, 1.0, {ONE})
    got = {
        "w": idx.t_of_w(w).exponent,
        "w'gh": idx.t_of_w(w.prefix(3)).exponent,
        "w'g": idx.t_of_w(w.prefix(2)).exponent,
    }
    want = {"w": 6, "w'gh": 5, "w'g": 2}
    return {"check": "t_of_w", "j": idx.overhang(w), "exponents": got, "values": {k: 2.0 ** -v for k, v in got.items()},
            "pass": got == want and idx.overhang(w) == 4}


def run_all(seed: int = DEFAULT_SEED, depth: int = 6, jobs: int = 1, scale: float = 1.0) -> dict:
    """The twelve acceptance checks; ``scale`` shrinks sample budgets for smoke runs."""
    n = lambda k: max(1, int(k * scale))
    J = JoinCompactification()
    results = {
        "1_t_of_w": t_of_w_example(),
        "2_metric_axioms": check_metric_axioms(n(10_000), depth=8, seed=seed, jobs=jobs),
        "3_scale_law": check_scale_law(n(200), depth=depth, seed=seed),
        "4_total_boundedness": [check_total_boundedness(e, n(100_000), seed=seed, jobs=jobs) for e in (0.5, 0.25, 0.125)],
        "5_homotopy_K": check_homotopy_K(0.5, n(10_000), 50, depth, seed=seed, jobs=jobs),
        "6_homotopy_P": check_homotopy_P(n(1000), seed=seed),
        "7_proper_map": check_proper_map(J),
        "8_brackets": check_brackets(J),
        "9_ray_slopes": check_ray_slopes(J),
        "10_counterexample": check_counterexample(100, 0.1, J),
        "11_null_product": check_null_product(0.1, 300, n(200_000), seed, J),
        "12_null_free": {**check_null_free_stability(0.25, (6, 8)), "fit": check_null_free(0.25, 6, n(2000), seed=seed)},
    }
    passed = {}
    for k, v in results.items():
        if isinstance(v, list):
            passed[k] = all(x["pass"] for x in v)
        elif k == "12_null_free":
            passed[k] = v["pass"] and v["fit"]["pass"]
        else:
            passed[k] = v["pass"]
    return {"results": results, "passed": passed, "pass": all(passed.values())}
