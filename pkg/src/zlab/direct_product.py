"""The join compactification of X x Y for a direct product G x H.

Points of the compactification are interior pairs ``ProductPoint`` or
boundary points ``JoinPoint`` carrying a slope coordinate mu in [0, inf].
Slope is q(y)/p(x) for proper maps p, q built from a proper metric and
the model homotopies.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .models import IntLineModel, ZStructureModel

INF = math.inf


def _check_time(t: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"time {t} outside [0, 1]")


def _require_line(model: ZStructureModel) -> IntLineModel:
    if not isinstance(model, IntLineModel):
        raise ValueError("this construction searches over real intervals and needs the int-line model")
    return model


# proper metric ---------------------------------------------------------------


class ProperMetric:
    """The metric sqrt(rho^2 + (H(a) - H(b))^2) with H = h^-1 o f.

    f is the model's gauge and h(s) = s / (1 + s), so H blows up at the
    boundary and closed balls are compact.
    """

    def __init__(self, model: ZStructureModel):
        self.model = model
        f0 = model.gauge(model.basepoint)
        if f0 != 0.0:
            raise ValueError(f"gauge must vanish at the basepoint, got {f0}")
        for b in model.boundary_sample():
            if model.gauge(b) != 1.0:
                raise ValueError("gauge must equal 1 on the boundary")

    @staticmethod
    def squash(s: float) -> float:
        return s / (1.0 + s)

    @staticmethod
    def unsquash(v: float) -> float:
        if v >= 1.0:
            return INF
        return v / (1.0 - v)

    def height(self, a) -> float:
        return self.unsquash(self.model.gauge(a))

    def dist(self, a, b) -> float:
        if a == b:
            return 0.0
        return math.hypot(self.model.rho_hat(a, b), self.height(a) - self.height(b))

    def radius(self, a) -> float:
        """Distance from the basepoint."""
        return self.dist(self.model.basepoint, a)

    # line model closed forms
    def radius_of_real(self, x):
        """Distance from the basepoint to e(x), vectorized over x."""
        ax = np.abs(np.asarray(x, dtype=float))
        return np.hypot(ax / (2.0 * (1.0 + ax)), ax)

    def real_of_radius(self, r: float) -> float:
        """The |x| >= 0 with radius_of_real(x) = r (monotone inverse)."""
        if r <= 0:
            return 0.0
        lo, hi = 0.0, r
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(self.radius_of_real(mid)) < r:
                lo = mid
            else:
                hi = mid
        return hi


# proper map p ----------------------------------------------------------------


class ProperMap:
    """A piecewise-linear rescaling of distance to the basepoint.

    The closed shell between radii r_{i-1} and r_i maps onto [i-1, i]
    (r_0 = 0).  ``times`` holds 1 = t_0 > t_1 > ... with the homotopy
    keeping boundary points outside the closed ball of radius r_i for
    every time below t_i.  Beyond the last radius the last shell width
    is repeated.
    """

    def __init__(self, metric: ProperMetric, radii, times, certificates=None):
        radii = [float(r) for r in radii]
        times = [float(t) for t in times]
        if not radii or any(b <= a for a, b in zip([0.0] + radii, radii)):
            raise ValueError("radii must be positive and strictly increasing")
        if times[0] != 1.0 or any(b >= a for a, b in zip(times, times[1:])) or times[-1] <= 0:
            raise ValueError("times must start at 1 and strictly decrease to a positive value")
        self.metric = metric
        self.model = metric.model
        self.radii = np.array([0.0] + radii)
        self.times = np.array(times)
        self.certificates = certificates or []
        self._tail = self.radii[-1] - self.radii[-2]

    @property
    def imax(self) -> int:
        return len(self.radii) - 1

    def of_radius(self, d):
        """p as a function of distance to the basepoint, vectorized."""
        d = np.asarray(d, dtype=float)
        R = self.radii
        i = np.clip(np.searchsorted(R, d, side="left"), 1, len(R) - 1)
        inside = (i - 1) + (d - R[i - 1]) / (R[i] - R[i - 1])
        beyond = self.imax + (d - R[-1]) / self._tail
        out = np.where(d > R[-1], beyond, inside)
        return np.where(np.isinf(d), np.inf, out)

    def __call__(self, a) -> float:
        if self.model.is_boundary(a):
            return INF
        return float(self.of_radius(self.metric.radius(a)))

    def of_real(self, x):
        """p(e(x)) for the line model, vectorized over x."""
        return self.of_radius(self.metric.radius_of_real(x))

    def range_on_real(self, lo, hi):
        """(min p, max p) over e([lo, hi]), vectorized; p is monotone in |x|."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        near = np.where((lo <= 0) & (hi >= 0), 0.0, np.minimum(np.abs(lo), np.abs(hi)))
        far = np.maximum(np.abs(lo), np.abs(hi))
        return self.of_real(near), self.of_real(far)

    # reparametrization
    def xi(self, t: float) -> float:
        return time_change(self.times, t)

    def xi_unshifted(self, t: float) -> float:
        return time_change(self.times, t, unshifted=True)

    def alpha_hat(self, a, t: float, unshifted: bool = False):
        s = self.xi_unshifted(t) if unshifted else self.xi(t)
        return self.model.zset_homotopy(a, s)

    def alpha_prime(self, a, t: float):
        if t < 0:
            raise ValueError("ray time must be nonnegative")
        if math.isinf(t):
            return a
        return self.alpha_hat(a, 1.0 / (1.0 + t))

    # serialization
    def to_json(self) -> str:
        return json.dumps({
            "model": self.model.name,
            "radii": self.radii[1:].tolist(),
            "times": self.times.tolist(),
            "certificates": self.certificates,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str, model: ZStructureModel) -> ProperMap:
        data = json.loads(text)
        if data["model"] != model.name:
            raise ValueError("serialized map belongs to another model")
        return cls(ProperMetric(model), data["radii"], data["times"], data.get("certificates"))


def build_proper_metric(model: ZStructureModel) -> ProperMetric:
    return ProperMetric(model)


def _knot(times, i: int) -> float:
    """t_i, extended past the last shell by t_n * n / i."""
    n = len(times) - 1
    return float(times[i]) if i <= n else float(times[n]) * n / i


def time_change(times, t: float, unshifted: bool = False) -> float:
    """Piecewise-linear time change through (1, 1) and (1/i, t_i), i >= 2.

    Knots (1/i, t_{i-1}) only give the bracket [1/t - 2, 1/t + 1];
    shifting the index by one gives [1/t - 1, 1/t + 2].  ``unshifted``
    selects the (1/i, t_{i-1}) knots for comparison.
    """
    _check_time(t)
    if t == 0.0 or t == 1.0:
        return t
    i = math.floor(1.0 / t)
    lo_t, hi_t = 1.0 / (i + 1), 1.0 / i
    if unshifted:
        lo_v, hi_v = _knot(times, i), _knot(times, i - 1)
    else:
        lo_v = _knot(times, i + 1)
        hi_v = 1.0 if i == 1 else _knot(times, i)
    return lo_v + (hi_v - lo_v) * (t - lo_t) / (hi_t - lo_t)


def reparam_hat(homotopy, times, unshifted: bool = False):
    """The homotopy (a, t) -> homotopy(a, xi(t)) for times decreasing from 1."""
    times = [float(v) for v in times]
    if not times or times[0] != 1.0:
        raise ValueError("times must start at t_0 = 1")
    if any(b >= a for a, b in zip(times, times[1:])) or times[-1] <= 0.0:
        raise ValueError("times must be positive and strictly decreasing")

    def alpha_hat(a, t: float):
        return homotopy(a, time_change(times, t, unshifted))

    return alpha_hat


def build_p(model: ZStructureModel, metric: ProperMetric | None = None, imax: int = 160, fundamental=(-0.5, 0.5),
            grid: float = 1.0 / 16, margin: float = 1e-3, boundary_samples: int = 2, time_samples: int = 257) -> ProperMap:
    """Search radii and times so that boundary tracks cross the shells in order.

    Each r_i is the least grid point strictly above both the reach of the
    homotopy after time t_{i-1} and every translate of the fundamental
    domain meeting the ball of radius r_{i-1}.  Each t_i is found by
    bisection and shrunk by ``margin``.
    """
    model = _require_line(model)
    metric = metric or build_proper_metric(model)
    lo, hi = fundamental
    if not lo <= 0 <= hi:
        raise ValueError("the fundamental domain must contain the basepoint")
    bdry = model.boundary_sample()
    bdry = [bdry[k % len(bdry)] for k in range(max(boundary_samples, len(bdry)))]

    def homotopy_radius(t: float) -> float:
        return max(metric.radius(model.zset_homotopy(b, t)) for b in bdry)

    def above(x: float) -> float:
        return (math.floor(x / grid) + 1) * grid

    radii, times, certs = [], [1.0], []
    r_prev = 0.0
    for i in range(1, imax + 1):
        need = float(metric.radius_of_real(max(abs(lo), abs(hi)))) if i == 1 else 0.0
        reach_t = 0.0
        if i >= 2:
            ts = np.geomspace(times[-1], 1.0, time_samples)
            reach_t = max(homotopy_radius(float(t)) for t in ts)
        translates = 0.0
        if i >= 2:
            x = metric.real_of_radius(r_prev)
            # g.C1 = e([g+lo, g+hi]) meets the open ball iff its nearest point is inside
            gmax = math.floor(x - lo) + 1
            for g in range(-gmax, gmax + 1):
                a, b = g + lo, g + hi
                near = 0.0 if a <= 0 <= b else min(abs(a), abs(b))
                if float(metric.radius_of_real(near)) < r_prev:
                    translates = max(translates, float(metric.radius_of_real(max(abs(a), abs(b)))))
        r = above(max(need, reach_t, translates, r_prev))
        # t_i: boundary tracks stay outside the closed r-ball for all times below t_i
        a_, b_ = 0.0, times[-1]
        for _ in range(100):
            mid = 0.5 * (a_ + b_)
            if homotopy_radius(mid) > r:
                a_ = mid
            else:
                b_ = mid
        t = a_ * (1.0 - margin)
        if not 0.0 < t < times[-1]:
            raise ValueError(f"time search failed at shell {i}")
        radii.append(r)
        times.append(t)
        certs.append({"i": i, "r": r, "reach_prev_time": reach_t, "translate_reach": translates,
                      "t": t, "radius_at_t": homotopy_radius(t)})
        r_prev = r
    return ProperMap(metric, radii, times, certs)


def variation_R(p: ProperMap, interval: tuple, gset) -> dict:
    """max over g of (max p - min p) on g.C for C = e(interval), with the k_C bound."""
    g = np.asarray(list(gset), dtype=float)
    if g.size == 0:
        raise ValueError("empty group sample")
    lo, hi = interval
    pmin, pmax = p.range_on_real(lo + g, hi + g)
    spread = pmax - pmin
    k = cover_count(interval)
    worst = int(np.argmax(spread))
    return {"R": float(spread[worst]), "argmax": int(g[worst]), "k_C": k, "bound": 2 * k}


def cover_count(interval: tuple, fundamental=(-0.5, 0.5)) -> int:
    """Fewest consecutive translates of the fundamental domain covering the interval."""
    lo, hi = interval
    a, b = fundamental
    width = b - a
    start = math.floor((lo - a) / width)
    end = math.ceil((hi - b) / width)
    return max(1, end - start + 1)


# join points -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JoinPoint:
    """<xbar, ybar, mu> in the join; mu = 0 forgets ybar, mu = inf forgets xbar."""

    xbar: float | None
    ybar: float | None
    mu: float

    def __post_init__(self):
        if not (self.mu >= 0):
            raise ValueError("slope must lie in [0, inf]")
        if self.mu != 0 and self.ybar is None:
            raise ValueError("ybar is required unless mu = 0")
        if self.mu != INF and self.xbar is None:
            raise ValueError("xbar is required unless mu = inf")

    def key(self):
        if self.mu == 0:
            return ("zero", self.xbar)
        if self.mu == INF:
            return ("inf", self.ybar)
        return ("mid", self.xbar, self.ybar, self.mu)

    def __eq__(self, other) -> bool:
        return isinstance(other, JoinPoint) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __str__(self) -> str:
        return f"xbar={self.xbar}|ybar={self.ybar}|mu={self.mu}"


@dataclass(frozen=True)
class ProductPoint:
    x: float
    y: float


def parse_join(text: str) -> JoinPoint:
    fields = dict(part.split("=", 1) for part in text.split("|"))
    def num(v):
        return None if v in ("None", "") else float(v)
    try:
        return JoinPoint(num(fields.get("xbar", "")), num(fields.get("ybar", "")), float(fields["mu"]))
    except KeyError:
        raise ValueError("join point text needs a mu field") from None


class JoinCompactification:
    """X x Y together with the join of the two boundaries."""

    def __init__(self, model_x: ZStructureModel | None = None, model_y: ZStructureModel | None = None,
                 imax: int = 160):
        self.model_x = model_x or IntLineModel()
        self.model_y = model_y or IntLineModel()
        self.proper_x = build_p(self.model_x, imax=imax)
        self.proper_y = self.proper_x if type(self.model_y) is type(self.model_x) else build_p(self.model_y, imax=imax)
        self.base = ProductPoint(self.model_x.basepoint, self.model_y.basepoint)

    # validation
    def check_point(self, z):
        if isinstance(z, ProductPoint):
            self.model_x.validate(z.x)
            self.model_y.validate(z.y)
            if self.model_x.is_boundary(z.x) or self.model_y.is_boundary(z.y):
                raise ValueError("product points must be interior; use a JoinPoint")
        elif isinstance(z, JoinPoint):
            if z.xbar is not None and not self.model_x.is_boundary(z.xbar):
                raise ValueError("xbar must be a boundary point")
            if z.ybar is not None and not self.model_y.is_boundary(z.ybar):
                raise ValueError("ybar must be a boundary point")
        else:
            raise TypeError(f"not a point of the compactification: {z!r}")

    # slope
    def slope(self, x, y) -> float:
        px = self.proper_x(x)
        if px == 0:
            return INF
        return self.proper_y(y) / px

    # neighborhoods
    def nbhd_contains(self, center: JoinPoint, eps: float, z) -> bool:
        if not eps > 0:
            raise ValueError("eps must be positive")
        rx, ry = self.model_x.rho_hat, self.model_y.rho_hat
        if center.mu == 0:
            if isinstance(z, ProductPoint):
                return rx(z.x, center.xbar) < eps and self.slope(z.x, z.y) < eps
            if z.mu == INF:
                return False
            if z.mu == 0:
                return rx(center.xbar, z.xbar) < eps
            return rx(center.xbar, z.xbar) < eps and z.mu < eps
        if center.mu == INF:
            if isinstance(z, ProductPoint):
                return ry(z.y, center.ybar) < eps and _recip(self.slope(z.x, z.y)) < eps
            if z.mu == 0:
                return False
            if z.mu == INF:
                return ry(center.ybar, z.ybar) < eps
            return ry(center.ybar, z.ybar) < eps and 1.0 / z.mu < eps
        if not eps < center.mu:
            raise ValueError("interior-slope neighborhoods need eps < mu")
        if isinstance(z, ProductPoint):
            return (rx(z.x, center.xbar) < eps and ry(z.y, center.ybar) < eps
                    and abs(self.slope(z.x, z.y) - center.mu) < eps)
        if z.mu == 0 or z.mu == INF:
            return False
        return rx(center.xbar, z.xbar) < eps and ry(center.ybar, z.ybar) < eps and abs(center.mu - z.mu) < eps

    # rays and homotopies
    def beta_prime(self, b, t: float):
        return self.proper_y.alpha_prime(b, t)

    def ray_gamma_prime(self, z, t: float) -> ProductPoint:
        if t < 0:
            raise ValueError("ray time must be nonnegative")
        if isinstance(z, ProductPoint):
            return self._split(z.x, z.y, self.slope(z.x, z.y), t)
        if z.mu == 0:
            return ProductPoint(self.proper_x.alpha_prime(z.xbar, t), self.model_y.basepoint)
        if z.mu == INF:
            return ProductPoint(self.model_x.basepoint, self.beta_prime(z.ybar, t))
        return self._split(z.xbar, z.ybar, z.mu, t)

    def _split(self, a, b, mu: float, t: float) -> ProductPoint:
        if mu == INF:
            sx, sy = 0.0, t
        else:
            n = math.sqrt(mu * mu + 1.0)
            sx, sy = t / n, mu * t / n
        return ProductPoint(self.proper_x.alpha_prime(a, sx), self.beta_prime(b, sy))

    @staticmethod
    def slope_interval(mu: float, t: float) -> tuple:
        """The open interval that bounds the slope along the ray at time t."""
        n = math.sqrt(mu * mu + 1.0)
        s = t / n
        if s <= 2:
            raise ValueError("the bound needs t > 2 sqrt(mu^2 + 1)")
        return (mu * s - 2.0) / (s + 3.0), (mu * s + 3.0) / (s - 2.0)

    def homotopy_gamma(self, z, t: float):
        _check_time(t)
        if t == 0.0:
            return z
        return self.ray_gamma_prime(z, (1.0 - t) / t)

    def product_zset_homotopy(self, x, y, t: float) -> tuple:
        _check_time(t)
        return self.model_x.zset_homotopy(x, t), self.model_y.zset_homotopy(y, t)

    def extend_action_product(self, g, h, z):
        if not (self.model_x.ez and self.model_y.ez):
            raise ValueError("the action extends only for EZ models")
        if isinstance(z, ProductPoint):
            return ProductPoint(self.model_x.act(g, z.x), self.model_y.act(h, z.y))
        xbar = None if z.xbar is None else self.model_x.act(g, z.xbar)
        ybar = None if z.ybar is None else self.model_y.act(h, z.ybar)
        return JoinPoint(xbar, ybar, z.mu)

    def is_interior(self, z) -> bool:
        return isinstance(z, ProductPoint) and not self.model_x.is_boundary(z.x) and not self.model_y.is_boundary(z.y)


def _span(interval) -> float:
    return max(abs(interval[0]), abs(interval[1]))


def _least(cond) -> int:
    """Least n >= 0 with cond(n), for cond monotone in n."""
    hi = 1
    while not cond(hi):
        hi *= 2
        if hi > 1 << 60:
            raise ValueError("threshold search diverged")
    lo = 0
    while lo < hi:
        mid = (lo + hi) // 2
        if cond(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _safe_ratio(num, den):
    """num / den with x/0 = inf for x >= 0 (slope convention)."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    return np.where(den == 0, np.inf, np.where(np.isinf(den), 0.0, out))


def _recip(mu: float) -> float:
    if mu == 0:
        return INF
    if mu == INF:
        return 0.0
    return 1.0 / mu


# the product null condition ---------------------------------------------------


@dataclass
class JoinCover:
    """A finite cover of the compactification by basic open sets.

    ``zero`` and ``inf`` hold (boundary carrier, eps) for the end
    neighborhoods; ``mid`` holds (xbar, ybar, mu, eps); ``boxes`` are open
    carrier rectangles (x0, x1, y0, y1) on a regular lattice with step
    ``box_step`` and side ``2 * box_step``.
    """

    zero: list
    inf: list
    mid: list
    box_lo: float
    box_hi: float
    box_step: float

    def __len__(self) -> int:
        n = int(round((self.box_hi - self.box_lo) / self.box_step))
        return len(self.zero) + len(self.inf) + len(self.mid) + n * n


def canonical_cover(delta: float, box_real: float) -> JoinCover:
    """End neighborhoods of radius 3 delta, interior-slope neighborhoods of
    radius 2 delta at slopes 3 delta, 4 delta, ..., and carrier rectangles
    over e([-box_real, box_real])^2.  Every U(z, delta) then lies in one
    element, which is the Lebesgue property the null argument uses."""
    ends = [0.0, 1.0]
    zero = [(b, 3 * delta) for b in ends]
    inf = [(b, 3 * delta) for b in ends]
    mids = []
    top = 1.0 / (2 * delta) + 2 * delta
    k = 3
    while k * delta <= top + delta:
        mids.extend((xb, yb, k * delta, 2 * delta) for xb in ends for yb in ends)
        k += 1
    e = IntLineModel.embed
    step = delta / 10
    lo, hi = e(-box_real), e(box_real)
    n = math.ceil((hi - lo) / step)
    return JoinCover(zero, inf, mids, lo, lo + n * step, step)


class ProductNullChecker:
    """Exceptional set and fit checks for translates gC x hD on line models.

    C = e([cx0, cx1]) and D = e([cy0, cy1]).  All ranges are exact: p, q
    and the embedding are monotone in |x|, so interval endpoints suffice.
    """

    def __init__(self, join: JoinCompactification, compact_x: tuple, compact_y: tuple, delta: float):
        if not 0 < delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        _require_line(join.model_x)
        _require_line(join.model_y)
        self.join = join
        self.compact_x, self.compact_y = compact_x, compact_y
        self.delta = delta

    # exact ranges over translates, vectorized in g
    @staticmethod
    def _carrier_range(lo, hi):
        e = np.vectorize(IntLineModel.embed, otypes=[float])
        return e(lo), e(hi)

    def _side_profile(self, pm: ProperMap, interval, g):
        lo, hi = interval[0] + g, interval[1] + g
        u0, u1 = self._carrier_range(lo, hi)
        pmin, pmax = pm.range_on_real(lo, hi)
        return {"u0": u0, "u1": u1, "pmin": pmin, "pmax": pmax,
                "diam": u1 - u0, "bdist": np.minimum(u0, 1.0 - u1)}

    def certificate(self, R_grid: int = 300) -> dict:
        """Thresholds for J, K, P_J and Q_K.

        Each compactum is e([-w, w]) with w = n - 1 + span, where n is the
        least |g| from which every translate passes the growth and
        smallness conditions; a translate leaving the compactum then has
        |g| >= n.  Variations use the certified bound 2 k_C, and the
        measured grid values are reported beside it.
        """
        d = self.delta
        p, q = self.join.proper_x, self.join.proper_y
        gs = np.arange(-R_grid, R_grid + 1)
        Rp = variation_R(p, self.compact_x, gs)
        Rq = variation_R(q, self.compact_y, gs)
        R_p, R_q = float(Rp["bound"]), float(Rq["bound"])
        growth = 4.0 / d * (R_q + R_p / d)
        sC, sD = _span(self.compact_x), _span(self.compact_y)

        def ok(pm, interval, n, size, floor):
            for g in (float(n), -float(n)):
                pr = self._side_profile(pm, interval, np.array([g]))
                if not (pr["diam"][0] < size and pr["bdist"][0] < size and pr["pmin"][0] > floor):
                    return False
            return True

        j = _least(lambda n: ok(p, self.compact_x, n, d / 4, growth)) - 1 + sC
        k = _least(lambda n: ok(q, self.compact_y, n, d / 4, -1.0)) - 1 + sD
        # translates meeting J reach |x| <= j + 2 span
        M_J = float(p.of_real(j + 2 * sC))
        M_K = float(q.of_real(k + 2 * sD))
        PJ = _least(lambda n: ok(q, self.compact_y, n, d / 2, M_J / d)) - 1 + sD
        QK = _least(lambda n: ok(p, self.compact_x, n, d / 2, M_K / d)) - 1 + sC
        return {"R_p": R_p, "R_q": R_q, "R_p_grid": Rp, "R_q_grid": Rq, "growth_threshold": growth,
                "J": j, "K": k, "M_J": M_J, "M_K": M_K, "P_J": PJ, "Q_K": QK}

    def gamma_rectangles(self, cert: dict) -> list:
        """[(gmax, hmax), ...]: (g, h) is exceptional iff it lies in some
        |g| <= gmax, |h| <= hmax rectangle (g.C meets e([-w, w]) iff |g| <= w + span)."""
        sC, sD = _span(self.compact_x), _span(self.compact_y)
        return [
            (int(math.floor(cert["J"] + sC)), int(math.floor(cert["P_J"] + sD))),
            (int(math.floor(cert["Q_K"] + sC)), int(math.floor(cert["K"] + sD))),
        ]

    @staticmethod
    def in_gamma(rects, g, h):
        g = np.abs(np.asarray(g))
        h = np.abs(np.asarray(h))
        out = np.zeros(np.broadcast(g, h).shape, dtype=bool)
        for a, b in rects:
            out |= (g <= a) & (h <= b)
        return out

    @staticmethod
    def gamma_size(rects) -> int:
        (a1, b1), (a2, b2) = rects
        n1 = (2 * a1 + 1) * (2 * b1 + 1)
        n2 = (2 * a2 + 1) * (2 * b2 + 1)
        overlap = (2 * min(a1, a2) + 1) * (2 * min(b1, b2) + 1)
        return n1 + n2 - overlap

    # fit tests
    def fit(self, cover: JoinCover, g, h) -> dict:
        """Index of a cover element containing gC x hD, vectorized; -1 if none.

        Element order: zero ends, inf ends, interior slopes, then boxes.
        Also returns the slope range for the diam_mu check.
        """
        g = np.asarray(g, dtype=float)
        h = np.asarray(h, dtype=float)
        X = self._side_profile(self.join.proper_x, self.compact_x, g)
        Y = self._side_profile(self.join.proper_y, self.compact_y, h)
        mu_lo = _safe_ratio(Y["pmin"], X["pmax"])
        mu_hi = _safe_ratio(Y["pmax"], X["pmin"])
        idx = np.full(g.shape, -1, dtype=np.int64)
        k = 0

        def far(u0, u1, c):
            return np.maximum(np.abs(u0 - c), np.abs(u1 - c))

        for c, eps in cover.zero:
            ok = (far(X["u0"], X["u1"], c) < eps) & (mu_hi < eps)
            idx = np.where((idx < 0) & ok, k, idx)
            k += 1
        inv_hi = _safe_ratio(np.ones_like(mu_lo), mu_lo)
        for c, eps in cover.inf:
            ok = (far(Y["u0"], Y["u1"], c) < eps) & (inv_hi < eps)
            idx = np.where((idx < 0) & ok, k, idx)
            k += 1
        for xb, yb, m, eps in cover.mid:
            ok = (far(X["u0"], X["u1"], xb) < eps) & (far(Y["u0"], Y["u1"], yb) < eps)
            ok &= (np.abs(mu_lo - m) < eps) & (np.abs(mu_hi - m) < eps)
            idx = np.where((idx < 0) & ok, k, idx)
            k += 1
        # boxes: lattice rectangles (lo + a s, lo + (a + 2) s) in each coordinate
        s, lo = cover.box_step, cover.box_lo
        n = int(round((cover.box_hi - lo) / s))
        ax = np.floor((X["u0"] - lo) / s)
        ay = np.floor((Y["u0"] - lo) / s)
        okx = (X["u0"] > lo + ax * s) & (X["u1"] < lo + (ax + 2) * s) & (ax >= 0) & (ax < n)
        oky = (Y["u0"] > lo + ay * s) & (Y["u1"] < lo + (ay + 2) * s) & (ay >= 0) & (ay < n)
        box = k + ax * n + ay
        idx = np.where((idx < 0) & okx & oky, box.astype(np.int64, copy=False), idx)
        return {"index": idx, "mu_lo": mu_lo, "mu_hi": mu_hi, "X": X, "Y": Y}

    def check(self, R_grid: int = 300, samples: int = 200_000, seed: int = 0) -> dict:
        d = self.delta
        cert = self.certificate(R_grid)
        rects = self.gamma_rectangles(cert)
        size = self.gamma_size(rects)
        grid_contains = all(a <= R_grid and b <= R_grid for a, b in rects)
        cover = canonical_cover(d, box_real=self._box_real(cert))
        rng = np.random.default_rng(seed)
        gs, hs = self._sample_cells(rng, rects, samples)
        keep = ~self.in_gamma(rects, gs, hs)
        gs, hs = gs[keep], hs[keep]
        res = self.fit(cover, gs, hs)
        idx = res["index"]
        misfit = np.flatnonzero(idx < 0)
        # far translates: both sides outside J and K, with a slope in [delta, 1/delta]
        X, Y = res["X"], res["Y"]
        far_x = np.abs(gs) > rects[0][0]
        far_y = np.abs(hs) > rects[1][1]
        far_both = far_x & far_y & (res["mu_hi"] >= d) & (res["mu_lo"] <= 1.0 / d)
        spread = (res["mu_hi"] - res["mu_lo"])[far_both]
        # the grid itself: every cell, checked directly
        G, H = np.meshgrid(np.arange(-R_grid, R_grid + 1), np.arange(-R_grid, R_grid + 1), indexing="ij")
        gfit = self.fit(cover, G.ravel(), H.ravel())["index"]
        grid_exc = self.in_gamma(rects, G.ravel(), H.ravel())
        worst = None
        if misfit.size:
            m = int(misfit[0])
            worst = {"g": int(gs[m]), "h": int(hs[m]), "mu": [float(res["mu_lo"][m]), float(res["mu_hi"][m])]}
        return {
            "delta": d,
            "certificate": {k: v for k, v in cert.items() if not k.endswith("_grid")},
            "R_p_grid": cert["R_p_grid"],
            "R_q_grid": cert["R_q_grid"],
            "gamma_rectangles": rects,
            "gamma_size": size,
            "gamma_finite": True,
            "grid_contains_gamma": grid_contains,
            "grid_cells": int(G.size),
            "grid_cells_exceptional": int(grid_exc.sum()),
            "grid_cells_fitting": int((gfit >= 0).sum()),
            "grid_nonexceptional_misfits": int(((gfit < 0) & ~grid_exc).sum()),
            "cover_size": len(cover),
            "sampled_nonexceptional": int(gs.size),
            "misfits": int(misfit.size),
            "worst_misfit": worst,
            "far_count": int(far_both.sum()),
            "max_diam_mu_far": float(spread.max()) if spread.size else 0.0,
            "diam_mu_bound": d / 2,
            "pass": bool(misfit.size == 0 and (spread.size == 0 or spread.max() < d / 2)
                         and int(((gfit < 0) & ~grid_exc).sum()) == 0),
            "fit_index_sample": [(int(a), int(b), int(c)) for a, b, c in zip(gs[:2000], hs[:2000], idx[:2000])],
        }

    def _box_real(self, cert) -> float:
        """Real half-width of the rectangle lattice; beyond it end and slope
        neighborhoods take over."""
        return float(max(cert["J"], cert["K"], 4.0 / self.delta) + 4)

    @staticmethod
    def _sample_cells(rng, rects, n: int):
        """Translates outside the rectangles: log-uniform pairs, pairs along
        fixed slopes, and cells hugging the rectangle edges."""
        top = 8.0 * max(max(a, b) for a, b in rects) + 10
        third = n // 3
        sign = lambda k: np.where(rng.random(k) < 0.5, -1, 1)
        g1 = sign(third) * np.floor(np.exp(rng.uniform(0, np.log(top), third)))
        h1 = sign(third) * np.floor(np.exp(rng.uniform(0, np.log(top), third)))
        m = np.exp(rng.uniform(np.log(0.05), np.log(20), third))
        base = np.floor(np.exp(rng.uniform(np.log(rects[0][0] + 1), np.log(top), third)))
        g2 = sign(third) * base
        h2 = sign(third) * np.floor(m * base)
        rest = n - 2 * third
        which = rng.integers(0, 2, rest)
        a = np.array([rects[w][0] for w in which], dtype=float)
        b = np.array([rects[w][1] for w in which], dtype=float)
        edge_g = rng.random(rest) < 0.5
        off = rng.integers(1, 4, rest)
        g3 = np.where(edge_g, a + off, np.floor(rng.random(rest) * (a + 1)))
        h3 = np.where(edge_g, np.floor(rng.random(rest) * (b + 1)), b + off)
        g3 *= sign(rest)
        h3 *= sign(rest)
        return (np.concatenate([g1, g2, g3]).astype(np.int64), np.concatenate([h1, h2, h3]).astype(np.int64))


# the product-topology counterexample -------------------------------------------


def product_cover_contains(i: int, xs, y) -> bool:
    """Whether the product-topology set U_i contains every (x, y) for x in xs.

    Reals with -inf and +inf standing for the two added ends; U_0 is read
    as (-3/4, 3/4) x ((-1/2, inf) u {+inf}), and so on.
    """
    xs = np.asarray(xs, dtype=float)
    if i == 0:
        return bool(np.all((xs > -0.75) & (xs < 0.75)) and y > -0.5)
    if i == 1:
        return bool(np.all((xs > -0.75) & (xs < 0.75)) and y < 0.5)
    if i == 2:
        return bool(np.all(xs < -0.5))
    if i == 3:
        return bool(np.all(xs > 0.5))
    raise ValueError("cover index must be 0..3")


def product_cover_covers(x: float, y: float) -> bool:
    return any(product_cover_contains(i, [x], y) for i in range(4))


def reproduce_counterexample(N: int = 100, eps: float = 0.1, J: JoinCompactification | None = None,
                             samples: int = 201) -> dict:
    """Vertical translates [-1, 1] x {n} of C fit no product-topology U_i,
    yet eventually fit a single join neighborhood of <ybar, inf>."""
    if N < 1:
        raise ValueError("range must be at least 1")
    J = J or JoinCompactification()
    xs = np.linspace(-1.0, 1.0, samples)
    product = []
    for n in range(-N, N + 1):
        fits = [i for i in range(4) if product_cover_contains(i, xs, float(n))]
        product.append({"n": n, "fits": fits})
    # membership is decided exactly: p is largest at the interval ends
    pmax = float(J.proper_x.of_real(1.0))
    e = IntLineModel.embed
    rows = []
    for n in range(-N, N + 1):
        ybar = 1.0 if n > 0 else 0.0
        y = e(float(n))
        q = float(J.proper_y.of_real(float(n)))
        ok = n != 0 and abs(y - ybar) < eps and (q > pmax / eps if q > 0 else False)
        rows.append({"n": n, "join_fits": bool(ok)})
    fits = {r["n"]: r["join_fits"] for r in rows}
    n0_pos = _cofinal_start([fits[n] for n in range(1, N + 1)], 1)
    n0_neg = _cofinal_start([fits[-n] for n in range(1, N + 1)], 1)
    product_fail = all(not r["fits"] for r in product)
    return {
        "N": N,
        "eps": eps,
        "product_topology": product,
        "product_never_fits": product_fail,
        "join": rows,
        "n0": n0_pos,
        "n0_negative": -n0_neg if n0_neg is not None else None,
        "p_max_on_C": pmax,
        "pass": bool(product_fail and n0_pos is not None and n0_neg is not None),
    }


def _cofinal_start(flags: list, first: int):
    """Least n such that flags hold from n through the end."""
    n0 = None
    for k in range(len(flags) - 1, -1, -1):
        if not flags[k]:
            break
        n0 = first + k
    return n0
