"""Compact metric models (X^, rho, boundary, basepoint, action, homotopy).

A model describes one factor of a product.  Points are carrier
coordinates; for the shipped integer-line model a carrier point is a float
in [0, 1], the closure of the embedded real line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .words import IntegerGroup


@dataclass(frozen=True)
class CarrierSet:
    """A compactum in one model: a finite cloud plus a covering radius.

    ``hull`` is the exact carrier interval when the set is an interval of a
    one-dimensional model; checks prefer it over the cloud.  ``real`` keeps
    the interval in model coordinates so translates stay exact.
    """

    points: tuple
    radius: float = 0.0
    hull: tuple | None = None
    real: tuple | None = None


class ZStructureModel:
    """Base class for pluggable models.

    Subclasses must provide the carrier metric, boundary predicate, action
    and the slowed Z-set homotopy.  The generic boundary distance minimizes
    over ``boundary_sample()`` and corrects by ``boundary_mesh``.
    """

    name = "abstract"
    basepoint = None
    ez = False
    basepoint_eccentricity = 1.0
    boundary_mesh = 0.0

    def __init__(self, group=None):
        self.group = group if group is not None else IntegerGroup()

    # geometry -----------------------------------------------------------
    def validate(self, a) -> None:
        raise NotImplementedError

    def rho_hat(self, a, b) -> float:
        raise NotImplementedError

    def is_boundary(self, a) -> bool:
        raise NotImplementedError

    def boundary_sample(self) -> list:
        raise NotImplementedError

    def boundary_distance(self, a) -> float:
        self.validate(a)
        best = min(self.rho_hat(a, b) for b in self.boundary_sample())
        return max(0.0, best - self.boundary_mesh)

    def carrier_net(self, spacing: float) -> list:
        """Points such that every carrier point lies within spacing/2 of one."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> list:
        raise NotImplementedError

    # group action -------------------------------------------------------
    def act(self, g, a):
        raise NotImplementedError

    def orbit_element(self, a):
        """The non-identity g with g.x0 == a exactly, else None."""
        return None

    def r_value(self, g) -> int:
        """Unique n >= 1 with 1/2^n <= rho(g.x0, boundary) < 1/2^(n-1)."""
        d = self.boundary_distance(self.act(g, self.basepoint))
        if not 0 < d <= 1:
            raise ValueError(f"boundary distance {d} outside (0, 1]")
        if d >= 0.5:
            return 1
        _, e = math.frexp(d)
        return 1 - e

    def elements_with_r(self, n: int) -> Iterable:
        """All non-identity elements with r-value exactly n (a finite set)."""
        raise NotImplementedError

    def orbit_reach(self, R: float) -> float:
        """Upper bound for sup_g rho(x0, g.x0) + 2^-r(g) * R over g != 1."""
        return 1.0 + R / 2

    # homotopy -----------------------------------------------------------
    def zset_homotopy(self, a, t: float):
        raise NotImplementedError

    # compacta -----------------------------------------------------------
    def translate_set(self, g, S: CarrierSet) -> CarrierSet:
        raise NotImplementedError

    def set_diameter(self, S: CarrierSet) -> float:
        pts = S.points
        d = max((self.rho_hat(a, b) for a in pts for b in pts), default=0.0)
        return min(1.0, d + 2 * S.radius)

    def set_reach(self, S: CarrierSet, c) -> float:
        """Upper bound for sup over the set of rho(c, .)."""
        return min(1.0, max(self.rho_hat(c, a) for a in S.points) + S.radius)

    def set_contains(self, S: CarrierSet, c) -> bool:
        return min(self.rho_hat(c, a) for a in S.points) <= S.radius

    def sets_meet(self, S: CarrierSet, T: CarrierSet) -> bool:
        return any(self.rho_hat(a, b) <= S.radius + T.radius for a in S.points for b in T.points)

    def elements_meeting(self, S: CarrierSet, T: CarrierSet) -> list:
        """A finite list containing every g with g.S meeting T."""
        raise NotImplementedError

    def translate_null_bound(self, S: CarrierSet, n: int) -> float:
        """Bound on diam(g.S) and reach(g.S, g.x0) over all g with r(g) >= n."""
        return math.inf

    # proper-metric gauge ------------------------------------------------
    def gauge(self, a) -> float:
        """Continuous f with f(x0) = 0 and f = 1 exactly on the boundary."""
        raise NotImplementedError


def _check_time(t: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"time {t} outside [0, 1]")


class IntLineModel(ZStructureModel):
    """The real line with Z acting by translation, compactified by two points.

    Carrier coordinate u = e(x) = 1/2 + x / (2 (1 + |x|)); the boundary is
    {0, 1} and the basepoint is e(0) = 1/2.  Translation extends to the
    closure fixing both ends, so this is an EZ model.
    """

    name = "int-line"
    basepoint = 0.5
    ez = True
    basepoint_eccentricity = 0.5
    boundary_mesh = 0.0

    @staticmethod
    def embed(x: float) -> float:
        if math.isinf(x):
            return 1.0 if x > 0 else 0.0
        return 0.5 + x / (2.0 * (1.0 + abs(x)))

    @staticmethod
    def real(u: float) -> float:
        if u <= 0.0:
            return -math.inf
        if u >= 1.0:
            return math.inf
        # per-half closed forms avoid cancellation in 2u - 1 near the ends
        if u < 0.5:
            return 1.0 - 0.5 / u
        return 0.5 / (1.0 - u) - 1.0

    def validate(self, a) -> None:
        if type(a) is float and 0.0 <= a <= 1.0:
            return
        if not isinstance(a, (float, int)) or isinstance(a, bool) or not 0.0 <= a <= 1.0:
            raise ValueError(f"invalid carrier coordinate {a!r} (need a number in [0, 1])")

    def rho_hat(self, a, b) -> float:
        self.validate(a)
        self.validate(b)
        return abs(a - b)

    def is_boundary(self, a) -> bool:
        return a == 0.0 or a == 1.0

    def boundary_sample(self) -> list:
        return [0.0, 1.0]

    def boundary_distance(self, a) -> float:
        self.validate(a)
        return min(a, 1.0 - a)

    def carrier_net(self, spacing: float) -> list:
        n = max(1, math.ceil(1.0 / spacing))
        return [i / n for i in range(n + 1)]

    def sample(self, rng, n):
        return rng.random(n).tolist()

    def act(self, g, a):
        self.validate(a)
        if not self.group.contains(g):
            raise ValueError(f"{g!r} is not a group element")
        if self.is_boundary(a):
            return a
        if g == 0:
            return a
        n = self.orbit_element(a)
        if n is not None or a == 0.5:
            return self.embed(float((n or 0) + g))
        return self.embed(self.real(a) + g)

    def orbit_element(self, a):
        if self.is_boundary(a) or a == 0.5:
            return None
        x = self.real(a)
        if abs(x) > 2**52:
            return None
        n = round(x)
        if n != 0 and self.embed(float(n)) == a:
            return n
        return None

    def r_value(self, g) -> int:
        if not self.group.contains(g):
            raise ValueError(f"{g!r} is not a group element")
        # 2^(n-2) < 1 + |g| <= 2^(n-1)
        return 1 + abs(g).bit_length()

    def elements_with_r(self, n: int) -> Iterator[int]:
        if n < 2:
            return
        for m in range(1 << (n - 2), 1 << (n - 1)):
            yield m
            yield -m

    def orbit_reach(self, R: float) -> float:
        # rho(x0, g x0) + 2^-r(g) R <= 1/2 + (R - 1) / (2 (1 + |g|)), see
        # 2^-r(g) <= 1 / (2 (1 + |g|)); the sup is 1/2 when R <= 1.
        if R <= 1.0:
            return 0.5
        return 0.5 + (R - 1.0) / 4.0

    def zset_homotopy(self, a, t: float):
        """Clamp into [t/2, 1 - t/2] for t <= 1/2, then drift linearly to 1/2.

        Points at boundary distance >= t are untouched, which gives the
        slowed property at every dyadic time.
        """
        self.validate(a)
        _check_time(t)
        t = float(t)
        if t <= 0.5:
            c = 0.5 * t
            return min(max(a, c), 1.0 - c)
        v = min(max(a, 0.25), 0.75)
        s = 2.0 * t - 1.0
        return 0.5 + (1.0 - s) * (v - 0.5)

    def interval(self, lo: float, hi: float, n: int = 9) -> CarrierSet:
        """The compactum e([lo, hi]) with an n-point cloud."""
        if lo > hi:
            raise ValueError("empty interval")
        xs = np.linspace(lo, hi, n) if n > 1 else np.array([lo])
        pts = tuple(self.embed(float(x)) for x in xs)
        gap = max((b - a for a, b in zip(pts, pts[1:])), default=0.0)
        return CarrierSet(pts, gap / 2, (self.embed(lo), self.embed(hi)), (lo, hi))

    def translate_set(self, g, S: CarrierSet) -> CarrierSet:
        if S.real is None:
            raise ValueError("line-model compacta must carry their real interval")
        lo, hi = S.real
        return self.interval(lo + g, hi + g, len(S.points))

    def set_diameter(self, S: CarrierSet) -> float:
        return S.hull[1] - S.hull[0]

    def set_reach(self, S: CarrierSet, c) -> float:
        return max(abs(c - S.hull[0]), abs(S.hull[1] - c))

    def set_contains(self, S: CarrierSet, c) -> bool:
        return S.hull[0] <= c <= S.hull[1]

    def sets_meet(self, S: CarrierSet, T: CarrierSet) -> bool:
        return S.hull[0] <= T.hull[1] and T.hull[0] <= S.hull[1]

    def elements_meeting(self, S: CarrierSet, T: CarrierSet) -> list:
        (a, b), (c, d) = S.real, T.real
        return list(range(math.ceil(c - b), math.floor(d - a) + 1))

    def translate_null_bound(self, S: CarrierSet, n: int) -> float:
        lo, hi = S.real
        m = max(abs(lo), abs(hi))
        A = 1 << max(n - 2, 0)
        if A <= m:
            return 1.0
        # e has derivative 1 / (2 (1 + |x|)^2); g.S sits at |x| >= A - m
        return max(hi - lo, m) / (2.0 * (1.0 + A - m) ** 2)

    def gauge(self, a) -> float:
        self.validate(a)
        return 2.0 * abs(a - 0.5)


class TabulatedRModel(IntLineModel):
    """The line model with some r-values overridden by a table.

    Used to replay worked examples whose r-values no geometric model
    realizes; only word-scale arithmetic should be run on it.
    """

    name = "int-line-tabulated"

    def __init__(self, table: dict, group=None):
        super().__init__(group)
        for g, n in table.items():
            if not isinstance(n, int) or n < 1:
                raise ValueError(f"r-value for {g!r} must be a positive integer")
        self.table = dict(table)

    def r_value(self, g) -> int:
        if g in self.table:
            return self.table[g]
        return super().r_value(g)


MODELS = {"int-line": IntLineModel}


def get_model(name: str) -> ZStructureModel:
    try:
        return MODELS[name]()
    except KeyError:
        raise ValueError(f"unknown model {name!r}; known: {sorted(MODELS)}") from None
