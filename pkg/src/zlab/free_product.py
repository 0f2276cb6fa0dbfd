"""The glued space W for a free product G*H and its compactification.

W is a tree of scaled copies of X^ and Y^.  The copy indexed by a word w
is scaled by r*(w) = prod 2^-r(w(k)); copies are glued at orbit points of
the basepoints.  The gluing tree is never built: paths are read off word
prefixes.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .models import CarrierSet, IntLineModel, ZStructureModel
from .words import ONE, FreeProduct, Letter, ReducedWord, format_word, prefix

OTHER = {"X": "Y", "Y": "X"}
ACTING_FACTOR = {"X": "G", "Y": "H"}
SIDE_OF_FACTOR = {"G": "X", "H": "Y"}
_FACTORS = ("G", "H")
_LOG_GEOMETRIC = math.log(0.65)


@dataclass(frozen=True, eq=True)
class DyadicScale:
    """The exact value 2^-exponent."""

    exponent: int

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("dyadic exponent must be nonnegative")

    @property
    def value(self) -> float:
        return math.ldexp(1.0, -self.exponent)

    def __float__(self) -> float:
        return self.value

    def __mul__(self, other: DyadicScale) -> DyadicScale:
        return DyadicScale(self.exponent + other.exponent)

    def __lt__(self, other: DyadicScale) -> bool:
        return self.exponent > other.exponent

    def __le__(self, other: DyadicScale) -> bool:
        return self.exponent >= other.exponent

    def __str__(self) -> str:
        return f"2^-{self.exponent}"


@dataclass(frozen=True)
class WPoint:
    """A point of W: a translate (word, side) and a carrier coordinate."""

    word: ReducedWord
    side: str
    local: float

    def __str__(self) -> str:
        return f"word={format_word(self.word)}|side={self.side}|local={self.local!r}"


@dataclass(frozen=True)
class TranslateBoundary(WPoint):
    """A boundary point of one translate; the carrier lies in the side's boundary."""


@dataclass(frozen=True)
class End:
    """An end of the gluing tree known through a finite prefix.

    The end lies within the closed branch below ``prefix``; every answer
    about it carries the certified branch radius as a tolerance.
    """

    prefix: ReducedWord

    def __post_init__(self):
        if len(self.prefix) == 0:
            raise ValueError("an end needs a nonempty prefix")

    @property
    def depth(self) -> int:
        return len(self.prefix)

    @property
    def apriori_bound(self) -> float:
        """The a-priori tail bound 2^-(L-1) on the distance to prefix.x0."""
        return math.ldexp(1.0, -(self.depth - 1))

    def __str__(self) -> str:
        return f"end={format_word(self.prefix)}|depth={self.depth}"


@dataclass(frozen=True)
class Approx:
    """A point known up to a distance: the truth lies within ``tolerance`` of ``center``."""

    center: WPoint
    tolerance: float


def parse_point(text: str, fp: FreeProduct | None = None):
    """Parse ``word=...|side=X|local=0.37`` or ``end=...|depth=12``."""
    fp = fp or FreeProduct()
    fields = {}
    for part in text.split("|"):
        if "=" not in part:
            raise ValueError(f"bad point field {part!r}")
        k, v = part.split("=", 1)
        fields[k.strip()] = v.strip()
    if "end" in fields:
        w = fp.parse(fields["end"])
        if "depth" in fields and int(fields["depth"]) != len(w):
            raise ValueError("end depth does not match its prefix length")
        return End(w)
    try:
        return fp.parse(fields["word"]), fields["side"].upper(), float(fields["local"])
    except KeyError as exc:
        raise ValueError(f"point text is missing field {exc}") from None


class FreeProductSpace:
    """The space W and its completion for the free product of two models.

    ``model_x`` is acted on by the factor G, ``model_y`` by H.
    """

    def __init__(self, model_x: ZStructureModel | None = None, model_y: ZStructureModel | None = None):
        self.models = {"X": model_x or IntLineModel(), "Y": model_y or IntLineModel()}
        self.fp = FreeProduct(self.models["X"].group, self.models["Y"].group)
        self.base = {s: m.basepoint for s, m in self.models.items()}
        self._line = {s: isinstance(m, IntLineModel) for s, m in self.models.items()}
        self._r_cache: dict = {}
        self._attach_cache: dict = {}
        self.reach = self._branch_reach()
        self._rsums = lru_cache(maxsize=1 << 16)(self._rsums_uncached)

    # scales ---------------------------------------------------------------
    def r_value(self, letter: Letter) -> int:
        key = tuple(letter)
        n = self._r_cache.get(key)
        if n is None:
            n = self.models[SIDE_OF_FACTOR[letter.factor]].r_value(letter.element)
            self._r_cache[key] = n
        return n

    def _rsums_uncached(self, letters: tuple) -> tuple:
        out = [0]
        for x in letters:
            out.append(out[-1] + self.r_value(x))
        return tuple(out)

    def rstar(self, w: ReducedWord) -> DyadicScale:
        return DyadicScale(self._rsums(w.letters)[-1])

    def scale(self, letters: tuple) -> float:
        return math.ldexp(1.0, -self._rsums(letters)[-1])

    def _branch_reach(self) -> dict:
        """Factors R_s with sup d(w.x0, branch below w) <= R_s * r*(w).

        Fixed point of R_s = max(ecc_s, reach_s(R_other)), iterated down
        from the generic bound 2, so every iterate stays a valid bound.
        """
        R = {"X": 2.0, "Y": 2.0}
        for _ in range(200):
            new = {
                s: min(R[s], max(self.models[s].basepoint_eccentricity, self.models[s].orbit_reach(R[OTHER[s]])))
                for s in R
            }
            if new == R:
                break
            R = new
        return R

    def branch_radius(self, w: ReducedWord) -> float:
        """Certified sup of d(w.x0, z) over z in the closed branch below w."""
        if len(w) == 0:
            return max(self.reach.values())
        return self.reach[self.side_of(w)] * self.scale(w.letters)

    def branch_diameter_bound(self, w: ReducedWord) -> float:
        return 2.0 * self.branch_radius(w)

    # points ---------------------------------------------------------------
    @staticmethod
    def side_of(w: ReducedWord) -> str | None:
        if not w.letters:
            return None
        return "Y" if w.letters[-1].factor == "G" else "X"

    def _attach(self, letter: Letter) -> float:
        """Carrier, in the parent translate, of the gluing point added by ``letter``."""
        key = tuple(letter)
        c = self._attach_cache.get(key)
        if c is None:
            side = SIDE_OF_FACTOR[letter.factor]
            c = self.models[side].act(letter.element, self.base[side])
            self._attach_cache[key] = c
        return c

    def gluing_point(self, w: ReducedWord) -> WPoint:
        """The point w.x0 ~ w.y0 in canonical form."""
        if not w.letters:
            return WPoint(ONE, "X", self.base["X"])
        side = self.side_of(w)
        return WPoint(w, side, self.base[side])

    @property
    def basepoint(self) -> WPoint:
        return self.gluing_point(ONE)

    def point(self, word: ReducedWord, side: str, local) -> WPoint:
        """Canonical form of the point with carrier ``local`` in translate (word, side)."""
        side = side.upper()
        if side not in OTHER:
            raise ValueError(f"unknown side {side!r}")
        own = self.side_of(word)
        if own is not None and own != side:
            raise ValueError(f"translate {format_word(word)} has no {side} copy")
        model = self.models[side]
        model.validate(local)
        if model.is_boundary(local):
            return TranslateBoundary(word, side, local)
        if local == self.base[side] and not word.letters:
            return WPoint(ONE, "X", self.base["X"])
        g = model.orbit_element(local)
        if g is not None:
            letter = Letter(ACTING_FACTOR[side], g)
            return WPoint(ReducedWord._trusted(word.letters + (letter,)), OTHER[side], self.base[OTHER[side]])
        return WPoint(word, side, local)

    def parse_point(self, text: str):
        parsed = parse_point(text, self.fp)
        if isinstance(parsed, End):
            return parsed
        return self.point(*parsed)

    # metric ---------------------------------------------------------------
    def _level0_side(self, p) -> str:
        L = p.word.letters
        if not L:
            return p.side
        return "Y" if L[0].factor == "H" else "X"

    def _ascend(self, letters: tuple, side: str, carrier, level: int, target_side: str):
        """Distance from a carrier of translate (letters, side) up to the
        ancestor (letters[:level], target_side), and the arrival carrier."""
        rs = self._rsums(letters)
        acc = 0.0
        j = len(letters)
        while j > level:
            model = self.models[side]
            acc += math.ldexp(model.rho_hat(carrier, self.base[side]), -rs[j])
            carrier = self._attach(letters[j - 1])
            side = OTHER[side]
            j -= 1
        if side != target_side:
            # the edge between Y0 and X0 at level 0
            acc += self.models["Y"].rho_hat(carrier, self.base["Y"])
            carrier = self.base["X"]
            side = "X"
        return acc, carrier

    def _meeting(self, a, b):
        """Level and side of the lowest common translate of a and b."""
        La, Lb = a.word.letters, b.word.letters
        k = 0
        for x, y in zip(La, Lb):
            if x != y:
                break
            k += 1
        if k > 0:
            return k, ("Y" if La[k - 1].factor == "G" else "X")
        sa, sb = self._level0_side(a), self._level0_side(b)
        return 0, (sa if sa == sb else "X")

    def dist(self, a: WPoint, b: WPoint) -> float:
        La, Lb = a.word.letters, b.word.letters
        if La == Lb and a.side == b.side:
            return math.ldexp(self.models[a.side].rho_hat(a.local, b.local), -self._rsums(La)[-1])
        level, side = self._meeting(a, b)
        da, ca = self._ascend(La, a.side, a.local, level, side)
        db, cb = self._ascend(Lb, b.side, b.local, level, side)
        mid = math.ldexp(self.models[side].rho_hat(ca, cb), -self._rsums(La[:level])[-1])
        # (da + db) is bitwise symmetric, so the sum is too
        return (da + db) + mid

    def approximant(self, p) -> tuple:
        """A W point and tolerance standing in for ``p``."""
        if isinstance(p, End):
            return self.gluing_point(p.prefix), self.branch_radius(p.prefix)
        if isinstance(p, Approx):
            return p.center, p.tolerance
        return p, 0.0

    def dist_bounds(self, a, b) -> tuple:
        """Distance between any two points of the completion, with tolerance."""
        pa, ta = self.approximant(a)
        pb, tb = self.approximant(b)
        return self.dist(pa, pb), ta + tb

    def connecting_sequence(self, a: WPoint, b: WPoint) -> list:
        """Gluing points along the tree path from a's translate to b's."""
        La, Lb = a.word.letters, b.word.letters
        if La == Lb and a.side == b.side:
            return []
        level, side = self._meeting(a, b)
        up, down = [], []
        for seq, p in ((up, a), (down, b)):
            L = p.word.letters
            for j in range(len(L), level, -1):
                seq.append(self.gluing_point(ReducedWord._trusted(L[:j])))
            arrive = ("Y" if L[level - 1].factor == "G" else "X") if level else (
                p.side if not L else self._level0_side(p))
            if level == 0 and arrive != side:
                seq.append(self.gluing_point(ONE))
        path = up + down[::-1]
        if path and path[0] == a:
            path = path[1:]
        if path and path[-1] == b:
            path = path[:-1]
        return path

    # action ---------------------------------------------------------------
    def translate(self, w: ReducedWord, p):
        """The action w.p of the group on W and on translate boundaries."""
        if isinstance(p, End):
            return self.extend_action_boundary(w, p)
        if isinstance(p, TranslateBoundary) and not self.models[p.side].ez:
            raise ValueError("boundary action needs an EZ model")
        u = self.fp.concat(w, p.word)
        if u.letters and u.letters[-1].factor == ACTING_FACTOR[p.side]:
            g = u.letters[-1].element
            local = self.models[p.side].act(g, p.local)
            return self.point(ReducedWord._trusted(u.letters[:-1]), p.side, local)
        return self.point(u, p.side, p.local)

    def extend_action_boundary(self, w: ReducedWord, b):
        for m in self.models.values():
            if not m.ez:
                raise ValueError(f"model {m.name} is not an EZ model")
        if isinstance(b, TranslateBoundary):
            return self.translate(w, b)
        if not isinstance(b, End):
            raise TypeError("expected a boundary point")
        L = len(b.prefix)
        if L < len(w) + 2:
            raise ValueError(f"end prefix of length {L} is too short to translate by a word of length {len(w)}")
        q = self.fp.concat(w, b.prefix)
        return End(prefix(q, min(len(q), L)))

    # core subspaces Z_eps -------------------------------------------------
    def build_z_epsilon(self, eps: float, depth: int = 32) -> ZEpsilonIndex:
        """Prefix-closed M with every branch off M of certified diameter < eps."""
        if not eps > 0:
            raise ValueError("eps must be positive")
        if depth < 1:
            raise ValueError("depth must be at least 1")
        M = {ONE}
        truncated = False
        stack = [ONE]
        while stack:
            v = stack.pop()
            for u in self._children_with_bound(v, lambda u: self.branch_diameter_bound(u) >= eps):
                if len(u) > depth:
                    truncated = True
                    continue
                M.add(u)
                stack.append(u)
        return ZEpsilonIndex(self, eps, frozenset(M), truncated=truncated, depth=depth)

    def _children_with_bound(self, v: ReducedWord, keep):
        """Children v.a passing ``keep``, enumerated by r-level.

        All letters of one r-level share a branch bound and the bound halves
        per level, so the first level failing ``keep`` ends the factor.
        """
        factors = ("G", "H") if not v.letters else ("H" if v.letters[-1].factor == "G" else "G",)
        for factor in factors:
            model = self.models[SIDE_OF_FACTOR[factor]]
            for n in range(1, 1100):
                level = [ReducedWord._trusted(v.letters + (Letter(factor, a),)) for a in model.elements_with_r(n)]
                if not level:
                    continue
                if not keep(level[0]):
                    break
                yield from level

    # epsilon nets ---------------------------------------------------------
    def epsilon_net(self, eps: float, depth: int = 32) -> EpsilonNet:
        """A finite eps-net of the completion, built level by level.

        Translates of length < k, k minimal with 2^-(k-1) < eps/4, are
        covered by eps/2 balls unless their whole branch already sits in a
        ball of the parent; deeper branches are within 2^-(k-1) of a
        covered gluing point, so eps balls cover everything.
        """
        if not eps > 0:
            raise ValueError("eps must be positive")
        if eps > max(self.reach.values()):
            return EpsilonNet([self.basepoint], eps, 1, [(ONE, "X")], [(ONE, "X", self.base["X"])])
        k = 1
        while math.ldexp(1.0, -(k - 1)) >= eps / 4:
            k += 1
        if k > depth:
            raise ValueError(f"net needs depth {k} > cap {depth}")
        half = eps / 2
        centers: list = []
        owners: list = []
        seen = set()
        covered = []
        queue = [(ONE, "X"), (ONE, "Y")]
        while queue:
            w, side = queue.pop(0)
            covered.append((w, side))
            model = self.models[side]
            s = self.scale(w.letters)
            rad = half / s
            single = rad > model.basepoint_eccentricity
            local = [self.base[side]] if single else model.carrier_net(rad)
            for c in local:
                p = self.point(w, side, c)
                if p not in seen:
                    seen.add(p)
                    centers.append(p)
                    owners.append((w, side, c))
            if len(w) >= k - 1:
                continue
            if single:
                edge = None
            else:
                edge = max(min(model.rho_hat(b, c) for c in local) for b in model.boundary_sample())
                edge += model.boundary_mesh
            other = OTHER[side]
            for n in range(1, 1100):
                tail_scale = math.ldexp(s, -n)
                if single:
                    tail = s * model.basepoint_eccentricity + self.reach[other] * tail_scale
                else:
                    tail = s * (math.ldexp(1.0, -(n - 1)) + edge) + self.reach[other] * tail_scale
                if tail < half:
                    break
                for a in model.elements_with_r(n):
                    letter = Letter(ACTING_FACTOR[side], a)
                    at = self._attach(letter)
                    near = min(model.rho_hat(c, at) for c in local)
                    if s * near + self.reach[other] * tail_scale >= half:
                        queue.append((ReducedWord._trusted(w.letters + (letter,)), other))
            else:
                raise RuntimeError("epsilon net tail certificate did not converge")
        return EpsilonNet(centers, eps, k, covered, owners)

    def ancestry(self, q: WPoint) -> list:
        """(letters, side, arrival carrier, distance from q) for q's translate
        and each ancestor translate up to both root copies."""
        return list(self._walk_up(q))

    def _walk_up(self, q: WPoint):
        L = q.word.letters
        rs = self._rsums(L)
        side, carrier, acc = q.side, q.local, 0.0
        yield L, side, carrier, 0.0
        for j in range(len(L), 0, -1):
            acc += math.ldexp(self._gap(side, carrier, self.base[side]), -rs[j])
            carrier = self._attach(L[j - 1])
            side = OTHER[side]
            yield L[: j - 1], side, carrier, acc
        other = OTHER[side]
        yield (), other, self.base[other], acc + self._gap(side, carrier, self.base[side])

    def _gap(self, side: str, a, b) -> float:
        """Carrier distance, skipping validation for the line model's floats."""
        if self._line[side]:
            return abs(a - b)
        return self.models[side].rho_hat(a, b)

    def nearest_center(self, net: EpsilonNet, p) -> tuple:
        """(distance upper bound, center index) for the completion point p.

        The bound can exceed the true nearest distance when the closest
        center belongs to a descendant translate; it is always attained.

        Centers owned by q's ancestor translates are measured along the tree
        path in one pass; a full scan runs only if none is within the radius.
        """
        q, tol = self.approximant(p)
        best, arg = math.inf, -1
        for letters, side, carrier, acc in self._walk_up(q):
            entry = net.owned(letters, side)
            if entry is None:
                continue
            gap, i = self._nearest_owned(side, entry, carrier)
            d = acc + math.ldexp(gap, -self._rsums(letters)[-1])
            if d < best:
                best, arg = d, i
        if best + tol >= net.radius:
            for i, c in enumerate(net.centers):
                d = self.dist(q, c)
                if d < best:
                    best, arg = d, i
        return best + tol, arg

    def _nearest_owned(self, side: str, entry, carrier) -> tuple:
        """(carrier gap, center index) of the owned center closest to ``carrier``."""
        idx, locs = entry
        if self._line[side]:
            k = bisect.bisect_left(locs, carrier)
            if k == len(locs) or (k > 0 and carrier - locs[k - 1] <= locs[k] - carrier):
                k -= 1
            return abs(carrier - locs[k]), idx[k]
        rho = self.models[side].rho_hat
        gaps = [rho(carrier, c) for c in locs]
        k = min(range(len(locs)), key=gaps.__getitem__)
        return gaps[k], idx[k]

    # homotopies -------------------------------------------------------------
    def homotopy_K(self, p, t: float, idx: ZEpsilonIndex):
        """The eps-homotopy collapsing each branch off Z_eps to its attach point."""
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"time {t} outside [0, 1]")
        t = float(t)
        if t == 0.0:
            return p
        if isinstance(p, End):
            L = p.prefix.letters
            m = idx.core_length(p.prefix)
            if m == len(L):
                raise ValueError("end prefix lies inside M; increase the end depth")
            if t > idx.t_value(L):
                return self._run_K(L, self.side_of(p.prefix), self.base[self.side_of(p.prefix)], t, idx)
            return Approx(self.gluing_point(p.prefix), self.branch_radius(p.prefix))
        return self._run_K(p.word.letters, p.side, p.local, t, idx)

    def _run_K(self, letters: tuple, side: str, carrier, t: float, idx: ZEpsilonIndex):
        while True:
            n = len(letters)
            m = idx.core_length_letters(letters)
            if m == n:
                return self.point(ReducedWord._trusted(letters), side, carrier)
            tw = idx.t_value(letters)
            if t <= tw:
                local = self.models[side].zset_homotopy(carrier, t / tw)
                return self.point(ReducedWord._trusted(letters), side, local)
            carrier = self._attach(letters[-1])
            letters = letters[:-1]
            side = OTHER[side]

    def project_psi(self, p, idx: ZEpsilonIndex):
        w = p.prefix if isinstance(p, End) else p.word
        m = idx.core_length(w)
        if m == len(w):
            if isinstance(p, End):
                raise ValueError("end prefix lies inside M; increase the end depth")
            return p
        return self.gluing_point(prefix(w, m + 1))

    @property
    def base_index(self) -> ZEpsilonIndex:
        """The core X0 u Y0 used by homotopy P."""
        idx = getattr(self, "_base_index", None)
        if idx is None:
            idx = ZEpsilonIndex(self, 1.0, frozenset({ONE}))
            self._base_index = idx
        return idx

    def homotopy_P(self, p, t: float):
        """A homotopy pushing the whole completion into W at positive times.

        On a first-level branch below a, run K at speed 2^r(a) until
        t = 2^-r(a), then follow the base homotopy of the copy holding a.x0.
        """
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"time {t} outside [0, 1]")
        t = float(t)
        if t == 0.0:
            return p
        w = p.prefix if isinstance(p, End) else p.word
        if not w.letters:
            return self.point(ONE, p.side, self.models[p.side].zset_homotopy(p.local, t))
        a = w.letters[0]
        ra = self.r_value(a)
        if t <= math.ldexp(1.0, -ra):
            return self.homotopy_K(p, min(1.0, math.ldexp(t, ra)), self.base_index)
        side = SIDE_OF_FACTOR[a.factor]
        return self.point(ONE, side, self.models[side].zset_homotopy(self._attach(a), t))

    # compacta and the null condition ---------------------------------------
    def translate_pieces(self, w: ReducedWord, C: FreeCompactum) -> list:
        """w.C as (translate word, side, carrier set) pieces."""
        X, Y = self.models["X"], self.models["Y"]
        if not w.letters:
            return [(ONE, "X", C.x), (ONE, "Y", C.y)]
        last = w.letters[-1]
        v = ReducedWord._trusted(w.letters[:-1])
        if last.factor == "G":
            return [(v, "X", X.translate_set(last.element, C.x)), (w, "Y", C.y)]
        return [(w, "X", C.x), (v, "Y", Y.translate_set(last.element, C.y))]

    def translate_diameter(self, w: ReducedWord, C: FreeCompactum) -> float:
        """d-diameter of w.C; both pieces contain the gluing point w.x0."""
        (w1, s1, S1), (w2, s2, S2) = self.translate_pieces(w, C)
        g = self.gluing_point(w)
        c1 = self._carrier_of(g, w1, s1)
        c2 = self._carrier_of(g, w2, s2)
        m1, m2 = self.models[s1], self.models[s2]
        k1, k2 = self.scale(w1.letters), self.scale(w2.letters)
        return max(
            k1 * m1.set_diameter(S1),
            k2 * m2.set_diameter(S2),
            k1 * m1.set_reach(S1, c1) + k2 * m2.set_reach(S2, c2),
        )

    def _carrier_of(self, g: WPoint, w: ReducedWord, side: str):
        """Carrier of the gluing point g inside translate (w, side), which must hold it."""
        if g.word == w and g.side == side:
            return g.local
        if not g.word.letters:
            return self.base[side]
        if g.word.letters[:-1] == w.letters:
            return self._attach(g.word.letters[-1])
        raise ValueError("gluing point is not in that translate")

    def exceptional_translates(self, C: FreeCompactum, eps: float, depth: int) -> tuple:
        """All words w with |w| <= depth and diam(w.C) >= eps, plus a flag
        telling whether the depth cap cut the enumeration short."""
        gamma = []
        truncated = False
        if self.translate_diameter(ONE, C) >= eps:
            gamma.append(ONE)
        stack = [ONE]
        while stack:
            v = stack.pop()
            s = self.scale(v.letters)
            factors = ("G", "H") if not v.letters else ("H" if v.letters[-1].factor == "G" else "G",)
            for factor in factors:
                side = SIDE_OF_FACTOR[factor]
                model = self.models[side]
                S, T = (C.x, C.y) if side == "X" else (C.y, C.x)
                om = self.models[OTHER[side]]
                other_size = max(om.set_diameter(T), om.set_reach(T, self.base[OTHER[side]]))
                for n in range(1, 1100):
                    tail = s * model.translate_null_bound(S, n) + math.ldexp(s, -n) * other_size
                    grow = 2.0 * self.reach[OTHER[side]] * math.ldexp(s, -n)
                    if tail < eps and grow < eps:
                        break
                    for a in model.elements_with_r(n):
                        u = ReducedWord._trusted(v.letters + (Letter(factor, a),))
                        if len(u) > depth:
                            truncated = True
                            continue
                        if self.translate_diameter(u, C) >= eps:
                            gamma.append(u)
                        if grow >= eps:
                            stack.append(u)
                else:
                    raise RuntimeError("null enumeration did not converge")
        return sorted(gamma), truncated

    def pieces_meet(self, P, Q) -> bool:
        (w1, s1, S1), (w2, s2, S2) = P, Q
        if w1 == w2 and s1 == s2:
            return self.models[s1].sets_meet(S1, S2)
        # adjacent translates share exactly one gluing point
        for child, parent in (((w1, s1), (w2, s2)), ((w2, s2), (w1, s1))):
            (cw, cs), (pw, ps) = child, parent
            if cs == ps:
                continue
            if (cw.letters and cw.letters[:-1] == pw.letters) or (not cw.letters and not pw.letters and cs == "Y"):
                g = self.gluing_point(cw)
                Sc = S1 if child == (w1, s1) else S2
                Sp = S2 if child == (w1, s1) else S1
                if self.models[cs].set_contains(Sc, self._carrier_of(g, cw, cs)) and self.models[ps].set_contains(
                    Sp, self._carrier_of(g, pw, ps)
                ):
                    return True
        return False

    def translates_meeting(self, C: FreeCompactum, depth: int) -> list:
        """All words w, |w| <= depth, with w.C meeting C."""
        base = self.translate_pieces(ONE, C)
        found = []
        cand = {
            "G": self.models["X"].elements_meeting(C.x, C.x) + self.models["X"].elements_meeting(
                CarrierSet((self.base["X"],), 0.0, (self.base["X"],) * 2, (0.0, 0.0)), C.x),
            "H": self.models["Y"].elements_meeting(C.y, C.y) + self.models["Y"].elements_meeting(
                CarrierSet((self.base["Y"],), 0.0, (self.base["Y"],) * 2, (0.0, 0.0)), C.y),
        }
        cand = {f: sorted(set(v) - {self.models[SIDE_OF_FACTOR[f]].group.identity}) for f, v in cand.items()}
        stack = [ONE]
        while stack:
            w = stack.pop()
            pieces = self.translate_pieces(w, C)
            if any(self.pieces_meet(P, Q) for P in pieces for Q in base):
                found.append(w)
            # a branch below a word of length >= 2 never returns to X0 u Y0
            if len(w) >= min(depth, 2):
                continue
            factors = ("G", "H") if not w.letters else ("H" if w.letters[-1].factor == "G" else "G",)
            for f in factors:
                for a in cand[f]:
                    stack.append(ReducedWord._trusted(w.letters + (Letter(f, a),)))
        return sorted(found)

    # sampling ---------------------------------------------------------------
    def random_word(self, rng: np.random.Generator, length: int) -> ReducedWord:
        """Alternating letters; sizes mostly geometric(0.35), one in ten uniform up to 10^4."""
        if length <= 0:
            rng.random()
            return ONE
        u = rng.random(3 * length + 1).tolist()
        factor = 0 if u[0] < 0.5 else 1
        letters = []
        for k in range(length):
            kind, size, sign = u[3 * k + 1: 3 * k + 4]
            if kind < 0.1:
                mag = 1 + int(size * 9999)
            else:
                mag = max(1, math.ceil(math.log1p(-size) / _LOG_GEOMETRIC))
            letters.append(Letter(_FACTORS[factor], mag if sign < 0.5 else -mag))
            factor ^= 1
        return ReducedWord._trusted(tuple(letters))

    def random_point(self, rng: np.random.Generator, depth: int, boundary_rate: float = 0.05):
        """A random point of W or of a translate boundary, words up to ``depth``."""
        w = self.random_word(rng, int(rng.integers(0, depth + 1)))
        side = self.side_of(w) or ("X" if rng.random() < 0.5 else "Y")
        model = self.models[side]
        u = rng.random()
        if u < boundary_rate:
            local = model.boundary_sample()[int(rng.integers(len(model.boundary_sample())))]
        elif u < 2 * boundary_rate:
            local = self.base[side]
        else:
            local = model.sample(rng, 1)[0]
        return self.point(w, side, local)

    def random_end(self, rng: np.random.Generator, depth: int) -> End:
        return End(self.random_word(rng, depth))


@dataclass(frozen=True)
class FreeCompactum:
    """A compactum of X0 u Y0: one carrier set in each base copy, each containing the basepoint."""

    x: CarrierSet
    y: CarrierSet


def line_compactum(lo: float = -0.5, hi: float = 0.5, n: int = 9) -> FreeCompactum:
    """e([lo, hi]) in both base copies of the line-model space."""
    m = IntLineModel()
    return FreeCompactum(m.interval(lo, hi, n), m.interval(lo, hi, n))


class ZEpsilonIndex:
    """The prefix-closed word set M with the maps m(w) and j(w)."""

    def __init__(self, space: FreeProductSpace, epsilon: float, M, truncated: bool = False, depth: int = 32):
        M = frozenset(M)
        if ONE not in M:
            raise ValueError("M must contain the empty word")
        for w in M:
            if len(w) and prefix(w, len(w) - 1) not in M:
                raise ValueError(f"M is not prefix-closed at {format_word(w)}")
        self.space = space
        self.epsilon = epsilon
        self.core = M
        self.truncated = truncated
        self.depth = depth
        self._letters = {w.letters for w in M}

    def core_length_letters(self, letters: tuple) -> int:
        k = 0
        while k < len(letters) and letters[: k + 1] in self._letters:
            k += 1
        return k

    def core_length(self, w: ReducedWord) -> int:
        return self.core_length_letters(w.letters)

    def overhang(self, w: ReducedWord) -> int:
        return len(w) - self.core_length(w)

    def t_exponent(self, letters: tuple) -> int:
        """Sum of r over the last j-1 letters (0 when j = 1)."""
        j = len(letters) - self.core_length_letters(letters)
        rs = self.space._rsums(letters)
        return rs[-1] - rs[len(letters) - (j - 1)] if j >= 1 else 0

    def t_value(self, letters: tuple) -> float:
        return math.ldexp(1.0, -self.t_exponent(letters))

    def t_of_w(self, w: ReducedWord) -> DyadicScale:
        if self.overhang(w) < 2:
            raise ValueError(f"t(w) needs j(w) >= 2, got {self.overhang(w)}")
        return DyadicScale(self.t_exponent(w.letters))

    def contains(self, p) -> bool:
        """Whether a W point lies in Z_eps; a gluing point also lies in its parent translate."""
        if p.word in self.core:
            return True
        L = p.word.letters
        return bool(L) and p == self.space.gluing_point(p.word) and L[:-1] in self._letters

    def __repr__(self) -> str:
        return f"ZEpsilonIndex(eps={self.epsilon}, |M|={len(self.core)}, truncated={self.truncated})"


@dataclass
class EpsilonNet:
    """Centers of an eps-net of the completion; ``owners`` records the
    translate and carrier each center was generated from."""

    centers: list
    radius: float
    k: int
    translates: list = field(default_factory=list)
    owners: list = field(default_factory=list)

    def __post_init__(self):
        groups: dict = {}
        for i, (w, side, c) in enumerate(self.owners):
            groups.setdefault((w.letters, side), []).append((i, c))
        # per translate: center indices and carriers, sorted by carrier
        self._by_owner = {}
        for key, v in groups.items():
            v.sort(key=lambda item: item[1])
            self._by_owner[key] = ([i for i, _ in v], [c for _, c in v])

    def owned(self, letters: tuple, side: str):
        return self._by_owner.get((letters, side))

    def __len__(self) -> int:
        return len(self.centers)

    def __iter__(self):
        return iter((c, self.radius) for c in self.centers)
