"""Reduced words in a free product G*H of two factor groups."""

from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence

FACTORS = ("G", "H")


class Letter(NamedTuple):
    factor: str
    element: object

    def __str__(self) -> str:
        return f"{self.factor.lower()}:{self.element}"


class _IdentityToken:
    """Stand-in for the letter w(0) of the empty word."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "IDENTITY"


IDENTITY = _IdentityToken()


class IntegerGroup:
    """The integers under addition; the shipped factor model."""

    identity = 0

    def contains(self, a) -> bool:
        return isinstance(a, int) and not isinstance(a, bool)

    def multiply(self, a: int, b: int) -> int:
        return a + b

    def inverse(self, a: int) -> int:
        return -a

    def parse(self, text: str) -> int:
        return int(text)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntegerGroup)

    def __hash__(self) -> int:
        return hash("IntegerGroup")

    def __repr__(self) -> str:
        return "IntegerGroup()"


class ReducedWord:
    """An immutable alternating sequence of non-identity letters.

    Construct through ``FreeProduct.reduce`` or ``FreeProduct.word``; the
    bare constructor only checks alternation.
    """

    __slots__ = ("letters", "_hash")

    def __init__(self, letters: Iterable[Letter] = ()):
        letters = tuple(Letter(*x) for x in letters)
        for a, b in zip(letters, letters[1:]):
            if a.factor == b.factor:
                raise ValueError(f"letters {a} and {b} do not alternate")
        for x in letters:
            if x.factor not in FACTORS:
                raise ValueError(f"unknown factor tag {x.factor!r}")
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "_hash", hash(letters))

    @classmethod
    def _trusted(cls, letters: tuple) -> ReducedWord:
        w = object.__new__(cls)
        object.__setattr__(w, "letters", letters)
        object.__setattr__(w, "_hash", hash(letters))
        return w

    def __setattr__(self, name, value):
        raise AttributeError("ReducedWord is immutable")

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __eq__(self, other) -> bool:
        return isinstance(other, ReducedWord) and self.letters == other.letters

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: ReducedWord) -> bool:
        return _sort_key(self) < _sort_key(other)

    def __repr__(self) -> str:
        return f"ReducedWord({format_word(self)!r})"

    def __str__(self) -> str:
        return format_word(self)

    @property
    def last(self) -> Letter | None:
        return self.letters[-1] if self.letters else None

    def ends_in(self, factor: str) -> bool:
        return bool(self.letters) and self.letters[-1].factor == factor

    def prefix(self, k: int) -> ReducedWord:
        return prefix(self, k)


ONE = ReducedWord._trusted(())


def _sort_key(w: ReducedWord):
    return (len(w), tuple((x.factor, repr(x.element)) for x in w.letters))


class FreeProduct:
    """The free product of two factor groups, with word arithmetic."""

    def __init__(self, G=None, H=None):
        self.groups = {"G": G or IntegerGroup(), "H": H or IntegerGroup()}

    def _check(self, factor: str, element) -> None:
        if factor not in self.groups:
            raise ValueError(f"unknown factor tag {factor!r}")
        if not self.groups[factor].contains(element):
            raise ValueError(f"{element!r} is not an element of factor {factor}")

    def reduce(self, raw: Iterable[Sequence]) -> ReducedWord:
        stack: list[Letter] = []
        for factor, element in raw:
            self._check(factor, element)
            group = self.groups[factor]
            if element == group.identity:
                continue
            if stack and stack[-1].factor == factor:
                merged = group.multiply(stack[-1].element, element)
                stack.pop()
                if merged != group.identity:
                    stack.append(Letter(factor, merged))
            else:
                stack.append(Letter(factor, element))
        # A cancellation can only expose a same-factor pair at the top of
        # the stack, and that is merged on the next push, so one pass
        # already reaches the fixed point.
        return ReducedWord._trusted(tuple(stack))

    def word(self, letters: Iterable[Sequence]) -> ReducedWord:
        """Build a word that must already be reduced."""
        w = ReducedWord(letters)
        self.validate(w)
        return w

    def validate(self, w: ReducedWord) -> None:
        prev = None
        for x in w.letters:
            self._check(x.factor, x.element)
            if x.element == self.groups[x.factor].identity:
                raise ValueError(f"identity letter in {w!r}")
            if prev is not None and prev == x.factor:
                raise ValueError(f"{w!r} does not alternate")
            prev = x.factor

    def concat(self, w: ReducedWord, v: ReducedWord) -> ReducedWord:
        if not w.letters:
            return v
        if not v.letters:
            return w
        a, b = list(w.letters), list(v.letters)
        while a and b:
            x, y = a[-1], b[0]
            if x.factor != y.factor:
                break
            group = self.groups[x.factor]
            merged = group.multiply(x.element, y.element)
            a.pop()
            b.pop(0)
            if merged != group.identity:
                a.append(Letter(x.factor, merged))
                break
        return ReducedWord._trusted(tuple(a + b))

    def inverse(self, w: ReducedWord) -> ReducedWord:
        return ReducedWord._trusted(
            tuple(Letter(x.factor, self.groups[x.factor].inverse(x.element)) for x in reversed(w.letters))
        )

    def parse(self, text: str) -> ReducedWord:
        text = text.strip()
        if text in ("1", ""):
            return ONE
        letters = []
        for token in text.split(","):
            try:
                tag, elem = token.strip().split(":")
            except ValueError:
                raise ValueError(f"bad letter token {token!r}") from None
            factor = tag.strip().upper()
            if factor not in self.groups:
                raise ValueError(f"unknown factor tag {tag!r}")
            letters.append(Letter(factor, self.groups[factor].parse(elem.strip())))
        return self.word(letters)


ZZ = FreeProduct()


def reduce(raw: Iterable[Sequence], fp: FreeProduct = ZZ) -> ReducedWord:
    return fp.reduce(raw)


def concat(w: ReducedWord, v: ReducedWord, fp: FreeProduct = ZZ) -> ReducedWord:
    return fp.concat(w, v)


def inverse(w: ReducedWord, fp: FreeProduct = ZZ) -> ReducedWord:
    return fp.inverse(w)


def prefix(w: ReducedWord, k: int) -> ReducedWord:
    """The leftmost length-k subword w|_k."""
    if not 0 <= k <= len(w):
        raise ValueError(f"prefix length {k} out of range for word of length {len(w)}")
    if k == len(w):
        return w
    return ReducedWord._trusted(w.letters[:k])


def letter_at(w: ReducedWord, k: int):
    """The k-th letter w(k), 1-based; letter_at(1, 0) is IDENTITY."""
    if k == 0 and not w.letters:
        return IDENTITY
    if not 1 <= k <= len(w):
        raise ValueError(f"index {k} out of range for word of length {len(w)}")
    return w.letters[k - 1]


def parse_word(text: str, fp: FreeProduct = ZZ) -> ReducedWord:
    return fp.parse(text)


def format_word(w: ReducedWord) -> str:
    if not w.letters:
        return "1"
    return ",".join(str(x) for x in w.letters)
