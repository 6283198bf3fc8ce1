"""Words, substitutions, exact integer matrices and simplex points.

Letters are the integers ``1..d``.  A word is a tuple of letters; long words
that are only scanned (languages, clouds, discrepancy traces) are handled as
``bytes`` with one letter per byte, which keeps slicing and hashing cheap.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import cached_property
from itertools import chain
from typing import Iterable, Sequence, Union

import mpmath

from .errors import ParseError

Word = tuple  # tuple[int, ...]
IntMatrix = tuple  # tuple[tuple[int, ...], ...], row major

DEFAULT_PRECISION = 256


# ---------------------------------------------------------------- words

def abelianize(w: Iterable[int], d: int) -> tuple[int, ...]:
    counts = [0] * d
    for a in w:
        counts[a - 1] += 1
    return tuple(counts)


def parse_word(text: str, d: int | None = None) -> Word:
    """Parse ``"132"`` or ``"1 3 12"`` (space separated, needed for d > 9)."""
    text = text.strip()
    if not text:
        return ()
    if " " in text or "," in text or (d is not None and d > 9):
        letters = tuple(int(t) for t in re.split(r"[ ,]+", text) if t)
    else:
        letters = tuple(int(c) for c in text)
    if any(a < 1 or (d is not None and a > d) for a in letters):
        raise ParseError(f"letter out of range in {text!r}")
    return letters


def format_word(w: Iterable[int], d: int | None = None) -> str:
    w = tuple(w)
    if d is None:
        d = max(w, default=1)
    if d <= 9:
        return "".join(str(a) for a in w)
    return " ".join(str(a) for a in w)


def word_to_bytes(w: Iterable[int]) -> bytes:
    return bytes(w)


# ---------------------------------------------------------------- matrices

def identity(d: int) -> IntMatrix:
    return tuple(tuple(int(i == j) for j in range(d)) for i in range(d))


def as_matrix(rows: Sequence[Sequence[int]]) -> IntMatrix:
    return tuple(tuple(int(v) for v in row) for row in rows)


def transpose(m: IntMatrix) -> IntMatrix:
    return tuple(zip(*m))


def mat_mul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    cols = tuple(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in cols) for row in a)


def mat_vec(a: IntMatrix, v: Sequence) -> tuple:
    return tuple(sum(x * y for x, y in zip(row, v)) for row in a)


def mat_pow(m: IntMatrix, k: int) -> IntMatrix:
    result = identity(len(m))
    base = m
    while k:
        if k & 1:
            result = mat_mul(result, base)
        base = mat_mul(base, base)
        k >>= 1
    return result


def is_positive(m: IntMatrix) -> bool:
    return all(v > 0 for row in m for v in row)


def det(m: IntMatrix) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    a = [list(row) for row in m]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def inverse(m: IntMatrix) -> tuple[tuple[Fraction, ...], ...]:
    """Exact inverse over Q (Gauss-Jordan on fractions)."""
    n = len(m)
    a = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(m)]
    for c in range(n):
        p = next((r for r in range(c, n) if a[r][c] != 0), None)
        if p is None:
            raise ZeroDivisionError("singular matrix")
        a[c], a[p] = a[p], a[c]
        piv = a[c][c]
        a[c] = [v / piv for v in a[c]]
        for r in range(n):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return tuple(tuple(row[n:]) for row in a)


def inverse_unimodular(m: IntMatrix) -> IntMatrix:
    inv = inverse(m)
    if any(v.denominator != 1 for row in inv for v in row):
        raise ValueError("matrix is not unimodular")
    return tuple(tuple(int(v) for v in row) for row in inv)


# ---------------------------------------------------------------- substitutions

class Substitution:
    """Non-erasing substitution on ``{1..d}``; ``images[j-1]`` is the image of j."""

    __slots__ = ("d", "images", "__dict__")

    def __init__(self, images: Sequence[Sequence[int]], name: str | None = None):
        images = tuple(tuple(int(a) for a in img) for img in images)
        d = len(images)
        if d == 0:
            raise ValueError("empty alphabet")
        for j, img in enumerate(images, 1):
            if not img:
                raise ValueError(f"image of {j} is empty")
            if any(a < 1 or a > d for a in img):
                raise ValueError(f"image of {j} uses a letter outside 1..{d}")
        self.d = d
        self.images = images
        self.name = name

    @classmethod
    def from_dict(cls, rules: dict, name: str | None = None) -> "Substitution":
        d = max(rules)
        return cls([rules[j] for j in range(1, d + 1)], name=name)

    @classmethod
    def parse(cls, text: str, name: str | None = None) -> "Substitution":
        """Parse ``"1->13;2->12;3->2"`` (``;`` or newlines between rules)."""
        rules = {}
        for part in re.split(r"[;\n]+", text):
            part = part.strip()
            if not part:
                continue
            m = re.fullmatch(r"(\d+)\s*->\s*(.*)", part)
            if m is None:
                raise ParseError(f"bad rule {part!r}")
            j = int(m.group(1))
            if j in rules:
                raise ParseError(f"letter {j} defined twice")
            img = m.group(2).strip()
            if not img:
                raise ParseError(f"empty image for {j}")
            rules[j] = img
        if not rules:
            raise ParseError("no rules")
        d = max(rules)
        if sorted(rules) != list(range(1, d + 1)):
            raise ParseError("rules must cover letters 1..d")
        try:
            return cls([parse_word(rules[j], d) for j in range(1, d + 1)], name=name)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc

    @classmethod
    def identity(cls, d: int) -> "Substitution":
        return cls([(j,) for j in range(1, d + 1)], name="id")

    def __call__(self, w: Iterable[int]) -> Word:
        return self.apply(w)

    def apply(self, w: Iterable[int]) -> Word:
        images = self.images
        return tuple(chain.from_iterable(images[a - 1] for a in w))

    @cached_property
    def byte_images(self) -> tuple[bytes, ...]:
        # indexed by the letter itself; slot 0 unused
        return (b"",) + tuple(bytes(img) for img in self.images)

    def apply_bytes(self, w: bytes) -> bytes:
        images = self.byte_images
        return b"".join([images[a] for a in w])

    def __matmul__(self, other: "Substitution") -> "Substitution":
        return compose(self, other)

    @cached_property
    def incidence(self) -> IntMatrix:
        d = self.d
        cols = [abelianize(img, d) for img in self.images]
        return tuple(tuple(cols[j][i] for j in range(d)) for i in range(d))

    def is_left_proper(self) -> bool:
        return len({img[0] for img in self.images}) == 1

    def __eq__(self, other):
        return isinstance(other, Substitution) and self.images == other.images

    def __hash__(self):
        return hash(self.images)

    def __repr__(self):
        rules = ";".join(f"{j}->{format_word(img, self.d)}" for j, img in enumerate(self.images, 1))
        return f"Substitution({rules!r})"

    def to_text(self) -> str:
        return ";".join(f"{j}->{format_word(img, self.d)}" for j, img in enumerate(self.images, 1))


def compose(sigma: Substitution, rho: Substitution) -> Substitution:
    """``sigma o rho``: letter j maps to ``sigma(rho(j))``."""
    if sigma.d != rho.d:
        raise ValueError("dimension mismatch")
    return Substitution([sigma.apply(img) for img in rho.images])


def compose_all(subs: Sequence[Substitution]) -> Substitution:
    result = subs[0]
    for s in subs[1:]:
        result = compose(result, s)
    return result


def power(sigma: Substitution, k: int) -> Substitution:
    result = Substitution.identity(sigma.d)
    for _ in range(k):
        result = compose(result, sigma)
    return result


def apply(sigma: Substitution, w: Iterable[int]) -> Word:
    return sigma.apply(w)


def incidence(sigma: Substitution) -> IntMatrix:
    return sigma.incidence


# ---------------------------------------------------------------- simplex points

Number = Union[Fraction, "mpmath.mpf"]


class SimplexPoint:
    """Point of the standard simplex, exact (``Fraction``) or ``mpf`` coordinates.

    ``exact`` is True in rational mode.  Float-mode coordinates carry the
    working precision in bits; the sum is 1 up to ``d * 2**(1 - precision)``.
    """

    __slots__ = ("coords", "exact", "precision")

    def __init__(self, coords: Sequence, precision: int = DEFAULT_PRECISION, normalize: bool = True):
        coords = list(coords)
        exact = all(isinstance(c, (int, Fraction)) for c in coords)
        if exact:
            coords = [Fraction(c) for c in coords]
            if any(c < 0 for c in coords):
                raise ValueError("negative coordinate")
            s = sum(coords)
            if s == 0:
                raise ValueError("zero vector")
            if normalize:
                coords = [c / s for c in coords]
            elif s != 1:
                raise ValueError("coordinates do not sum to 1")
        else:
            with mpmath.workprec(precision):
                coords = [mpmath.mpf(c) for c in coords]
                if any(c < 0 for c in coords):
                    raise ValueError("negative coordinate")
                if normalize:
                    s = mpmath.fsum(coords)
                    coords = [c / s for c in coords]
        self.coords = tuple(coords)
        self.exact = exact
        self.precision = precision

    @property
    def d(self) -> int:
        return len(self.coords)

    def __len__(self):
        return len(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def __iter__(self):
        return iter(self.coords)

    def __eq__(self, other):
        return isinstance(other, SimplexPoint) and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return f"SimplexPoint({', '.join(format_number(c) for c in self.coords)})"

    def to_floats(self) -> tuple[float, ...]:
        return tuple(float(c) for c in self.coords)

    def to_mpf(self, precision: int | None = None) -> tuple:
        with mpmath.workprec(precision or self.precision):
            if self.exact:
                return tuple(mpmath.mpf(c.numerator) / c.denominator for c in self.coords)
            return tuple(+c for c in self.coords)


def format_number(c) -> str:
    if isinstance(c, Fraction):
        return str(c)
    if isinstance(c, int):
        return str(c)
    return mpmath.nstr(c, 30)


def parse_vector(text: str, precision: int = DEFAULT_PRECISION) -> SimplexPoint:
    """Parse ``"1/5,3/10,1/2"`` (exact) or ``"0.2,0.3,0.5"`` (float mode)."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ParseError("empty vector")
    if all(re.fullmatch(r"-?\d+(/\d+)?", p) for p in parts):
        try:
            return SimplexPoint([Fraction(p) for p in parts], precision=precision)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
    with mpmath.workprec(precision):
        try:
            vals = [mpmath.mpf(p) for p in parts]
        except (ValueError, TypeError) as exc:
            raise ParseError(f"bad coordinate in {text!r}") from exc
    try:
        return SimplexPoint(vals, precision=precision)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
