"""Directive sequences, limit words, finite languages, complexity and balance.

Images ``sigma_[0,n)(j)`` are cached per depth as ``bytes`` (one letter per
byte), built left to right: ``sigma_[0,n+1)(j)`` is the concatenation of
``sigma_[0,n)(c)`` over the letters c of ``sigma_n(j)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import IntMatrix, SimplexPoint, Substitution, identity, mat_mul
from .errors import NoNestedSeed, Unsaturated
from .mcf import MCFAlgorithm, step

SEED_WINDOW = 64
MAX_DEPTH = 4096


class DirectiveSequence:
    """A sequence of substitutions sigma_0, sigma_1, ...

    Built from an explicit prefix followed by a repeating period, or lazily
    from the expansion of a point by a continued fraction algorithm.  A
    finite explicit list without period raises ``IndexError`` past its end.
    """

    def __init__(self, d: int, prefix: Sequence[Substitution] = (), period: Sequence[Substitution] = (),
                 algo: MCFAlgorithm | None = None, point: SimplexPoint | None = None, name: str = ""):
        self.d = d
        self.prefix = list(prefix)
        self.period = list(period)
        self.algo = algo
        self.point = point
        self.name = name
        self._parent = None
        self._offset = 0
        # CF-driven state
        self._cells: list = []
        self._iterates: list = [point] if point is not None else []
        self._failure: Exception | None = None
        # caches
        self._products: list[IntMatrix] = [identity(d)]
        self._levels: list[tuple[bytes, ...]] = [tuple(bytes([j]) for j in range(1, d + 1))]
        for s in self.prefix + self.period:
            if s.d != d:
                raise ValueError("substitution dimension mismatch")

    # ---- constructors
    @classmethod
    def periodic(cls, subs: Sequence[Substitution], name: str = "") -> "DirectiveSequence":
        return cls(subs[0].d, period=subs, name=name)

    @classmethod
    def explicit(cls, subs: Sequence[Substitution], period: Sequence[Substitution] = (),
                 name: str = "") -> "DirectiveSequence":
        return cls(subs[0].d, prefix=subs, period=period, name=name)

    @classmethod
    def from_expansion(cls, algo: MCFAlgorithm, x: SimplexPoint, name: str = "") -> "DirectiveSequence":
        return cls(algo.d, algo=algo, point=x, name=name or f"{algo.name}-expansion")

    @property
    def source(self) -> str:
        if self._parent is not None:
            return "shift"
        if self.algo is not None:
            return "cf"
        return "periodic" if not self.prefix else "explicit"

    # ---- access
    def _extend_cf(self, n: int) -> None:
        while len(self._cells) <= n:
            if self._failure is not None:
                raise self._failure
            try:
                cell, x = step(self.algo, self._iterates[-1])
            except Exception as exc:
                self._failure = exc
                raise
            self._cells.append(cell)
            self._iterates.append(x)

    def cell(self, n: int):
        if self.algo is None:
            raise TypeError("not a CF-driven sequence")
        self._extend_cf(n)
        return self._cells[n]

    def __getitem__(self, n: int) -> Substitution:
        if n < 0:
            raise IndexError(n)
        if self._parent is not None:
            return self._parent[n + self._offset]
        if self.algo is not None:
            return self.algo.substitution(self.cell(n))
        if n < len(self.prefix):
            return self.prefix[n]
        if not self.period:
            raise IndexError(f"explicit sequence has only {len(self.prefix)} terms")
        return self.period[(n - len(self.prefix)) % len(self.period)]

    def shift(self, k: int) -> "DirectiveSequence":
        """The shifted sequence sigma_k, sigma_(k+1), ..."""
        view = DirectiveSequence(self.d, name=f"{self.name}>>{k}")
        view._parent = self
        view._offset = k
        return view

    def substitutions(self, n: int) -> list[Substitution]:
        return [self[k] for k in range(n)]

    def product(self, n: int) -> IntMatrix:
        """Incidence matrix of sigma_[0,n) (exact)."""
        while len(self._products) <= n:
            k = len(self._products) - 1
            self._products.append(mat_mul(self._products[-1], self[k].incidence))
        return self._products[n]

    def images(self, n: int) -> tuple[bytes, ...]:
        """``(sigma_[0,n)(1), ..., sigma_[0,n)(d))`` as bytes."""
        while len(self._levels) <= n:
            k = len(self._levels) - 1
            prev = self._levels[-1]
            sub = self[k]
            self._levels.append(tuple(b"".join([prev[c - 1] for c in img]) for img in sub.images))
        return self._levels[n]

    def image(self, n: int, j: int) -> bytes:
        return self.images(n)[j - 1]


# ---------------------------------------------------------------- limit words

def seed_chain(D: DirectiveSequence, n: int, window: int = SEED_WINDOW, top: int = 1) -> list[int]:
    """Letters i_0..i_n with i_k the first letter of sigma_k(i_(k+1)).

    The chain is started from letter ``top`` at level n + window and read
    backwards; for primitive windows the choice of ``top`` is forgotten.
    """
    i = top
    for k in range(n + window - 1, n - 1, -1):
        i = D[k].images[i - 1][0]
    chain = [0] * (n + 1)
    chain[n] = i
    for k in range(n - 1, -1, -1):
        chain[k] = D[k].images[chain[k + 1] - 1][0]
    return chain


def limit_word_bytes(D: DirectiveSequence, N: int, window: int = SEED_WINDOW) -> bytes:
    if N <= 0:
        return b""
    n = 0
    while min(len(w) for w in D.images(n)) < N:
        n += 1
        if n > MAX_DEPTH:
            raise NoNestedSeed(f"images do not reach length {N} within {MAX_DEPTH} steps")
        if n >= window and len(D.images(n)[0]) == len(D.images(n - window)[0]) \
                and min(len(w) for w in D.images(n)) == min(len(w) for w in D.images(n - window)):
            raise NoNestedSeed("images stopped growing inside the seed window (not primitive)")
    i_n = seed_chain(D, n, window)[n]
    return D.image(n, i_n)[:N]


def limit_word_prefix(D: DirectiveSequence, N: int, window: int = SEED_WINDOW) -> tuple:
    return tuple(limit_word_bytes(D, N, window))


# ---------------------------------------------------------------- languages

def _factor_sets(words: Sequence[bytes], n: int) -> dict[int, set[bytes]]:
    longest = {w[k:k + n] for w in words if len(w) >= n for k in range(len(w) - n + 1)}
    out: dict[int, set[bytes]] = {n: longest}
    # a shorter factor is a prefix of a length-n factor unless it sits in a final window
    tails = {w[len(w) - n:] for w in words if len(w) >= n}
    for m in range(1, n):
        out[m] = {f[:m] for f in longest}
        out[m].update(t[k:k + m] for t in tails for k in range(n - m + 1))
    for w in words:
        if len(w) < n:
            for m in range(1, len(w) + 1):
                out[m].update(w[k:k + m] for k in range(len(w) - m + 1))
    return out


@dataclass
class LanguageTable:
    n: int
    depth: int
    factors: dict = field(repr=False)
    saturated: bool
    scanned_lengths: tuple = ()

    def complexity(self) -> list[int]:
        return [len(self.factors[m]) for m in range(1, self.n + 1)]

    def words(self, m: int) -> list[tuple]:
        return sorted(tuple(f) for f in self.factors[m])


def language(D: DirectiveSequence, n: int, depth: int) -> LanguageTable:
    if n < 1:
        raise ValueError("n must be >= 1")
    here = _factor_sets(D.images(depth), n)
    deeper = _factor_sets(D.images(depth + 1), n)
    saturated = all(here[m] == deeper[m] for m in range(1, n + 1))
    return LanguageTable(n=n, depth=depth, factors=here, saturated=saturated,
                         scanned_lengths=tuple(len(w) for w in D.images(depth)))


def positive_horizon(D: DirectiveSequence, k: int, window: int = SEED_WINDOW) -> int | None:
    """Smallest k' > k with sigma_[k,k') having a positive incidence matrix (None within the window)."""
    M = None
    for m in range(k, k + window):
        inc = D[m].incidence
        M = inc if M is None else mat_mul(M, inc)
        if all(v > 0 for row in M for v in row):
            return m + 1
    return None


def saturating_depth(D: DirectiveSequence, n: int, start: int = 1, max_depth: int = 200,
                     confirm: int = 2) -> int:
    """Smallest depth >= start whose length-n factor set is stable.

    Stable means unchanged for ``confirm`` more levels and also at the first
    deeper level reached through a positive block, so that a long run of one
    substitution cannot fake saturation.
    """
    sets = {}

    def fs(k):
        if k not in sets:
            sets[k] = _factor_sets(D.images(k), n)[n]
        return sets[k]

    for depth in range(start, max_depth + 1):
        if min(len(w) for w in D.images(depth)) < n:
            continue
        if not all(fs(depth) == fs(depth + c) for c in range(1, confirm + 1)):
            continue
        horizon = positive_horizon(D, depth)
        if horizon is not None and fs(depth) == fs(horizon):
            return depth
    raise Unsaturated(f"no saturation for length {n} up to depth {max_depth}")


def factor_complexity(D: DirectiveSequence, n_max: int, depth: int) -> list[int]:
    table = language(D, n_max, depth)
    if not table.saturated:
        raise Unsaturated(f"language not saturated at depth {depth} for lengths <= {n_max}")
    return table.complexity()


# ---------------------------------------------------------------- balance

@dataclass
class BalanceReport:
    letters: list
    factors: dict
    n_scan: int
    depth: int
    saturated: bool

    @property
    def constant(self) -> int:
        return max(self.letters, default=0)

    def to_json(self) -> dict:
        return {"letters": self.letters, "factors": self.factors, "constant": self.constant,
                "n_scan": self.n_scan, "depth": self.depth, "saturated": self.saturated}


def _window_spread(counts: np.ndarray, m: int) -> np.ndarray:
    """max - min over windows of length m, for a cumulative count array (L+1, k)."""
    diffs = counts[m:] - counts[:-m]
    return diffs.max(axis=0) - diffs.min(axis=0)


def balance(D: DirectiveSequence, n_scan: int, depth: int, factors_up_to: int | None = None,
            require_saturation: bool = True) -> BalanceReport:
    words = D.images(depth)
    saturated = _factor_sets(words, n_scan) == _factor_sets(D.images(depth + 1), n_scan)
    if require_saturation and not saturated:
        raise Unsaturated(f"factors of length {n_scan} not saturated at depth {depth}")
    d = D.d
    lo = np.full((n_scan + 1, d), np.iinfo(np.int64).max, dtype=np.int64)
    hi = np.full((n_scan + 1, d), np.iinfo(np.int64).min, dtype=np.int64)
    for w in words:
        a = np.frombuffer(w, dtype=np.uint8).astype(np.int64) - 1
        onehot = np.zeros((len(a), d), dtype=np.int64)
        onehot[np.arange(len(a)), a] = 1
        cum = np.vstack([np.zeros((1, d), dtype=np.int64), np.cumsum(onehot, axis=0)])
        for m in range(1, min(n_scan, len(a)) + 1):
            diffs = cum[m:] - cum[:-m]
            lo[m] = np.minimum(lo[m], diffs.min(axis=0))
            hi[m] = np.maximum(hi[m], diffs.max(axis=0))
    valid = hi[:, 0] >= lo[:, 0]
    spread = np.where(valid[:, None], hi - lo, 0)
    letters = [int(spread[:, i].max()) for i in range(d)]

    factor_consts = {}
    if factors_up_to:
        fsets = _factor_sets(words, max(1, factors_up_to))
        for k in range(1, factors_up_to + 1):
            for v in sorted(fsets.get(k, ())):
                factor_consts["".join(str(c) for c in v) if d <= 9 else " ".join(str(c) for c in v)] = \
                    _factor_balance(words, v, n_scan)
    return BalanceReport(letters=letters, factors=factor_consts, n_scan=n_scan, depth=depth, saturated=saturated)


def _factor_balance(words: Sequence[bytes], v: bytes, n_scan: int) -> int:
    lv = len(v)
    lo: dict[int, int] = {}
    hi: dict[int, int] = {}
    for w in words:
        L = len(w)
        if L < lv:
            continue
        occ = np.fromiter((w.startswith(v, k) for k in range(L - lv + 1)), dtype=np.int64, count=L - lv + 1)
        q = np.concatenate([[0], np.cumsum(occ)])
        for m in range(lv, min(n_scan, L) + 1):
            # occurrences inside w[s:s+m] start in [s, s+m-lv]
            c = q[m - lv + 1:] - q[:len(q) - (m - lv + 1)]
            c = c[: L - m + 1]
            lo[m] = min(lo.get(m, c.min()), c.min())
            hi[m] = max(hi.get(m, c.max()), c.max())
    return int(max((hi[m] - lo[m] for m in hi), default=0))


def balance_constant(D: DirectiveSequence, n_scan: int = 200, max_depth: int = 200) -> tuple[int, int]:
    """Letter balance constant over factors up to length n_scan, with the saturated depth used."""
    depth = saturating_depth(D, n_scan, max_depth=max_depth)
    return balance(D, n_scan, depth).constant, depth
