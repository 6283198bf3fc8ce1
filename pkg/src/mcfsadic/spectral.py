"""Pisot certification, the balanced pair algorithm, effective geometric
coincidence and balanced (Tijdeman) words.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
import sympy

from .core import IntMatrix, Substitution, abelianize, format_word, identity, inverse_unimodular, mat_mul
from .errors import EnumerationTooLarge, IndeterminatePrecision, SearchExhausted
from .sadic import DirectiveSequence

MARGIN = mpmath.mpf(2) ** -32
PISOT_DOUBLINGS = 4
PAIR_CAP = 10_000
ITER_CAP = 1_000
GCC_BUDGET = 10_000_000


# ---------------------------------------------------------------- characteristic polynomials

def _faddeev_leverrier(M: IntMatrix) -> list[int]:
    n = len(M)
    coeffs = [1]
    Mk = [[0] * n for _ in range(n)]
    c = 1
    for k in range(1, n + 1):
        # M_k = M (M_(k-1) + c_(k-1) I)
        A = [[Mk[i][j] + (c if i == j else 0) for j in range(n)] for i in range(n)]
        Mk = [[sum(M[i][t] * A[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        tr = sum(Mk[i][i] for i in range(n))
        if tr % k:
            raise ArithmeticError("non-integral Faddeev-LeVerrier step")
        c = -tr // k
        coeffs.append(c)
    return coeffs


def _poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _poly_add(a, b):
    n = max(len(a), len(b))
    a = [0] * (n - len(a)) + list(a)
    b = [0] * (n - len(b)) + list(b)
    return [x + y for x, y in zip(a, b)]


def _cofactor_det(P):
    """Determinant of a matrix of polynomials (coefficient lists, highest degree first)."""
    n = len(P)
    if n == 1:
        return P[0][0]
    total = [0]
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in P[1:]]
        term = _poly_mul(P[0][j], _cofactor_det(minor))
        if j % 2:
            term = [-t for t in term]
        total = _poly_add(total, term)
    return total


def _cofactor_charpoly(M: IntMatrix) -> list[int]:
    n = len(M)
    P = [[[1, -M[i][j]] if i == j else [-M[i][j]] for j in range(n)] for i in range(n)]
    coeffs = _cofactor_det(P)
    while len(coeffs) > n + 1 and coeffs[0] == 0:
        coeffs = coeffs[1:]
    return [0] * (n + 1 - len(coeffs)) + coeffs


def char_poly(M: IntMatrix) -> list[int]:
    """Coefficients of det(X I - M), highest degree first (monic)."""
    coeffs = _faddeev_leverrier(M)
    if len(M) <= 5:
        other = _cofactor_charpoly(M)
        if other != coeffs:
            raise ArithmeticError(f"characteristic polynomial mismatch {coeffs} vs {other}")
    return coeffs


def format_poly(coeffs: Sequence[int], var: str = "X") -> str:
    n = len(coeffs) - 1
    parts = []
    for k, c in enumerate(coeffs):
        e = n - k
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        a = abs(c)
        mono = "" if e == 0 else var if e == 1 else f"{var}^{e}"
        body = str(a) if (a != 1 or e == 0) else ""
        parts.append((sign, body + mono))
    if not parts:
        return "0"
    s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        s += f" {sign} {body}"
    return s


# ---------------------------------------------------------------- Pisot certificates

@dataclass
class PisotCertificate:
    coefficients: list
    roots: list                  # (centre as complex, radius) at the final precision
    irreducible: bool
    dominant_gt_one: bool
    conjugates_inside: bool
    unit: bool
    precision: int
    dominant: float | None = None
    notes: list = field(default_factory=list)

    @property
    def pisot(self) -> bool:
        return self.irreducible and self.dominant_gt_one and self.conjugates_inside

    def to_json(self) -> dict:
        return {
            "coefficients": list(self.coefficients),
            "polynomial": format_poly(self.coefficients),
            "pisot": self.pisot,
            "unit": self.unit,
            "irreducible": self.irreducible,
            "dominant_gt_one": self.dominant_gt_one,
            "conjugates_inside": self.conjugates_inside,
            "dominant": self.dominant,
            "precision_bits": self.precision,
            "roots": [{"re": mpmath.nstr(z.real, 25), "im": mpmath.nstr(z.imag, 25),
                       "radius": mpmath.nstr(r, 5), "exact_modulus_one": exact}
                      for z, r, exact in self.roots],
            "notes": self.notes,
        }


def _smith_enclosures(coeffs, precision):
    """Approximate roots with Smith inclusion radii ``n |p(z_i)| / |a_n prod (z_i - z_j)|``."""
    n = len(coeffs) - 1
    with mpmath.workprec(precision):
        zs = mpmath.polyroots(coeffs, maxsteps=200 + 4 * precision, extraprec=precision)
        zs = [mpmath.mpc(z) for z in (zs if isinstance(zs, (list, tuple)) else [zs])]
        out = []
        for i, z in enumerate(zs):
            val = mpmath.polyval(coeffs, z)
            den = mpmath.mpf(abs(coeffs[0]))
            for j, w in enumerate(zs):
                if j != i:
                    den *= abs(z - w)
            r = mpmath.inf if den == 0 else n * abs(val) / den
            out.append((z, r))
    return out


def pisot_certify(coeffs: Sequence[int], precision: int = 128) -> PisotCertificate:
    """Decide the Pisot flags of an integer polynomial with certified root enclosures.

    Cyclotomic factors are recognized exactly (roots of modulus one); every
    other squarefree factor gets Smith enclosures, and each decision needs a
    margin of 2^-32 beyond the enclosure radius or the precision is doubled.
    """
    coeffs = [int(c) for c in coeffs]
    while coeffs and coeffs[0] == 0:
        coeffs = coeffs[1:]
    if len(coeffs) < 2:
        raise ValueError("polynomial of degree >= 1 required")
    X = sympy.Symbol("X")
    P = sympy.Poly(coeffs, X, domain="ZZ")
    irreducible = bool(P.is_irreducible)
    monic = abs(coeffs[0]) == 1
    unit = monic and abs(coeffs[-1]) == 1
    _, factors = P.factor_list()
    prec = precision
    for _ in range(PISOT_DOUBLINGS + 1):
        roots = []
        undecided = False
        for f, mult in factors:
            fc = [int(c) for c in f.all_coeffs()]
            if f.is_cyclotomic:
                with mpmath.workprec(prec):
                    for z in mpmath.polyroots(fc, maxsteps=200, extraprec=prec) if len(fc) > 2 else [mpmath.mpf(-fc[1]) / fc[0]]:
                        roots.extend([(mpmath.mpc(z), mpmath.mpf(0), True)] * mult)
                continue
            encl = _smith_enclosures(fc, prec)
            # enclosures of distinct roots must be disjoint to count roots one per disc
            for (z, r), (w, s) in itertools.combinations(encl, 2):
                if abs(z - w) <= r + s:
                    undecided = True
            for z, r in encl:
                with mpmath.workprec(prec):
                    gap = abs(abs(z) - 1)
                if not (gap > r + MARGIN):
                    undecided = True
                roots.extend([(z, r, False)] * mult)
        if not undecided:
            break
        prec *= 2
    else:
        raise IndeterminatePrecision(f"root enclosures undecided at {prec // 2} bits")

    with mpmath.workprec(prec):
        outside = [(z, r, e) for z, r, e in roots if e is False and abs(z) > 1]
        # a real root: a disc around a real polynomial's root that contains
        # exactly one root and meets the real axis only near it is real
        dominant = None
        dominant_gt_one = False
        if len(outside) == 1:
            z, r, _ = outside[0]
            if abs(z.imag) <= r:
                dominant = float(z.real)
                dominant_gt_one = z.real - r > 1
        conjugates_inside = len(outside) <= 1 and all(
            e is False and abs(z) + r < 1 for z, r, e in roots if not any(z is o[0] for o in outside))
        notes = []
        mod_prod = mpmath.fprod(abs(z) for z, _, _ in roots)
        expected = mpmath.mpf(abs(coeffs[-1])) / abs(coeffs[0])
        if abs(mod_prod - expected) > mpmath.mpf(2) ** (-prec // 4) * max(1, expected):
            notes.append("root moduli product disagrees with constant term")
    return PisotCertificate(coefficients=coeffs, roots=roots, irreducible=irreducible,
                            dominant_gt_one=dominant_gt_one, conjugates_inside=conjugates_inside,
                            unit=unit, precision=prec, dominant=dominant, notes=notes)


# ---------------------------------------------------------------- balanced pairs

Pair = tuple  # (Word, Word)


def canonical(pair: Pair) -> Pair:
    a, b = pair
    return (a, b) if a <= b else (b, a)


def is_balanced(pair: Pair, d: int) -> bool:
    return len(pair[0]) > 0 and abelianize(pair[0], d) == abelianize(pair[1], d)


def decompose(pair: Pair, d: int | None = None) -> list[Pair]:
    """Split a balanced pair at every index where the prefix abelianizations agree."""
    v1, v2 = pair
    if len(v1) != len(v2):
        raise ValueError("not a balanced pair")
    d = d or max(max(v1, default=1), max(v2, default=1))
    diff = [0] * (d + 1)
    parts, start, nonzero = [], 0, 0
    for k, (a, b) in enumerate(zip(v1, v2), 1):
        for letter, delta in ((a, 1), (b, -1)):
            old = diff[letter]
            diff[letter] += delta
            nonzero += (diff[letter] != 0) - (old != 0)
        if nonzero == 0:
            parts.append((tuple(v1[start:k]), tuple(v2[start:k])))
            start = k
    if start != len(v1):
        raise ValueError("not a balanced pair")
    return parts


def format_pair(pair: Pair, d: int = 9) -> tuple:
    return (format_word(pair[0], d), format_word(pair[1], d))


@dataclass
class BPAResult:
    verdict: str                 # "Terminates" | "NonDiscrete" | "Inconclusive"
    levels: list                 # I_0, I_1, ... as lists of canonical pairs
    pairs: list                  # all discovered canonical pairs, discovery order
    edges: dict                  # pair -> sorted list of successor pairs
    witness: list = field(default_factory=list)
    reason: str = ""

    def to_json(self, d: int = 9) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "levels": [sorted(format_pair(p, d) for p in lvl) for lvl in self.levels],
            "pairs": [format_pair(p, d) for p in self.pairs],
            "edges": {" / ".join(format_pair(p, d)): [list(format_pair(q, d)) for q in qs]
                      for p, qs in self.edges.items()},
            "witness": [format_pair(p, d) for p in self.witness],
        }


def initial_pairs(d: int) -> list[Pair]:
    return [canonical(((i, j), (j, i))) for i in range(1, d + 1) for j in range(i + 1, d + 1)]


def bpa_run(sigma: Substitution, pair_cap: int = PAIR_CAP, iter_cap: int = ITER_CAP) -> BPAResult:
    """Iterate ``(v1, v2) -> decompose(sigma v1, sigma v2)`` from I_0 = {(ij, ji)} to closure."""
    d = sigma.d
    level = initial_pairs(d)
    seen = {p: None for p in level}
    levels = [sorted(level)]
    edges: dict = {}
    frontier = list(level)
    iterations = 0
    while frontier:
        if iterations >= iter_cap:
            return BPAResult("Inconclusive", levels, list(seen), edges, reason=f"iteration cap {iter_cap}")
        iterations += 1
        nxt = {}
        for p in frontier:
            succ = set()
            for q in decompose((sigma.apply(p[0]), sigma.apply(p[1])), d):
                q = canonical(q)
                assert is_balanced(q, d)
                succ.add(q)
            edges[p] = sorted(succ)
            for q in succ:
                nxt[q] = None
        levels.append(sorted(nxt))
        frontier = [q for q in sorted(nxt) if q not in seen]
        for q in frontier:
            seen[q] = None
            if q[0] == q[1]:
                edges.setdefault(q, [q])
        frontier = [q for q in frontier if q[0] != q[1]]
        if len(seen) > pair_cap:
            return BPAResult("Inconclusive", levels, list(seen), edges, reason=f"pair cap {pair_cap}")
    # reverse reachability to coincidences
    rev: dict = {p: [] for p in seen}
    for p, qs in edges.items():
        for q in qs:
            rev.setdefault(q, []).append(p)
    good = {p for p in seen if p[0] == p[1]}
    queue = deque(good)
    while queue:
        q = queue.popleft()
        for p in rev.get(q, ()):
            if p not in good:
                good.add(p)
                queue.append(p)
    bad = [p for p in seen if p not in good]
    if bad:
        return BPAResult("NonDiscrete", levels, list(seen), edges, witness=sorted(bad),
                         reason="closed pair set without a path to a coincidence")
    return BPAResult("Terminates", levels, list(seen), edges)


# ---------------------------------------------------------------- effective geometric coincidence

@dataclass
class GccWitness:
    n: int
    C: float
    z: tuple
    i: int
    left_size: int
    prefix_size: int
    verdict: bool
    degenerate: bool = False
    enumerated: int = 0
    counterexample: tuple | None = None
    balance_depth: int | None = None

    def to_json(self) -> dict:
        return {"n": self.n, "C": self.C, "z": list(self.z), "i": self.i, "left_size": self.left_size,
                "prefix_size": self.prefix_size, "verdict": self.verdict, "degenerate": self.degenerate,
                "enumerated": self.enumerated,
                "counterexample": None if self.counterexample is None else
                [list(self.counterexample[0]), self.counterexample[1]],
                "balance_depth": self.balance_depth}


def _prefix_table(D: DirectiveSequence, n: int) -> dict:
    """Map (l(p), j) -> letter following p, over proper prefixes p of sigma_[0,n)(j)."""
    d = D.d
    table = {}
    for j in range(1, d + 1):
        counts = [0] * d
        for a in D.image(n, j):
            table[(tuple(counts), j)] = a
            counts[a - 1] += 1
    return table


def renormalized_direction(D: DirectiveSequence, n: int, u) -> np.ndarray:
    """``u^(n) = M^-1 u`` normalized to sum 1 (float)."""
    M = D.product(n)
    inv = inverse_unimodular(M)
    with mpmath.workprec(256):
        uu = [mpmath.mpf(c) for c in (u.to_mpf() if hasattr(u, "to_mpf") else u)]
        v = [mpmath.fsum(a * b for a, b in zip(row, uu)) for row in inv]
        s = mpmath.fsum(v)
        return np.array([float(c / s) for c in v])


def effective_gcc(D: DirectiveSequence, n: int, C: float, z: Sequence[float], i: int, u=None,
                  budget: int = GCC_BUDGET, table: dict | None = None) -> GccWitness:
    """Check the effective coincidence inclusion for (n, C, z, i).

    Left set: pairs (y, j) with y = M y' integral, 0 <= <1,y> < |sigma_[0,n)(j)|,
    ``||pi'_(u^(n)) y' - z||_inf <= C``.  Right set: (l(p), j) with p i a
    prefix of sigma_[0,n)(j).  Boundary cases are resolved towards a larger
    left set, so a true verdict is never due to rounding.
    """
    d = D.d
    z = tuple(float(c) for c in z)
    if C < 0:
        return GccWitness(n, C, z, i, 0, 0, True, degenerate=True)
    if u is None:
        from .rauzy import right_eigenvector
        u, _ = right_eigenvector(D)
    M = D.product(n)
    uh = renormalized_direction(D, n, u)
    r = np.array([sum(M[k][j] for k in range(d)) for j in range(d)], dtype=float)  # |sigma(j)|
    rho = float(r @ uh)
    rz = float(r @ np.array(z))
    slack = 1e-9
    table = table if table is not None else _prefix_table(D, n)
    Mi = np.array(M, dtype=object)
    left = 0
    enumerated = 0
    s_lo = math.floor((-rz - C * r.sum()) / rho - slack)
    s_hi = math.ceil((r.max() - rz + C * r.sum()) / rho + slack)
    width = 2 * C + 1 + 2 * slack
    if (s_hi - s_lo + 1) * (math.floor(width) + 1) ** (d - 1) > budget:
        raise EnumerationTooLarge("lattice enumeration exceeds the budget")
    for s in range(s_lo, s_hi + 1):
        lo = [math.ceil(s * uh[k] + z[k] - C - slack) for k in range(d)]
        hi = [math.floor(s * uh[k] + z[k] + C + slack) for k in range(d)]
        if any(h < l for l, h in zip(lo, hi)):
            continue
        # choose the first d-1 coordinates; the last one is fixed by <1, y'> = s
        for head in itertools.product(*[range(lo[k], hi[k] + 1) for k in range(d - 1)]):
            last = s - sum(head)
            enumerated += 1
            if enumerated > budget:
                raise EnumerationTooLarge("lattice enumeration exceeds the budget")
            if not (lo[d - 1] <= last <= hi[d - 1]):
                continue
            yp = head + (last,)
            y = tuple(int(v) for v in Mi.dot(np.array(yp, dtype=object)))
            total = sum(y)
            for j in range(1, d + 1):
                if 0 <= total < int(r[j - 1]):
                    left += 1
                    if table.get((y, j)) != i:
                        return GccWitness(n, C, z, i, left, _count_prefixes(table, i), False,
                                          enumerated=enumerated, counterexample=(y, j))
    return GccWitness(n, C, z, i, left, _count_prefixes(table, i), True,
                      degenerate=(left == 0), enumerated=enumerated)


def _count_prefixes(table: dict, i: int) -> int:
    return sum(1 for v in table.values() if v == i)


def gcc_search(D: DirectiveSequence, n: int, C: float, u=None, grid: int = 24, letters=None,
               budget: int = GCC_BUDGET) -> GccWitness | None:
    """Search z on a grid over the renormalized subtile of each letter, centre first."""
    from .rauzy import ProjectionFrame, cloud, right_eigenvector

    if u is None:
        u, _ = right_eigenvector(D)
    table = _prefix_table(D, n)
    shifted = D.shift(n)
    uh = renormalized_direction(D, n, u)
    k = 0
    while sum(len(shifted.image(k, j)) for j in range(1, D.d + 1)) < 20_000 and k < 200:
        k += 1
    c = cloud(shifted, k, 1, u=uh)
    letters = letters or list(range(1, D.d + 1))
    spent = 0
    for i in letters:
        pts = c.ambient[c.letters == i]
        if not len(pts):
            continue
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        centre = pts.mean(axis=0)
        cand = []
        axes = [np.linspace(lo[q], hi[q], grid) for q in range(D.d - 1)]
        for head in itertools.product(*axes):
            zc = np.array(head + (-sum(head),))
            cand.append(zc)
        cand.sort(key=lambda v: float(np.abs(v - centre).max()))
        for zc in cand:
            w = effective_gcc(D, n, C, zc, i, u=u, budget=budget - spent, table=table)
            spent += w.enumerated
            if w.verdict and not w.degenerate:
                return w
    return None


# ---------------------------------------------------------------- balanced words

def prefix_norms(w: Sequence[int], x: Sequence[int]) -> dict:
    """Largest sup, l1 and l2 norms of ``pi'_x l(p)`` over prefixes p of w (exact, l2 squared)."""
    d = len(x)
    total = sum(x)
    counts = [0] * d
    best = {"sup": Fraction(0), "l1": Fraction(0), "l2_squared": Fraction(0)}
    for k, a in enumerate(w, 1):
        counts[a - 1] += 1
        v = [Fraction(c) - Fraction(k * xi, total) for c, xi in zip(counts, x)]
        best["sup"] = max(best["sup"], max(abs(t) for t in v))
        best["l1"] = max(best["l1"], sum(abs(t) for t in v))
        best["l2_squared"] = max(best["l2_squared"], sum(t * t for t in v))
    return best


def tijdeman_bound(d: int) -> Fraction:
    return Fraction(1) - Fraction(1, 2 * d - 2) if d > 1 else Fraction(0)


def tijdeman_word(x: Sequence[int], node_budget: int = 200_000) -> tuple:
    """A word with abelianization x whose prefixes stay within 1 - 1/(2d-2) of the line R x (sup-norm).

    Greedy depth-first search: at each position try letters in order of the
    resulting sup-norm, then larger remaining count, then smaller index.
    """
    x = [int(v) for v in x]
    d = len(x)
    if any(v < 0 for v in x) or sum(x) == 0:
        raise ValueError("x must be a nonzero nonnegative vector")
    total = sum(x)
    bound = tijdeman_bound(d)
    top = max(x)
    nodes = 0
    counts = [0] * d
    word: list[int] = []

    def deviation(k, cnt):
        return max(abs(Fraction(c) - Fraction(k * xi, total)) for c, xi in zip(cnt, x))

    def dfs() -> bool:
        nonlocal nodes
        k = len(word)
        if k == total:
            return True
        nodes += 1
        if nodes > node_budget:
            raise SearchExhausted(f"no word within the bound after {node_budget} nodes")
        options = []
        for a in range(d):
            if counts[a] >= x[a] or (k == 0 and x[a] != top):
                continue
            counts[a] += 1
            dev = deviation(k + 1, counts)
            counts[a] -= 1
            if dev <= bound:
                options.append((dev, -(x[a] - counts[a]), a))
        for _, _, a in sorted(options):
            counts[a] += 1
            word.append(a + 1)
            if dfs():
                return True
            word.pop()
            counts[a] -= 1
        return False

    if not dfs():
        raise SearchExhausted("no word satisfies the prefix bound")
    return tuple(word)
