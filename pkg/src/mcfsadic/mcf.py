"""Multidimensional continued fraction algorithms and their substitutive realizations.

Every algorithm is a triple (branch, matrix, substitution): ``branch`` picks
the cell containing x, ``matrix(cell)`` is the cocycle value A(x), and
``substitution(cell)`` is a substitution whose incidence matrix is the
transpose of A(x).  One step maps x to ``tA(x)^-1 x`` renormalized to the
simplex.

Cocycle order.  ``ExpansionRecord.products[n]`` holds
``tA(x) tA(Tx) ... tA(T^(n-1) x)``, the incidence matrix of
``sigma_0 o sigma_1 o ... o sigma_(n-1)``.  Multiplying in the other order is
the classic mistake; the records are built only through :func:`expand`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np

from .core import (IntMatrix, SimplexPoint, Substitution, as_matrix, det, identity,
                   inverse_unimodular, mat_mul, mat_vec, transpose)
from .errors import DegenerateBoundary, MCFError, OutsideDomain, ZeroImage

JP_GUARD_DOUBLINGS = 4


class MCFAlgorithm:
    """Base class; subclasses fill in the cell structure."""

    name = "?"
    full_measure = True

    def __init__(self, d: int):
        self.d = d

    def branch(self, x: SimplexPoint):
        raise NotImplementedError

    def matrix(self, cell) -> IntMatrix:
        raise NotImplementedError

    def substitution(self, cell) -> Substitution:
        raise NotImplementedError

    def admissible(self, cells: Sequence) -> bool:
        return True

    def cells(self) -> list:
        """All cell labels (finite-range algorithms only)."""
        raise NotImplementedError

    def contains(self, x: SimplexPoint) -> bool:
        return True

    # float64 kernels for Monte Carlo work (lyapunov, density)
    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        return rng.dirichlet(np.ones(self.d), size=k)

    def batch_step(self, X: np.ndarray):
        """Return ``(A, Y)``: cocycle matrices (k, d, d) and the images of the rows of X.

        Rows that leave the domain come back as NaN in Y.
        """
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(d={self.d})"

    @lru_cache(maxsize=None)
    def _inverse_incidence(self, cell) -> IntMatrix:
        return inverse_unimodular(transpose(self.matrix(cell)))


class CassaigneSelmer(MCFAlgorithm):
    name = "cs"
    C1 = as_matrix([[1, 1, 0], [0, 0, 1], [0, 1, 0]])
    C2 = as_matrix([[0, 1, 0], [1, 0, 0], [0, 1, 1]])
    GAMMA = {
        1: Substitution([(1,), (1, 3), (2,)], name="gamma1"),
        2: Substitution([(2,), (1, 3), (3,)], name="gamma2"),
    }

    def __init__(self, d: int = 3):
        if d != 3:
            raise ValueError("Cassaigne-Selmer is defined for d = 3")
        super().__init__(3)

    def branch(self, x):
        return 1 if x[0] >= x[2] else 2

    def matrix(self, cell):
        return transpose(self.C1 if cell == 1 else self.C2)

    def substitution(self, cell):
        return self.GAMMA[cell]

    def cells(self):
        return [1, 2]

    def batch_step(self, X):
        x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
        first = x1 >= x3
        Y = np.where(first[:, None],
                     np.stack([x1 - x3, x3, x2], axis=1),
                     np.stack([x2, x1, x3 - x1], axis=1))
        Y /= Y.sum(axis=1, keepdims=True)
        A = np.where(first[:, None, None],
                     np.array(self.matrix(1), dtype=float),
                     np.array(self.matrix(2), dtype=float))
        return A, Y


class ArnouxRauzy(MCFAlgorithm):
    name = "ar"
    full_measure = False

    def branch(self, x):
        total = sum(x)
        for i, xi in enumerate(x, 1):
            if 2 * xi >= total:
                return i
        raise OutsideDomain(f"no coordinate dominates the others at {x!r}")

    def contains(self, x):
        total = sum(x)
        return any(2 * xi >= total for xi in x)

    @lru_cache(maxsize=None)
    def matrix(self, cell):
        # A = tM: column i of A is all ones
        d = self.d
        return tuple(tuple(1 if (c == cell - 1 or r == c) else 0 for c in range(d)) for r in range(d))

    @lru_cache(maxsize=None)
    def substitution(self, cell):
        return ar_substitution(cell, self.d)

    def cells(self):
        return list(range(1, self.d + 1))

    def batch_step(self, X):
        k, d = X.shape
        i = np.argmax(X, axis=1)
        xi = X[np.arange(k), i]
        ok = 2 * xi >= X.sum(axis=1)
        Y = X.copy()
        Y[np.arange(k), i] = 2 * xi - X.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            Y /= Y.sum(axis=1, keepdims=True)
        Y[~ok] = np.nan
        A = np.tile(np.eye(d), (k, 1, 1))
        A[np.arange(k), :, i] = 1.0
        return A, Y


class Brun(MCFAlgorithm):
    """Unordered Brun algorithm; cell (i, j) has x_i largest and x_j second largest."""

    name = "brun"

    def branch(self, x):
        order = sorted(range(self.d), key=lambda k: (-x[k], k))
        return (order[0] + 1, order[1] + 1)

    @lru_cache(maxsize=None)
    def matrix(self, cell):
        i, j = cell
        m = [list(r) for r in identity(self.d)]
        m[j - 1][i - 1] = 1
        return as_matrix(m)

    @lru_cache(maxsize=None)
    def substitution(self, cell):
        return brun_substitution(cell[0], cell[1], self.d)

    def cells(self):
        return [(i, j) for i in range(1, self.d + 1) for j in range(1, self.d + 1) if i != j]

    def admissible(self, cells):
        return all(b == a or b[0] == a[1] for a, b in zip(cells, cells[1:]))

    def batch_step(self, X):
        k, d = X.shape
        order = np.argsort(-X, axis=1, kind="stable")
        i, j = order[:, 0], order[:, 1]
        rows = np.arange(k)
        xj = X[rows, j]
        Y = X.copy()
        Y[rows, i] -= xj
        Y /= Y.sum(axis=1, keepdims=True)
        A = np.tile(np.eye(d), (k, 1, 1))
        A[rows, j, i] = 1.0
        return A, Y


class JacobiPerron(MCFAlgorithm):
    """Two-dimensional Jacobi-Perron on {x1 <= x3, x2 <= x3}; cells are digit pairs (a, b)."""

    name = "jp"

    def __init__(self, d: int = 3):
        if d != 3:
            raise ValueError("Jacobi-Perron is implemented for d = 3")
        super().__init__(3)

    def contains(self, x):
        return x[0] <= x[2] and x[1] <= x[2]

    def branch(self, x):
        x1, x2, x3 = x
        if not (x1 <= x3 and x2 <= x3):
            raise OutsideDomain(f"{x!r} violates x1 <= x3, x2 <= x3")
        if x1 == 0:
            raise DegenerateBoundary("x1 = 0: Jacobi-Perron digits undefined")
        if x.exact:
            return (math.floor(x2 / x1), math.floor(x3 / x1))
        prec = x.precision
        for _ in range(JP_GUARD_DOUBLINGS + 1):
            with mpmath.workprec(prec):
                a = int(mpmath.floor(x2 / x1))
                b = int(mpmath.floor(x3 / x1))
            with mpmath.workprec(2 * prec + 64):
                if a * x1 <= x2 < (a + 1) * x1 and b * x1 <= x3 < (b + 1) * x1:
                    return (a, b)
            prec *= 2
        raise DegenerateBoundary("floor guard failed after precision doublings")

    @lru_cache(maxsize=None)
    def matrix(self, cell):
        a, b = cell
        return as_matrix([[0, 1, 0], [0, 0, 1], [1, a, b]])

    @lru_cache(maxsize=None)
    def substitution(self, cell):
        return jp_substitution(*cell)

    def admissible(self, cells):
        # admissibility graph: after a digit with a = b the next a must be positive
        if any(not (0 <= a <= b and b != 0) for a, b in cells):
            return False
        return all(not (a == b) or a2 > 0 for (a, b), (a2, _) in zip(cells, cells[1:]))

    def sample(self, rng, k):
        X = rng.dirichlet(np.ones(3), size=k)
        # move the largest coordinate last; uniform on the domain
        idx = np.argmax(X, axis=1)
        rows = np.arange(k)
        big = X[rows, idx].copy()
        X[rows, idx] = X[:, 2]
        X[:, 2] = big
        return X

    def batch_step(self, X):
        k = X.shape[0]
        x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.floor(x2 / x1)
            b = np.floor(x3 / x1)
        Y = np.stack([x2 - a * x1, x3 - b * x1, x1], axis=1)
        with np.errstate(invalid="ignore"):
            Y /= Y.sum(axis=1, keepdims=True)
        bad = ~np.isfinite(a) | ~np.isfinite(b) | (x1 <= 0) | np.any(Y < 0, axis=1)
        Y[bad] = np.nan
        A = np.zeros((k, 3, 3))
        A[:, 0, 1] = 1.0
        A[:, 1, 2] = 1.0
        A[:, 2, 0] = 1.0
        A[:, 2, 1] = np.where(bad, 0.0, a)
        A[:, 2, 2] = np.where(bad, 0.0, b)
        return A, Y


# ---------------------------------------------------------------- substitution catalog

def ar_substitution(i: int, d: int) -> Substitution:
    return Substitution([(j,) if j == i else (i, j) for j in range(1, d + 1)], name=f"alpha{i}")


def brun_substitution(i: int, j: int, d: int) -> Substitution:
    return Substitution([(i, j) if k == j else (k,) for k in range(1, d + 1)], name=f"beta{i}{j}")


def jp_substitution(a: int, b: int) -> Substitution:
    return Substitution([(2,), (3,), (1,) + (2,) * a + (3,) * b], name=f"iota{a},{b}")


def dbonacci(d: int) -> Substitution:
    return Substitution([(1, i + 1) for i in range(1, d)] + [(1,)], name=f"{d}-bonacci")


ALGORITHMS = {
    "cs": CassaigneSelmer,
    "ar": ArnouxRauzy,
    "brun": Brun,
    "jp": JacobiPerron,
}


def get_algorithm(name: str, d: int = 3) -> MCFAlgorithm:
    try:
        cls = ALGORITHMS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None
    return cls(d)


# ---------------------------------------------------------------- steps and expansions

def branch(algo: MCFAlgorithm, x: SimplexPoint):
    return algo.branch(x)


def step(algo: MCFAlgorithm, x: SimplexPoint):
    cell = algo.branch(x)
    inv = algo._inverse_incidence(cell)
    if x.exact:
        y = mat_vec(inv, x.coords)
        s = sum(y)
        if s == 0:
            raise ZeroImage(f"tA^-1 x = 0 in cell {cell}")
        if any(v < 0 for v in y):
            raise OutsideDomain(f"tA^-1 x has a negative entry in cell {cell}")
        return cell, SimplexPoint([v / s for v in y], normalize=False)
    with mpmath.workprec(x.precision):
        y = [mpmath.fsum(c * v for c, v in zip(row, x.coords)) for row in inv]
        s = mpmath.fsum(y)
        if s == 0:
            raise ZeroImage(f"tA^-1 x = 0 in cell {cell}")
        # rounding can push an exact zero slightly negative
        y = [max(v, mpmath.mpf(0)) for v in y]
        s = mpmath.fsum(y)
        return cell, SimplexPoint([v / s for v in y], precision=x.precision, normalize=False)


@dataclass
class ExpansionRecord:
    algorithm: str
    start: SimplexPoint
    cells: list = field(default_factory=list)
    products: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    error: str | None = None
    error_step: int | None = None

    @property
    def n(self) -> int:
        return len(self.cells)

    @property
    def ok(self) -> bool:
        return self.error is None


def expand(algo: MCFAlgorithm, x: SimplexPoint, n: int) -> ExpansionRecord:
    if n < 0:
        raise ValueError("n must be nonnegative")
    rec = ExpansionRecord(algorithm=algo.name, start=x, products=[identity(algo.d)], iterates=[x])
    for k in range(n):
        try:
            cell, x = step(algo, x)
        except MCFError as exc:
            rec.error = f"{type(exc).__name__}: {exc}"
            rec.error_step = k
            break
        rec.cells.append(cell)
        rec.products.append(mat_mul(rec.products[-1], transpose(algo.matrix(cell))))
        rec.iterates.append(x)
    return rec


def convergents(rec: ExpansionRecord) -> list:
    """Per step, the d integer column vectors of ``tA^(k)(x)``."""
    return [tuple(zip(*p)) for p in rec.products]


def convergence_errors(rec: ExpansionRecord, precision: int | None = None) -> list:
    """Per step k a dict with strong errors ``||y_i - |y_i|_1 x||_2`` and weak errors."""
    precision = precision or rec.start.precision
    out = []
    with mpmath.workprec(precision):
        x = rec.start.to_mpf(precision)
        for cols in convergents(rec):
            strong, weak = [], []
            for y in cols:
                s = sum(y)
                strong.append(mpmath.sqrt(mpmath.fsum((yi - s * xi) ** 2 for yi, xi in zip(y, x))))
                weak.append(mpmath.sqrt(mpmath.fsum((mpmath.mpf(yi) / s - xi) ** 2 for yi, xi in zip(y, x))))
            out.append({"strong": strong, "weak": weak})
    return out


def admissible(algo: MCFAlgorithm, cells: Sequence) -> bool:
    return algo.admissible(list(cells))


def check_catalog(algo: MCFAlgorithm, cells=None) -> None:
    """Assert faithfulness, positivity and unimodularity on the given cells."""
    for cell in (cells if cells is not None else algo.cells()):
        a = algo.matrix(cell)
        if algo.substitution(cell).incidence != transpose(a):
            raise AssertionError(f"{algo.name} cell {cell}: substitution not faithful")
        if any(v < 0 for row in a for v in row) or abs(det(a)) != 1:
            raise AssertionError(f"{algo.name} cell {cell}: matrix not in M_d")
