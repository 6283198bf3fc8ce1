"""Lyapunov exponents, torus translations, letter discrepancy and the
Cassaigne-Selmer invariant density.

Monte Carlo work runs in float64, vectorized over trajectories; every
trajectory draws from its own Philox stream keyed by ``(seed, index)`` so
results do not depend on how trajectories are batched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
from scipy import integrate
from scipy.spatial import cKDTree

from .core import SimplexPoint, mat_mul, transpose
from .errors import CloudTooSparse, UnsupportedMeasure
from .mcf import CassaigneSelmer, MCFAlgorithm
from .sadic import DirectiveSequence, limit_word_bytes

RENORM_EVERY = 32
BURN_IN = 1000
GROWTH_LIMIT = 16


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def bootstrap_ci(values: np.ndarray, seed: int, n_boot: int = 2000, level: float = 0.95) -> tuple:
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return (float(values.mean()), float(values.mean()))
    rng = trajectory_rng(seed, 2**31 - 1)
    idx = rng.integers(0, len(values), size=(n_boot, len(values)))
    means = values[idx].mean(axis=1)
    a = (1 - level) / 2
    return (float(np.quantile(means, a)), float(np.quantile(means, 1 - a)))


# ---------------------------------------------------------------- Lyapunov exponents

@dataclass
class LyapunovEstimate:
    algorithm: str
    d: int
    theta: list                  # mean exponents theta_1 >= ... >= theta_d
    ci: list                     # bootstrap 95% intervals per exponent
    total: float                 # sum of all exponents
    total_ci: tuple              # bootstrap interval widened by the rounding floor
    steps: int
    trials: int
    renormalize_every: int
    burn_in: int
    seed: int
    restarts: int = 0
    total_ci_bootstrap: tuple = ()
    rounding_floor: float = 0.0
    per_trajectory: np.ndarray | None = field(default=None, repr=False)

    @property
    def theta1(self):
        return self.theta[0]

    @property
    def theta2(self):
        return self.theta[1]

    def pisot_condition(self) -> bool:
        """theta_1 > 0 > theta_2 with both intervals excluding zero."""
        return self.ci[0][0] > 0 and self.ci[1][1] < 0

    def to_json(self) -> dict:
        return {"algorithm": self.algorithm, "d": self.d, "theta": self.theta,
                "ci95": [list(c) for c in self.ci], "sum": self.total, "sum_ci95": list(self.total_ci),
                "sum_ci95_bootstrap": list(self.total_ci_bootstrap), "sum_rounding_floor": self.rounding_floor,
                "steps": self.steps, "trials": self.trials, "renormalize_every": self.renormalize_every,
                "burn_in": self.burn_in, "seed": self.seed, "restarts": self.restarts,
                "pisot_condition": self.pisot_condition()}


def lyapunov(algo: MCFAlgorithm, steps: int = 100_000, trials: int = 32, seed: int = 0,
             burn_in: int = BURN_IN, renormalize_every: int = RENORM_EVERY, n_boot: int = 2000) -> LyapunovEstimate:
    """Benettin estimate of the whole spectrum of the cocycle A along T-orbits.

    The frame is multiplied by A(T^k x) on the left (the transpose of the
    right-multiplied product tA^(n), same singular values) and re-orthonormalized
    by QR every ``renormalize_every`` steps; log |R_kk| accumulates the growth
    of the k-th exterior power, so theta_1 + theta_2 is the growth rate of the
    wedge of the first two frame vectors.
    """
    if not algo.full_measure:
        raise UnsupportedMeasure(f"{algo.name}: the relevant measures are singular to Lebesgue measure")
    d = algo.d
    rngs = [trajectory_rng(seed, k) for k in range(trials)]
    X = np.vstack([algo.sample(r, 1) for r in rngs])
    restarts = 0

    def advance(X):
        nonlocal restarts
        A, Y = algo.batch_step(X)
        bad = ~np.all(np.isfinite(Y), axis=1)
        if bad.any():
            # orbit left the domain: restart that trajectory from a fresh sample
            for k in np.flatnonzero(bad):
                restarts += 1
                Y[k] = algo.sample(rngs[k], 1)[0]
                A[k] = np.eye(d)
        return A, Y

    for _ in range(burn_in):
        _, X = advance(X)
    Q = np.tile(np.eye(d), (trials, 1, 1))
    logs = np.zeros((trials, d))
    blocks = 0
    for k in range(1, steps + 1):
        A, X = advance(X)
        Q = np.matmul(A, Q)
        # fast-growing cocycles (Jacobi-Perron) would lose the small directions
        # to rounding within one interval, so re-orthonormalize early as well
        if k % renormalize_every == 0 or k == steps or np.abs(Q).max() > GROWTH_LIMIT:
            Q, R = np.linalg.qr(Q)
            blocks += 1
            diag = np.abs(np.diagonal(R, axis1=1, axis2=2))
            logs += np.log(diag)
            # keep R's diagonal positive so Q stays a continuous frame
            Q = Q * np.sign(np.diagonal(R, axis1=1, axis2=2))[:, None, :]
    per = logs / steps
    theta = [float(v) for v in per.mean(axis=0)]
    ci = [bootstrap_ci(per[:, k], seed + k, n_boot) for k in range(d)]
    sums = per.sum(axis=1)
    # the exact sum is 0 (unimodular steps); float64 matmuls and QR perturb log|det| by about
    # d * gamma_d each, which a bootstrap over trajectories cannot see
    eps = np.finfo(float).eps
    floor = d * (d * eps / (1 - d * eps)) * (steps + blocks) / max(steps, 1)
    lo, hi = bootstrap_ci(sums, seed + d, n_boot)
    return LyapunovEstimate(algo.name, d, theta, ci, float(sums.mean()), (lo - floor, hi + floor),
                            steps, trials, renormalize_every, burn_in, seed, restarts, (lo, hi), float(floor), per)


def periodic_lyapunov(algo: MCFAlgorithm, cells: Sequence, precision: int = 128) -> list:
    """Exact spectrum of a periodic cell loop: log |eigenvalues of the period product| / period.

    Eigenvalues are the roots of the exact integer characteristic polynomial,
    found with mpmath at the given precision.
    """
    from .spectral import char_poly

    P = transpose(algo.matrix(cells[0]))
    for c in cells[1:]:
        P = mat_mul(P, transpose(algo.matrix(c)))
    coeffs = char_poly(P)
    with mpmath.workprec(precision):
        roots = mpmath.polyroots(coeffs, maxsteps=500, extraprec=precision)
        vals = sorted((mpmath.log(abs(z)) / len(cells) for z in roots), reverse=True)
    return vals


def cocycle_lyapunov(algo: MCFAlgorithm, cells: Sequence, steps: int, renormalize_every: int = RENORM_EVERY) -> list:
    """Benettin estimate along a fixed (looped) cell sequence; deterministic."""
    d = algo.d
    mats = [np.array(algo.matrix(c), dtype=float) for c in cells]
    Q = np.eye(d)
    logs = np.zeros(d)
    for k in range(1, steps + 1):
        Q = mats[(k - 1) % len(mats)] @ Q
        if k % renormalize_every == 0 or k == steps or np.abs(Q).max() > GROWTH_LIMIT:
            Q, R = np.linalg.qr(Q)
            logs += np.log(np.abs(np.diag(R)))
            Q = Q * np.sign(np.diag(R))[None, :]
    return list(logs / steps)


# ---------------------------------------------------------------- torus translations

def _to_mpf(c):
    if isinstance(c, Fraction):
        with mpmath.workprec(128):
            return mpmath.mpf(c.numerator) / c.denominator
    return mpmath.mpf(c)


def translation_orbit(t: Sequence, x0: Sequence | None = None, N: int = 1) -> np.ndarray:
    """Points ``x0 + k t mod 1`` for k < N by the direct formula.

    Coordinates are 64-bit fixed point (exact modular arithmetic in uint64),
    so the only error is the rounding of t and x0 to 2^-64, amplified at most by N.
    """
    x0 = [0] * len(t) if x0 is None else list(x0)
    if all(isinstance(c, (int, Fraction)) for c in list(t) + x0):
        # rational translation: exact residues modulo the common denominator
        q = math.lcm(*[Fraction(c).denominator for c in list(t) + x0])
        if q < 2**31:
            tn = np.array([int(Fraction(c) * q) % q for c in t], dtype=np.int64)
            xn = np.array([int(Fraction(c) * q) % q for c in x0], dtype=np.int64)
            k = np.arange(N, dtype=np.int64)[:, None]
            return ((xn[None, :] + (k % q) * tn[None, :]) % q) / q
    t = [_to_mpf(c) for c in t]
    x0 = [_to_mpf(c) for c in x0]
    scale = mpmath.mpf(2) ** 64
    with mpmath.workprec(128):
        ti = np.array([int(mpmath.floor((c % 1) * scale + mpmath.mpf(1) / 2)) % 2**64 for c in t], dtype=np.uint64)
        xi = np.array([int(mpmath.floor((c % 1) * scale + mpmath.mpf(1) / 2)) % 2**64 for c in x0], dtype=np.uint64)
    k = np.arange(N, dtype=np.uint64)[:, None]
    with np.errstate(over="ignore"):
        fixed = xi[None, :] + k * ti[None, :]
    # keep the top 53 bits so the float conversion cannot round up to 1.0
    return (fixed >> np.uint64(11)).astype(np.float64) / 2.0**53


def grid_deviation(points: np.ndarray, bins: int = 4) -> float:
    """Max relative deviation of per-cell counts from the uniform expectation."""
    N, k = points.shape
    idx = np.minimum((points * bins).astype(int), bins - 1)
    flat = np.ravel_multi_index(idx.T, (bins,) * k)
    counts = np.bincount(flat, minlength=bins**k)
    expected = N / bins**k
    return float(np.abs(counts - expected).max() / expected)


# ---------------------------------------------------------------- discrepancy

@dataclass
class DiscrepancyTrace:
    frequencies: list
    N_max: int
    checkpoints: list
    deviations: list             # per checkpoint, per letter |count_i(N) - N u_i|
    max_first_half: list
    max_second_half: list
    extras: dict = field(default_factory=dict)

    def bounded(self, slack: float = 1.0) -> bool:
        """No growth between halves: second-half max <= first-half max + slack, per letter."""
        return all(b <= a + slack for a, b in zip(self.max_first_half, self.max_second_half))

    @property
    def grows(self) -> bool:
        return any(b > a for a, b in zip(self.max_first_half, self.max_second_half))

    @property
    def max_deviation(self) -> float:
        return max(max(self.max_first_half), max(self.max_second_half))

    def to_json(self) -> dict:
        return {"frequencies": self.frequencies, "N_max": self.N_max, "checkpoints": self.checkpoints,
                "deviations": self.deviations, "max_first_half": self.max_first_half,
                "max_second_half": self.max_second_half, "grows": self.grows,
                "bounded_slack_1": self.bounded(1.0), **self.extras}


def word_discrepancy(word: bytes, u: Sequence, checkpoints: Sequence[int] | None = None, d: int | None = None
                     ) -> DiscrepancyTrace:
    with mpmath.workprec(256):
        u = [_to_mpf(c) for c in (u.to_mpf() if isinstance(u, SimplexPoint) else u)]
    d = d or len(u)
    N = len(word)
    a = np.frombuffer(word, dtype=np.uint8).astype(np.int64) - 1
    dev = np.zeros((N + 1, d))
    for i in range(d):
        counts = np.concatenate([[0], np.cumsum(a == i)])
        # counts are exact integers; N u_i in float64 is exact to ~N 2^-53
        dev[:, i] = np.abs(counts - np.arange(N + 1) * float(u[i]))
    half = N // 2
    if checkpoints is None:
        checkpoints = sorted({min(N, 10**k) for k in range(0, int(math.log10(max(N, 1))) + 1)} | {N})
    with mpmath.workprec(256):
        exact_dev = []
        for n_ in checkpoints:
            counts = np.bincount(a[:n_], minlength=d)
            exact_dev.append([float(abs(int(counts[i]) - n_ * u[i])) for i in range(d)])
    return DiscrepancyTrace(frequencies=[float(c) for c in u], N_max=N, checkpoints=list(checkpoints),
                            deviations=exact_dev,
                            max_first_half=[float(dev[:half + 1, i].max()) for i in range(d)],
                            max_second_half=[float(dev[half:, i].max()) for i in range(d)])


def letter_discrepancy(D: DirectiveSequence, u, N_max: int, checkpoints: Sequence[int] | None = None
                       ) -> DiscrepancyTrace:
    word = limit_word_bytes(D, N_max)
    return word_discrepancy(word, u, checkpoints, D.d)


# ---------------------------------------------------------------- invariant density

def cs_density(x1, x3):
    return 12.0 / (math.pi**2 * (1.0 - x1) * (1.0 - x3))


@dataclass
class DensityReport:
    grid: int
    steps: int
    cells: list                  # (i, j) admissible grid cells
    empirical: np.ndarray        # empirical mass fractions
    analytic: np.ndarray         # analytic masses (raw quadrature of the density)
    analytic_total: float
    rel_error: np.ndarray        # against analytic masses renormalized to total 1
    seed: int
    chains: int

    @property
    def max_rel_error(self) -> float:
        return float(self.rel_error.max()) if len(self.rel_error) else 0.0

    def to_json(self) -> dict:
        return {"grid": self.grid, "steps": self.steps, "chains": self.chains, "seed": self.seed,
                "analytic_total_mass": self.analytic_total, "max_rel_error": self.max_rel_error,
                "cells": [{"cell": list(c), "empirical": float(e), "analytic": float(a), "rel_error": float(r)}
                          for c, e, a, r in zip(self.cells, self.empirical, self.analytic, self.rel_error)]}


def density_total_mass() -> float:
    """Quadrature of the printed density over the simplex in (x1, x3) coordinates."""
    val, _ = integrate.dblquad(lambda x3, x1: cs_density(x1, x3), 0, 1, 0, lambda x1: 1 - x1,
                               epsabs=1e-12, epsrel=1e-12)
    return float(val)


def analytic_cell_masses(grid: int = 8) -> tuple[list, np.ndarray]:
    cells = [(i, j) for i in range(grid) for j in range(grid) if i + j < grid]
    h = 1.0 / grid
    masses = []
    for i, j in cells:
        a0, a1 = i * h, (i + 1) * h
        b0 = j * h
        val, _ = integrate.dblquad(lambda x3, x1: cs_density(x1, x3), a0, a1, b0,
                                   lambda x1: min((j + 1) * h, 1 - x1), epsabs=1e-12, epsrel=1e-10)
        masses.append(val)
    return cells, np.array(masses)


def density_histogram(steps: int, grid: int = 8, seed: int = 0, chains: int = 1000,
                      burn_in: int = BURN_IN) -> DensityReport:
    """Orbit histogram of Cassaigne-Selmer on (x1, x3) against the printed invariant density.

    ``steps`` counts visits in total, spread over ``chains`` independent
    orbits after burn-in.
    """
    algo = CassaigneSelmer()
    cells, analytic = analytic_cell_masses(grid)
    total = float(analytic.sum())
    if steps <= 0:
        return DensityReport(grid, 0, cells, np.zeros(len(cells)), analytic, total,
                             np.zeros(0), seed, 0)
    chains = max(1, min(chains, steps))
    per_chain = -(-steps // chains)
    X = np.vstack([algo.sample(trajectory_rng(seed, k), 1) for k in range(chains)])
    for _ in range(burn_in):
        _, X = algo.batch_step(X)
    counts = np.zeros(grid * grid, dtype=np.int64)
    visited = 0
    for k in range(per_chain):
        _, X = algo.batch_step(X)
        take = X if visited + chains <= steps else X[: steps - visited]
        i = np.minimum((take[:, 0] * grid).astype(np.int64), grid - 1)
        j = np.minimum((take[:, 2] * grid).astype(np.int64), grid - 1)
        counts += np.bincount(i * grid + j, minlength=grid * grid)
        visited += len(take)
    emp = np.array([counts[i * grid + j] for i, j in cells], dtype=float) / visited
    norm = analytic / total
    rel = np.abs(emp - norm) / norm
    return DensityReport(grid, visited, cells, emp, analytic, total, rel, seed, chains)


# ---------------------------------------------------------------- natural coding check

def _torus(x: np.ndarray) -> np.ndarray:
    y = np.mod(x, 1.0)
    y[y >= 1.0] = 0.0       # np.mod(-tiny, 1) rounds to 1.0
    return y


@dataclass
class CodingReport:
    N: int
    eps: float
    matched: int
    sign: int
    cloud_points: int
    depth: int

    @property
    def fraction(self) -> float:
        return self.matched / self.N if self.N else 1.0

    def to_json(self) -> dict:
        return {"N": self.N, "eps": self.eps, "matched": self.matched, "match_fraction": self.fraction,
                "sign": self.sign, "cloud_points": self.cloud_points, "depth": self.depth}


def coding_consistency(D: DirectiveSequence, N: int, eps: float = 1e-3, sign: int = -1, u=None,
                       depth: int | None = None) -> CodingReport:
    """Check that the n-th orbit point lands in the domain of the n-th letter.

    The orbit point is ``sign * pi(pi'_u l(prefix_n))`` mod 1 (the correct sign
    is -1, which gives ``n pi(u)``); it must lie within eps (sup-norm, on the
    torus) of ``-pi`` of a cloud point tagged by the n-th letter.
    """
    from .rauzy import cloud, right_eigenvector

    if N <= 0:
        return CodingReport(0, eps, 0, sign, 0, 0)
    if u is None:
        u, _ = right_eigenvector(D)
    if depth is None:
        depth = 0
        while sum(len(w) for w in D.images(depth)) < 10 * N or min(len(w) for w in D.images(depth)) <= N:
            depth += 1
    c = cloud(D, depth, 1, u=u)
    if len(c) < 10 * N:
        raise CloudTooSparse(f"cloud has {len(c)} points, need {10 * N}")
    word = limit_word_bytes(D, N)
    a = np.frombuffer(word, dtype=np.uint8).astype(np.int64)
    uu = np.array(u.to_floats() if isinstance(u, SimplexPoint) else u, dtype=float)
    d = len(uu)
    counts = np.vstack([np.zeros((1, d)), np.cumsum(np.eye(d)[a - 1], axis=0)])[:N]
    proj = counts - np.arange(N)[:, None] * uu[None, :]
    orbit = _torus(sign * proj[:, :-1])
    targets = _torus(-c.ambient[:, :-1])
    letters = c.letters
    matched = 0
    for i in range(1, d + 1):
        want = a == i
        if not want.any():
            continue
        pts = targets[letters == i]
        if not len(pts):
            continue
        tree = cKDTree(pts, boxsize=1.0)
        dist, _ = tree.query(orbit[want], p=np.inf, distance_upper_bound=eps * (1 + 1e-12))
        matched += int(np.sum(dist <= eps))
    return CodingReport(N, eps, matched, sign, len(c), depth)
