import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from conftest import rand_point
from mcfsadic.core import SimplexPoint, Substitution
from mcfsadic.errors import UnsupportedMeasure
from mcfsadic.mcf import ArnouxRauzy, CassaigneSelmer, expand, get_algorithm
from mcfsadic.rauzy import ProjectionFrame, right_eigenvector
from mcfsadic.sadic import DirectiveSequence, limit_word_bytes
from mcfsadic.dynamics import (analytic_cell_masses, cocycle_lyapunov, coding_consistency, density_histogram,
                               density_total_mass, grid_deviation, letter_discrepancy, lyapunov,
                               periodic_lyapunov, translation_orbit, word_discrepancy)

# ---------------------------------------------------------------- Lyapunov exponents

def test_periodic_loop_exponents():
    cs = CassaigneSelmer()
    th = periodic_lyapunov(cs, [1, 2], precision=128)
    with mpmath.workprec(128):
        lam = mpmath.findroot(lambda t: t ** 3 - 2 * t ** 2 + t - 1, mpmath.mpf("1.75"))
        assert abs(th[0] - mpmath.log(lam) / 2) < 1e-30
        assert abs(th[1] + mpmath.log(lam) / 4) < 1e-30
        assert abs(th[0] + th[1] + th[2]) < 1e-30
    est = cocycle_lyapunov(cs, [1, 2], 20000)
    assert abs(est[0] - float(th[0])) < 1e-3 and abs(est[1] - float(th[1])) < 1e-3


def test_lyapunov_small_run_signs_and_sum():
    e = lyapunov(CassaigneSelmer(), steps=4000, trials=8, seed=3)
    assert e.theta[0] > 0 > e.theta[1]
    assert abs(e.total) < 1e-9
    assert e.to_json()["steps"] == 4000


def test_sum_interval_includes_rounding_floor():
    e = lyapunov(get_algorithm("brun", 4), steps=2000, trials=8, seed=5)
    lo, hi = e.total_ci_bootstrap
    eps = np.finfo(float).eps
    assert 16 * eps < e.rounding_floor < 64 * eps
    assert e.total_ci == (lo - e.rounding_floor, hi + e.rounding_floor)
    # the Benettin sum differs from 0 only at the rounding scale
    assert abs(e.total) < e.rounding_floor


def test_lyapunov_is_deterministic():
    a = lyapunov(get_algorithm("brun", 3), steps=1500, trials=4, seed=9)
    b = lyapunov(get_algorithm("brun", 3), steps=1500, trials=4, seed=9)
    assert a.theta == b.theta and a.ci == b.ci


def test_lyapunov_rejects_ar():
    with pytest.raises(UnsupportedMeasure):
        lyapunov(ArnouxRauzy(3), steps=10, trials=2)


def test_top_exponent_against_exact_products():
    # exact big-integer product along one high-precision orbit versus the Monte Carlo mean
    cs = CassaigneSelmer()
    with mpmath.workprec(4096):
        # an irrational start: a rational one reaches the boundary after a few hundred steps
        x = SimplexPoint([mpmath.sqrt(2), mpmath.sqrt(3), mpmath.sqrt(5)], precision=4096)
    n = 3000
    rec = expand(cs, x, n)
    assert rec.ok
    top = math.log(max(sum(col) for col in zip(*rec.products[n]))) / n
    mc = lyapunov(cs, steps=20000, trials=16, seed=2)
    assert abs(top - mc.theta[0]) < 0.03


# ---------------------------------------------------------------- translations

def test_translation_orbit_examples():
    pts = translation_orbit([0, 0], [Fraction(1, 5), Fraction(2, 7)], 10)
    assert np.all(pts == pts[0])
    pts = translation_orbit([Fraction(1, 2), Fraction(1, 3)], None, 7)
    assert np.allclose(pts[6], pts[0]) and not np.allclose(pts[3], pts[0])
    assert np.all((pts >= 0) & (pts < 1))


def test_translation_direct_matches_iteration():
    N = 10 ** 4
    with mpmath.workprec(200):
        tt = [mpmath.sqrt(2) - 1, mpmath.sqrt(3) - 1]
        pts = translation_orbit(tt, None, N)
        x = [mpmath.mpf(0), mpmath.mpf(0)]
        for k in range(N):
            if k % 997 == 0:
                diff = [abs(float(x[i]) - pts[k, i]) for i in range(2)]
                assert max(min(d, 1 - d) for d in diff) < 1e-12
            x = [(x[i] + tt[i]) % 1 for i in range(2)]


def test_translation_equidistributes():
    u, _ = right_eigenvector(DirectiveSequence.periodic([Substitution.parse("1->1;2->13;3->2"),
                                                         Substitution.parse("1->2;2->13;3->3")]))
    pts = translation_orbit(list(u.to_mpf()[:2]), None, 1000)
    assert grid_deviation(pts, 4) < 0.15


# ---------------------------------------------------------------- discrepancy

def test_periodic_word_discrepancy():
    tr = word_discrepancy(bytes([1, 2, 3]) * 3000, [Fraction(1, 3)] * 3)
    assert tr.max_deviation <= 2 / 3 + 1e-12
    tr = word_discrepancy(bytes([1]) * 500, [1, 0, 0])
    assert tr.max_deviation == 0 and tr.bounded()


def test_checkpoints_match_recount(tau_seq):
    u, _ = right_eigenvector(tau_seq)
    tr = letter_discrepancy(tau_seq, u, 50_000, checkpoints=[17, 4321, 50_000])
    w = limit_word_bytes(tau_seq, 50_000)
    uf = u.to_floats()
    for n, devs in zip(tr.checkpoints, tr.deviations):
        for i in range(3):
            assert abs(devs[i] - abs(w[:n].count(i + 1) - n * uf[i])) < 1e-9


def test_cs_point_bounded_remainder():
    cs = CassaigneSelmer()
    x = rand_point(1)
    tr = letter_discrepancy(DirectiveSequence.from_expansion(cs, x), x, 10 ** 6)
    assert tr.bounded(1.0)
    assert tr.max_deviation < 5


# ---------------------------------------------------------------- invariant density

def test_density_total_mass_closed_form():
    # integral over the simplex of 12 / (pi^2 (1 - x1)(1 - x3)) equals 12/pi^2 * pi^2/6 = 2
    assert abs(density_total_mass() - 2.0) < 1e-8
    cells, masses = analytic_cell_masses(8)
    assert len(cells) == 36 and abs(masses.sum() - 2.0) < 1e-6


def test_density_histogram_shape():
    r = density_histogram(2 * 10 ** 6, 8, seed=4)
    assert r.steps == 2 * 10 ** 6 and abs(r.empirical.sum() - 1) < 1e-12
    assert r.max_rel_error < 0.1
    empty = density_histogram(0)
    assert empty.steps == 0 and empty.max_rel_error == 0


# ---------------------------------------------------------------- natural coding

def test_coding_consistency_and_sign_control(tau_seq):
    assert coding_consistency(tau_seq, 300).fraction == 1.0
    assert coding_consistency(tau_seq, 300, sign=1).fraction < 0.5
    assert coding_consistency(tau_seq, 0).N == 0


def test_coding_matches_translation_orbit(tau_seq):
    # orbit points -pi(pi'_u l(p_n)) equal n * pi(u) mod 1
    u, _ = right_eigenvector(tau_seq)
    w = limit_word_bytes(tau_seq, 400)
    f = ProjectionFrame(u)
    counts = np.zeros(3)
    direct = translation_orbit(list(u.to_mpf()[:2]), None, 400)
    for n in range(400):
        p = -f.project(counts)[:2] % 1.0
        d = np.abs(p - direct[n])
        assert np.all(np.minimum(d, 1 - d) < 1e-9)
        counts[w[n] - 1] += 1
