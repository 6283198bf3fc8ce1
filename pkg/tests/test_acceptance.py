"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or ``python tests/test_acceptance.py``.
The collected lines are also repeated in the pytest terminal summary.
Raw discrepancy traces are written to $MCFSADIC_ARTIFACTS (default ./artifacts).
"""

import json
import os
import random
import time
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np
import pytest

from conftest import rand_point
from mcfsadic.core import SimplexPoint, compose_all, power
from mcfsadic.errors import OutsideDomain
from mcfsadic.mcf import (ArnouxRauzy, Brun, CassaigneSelmer, JacobiPerron, ar_substitution, brun_substitution,
                          dbonacci, get_algorithm, jp_substitution, step)
from mcfsadic.sadic import DirectiveSequence, balance_constant, factor_complexity, saturating_depth
from mcfsadic.rauzy import cloud, depth_for_points, raster_tiling_check, right_eigenvector
from mcfsadic.spectral import bpa_run, canonical, char_poly, gcc_search, prefix_norms, tijdeman_bound, tijdeman_word
from mcfsadic.dynamics import (density_histogram, density_total_mass, letter_discrepancy, lyapunov,
                               periodic_lyapunov, coding_consistency)

RESULTS: list = []
ARTIFACTS = Path(os.environ.get("MCFSADIC_ARTIFACTS", Path(__file__).resolve().parent.parent / "artifacts"))

CS = CassaigneSelmer()
TAU = CS.GAMMA[1] @ CS.GAMMA[2]
TAU_SEQ = DirectiveSequence.periodic([CS.GAMMA[1], CS.GAMMA[2]], name="tau")
TRIB_SEQ = DirectiveSequence.periodic([dbonacci(3)], name="tribonacci")
BRUN4 = compose_all([brun_substitution(1, 2, 4), brun_substitution(2, 3, 4),
                     brun_substitution(3, 4, 4), brun_substitution(4, 1, 4)])


def record(k: int, title: str, ok: bool, detail: str, t0: float) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {k:2d}  {title}: {detail}  [{time.perf_counter() - t0:.1f} s]"
    RESULTS.append(line)
    print(line)
    assert ok, line


def W(s):
    return tuple(int(c) for c in s)


def P(a, b):
    return canonical((W(a), W(b)))


def F(*v):
    return SimplexPoint([Fraction(x) for x in v])


_lyap_cache: dict = {}


def lyap_runs():
    if not _lyap_cache:
        for name, d in [("cs", 3), ("brun", 3), ("brun", 4), ("jp", 3)]:
            _lyap_cache[f"{name}{d}"] = lyapunov(get_algorithm(name, d), steps=10 ** 5, trials=32, seed=1)
    return _lyap_cache


# ---------------------------------------------------------------- criteria

def test_c01_incidence_fidelity():
    t0 = time.perf_counter()
    C1 = ((1, 1, 0), (0, 0, 1), (0, 1, 0))
    C2 = ((0, 1, 0), (1, 0, 0), (0, 1, 1))
    cp = char_poly(TAU.incidence)
    ok = CS.GAMMA[1].incidence == C1 and CS.GAMMA[2].incidence == C2 and cp == [1, -2, 1, -1]
    record(1, "incidence fidelity", ok, f"C1, C2 exact; char poly {cp}", t0)


def test_c02_balanced_pair_reproduction():
    t0 = time.perf_counter()
    r = bpa_run(TAU)
    expected = {P("1", "1"), P("2", "2"), P("12", "21"), P("312", "213"), P("132", "213")}
    got = set(r.levels[1]) if len(r.levels) > 1 else set()
    later = P("321", "213") in set(r.pairs)
    ok = r.verdict == "Terminates" and got == expected and later
    record(2, "balanced pair run of tau", ok,
           f"verdict {r.verdict}, I1 match {got == expected}, (321,213) found {later}, {len(r.pairs)} pairs", t0)


def test_c03_discrete_spectrum_corpus():
    t0 = time.perf_counter()
    corpus = {"tau": TAU, "iota01": jp_substitution(0, 1), "tribonacci": dbonacci(3),
              "4-bonacci": dbonacci(4), "brun4": BRUN4}
    verdicts = {k: bpa_run(s, pair_cap=10 ** 4).verdict for k, s in corpus.items()}
    ok = all(v == "Terminates" for v in verdicts.values())
    record(3, "discrete spectrum corpus", ok, ", ".join(f"{k}={v}" for k, v in verdicts.items()), t0)


def test_c04_dbonacci_identity():
    t0 = time.perf_counter()
    eq = {d: compose_all([ar_substitution(i, d) for i in range(1, d + 1)]) == power(dbonacci(d), d)
          for d in (3, 4, 5)}
    record(4, "d-bonacci identity", all(eq.values()), f"{eq}", t0)


def test_c05_step_oracle():
    t0 = time.perf_counter()
    checks = [
        (CassaigneSelmer(), F("2/5", "1/4", "7/20"), 1, ("1/13", "7/13", "5/13")),
        (JacobiPerron(), F("1/5", "3/10", "1/2"), (1, 2), ("1/4", "1/4", "1/2")),
        (Brun(3), F("1/2", "3/10", "1/5"), (1, 2), ("2/7", "3/7", "2/7")),
        (ArnouxRauzy(4), F("3/5", "1/5", "1/10", "1/10"), 1, ("1/3", "1/3", "1/6", "1/6")),
    ]
    ok = True
    for algo, x, cell, y in checks:
        c, z = step(algo, x)
        ok &= c == cell and z.coords == tuple(Fraction(v) for v in y)
    try:
        ArnouxRauzy(3).branch(F(1, 1, 1))
        ok = False
    except OutsideDomain:
        pass
    record(5, "single-step oracle", ok, "CS, JP, Brun, AR examples exact; AR centre rejected", t0)


def test_c06_complexity():
    t0 = time.perf_counter()
    bad = []
    for seed in range(20):
        D = DirectiveSequence.from_expansion(CS, rand_point(seed))
        p = factor_complexity(D, 12, saturating_depth(D, 12))
        if p != [2 * n + 1 for n in range(1, 13)]:
            bad.append(("cs", seed, p))
    for seed in range(5):
        rng = random.Random(seed)
        letters = [1, 2, 3, 4] + [rng.randint(1, 4) for _ in range(396)]
        D = DirectiveSequence.explicit([ar_substitution(i, 4) for i in letters])
        p = factor_complexity(D, 8, saturating_depth(D, 8))
        if p != [3 * n + 1 for n in range(1, 9)]:
            bad.append(("ar4", seed, p))
    record(6, "factor complexity", not bad, f"20 CS points 2n+1 (n<=12), 5 AR4 sequences 3n+1 (n<=8); failures {bad}", t0)


def test_c07_periodic_lyapunov():
    t0 = time.perf_counter()
    th = periodic_lyapunov(CS, [1, 2])
    with mpmath.workprec(128):
        lam = mpmath.findroot(lambda t: t ** 3 - 2 * t ** 2 + t - 1, mpmath.mpf("1.75"))
        e1 = abs(th[0] - mpmath.log(lam) / 2)
        e2 = abs(th[1] + mpmath.log(lam) / 4)
    ok = e1 < 1e-6 and e2 < 1e-6
    record(7, "periodic Lyapunov oracle", ok,
           f"theta1={mpmath.nstr(th[0], 12)} theta2={mpmath.nstr(th[1], 12)} errors {float(e1):.1e}, {float(e2):.1e}", t0)


def test_c08_pisot_condition():
    t0 = time.perf_counter()
    runs = lyap_runs()
    ok = all(e.pisot_condition() for e in runs.values())
    detail = "; ".join(f"{k}: t1={e.theta[0]:.4f} {tuple(round(c, 4) for c in e.ci[0])}, "
                       f"t2={e.theta[1]:.4f} {tuple(round(c, 4) for c in e.ci[1])}" for k, e in runs.items())
    record(8, "Pisot condition (Monte Carlo)", ok, detail, t0)


def test_c09_unimodular_sum_rule():
    t0 = time.perf_counter()
    runs = lyap_runs()
    ok = all(e.total_ci[0] <= 0 <= e.total_ci[1] for e in runs.values())
    detail = "; ".join(f"{k}: sum={e.total:.2e} ci=({e.total_ci[0]:.2e}, {e.total_ci[1]:.2e}) incl. rounding floor {e.rounding_floor:.1e}" for k, e in runs.items())
    record(9, "unimodular sum rule", ok, detail, t0)


def test_c10_cs_invariant_density():
    t0 = time.perf_counter()
    r = density_histogram(10 ** 7, 8, seed=1)
    mass = density_total_mass()
    shape_ok = r.max_rel_error < 0.10
    mass_ok = abs(mass - 1) < 1e-6
    # the printed density integrates to 12/pi^2 * pi^2/6 = 2; the histogram is compared with its normalized form
    record(10, "CS invariant density", shape_ok and mass_ok,
           f"max rel cell error {r.max_rel_error:.4f} (< 0.10: {shape_ok}); analytic total mass {mass:.9f} "
           f"(= 1 +- 1e-6: {mass_ok})", t0)


def test_c11_bounded_remainder():
    t0 = time.perf_counter()
    ARTIFACTS.mkdir(parents=True, exist_ok=True)
    traces, bad = [], []
    for seed in range(10):
        x = rand_point(100 + seed)
        tr = letter_discrepancy(DirectiveSequence.from_expansion(CS, x), x, 10 ** 6)
        traces.append({"seed": 100 + seed, "x": [str(c) for c in x.coords], **tr.to_json()})
        if not tr.bounded(1.0):
            bad.append(seed)
    path = ARTIFACTS / "discrepancy_traces.json"
    path.write_text(json.dumps(traces, default=float))
    worst = max(max(t["max_second_half"]) for t in traces)
    record(11, "bounded remainder diagnostic", not bad,
           f"10 points, N=1e6, no growth beyond +1 (failures {bad}); largest deviation {worst:.3f}; traces in {path}", t0)


def test_c12_rauzy_cloud_invariants():
    t0 = time.perf_counter()
    C, _ = balance_constant(TAU_SEQ, 200)
    small = cloud(TAU_SEQ, depth_for_points(TAU_SEQ, 10 ** 5))
    u = np.array(right_eigenvector(TAU_SEQ)[0].to_floats())
    frac = small.letter_fractions()
    ball_ok = small.sup_norm() <= C
    frac_ok = bool(np.all(np.abs(frac - u) < 0.02 * u))
    rasters = {}
    for name, D in (("tau", TAU_SEQ), ("tribonacci", TRIB_SEQ)):
        c = cloud(D, depth_for_points(D, 10 ** 6))
        r = raster_tiling_check(c, 2, 512)
        rasters[name] = (len(c), r.coverage, r.overlap)
    raster_ok = all(cov > 0.95 and ov < 0.05 for _, cov, ov in rasters.values())
    detail = (f"{len(small)} points, sup norm {small.sup_norm():.3f} <= C={C}: {ball_ok}; "
              f"fractions {np.round(frac, 4)} vs u {np.round(u, 4)}: {frac_ok}; "
              + ", ".join(f"{k}: {n} points coverage {cov:.4f} overlap {ov:.4f}" for k, (n, cov, ov) in rasters.items()))
    record(12, "Rauzy cloud invariants", ball_ok and frac_ok and raster_ok, detail, t0)


def test_c13_coding_consistency():
    t0 = time.perf_counter()
    good = coding_consistency(TAU_SEQ, 1000, eps=1e-3)
    flipped = coding_consistency(TAU_SEQ, 1000, eps=1e-3, sign=1)
    ok = good.fraction == 1.0 and flipped.fraction < 0.5
    record(13, "natural coding consistency", ok,
           f"match fraction {good.fraction:.4f}, sign-flip control {flipped.fraction:.4f}", t0)


def test_c14_effective_gcc():
    t0 = time.perf_counter()
    w = gcc_search(TAU_SEQ, 16, 2.0)
    ok = w is not None and bool(w.verdict) and not w.degenerate
    detail = "no witness" if w is None else f"n=16 C=2 z={tuple(round(v, 4) for v in w.z)} i={w.i} left size {w.left_size}"
    record(14, "effective geometric coincidence", ok, detail, t0)


def test_c15_tijdeman_words():
    t0 = time.perf_counter()
    rng = random.Random(15)
    bad = 0
    worst = Fraction(0)
    for _ in range(100):
        x = [rng.randint(0, 20) for _ in range(3)]
        if sum(x) == 0:
            x[rng.randrange(3)] = 1
        w = tijdeman_word(x)
        sup = prefix_norms(w, x)["sup"]
        worst = max(worst, sup)
        counts = tuple(w.count(i) for i in (1, 2, 3))
        if counts != tuple(x) or sup > tijdeman_bound(3) or x[w[0] - 1] != max(x):
            bad += 1
    record(15, "Tijdeman words", bad == 0, f"100 vectors, failures {bad}, worst sup norm {worst} <= {tijdeman_bound(3)}", t0)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
