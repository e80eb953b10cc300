"""Acceptance criteria 1-8, each at its stated tolerance and time budget.

Every test prints one ``ACCEPTANCE <n> PASS|FAIL`` line (visible in the
pytest log) and then asserts the same outcome.
"""
import math
import time

import numpy as np
import pytest

from ps3lab.membrane import MembraneSpec, build_membrane
from ps3lab.moduli import NoRoot, match, moduli_of_membrane, moduli_of_slit_pants
from ps3lab.monodromy import (MobiusComplex, SpectralParams, J_bullet, K_matrix, W_to_p,
                              chi_generators, chi_of_mobius, generator, p_to_W,
                              quadratic_form_J)
from ps3lab.pantsgeom import (RealMobius, a_of_c, associate_pants, b_of_c, canonical_form,
                              normalized_params, reconstruct_R3)
from ps3lab.ratfun import CASES, MobiusReal, classify, fixture, gauge_apply
from ps3lab.recon import conformal_map, reconstruct_u, sample_points, verify_pair
from ps3lab.spectral import cauchy_transform, solve_spectrum, u_values

from conftest import MATCHED_B1

pytestmark = pytest.mark.slow

MAPS = {}      # boundary maps built by criterion 7, reused by criterion 8


@pytest.fixture
def report(capsys):
    def emit(n, ok, elapsed, budget, detail):
        within = budget is None or elapsed < budget
        status = "PASS" if ok and within else "FAIL"
        limit = "" if budget is None else f" / {budget:g} s"
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {status} ({elapsed:.2f} s{limit}) {detail}")
        assert ok, detail
        assert within, f"time budget exceeded: {elapsed:.1f} s"
    return emit


def _mob(m, p):
    return (m.a * p + m.b) / (m.c * p + m.d)


def test_criterion_1_algebraic_suite(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = {"square": 0.0, "J": 0.0, "chi": 0.0, "rule": 0.0, "K": 0.0}
    gens = ("D", "D1", "D2", "D3", "DD1")
    for lam in (1.2, 1.5, 2.0, 2.8):
        sp = SpectralParams(lam)
        W = rng.normal(size=(3, 1000)) + 1j * rng.normal(size=(3, 1000))
        J = quadratic_form_J(W, sp.delta)
        for g in gens:
            G = generator(g, sp)
            worst["square"] = max(worst["square"], np.max(np.abs(G @ G - np.eye(3))))
            dJ = np.abs(quadratic_form_J(G @ W, sp.delta) - J) / (1 + np.abs(J))
            worst["J"] = max(worst["J"], float(np.max(dJ)))
        K = K_matrix(sp)
        V = rng.normal(size=(3, 200)) + 1j * rng.normal(size=(3, 200))
        dK = np.abs(quadratic_form_J(K @ V, sp.delta) - J_bullet(V)) / (1 + np.sum(np.abs(V), 0) ** 2)
        worst["K"] = max(worst["K"], float(np.max(dK)))
        for _ in range(20):
            m1, m2 = (MobiusComplex(*(rng.normal(size=4) + 1j * rng.normal(size=4)))
                      for _ in range(2))
            lhs, rhs = chi_of_mobius(m1 @ m2, sp), chi_of_mobius(m1, sp) @ chi_of_mobius(m2, sp)
            worst["chi"] = max(worst["chi"], np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))
            w = rng.normal(size=3) + 1j * rng.normal(size=3)
            J0 = quadratic_form_J(w, sp.delta)
            pp, pm = W_to_p(w, sp, J0=J0)
            pairs = [(chi_of_mobius(m1, sp), m1, False)]
            pairs += [(generator(g, sp), chi_generators(g, sp), g != "DD1") for g in gens]
            for T, m, swap in pairs:
                qp, qm = W_to_p(T @ w, sp, J0=J0)
                ep, em = (_mob(m, pm), _mob(m, pp)) if swap else (_mob(m, pp), _mob(m, pm))
                err = max(abs(qp - ep) / (1 + abs(qp)), abs(qm - em) / (1 + abs(qm)))
                worst["rule"] = max(worst["rule"], err)
    ok = (worst["square"] < 1e-14 and worst["J"] < 1e-12 and worst["chi"] < 1e-10
          and worst["rule"] < 1e-10 and worst["K"] < 1e-12)
    detail = ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
    report(1, ok, time.perf_counter() - t0, 1.0, detail)


def test_criterion_2_round_trips(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    sp = SpectralParams(1.5)
    e1 = e2 = 0.0
    for _ in range(1000):
        pp, pm = rng.normal(size=2) + 1j * rng.normal(size=2)
        J0 = complex(rng.normal(), rng.normal())
        rp, rm = W_to_p(p_to_W(pp, pm, J0, sp), sp)
        e1 = max(e1, abs(rp - pp) / (1 + abs(pp)), abs(rm - pm) / (1 + abs(pm)))
        W = rng.normal(size=3) + 1j * rng.normal(size=3)
        J0 = quadratic_form_J(W, sp.delta)
        W2 = np.array(p_to_W(*W_to_p(W, sp, J0=J0), J0, sp).W)
        e2 = max(e2, np.max(np.abs(W2 - W)) / np.max(np.abs(W)))
    sr = solve_spectrum(fixture("B1"), 16, certify=False)
    c = sr.eigenvectors[0]
    t = np.linspace(-0.95, 0.95, 21)
    u = u_values(c, t)
    eps = 1e-6
    jump = np.array([cauchy_transform(c, x + 1j * eps) - cauchy_transform(c, x - 1j * eps)
                     for x in t])
    e3 = np.max(np.abs(jump / (2j * np.pi) - u)) / np.max(np.abs(u))
    ok = e1 < 1e-10 and e2 < 1e-10 and e3 < 1e-4
    report(2, ok, time.perf_counter() - t0, 1.0,
           f"p->W->p {e1:.1e}, W->p->W {e2:.1e}, jump at eps=1e-6 {e3:.1e}")


def test_criterion_3_closed_forms(report):
    t0 = time.perf_counter()
    c = np.linspace(1 / 3, 1 / 2, 2002)[1:-1]
    mono = bool(np.all(np.diff(a_of_c(c)) > 0) and np.all(np.diff(b_of_c(c)) > 0))
    samples = np.linspace(1 / 3, 1 / 2, 102)[1:-1]
    err = max(abs(normalized_params(a_of_c(s))[0] - s) for s in samples)
    # "exactly to rounding": within 4 ulp of the decimal values
    fixed = (abs(b_of_c(0.4) - 1.6) <= 4 * np.spacing(1.6)
             and abs(a_of_c(0.4) - 1.024) <= 4 * np.spacing(1.024))
    ok = mono and err < 1e-12 and fixed
    report(3, ok, time.perf_counter() - t0, 1.0,
           f"monotone={mono}, round trip {err:.1e} over 100 samples, c=0.4 -> "
           f"(b, a)=({b_of_c(0.4)!r}, {a_of_c(0.4)!r})")


def test_criterion_4_direct_solver(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    notes, ok = [], True
    for case in ("A", "B1"):
        R = fixture(case)
        sr = solve_spectrum(R, 128)
        lam = sr.eigenvalues
        real = float(np.max(np.abs(sr.imag))) if len(lam) else math.inf
        inside = bool(np.all((lam > 0) & (lam < 3)))
        gaps = np.abs(lam - 1)
        tail = len(lam) >= 5 and bool(np.all(np.diff(gaps[-5:]) < 0))
        base = solve_spectrum(R, 64).eigenvalues
        gauge = 0.0
        for _ in range(10):
            L = MobiusReal(float(rng.uniform(-0.6, 0.6)), int(rng.choice((-1, 1))))
            M = MobiusReal(float(rng.uniform(-0.6, 0.6)), int(rng.choice((-1, 1))))
            Rg = gauge_apply(gauge_apply(R, L, "pre"), M, "post")
            other = solve_spectrum(Rg, 64).eigenvalues
            n = min(len(base), len(other), 4)
            gauge = max(gauge, float(np.max(np.abs(other[:n] - base[:n]))))
        ok &= real < 1e-8 and inside and tail and gauge < 1e-6
        notes.append(f"{case}: |Im|={real:.1e} in(0,3)={inside} tail={tail} gauge={gauge:.1e}")
    report(4, ok, time.perf_counter() - t0, 30.0, "; ".join(notes))


def test_criterion_5_pants_round_trip(report):
    t0 = time.perf_counter()
    worst = 0.0
    for case in CASES:
        R = fixture(case)
        p = associate_pants(R)
        q = associate_pants(reconstruct_R3(p, classify(R)))
        worst = max(worst, canonical_form(q).distance(canonical_form(p)))
    report(5, worst < 1e-8, time.perf_counter() - t0, 5.0,
           f"worst canonical distance {worst:.1e} over {len(CASES)} fixtures")


def test_criterion_6_moduli(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    p = associate_pants(fixture("B1"))
    t = moduli_of_slit_pants(p)
    inv, n = 0.0, 0
    while n < 20:
        a, b, c, d = rng.normal(size=4)
        if abs(a * d - b * c) < 0.2:
            continue
        n += 1
        inv = max(inv, moduli_of_slit_pants(p.mapped(RealMobius(a, b, c, d))).distance(t))
    rec = {}
    for s in (MembraneSpec("PB1", 1.3, 3.0, 4.5, 1, 0),
              MembraneSpec("PA2", 1.5, 2 ** 0.5, 2 * 2 ** 0.5, 1, 0)):
        r = match(moduli_of_membrane(build_membrane(s)), s.fashion, s.m1, s.m2, tol=1e-9)
        rec[s.fashion] = max(abs(r.lam - s.lam), abs(r.h1 - s.h1) / s.h1,
                             abs(r.h2 - s.h2) / s.h2)
    ok = inv < 1e-6 and all(v < 1e-4 for v in rec.values())
    report(6, ok, time.perf_counter() - t0, 300.0,
           f"Moebius invariance {inv:.1e}; recovery " +
           ", ".join(f"{k} {v:.1e}" for k, v in rec.items()))


def test_criterion_7_end_to_end(report):
    t0 = time.perf_counter()
    R = fixture("B1")
    p = associate_pants(R)
    target = moduli_of_slit_pants(p)
    sr = solve_spectrum(R, 64)
    x, y = sample_points(R, 64)
    lines, passed = [], []
    for m in (1, 2):
        try:
            res = match(target, "PB1", m, 0, tol=1e-9)
        except NoRoot as exc:
            lines.append(f"m={m}: NoRoot, certificates {exc.certificates}")
            continue
        bm = conformal_map(p, build_membrane(res.spec), y=y, x=x)
        MAPS[m] = bm
        rc = reconstruct_u(bm, "B1", "PB1")
        rep = verify_pair(R, res.lam, rc.x, rc.u, spectrum=sr)
        good = (rep["lambda_rel_error"] < 1e-2 and rep["residual"] < 1e-3
                and 1 < res.lam < 2 and rc.zero_count + 2 == m + 1)
        if good:
            passed.append(m)
        lines.append(f"m={m}: lambda={res.lam:.12f} direct={rep['lambda_direct']:.12f} "
                     f"rel={rep['lambda_rel_error']:.1e} residual={rep['residual']:.1e} "
                     f"zeros={rc.zero_count}+2")
    report(7, bool(passed), time.perf_counter() - t0, 900.0,
           f"succeeded for m in {passed}; " + "; ".join(lines))


def test_criterion_8_containment(report):
    t0 = time.perf_counter()
    if not MAPS:
        R = fixture("B1")
        x, y = sample_points(R, 64)
        for m, s in MATCHED_B1.items():
            MAPS[m] = conformal_map(associate_pants(R), build_membrane(s), y=y, x=x)
    worst = {f"m={m} {k}": v for m, bm in MAPS.items() for k, v in bm.containment.items()}
    ok = all(v < 1e-5 for v in worst.values())
    report(8, ok, time.perf_counter() - t0, None,
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
