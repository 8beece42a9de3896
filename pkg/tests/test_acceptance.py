"""The ten acceptance criteria, one test each, each printing a PASS/FAIL line."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from qpmoduli.formats import bundled, load_surface
from qpmoduli.groupoid_core import random_word
from qpmoduli.intersection import axiom_defects, build_table
from qpmoduli.lie_backend import build_model
from qpmoduli.quasi_poisson import (
    HolonomyPoint,
    annulus_reference,
    bracket_FR,
    bracket_pairing,
    differential,
    fr_bivector,
    jacobiator,
    moment_check,
    moment_equivariance,
    random_observable,
    random_point,
    rho_phi_term,
    schouten_jacobiator,
)
from qpmoduli.quilt import run_scenario
from qpmoduli.scenarios import fission_subalgebras, get_scenario, scenario_poisson_lie_checks
from qpmoduli.spin_network import bracket_symbolic

CORPUS = bundled("surfaces")


@pytest.fixture
def report(capsys):
    def emit(k: int, title: str, residual: float, tol: float, detail: str = "") -> None:
        ok = bool(residual < tol)
        with capsys.disabled():
            extra = f"; {detail}" if detail else ""
            print(f"\nACCEPTANCE {k:2d} {'PASS' if ok else 'FAIL'}  {title}: max residual {residual:.3e} (tol {tol:g}){extra}")
        assert ok, f"criterion {k} failed: {residual} >= {tol}"

    return emit


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


def test_01_pairing_axioms(report):
    assert len(CORPUS) >= 10
    rng = np.random.default_rng(101)
    defects = 0
    for name in CORPUS:
        S = load_surface(name)
        T = build_table(S)
        for _ in range(200):
            a = random_word(S, rng, int(rng.integers(0, 4)))
            c = random_word(S, rng, int(rng.integers(0, 4)))
            b = random_word(S, rng, int(rng.integers(0, 4)), start=c.target)
            defects += sum(axiom_defects(T, a, b, c).values())
    report(1, "pairing axioms, integer defects over 200 pairs x %d surfaces" % len(CORPUS), defects, 0.5)


def test_02_fr_equals_pairing(report):
    worst = 0.0
    for kind in ("gl2", "sl2"):
        m = build_model(kind)
        rng = np.random.default_rng(202)
        for name in CORPUS:
            S = load_surface(name)
            T = build_table(S)
            for _ in range(100):
                x = random_point(S, m, rng)
                f, g = random_observable(S, m.n, rng), random_observable(S, m.n, rng)
                worst = max(worst, _rel(bracket_FR(f, g, x), bracket_pairing(f, g, x, T)))
    report(2, "bracket_FR = bracket_pairing (relative), gl2 and sl2", worst, 1e-9)


def test_03_annulus_bivector(report):
    S = load_surface("annulus")
    worst = 0.0
    for kind in ("gl2", "sl2", "sl2c-iwasawa"):
        m = build_model(kind)
        rng = np.random.default_rng(303)
        for _ in range(50):
            x = random_point(S, m, rng, scale=1.0)
            worst = max(worst, float(np.abs(fr_bivector(x) - annulus_reference(x)).max()))
    report(3, "annulus bivector = 1/2 s e^R ^ e^L", worst, 1e-10)


def test_04_skeleton_independence(report):
    S1, S2 = load_surface("triangle"), load_surface("triangle2")
    to_s1 = {"b": S1.word("b"), "c": S1.word("a^-1 b^-1")}
    m = build_model("gl2")
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(100):
        x1 = random_point(S1, m, rng)
        A, B = x1.hol["a"], x1.hol["b"]
        x2 = HolonomyPoint(S2, m, {"b": B, "c": np.linalg.inv(B @ A)})
        f, g = random_observable(S2, 2, rng), random_observable(S2, 2, rng)
        lhs = bracket_FR(f, g, x2)
        rhs = bracket_FR(f.substitute(S1, to_s1), g.substitute(S1, to_s1), x1)
        worst = max(worst, _rel(lhs, rhs))
    report(4, "triangle skeletons {a^-1, b} vs {b^-1, c}", worst, 1e-9)


def test_05_quasi_poisson_identity(report):
    m = build_model("gl2")
    worst = 0.0
    for name in ("annulus", "genus1"):
        S = load_surface(name)
        T = build_table(S)
        rng = np.random.default_rng(505)
        for _ in range(50):
            x = random_point(S, m, rng)
            fs = [random_observable(S, 2, rng) for _ in range(3)]
            phi = rho_phi_term(*fs, x)
            iterated = jacobiator(*fs, x, T)
            schouten = schouten_jacobiator(*(differential(f, x) for f in fs), x)
            worst = max(worst, abs(iterated - phi), abs(schouten - phi))
    report(5, "Jacobiator = rho(phi), iterated and Schouten routes", worst, 1e-8)


def test_06_moment_map(report):
    m = build_model("gl2")
    ident, equiv = 0.0, 0.0
    for name in CORPUS:
        S = load_surface(name)
        rng = np.random.default_rng(606)
        for _ in range(50):
            x = random_point(S, m, rng)
            ident = max(ident, moment_check(x, random_observable(S, 2, rng)))
        x = random_point(S, m, rng)
        for _ in range(20):
            equiv = max(equiv, moment_equivariance(x, {v: m.random_group(rng) for v in S.vertices}))
    report(6, "moment identity", ident, 1e-8)
    report(6, "moment equivariance", equiv, 1e-9)


@pytest.mark.parametrize("name", ["poisson-lie", "heisenberg-double", "drinfeld-double", "lu-yakimov"])
def test_07_reduction(name, report):
    results = {r.name: r for r in run_scenario(get_scenario(name), samples=50, seed=707)}
    jac = results["Jacobi identity on invariants"].residual
    inv = results["bracket outputs invariant"].residual
    failed = [r.name for r in results.values() if not r.passed]
    report(7, f"{name}: Jacobi on invariants at 50 constrained points", jac, 1e-8)
    report(7, f"{name}: bracket outputs invariant", inv, 1e-8, f"other failed checks: {failed or 'none'}")


def test_08_poisson_lie_multiplicativity(report):
    res = {r.name: r.residual for r in scenario_poisson_lie_checks(samples=50, seed=808)}
    report(8, "multiplicativity on B, 50 pairs", res["multiplicativity on B"], 1e-8)
    report(8, "pi(1) = 0", res["pi(1) = 0 on B"], 1e-10)


def test_09_symbolic_closure(report):
    m = build_model("gl2")
    rng = np.random.default_rng(909)
    direct, skew, leib = 0.0, 0.0, 0.0
    names = ["annulus", "triangle", "genus1", "pants", "annulus2"]
    for k in range(100):
        S = load_surface(names[k % len(names)])
        T = build_table(S)
        x = random_point(S, m, rng)
        f, g = random_observable(S, 2, rng), random_observable(S, 2, rng)
        direct = max(direct, _rel(bracket_symbolic(f, g, T, m).evaluate(x), bracket_pairing(f, g, x, T)))
        if k < 20:
            h = random_observable(S, 2, rng, terms=1, degree=1)
            fg = bracket_symbolic(f, g, T, m).observable
            a = bracket_symbolic(fg, h, T, m).evaluate(x)
            skew = max(skew, _rel(a, -bracket_symbolic(h, fg, T, m).evaluate(x)))
            prod = bracket_symbolic(fg * h, g, T, m).evaluate(x)
            split = fg.evaluate(x) * bracket_symbolic(h, g, T, m).evaluate(x) + bracket_symbolic(fg, g, T, m).evaluate(x) * h.evaluate(x)
            leib = max(leib, _rel(prod, split))
    report(9, "bracket_symbolic = bracket_pairing, 100 pairs", direct, 1e-9)
    report(9, "iterated symbolic brackets: antisymmetry", skew, 1e-10)
    report(9, "iterated symbolic brackets: Leibniz", leib, 1e-10)


def _exact(M) -> list[list[Fraction]]:
    return [[Fraction(float(v)) for v in row] for row in np.atleast_2d(M)]


def _rank(rows: list[list[Fraction]]) -> int:
    rows = [r[:] for r in rows]
    rank, col = 0, 0
    ncols = len(rows[0]) if rows else 0
    while rank < len(rows) and col < ncols:
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                f = rows[i][col] / rows[rank][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
        col += 1
    return rank


def _exact_coisotropy_defect(sub) -> int:
    """dim(c + s#ann(c)) - dim(c), in exact rational arithmetic."""
    C = _exact(sub.generators)  # rows span c
    d = len(C[0])
    s = _exact(sub.parent.s)
    # ann(c) = null space of C; built exactly from rref of C
    rows = [r[:] for r in C]
    pivots, r = [], 0
    for col in range(d):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        rows[r] = [v / rows[r][col] for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    ann = []
    for free in (c for c in range(d) if c not in pivots):
        v = [Fraction(0)] * d
        v[free] = Fraction(1)
        for i, p in enumerate(pivots):
            v[p] = -rows[i][free]
        ann.append(v)
    perp = [[sum(s[i][j] * a[j] for j in range(d)) for i in range(d)] for a in ann]
    return _rank(C + perp) - _rank(C)


def test_10_fission(report):
    _, _, plus, minus = fission_subalgebras()
    exact = _exact_coisotropy_defect(plus) + _exact_coisotropy_defect(minus)
    report(10, "C+ and C- coisotropic, exact rational rank defect", exact, 0.5)
    res = {r.name: r for r in run_scenario(get_scenario("fission"), samples=20, seed=1010)}
    report(10, "quasi-Poisson identity for the reduced G x H structure", res["Jacobiator = rho(phi) of G x H"].residual, 1e-8)
    report(10, "moment equivariance under G x H", res["moment equivariance under G x H"].residual, 1e-8)
    failed = [r.name for r in res.values() if not r.passed]
    report(10, "all fission scenario checks", float(len(failed)), 0.5, f"failed: {failed or 'none'}")
