from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpmoduli.formats import load_surface
from qpmoduli.intersection import build_table
from qpmoduli.lie_backend import build_model
from qpmoduli.quasi_poisson import Observable, bracket_FR, bracket_pairing, random_observable, random_point
from qpmoduli.quilt import Domain, QuiltedSurface, residual_phi_term
from qpmoduli.scenarios import fission_invariants, fission_quilt, fission_sampler
from qpmoduli.spin_network import DiagramError, GraphDiagram, bracket_quilted, bracket_symbolic, ev, identity_diagram


def _genus1():
    S = load_surface("genus1")
    return S, build_table(S)


def test_identity_diagram_leaves_observables_unchanged(rng):
    S, _ = _genus1()
    f = random_observable(S, 2, rng)
    assert ev(identity_diagram(S), f).terms == f.terms


def test_ev_substitutes_words_and_is_multiplicative(gl2, rng):
    S, _ = _genus1()
    D = GraphDiagram(S, {"x": ("v", "v"), "y": ("v", "v")}, {"v": "p"}, {"x": S.word("a b"), "y": S.word("b^-1")})
    fx = Observable.entry(D.word("x"), 0, 1)
    fy = Observable.trace(D.word("x y"), 2)
    x = random_point(S, gl2, rng)
    A, B = x.hol["a"], x.hol["b"]
    assert abs(ev(D, fx).evaluate(x) - (A @ B)[0, 1]) < 1e-12
    assert abs(ev(D, fy).evaluate(x) - np.trace(A)) < 1e-12
    assert abs(ev(D, fx * fy).evaluate(x) - ev(D, fx).evaluate(x) * ev(D, fy).evaluate(x)) < 1e-12


def test_subdividing_an_edge_changes_nothing(gl2, rng):
    S, T = _genus1()
    whole = GraphDiagram(S, {"z": ("v", "v")}, {"v": "p"}, {"z": S.word("a b")})
    split = GraphDiagram(S, {"z1": ("v", "v"), "z2": ("v", "v")}, {"v": "p"}, {"z1": S.word("b"), "z2": S.word("a")})
    f1 = ev(whole, Observable.trace(whole.word("z"), 2) * Observable.entry(whole.word("z"), 1, 0))
    f2 = ev(split, Observable.trace(split.word("z2 z1"), 2) * Observable.entry(split.word("z2 z1"), 1, 0))
    g = random_observable(S, 2, rng)
    assert f1.terms == f2.terms
    x = random_point(S, gl2, rng)
    assert bracket_symbolic(f1, g, T, gl2).evaluate(x) == pytest.approx(bracket_symbolic(f2, g, T, gl2).evaluate(x))


def test_diagram_rejects_bad_anchors_and_endpoints():
    S, _ = _genus1()
    with pytest.raises(DiagramError, match="interior"):
        GraphDiagram(S, {"x": ("v", "w")}, {"v": "p"}, {"x": S.word("a")})
    with pytest.raises(DiagramError, match="marked point"):
        GraphDiagram(S, {"x": ("v", "v")}, {"v": "nowhere"}, {"x": S.word("a")})
    S2 = load_surface("genus1_2pts")
    with pytest.raises(DiagramError, match="endpoints"):
        GraphDiagram(S2, {"x": ("v", "v")}, {"v": "p"}, {"x": S2.word("c")})


@pytest.mark.parametrize("name", ["annulus", "triangle", "genus1", "pants", "chain5"])
def test_symbolic_matches_pairing_route(name, gl2):
    S = load_surface(name)
    T = build_table(S)
    rng = np.random.default_rng(31)
    for _ in range(10):
        x = random_point(S, gl2, rng)
        f, g = random_observable(S, 2, rng), random_observable(S, 2, rng)
        ref = bracket_pairing(f, g, x, T)
        assert abs(bracket_symbolic(f, g, T, gl2).evaluate(x) - ref) < 1e-9 * max(1.0, abs(ref))


def test_annulus_trace_against_entry(gl2):
    S = load_surface("annulus")
    T = build_table(S)
    e = S.word("e")
    rng = np.random.default_rng(0)
    for i in range(2):
        for j in range(2):
            res = bracket_symbolic(Observable.trace(e, 2), Observable.entry(e, i, j), T, gl2)
            for _ in range(10):
                x = random_point(S, gl2, rng)
                ref = bracket_FR(Observable.trace(e, 2), Observable.entry(e, i, j), x)
                assert abs(res.evaluate(x) - ref) < 1e-9


def test_constants_and_discs_give_zero(gl2, rng):
    S, T = _genus1()
    f = random_observable(S, 2, rng)
    assert bracket_symbolic(Observable.constant(3.0), f, T, gl2).observable.is_zero()
    D = load_surface("disc")
    TD = build_table(D)
    g = random_observable(D, 2, rng)
    assert bracket_symbolic(g, g * g, TD, gl2).observable.is_zero()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_iterated_symbolic_brackets_are_skew_and_leibniz(seed):
    S = load_surface("annulus2")
    m = build_model("gl2")
    T = build_table(S)
    rng = np.random.default_rng(seed)
    f, g, h = (random_observable(S, 2, rng, terms=1, degree=1) for _ in range(3))
    fg = bracket_symbolic(f, g, T, m).observable
    x = random_point(S, m, rng)
    lhs = bracket_symbolic(fg, h, T, m).evaluate(x)
    rhs = -bracket_symbolic(h, fg, T, m).evaluate(x)
    assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))
    prod = bracket_symbolic(fg * g, h, T, m).evaluate(x)
    split = fg.evaluate(x) * bracket_symbolic(g, h, T, m).evaluate(x) + lhs * g.evaluate(x)
    assert abs(prod - split) < 1e-10 * max(1.0, abs(prod))


def test_quilted_bracket_single_domain_is_symbolic(gl2, rng):
    S, _ = _genus1()
    Q = QuiltedSurface([Domain("D", S, gl2)])
    f = Observable.trace(Q.word("D.a D.b"), 2)
    g = Observable.trace(Q.word("D.b"), 2)
    x = Q.random_point(rng)
    ref = bracket_symbolic(f, g, Q.table, Q.models).evaluate(x)
    assert bracket_quilted(f, g, Q).evaluate(x) == pytest.approx(ref)


def test_quilted_bracket_of_separate_domains_vanishes(gl2):
    S, _ = _genus1()
    Q = QuiltedSurface([Domain("A", S, gl2), Domain("B", S, gl2)])
    f = Observable.trace(Q.word("A.a A.b"), 2)
    g = Observable.trace(Q.word("B.a"), 2)
    assert bracket_quilted(f, g, Q).observable.is_zero()


def test_quilted_bracket_rejects_non_invariant():
    Q = fission_quilt()
    bad = Observable.entry(Q.word("G.c0"), 0, 0)
    good = fission_invariants(Q)[0][1]
    with pytest.raises(ValueError, match="not invariant"):
        bracket_quilted(bad, good, Q)


def test_iterated_quilted_bracket_jacobi_on_fission():
    Q = fission_quilt()
    fs = [f for _, f in fission_invariants(Q)][:4]
    sample = fission_sampler(Q)
    rng = np.random.default_rng(3)
    pts = [sample(rng).point for _ in range(5)]
    inner = {}
    for i, j in ((1, 2), (2, 0), (0, 1)):
        inner[i, j] = bracket_quilted(fs[i], fs[j], Q, samples=0).observable
    for x in pts:
        J = sum(bracket_symbolic(fs[k], inner[i, j], Q.table, Q.models).evaluate(x)
                for k, (i, j) in zip((0, 1, 2), ((1, 2), (2, 0), (0, 1))))
        assert abs(J - residual_phi_term(fs[0], fs[1], fs[2], Q, x)) < 1e-8
