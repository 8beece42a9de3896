from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpmoduli.groupoid_core import (
    IN,
    OUT,
    GroupoidRingElement as R,
    SurfaceError,
    Word,
    WordError,
    boundary_structure,
    compose,
    disc,
    disjoint_union,
    free_reduce,
    fuse,
    random_word,
    replay,
    same_surface,
    sub_surface,
    topology,
)
from qpmoduli.formats import load_surface


def test_free_reduce_cancels_adjacent_inverses():
    assert free_reduce([("a", 1), ("b", 1), ("b", -1), ("a", -1), ("c", 1)]) == (("c", 1),)


def test_word_text_and_endpoints():
    S = load_surface("triangle")
    w = S.word("b a")
    assert (w.source, w.target) == ("p0", "p2")
    assert S.word("a^-1").source == "p1"
    with pytest.raises(WordError):
        S.word("a b")


def test_identity_word_needs_basepoint():
    S = load_surface("disc")
    assert S.word("1@p0").is_identity()
    with pytest.raises(WordError):
        S.word([])


def test_compose_reduces():
    S = load_surface("genus1")
    a, b = S.edge_word("a"), S.edge_word("b")
    assert compose(compose(a, b), b.inverse()) == a
    assert compose(a, a.inverse()).is_identity()


def test_fuse_orders_half_edges_p_first():
    S = disjoint_union(disc("x", "P", "P1"), disc("y", "Q", "Q1"))
    F = fuse(S, "P", "Q")
    assert F.cilia["P"] == (("x", OUT), ("y", OUT))
    assert F.fusion_log == (("P", "Q"),)
    G = fuse(S, "Q", "P")
    assert G.cilia["Q"] == (("y", OUT), ("x", OUT))


def test_self_fusion_rejected():
    with pytest.raises(SurfaceError):
        fuse(disc(), "P0", "P0")


def test_replay_reproduces_surface(corpus):
    for S in corpus.values():
        assert same_surface(replay(S), S)


def test_corpus_topology(corpus):
    expect = {
        "disc": (0, 1), "annulus": (0, 2), "annulus2": (0, 2), "triangle": (0, 1), "triangle2": (0, 1),
        "square": (0, 1), "star3": (0, 1), "chain5": (0, 1), "genus1": (1, 1), "genus1_2pts": (1, 1),
        "pants": (0, 3),
    }
    assert len(corpus) >= 10
    for name, S in corpus.items():
        t = topology(S)
        assert (t["genus"], t["boundaries"]) == expect[name], name


def test_boundary_sigma_is_a_permutation(corpus):
    for S in corpus.values():
        bs = boundary_structure(S)
        assert sorted(bs.sigma) == sorted(S.vertices)
        assert sorted(bs.sigma.values()) == sorted(S.vertices)
        for v, arc in bs.arcs.items():
            assert (arc.source, arc.target) == (v, bs.sigma[v])


def test_annulus_arc_is_the_loop():
    S = load_surface("annulus")
    bs = boundary_structure(S)
    assert bs.sigma == {"p": "p"}
    assert len(bs.arcs["p"]) == 1


def test_sub_surface_keeps_cilia_order():
    S = load_surface("genus1_2pts")
    T = sub_surface(S, ["a", "c"])
    assert T.cilia["p"] == (("a", OUT), ("a", IN), ("c", OUT))


def _ring(draw, S, rng):
    terms = {}
    for _ in range(draw):
        w = random_word(S, rng, int(rng.integers(0, 3)), start="p")
        terms[w] = terms.get(w, 0) + int(rng.integers(-2, 3))
    return R(terms)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_ring_axioms(seed):
    S = load_surface("genus1")
    rng = np.random.default_rng(seed)
    x, y, z = (_ring(3, S, rng) for _ in range(3))
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x.bar().bar() == x
    assert (x * y).bar() == y.bar() * x.bar()


def test_ring_zero_and_str():
    S = load_surface("annulus")
    e = S.edge_word("e")
    x = R.of(e, 2) - R.of(e, 2)
    assert not x
    assert str(R.of(e) + R.of(Word.identity("p"), -1)) == str(R.of(Word.identity("p"), -1) + R.of(e))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 6))
def test_random_words_are_valid(seed, length):
    S = load_surface("pants")
    w = random_word(S, np.random.default_rng(seed), length)
    S.check_word(w)
