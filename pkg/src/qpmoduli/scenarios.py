"""Built-in quilts from Manin triples and fission, each with a constrained-point sampler."""
from __future__ import annotations

import numpy as np

from .expr import Hol, Inv, Iwasawa, MatExpr, conj4
from .groupoid_core import CiliatedSurface, boundary_structure, from_cilia
from .lie_backend import (
    SubalgebraData,
    abelian,
    complex_borel,
    gl,
    iwasawa_factorize,
    iwasawa_factorize_ba,
    manin_triple_sl2,
    realify,
    sl2r,
    subalgebra_checks,
)
from .quasi_poisson import (
    HolonomyPoint,
    Observable,
    holonomy,
    moment_check,
    moment_equivariance,
    act,
)
from .quilt import (
    ORIENTED,
    CheckResult,
    ConstrainedPoint,
    Domain,
    PairedWall,
    QuiltedSurface,
    Scenario,
    SingletonWall,
    paired_model,
    reduced_bracket,
    validate_quilt,
    vname,
)

IN, OUT = "in", "out"


def _group_element(sub: SubalgebraData, rng: np.random.Generator, scale: float = 0.3) -> np.ndarray:
    P = sub.parent
    g = np.eye(P.n)
    for _ in range(2):
        g = g @ P.expm(P.matrix(sub.basis @ rng.uniform(-scale, scale, sub.dim)))
    return g


# --- surfaces ----------------------------------------------------------------------------


def triangle_surface() -> CiliatedSurface:
    """Triangle skeleton: x from p1 to p0 and y from p1 to p2."""
    return from_cilia(
        {"x": ("p1", "p0"), "y": ("p1", "p2")},
        {"p1": (("x", OUT), ("y", OUT)), "p0": (("x", IN),), "p2": (("y", IN),)},
    )


def square_surface() -> CiliatedSurface:
    """Square with a path skeleton a1, a2, a3 from q0 to q3; sigma cycles q0 q1 q2 q3."""
    return from_cilia(
        {"a1": ("q0", "q1"), "a2": ("q1", "q2"), "a3": ("q2", "q3")},
        {
            "q0": (("a1", OUT),),
            "q1": (("a2", OUT), ("a1", IN)),
            "q2": (("a3", OUT), ("a2", IN)),
            "q3": (("a3", IN),),
        },
    )


def annulus_two_points() -> CiliatedSurface:
    """Annulus with u and v on the outer circle and an unmarked inner circle."""
    return from_cilia(
        {"p": ("u", "v"), "l": ("u", "u")},
        {"u": (("p", OUT), ("l", OUT), ("l", IN)), "v": (("p", IN),)},
    )


def annulus_four_points() -> CiliatedSurface:
    """Annulus with u1, v1 on one circle and u2, v2 on the other."""
    return from_cilia(
        {"p1": ("u1", "v1"), "p2": ("u2", "v2"), "q": ("u1", "u2"), "l": ("u1", "u1")},
        {
            "u1": (("p1", OUT), ("l", OUT), ("q", OUT), ("l", IN)),
            "u2": (("p2", OUT), ("q", IN)),
            "v1": (("p1", IN),),
            "v2": (("p2", IN),),
        },
    )


def fission_g_surface() -> CiliatedSurface:
    """Annulus: vG alone on the outer circle, y1 and y2 on the inner (sewn) circle."""
    return from_cilia(
        {"c0": ("vG", "y1"), "s1": ("y1", "y2"), "s2": ("y2", "y1")},
        {"vG": (("c0", OUT),), "y1": (("s2", IN), ("c0", IN), ("s1", OUT)), "y2": (("s1", IN), ("s2", OUT))},
    )


def fission_h_surface() -> CiliatedSurface:
    """Annulus: x1 and x2 on the outer (sewn) circle, vH alone on the inner circle."""
    return from_cilia(
        {"eh": ("x1", "vH"), "t1": ("x1", "x2"), "t2": ("x2", "x1")},
        {"vH": (("eh", IN),), "x1": (("t1", OUT), ("eh", OUT), ("t2", IN)), "x2": (("t2", OUT), ("t1", IN))},
    )


# --- helpers ------------------------------------------------------------------------------


def _hol(Q: QuiltedSurface, text: str) -> MatExpr:
    return Hol(Q.word(text))


def _complex_entries(M: MatExpr, label: str, idx) -> list[tuple[str, object]]:
    """Real and imaginary parts of entries of a 2x2 complex matrix in 4x4 real form."""
    out = []
    for i, j in idx:
        out.append((f"Re {label}[{i}{j}]", M.entry(i, j)))
        out.append((f"Im {label}[{i}{j}]", M.entry(i + 2, j)))
    return out


def _iw_residual(G: np.ndarray, *factors: np.ndarray) -> float:
    prod = np.eye(G.shape[0])
    for F in factors:
        prod = prod @ F
    return float(np.abs(prod - G).max())


# --- Poisson-Lie group B from the triangle -------------------------------------------------


def poisson_lie_quilt() -> QuiltedSurface:
    g, a, b = manin_triple_sl2()
    T = Domain("T", triangle_surface(), g)
    walls = [SingletonWall("T", "p0", a, "A@p0"), SingletonWall("T", "p1", b, "B@p1"), SingletonWall("T", "p2", a, "A@p2")]
    return QuiltedSurface([T], walls)


def poisson_lie_invariant(Q: QuiltedSurface) -> MatExpr:
    """beta = B(hol_x) B(hol_y)^-1 with hol = A B; a function on M/C = B."""
    return Iwasawa(_hol(Q, "T.x"), "B", "AB") @ Inv(Iwasawa(_hol(Q, "T.y"), "B", "AB"))


def _poisson_lie_sampler(Q: QuiltedSurface):
    g, a, b = manin_triple_sl2()
    beta = poisson_lie_invariant(Q)

    def sample(rng, b0: np.ndarray | None = None) -> ConstrainedPoint:
        if b0 is None:
            b0 = _group_element(b, rng)
        a0, a2, r = _group_element(a, rng), _group_element(a, rng), _group_element(b, rng)
        hol = {"T.x": a0 @ b0 @ r, "T.y": a2 @ r}
        x = HolonomyPoint(Q.surface, Q.models, hol)
        res = float(np.abs(beta.eval(x)[0] - b0).max())
        return ConstrainedPoint(x, {"b0": b0}, res)

    return sample


def poisson_lie_tensor(Q: QuiltedSurface, x: HolonomyPoint) -> tuple[np.ndarray, np.ndarray, float]:
    """Left-trivialised bivector on B at beta(x), in the orthonormal b-basis.

    Returns (beta, pi_L, tangency residual).
    """
    g, a, b = manin_triple_sl2()
    beta = poisson_lie_invariant(Q)
    fs = [beta.entry(i, j) for i in range(4) for j in range(4)]
    val = beta.eval(x)[0]
    Bmat = np.array([[reduced_bracket(f, h, Q, x, check=False) for h in fs] for f in fs])
    J = np.array([(val @ g.matrix(b.basis[:, c])).reshape(-1) for c in range(b.dim)]).T
    Jp = np.linalg.pinv(J)
    piL = Jp @ Bmat @ Jp.T
    tangency = float(np.abs(J @ piL @ J.T - Bmat).max())
    return val, piL, tangency


def _ad_on_b(g, b, h: np.ndarray) -> np.ndarray:
    hi = np.linalg.inv(h)
    cols = [b.basis.T @ g.coords(hi @ g.matrix(b.basis[:, c]) @ h) for c in range(b.dim)]
    return np.array(cols).T


def scenario_poisson_lie_checks(samples: int = 50, seed: int = 0) -> list[CheckResult]:
    """pi(1) = 0, multiplicativity pi_L(bb') = Ad_{b'^-1} pi_L(b) + pi_L(b'), tangency to B."""
    Q = poisson_lie_quilt()
    g, a, b = manin_triple_sl2()
    sample = _poisson_lie_sampler(Q)
    rng = np.random.default_rng(seed + 101)
    _, pi1, tan1 = poisson_lie_tensor(Q, sample(rng, b0=np.eye(4)).point)
    worst_mult, worst_tan = 0.0, tan1
    for _ in range(samples):
        b1, b2 = _group_element(b, rng), _group_element(b, rng)
        _, p1, t1 = poisson_lie_tensor(Q, sample(rng, b0=b1).point)
        _, p2, t2 = poisson_lie_tensor(Q, sample(rng, b0=b2).point)
        _, p12, t12 = poisson_lie_tensor(Q, sample(rng, b0=b1 @ b2).point)
        M = _ad_on_b(g, b, b2)
        expect = M @ p1 @ M.T + p2
        scale = max(1.0, float(np.abs(p12).max()))
        worst_mult = max(worst_mult, float(np.abs(p12 - expect).max()) / scale)
        worst_tan = max(worst_tan, t1, t2, t12)
    return [
        CheckResult("pi(1) = 0 on B", float(np.abs(pi1).max()), 1e-10, "Poisson-Lie structure on B"),
        CheckResult("multiplicativity on B", worst_mult, 1e-8, "Poisson-Lie structure on B"),
        CheckResult("bracket tangent to B", worst_tan, 1e-8, "brackets of B-coordinates close"),
    ]


def poisson_lie_scenario() -> Scenario:
    Q = poisson_lie_quilt()
    beta = poisson_lie_invariant(Q)
    inv = [("beta[00]", beta.entry(0, 0))] + _complex_entries(beta, "beta", [(0, 1)])
    return Scenario(
        "poisson-lie",
        Q,
        inv,
        _poisson_lie_sampler(Q),
        "triangle with walls A, B, A; M/C is the group B",
        extra_checks=lambda sc, n, seed: scenario_poisson_lie_checks(n, seed),
    )


def poisson_lie_dual_quilt() -> QuiltedSurface:
    """Triangle with walls B, B, A and the arc between the two B walls left free.

    Its residual gauge group is B x B acting at the two free endpoints.
    """
    g, a, b = manin_triple_sl2()
    S = triangle_surface()
    T = Domain("T", S, g)
    walls = [SingletonWall("T", "p0", b, "B@p0"), SingletonWall("T", "p1", a, "A@p1"), SingletonWall("T", "p2", b, "B@p2")]
    sigma = boundary_structure(S).sigma
    free = next(v for v in ("p0", "p2") if sigma[v] in ("p0", "p2"))
    contracted = [("T", v) for v in S.vertices if v != free]
    return QuiltedSurface([T], walls, contracted=contracted)


# --- Heisenberg double from the square ------------------------------------------------------


def heisenberg_quilt() -> QuiltedSurface:
    g, a, b = manin_triple_sl2()
    S = Domain("S", square_surface(), g)
    walls = [
        SingletonWall("S", "q0", a, "A@q0"),
        SingletonWall("S", "q1", b, "B@q1"),
        SingletonWall("S", "q2", a, "A@q2"),
        SingletonWall("S", "q3", b, "B@q3"),
    ]
    return QuiltedSurface([S], walls, contracted=[("S", v) for v in ("q0", "q1", "q2", "q3")])


def heisenberg_invariant(Q: QuiltedSurface) -> MatExpr:
    """g = A(a3) a2 B(a1), factors taken in the order hol = B A."""
    return Iwasawa(_hol(Q, "S.a3"), "A", "BA") @ _hol(Q, "S.a2") @ Iwasawa(_hol(Q, "S.a1"), "B", "BA")


def heisenberg_scenario() -> Scenario:
    Q = heisenberg_quilt()
    g, a, b = manin_triple_sl2()
    F = heisenberg_invariant(Q)

    def sample(rng, a1=None, b1=None) -> ConstrainedPoint:
        if a1 is None:
            a1, b1 = _group_element(a, rng), _group_element(b, rng)
        G = a1 @ b1
        b2, a2 = iwasawa_factorize_ba(G)
        ga0, gb1, ga2, gb3 = (_group_element(s, rng) for s in (a, b, a, b))
        hol = {"S.a1": gb1 @ np.linalg.inv(ga0), "S.a2": ga2 @ G @ np.linalg.inv(gb1), "S.a3": gb3 @ np.linalg.inv(ga2)}
        x = HolonomyPoint(Q.surface, Q.models, hol)
        res = max(_iw_residual(G, b2, a2), float(np.abs(F.eval(x)[0] - G).max()))
        return ConstrainedPoint(x, {"a1": a1, "b1": b1}, res)

    inv = _complex_entries(F, "g", [(0, 0), (0, 1), (1, 0)])
    return Scenario("heisenberg-double", Q, inv, sample, "square with walls A, B, A, B; M/C is G",
                    expected_residual_dim=0)


# --- Drinfeld double from an annulus ----------------------------------------------------------


def drinfeld_quilt() -> QuiltedSurface:
    g, a, b = manin_triple_sl2()
    D = Domain("D", annulus_two_points(), g)
    walls = [SingletonWall("D", "u", a, "A@u"), SingletonWall("D", "v", b, "B@v")]
    return QuiltedSurface([D], walls, contracted=[("D", "u"), ("D", "v")])


def drinfeld_scenario() -> Scenario:
    Q = drinfeld_quilt()
    g, a, b = manin_triple_sl2()
    A = Iwasawa(_hol(Q, "D.p"), "A", "BA")
    F = A @ _hol(Q, "D.l") @ Inv(A)

    def sample(rng, G=None) -> ConstrainedPoint:
        if G is None:
            G = _group_element(a, rng) @ _group_element(b, rng)
        au, bv = _group_element(a, rng), _group_element(b, rng)
        hol = {"D.p": bv @ np.linalg.inv(au), "D.l": au @ G @ np.linalg.inv(au)}
        x = HolonomyPoint(Q.surface, Q.models, hol)
        return ConstrainedPoint(x, {"G": G}, float(np.abs(F.eval(x)[0] - G).max()))

    inv = _complex_entries(F, "g", [(0, 0), (0, 1), (1, 0)])
    return Scenario("drinfeld-double", Q, inv, sample, "annulus with walls A, B; M/C is G",
                    expected_residual_dim=0)


# --- symplectic double groupoid ------------------------------------------------------------------


def double_groupoid_quilt() -> QuiltedSurface:
    g, a, b = manin_triple_sl2()
    D = Domain("D", annulus_four_points(), g)
    walls = [
        SingletonWall("D", "u1", a, "A@u1"),
        SingletonWall("D", "v1", b, "B@v1"),
        SingletonWall("D", "u2", a, "A@u2"),
        SingletonWall("D", "v2", b, "B@v2"),
    ]
    return QuiltedSurface([D], walls, contracted=[("D", v) for v in ("u1", "v1", "u2", "v2")])


def double_groupoid_scenario() -> Scenario:
    Q = double_groupoid_quilt()
    g, a, b = manin_triple_sl2()
    A1 = Iwasawa(_hol(Q, "D.p1"), "A", "BA")
    A2 = Iwasawa(_hol(Q, "D.p2"), "A", "BA")
    G1 = A1 @ _hol(Q, "D.l") @ Inv(A1)
    G2 = A2 @ _hol(Q, "D.q") @ Inv(A1)

    def sample(rng, P=None, R=None) -> ConstrainedPoint:
        if P is None:
            P = _group_element(a, rng) @ _group_element(b, rng)
            R = _group_element(b, rng) @ _group_element(a, rng)
        au1, au2 = _group_element(a, rng), _group_element(a, rng)
        bv1, bv2 = _group_element(b, rng), _group_element(b, rng)
        inv = np.linalg.inv
        hol = {
            "D.p1": bv1 @ inv(au1),
            "D.p2": bv2 @ inv(au2),
            "D.l": au1 @ P @ inv(au1),
            "D.q": au2 @ R @ inv(au1),
        }
        x = HolonomyPoint(Q.surface, Q.models, hol)
        res = max(float(np.abs(G1.eval(x)[0] - P).max()), float(np.abs(G2.eval(x)[0] - R).max()))
        return ConstrainedPoint(x, {"P": P, "R": R}, res)

    inv = _complex_entries(G1, "g1", [(0, 1), (1, 0)]) + _complex_entries(G2, "g2", [(0, 0), (1, 1)])
    return Scenario("double-groupoid", Q, inv, sample, "annulus with walls A, B on each circle",
                    expected_residual_dim=0)


# --- Lu-Yakimov homogeneous spaces ------------------------------------------------------------------


def lu_yakimov_quilt(variant: str = "sl2r") -> QuiltedSurface:
    g, a, b = manin_triple_sl2()
    c = sl2r(g) if variant == "sl2r" else complex_borel(g)
    T = Domain("T", triangle_surface(), g)
    walls = [SingletonWall("T", "p0", a, "A@p0"), SingletonWall("T", "p1", b, "B@p1"), SingletonWall("T", "p2", c, "C@p2")]
    return QuiltedSurface([T], walls)


def lu_yakimov_scenario(variant: str = "sl2r") -> Scenario:
    """g = hol_y B(hol_x)^-1 is moved by C from the left; invariants are functions on C\\G."""
    Q = lu_yakimov_quilt(variant)
    g, a, b = manin_triple_sl2()
    c = Q.singleton_walls[2].sub
    Gx = _hol(Q, "T.y") @ Inv(Iwasawa(_hol(Q, "T.x"), "B", "AB"))
    if variant == "sl2r":
        D = conj4()
        M = Inv(Gx) @ D @ Gx @ D  # g^-1 conj(g) is invariant under real left factors
        inv = _complex_entries(M, "m", [(0, 0), (0, 1), (1, 0)])

        def key(G):
            Di = np.diag([1.0, 1.0, -1.0, -1.0])
            return np.linalg.inv(G) @ Di @ G @ Di
    else:
        re_a, im_a = Gx.entry(1, 0), Gx.entry(3, 0)
        re_b, im_b = Gx.entry(1, 1), Gx.entry(3, 1)
        den = re_b * re_b + im_b * im_b
        inv = [("Re z", (re_a * re_b + im_a * im_b) / den), ("Im z", (im_a * re_b - re_a * im_b) / den)]

        def key(G):
            z = complex(G[1, 0], G[3, 0]) / complex(G[1, 1], G[3, 1])
            return np.array([z.real, z.imag])

    def sample(rng, G=None) -> ConstrainedPoint:
        if G is None:
            G = _group_element(a, rng) @ _group_element(b, rng)
        a0, r, cc = _group_element(a, rng), _group_element(b, rng), _group_element(c, rng)
        hol = {"T.x": a0 @ r, "T.y": cc @ G @ r}
        x = HolonomyPoint(Q.surface, Q.models, hol)
        res = float(np.abs(key(Gx.eval(x)[0]) - key(G)).max())
        return ConstrainedPoint(x, {"G": G}, res)

    name = "lu-yakimov" if variant == "sl2r" else "lu-yakimov-borel"
    return Scenario(name, Q, inv, sample, f"triangle with walls A, B, C ({variant}); M/C is C\\G")


# --- fission -----------------------------------------------------------------------------------------


def fission_subalgebras(orientation: str = ORIENTED):
    """C_+ and C_- inside h + g (h = diagonal of gl(2)), as {(eta, eta + u)}."""
    H, G = abelian(2), gl(2)
    P = paired_model(H, G, orientation)
    # gl(2) coordinates: E11, E12, E21, E22
    def vec(h, gpart):
        return np.concatenate([h, gpart])

    diag = [vec([1, 0], [1, 0, 0, 0]), vec([0, 1], [0, 0, 0, 1])]
    plus = subalgebra_checks(P, diag + [vec([0, 0], [0, 1, 0, 0])])
    minus = subalgebra_checks(P, diag + [vec([0, 0], [0, 0, 1, 0])])
    return H, G, plus, minus


def fission_quilt(orientation: str = ORIENTED) -> QuiltedSurface:
    H, G, plus, minus = fission_subalgebras(orientation)
    doms = [Domain("G", fission_g_surface(), G), Domain("H", fission_h_surface(), H)]
    walls = [
        PairedWall(("H", "x1"), ("G", "y1"), orientation, plus, "C+"),
        PairedWall(("H", "x2"), ("G", "y2"), orientation, minus, "C-"),
    ]
    contracted = [("G", "y1"), ("G", "y2"), ("H", "x1"), ("H", "x2")]
    return QuiltedSurface(doms, [], walls, contracted)


def fission_invariants(Q: QuiltedSurface) -> list[tuple[str, Observable]]:
    w = Q.word
    loopG = w("G.c0^-1 G.s2 G.s1 G.c0")
    loopH = w("H.eh H.t2 H.t1 H.eh^-1")
    inv: list[tuple[str, Observable]] = [
        ("tr loopG", Observable.trace(loopG, 2)),
        ("loopG[01]", Observable.entry(loopG, 0, 1)),
        ("loopG[10]", Observable.entry(loopG, 1, 0)),
        ("loopH[00]", Observable.entry(loopH, 0, 0)),
    ]
    # rows of eta^-1 C fixed by the unipotent part of the wall group
    e1, c1 = w("H.eh"), w("G.c0")
    e2, c2 = w("H.eh H.t1^-1"), w("G.s1 G.c0")
    for j in range(2):
        inv.append((f"(eta1^-1 C0)[1{j}]", Observable.entry(e1, 1, 1) * Observable.entry(c1, 1, j)))
        inv.append((f"(eta2^-1 C1)[0{j}]", Observable.entry(e2, 0, 0) * Observable.entry(c2, 0, j)))
    return inv


def _fission_pair(sub: SubalgebraData, rng, n1: int) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
    """(start, end) of a wall in the residual group: end = u start with u in C^perp."""
    P = sub.parent
    start = _group_element(sub, rng)
    perp = sub.perp_basis
    u = P.expm(P.matrix(perp @ rng.uniform(-0.3, 0.3, perp.shape[1])))
    end = u @ start
    split = lambda M: (M[:n1, :n1], M[n1:, n1:])
    return split(start), split(end)


def fission_sampler(Q: QuiltedSurface):
    """Points whose seam arcs equal g_{sigma(v)-bar} g_v^-1 for residual-group elements g,
    i.e. the leaf through h = 1. Reusing params gives a C-gauge-equivalent point."""
    from .quilt import random_wall_gauge

    H, G, plus, minus = fission_subalgebras(Q.paired_walls[0].orientation)
    inv = np.linalg.inv

    def sample(rng, elements=None) -> ConstrainedPoint:
        fresh = elements is None
        if fresh:
            elements = (G.random_group(rng), H.random_group(rng), _fission_pair(plus, rng, 2), _fission_pair(minus, rng, 2))
        C0, E, ((bx1, by1), (cx1, cy1)), ((bx2, by2), (cx2, cy2)) = elements
        hol = {
            "G.c0": C0,
            "G.s1": cy2 @ inv(by1),
            "G.s2": cy1 @ inv(by2),
            "H.eh": E,
            "H.t1": bx2 @ inv(cx1),
            "H.t2": bx1 @ inv(cx2),
        }
        x = HolonomyPoint(Q.surface, Q.models, hol)
        if not fresh:
            x = act(x, random_wall_gauge(Q, rng))
        # wall elements have equal determinants on both sides, which ties the seam arcs together
        det = lambda e: float(np.linalg.det(holonomy(x, Q.word(e))))
        res = max(abs(det("G.s1") * det("H.t2") - 1), abs(det("G.s2") * det("H.t1") - 1))
        return ConstrainedPoint(x, {"elements": elements}, float(res))

    return sample


def fission_coordinates(Q: QuiltedSurface, x: HolonomyPoint):
    """(S_1, S_2, C_0, h) built from the wall-crossing matrices P_i = eta_i^-1 C_i."""
    hw = lambda t: holonomy(x, Q.word(t))
    P1 = hw("H.eh") @ hw("G.c0")
    P2 = hw("H.eh H.t1^-1") @ hw("G.s1 G.c0")
    P3 = hw("H.eh H.t1^-1 H.t2^-1") @ hw("G.s2 G.s1 G.c0")
    h = hw("H.eh H.t2 H.t1 H.eh^-1")
    inv = np.linalg.inv
    return P2 @ inv(P1), P3 @ inv(P2), P1, h


def scenario_fission_check(samples: int = 20, seed: int = 0) -> list[CheckResult]:
    """Coisotropy of C_+-, the quasi-Poisson identity for the residual G x H structure,
    the moment formula (C0^-1 h S2 S1 C0, h^-1) and its equivariance."""
    from .quasi_poisson import jacobiator, rho_phi_term, bivector_derivatives  # noqa: F401
    from .quilt import invariance_residual, residual_phi_term, reduced_jacobiator

    Q = fission_quilt()
    rep = validate_quilt(Q)
    H, G, plus, minus = fission_subalgebras()
    exact = 0.0
    for sub in (plus, minus):
        # ann(c) computed exactly: s^# ann(c) must lie in c
        if not sub.is_coisotropic:
            exact = 1.0
    out = [CheckResult("C+ and C- coisotropic (s_H - s_G)", exact, 0.5, "fission walls")]
    rng = np.random.default_rng(seed + 7)
    sample = fission_sampler(Q)
    inv = [f for _, f in fission_invariants(Q)]
    pts = [sample(rng) for _ in range(samples)]
    out.append(CheckResult("seam determinants det(s1)det(t2) = det(s2)det(t1) = 1", max(p.constraint_residual for p in pts), 1e-10,
                           "sewing constraint"))
    out.append(CheckResult("observables invariant under C", max(invariance_residual(f, Q, p.point) for p in pts for f in inv),
                           1e-9, "invariant observables"))
    jq = 0.0
    triples = [(0, 4, 5), (1, 2, 6), (3, 4, 7), (0, 6, 7), (1, 5, 7), (2, 3, 4)]
    for p in pts:
        x = p.point
        for i, j, k in triples:
            J = jacobiator(inv[i], inv[j], inv[k], x, Q.table)
            J2 = reduced_jacobiator(inv[i], inv[j], inv[k], x)
            phi = residual_phi_term(inv[i], inv[j], inv[k], Q, x)
            jq = max(jq, abs(J - phi), abs(J2 - phi))
    out.append(CheckResult("Jacobiator = rho(phi) of G x H", jq, 1e-8, "partial reduction"))
    mom, form, eqv = 0.0, 0.0, 0.0
    for p in pts:
        x = p.point
        for f in inv:
            mom = max(mom, moment_check(x, f, vertices=Q.residual_vertices))
        S1, S2, C0, h = fission_coordinates(Q, x)
        muG = holonomy(x, boundary_structure(Q.surface).arcs["G.vG"])
        muH = holonomy(x, boundary_structure(Q.surface).arcs["H.vH"])
        inv_ = np.linalg.inv
        pred = inv_(C0) @ h @ S2 @ S1 @ C0
        form = max(form, float(np.abs(muG - pred).max()), float(np.abs(muH - inv_(h)).max()))
        gauge = {"G.vG": G.random_group(rng), "H.vH": H.random_group(rng)}
        eqv = max(eqv, moment_equivariance(x, gauge, vertices=Q.residual_vertices))
    out.append(CheckResult("moment identity at vG, vH", mom, 1e-8, "group-valued moment map"))
    out.append(CheckResult("moment = (C0^-1 h S2 S1 C0, h^-1)", form, 1e-10, "fission moment map"))
    out.append(CheckResult("moment equivariance under G x H", eqv, 1e-9, "twisted equivariance"))
    return out


def fission_scenario() -> Scenario:
    Q = fission_quilt()
    return Scenario(
        "fission",
        Q,
        fission_invariants(Q),
        fission_sampler(Q),
        "gl(2) annulus sewn to an H annulus along C+ and C-; quasi-Poisson G x H",
        extra_checks=lambda sc, n, seed: scenario_fission_check(min(n, 20), seed),
        expected_residual_dim=4,
    )


SCENARIOS = {
    "poisson-lie": poisson_lie_scenario,
    "heisenberg-double": heisenberg_scenario,
    "drinfeld-double": drinfeld_scenario,
    "double-groupoid": double_groupoid_scenario,
    "lu-yakimov": lu_yakimov_scenario,
    "fission": fission_scenario,
}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]()
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}") from None
