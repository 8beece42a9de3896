"""Points of the moduli space, polynomial observables, and the quasi-Poisson bivector.

Tangent and cotangent vectors are stored in left-trivialised coordinates: one block
of size d per edge, in the order of ``surface.edge_names``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .groupoid_core import (
    CiliatedSurface,
    Word,
    boundary_structure,
    compose,
    fusion_stages,
    initial_discs,
)
from .intersection import PairingTable, build_table, pairing
from .lie_backend import LieModel

Factor = tuple[Word, int, int]
Monomial = tuple[Factor, ...]


# --- points -------------------------------------------------------------------


@dataclass(eq=False)
class HolonomyPoint:
    surface: CiliatedSurface
    models: dict[str, LieModel]
    hol: dict[str, np.ndarray]
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if isinstance(self.models, LieModel):
            self.models = {e: self.models for e in self.surface.edges}
        missing = set(self.surface.edges) - set(self.hol)
        if missing:
            raise KeyError(f"no holonomy for edges {sorted(missing)}")
        self.offsets: dict[str, int] = {}
        off = 0
        for e in self.surface.edge_names:
            self.offsets[e] = off
            off += self.models[e].d
        self.dim = off

    def block(self, e: str) -> slice:
        return slice(self.offsets[e], self.offsets[e] + self.models[e].d)

    def inv(self, e: str) -> np.ndarray:
        key = ("inv", e)
        if key not in self._cache:
            self._cache[key] = np.linalg.inv(self.hol[e])
        return self._cache[key]

    def model_at(self, v: str) -> LieModel:
        return self.models[self.surface.cilia[v][0][0]]

    def model_of_word(self, w: Word) -> LieModel | None:
        return self.models[w.letters[0][0]] if w.letters else None

    def letter_matrix(self, letter: tuple[str, int]) -> np.ndarray:
        e, s = letter
        return self.hol[e] if s == 1 else self.inv(e)

    def group_residual(self) -> float:
        worst = 0.0
        for e, g in self.hol.items():
            worst = max(worst, self.models[e].group_residual(g))
            if abs(np.linalg.det(g)) < 1e-12:
                return np.inf
        return worst


def random_point(
    S: CiliatedSurface,
    model: LieModel | Mapping[str, LieModel],
    rng: np.random.Generator,
    scale: float = 0.3,
    factors: int = 2,
) -> HolonomyPoint:
    models = {e: model for e in S.edges} if isinstance(model, LieModel) else dict(model)
    hol = {e: models[e].random_group(rng, scale, factors) for e in S.edge_names}
    return HolonomyPoint(S, models, hol)


def holonomy(x: HolonomyPoint, a: Word) -> np.ndarray:
    key = ("hol", a)
    hit = x._cache.get(key)
    if hit is not None:
        return hit
    if a.is_identity():
        m = x.model_at(a.source)
        val = np.eye(m.n)
    else:
        val = x.letter_matrix(a.letters[0])
        for letter in a.letters[1:]:
            val = val @ x.letter_matrix(letter)
    x._cache[key] = val
    return val


def word_jacobian(x: HolonomyPoint, a: Word) -> np.ndarray:
    """Derivative of hol_a along every frame direction, shape (dim, n, n)."""
    key = ("jac", a)
    hit = x._cache.get(key)
    if hit is not None:
        return hit
    model = x.model_of_word(a) or x.model_at(a.source)
    n = model.n
    jac = np.zeros((x.dim, n, n))
    mats = [x.letter_matrix(l) for l in a.letters]
    m = len(mats)
    prefix = [np.eye(n)]
    for M in mats:
        prefix.append(prefix[-1] @ M)
    suffix = [np.eye(n)] * (m + 1)
    for k in range(m - 1, -1, -1):
        suffix[k] = mats[k] @ suffix[k + 1]
    for k, (e, s) in enumerate(a.letters):
        B = x.models[e].basis
        if s == 1:
            # L_1..L_k xi L_{k+1}..L_m
            contrib = np.einsum("ip,cpq,qj->cij", prefix[k + 1], B, suffix[k + 1])
        else:
            contrib = -np.einsum("ip,cpq,qj->cij", prefix[k], B, suffix[k])
        jac[x.block(e)] += contrib
    x._cache[key] = jac
    return jac


def act(x: HolonomyPoint, g: Mapping[str, np.ndarray]) -> HolonomyPoint:
    """Gauge action: hol_e -> g_in hol_e g_out^-1 (missing vertices act trivially)."""
    S = x.surface
    hol = {}
    for e, (o, i) in S.edges.items():
        left = g.get(i)
        right = g.get(o)
        h = x.hol[e]
        if left is not None:
            h = left @ h
        if right is not None:
            h = h @ np.linalg.inv(right)
        hol[e] = h
    return HolonomyPoint(S, x.models, hol)


# --- observables ----------------------------------------------------------------


def _canon(mono: Iterable[Factor]) -> Monomial | None:
    kept = []
    for w, i, j in mono:
        if w.is_identity():
            if i != j:
                return None
            continue
        kept.append((w, i, j))
    return tuple(sorted(kept))


class Observable:
    """Polynomial in entries of holonomies: sum of coeff * prod (hol_w)_{ij}."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, float] | None = None):
        acc: dict[Monomial, float] = {}
        for mono, c in (terms or {}).items():
            cm = _canon(mono)
            if cm is None or c == 0:
                continue
            acc[cm] = acc.get(cm, 0.0) + c
        self.terms = {m: c for m, c in acc.items() if c != 0.0}

    @staticmethod
    def entry(w: Word, i: int, j: int) -> "Observable":
        return Observable({((w, i, j),): 1.0})

    @staticmethod
    def trace(w: Word, n: int) -> "Observable":
        return Observable({((w, i, i),): 1.0 for i in range(n)})

    @staticmethod
    def constant(c: float) -> "Observable":
        return Observable({(): float(c)})

    def __add__(self, other: "Observable | float") -> "Observable":
        if not isinstance(other, Observable):
            other = Observable.constant(other)
        t = dict(self.terms)
        for m, c in other.terms.items():
            t[m] = t.get(m, 0.0) + c
        return Observable(t)

    __radd__ = __add__

    def __neg__(self) -> "Observable":
        return Observable({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Observable | float") -> "Observable":
        return self + (-other if isinstance(other, Observable) else -float(other))

    def __mul__(self, other: "Observable | float") -> "Observable":
        if not isinstance(other, Observable):
            return Observable({m: c * float(other) for m, c in self.terms.items()})
        t: dict[Monomial, float] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                key = _canon(m1 + m2)
                if key is not None:
                    t[key] = t.get(key, 0.0) + c1 * c2
        return Observable(t)

    __rmul__ = __mul__

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    def words(self) -> set[Word]:
        return {w for m in self.terms for w, _, _ in m}

    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def evaluate(self, x: HolonomyPoint) -> float:
        total = 0.0
        for mono, c in self.terms.items():
            val = c
            for w, i, j in mono:
                val *= holonomy(x, w)[i, j]
            total += val
        return float(total)

    def substitute(self, S_new: CiliatedSurface, mapping: Mapping[str, Word]) -> "Observable":
        """Rewrite every word by replacing edges with words of another surface."""
        def sub(w: Word) -> Word:
            out: Word | None = None
            for e, s in reversed(w.letters):
                piece = mapping[e] if s == 1 else mapping[e].inverse()
                out = piece if out is None else compose(piece, out)
            if out is None:
                raise ValueError("cannot substitute into an identity word")
            return out

        return Observable({tuple((sub(w), i, j) for w, i, j in m): c for m, c in self.terms.items()})

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Observable) and self.terms == other.terms

    def close_to(self, other: "Observable", tol: float = 1e-12) -> bool:
        diff = self - other
        return diff.is_zero(tol)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono in sorted(self.terms):
            c = self.terms[mono]
            body = "*".join(f"[{w}]_{i}{j}" for w, i, j in mono) or "1"
            parts.append(f"{c:+.12g}*{body}")
        return " ".join(parts)

    __repr__ = __str__


def random_observable(S: CiliatedSurface, n: int, rng: np.random.Generator, terms: int = 2, degree: int = 2,
                      max_length: int = 3) -> Observable:
    """Sum of random monomials in entries of random nonempty words."""
    from .groupoid_core import random_word

    out: dict = {}
    for _ in range(terms):
        mono = []
        for _ in range(int(rng.integers(1, degree + 1))):
            w = random_word(S, rng, int(rng.integers(1, max_length + 1)))
            while w.is_identity():
                w = random_word(S, rng, int(rng.integers(1, max_length + 1)))
            mono.append((w, int(rng.integers(n)), int(rng.integers(n))))
        key = tuple(mono)
        out[key] = out.get(key, 0.0) + float(rng.choice([-2, -1, 1, 2]))
    return Observable(out)


def differential(f, x: HolonomyPoint) -> np.ndarray:
    """Exact left-trivialised differential (product rule over factors)."""
    if not isinstance(f, Observable):
        return f.grad(x)
    grad = np.zeros(x.dim)
    for mono, c in f.terms.items():
        vals = [holonomy(x, w)[i, j] for w, i, j in mono]
        for k, (w, i, j) in enumerate(mono):
            others = c
            for l, v in enumerate(vals):
                if l != k:
                    others *= v
            if others != 0.0:
                grad += others * word_jacobian(x, w)[:, i, j]
    return grad


def value(f, x: HolonomyPoint) -> float:
    return f.evaluate(x) if isinstance(f, Observable) else f.value(x)


# --- the action and the Fock-Rosly bivector ----------------------------------------


def half_edge_matrix(x: HolonomyPoint, h: tuple[str, str]) -> np.ndarray:
    """U_h: columns are e_i(h) in frame coordinates (Ad_{g^-1} e_i for incoming,
    -e_i for outgoing half-edges)."""
    e, end = h
    m = x.models[e]
    U = np.zeros((x.dim, m.d))
    if end == "in":
        U[x.block(e)] = m.Ad(x.inv(e), x.hol[e])
    else:
        U[x.block(e)] = -np.eye(m.d)
    return U


def rho_matrix(x: HolonomyPoint, v: str, surface: CiliatedSurface | None = None) -> np.ndarray:
    """Columns: rho(e_i) at vertex v, i.e. -sum_h e_i(h) over half-edges at v."""
    S = surface or x.surface
    m = x.model_at(v) if surface is None else x.models[S.cilia[v][0][0]]
    R = np.zeros((x.dim, m.d))
    for h in S.cilia[v]:
        R -= half_edge_matrix(x, h)
    return R


def rho(xi: Mapping[str, np.ndarray], x: HolonomyPoint) -> np.ndarray:
    """Tangent vector of the infinitesimal gauge action, xi given as coordinates per vertex."""
    out = np.zeros(x.dim)
    for v, c in xi.items():
        out += rho_matrix(x, v) @ np.asarray(c)
    return out


def rho_star(df: np.ndarray, x: HolonomyPoint) -> dict[str, np.ndarray]:
    return {v: rho_matrix(x, v).T @ df for v in x.surface.vertices}


def _wedge(A: np.ndarray, S: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Matrix of sum s^{ij} a_i ^ b_j."""
    return A @ S @ B.T - B @ S @ A.T


def fr_bivector(x: HolonomyPoint) -> np.ndarray:
    """The bivector as an antisymmetric matrix: pi(alpha, beta) = alpha^T Pi beta."""
    hit = x._cache.get("Pi")
    if hit is not None:
        return hit
    Pi = np.zeros((x.dim, x.dim))
    for v in x.surface.vertices:
        s = x.model_at(v).s
        Us = [half_edge_matrix(x, h) for h in x.surface.cilia[v]]
        for a in range(len(Us)):
            for b in range(a + 1, len(Us)):
                Pi -= 0.5 * _wedge(Us[a], s, Us[b])
    x._cache["Pi"] = Pi
    return Pi


def bracket_FR(f, g, x: HolonomyPoint, S: CiliatedSurface | None = None) -> float:
    if S is not None and S is not x.surface and dict(S.edges) != dict(x.surface.edges):
        raise ValueError("point does not live on the given surface")
    return float(differential(f, x) @ fr_bivector(x) @ differential(g, x))


def _slots(f: Observable, x: HolonomyPoint):
    """Leibniz expansion: (word, i, j, weight) with weight = coeff * other factors."""
    out = []
    for mono, c in f.terms.items():
        vals = [holonomy(x, w)[i, j] for w, i, j in mono]
        for k, (w, i, j) in enumerate(mono):
            weight = c
            for l, v in enumerate(vals):
                if l != k:
                    weight *= v
            out.append((w, i, j, weight))
    return out


def _word_covector(x: HolonomyPoint, w: Word, i: int, j: int) -> np.ndarray:
    """xi -> (hol_w xi)_{ij} in dual-basis coordinates."""
    m = x.model_of_word(w)
    H = holonomy(x, w)
    return np.einsum("p,cp->c", H[i, :], m.basis[:, :, j])


def bracket_pairing(f: Observable, g: Observable, x: HolonomyPoint, T: PairingTable) -> float:
    """Bracket through pi(hol_a^* theta, hol_b^* theta) = 1/2 (Ad_{hol_(a,b)} x 1) s."""
    total = 0.0
    for a, i, j, wa in _slots(f, x):
        for b, k, l, wb in _slots(g, x):
            if wa == 0.0 or wb == 0.0:
                continue
            P = pairing(T, a, b)
            if not P:
                continue
            m = x.model_of_word(a)
            alpha = _word_covector(x, a, i, j)
            beta = _word_covector(x, b, k, l)
            acc = np.zeros((m.d, m.d))
            for t, n in P.terms.items():
                acc += n * m.Ad(holonomy(x, t))
            total += 0.5 * wa * wb * float(alpha @ acc @ m.s @ beta)
    return total


# --- quasi-Poisson identity ----------------------------------------------------------


def rho_phi_term(f1, f2, f3, x: HolonomyPoint) -> float:
    dfs = [differential(f, x) for f in (f1, f2, f3)]
    total = 0.0
    for v in x.surface.vertices:
        R = rho_matrix(x, v)
        a, b, c = (R.T @ df for df in dfs)
        total += float(np.einsum("abc,a,b,c->", x.model_at(v).phi, a, b, c))
    return total


def jacobiator(f1: Observable, f2: Observable, f3: Observable, x: HolonomyPoint, T: PairingTable | None = None) -> float:
    """Cyclic sum of {f_a, {f_b, f_c}}, inner brackets taken symbolically."""
    from .spin_network import bracket_symbolic

    T = T or build_table(x.surface)
    models = x.models
    total = 0.0
    for a, b, c in ((f1, f2, f3), (f2, f3, f1), (f3, f1, f2)):
        inner = bracket_symbolic(b, c, T, models).observable
        total += bracket_pairing(a, inner, x, T)
    return total


def _frame_bracket(x: HolonomyPoint, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    out = np.zeros(x.dim)
    for e in x.surface.edge_names:
        sl = x.block(e)
        out[sl] = x.models[e].bracket(p[sl], q[sl])
    return out


def bivector_derivatives(x: HolonomyPoint) -> np.ndarray:
    """dPi[k] = derivative of the bivector matrix along frame direction k (exact)."""
    hit = x._cache.get("dPi")
    if hit is not None:
        return hit
    D = x.dim
    dPi = np.zeros((D, D, D))
    for v in x.surface.vertices:
        s = x.model_at(v).s
        hs = x.surface.cilia[v]
        Us = [half_edge_matrix(x, h) for h in hs]
        for a in range(len(hs)):
            for b in range(a + 1, len(hs)):
                for idx, h in ((a, hs[a]), (b, hs[b])):
                    e, end = h
                    if end != "in":
                        continue
                    m = x.models[e]
                    sl = x.block(e)
                    Adg = m.Ad(x.inv(e), x.hol[e])
                    for k in range(m.d):
                        dU = np.zeros((D, m.d))
                        dU[sl] = -m.ad(np.eye(m.d)[k]) @ Adg
                        if idx == a:
                            dPi[sl.start + k] -= 0.5 * _wedge(dU, s, Us[b])
                        else:
                            dPi[sl.start + k] -= 0.5 * _wedge(Us[a], s, dU)
    x._cache["dPi"] = dPi
    return dPi


def schouten_jacobiator(df1: np.ndarray, df2: np.ndarray, df3: np.ndarray, x: HolonomyPoint) -> float:
    """Jacobiator of three functions from their first derivatives only.

    Uses the bivector and its exact derivatives; second derivatives of the
    functions cancel up to frame commutators.
    """
    Pi = fr_bivector(x)
    dPi = bivector_derivatives(x)

    def A(d1, d2, d3):
        p = Pi.T @ d1
        return float(np.einsum("b,bcd,c,d->", p, dPi, d2, d3))

    def B(d1, d2, d3):
        p = Pi.T @ d1
        q = Pi @ d3
        return float(d2 @ _frame_bracket(x, p, q))

    total = 0.0
    for d1, d2, d3 in ((df1, df2, df3), (df2, df3, df1), (df3, df1, df2)):
        total += A(d1, d2, d3) + B(d1, d2, d3)
    return total


# --- moment map ------------------------------------------------------------------------


def moment_values(x: HolonomyPoint) -> dict[str, np.ndarray]:
    bs = boundary_structure(x.surface)
    return {v: holonomy(x, a) for v, a in bs.arcs.items()}


def moment_check(x: HolonomyPoint, f, S: CiliatedSurface | None = None, vertices: Sequence[str] | None = None) -> float:
    """Residual of mu_*(pi(., df)) = -1/2((s# rho* df)^L + tau(s# rho* df)^R).

    ``vertices`` restricts the check to some marked points (e.g. the unsewn ones of a quilt).
    """
    S = S or x.surface
    bs = boundary_structure(S)
    df = differential(f, x)
    Pi = fr_bivector(x)
    X = {}
    for v in S.vertices:
        m = x.model_at(v)
        X[v] = m.matrix(m.s @ (rho_matrix(x, v).T @ df))
    worst = 0.0
    for v, arc in bs.arcs.items():
        if vertices is not None and v not in vertices:
            continue
        mu = holonomy(x, arc)
        J = word_jacobian(x, arc)
        lhs = np.einsum("kpq,k->pq", J, Pi @ df)
        rhs = -0.5 * (mu @ X[v] + X[bs.sigma[v]] @ mu)
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


def moment_equivariance(x: HolonomyPoint, g: Mapping[str, np.ndarray], vertices: Sequence[str] | None = None) -> float:
    bs = boundary_structure(x.surface)
    y = act(x, g)
    worst = 0.0
    for v, arc in bs.arcs.items():
        if vertices is not None and v not in vertices:
            continue
        expect = g[bs.sigma[v]] @ holonomy(x, arc) @ np.linalg.inv(g[v])
        worst = max(worst, float(np.abs(holonomy(y, arc) - expect).max()))
    return worst


# --- fusion -----------------------------------------------------------------------------


def fused_bivector(x: HolonomyPoint) -> np.ndarray:
    """Bivector built by replaying the fusion log: pi <- pi - rho(psi) per fusion."""
    S = x.surface
    Pi = np.zeros((x.dim, x.dim))
    for before, P, Q in fusion_stages(S):
        s = x.models[before.cilia[P][0][0]].s
        RP = rho_matrix(x, P, before)
        RQ = rho_matrix(x, Q, before)
        Pi -= 0.5 * _wedge(RP, s, RQ)
    return Pi


def multifusion_bivector(x: HolonomyPoint) -> np.ndarray:
    """All discs fused at once per vertex: pi = - sum_{i<j} rho(psi_ij)."""
    Pi = np.zeros((x.dim, x.dim))
    for v in x.surface.vertices:
        s = x.model_at(v).s
        Rs = [-half_edge_matrix(x, h) for h in x.surface.cilia[v]]
        for i in range(len(Rs)):
            for j in range(i + 1, len(Rs)):
                Pi -= 0.5 * _wedge(Rs[i], s, Rs[j])
    return Pi


def fusion_bivector_check(x: HolonomyPoint) -> dict[str, float]:
    direct = fr_bivector(x)
    scale = max(1.0, float(np.abs(direct).max()))
    return {
        "incremental": float(np.abs(fused_bivector(x) - direct).max()) / scale,
        "multifusion": float(np.abs(multifusion_bivector(x) - direct).max()) / scale,
    }


def annulus_reference(x: HolonomyPoint) -> np.ndarray:
    """1/2 s^{ij} e_i^R ^ e_j^L on a single loop edge, as a frame matrix."""
    (e,) = x.surface.edge_names
    m = x.models[e]
    R = m.Ad(x.inv(e), x.hol[e])  # e_i^R in left coordinates
    L = np.eye(m.d)
    return 0.5 * _wedge(R, m.s, L)
