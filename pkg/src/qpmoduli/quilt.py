"""Quilted surfaces: domains with their own structure groups, sewn along coisotropic walls.

Reduction is never carried out on a quotient. Every statement is checked on
wall-invariant functions of the unreduced moduli space, at sampled points.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import null_space

from .groupoid_core import CiliatedSurface, SurfaceError, boundary_structure, disjoint_union, prefixed
from .intersection import PairingTable, build_table
from .lie_backend import LieModel, SubalgebraData, _orth, product_model
from .quasi_poisson import (
    HolonomyPoint,
    act,
    differential,
    fr_bivector,
    random_point,
    rho_matrix,
    schouten_jacobiator,
    value,
)

ORIENTED = "oriented"
ANTI_ORIENTED = "anti-oriented"


class QuiltError(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    name: str
    surface: CiliatedSurface
    model: LieModel


@dataclass(frozen=True)
class SingletonWall:
    domain: str
    vertex: str
    sub: SubalgebraData
    label: str = ""


@dataclass(frozen=True)
class PairedWall:
    first: tuple[str, str]
    second: tuple[str, str]
    orientation: str
    sub: SubalgebraData
    label: str = ""


Wall = SingletonWall | PairedWall


def vname(domain: str, v: str) -> str:
    return f"{domain}.{v}"


def wall_vertices(w: Wall) -> list[tuple[str, str]]:
    return [(w.domain, w.vertex)] if isinstance(w, SingletonWall) else [w.first, w.second]


def wall_name(w: Wall) -> str:
    if w.label:
        return w.label
    return "+".join(vname(d, v) for d, v in wall_vertices(w))


@dataclass(eq=False)
class QuiltedSurface:
    domains: list[Domain]
    singleton_walls: list[SingletonWall] = field(default_factory=list)
    paired_walls: list[PairedWall] = field(default_factory=list)
    contracted: list[tuple[str, str]] = field(default_factory=list)

    @property
    def walls(self) -> list[Wall]:
        return [*self.singleton_walls, *self.paired_walls]

    def domain(self, name: str) -> Domain:
        for d in self.domains:
            if d.name == name:
                return d
        raise QuiltError(f"unknown domain {name!r}")

    @cached_property
    def surface(self) -> CiliatedSurface:
        return disjoint_union(*(prefixed(d.surface, d.name + ".") for d in self.domains))

    @cached_property
    def models(self) -> dict[str, LieModel]:
        return {vname(d.name, e): d.model for d in self.domains for e in d.surface.edges}

    @cached_property
    def table(self) -> PairingTable:
        return build_table(self.surface)

    def wall_of(self, d: str, v: str) -> Wall | None:
        for w in self.walls:
            if (d, v) in wall_vertices(w):
                return w
        return None

    @property
    def residual_vertices(self) -> list[str]:
        used = {vname(d, v) for w in self.walls for d, v in wall_vertices(w)}
        return [v for v in self.surface.vertices if v not in used]

    def word(self, text: str):
        return self.surface.word(text)

    def random_point(self, rng: np.random.Generator, scale: float = 0.3) -> HolonomyPoint:
        return random_point(self.surface, self.models, rng, scale)


# --- validation -------------------------------------------------------------------


def _wall_sign(w: PairedWall) -> int:
    if w.orientation == ORIENTED:
        return -1
    if w.orientation == ANTI_ORIENTED:
        return 1
    raise QuiltError(f"wall {wall_name(w)}: unknown orientation {w.orientation!r}")


def paired_model(m1: LieModel, m2: LieModel, orientation: str) -> LieModel:
    """g_d + g_d' with tensor s_d - s_d' (oriented) or s_d + s_d' (anti-oriented)."""
    sign = -1 if orientation == ORIENTED else 1
    return product_model(m1, m2, sign)


def validate_quilt(Q: QuiltedSurface) -> dict:
    """Check wall data and return a report with dimensions and flags per wall."""
    seen: dict[tuple[str, str], str] = {}
    report: dict = {"walls": [], "residual_vertices": Q.residual_vertices}
    for w in Q.walls:
        name = wall_name(w)
        for d, v in wall_vertices(w):
            dom = Q.domain(d)
            if v not in dom.surface.vertices:
                raise QuiltError(f"wall {name}: {v!r} is not a marked point of domain {d}")
            if (d, v) in seen:
                raise QuiltError(f"marked point {vname(d, v)} is used by walls {seen[(d, v)]} and {name}")
            seen[(d, v)] = name
        if isinstance(w, SingletonWall):
            if w.sub.parent.d != Q.domain(w.domain).model.d:
                raise QuiltError(f"wall {name}: subalgebra lives in the wrong algebra")
        else:
            sign = _wall_sign(w)
            meta = w.sub.parent.meta
            m1, m2 = Q.domain(w.first[0]).model, Q.domain(w.second[0]).model
            if "factors" not in meta or meta.get("sign") != sign:
                raise QuiltError(f"wall {name}: subalgebra must live in the {w.orientation} product algebra")
            f1, f2 = meta["factors"]
            if (f1.d, f2.d) != (m1.d, m2.d):
                raise QuiltError(f"wall {name}: product factors do not match the domain algebras")
        if not w.sub.is_coisotropic:
            raise QuiltError(f"wall {name} is not coisotropic")
        report["walls"].append({"wall": name, **w.sub.report()})
    for d, v in Q.contracted:
        if Q.wall_of(d, v) is None:
            raise QuiltError(f"contracted arc at {vname(d, v)} does not start at a wall")
    return report


# --- invariance --------------------------------------------------------------------


def _wall_covector(Q: QuiltedSurface, w: Wall, x: HolonomyPoint, df: np.ndarray) -> np.ndarray:
    return np.concatenate([rho_matrix(x, vname(d, v)).T @ df for d, v in wall_vertices(w)])


def invariance_residual(f, Q: QuiltedSurface, x: HolonomyPoint) -> float:
    """max over walls of |rho* df restricted to c_w| (zero iff infinitesimally invariant)."""
    df = differential(f, x)
    scale = max(1.0, float(np.abs(df).max()))
    worst = 0.0
    for w in Q.walls:
        alpha = _wall_covector(Q, w, x, df)
        if w.sub.dim:
            worst = max(worst, float(np.abs(w.sub.basis.T @ alpha).max()) / scale)
    return worst


def is_invariant(
    f,
    Q: QuiltedSurface,
    samples: int = 5,
    seed: int = 0,
    points: Sequence[HolonomyPoint] | None = None,
    tol: float = 1e-9,
) -> tuple[bool, float]:
    if points is None:
        rng = np.random.default_rng(seed)
        points = [Q.random_point(rng) for _ in range(samples)]
    worst = max((invariance_residual(f, Q, x) for x in points), default=0.0)
    return worst < tol, worst


def random_wall_gauge(Q: QuiltedSurface, rng: np.random.Generator, scale: float = 0.3) -> dict[str, np.ndarray]:
    """A random element of C, as gauge matrices at the wall vertices."""
    g: dict[str, np.ndarray] = {}
    for w in Q.walls:
        P = w.sub.parent
        xi = w.sub.basis @ rng.uniform(-scale, scale, w.sub.dim) if w.sub.dim else np.zeros(P.d)
        M = P.expm(P.matrix(xi))
        if isinstance(w, SingletonWall):
            g[vname(w.domain, w.vertex)] = M
        else:
            n1 = Q.domain(w.first[0]).model.n
            g[vname(*w.first)] = M[:n1, :n1]
            g[vname(*w.second)] = M[n1:, n1:]
    return g


def reduced_bracket(f, g, Q: QuiltedSurface, x: HolonomyPoint, check: bool = True, tol: float = 1e-8) -> float:
    """Sum of the per-domain brackets of two wall-invariant functions."""
    if check:
        for name, h in (("f", f), ("g", g)):
            res = invariance_residual(h, Q, x)
            if res > tol:
                raise QuiltError(f"{name} is not invariant (residual {res:.3g})")
    df, dg = differential(f, x), differential(g, x)
    Pi = fr_bivector(x)
    total = 0.0
    for dom in Q.domains:
        idx = np.concatenate([np.arange(x.block(vname(dom.name, e)).start, x.block(vname(dom.name, e)).stop)
                              for e in dom.surface.edge_names])
        total += float(df[idx] @ Pi[np.ix_(idx, idx)] @ dg[idx])
    return total


def reduced_jacobiator(f1, f2, f3, x: HolonomyPoint) -> float:
    return schouten_jacobiator(differential(f1, x), differential(f2, x), differential(f3, x), x)


def residual_phi_term(f1, f2, f3, Q: QuiltedSurface, x: HolonomyPoint) -> float:
    """rho(phi) restricted to the unsewn marked points."""
    dfs = [differential(f, x) for f in (f1, f2, f3)]
    total = 0.0
    for v in Q.residual_vertices:
        R = rho_matrix(x, v)
        a, b, c = (R.T @ df for df in dfs)
        total += float(np.einsum("abc,a,b,c->", x.model_at(v).phi, a, b, c))
    return total


def bracket_invariance(f, g, Q: QuiltedSurface, x: HolonomyPoint, rng: np.random.Generator) -> float:
    """|{f,g}(c.x) - {f,g}(x)| for a random finite wall gauge c."""
    y = act(x, random_wall_gauge(Q, rng))
    a = reduced_bracket(f, g, Q, x, check=False)
    b = reduced_bracket(f, g, Q, y, check=False)
    return abs(a - b) / max(1.0, abs(a))


# --- residual gauge transformations ----------------------------------------------------


@dataclass
class ResidualGaugeAlgebra:
    basis: np.ndarray  # columns, in the coordinates listed by `layout`
    layout: list[tuple[str, str, slice]]  # (wall, "bar"|"end", slice)
    closure_residual: float

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def _complement_rows(B: np.ndarray, d: int) -> np.ndarray:
    """Rows spanning the annihilator of the column span of B (orthonormal basis)."""
    if B.shape[1] == 0:
        return np.eye(d)
    return null_space(B.T).T


def residual_gauge_algebra(Q: QuiltedSurface, check: bool = True) -> ResidualGaugeAlgebra:
    """Lie algebra of g_wbar, g_w in C_w, g_w g_wbar^-1 in C_w^perp, g_v = g_{sigma(v)-bar}.

    check=False solves the linear conditions for wall data that is not coisotropic.
    """
    if check:
        validate_quilt(Q)
    walls = Q.walls
    layout = []
    offsets: dict[tuple[int, str], int] = {}
    off = 0
    for k, w in enumerate(walls):
        d = w.sub.parent.d
        for part in ("bar", "end"):
            offsets[(k, part)] = off
            layout.append((wall_name(w), part, slice(off, off + d)))
            off += d
    N = off
    rows = []
    for k, w in enumerate(walls):
        d = w.sub.parent.d
        comp_c = _complement_rows(w.sub.basis, d)
        comp_perp = _complement_rows(w.sub.perp_basis, d)
        for part in ("bar", "end"):
            for r in comp_c:
                row = np.zeros(N)
                row[offsets[(k, part)]: offsets[(k, part)] + d] = r
                rows.append(row)
        for r in comp_perp:
            row = np.zeros(N)
            row[offsets[(k, "end")]: offsets[(k, "end")] + d] = r
            row[offsets[(k, "bar")]: offsets[(k, "bar")] + d] -= r
            rows.append(row)

    def locate(d: str, v: str) -> tuple[int, int, int]:
        for k, w in enumerate(walls):
            verts = wall_vertices(w)
            if (d, v) in verts:
                pos = 0
                for dd, vv in verts:
                    if (dd, vv) == (d, v):
                        break
                    pos += Q.domain(dd).model.d
                return k, pos, Q.domain(d).model.d
        raise QuiltError(f"contracted arc at {vname(d, v)} ends at a marked point with no wall")

    for d, v in Q.contracted:
        sigma = boundary_structure(Q.domain(d).surface).sigma
        k1, p1, dd = locate(d, v)
        k2, p2, _ = locate(d, sigma[v])
        for c in range(dd):
            row = np.zeros(N)
            row[offsets[(k1, "end")] + p1 + c] = 1.0
            row[offsets[(k2, "bar")] + p2 + c] -= 1.0
            rows.append(row)
    A = np.array(rows) if rows else np.zeros((0, N))
    basis = null_space(A) if A.shape[0] else np.eye(N)
    if basis.shape[1]:
        basis = _orth(basis.T, N)
    closure = _closure(Q, walls, offsets, basis)
    return ResidualGaugeAlgebra(basis, layout, closure)


def _closure(Q, walls, offsets, basis) -> float:
    if basis.shape[1] == 0:
        return 0.0
    worst = 0.0
    for i in range(basis.shape[1]):
        for j in range(i + 1, basis.shape[1]):
            u, v = basis[:, i], basis[:, j]
            br = np.zeros_like(u)
            for k, w in enumerate(walls):
                P = w.sub.parent
                for part in ("bar", "end"):
                    sl = slice(offsets[(k, part)], offsets[(k, part)] + P.d)
                    br[sl] = P.bracket(u[sl], v[sl])
            resid = br - basis @ (basis.T @ br)
            worst = max(worst, float(np.abs(resid).max()))
    return worst


# --- constrained samples and scenario running -----------------------------------------------


@dataclass
class ConstrainedPoint:
    point: HolonomyPoint
    params: dict
    constraint_residual: float


@dataclass
class Scenario:
    name: str
    quilt: QuiltedSurface
    invariants: list[tuple[str, object]]
    sampler: Callable[..., ConstrainedPoint]
    description: str = ""
    extra_checks: Callable[["Scenario", int, int], list["CheckResult"]] | None = None
    expected_residual_dim: int | None = None


@dataclass
class CheckResult:
    name: str
    residual: float
    tol: float
    anchor: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.residual < self.tol)


def sample_constrained_point(Q: QuiltedSurface, scenario: Scenario, rng: np.random.Generator, **params) -> ConstrainedPoint:
    if scenario.quilt is not Q:
        raise QuiltError("scenario belongs to a different quilt")
    return scenario.sampler(rng, **params)


def run_scenario(sc: Scenario, samples: int = 50, seed: int = 0, tol: float = 1e-8) -> list[CheckResult]:
    """Reduction checks shared by every scenario, followed by its own checks."""
    rng = np.random.default_rng(seed)
    Q = sc.quilt
    out: list[CheckResult] = []
    rep = validate_quilt(Q)
    out.append(CheckResult("walls coisotropic", 0.0 if all(w["coisotropic"] for w in rep["walls"]) else 1.0, 0.5,
                           "coisotropic walls give a reducing subgroup"))
    pts = [sc.sampler(rng) for _ in range(samples)]
    out.append(CheckResult("constraint residual", max(p.constraint_residual for p in pts), 1e-10,
                           "constrained-point parametrization"))
    fs = [f for _, f in sc.invariants]
    inv = max(invariance_residual(f, Q, p.point) for p in pts for f in fs)
    out.append(CheckResult("invariants are wall-invariant", inv, 1e-9, "invariant functions"))
    jac = 0.0
    triples = [(i, j, k) for i in range(len(fs)) for j in range(i + 1, len(fs)) for k in range(j + 1, len(fs))]
    has_residual = bool(Q.residual_vertices)
    for p in pts:
        x = p.point
        for i, j, k in triples:
            J = reduced_jacobiator(fs[i], fs[j], fs[k], x)
            if has_residual:
                J -= residual_phi_term(fs[i], fs[j], fs[k], Q, x)
            scale = max(1.0, *(abs(value(f, x)) for f in (fs[i], fs[j], fs[k])))
            jac = max(jac, abs(J) / scale**3)
    label = "Jacobiator = residual phi term" if has_residual else "Jacobi identity on invariants"
    out.append(CheckResult(label, jac, tol, "reduction of coisotropic walls"))
    binv = 0.0
    for p in pts[: max(1, min(10, samples))]:
        for i in range(len(fs)):
            for j in range(i + 1, len(fs)):
                binv = max(binv, bracket_invariance(fs[i], fs[j], Q, p.point, rng))
    out.append(CheckResult("bracket outputs invariant", binv, tol, "brackets of invariants are invariant"))
    # brackets only depend on the point of the quotient
    desc = 0.0
    for p in pts[: max(1, min(10, samples))]:
        q = sc.sampler(rng, **p.params)
        for i in range(len(fs)):
            for j in range(i + 1, len(fs)):
                a = reduced_bracket(fs[i], fs[j], Q, p.point, check=False)
                b = reduced_bracket(fs[i], fs[j], Q, q.point, check=False)
                desc = max(desc, abs(a - b) / max(1.0, abs(a)))
    out.append(CheckResult("bracket descends to the quotient", desc, tol, "well-defined on M/C"))
    if sc.expected_residual_dim is not None:
        R = residual_gauge_algebra(Q)
        out.append(CheckResult(f"residual gauge algebra dim = {sc.expected_residual_dim}",
                               float(abs(R.dim - sc.expected_residual_dim)), 0.5, "residual gauge transformations"))
    if sc.extra_checks is not None:
        out.extend(sc.extra_checks(sc, samples, seed))
    return out
