"""Matrix Lie algebra models with an invariant symmetric tensor s."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.linalg import expm as _expm
from scipy.linalg import null_space

TOL = 1e-10


class ModelError(ValueError):
    pass


def _coords_solver(basis: np.ndarray) -> np.ndarray:
    d = basis.shape[0]
    mat = basis.reshape(d, -1).T
    return np.linalg.pinv(mat)


@dataclass(frozen=True, eq=False)
class LieModel:
    """Basis e_i (d x n x n), symmetric tensor s^{ij}; [e_i, e_j] = f[i,j,k] e_k."""

    name: str
    n: int
    basis: np.ndarray
    s: np.ndarray
    ad_form: np.ndarray | None = None  # the pairing s is inverse to, when nondegenerate
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.basis.shape[0]

    @cached_property
    def _solver(self) -> np.ndarray:
        return _coords_solver(self.basis)

    def coords(self, X: np.ndarray) -> np.ndarray:
        return self._solver @ np.asarray(X).reshape(-1)

    def matrix(self, c: Sequence[float]) -> np.ndarray:
        return np.tensordot(np.asarray(c, dtype=float), self.basis, axes=1)

    def membership_residual(self, X: np.ndarray) -> float:
        return float(np.abs(self.matrix(self.coords(X)) - X).max())

    @cached_property
    def structure_constants(self) -> np.ndarray:
        d = self.d
        f = np.zeros((d, d, d))
        for i in range(d):
            for j in range(d):
                br = self.basis[i] @ self.basis[j] - self.basis[j] @ self.basis[i]
                f[i, j] = self.coords(br)
        return f

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Bracket in coordinates."""
        return np.einsum("i,j,ijk->k", x, y, self.structure_constants)

    def ad(self, x: np.ndarray) -> np.ndarray:
        """Matrix of ad_x on coordinates (column k = [x, e_k])."""
        return np.einsum("i,ijk->kj", x, self.structure_constants)

    def Ad(self, g: np.ndarray, g_inv: np.ndarray | None = None) -> np.ndarray:
        """Matrix of Ad_g on coordinates (column k = coords of g e_k g^-1)."""
        g_inv = np.linalg.inv(g) if g_inv is None else g_inv
        conj = np.einsum("ab,kbc,cd->kad", g, self.basis, g_inv)
        return self._solver @ conj.reshape(self.d, -1).T

    @cached_property
    def phi(self) -> np.ndarray:
        """phi[a,b,c] = 1/4 alpha([s# beta, s# gamma]) on dual basis covectors."""
        f = self.structure_constants
        S = self.s
        return 0.25 * np.einsum("ija,ib,jc->abc", f, S, S)

    @cached_property
    def K(self) -> np.ndarray:
        """Matrix form of s: K[a,b,c,d] = sum s^{kl} (e_k)_{ab} (e_l)_{cd}."""
        return np.einsum("kl,kab,lcd->abcd", self.s, self.basis, self.basis)

    @cached_property
    def K_entries(self) -> list[tuple[int, int, int, int, float]]:
        K = self.K
        idx = np.argwhere(np.abs(K) > 1e-14)
        return [(int(a), int(b), int(c), int(d), float(K[a, b, c, d])) for a, b, c, d in idx]

    def s_sharp(self, alpha: np.ndarray) -> np.ndarray:
        return self.s @ alpha

    def expm(self, X: np.ndarray) -> np.ndarray:
        return _expm(X)

    def random_algebra(self, rng: np.random.Generator, scale: float = 0.3) -> np.ndarray:
        return self.matrix(rng.uniform(-scale, scale, self.d))

    def random_group(self, rng: np.random.Generator, scale: float = 0.3, factors: int = 2) -> np.ndarray:
        g = np.eye(self.n)
        for _ in range(factors):
            g = g @ _expm(self.random_algebra(rng, scale))
        return g

    def group_residual(self, g: np.ndarray) -> float:
        """How far g is from the group (0 for the full matrix group)."""
        check = self.meta.get("group_check")
        return float(check(g)) if check else 0.0

    # validation ----------------------------------------------------------------
    def closure_residual(self) -> float:
        worst = 0.0
        for i in range(self.d):
            for j in range(self.d):
                br = self.basis[i] @ self.basis[j] - self.basis[j] @ self.basis[i]
                worst = max(worst, self.membership_residual(br))
        return worst

    def invariance_residual(self) -> float:
        """max |ad_x s + s ad_x^T| over basis x."""
        worst = 0.0
        for i in range(self.d):
            A = self.ad(np.eye(self.d)[i])
            worst = max(worst, float(np.abs(A @ self.s + self.s @ A.T).max()))
        return worst

    def jacobi_residual(self) -> float:
        f = self.structure_constants
        t = np.einsum("ijm,mkl->ijkl", f, f)
        cyc = t + np.einsum("ijkl->jkil", t) + np.einsum("ijkl->kijl", t)
        return float(np.abs(cyc).max()) if cyc.size else 0.0

    def validate(self) -> None:
        mat = self.basis.reshape(self.d, -1)
        if np.linalg.matrix_rank(mat, tol=1e-12) != self.d:
            raise ModelError(f"{self.name}: basis not linearly independent")
        if self.closure_residual() > 1e-12:
            raise ModelError(f"{self.name}: basis not closed under commutator")
        if np.abs(self.s - self.s.T).max() > 1e-12:
            raise ModelError(f"{self.name}: s not symmetric")
        if self.invariance_residual() > TOL:
            raise ModelError(f"{self.name}: s not ad-invariant")


def _gram(basis: np.ndarray, form) -> np.ndarray:
    d = basis.shape[0]
    return np.array([[form(basis[i], basis[j]) for j in range(d)] for i in range(d)])


def _elementary(n: int, i: int, j: int) -> np.ndarray:
    E = np.zeros((n, n))
    E[i, j] = 1.0
    return E


def gl(n: int) -> LieModel:
    basis = np.array([_elementary(n, i, j) for i in range(n) for j in range(n)])
    G = _gram(basis, lambda x, y: np.trace(x @ y))
    m = LieModel(f"gl{n}", n, basis, np.linalg.inv(G), G)
    m.validate()
    return m


def sl(n: int) -> LieModel:
    if n < 2:
        raise ModelError("sl(n) needs n >= 2")
    mats = [_elementary(n, i, j) for i in range(n) for j in range(n) if i != j]
    for k in range(n - 1):
        mats.append(_elementary(n, k, k) - _elementary(n, k + 1, k + 1))
    basis = np.array(mats)
    G = _gram(basis, lambda x, y: np.trace(x @ y))
    m = LieModel(f"sl{n}", n, basis, np.linalg.inv(G), G,
                 meta={"group_check": lambda g: abs(np.linalg.det(g) - 1.0)})
    m.validate()
    return m


def abelian(d: int) -> LieModel:
    """R^d realised as diagonal d x d matrices with the trace form."""
    basis = np.array([_elementary(d, i, i) for i in range(d)])
    G = np.eye(d)
    m = LieModel(f"abelian{d}", d, basis, np.eye(d), G,
                 meta={"group_check": lambda g: float(np.abs(g - np.diag(np.diag(g))).max())})
    m.validate()
    return m


# sl(2, C) as a real Lie algebra, embedded as 4 x 4 real matrices ------------------


def realify(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    return np.block([[X.real, -X.imag], [X.imag, X.real]])


def complexify(R: np.ndarray) -> np.ndarray:
    n = R.shape[0] // 2
    return R[:n, :n] + 1j * R[n:, :n]


def sl2c() -> LieModel:
    H = np.array([[1, 0], [0, -1]], dtype=complex)
    E = np.array([[0, 1], [0, 0]], dtype=complex)
    F = np.array([[0, 0], [1, 0]], dtype=complex)
    cbasis = [H, E, F, 1j * H, 1j * E, 1j * F]
    basis = np.array([realify(X) for X in cbasis])
    G = np.array([[np.trace(x @ y).imag for y in cbasis] for x in cbasis])
    m = LieModel(
        "sl2c-iwasawa", 4, basis, np.linalg.inv(G), G,
        meta={
            "group_check": lambda g: abs(np.linalg.det(complexify(g)) - 1.0)
            + float(np.abs(realify(complexify(g)) - g).max()),
        },
    )
    m.validate()
    return m


def product_model(m1: LieModel, m2: LieModel, sign: int = 1, name: str | None = None) -> LieModel:
    """g1 + g2 as block-diagonal matrices with tensor s1 + sign * s2."""
    n = m1.n + m2.n
    blocks = []
    for X in m1.basis:
        B = np.zeros((n, n))
        B[: m1.n, : m1.n] = X
        blocks.append(B)
    for X in m2.basis:
        B = np.zeros((n, n))
        B[m1.n:, m1.n:] = X
        blocks.append(B)
    d1, d2 = m1.d, m2.d
    s = np.zeros((d1 + d2, d1 + d2))
    s[:d1, :d1] = m1.s
    s[d1:, d1:] = sign * m2.s
    tag = "+" if sign > 0 else "-"
    m = LieModel(name or f"{m1.name}{tag}{m2.name}", n, np.array(blocks), s,
                 meta={"factors": (m1, m2), "sign": sign})
    m.validate()
    return m


def build_model(kind: str, n: int | None = None) -> LieModel:
    """Models by selector: gl2, sl3, gl(2), abelian:3, sl2c-iwasawa."""
    k = kind.strip().lower().replace("(", "").replace(")", "")
    if k.startswith("abelian"):
        num = k[len("abelian"):].lstrip(":")
        if num and not num.isdigit():
            raise ModelError(f"bad abelian dimension in {kind!r}")
        d = int(num) if num else (n or 1)
        return abelian(d)
    if k in ("sl2c", "sl2c-iwasawa"):
        return sl2c()
    for prefix, ctor in (("gl", gl), ("sl", sl)):
        if k.startswith(prefix):
            rest = k[len(prefix):]
            size = int(rest) if rest else n
            if size is None or size < 1:
                raise ModelError(f"model {kind!r} needs a size")
            return ctor(size)
    raise ModelError(f"unknown model kind {kind!r}")


def phi(model: LieModel) -> np.ndarray:
    return model.phi


def Ad(model: LieModel, g: np.ndarray, xi: np.ndarray) -> np.ndarray:
    return g @ xi @ np.linalg.inv(g)


def ad(xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    return xi @ eta - eta @ xi


def expm(xi: np.ndarray) -> np.ndarray:
    return _expm(xi)


# --- subalgebras --------------------------------------------------------------


def _orth(vectors: np.ndarray, d: int) -> np.ndarray:
    """Orthonormal columns spanning the given vectors (rows)."""
    if len(vectors) == 0:
        return np.zeros((d, 0))
    u, sv, _ = np.linalg.svd(np.asarray(vectors, dtype=float).T, full_matrices=False)
    rank = int((sv > 1e-10 * max(1.0, sv[0])).sum())
    return u[:, :rank]


def _in_span(Q: np.ndarray, v: np.ndarray) -> float:
    if Q.shape[1] == 0:
        return float(np.abs(v).max()) if v.size else 0.0
    return float(np.abs(v - Q @ (Q.T @ v)).max())


@dataclass(frozen=True, eq=False)
class SubalgebraData:
    parent: LieModel
    generators: np.ndarray

    @cached_property
    def basis(self) -> np.ndarray:
        """Orthonormal coordinate basis (columns) of the subalgebra."""
        return _orth(self.generators, self.parent.d)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def closure_residual(self) -> float:
        Q = self.basis
        worst = 0.0
        for i in range(Q.shape[1]):
            for j in range(i + 1, Q.shape[1]):
                worst = max(worst, _in_span(Q, self.parent.bracket(Q[:, i], Q[:, j])))
        return worst

    @cached_property
    def ann(self) -> np.ndarray:
        """Basis (columns) of the annihilator in dual coordinates."""
        if self.dim == 0:
            return np.eye(self.parent.d)
        return null_space(self.basis.T, rcond=1e-12)

    @cached_property
    def perp_basis(self) -> np.ndarray:
        return _orth((self.parent.s @ self.ann).T, self.parent.d)

    def contains(self, x: np.ndarray, tol: float = TOL) -> bool:
        return _in_span(self.basis, x) < tol * max(1.0, float(np.abs(x).max()))

    @cached_property
    def is_coisotropic(self) -> bool:
        P = self.parent.s @ self.ann
        return all(_in_span(self.basis, P[:, k]) < TOL for k in range(P.shape[1]))

    @cached_property
    def is_reducing(self) -> bool:
        P = self.parent.s @ self.ann
        for i in range(P.shape[1]):
            for j in range(i + 1, P.shape[1]):
                if _in_span(self.basis, self.parent.bracket(P[:, i], P[:, j])) > TOL:
                    return False
        return True

    @cached_property
    def is_lagrangian(self) -> bool:
        return self.is_coisotropic and self.perp_basis.shape[1] == self.dim

    def perp_is_ideal(self) -> bool:
        Q, P = self.basis, self.perp_basis
        for i in range(Q.shape[1]):
            for j in range(P.shape[1]):
                if _in_span(P, self.parent.bracket(Q[:, i], P[:, j])) > TOL:
                    return False
        return True

    def hat_algebra(self) -> np.ndarray:
        """Basis (rows, in g+g coordinates) of {(x + s#a, x - s#a)}."""
        d = self.parent.d
        rows = [np.concatenate([q, q]) for q in self.basis.T]
        for a in (self.parent.s @ self.ann).T:
            rows.append(np.concatenate([a, -a]))
        return _orth(np.array(rows), 2 * d).T

    def hat_closure_residual(self) -> float:
        H = self.hat_algebra().T
        d = self.parent.d
        worst = 0.0
        for i in range(H.shape[1]):
            for j in range(i + 1, H.shape[1]):
                x, y = H[:, i], H[:, j]
                br = np.concatenate([self.parent.bracket(x[:d], y[:d]), self.parent.bracket(x[d:], y[d:])])
                worst = max(worst, _in_span(H, br))
        return worst

    def report(self) -> dict:
        return {
            "dim": self.dim,
            "perp_dim": self.perp_basis.shape[1],
            "coisotropic": self.is_coisotropic,
            "reducing": self.is_reducing,
            "lagrangian": self.is_lagrangian,
        }


def subalgebra_checks(parent: LieModel, generators: Sequence[Sequence[float]] | np.ndarray) -> SubalgebraData:
    gens = np.atleast_2d(np.asarray(generators, dtype=float)) if len(generators) else np.zeros((0, parent.d))
    sub = SubalgebraData(parent, gens)
    if sub.closure_residual() > TOL:
        raise ModelError("not a subalgebra")
    return sub


def subalgebra_from_matrices(parent: LieModel, mats: Sequence[np.ndarray]) -> SubalgebraData:
    return subalgebra_checks(parent, [parent.coords(X) for X in mats])


def full(parent: LieModel) -> SubalgebraData:
    return subalgebra_checks(parent, np.eye(parent.d))


def trivial(parent: LieModel) -> SubalgebraData:
    return SubalgebraData(parent, np.zeros((0, parent.d)))


def diagonal(parent: LieModel) -> SubalgebraData:
    """Diagonal copy of g inside a product model g + g."""
    m1, m2 = parent.meta["factors"]
    if m1.d != m2.d:
        raise ModelError("diagonal needs equal factors")
    return subalgebra_checks(parent, np.hstack([np.eye(m1.d), np.eye(m1.d)]))


# --- the Manin triple (sl(2,C), su(2), b) and Iwasawa factorisation ---------------


def manin_triple_sl2() -> tuple[LieModel, SubalgebraData, SubalgebraData]:
    g = sl2c()
    H = np.array([[1, 0], [0, -1]], dtype=complex)
    E = np.array([[0, 1], [0, 0]], dtype=complex)
    F = np.array([[0, 0], [1, 0]], dtype=complex)
    a = subalgebra_from_matrices(g, [realify(1j * H), realify(E - F), realify(1j * (E + F))])
    b = subalgebra_from_matrices(g, [realify(H), realify(E), realify(1j * E)])
    return g, a, b


def sl2r(g: LieModel) -> SubalgebraData:
    H = np.array([[1, 0], [0, -1]], dtype=complex)
    E = np.array([[0, 1], [0, 0]], dtype=complex)
    F = np.array([[0, 0], [1, 0]], dtype=complex)
    return subalgebra_from_matrices(g, [realify(H), realify(E), realify(F)])


def complex_borel(g: LieModel) -> SubalgebraData:
    H = np.array([[1, 0], [0, -1]], dtype=complex)
    E = np.array([[0, 1], [0, 0]], dtype=complex)
    return subalgebra_from_matrices(g, [realify(H), realify(E), realify(1j * H), realify(1j * E)])


class FactorizationError(ArithmeticError):
    pass


def iwasawa_factorize(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """g = a b with a in SU(2), b upper triangular with positive diagonal (4x4 real form)."""
    G = complexify(g)
    if abs(np.linalg.det(G)) < 1e-14:
        raise FactorizationError("matrix is singular")
    Q, R = np.linalg.qr(G)
    ph = np.diag(R) / np.abs(np.diag(R))
    D = np.diag(ph)
    a = Q @ D
    b = np.conj(D) @ R
    if np.abs(np.diag(b).imag).max() > 1e-10 or np.diag(b).real.min() <= 0:
        raise FactorizationError("factorization left the dense cell")
    return realify(a), realify(b)


def iwasawa_factorize_ba(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """g = b a with the same subgroups, via the inverse."""
    a1, b1 = iwasawa_factorize(np.linalg.inv(g))
    return np.linalg.inv(b1), np.linalg.inv(a1)


def split_direct(g: LieModel, first: SubalgebraData, second: SubalgebraData, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decompose coordinates x = x1 + x2 along a direct sum of two subalgebras."""
    M = np.hstack([first.basis, second.basis])
    c = np.linalg.solve(M, x) if M.shape[0] == M.shape[1] else np.linalg.lstsq(M, x, rcond=None)[0]
    k = first.dim
    return first.basis @ c[:k], second.basis @ c[k:]
