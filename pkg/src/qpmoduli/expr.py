"""Matrix-valued and scalar functions of holonomies with exact first derivatives.

Used for quilt invariants that are not polynomial in holonomy entries (for
example, factors of an Iwasawa decomposition). Every node evaluates to a value
together with its derivative along all frame directions of a HolonomyPoint.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np

from .groupoid_core import Word
from .lie_backend import (
    LieModel,
    SubalgebraData,
    iwasawa_factorize,
    iwasawa_factorize_ba,
    manin_triple_sl2,
)
from .quasi_poisson import HolonomyPoint, holonomy, word_jacobian


def _memo(node, x: HolonomyPoint, compute):
    key = ("expr", id(node))
    hit = x._cache.get(key)
    if hit is None or hit[0] is not node:
        hit = (node, compute())
        x._cache[key] = hit
    return hit[1]


class MatExpr:
    def eval(self, x: HolonomyPoint) -> tuple[np.ndarray, np.ndarray]:
        """(value (n, n), jacobian (dim, n, n))."""
        return _memo(self, x, lambda: self._eval(x))

    def _eval(self, x: HolonomyPoint):
        raise NotImplementedError

    def __matmul__(self, other: "MatExpr") -> "MatExpr":
        return Mul(self, other)

    def inv(self) -> "MatExpr":
        return Inv(self)

    def entry(self, i: int, j: int) -> "Fn":
        return Entry(self, i, j)


class Hol(MatExpr):
    def __init__(self, word: Word):
        self.word = word

    def _eval(self, x):
        return holonomy(x, self.word), word_jacobian(x, self.word)

    def __repr__(self) -> str:
        return f"Hol({self.word})"


class Const(MatExpr):
    def __init__(self, M: np.ndarray):
        self.M = np.asarray(M, dtype=float)

    def _eval(self, x):
        return self.M, np.zeros((x.dim,) + self.M.shape)


class Mul(MatExpr):
    def __init__(self, a: MatExpr, b: MatExpr):
        self.a, self.b = a, b

    def _eval(self, x):
        A, JA = self.a.eval(x)
        B, JB = self.b.eval(x)
        return A @ B, JA @ B + np.einsum("ij,kjl->kil", A, JB)


class Inv(MatExpr):
    def __init__(self, a: MatExpr):
        self.a = a

    def _eval(self, x):
        A, JA = self.a.eval(x)
        Ai = np.linalg.inv(A)
        return Ai, -np.einsum("ij,kjl,lm->kim", Ai, JA, Ai)


class _Splitting:
    """Projections of g = a + b in coordinates (for the Iwasawa factor derivatives)."""

    def __init__(self, g: LieModel, a: SubalgebraData, b: SubalgebraData):
        self.g = g
        M = np.hstack([a.basis, b.basis])
        Minv = np.linalg.inv(M)
        k = a.dim
        self.Pa = a.basis @ Minv[:k]
        self.Pb = b.basis @ Minv[k:]

    def split(self, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split a stack of algebra elements (k, n, n) into the two summands."""
        coords = Y.reshape(Y.shape[0], -1) @ self.g._solver.T
        Ya = np.einsum("kc,cij->kij", coords @ self.Pa.T, self.g.basis)
        Yb = np.einsum("kc,cij->kij", coords @ self.Pb.T, self.g.basis)
        return Ya, Yb


class Iwasawa(MatExpr):
    """One factor of g = a b (order 'AB') or g = b a (order 'BA'), a in SU(2), b in B."""

    def __init__(self, arg: MatExpr, part: str, order: str = "AB"):
        if part not in ("A", "B") or order not in ("AB", "BA"):
            raise ValueError("part must be A or B, order AB or BA")
        self.arg, self.part, self.order = arg, part, order

    @cached_property
    def _split(self) -> _Splitting:
        return _Splitting(*manin_triple_sl2())

    def _eval(self, x):
        G, JG = self.arg.eval(x)
        if self.order == "AB":
            a, b = iwasawa_factorize(G)
            ai, bi = np.linalg.inv(a), np.linalg.inv(b)
            Ya, Yb = self._split.split(np.einsum("ij,kjl,lm->kim", ai, JG, bi))
            if self.part == "A":
                return a, np.einsum("ij,kjl->kil", a, Ya)
            return b, Yb @ b
        b, a = iwasawa_factorize_ba(G)
        ai, bi = np.linalg.inv(a), np.linalg.inv(b)
        Ya, Yb = self._split.split(np.einsum("ij,kjl,lm->kim", bi, JG, ai))
        if self.part == "A":
            return a, Ya @ a
        return b, np.einsum("ij,kjl->kil", b, Yb)


def conj4() -> Const:
    """Complex conjugation on the 4x4 real form is X -> D X D."""
    return Const(np.diag([1.0, 1.0, -1.0, -1.0]))


# --- scalar functions -------------------------------------------------------------


class Fn:
    def eval(self, x: HolonomyPoint) -> tuple[float, np.ndarray]:
        return _memo(self, x, lambda: self._eval(x))

    def _eval(self, x):
        raise NotImplementedError

    def value(self, x: HolonomyPoint) -> float:
        return float(self.eval(x)[0])

    def grad(self, x: HolonomyPoint) -> np.ndarray:
        return self.eval(x)[1]

    def __add__(self, other) -> "Fn":
        return Sum(self, _lift(other))

    __radd__ = __add__

    def __sub__(self, other) -> "Fn":
        return Sum(self, Scale(_lift(other), -1.0))

    def __rsub__(self, other) -> "Fn":
        return Sum(_lift(other), Scale(self, -1.0))

    def __neg__(self) -> "Fn":
        return Scale(self, -1.0)

    def __mul__(self, other) -> "Fn":
        if isinstance(other, (int, float)):
            return Scale(self, float(other))
        return Prod(self, _lift(other))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Fn":
        return Quot(self, _lift(other))


def _lift(v) -> Fn:
    if isinstance(v, Fn):
        return v
    if isinstance(v, (int, float)):
        return ConstFn(float(v))
    raise TypeError(f"cannot use {type(v).__name__} as a scalar function")


class ConstFn(Fn):
    def __init__(self, c: float):
        self.c = c

    def _eval(self, x):
        return self.c, np.zeros(x.dim)


class Entry(Fn):
    def __init__(self, m: MatExpr, i: int, j: int):
        self.m, self.i, self.j = m, i, j

    def _eval(self, x):
        V, J = self.m.eval(x)
        return V[self.i, self.j], J[:, self.i, self.j]


class Sum(Fn):
    def __init__(self, a: Fn, b: Fn):
        self.a, self.b = a, b

    def _eval(self, x):
        va, ga = self.a.eval(x)
        vb, gb = self.b.eval(x)
        return va + vb, ga + gb


class Scale(Fn):
    def __init__(self, a: Fn, c: float):
        self.a, self.c = a, c

    def _eval(self, x):
        v, g = self.a.eval(x)
        return self.c * v, self.c * g


class Prod(Fn):
    def __init__(self, a: Fn, b: Fn):
        self.a, self.b = a, b

    def _eval(self, x):
        va, ga = self.a.eval(x)
        vb, gb = self.b.eval(x)
        return va * vb, ga * vb + va * gb


class Quot(Fn):
    def __init__(self, a: Fn, b: Fn):
        self.a, self.b = a, b

    def _eval(self, x):
        va, ga = self.a.eval(x)
        vb, gb = self.b.eval(x)
        return va / vb, (ga * vb - va * gb) / (vb * vb)


def entries(m: MatExpr, idx=None) -> list[Fn]:
    """Scalar entry functions of a matrix expression (all entries by default)."""
    if idx is None:
        n = 4
        idx = [(i, j) for i in range(n) for j in range(n)]
    return [Entry(m, i, j) for i, j in idx]
