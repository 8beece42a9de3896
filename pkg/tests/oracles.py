"""Independent numerical oracles shared by the tests."""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from qpmoduli.quasi_poisson import HolonomyPoint, bracket_FR, fr_bivector, value


def moved(x: HolonomyPoint, k: int, t: float) -> HolonomyPoint:
    """Point with hol_e -> hol_e exp(t e_c) for the k-th frame direction."""
    for e in x.surface.edge_names:
        sl = x.block(e)
        if sl.start <= k < sl.stop:
            hol = dict(x.hol)
            hol[e] = x.hol[e] @ expm(t * x.models[e].basis[k - sl.start])
            return HolonomyPoint(x.surface, x.models, hol)
    raise IndexError(k)


def fd_grad(fn, x: HolonomyPoint, h: float = 1e-5) -> np.ndarray:
    return np.array([(fn(moved(x, k, h)) - fn(moved(x, k, -h))) / (2 * h) for k in range(x.dim)])


def fd_jacobiator(f1, f2, f3, x: HolonomyPoint, h: float = 1e-5) -> float:
    """Cyclic sum of {f_a, {f_b, f_c}} with the inner bracket differentiated numerically."""
    Pi = fr_bivector(x)
    total = 0.0
    for a, b, c in ((f1, f2, f3), (f2, f3, f1), (f3, f1, f2)):
        dinner = fd_grad(lambda y: bracket_FR(b, c, y), x, h)
        da = fd_grad(lambda y: value(a, y), x, h)
        total += float(da @ Pi @ dinner)
    return total


def mc_pullback(x: HolonomyPoint, w) -> np.ndarray:
    """Left Maurer-Cartan form of hol_w as a (frame, algebra) matrix."""
    from qpmoduli.quasi_poisson import holonomy, word_jacobian

    m = x.model_of_word(w)
    Hi = np.linalg.inv(holonomy(x, w))
    J = word_jacobian(x, w)
    return np.array([m.coords(Hi @ J[k]) for k in range(x.dim)])
