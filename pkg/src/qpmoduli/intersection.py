"""Skew homotopy intersection pairing on the groupoid, built by fusion from discs."""
from __future__ import annotations

from dataclasses import dataclass, field

from .groupoid_core import (
    CiliatedSurface,
    GroupoidRingElement,
    Word,
    WordError,
    compose,
    fuse,
    fusion_stages,
    initial_discs,
)

Ring = GroupoidRingElement


class PairingError(RuntimeError):
    pass


@dataclass
class PairingTable:
    """Pairings (e, e') of positive edge letters on one surface."""

    surface: CiliatedSurface
    base: dict[tuple[str, str], Ring]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def entry(self, e: str, f: str) -> Ring:
        return self.base[(e, f)]


def init_table(discs: CiliatedSurface) -> PairingTable:
    if discs.fusion_log:
        raise PairingError("init_table expects unfused discs")
    names = discs.edge_names
    return PairingTable(discs, {(e, f): Ring.zero() for e in names for f in names})


def _rename(x: Ring, S_new: CiliatedSurface, Q: str, P: str) -> Ring:
    out: dict[Word, int] = {}
    for w, c in x.terms.items():
        src = P if w.source == Q else w.source
        tgt = P if w.target == Q else w.target
        nw = Word(w.letters, src, tgt)
        out[nw] = out.get(nw, 0) + c
    return Ring(out)


def fuse_update(T: PairingTable, S: CiliatedSurface, P: str, Q: str) -> PairingTable:
    """Apply the fusion rule for merging Q into P to every base entry."""
    if T.surface is not S and dict(T.surface.edges) != dict(S.edges):
        raise PairingError("table does not belong to the given surface")
    S_new = fuse(S, P, Q)
    one = Ring.of(Word.identity(P))
    zero = Ring.zero()

    def img(e: str, inverse: bool = False) -> Ring:
        w = S_new.edge_word(e)
        return Ring.of(w.inverse() if inverse else w)

    def delta(v: str, target: str) -> int:
        return 1 if v == target else 0

    base: dict[tuple[str, str], Ring] = {}
    for (a, b), old in T.base.items():
        oa, ia = S.edges[a]
        ob, ib = S.edges[b]
        X = img(a, True).scale(delta(ia, P)) - one.scale(delta(oa, P))
        Y = img(b).scale(delta(ib, Q)) - one.scale(delta(ob, Q))
        Z = img(a, True).scale(delta(ia, Q)) - one.scale(delta(oa, Q))
        W = img(b).scale(delta(ib, P)) - one.scale(delta(ob, P))
        try:
            corr = (X * Y if X and Y else zero)
            corr2 = (Z * W if Z and W else zero)
        except WordError as exc:  # endpoint-consistent formula; reaching this is a bug
            raise PairingError(f"fusion update produced incomposable product: {exc}") from exc
        base[(a, b)] = _rename(old, S_new, Q, P) - corr + corr2
    return PairingTable(S_new, base)


def build_table(S: CiliatedSurface) -> PairingTable:
    """Pairing table of S, obtained by replaying its fusion log from discs."""
    T = init_table(initial_discs(S))
    for before, P, Q in fusion_stages(S):
        T = fuse_update(T, before, P, Q)
    return T


def pairing(T: PairingTable, a: Word, b: Word) -> Ring:
    """(a, b), valued in paths from the source of b to the source of a."""
    key = (a, b)
    hit = T._cache.get(key)
    if hit is not None:
        return hit
    for w in (a, b):
        for e in w.edges():
            if e not in T.surface.edges:
                raise WordError(f"word uses unknown edge {e!r}")
    res = _pairing(T, a, b)
    T._cache[key] = res
    return res


def _pairing(T: PairingTable, a: Word, b: Word) -> Ring:
    S = T.surface
    if a.is_identity() or b.is_identity():
        return Ring.zero()
    if len(b) > 1:
        # b = b' c with c the last letter: (a, b'c) = (a, c) + (a, b') c
        c = S.word([b.letters[-1]])
        rest = S.word(b.letters[:-1])
        return pairing(T, a, c) + pairing(T, a, rest) * Ring.of(c)
    e, sign = b.letters[0]
    if sign == -1:
        y = S.edge_word(e)
        return -(pairing(T, a, y) * Ring.of(y.inverse()))
    if len(a) == 1 and a.letters[0][1] == 1:
        return T.base[(a.letters[0][0], e)]
    # reduce the left argument through antisymmetry
    return -pairing(T, b, a).bar()


def arc_pairing_formula(S: CiliatedSurface, arc: Word, v: str, sigma_v: str, b: Word) -> Ring:
    """Closed form of (a_v, b) for a boundary arc a_v from v to sigma(v)."""
    one = Ring.of(Word.identity(v))
    ainv = Ring.of(arc.inverse())
    bb = Ring.of(b)
    out = Ring.zero()
    if b.source == v:
        out = out - one
    if b.source == sigma_v:
        out = out - ainv
    if b.target == v:
        out = out + bb
    if b.target == sigma_v:
        out = out + ainv * bb
    return out


def axiom_defects(T: PairingTable, a: Word, b: Word, c: Word | None = None) -> dict[str, int]:
    """Integer defects of the pairing axioms; all zero when they hold.

    endpoints: terms of (a, b) not running from the source of b to the source of a.
    antisymmetry: size of (b, a) + bar (a, b).
    product rule: size of (a, bc) - (a, c) - (a, b) c, for c composable before b.
    """
    S = T.surface
    ab = pairing(T, a, b)
    out = {
        "endpoints": sum(abs(n) for w, n in ab.items() if (w.source, w.target) != (b.source, a.source)),
        "antisymmetry": sum(abs(n) for _, n in (pairing(T, b, a) + ab.bar()).items()),
    }
    if c is not None:
        bc = compose(b, c)
        S.check_word(bc)
        diff = pairing(T, a, bc) - pairing(T, a, c) - ab * Ring.of(c)
        out["product rule"] = sum(abs(n) for _, n in diff.items())
    return out
