"""Anchored spin networks and the symbolic bracket of holonomy polynomials."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .groupoid_core import CiliatedSurface, Word, WordError, compose, free_reduce, parse_word_text
from .intersection import PairingTable, pairing
from .lie_backend import LieModel
from .quasi_poisson import Factor, Observable


class DiagramError(ValueError):
    pass


@dataclass(frozen=True)
class GraphDiagram:
    """A graph whose vertices all sit at marked points and whose edges map to groupoid words."""

    surface: CiliatedSurface
    edges: dict[str, tuple[str, str]]
    anchors: dict[str, str]
    image: dict[str, Word]

    def __post_init__(self) -> None:
        verts = {v for ends in self.edges.values() for v in ends}
        loose = verts - set(self.anchors)
        if loose:
            raise DiagramError(f"interior vertices are not supported: {sorted(loose)}")
        for v, p in self.anchors.items():
            if p not in self.surface.vertices:
                raise DiagramError(f"anchor {v} -> {p}: not a marked point")
        for e, (o, i) in self.edges.items():
            w = self.image[e]
            self.surface.check_word(w)
            if (w.source, w.target) != (self.anchors[o], self.anchors[i]):
                raise DiagramError(f"edge {e} maps to a word with wrong endpoints")

    def word(self, text: str) -> Word:
        """A word in the diagram's own edges, e.g. 'x y^-1'."""
        letters, base = parse_word_text(text)
        letters = list(free_reduce(letters))
        if not letters:
            if base is None:
                raise DiagramError("empty diagram word needs a basepoint")
            return Word((), base, base)
        for (e1, s1), (e2, s2) in zip(letters, letters[1:]):
            end2 = self.edges[e2][1] if s2 == 1 else self.edges[e2][0]
            start1 = self.edges[e1][0] if s1 == 1 else self.edges[e1][1]
            if end2 != start1:
                raise WordError(f"diagram letters {e1} and {e2} are not composable")
        e, s = letters[-1]
        src = self.edges[e][0] if s == 1 else self.edges[e][1]
        e, s = letters[0]
        tgt = self.edges[e][1] if s == 1 else self.edges[e][0]
        return Word(tuple(letters), src, tgt)


def identity_diagram(S: CiliatedSurface) -> GraphDiagram:
    return GraphDiagram(
        S,
        dict(S.edges),
        {v: v for v in S.vertices},
        {e: S.edge_word(e) for e in S.edges},
    )


def ev(diagram: GraphDiagram, f: Observable) -> Observable:
    """Pull a polynomial on the diagram's edge holonomies back to the surface."""
    return f.substitute(diagram.surface, diagram.image)


@dataclass
class SymbolicBracketResult:
    observable: Observable
    trace: list[tuple[Word, Word, str]] = field(default_factory=list)

    def evaluate(self, x) -> float:
        return self.observable.evaluate(x)


def _slots(f: Observable):
    for mono, c in f.terms.items():
        for k, (w, i, j) in enumerate(mono):
            yield w, i, j, mono[:k] + mono[k + 1 :], c


def bracket_symbolic(
    f: Observable,
    g: Observable,
    T: PairingTable,
    models: LieModel | Mapping[str, LieModel],
) -> SymbolicBracketResult:
    """Insert 1/2 (Ad_{hol_t} x 1) s for every term t of the pairing of two slots.

    (hol_a e_c)_{ij} (Ad_t s)^{cd} (hol_b e_d)_{kl}
        = sum_{pqr} K[p,q,r,l] (hol_{a t})_{ip} (hol_{t^-1})_{qj} (hol_b)_{kr}
    """
    terms: dict = {}
    trace = []
    for a, i, j, rest_f, cf in _slots(f):
        for b, k, l, rest_g, cg in _slots(g):
            P = pairing(T, a, b)
            if not P:
                continue
            trace.append((a, b, str(P)))
            model = models if isinstance(models, LieModel) else models[a.letters[0][0]]
            K = [(p, q, r, c) for p, q, r, m, c in model.K_entries if m == l]
            base = rest_f + rest_g
            for t, n in P.terms.items():
                at = compose(a, t)
                tinv = t.inverse()
                for p, q, r, kc in K:
                    mono = base + ((at, i, p), (tinv, q, j), (b, k, r))
                    coeff = 0.5 * n * kc * cf * cg
                    terms[mono] = terms.get(mono, 0.0) + coeff
    obs = Observable(terms)
    return SymbolicBracketResult(Observable({m: c for m, c in obs.terms.items() if abs(c) > 1e-15}), trace)


def bracket_quilted(f: Observable, g: Observable, quilt, samples: int = 3, seed: int = 0) -> SymbolicBracketResult:
    """Reduced bracket of invariant observables: the per-domain brackets, wall terms omitted."""
    from .quilt import is_invariant

    for name, h in (("f", f), ("g", g)):
        ok, res = is_invariant(h, quilt, samples=samples, seed=seed)
        if not ok:
            raise ValueError(f"{name} is not invariant under the wall gauge group (residual {res:.3g})")
    return bracket_symbolic(f, g, quilt.table, quilt.models)
