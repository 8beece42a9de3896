"""Marked surfaces as ciliated graphs, groupoid words and the groupoid ring."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

Letter = tuple[str, int]
HalfEdge = tuple[str, str]  # (edge, "out" | "in")

OUT = "out"
IN = "in"


class SurfaceError(ValueError):
    pass


class WordError(ValueError):
    pass


def free_reduce(letters: Iterable[Letter]) -> tuple[Letter, ...]:
    """Leftmost free reduction; a single stack pass gives the normal form."""
    stack: list[Letter] = []
    for edge, sign in letters:
        if stack and stack[-1][0] == edge and stack[-1][1] == -sign:
            stack.pop()
        else:
            stack.append((edge, sign))
    return tuple(stack)


@dataclass(frozen=True, order=True)
class Word:
    """A freely reduced edge path.

    Letters are read right to left: the last letter is traversed first, so
    ``source`` is the start of the last letter and ``target`` the end of the first.
    """

    letters: tuple[Letter, ...]
    source: str
    target: str

    @staticmethod
    def identity(v: str) -> "Word":
        return Word((), v, v)

    def is_identity(self) -> bool:
        return not self.letters

    def __len__(self) -> int:
        return len(self.letters)

    def inverse(self) -> "Word":
        return Word(tuple((e, -s) for e, s in reversed(self.letters)), self.target, self.source)

    def edges(self) -> set[str]:
        return {e for e, _ in self.letters}

    def __str__(self) -> str:
        if not self.letters:
            return f"1@{self.source}"
        return " ".join(e if s == 1 else f"{e}^-1" for e, s in self.letters)


def compose(a: Word, b: Word) -> Word:
    """The product ab: first b, then a."""
    if b.target != a.source:
        raise WordError(f"cannot compose {a} after {b}: {b} ends at {b.target}, {a} starts at {a.source}")
    return Word(free_reduce(a.letters + b.letters), b.source, a.target)


@dataclass(frozen=True)
class CiliatedSurface:
    """Skeleton of a marked surface with a linear order of half-edges at each vertex.

    ``discs`` records the original endpoints of every edge, so the surface can be
    rebuilt from one two-point disc per edge by replaying ``fusion_log``.
    """

    vertices: tuple[str, ...]
    edges: Mapping[str, tuple[str, str]]
    cilia: Mapping[str, tuple[HalfEdge, ...]]
    fusion_log: tuple[tuple[str, str], ...] = ()
    discs: Mapping[str, tuple[str, str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        incident: dict[str, list[HalfEdge]] = {v: [] for v in self.vertices}
        for e, (o, i) in self.edges.items():
            if o not in incident or i not in incident:
                raise SurfaceError(f"edge {e} has an endpoint outside the vertex set")
            incident[o].append((e, OUT))
            incident[i].append((e, IN))
        for v in self.vertices:
            if not incident[v]:
                raise SurfaceError(f"vertex {v} has no incident half-edge")
            order = self.cilia.get(v)
            if order is None or sorted(order) != sorted(incident[v]):
                raise SurfaceError(f"cilia at {v} must order exactly its incident half-edges")
        if set(self.cilia) != set(self.vertices):
            raise SurfaceError("cilia given for unknown vertices")

    @property
    def edge_names(self) -> tuple[str, ...]:
        return tuple(self.edges)

    def out(self, e: str) -> str:
        return self.edges[e][0]

    def inn(self, e: str) -> str:
        return self.edges[e][1]

    def letter_ends(self, letter: Letter) -> tuple[str, str]:
        e, s = letter
        if e not in self.edges:
            raise WordError(f"unknown edge {e!r}")
        o, i = self.edges[e]
        return (o, i) if s == 1 else (i, o)

    def word(self, letters: Sequence[Letter] | str, basepoint: str | None = None) -> Word:
        """Build a reduced word; ``letters`` may be text like ``"a^-1 b"``."""
        if isinstance(letters, str):
            letters, text_base = parse_word_text(letters)
            basepoint = basepoint or text_base
        letters = tuple(letters)
        if not letters:
            if basepoint is None or basepoint not in self.vertices:
                raise WordError("empty word needs a basepoint vertex")
            return Word.identity(basepoint)
        for k in range(len(letters) - 1):
            src_k = self.letter_ends(letters[k])[0]
            tgt_next = self.letter_ends(letters[k + 1])[1]
            if src_k != tgt_next:
                raise WordError(f"letters {letters[k + 1]} then {letters[k]} are not composable")
        source = self.letter_ends(letters[-1])[0]
        target = self.letter_ends(letters[0])[1]
        reduced = free_reduce(letters)
        if not reduced:
            return Word.identity(source)
        return Word(reduced, source, target)

    def edge_word(self, e: str) -> Word:
        return self.word([(e, 1)])

    def check_word(self, w: Word) -> None:
        if w.is_identity():
            if w.source not in self.vertices:
                raise WordError(f"unknown basepoint {w.source}")
            return
        rebuilt = self.word(w.letters)
        if (rebuilt.source, rebuilt.target) != (w.source, w.target):
            raise WordError(f"word {w} has inconsistent endpoints")

    def incident(self, v: str) -> tuple[HalfEdge, ...]:
        return self.cilia[v]


def random_word(S: CiliatedSurface, rng, length: int, start: str | None = None) -> Word:
    """Reduced random walk of ``length`` letters along the skeleton (no backtracking)."""
    v = start if start is not None else S.vertices[int(rng.integers(len(S.vertices)))]
    letters: list[Letter] = []
    for _ in range(length):
        opts = [(e, 1) if end == OUT else (e, -1) for e, end in S.cilia[v]]
        if letters:
            back = (letters[0][0], -letters[0][1])
            opts = [o for o in opts if o != back] or opts
        e, sgn = opts[int(rng.integers(len(opts)))]
        letters.insert(0, (e, sgn))
        v = S.letter_ends((e, sgn))[1]
    if not letters:
        return Word.identity(v)
    return S.word(letters)


def parse_word_text(text: str) -> tuple[list[Letter], str | None]:
    """Parse ``"a b^-1 c^2"`` or ``"1@P"`` into letters (and a basepoint)."""
    text = text.strip()
    if text.startswith("1@"):
        return [], text[2:]
    letters: list[Letter] = []
    for tok in text.replace("*", " ").split():
        name, _, power = tok.partition("^")
        if not name:
            raise WordError(f"bad letter {tok!r}")
        try:
            p = int(power) if power else 1
        except ValueError as exc:
            raise WordError(f"bad exponent in {tok!r}") from exc
        if p == 0:
            continue
        letters.extend([(name, 1 if p > 0 else -1)] * abs(p))
    return letters, None


def disc(edge: str = "e", out: str = "P0", inn: str = "P1") -> CiliatedSurface:
    """Disc with two marked points and a single edge from ``out`` to ``inn``."""
    if out == inn:
        raise SurfaceError("disc endpoints must differ")
    return CiliatedSurface(
        vertices=(out, inn),
        edges={edge: (out, inn)},
        cilia={out: ((edge, OUT),), inn: ((edge, IN),)},
        fusion_log=(),
        discs={edge: (out, inn)},
    )


def disjoint_union(*surfaces: CiliatedSurface) -> CiliatedSurface:
    vertices: list[str] = []
    edges: dict[str, tuple[str, str]] = {}
    cilia: dict[str, tuple[HalfEdge, ...]] = {}
    log: list[tuple[str, str]] = []
    discs_: dict[str, tuple[str, str]] = {}
    for s in surfaces:
        if set(vertices) & set(s.vertices) or set(edges) & set(s.edges):
            raise SurfaceError("disjoint union needs distinct vertex and edge names")
        vertices.extend(s.vertices)
        edges.update(s.edges)
        cilia.update(s.cilia)
        log.extend(s.fusion_log)
        discs_.update(s.discs)
    return CiliatedSurface(tuple(vertices), edges, cilia, tuple(log), discs_)


def fuse(S: CiliatedSurface, P: str, Q: str) -> CiliatedSurface:
    """Merge Q into P; the half-edges at P come first in the new order."""
    if P == Q:
        raise SurfaceError("self-fusion undefined")
    for v in (P, Q):
        if v not in S.vertices:
            raise SurfaceError(f"unknown vertex {v}")
    edges = {e: (P if o == Q else o, P if i == Q else i) for e, (o, i) in S.edges.items()}
    cilia = {v: hs for v, hs in S.cilia.items() if v != Q}
    cilia[P] = tuple(S.cilia[P]) + tuple(S.cilia[Q])
    vertices = tuple(v for v in S.vertices if v != Q)
    return CiliatedSurface(vertices, edges, cilia, S.fusion_log + ((P, Q),), dict(S.discs))


def initial_discs(S: CiliatedSurface) -> CiliatedSurface:
    return disjoint_union(*(disc(e, o, i) for e, (o, i) in S.discs.items()))


def fusion_stages(S: CiliatedSurface) -> Iterator[tuple[CiliatedSurface, str, str]]:
    """Yield (surface before fusion, P, Q) along the fusion log."""
    cur = initial_discs(S)
    for P, Q in S.fusion_log:
        yield cur, P, Q
        cur = fuse(cur, P, Q)


def replay(S: CiliatedSurface) -> CiliatedSurface:
    cur = initial_discs(S)
    for P, Q in S.fusion_log:
        cur = fuse(cur, P, Q)
    return cur


def same_surface(S: CiliatedSurface, T: CiliatedSurface) -> bool:
    return (
        set(S.vertices) == set(T.vertices)
        and dict(S.edges) == dict(T.edges)
        and {v: tuple(h) for v, h in S.cilia.items()} == {v: tuple(h) for v, h in T.cilia.items()}
    )


def from_cilia(
    edges: Mapping[str, tuple[str, str]], cilia: Mapping[str, Sequence[HalfEdge]]
) -> CiliatedSurface:
    """Build a surface with prescribed cilia by fusing one disc per edge."""
    disc_ends = {e: (f"{e}.out", f"{e}.in") for e in edges}
    cur = disjoint_union(*(disc(e, *disc_ends[e]) for e in edges))
    renamed = {}
    for v, order in cilia.items():
        names = [disc_ends[e][0 if end == OUT else 1] for e, end in order]
        for q in names[1:]:
            cur = fuse(cur, names[0], q)
        renamed[names[0]] = v
    return rename_vertices(cur, renamed)


def rename_vertices(S: CiliatedSurface, mapping: Mapping[str, str]) -> CiliatedSurface:
    """Rename current vertices; fusion history is rewritten consistently."""
    def r(v: str) -> str:
        return mapping.get(v, v)

    # disc endpoints are renamed only when they survive as the final vertex name,
    # so the log stays replayable.
    discs_ = {e: (r(o), r(i)) for e, (o, i) in S.discs.items()}
    log = tuple((r(P), r(Q)) for P, Q in S.fusion_log)
    return CiliatedSurface(
        tuple(r(v) for v in S.vertices),
        {e: (r(o), r(i)) for e, (o, i) in S.edges.items()},
        {r(v): hs for v, hs in S.cilia.items()},
        log,
        discs_,
    )


def rename_edges(S: CiliatedSurface, mapping: Mapping[str, str]) -> CiliatedSurface:
    def r(e: str) -> str:
        return mapping.get(e, e)

    return CiliatedSurface(
        S.vertices,
        {r(e): ends for e, ends in S.edges.items()},
        {v: tuple((r(e), end) for e, end in hs) for v, hs in S.cilia.items()},
        S.fusion_log,
        {r(e): ends for e, ends in S.discs.items()},
    )


def prefixed(S: CiliatedSurface, prefix: str) -> CiliatedSurface:
    """Copy of S with every vertex and edge name prefixed (for disjoint unions)."""
    vmap = {v: prefix + v for v in S.vertices}
    for e, (o, i) in S.discs.items():
        vmap.setdefault(o, prefix + o)
        vmap.setdefault(i, prefix + i)
    emap = {e: prefix + e for e in S.edges}
    T = rename_edges(S, emap)
    return CiliatedSurface(
        tuple(vmap[v] for v in T.vertices),
        {e: (vmap[o], vmap[i]) for e, (o, i) in T.edges.items()},
        {vmap[v]: hs for v, hs in T.cilia.items()},
        tuple((vmap[P], vmap[Q]) for P, Q in T.fusion_log),
        {e: (vmap[o], vmap[i]) for e, (o, i) in T.discs.items()},
    )


def sub_surface(S: CiliatedSurface, keep: Iterable[str]) -> CiliatedSurface:
    """Surface spanned by a subset of edges, with cilia restricted."""
    keep = set(keep)
    edges = {e: S.edges[e] for e in S.edges if e in keep}
    cilia = {}
    for v in S.vertices:
        order = tuple(h for h in S.cilia[v] if h[0] in keep)
        if order:
            cilia[v] = order
    return from_cilia(edges, cilia)


# --- boundary walking ---------------------------------------------------------


def _next_half_edge(S: CiliatedSurface, leave: HalfEdge) -> tuple[Letter, str, HalfEdge, bool]:
    """Traverse the edge of ``leave``; return letter, arrival vertex, next half-edge,
    and whether the corner passed at arrival is the marked one."""
    e, end = leave
    if end == OUT:
        letter, arrive, w = (e, 1), (e, IN), S.inn(e)
    else:
        letter, arrive, w = (e, -1), (e, OUT), S.out(e)
    order = S.cilia[w]
    idx = order.index(arrive)
    marked = idx == len(order) - 1
    return letter, w, order[(idx + 1) % len(order)], marked


@dataclass(frozen=True)
class BoundaryStructure:
    sigma: Mapping[str, str]
    arcs: Mapping[str, Word]

    def tau(self, g: Mapping[str, object]) -> dict[str, object]:
        return {v: g[self.sigma[v]] for v in self.sigma}


def boundary_structure(S: CiliatedSurface) -> BoundaryStructure:
    """Walk the boundary from each marked point to the next one.

    Leaving v along its first half-edge, at each arrival we turn to the next
    half-edge in the cyclic order; we stop when the corner passed is the marked
    corner (last half-edge to first half-edge) of the arrival vertex.
    """
    sigma: dict[str, str] = {}
    arcs: dict[str, Word] = {}
    limit = 2 * len(S.edges) + 2
    for v in S.vertices:
        leave = S.cilia[v][0]
        letters: list[Letter] = []
        for _ in range(limit):
            letter, w, leave, marked = _next_half_edge(S, leave)
            letters.append(letter)
            if marked:
                break
        else:
            raise SurfaceError(f"boundary walk from {v} does not return to a marked corner")
        sigma[v] = w
        arcs[v] = S.word(list(reversed(letters)))
    if sorted(sigma.values()) != sorted(S.vertices):
        raise SurfaceError("boundary walk did not produce a permutation")
    return BoundaryStructure(sigma, arcs)


def boundary_cycles(S: CiliatedSurface) -> list[tuple[HalfEdge, ...]]:
    """All boundary components, as cycles of half-edges left along the walk."""
    seen: set[HalfEdge] = set()
    cycles = []
    for v in S.vertices:
        for h in S.cilia[v]:
            if h in seen:
                continue
            cyc = []
            cur = h
            while cur not in seen:
                seen.add(cur)
                cyc.append(cur)
                _, _, cur, _ = _next_half_edge(S, cur)
            cycles.append(tuple(cyc))
    return cycles


def components(S: CiliatedSurface) -> list[set[str]]:
    parent = {v: v for v in S.vertices}

    def find(v: str) -> str:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for o, i in S.edges.values():
        parent[find(o)] = find(i)
    groups: dict[str, set[str]] = {}
    for v in S.vertices:
        groups.setdefault(find(v), set()).add(v)
    return list(groups.values())


def topology(S: CiliatedSurface) -> dict[str, int]:
    """Genus and boundary count, assuming S is connected."""
    b = len(boundary_cycles(S))
    chi = len(S.vertices) - len(S.edges)
    g2 = 2 - chi - b
    return {"genus": g2 // 2, "boundaries": b, "euler": chi}


# --- groupoid ring ------------------------------------------------------------


class GroupoidRingElement:
    """Finite integer combination of groupoid words."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Word, int] | None = None):
        self.terms: dict[Word, int] = {w: c for w, c in (terms or {}).items() if c != 0}

    @staticmethod
    def of(w: Word, n: int = 1) -> "GroupoidRingElement":
        return GroupoidRingElement({w: n})

    @staticmethod
    def zero() -> "GroupoidRingElement":
        return GroupoidRingElement()

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GroupoidRingElement) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "GroupoidRingElement") -> "GroupoidRingElement":
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return GroupoidRingElement(out)

    def __neg__(self) -> "GroupoidRingElement":
        return GroupoidRingElement({w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "GroupoidRingElement") -> "GroupoidRingElement":
        return self + (-other)

    def scale(self, n: int) -> "GroupoidRingElement":
        return GroupoidRingElement({w: n * c for w, c in self.terms.items()})

    def __rmul__(self, n: int) -> "GroupoidRingElement":
        return self.scale(n)

    def __mul__(self, other: "GroupoidRingElement | int") -> "GroupoidRingElement":
        if isinstance(other, int):
            return self.scale(other)
        return partial_product(self, other)

    def bar(self) -> "GroupoidRingElement":
        return GroupoidRingElement({w.inverse(): c for w, c in self.terms.items()})

    def items(self) -> list[tuple[Word, int]]:
        return sorted(self.terms.items())

    def __repr__(self) -> str:
        return f"GroupoidRingElement({self})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for w, c in self.items():
            sign = "-" if c < 0 else "+"
            mag = "" if abs(c) == 1 else f"{abs(c)}*"
            parts.append(f"{sign} {mag}[{w}]")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else text


def add(x: GroupoidRingElement, y: GroupoidRingElement) -> GroupoidRingElement:
    return x + y


def scale(x: GroupoidRingElement, n: int) -> GroupoidRingElement:
    return x.scale(n)


def bar(x: GroupoidRingElement) -> GroupoidRingElement:
    return x.bar()


def partial_product(x: GroupoidRingElement, y: GroupoidRingElement) -> GroupoidRingElement:
    out: dict[Word, int] = {}
    for a, m in x.terms.items():
        for b, n in y.terms.items():
            if b.target != a.source:
                raise WordError(f"incomposable terms in product: [{a}] after [{b}]")
            w = compose(a, b)
            out[w] = out.get(w, 0) + m * n
    return GroupoidRingElement(out)
