"""Text formats: surfaces, quilts, observable expressions and holonomy points.

Surface files (one directive per line, ``#`` starts a comment)::

    edge NAME OUT IN      # a disc with one edge; OUT and IN are fresh point names
    fuse P Q              # merge Q into P; half-edges at P come first
    rename OLD NEW        # rename a marked point

or, instead of a fusion script, the final cilia directly::

    edge NAME OUT IN      # endpoints are final marked points
    cilia V NAME.out NAME.in ...

Quilt files::

    domain NAME model KIND      # KIND as for --model
      <surface lines>
    end
    wall single D V
      named a|b|full|trivial|sl2r|borel      # or one or more: gen x1 x2 ...
    end
    wall pair D V D2 V2 oriented|anti-oriented
      gen x1 x2 ...                          # coordinates in g_D + g_D2
    end
    contract D V
    observable EXPR
    sampler NAME                # built-in constrained-point sampler
    expect-residual-dim N

Observable expressions use ``tr(WORD)``, ``hol(WORD)[i,j]``, numbers, ``+ - *``
and parentheses. Point files hold one edge per line as ``NAME: r1c1 r1c2 ; r2c1 r2c2``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .groupoid_core import (
    IN,
    OUT,
    CiliatedSurface,
    SurfaceError,
    WordError,
    disc,
    disjoint_union,
    from_cilia,
    fuse,
    rename_vertices,
)
from .lie_backend import (
    LieModel,
    ModelError,
    SubalgebraData,
    build_model,
    complex_borel,
    diagonal,
    full,
    manin_triple_sl2,
    sl2r,
    subalgebra_checks,
    trivial,
)
from .quasi_poisson import HolonomyPoint, Observable
from .quilt import ANTI_ORIENTED, ORIENTED, Domain, PairedWall, QuiltedSurface, SingletonWall, paired_model

DATA = Path(__file__).parent / "data"


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0, source: str = "<text>"):
        self.message, self.line, self.column, self.source = message, line, column, source
        super().__init__(f"{source}:{line}:{column}: {message}")


def _lines(text: str):
    for n, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if body.strip():
            yield n, body


def _col(raw: str, token: str) -> int:
    k = raw.find(token)
    return k + 1 if k >= 0 else 1


# --- surfaces -----------------------------------------------------------------------------


def _build_surface(entries: list[tuple[int, str]], source: str) -> CiliatedSurface:
    if not entries:
        raise ParseError("empty surface description", 1, 1, source)
    edges: dict[str, tuple[str, str]] = {}
    script: list[tuple[int, str, list[str]]] = []
    cilia: dict[str, list[tuple[str, str]]] = {}
    for n, raw in entries:
        tok = raw.split()
        kw = tok[0]
        if kw == "edge":
            if len(tok) != 4:
                raise ParseError("expected: edge NAME OUT IN", n, _col(raw, kw), source)
            if tok[1] in edges:
                raise ParseError(f"duplicate edge {tok[1]!r}", n, _col(raw, tok[1]), source)
            edges[tok[1]] = (tok[2], tok[3])
        elif kw in ("fuse", "rename"):
            if len(tok) != 3:
                raise ParseError(f"expected: {kw} A B", n, _col(raw, kw), source)
            script.append((n, kw, tok[1:]))
        elif kw == "cilia":
            if len(tok) < 3:
                raise ParseError("expected: cilia V EDGE.out|EDGE.in ...", n, _col(raw, kw), source)
            order = []
            for h in tok[2:]:
                e, _, end = h.rpartition(".")
                if end not in (OUT, IN) or not e:
                    raise ParseError(f"bad half-edge {h!r}", n, _col(raw, h), source)
                order.append((e, end))
            if tok[1] in cilia:
                raise ParseError(f"cilia for {tok[1]!r} given twice", n, _col(raw, tok[1]), source)
            cilia[tok[1]] = order
        else:
            raise ParseError(f"unknown directive {kw!r}", n, _col(raw, kw), source)
    if not edges:
        raise ParseError("surface has no edges", entries[0][0], 1, source)
    last = entries[-1][0]
    if cilia:
        if script:
            raise ParseError("use either cilia lines or a fusion script, not both", script[0][0], 1, source)
        try:
            return from_cilia(edges, cilia)
        except (SurfaceError, KeyError) as exc:
            raise ParseError(f"invalid cilia: {exc}", last, 1, source) from exc
    try:
        S = disjoint_union(*(disc(e, o, i) for e, (o, i) in edges.items()))
    except SurfaceError as exc:
        raise ParseError(str(exc), entries[0][0], 1, source) from exc
    for n, kw, (a, b) in script:
        try:
            if kw == "fuse":
                S = fuse(S, a, b)
            else:
                if a not in S.vertices or b in S.vertices:
                    raise SurfaceError(f"cannot rename {a} to {b}")
                S = rename_vertices(S, {a: b})
        except SurfaceError as exc:
            raise ParseError(str(exc), n, 1, source) from exc
    return S


def parse_surface(text: str, source: str = "<text>") -> CiliatedSurface:
    return _build_surface(list(_lines(text)), source)


def resolve_path(name: str, kind: str) -> Path:
    """A file path, or the name of a bundled data file."""
    p = Path(name)
    if p.exists():
        return p
    for cand in (DATA / kind / name, DATA / kind / f"{name}.txt"):
        if cand.exists():
            return cand
    raise FileNotFoundError(f"no {kind[:-1]} file or bundled {kind[:-1]} named {name!r}")


def load_surface(name: str) -> CiliatedSurface:
    p = resolve_path(name, "surfaces")
    return parse_surface(p.read_text(), str(p))


def bundled(kind: str) -> list[str]:
    return sorted(p.stem for p in (DATA / kind).glob("*.txt"))


# --- observable expressions ------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)|(?P<name>tr|hol)\b|(?P<op>[-+*()\[\],]))")


class _ExprParser:
    def __init__(self, text: str, surface: CiliatedSurface, n: int, line: int, source: str, offset: int = 0):
        self.text, self.S, self.n = text, surface, n
        self.pos, self.line, self.source, self.offset = 0, line, source, offset

    def error(self, msg: str, pos: int | None = None):
        return ParseError(msg, self.line, self.offset + (self.pos if pos is None else pos) + 1, self.source)

    def peek(self) -> str | None:
        m = _TOKEN.match(self.text, self.pos)
        if not m or m.end() == self.pos:
            rest = self.text[self.pos:].strip()
            return None if not rest else "?"
        return m.group("num") or m.group("name") or m.group("op")

    def take(self) -> str:
        m = _TOKEN.match(self.text, self.pos)
        if not m:
            raise self.error("unexpected character")
        self.pos = m.end()
        return m.group("num") or m.group("name") or m.group("op")

    def expect(self, tok: str) -> None:
        start = self.pos
        if self.peek() != tok:
            raise self.error(f"expected {tok!r}", start)
        self.take()

    def parse(self) -> Observable:
        out = self.expr()
        if self.peek() is not None:
            skip = len(self.text[self.pos:]) - len(self.text[self.pos:].lstrip())
            raise self.error("unexpected trailing input", self.pos + skip)
        return out

    def expr(self) -> Observable:
        acc = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self) -> Observable:
        acc = self.factor()
        while self.peek() == "*":
            self.take()
            acc = acc * self.factor()
        return acc

    def word(self):
        start = self.pos
        depth = self.text.find(")", self.pos)
        if depth < 0:
            raise self.error("unclosed word")
        text = self.text[self.pos:depth]
        try:
            w = self.S.word(text)
        except (WordError, KeyError) as exc:
            raise self.error(f"bad word {text.strip()!r}: {exc}", start) from exc
        self.pos = depth
        self.expect(")")
        return w

    def factor(self) -> Observable:
        start = self.pos
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of expression")
        if tok == "-":
            self.take()
            return -self.factor()
        if tok == "(":
            self.take()
            inner = self.expr()
            self.expect(")")
            return inner
        if tok == "tr":
            self.take()
            self.expect("(")
            return Observable.trace(self.word(), self.n)
        if tok == "hol":
            self.take()
            self.expect("(")
            w = self.word()
            self.expect("[")
            i = self.index()
            self.expect(",")
            j = self.index()
            self.expect("]")
            return Observable.entry(w, i, j)
        if tok not in ("?",) and tok[0].isdigit():
            self.take()
            return Observable.constant(float(tok))
        raise self.error("expected a number, tr(...), hol(...)[i,j] or '('", start)

    def index(self) -> int:
        start = self.pos
        tok = self.take()
        if not tok.isdigit() or int(tok) >= self.n:
            raise self.error(f"matrix index must be 0..{self.n - 1}", start)
        return int(tok)


def parse_observable(text: str, surface: CiliatedSurface, n: int, line: int = 1, source: str = "<expr>",
                     column_offset: int = 0) -> Observable:
    return _ExprParser(text, surface, n, line, source, column_offset).parse()


# --- points ---------------------------------------------------------------------------------


def parse_point(text: str, surface: CiliatedSurface, models, source: str = "<point>") -> HolonomyPoint:
    hol: dict[str, np.ndarray] = {}
    for n, raw in _lines(text):
        name, sep, body = raw.partition(":")
        name = name.strip()
        if not sep or name not in surface.edges:
            raise ParseError(f"expected 'EDGE: rows' with a known edge, got {name!r}", n, 1, source)
        try:
            rows = [[float(t) for t in r.split()] for r in body.split(";")]
            M = np.array(rows, dtype=float)
        except ValueError as exc:
            raise ParseError(f"bad number: {exc}", n, len(name) + 2, source) from exc
        model = models if isinstance(models, LieModel) else models[name]
        if M.shape != (model.n, model.n):
            raise ParseError(f"edge {name} needs a {model.n}x{model.n} matrix", n, len(name) + 2, source)
        hol[name] = M
    missing = set(surface.edges) - set(hol)
    if missing:
        raise ParseError(f"missing edges: {sorted(missing)}", 0, 0, source)
    return HolonomyPoint(surface, models, hol)


def format_point(x: HolonomyPoint) -> str:
    lines = []
    for e in x.surface.edge_names:
        M = x.hol[e]
        lines.append(f"{e}: " + " ; ".join(" ".join(repr(float(v)) for v in row) for row in M))
    return "\n".join(lines) + "\n"


# --- quilts ---------------------------------------------------------------------------------


@dataclass
class QuiltFile:
    quilt: QuiltedSurface
    observables: list[tuple[str, Observable]] = field(default_factory=list)
    sampler: str | None = None
    expected_residual_dim: int | None = None


def _named_sub(name: str, model: LieModel) -> SubalgebraData:
    if name in ("a", "b"):
        g, a, b = manin_triple_sl2()
        if model.d != g.d:
            raise ModelError(f"subalgebra {name!r} needs the sl2c-iwasawa model")
        return a if name == "a" else b
    table = {"full": full, "trivial": trivial, "sl2r": sl2r, "borel": complex_borel, "diagonal": diagonal}
    if name not in table:
        raise ModelError(f"unknown named subalgebra {name!r}")
    return table[name](model)


def parse_quilt(text: str, source: str = "<quilt>") -> QuiltFile:
    entries = list(_lines(text))
    if not entries:
        raise ParseError("empty quilt description", 1, 1, source)
    domains: list[Domain] = []
    singles: list[SingletonWall] = []
    pairs: list[PairedWall] = []
    contracted: list[tuple[str, str]] = []
    raw_obs: list[tuple[int, int, str]] = []
    sampler = None
    expect_dim = None
    k = 0

    def block(start: int) -> tuple[list[tuple[int, str]], int]:
        body = []
        j = start + 1
        while j < len(entries):
            if entries[j][1].split()[0] == "end":
                return body, j + 1
            body.append(entries[j])
            j += 1
        raise ParseError("block is missing 'end'", entries[start][0], 1, source)

    def model_of(name: str, n: int, raw: str) -> LieModel:
        for d in domains:
            if d.name == name:
                return d.model
        raise ParseError(f"unknown domain {name!r}", n, _col(raw, name), source)

    while k < len(entries):
        n, raw = entries[k]
        tok = raw.split()
        kw = tok[0]
        if kw == "domain":
            if len(tok) != 4 or tok[2] != "model":
                raise ParseError("expected: domain NAME model KIND", n, 1, source)
            try:
                model = build_model(tok[3])
            except (ModelError, ValueError) as exc:
                raise ParseError(str(exc), n, _col(raw, tok[3]), source) from exc
            body, k = block(k)
            domains.append(Domain(tok[1], _build_surface(body, source), model))
            continue
        if kw == "wall":
            body, nxt = block(k)
            if len(tok) == 4 and tok[1] == "single":
                parent = model_of(tok[2], n, raw)
                where = ((tok[2], tok[3]),)
            elif len(tok) == 7 and tok[1] == "pair":
                if tok[6] not in (ORIENTED, ANTI_ORIENTED):
                    raise ParseError("orientation must be oriented or anti-oriented", n, _col(raw, tok[6]), source)
                parent = paired_model(model_of(tok[2], n, raw), model_of(tok[4], n, raw), tok[6])
                where = ((tok[2], tok[3]), (tok[4], tok[5]))
            else:
                raise ParseError("expected: wall single D V  or  wall pair D V D2 V2 ORIENTATION", n, 1, source)
            gens: list[list[float]] = []
            sub = None
            for bn, braw in body:
                btok = braw.split()
                try:
                    if btok[0] == "gen":
                        vec = [float(t) for t in btok[1:]]
                        if len(vec) != parent.d:
                            raise ParseError(f"generator needs {parent.d} coordinates", bn, _col(braw, "gen"), source)
                        gens.append(vec)
                    elif btok[0] == "named" and len(btok) == 2:
                        sub = _named_sub(btok[1], parent)
                    else:
                        raise ParseError("expected 'gen ...' or 'named NAME'", bn, 1, source)
                except ModelError as exc:
                    raise ParseError(str(exc), bn, 1, source) from exc
                except ValueError as exc:
                    if isinstance(exc, ParseError):
                        raise
                    raise ParseError(f"bad number: {exc}", bn, 1, source) from exc
            if sub is None:
                try:
                    sub = subalgebra_checks(parent, gens) if gens else trivial(parent)
                except ModelError as exc:
                    raise ParseError(str(exc), n, 1, source) from exc
            elif gens:
                raise ParseError("use either gen lines or named, not both", n, 1, source)
            if len(where) == 1:
                singles.append(SingletonWall(where[0][0], where[0][1], sub))
            else:
                pairs.append(PairedWall(where[0], where[1], tok[6], sub))
            k = nxt
            continue
        if kw == "contract" and len(tok) == 3:
            contracted.append((tok[1], tok[2]))
        elif kw == "observable" and len(tok) >= 2:
            off = raw.index("observable") + len("observable")
            raw_obs.append((n, off, raw[off:]))
        elif kw == "sampler" and len(tok) == 2:
            sampler = tok[1]
        elif kw == "expect-residual-dim" and len(tok) == 2 and tok[1].isdigit():
            expect_dim = int(tok[1])
        else:
            raise ParseError(f"unknown or malformed directive {kw!r}", n, _col(raw, kw), source)
        k += 1
    if not domains:
        raise ParseError("quilt has no domains", entries[0][0], 1, source)
    Q = QuiltedSurface(domains, singles, pairs, contracted)
    obs = []
    sizes = {d.model.n for d in domains}
    for n, off, body in raw_obs:
        if len(sizes) != 1:
            raise ParseError("observables need all domains to use the same matrix size", n, 1, source)
        obs.append((body.strip(), parse_observable(body, Q.surface, next(iter(sizes)), n, source, off)))
    return QuiltFile(Q, obs, sampler, expect_dim)


def load_quilt(name: str) -> QuiltFile:
    p = resolve_path(name, "quilts")
    return parse_quilt(p.read_text(), str(p))
