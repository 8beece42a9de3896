"""Command-line front end.

Exit codes: 0 when every residual is below tolerance, 1 when some check fails,
2 on usage, parse or validation errors.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .formats import ParseError, bundled, load_quilt, load_surface, parse_observable, parse_point, resolve_path
from .groupoid_core import SurfaceError, WordError, random_word, same_surface
from .intersection import axiom_defects, build_table, pairing
from .lie_backend import LieModel, ModelError, build_model
from .quasi_poisson import (
    HolonomyPoint,
    annulus_reference,
    bracket_FR,
    bracket_pairing,
    differential,
    fr_bivector,
    fusion_bivector_check,
    jacobiator,
    moment_check,
    moment_equivariance,
    random_observable,
    random_point,
    rho_phi_term,
    schouten_jacobiator,
    value,
)
from .quilt import (
    CheckResult,
    QuiltError,
    QuiltedSurface,
    bracket_invariance,
    invariance_residual,
    reduced_jacobiator,
    residual_gauge_algebra,
    residual_phi_term,
    run_scenario,
    validate_quilt,
)
from .scenarios import SCENARIOS, get_scenario
from .spin_network import bracket_symbolic

MODEL_ENV = "QPMODULI_MODEL"


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    model: str = "gl2"
    samples: int = 100
    tol: float = 1e-8
    seed: int = 0
    output: str = "text"

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise UsageError("--samples must be at least 1")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")

    def echo(self) -> str:
        parts = [f"{k}={v}" for k, v in self.inputs.items()]
        parts += [f"model={self.model}", f"samples={self.samples}", f"tol={self.tol:g}", f"seed={self.seed}"]
        return " ".join(parts)


def _header(cfg: RunConfig) -> list[str]:
    if cfg.output == "lines":
        return [f"version\t{__version__}", f"command\t{cfg.command}", f"config\t{cfg.echo()}"]
    return [f"qpmoduli {__version__}", f"command: {cfg.command}", f"config: {cfg.echo()}"]


def render(cfg: RunConfig, checks: list[CheckResult], notes: list[str] = ()) -> tuple[int, str]:
    lines = _header(cfg)
    for n in notes:
        lines.append(f"note\t{n}" if cfg.output == "lines" else f"note: {n}")
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        if cfg.output == "lines":
            lines.append(f"check\t{c.name}\t{c.residual:.3e}\t{c.tol:g}\t{status}\t{c.anchor}")
        else:
            lines.append(f"{status}  {c.name:<44s} max residual {c.residual:.3e}  (tol {c.tol:g})  [{c.anchor}]")
    ok = all(c.passed for c in checks)
    passed = sum(c.passed for c in checks)
    verdict = "PASS" if ok else "FAIL"
    lines.append(f"result\t{verdict}\t{passed}/{len(checks)}" if cfg.output == "lines"
                 else f"result: {verdict} ({passed}/{len(checks)} checks)")
    return (0 if ok else 1), "\n".join(lines) + "\n"


# --- suites -------------------------------------------------------------------------------


def _scale(*vals: float) -> float:
    return max(1.0, *(abs(v) for v in vals))


def _is_annulus(S) -> bool:
    # one loop edge whose incoming end comes first at the vertex
    if len(S.edges) != 1:
        return False
    (e,) = S.edge_names
    return S.cilia.get(S.edges[e][0]) == ((e, "in"), (e, "out"))


def quasi_poisson_suite(S, model: LieModel, samples: int, tol: float, seed: int) -> list[CheckResult]:
    """Every identity of the moduli-space bivector at random points with random observables."""
    rng = np.random.default_rng(seed)
    T = build_table(S)
    n = model.n
    worst: dict[str, float] = {}

    def record(name: str, r: float) -> None:
        worst[name] = max(worst.get(name, 0.0), float(r))

    defects = 0
    for _ in range(samples):
        a = random_word(S, rng, int(rng.integers(1, 4)))
        c = random_word(S, rng, int(rng.integers(1, 4)))
        b = random_word(S, rng, int(rng.integers(1, 4)), start=c.target)
        defects += sum(axiom_defects(T, a, b, c).values())
    record("pairing axioms (integer defects)", defects)
    heavy = min(samples, 20)
    for k in range(samples):
        x = random_point(S, model, rng)
        f, g, h = (random_observable(S, n, rng) for _ in range(3))
        fr = bracket_FR(f, g, x)
        pr = bracket_pairing(f, g, x, T)
        record("bracket_FR = bracket_pairing", abs(fr - pr) / _scale(fr))
        sym = bracket_symbolic(f, g, T, model).observable.evaluate(x)
        record("bracket_symbolic = bracket_pairing", abs(sym - pr) / _scale(pr))
        record("antisymmetry", abs(fr + bracket_FR(g, f, x)) / _scale(fr))
        gh = g * h
        leib = bracket_FR(f, gh, x) - bracket_FR(f, g, x) * value(h, x) - value(g, x) * bracket_FR(f, h, x)
        record("Leibniz rule", abs(leib) / _scale(bracket_FR(f, gh, x)))
        fus = fusion_bivector_check(x)
        record("fusion replay = direct bivector", max(fus.values()))
        record("moment identity", moment_check(x, f))
        gauge = {v: model.random_group(rng) for v in S.vertices}
        record("moment equivariance", moment_equivariance(x, gauge))
        if k < heavy:
            phi = rho_phi_term(f, g, h, x)
            scale = _scale(value(f, x), value(g, x), value(h, x)) ** 3
            record("Jacobiator = rho(phi), iterated brackets", abs(jacobiator(f, g, h, x, T) - phi) / scale)
            dfs = [differential(o, x) for o in (f, g, h)]
            record("Jacobiator = rho(phi), Schouten bracket", abs(schouten_jacobiator(*dfs, x) - phi) / scale)
    Pi = fr_bivector(random_point(S, model, rng))
    record("bivector antisymmetric", float(np.abs(Pi + Pi.T).max()))
    if _is_annulus(S):
        for _ in range(samples):
            x = random_point(S, model, rng)
            record("annulus bivector = 1/2 s e^R ^ e^L", float(np.abs(fr_bivector(x) - annulus_reference(x)).max()))
    anchors = {
        "pairing axioms (integer defects)": "homotopy intersection pairing axioms",
        "bracket_FR = bracket_pairing": "bivector from fusion vs intersection pairing",
        "bracket_symbolic = bracket_pairing": "symbolic bracket evaluated pointwise",
        "antisymmetry": "bracket is skew",
        "Leibniz rule": "bracket is a biderivation",
        "fusion replay = direct bivector": "fusion and multiple fusion",
        "moment identity": "group-valued moment map",
        "moment equivariance": "twisted equivariance of the moment map",
        "Jacobiator = rho(phi), iterated brackets": "quasi-Poisson identity",
        "Jacobiator = rho(phi), Schouten bracket": "quasi-Poisson identity",
        "bivector antisymmetric": "bivector field",
        "annulus bivector = 1/2 s e^R ^ e^L": "annulus example",
    }
    out = []
    for name, r in worst.items():
        t = 0.5 if name.startswith("pairing axioms") else tol
        out.append(CheckResult(name, r, t, anchors[name]))
    return out


def quilt_suite(qf, samples: int, tol: float, seed: int) -> tuple[list[CheckResult], list[str]]:
    Q: QuiltedSurface = qf.quilt
    rep = validate_quilt(Q)
    notes = [f"walls: {', '.join(w['wall'] + ' dim ' + str(w['dim']) for w in rep['walls'])}"]
    R = residual_gauge_algebra(Q)
    notes.append(f"residual gauge algebra dim {R.dim}")
    checks = [CheckResult("residual gauge algebra closes", R.closure_residual, tol, "residual gauge transformations")]
    if qf.expected_residual_dim is not None:
        checks.append(CheckResult(f"residual gauge algebra dim = {qf.expected_residual_dim}",
                                  float(abs(R.dim - qf.expected_residual_dim)), 0.5, "residual gauge transformations"))
    rng = np.random.default_rng(seed)
    observables = list(qf.observables)
    if qf.sampler is not None:
        if qf.sampler not in SCENARIOS:
            raise UsageError(f"unknown sampler {qf.sampler!r}; known: {', '.join(SCENARIOS)}")
        sc = get_scenario(qf.sampler)
        if not same_surface(sc.quilt.surface, Q.surface):
            raise UsageError(f"sampler {qf.sampler!r} does not fit this quilt's surfaces")
        pts = [HolonomyPoint(Q.surface, Q.models, dict(sc.sampler(rng).point.hol)) for _ in range(samples)]
        if not observables:
            observables = list(sc.invariants)
            notes.append(f"observables: built-in invariants of {qf.sampler}")
    elif Q.contracted:
        raise UsageError("contracted arcs need a constrained-point sampler ('sampler NAME')")
    else:
        pts = [Q.random_point(rng) for _ in range(samples)]
    if not observables:
        notes.append("no observables given; only structural checks ran")
        return checks, notes
    fs = [f for _, f in observables]
    checks.append(CheckResult("observables are wall-invariant",
                              max(invariance_residual(f, Q, x) for x in pts for f in fs), 1e-9, "invariant functions"))
    triples = [(i, j, k) for i in range(len(fs)) for j in range(i + 1, len(fs)) for k in range(j + 1, len(fs))]
    jac = 0.0
    for x in pts:
        for i, j, k in triples:
            J = reduced_jacobiator(fs[i], fs[j], fs[k], x)
            if Q.residual_vertices:
                J -= residual_phi_term(fs[i], fs[j], fs[k], Q, x)
            jac = max(jac, abs(J) / _scale(*(value(f, x) for f in (fs[i], fs[j], fs[k]))) ** 3)
    label = "Jacobiator = residual phi term" if Q.residual_vertices else "Jacobi identity on invariants"
    checks.append(CheckResult(label, jac, tol, "reduction by coisotropic walls"))
    binv = 0.0
    for x in pts[:10]:
        for i in range(len(fs)):
            for j in range(i + 1, len(fs)):
                binv = max(binv, bracket_invariance(fs[i], fs[j], Q, x, rng))
    checks.append(CheckResult("bracket outputs invariant", binv, tol, "brackets of invariants are invariant"))
    return checks, notes


# --- commands -------------------------------------------------------------------------------


def _model(name: str | None) -> tuple[str, LieModel]:
    name = name or os.environ.get(MODEL_ENV) or "gl2"
    return name, build_model(name)


def cmd_pairing(args) -> tuple[int, str]:
    S = load_surface(args.surface)
    T = build_table(S)
    P = pairing(T, S.word(args.word_a), S.word(args.word_b))
    return 0, f"{P}\n"


def cmd_verify_qp(args) -> tuple[int, str]:
    name, model = _model(args.model)
    cfg = RunConfig("verify quasi-poisson", {"surface": args.surface}, name, args.samples, args.tol, args.seed, args.format)
    S = load_surface(args.surface)
    return render(cfg, quasi_poisson_suite(S, model, cfg.samples, cfg.tol, cfg.seed))


def cmd_verify_quilt(args) -> tuple[int, str]:
    cfg = RunConfig("verify quilt", {"file": args.file}, "per-domain", args.samples, args.tol, args.seed, args.format)
    qf = load_quilt(args.file)
    checks, notes = quilt_suite(qf, cfg.samples, cfg.tol, cfg.seed)
    return render(cfg, checks, notes)


def cmd_bracket(args) -> tuple[int, str]:
    name, model = _model(args.model)
    S = load_surface(args.surface)
    f = parse_observable(args.f, S, model.n, source="--f")
    g = parse_observable(args.g, S, model.n, source="--g")
    T = build_table(S)
    res = bracket_symbolic(f, g, T, model)
    out = [f"qpmoduli {__version__}", f"config: surface={args.surface} model={name}",
           f"f = {f}", f"g = {g}", f"{{f, g}} = {res.observable}"]
    if args.at:
        p = Path(args.at)
        x = parse_point(p.read_text(), S, model, str(p))
        out.append(f"value at {args.at}: {res.evaluate(x):.12g}")
        out.append(f"check: pairing route {bracket_pairing(f, g, x, T):.12g}, FR route {bracket_FR(f, g, x):.12g}")
    return 0, "\n".join(out) + "\n"


def cmd_example(args) -> tuple[int, str]:
    if args.name not in SCENARIOS:
        raise UsageError(f"unknown example {args.name!r}; known: {', '.join(SCENARIOS)}")
    cfg = RunConfig(f"example {args.name}", {}, "built-in", args.samples, args.tol, args.seed, args.format)
    sc = get_scenario(args.name)
    return render(cfg, run_scenario(sc, cfg.samples, cfg.seed, cfg.tol), [sc.description])


def cmd_list(args) -> tuple[int, str]:
    lines = ["surfaces: " + " ".join(bundled("surfaces")), "quilts: " + " ".join(bundled("quilts")),
             "examples: " + " ".join(SCENARIOS)]
    return 0, "\n".join(lines) + "\n"


def _common(p: argparse.ArgumentParser, samples: int) -> None:
    p.add_argument("--samples", type=int, default=samples)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("text", "lines"), default="text")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qpmoduli", description="Quasi-Poisson structures on moduli of flat connections.")
    ap.add_argument("--version", action="version", version=f"qpmoduli {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pairing", help="homotopy intersection pairing of two words")
    p.add_argument("surface")
    p.add_argument("word_a")
    p.add_argument("word_b")
    p.set_defaults(run=cmd_pairing)

    v = sub.add_parser("verify", help="verification suites")
    vs = v.add_subparsers(dest="suite", required=True)
    q = vs.add_parser("quasi-poisson")
    q.add_argument("--surface", required=True)
    q.add_argument("--model", default=None, help="gl2|sl2|sl2c-iwasawa|abelian:d (default $QPMODULI_MODEL or gl2)")
    _common(q, 100)
    q.set_defaults(run=cmd_verify_qp)
    qq = vs.add_parser("quilt")
    qq.add_argument("--file", required=True)
    _common(qq, 20)
    qq.set_defaults(run=cmd_verify_quilt)

    b = sub.add_parser("bracket", help="symbolic bracket of two observables")
    b.add_argument("--surface", required=True)
    b.add_argument("--model", default=None)
    b.add_argument("--f", required=True)
    b.add_argument("--g", required=True)
    b.add_argument("--at", default=None, help="point file: one 'EDGE: row ; row' line per edge")
    b.set_defaults(run=cmd_bracket)

    e = sub.add_parser("example", help="run a built-in reduction scenario")
    e.add_argument("name")
    _common(e, 20)
    e.set_defaults(run=cmd_example)

    ls = sub.add_parser("list", help="bundled surfaces, quilts and examples")
    ls.set_defaults(run=cmd_list)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        code, text = args.run(args)
    except (ParseError, UsageError, ModelError, QuiltError, SurfaceError, WordError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
