"""Command-line interface.

Exit codes: 0 when every requested check passes, 1 when a verification
fails, 2 when the input is invalid (malformed file, violated precondition).
Reports are JSON on standard output; errors are JSON on standard error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import DualityError, OFusionError
from .frames import oblique_left_inverse
from .fusion import classify
from .generate import (
    InfeasibleKind,
    KINDS,
    random_fusion_frame,
    random_fusion_frame_on,
    random_kernel_operator,
    random_local_frames,
    random_partner_subspace,
    random_range_map,
    gaussian,
)
from .linalg import Field, Tolerance, direct_sum_complement_check, frobenius_norm, oblique_projector
from .oblique import (
    QOperator,
    canonical_oblique_dual,
    dual_from_left_inverse,
    equivalences_report,
    left_inverse_family,
    non_canonical_dual,
    project_dual_conversions,
    reconstruct,
    trivial_dual_q,
    verify_oblique_dual,
)
from .problem import ProblemError, ProblemFile, encode_vector
from .systems import (
    FrameSystem,
    associated_frame,
    construct_system_dual_local,
    construct_system_dual_standard_basis,
    coupling,
    factor_q,
    project_system,
    system_dual_check,
)

METHODS = ("canonical", "left-inverse", "trivial", "non-canonical", "system-local", "system-standard")
DIRECTIONS = ("oblique_to_dual", "oblique_to_dual_adjoint", "dual_to_oblique")

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


class InvalidInput(Exception):
    pass


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _emit(obj, stream=None):
    stream = stream or sys.stdout
    stream.write(json.dumps(obj, indent=2, default=_json_default) + "\n")


def _tol(args) -> Tolerance:
    return Tolerance.from_env(rank_rel_tol=args.rank_tol, eq_abs_tol=args.eq_tol)


def _weights(text: str | None, m: int):
    if text is None:
        return None
    try:
        w = [float(x) for x in text.split(",")]
    except ValueError:
        raise InvalidInput(f"--weights: cannot parse {text!r}") from None
    if len(w) != m:
        raise InvalidInput(f"--weights: expected {m} values, got {len(w)}")
    if any(not np.isfinite(x) or x <= 0 for x in w):
        raise InvalidInput("--weights: weights must be finite and strictly positive")
    return np.array(w)


def _write(problem: ProblemFile, out: str | None):
    if out:
        problem.dump(out)
    else:
        sys.stdout.write(problem.dumps())


def _vec(v, field):
    return encode_vector(v, field)


def _require(value, where: str):
    if value is None:
        raise ProblemError(where, "missing")
    return value


# ---------------------------------------------------------------- gen


def cmd_gen(args) -> int:
    field = Field(args.field)
    rng = np.random.default_rng(args.seed)
    tol = _tol(args)
    try:
        wff = random_fusion_frame(rng, args.dim, args.blocks, args.kind, field)
    except InfeasibleKind as e:
        raise InvalidInput(str(e)) from None
    W = wff.span
    V = W if args.same_space else random_partner_subspace(rng, W, args.tilt, tol)
    vff = random_fusion_frame_on(rng, V, args.blocks) if args.with_synthesis else None
    local = random_local_frames(rng, wff) if args.local_frames else None
    signals = [gaussian(rng, args.dim, field) for _ in range(args.signals)]
    ok, smin = direct_sum_complement_check(V, W, tol)
    cls = classify(wff, W, tol)
    meta = {"generator": "numpy.default_rng/PCG64", "seed": args.seed, "kind": args.kind,
            "min_singular": smin, "classification": cls.labels()}
    problem = ProblemFile.build(field, args.dim, wff, synthesis_space=V, synthesis=vff,
                                local_analysis=local, signals=signals, meta=meta)
    _write(problem, args.out)
    _emit({"min_singular": smin, "direct_sum": ok, "dim_W": W.dim, "classification": cls.labels()},
          sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- dualize


def cmd_dualize(args) -> int:
    tol = _tol(args)
    problem = ProblemFile.load(args.file)
    wff = problem.analysis(tol)
    V = problem.synthesis_space(tol)
    V = wff.span if V is None else V
    v = _weights(args.weights, len(wff))
    rng = np.random.default_rng(args.seed)
    field = problem.field
    local_a = local_s = None
    vff = q = None
    info: dict = {"method": args.method}

    if args.method == "canonical":
        vff, q = canonical_oblique_dual(wff, V, v, tol)
    elif args.method == "left-inverse":
        if args.form == "affine":
            B = args.b_scale * random_range_map(rng, V, wff.total_dim)
        elif args.form == "range":
            B = random_range_map(rng, V, wff.total_dim)
        else:
            B = random_kernel_operator(rng, wff)
        A = left_inverse_family(wff, V, B, args.form, tol)
        vff, q = dual_from_left_inverse(wff, A, v, tol)
        info["form"] = args.form
    elif args.method == "trivial":
        vff = problem.synthesis(tol)
        if vff is None:
            raise ProblemError("synthesis", "the trivial dual needs a synthesis family in the file")
        if v is not None:
            vff = vff.with_weights(v)
        q = trivial_dual_q(wff, vff, tol)
    elif args.method == "non-canonical":
        if v is not None and not np.allclose(v, wff.weights):
            raise InvalidInput("--weights: the non-canonical construction uses the analysis weights")
        i0 = None if args.i0 is None else args.i0 - 1
        res = non_canonical_dual(wff, V, i0, args.allow_zero_blocks, tol)
        vff, q = res.dual, res.q
        info["certificate"] = res.certificate
        info["i0"] = res.i0 + 1
    elif args.method in ("system-local", "system-standard"):
        local_a = problem.local_frames("analysis") or random_local_frames(rng, wff)
        ws = FrameSystem(wff, local_a, tol)
        if args.method == "system-local":
            B = args.b_scale * random_range_map(rng, V, wff.total_dim)
            A = left_inverse_family(wff, V, B, "affine", tol)
            vs = construct_system_dual_local(ws, A, v, tol=tol)
        else:
            wF = associated_frame(ws)
            B = args.b_scale * random_range_map(rng, V, len(wF))
            A = oblique_left_inverse(wF, V, wff.span, B, tol)
            vs = construct_system_dual_standard_basis(ws, A, v, V=V, tol=tol)
        vff, local_s = vs.fusion, vs.locals
        cf, cg = coupling(ws), coupling(vs)
        q = QOperator(cg.matrix @ cf.adjoint(), vff.block_dims, wff.block_dims, tol)
    out = ProblemFile.build(field, problem.dim, wff, synthesis_space=V, synthesis=vff, q=q,
                            local_analysis=local_a, local_synthesis=local_s,
                            signals=problem.signals() or None,
                            meta={**problem.meta, "dualize": info})
    _write(out, args.out)
    report = verify_oblique_dual(wff, vff, q, tol)
    _emit({"method": args.method, "residual": report.residual, "pass": report.passed,
           "structure": report.structure.value, **({"certificate": info["certificate"]}
                                                   if "certificate" in info else {})}, sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


# ---------------------------------------------------------------- verify


def _load_pair(problem: ProblemFile, tol: Tolerance):
    wff = problem.analysis(tol)
    vff = _require(problem.synthesis(tol), "synthesis")
    q = _require(problem.q(wff, vff, tol), "q_matrix")
    return wff, vff, q


def cmd_verify(args) -> int:
    tol = _tol(args)
    problem = ProblemFile.load(args.file)
    wff, vff, q = _load_pair(problem, tol)
    eq = equivalences_report(wff, vff, q, tol)
    eq_ok = all(eq.statements)
    if args.equivalences_only:
        _emit({"equivalences": eq.as_dict(), "unanimous": eq.unanimous})
        return EXIT_OK if eq_ok else EXIT_FAIL
    report = verify_oblique_dual(wff, vff, q, tol)
    verdicts = {
        "duality": {"pass": report.passed, "residual": report.residual},
        "adjoint_duality": {"pass": report.adjoint_passed, "residual": report.adjoint_residual},
        "equivalences": {"pass": eq_ok, "residual": max(eq.residuals)},
    }
    la, ls = problem.local_frames("analysis"), problem.local_frames("synthesis")
    if la is not None and ls is not None:
        sr = system_dual_check(FrameSystem(wff, la, tol), FrameSystem(vff, ls, tol), tol)
        verdicts["system"] = {"pass": sr.passed, "residual": sr.system.residual}
        verdicts["frame_level"] = {"pass": sr.frame_level, "residual": sr.frame_residual}
        verdicts["system_frame_agreement"] = {"pass": sr.agree, "residual": 0.0}
    target = problem.synthesis_space(tol)
    out = {
        "verdicts": verdicts,
        "classification": {"analysis": classify(wff, tol=tol).as_dict(),
                           "synthesis": classify(vff, tol=tol).as_dict()},
        "equivalences": eq.as_dict(),
        "diagnostics": {**report.diagnostics, "structure": report.structure.value,
                        "threshold": report.threshold,
                        "span_matches_synthesis_space": None if target is None else
                        bool(frobenius_norm(target.projector - vff.span.projector) <= tol.eq_abs_tol)},
    }
    _emit(out)
    return EXIT_OK if all(v["pass"] for v in verdicts.values()) else EXIT_FAIL


def cmd_equivalences(args) -> int:
    args.equivalences_only = True
    return cmd_verify(args)


# ---------------------------------------------------------------- reconstruct


def cmd_reconstruct(args) -> int:
    tol = _tol(args)
    problem = ProblemFile.load(args.file)
    wff, vff, q = _load_pair(problem, tol)
    signals = problem.signals()
    if args.random:
        rng = np.random.default_rng(args.seed)
        signals = [gaussian(rng, problem.dim, problem.field) for _ in range(args.random)]
    elif args.signal is not None:
        if not 0 <= args.signal < len(signals):
            raise InvalidInput(f"--signal: index {args.signal} out of range ({len(signals)} signals)")
        signals = [signals[args.signal]]
    if not signals:
        raise ProblemError("signals", "no signals in the file (use --random N)")
    field = problem.field
    rows, ok = [], True
    P = oblique_projector(vff.span, wff.span, tol)
    thr = tol.eq_abs_tol * (1 + frobenius_norm(P))
    for f in signals:
        r = reconstruct(wff, vff, q, f, tol)
        good = r.consistent and r.projector_error <= thr * (1 + np.linalg.norm(f))
        ok &= good
        rows.append({"f": _vec(f, field), "f_hat": _vec(r.f_hat, field),
                     "projector_error": r.projector_error,
                     "terms": [_vec(t, field) for t in r.terms],
                     "consistent": r.consistent, "pass": good})
    _emit({"reconstructions": rows})
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- factor / project


def cmd_factor(args) -> int:
    tol = _tol(args)
    problem = ProblemFile.load(args.file)
    wff, vff, q = _load_pair(problem, tol)
    F, G = factor_q(q, wff, vff, tol)
    recomposed = coupling(G).matrix @ coupling(F).adjoint()
    err = frobenius_norm(recomposed - q.matrix) / max(frobenius_norm(q.matrix), 1.0)
    out = problem.replace(local_frames={
        "analysis": [ProblemFile._encode_frame(f, problem.field) for f in F.locals],
        "synthesis": [ProblemFile._encode_frame(g, problem.field) for g in G.locals],
    })
    _write(out, args.out)
    _emit({"roundtrip_relative_error": err, "pass": err <= 1e-10,
           "sizes": list(F.sizes)}, sys.stderr)
    return EXIT_OK if err <= 1e-10 else EXIT_FAIL


def cmd_project(args) -> int:
    tol = _tol(args)
    problem = ProblemFile.load(args.file)
    wff, vff, q = _load_pair(problem, tol)
    V = problem.synthesis_space(tol)
    res = project_dual_conversions(wff, vff, q, args.direction, V=V, tol=tol)
    field = problem.field
    la, ls = problem.local_frames("analysis"), problem.local_frames("synthesis")
    new_la = new_ls = None
    if la is not None and ls is not None:
        if args.direction == "oblique_to_dual":
            new_la, new_ls = la, project_system(FrameSystem(vff, ls, tol), wff.span, tol=tol).locals
        elif args.direction == "oblique_to_dual_adjoint":
            new_la, new_ls = ls, project_system(FrameSystem(wff, la, tol), vff.span, tol=tol).locals
        else:
            new_la = la
            new_ls = project_system(FrameSystem(vff, ls, tol), V, along=wff.span, tol=tol).locals
    space = {"oblique_to_dual": V, "oblique_to_dual_adjoint": wff.span, "dual_to_oblique": V}[args.direction]
    out = ProblemFile.build(field, problem.dim, res.analysis, synthesis_space=space, synthesis=res.synthesis,
                            q=res.q, local_analysis=new_la, local_synthesis=new_ls,
                            signals=problem.signals() or None,
                            meta={**problem.meta, "project": args.direction})
    _write(out, args.out)
    _emit({"direction": args.direction, **res.report.as_dict()}, sys.stderr)
    return EXIT_OK if res.report.passed else EXIT_FAIL


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rank-tol", type=float, default=None, help="relative singular-value cut-off")
    common.add_argument("--eq-tol", type=float, default=None,
                        help="equality threshold (default: $OFUSION_EQ_TOL or 1e-8)")

    p = argparse.ArgumentParser(prog="ofusion", description="Oblique dual fusion frames on F^n.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a seeded problem file")
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--blocks", type=int, required=True)
    g.add_argument("--kind", choices=KINDS, default="random")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--field", choices=[f.value for f in Field], default="real")
    g.add_argument("--signals", type=int, default=3, help="number of random signals to include")
    g.add_argument("--tilt", type=float, default=1.0, help="maximal tilt of V away from W")
    g.add_argument("--same-space", action="store_true", help="use V = W")
    g.add_argument("--with-synthesis", action="store_true", help="include a random fusion frame for V")
    g.add_argument("--local-frames", action="store_true", help="include random local frames for W")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    d = sub.add_parser("dualize", parents=[common], help="construct a dual and write it into the file")
    d.add_argument("file")
    d.add_argument("--method", choices=METHODS, default="canonical")
    d.add_argument("--weights", help="comma-separated synthesis weights")
    d.add_argument("--seed", type=int, default=0, help="seed for random parameters")
    d.add_argument("--form", choices=("affine", "range", "kernel"), default="affine",
                   help="left-inverse parameterization")
    d.add_argument("--b-scale", type=float, default=1.0, help="size of the random free parameter")
    d.add_argument("--i0", type=int, help="block for the non-canonical construction (1-based)")
    d.add_argument("--allow-zero-blocks", action="store_true")
    d.add_argument("--out")
    d.set_defaults(func=cmd_dualize)

    v = sub.add_parser("verify", parents=[common], help="verify the dual pair in a file")
    v.add_argument("file")
    v.add_argument("--equivalences-only", action="store_true")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("equivalences", parents=[common], help="alias for verify --equivalences-only")
    e.add_argument("file")
    e.set_defaults(func=cmd_equivalences)

    r = sub.add_parser("reconstruct", parents=[common], help="blockwise reconstruction of signals")
    r.add_argument("file")
    r.add_argument("--signal", type=int, help="index of a stored signal (0-based)")
    r.add_argument("--random", type=int, default=0, help="use N random signals instead")
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_reconstruct)

    f = sub.add_parser("factor", parents=[common], help="factor Q through local frames")
    f.add_argument("file")
    f.add_argument("--out")
    f.set_defaults(func=cmd_factor)

    pr = sub.add_parser("project", parents=[common], help="convert between duals and oblique duals")
    pr.add_argument("file")
    pr.add_argument("--direction", choices=DIRECTIONS, required=True)
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_project)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK
    try:
        if args.command == "gen" and (args.dim < 1 or args.blocks < 1):
            raise InvalidInput("--dim and --blocks must be positive")
        return args.func(args)
    except DualityError as e:
        _emit({"error": str(e), "type": type(e).__name__, "residual": e.residual}, sys.stderr)
        return EXIT_FAIL
    except (OFusionError, InvalidInput, ValueError, OSError) as e:
        payload = {"error": str(e), "type": type(e).__name__}
        if getattr(e, "diagnostics", None):
            payload["diagnostics"] = e.diagnostics
        if getattr(e, "min_singular", None) is not None:
            payload["min_singular"] = e.min_singular
        _emit(payload, sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
