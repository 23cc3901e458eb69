"""Command line interface: ``gapsol <command> ...``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bands as bs
from .convergence import (
    DEFAULT_SWEEP,
    FULL_SWEEP,
    SolveSettings,
    export,
    prepare,
    run_convergence_study,
    solve_at,
    write_field,
)
from .errors import GapsolError, PartialReport
from .model import build_symmetric_example, load_config, loads_config, dumps_config, save_config
from .nls import build_envelope, decay_moments, effective_coefficients


def _vector(text):
    return [float(x) for x in text.split(",")]


def _write_json(doc, path):
    text = json.dumps(doc, indent=2)
    if path in (None, "-"):
        print(text)
    else:
        Path(path).write_text(text + "\n")


def cmd_model_validate(args):
    params = load_config(args.file)
    print(f"ok: d={params.d} N={params.N} gamma entries={len(params.gamma)}")


def cmd_model_example(args):
    params = build_symmetric_example(_vector(args.v), _vector(args.w),
                                     complex(args.alpha1), complex(args.alpha2), complex(args.alpha3))
    if args.output in (None, "-"):
        print(dumps_config(params), end="")
    else:
        save_config(params, args.output)


def cmd_bands(args):
    params = load_config(args.model)
    band = bs.sample_bands(params, args.box, args.n)
    print(f"note: bands are only sampled on [-{band.box}, {band.box}]^{params.d}", file=sys.stderr)
    header = [f"k{i + 1}" for i in range(params.d)] + [f"lambda{j + 1}" for j in range(params.N)]
    table = np.hstack([band.k_grid, band.bands])
    out = sys.stdout if args.output in (None, "-") else open(args.output, "w")
    try:
        out.write(",".join(header) + "\n")
        np.savetxt(out, table, delimiter=",", fmt="%.17g")
    finally:
        if out is not sys.stdout:
            out.close()
    gap = bs.find_gap(band)
    msg = "no gap found" if gap is None else f"gap ({gap.alpha:.12g}, {gap.beta:.12g}) above band {gap.lower_band}"
    print(msg, file=sys.stderr)


def cmd_edge(args):
    params = load_config(args.model)
    band = bs.sample_bands(params, args.box, args.n)
    gap = bs.find_gap(band)
    if gap is None:
        raise bs.NoGap(f"no spectral gap on the sampled box [-{band.box}, {band.box}]^{params.d}")
    edge = bs.locate_edge(params, gap, args.side, band)
    doc = edge.to_dict()
    doc["box"] = band.box
    doc["n_per_axis"] = band.n_per_axis
    doc["model"] = dumps_config(params)
    _write_json(doc, args.output)


def cmd_nls(args):
    doc = json.loads(Path(args.edge).read_text())
    edge = bs.SpectralEdge.from_dict(doc)
    params = loads_config(doc["model"], source=args.edge)
    nls = effective_coefficients(edge, params, args.omega1, args.flip_nonlinearity)
    env = build_envelope(nls, tol=args.tol)
    prof = env.profile
    out = {
        **nls.to_dict(),
        "a": env.scaling.a,
        "S": env.scaling.S.tolist(),
        "b": env.scaling.b,
        "u0": prof.u0,
        "C0": env.scaling.a * prof.u0,
        "decay_rate": prof.decay_rate,
        "moments": [decay_moments(env, s) for s in range(5)],
        "r": prof.r_samples.tolist(),
        "u": prof.u_values.tolist(),
    }
    _write_json(out, args.output)


def _settings(args):
    return SolveSettings(n=args.n, box_mult=args.box_mult, tol=args.tol,
                         max_iter=args.max_iter, relax=args.relax, dealias=args.dealias)


def cmd_solve(args):
    params = load_config(args.model)
    pipe = prepare(params, args.omega1, args.flip_nonlinearity, args.side)
    res = solve_at(pipe, args.eps, _settings(args))
    meta = {"eps": args.eps, "omega": res.record.omega, "sign_flip_applied": pipe.flip}
    out = Path(args.output)
    write_field(res.solution, out, meta)
    diag = {**res.diagnostics.to_dict(), **meta, "E_sup": res.record.E_sup,
            "im_part_sup": res.record.im_part_sup}
    _write_json(diag, out.with_suffix(".json"))
    print(f"converged in {res.diagnostics.iterations} iterations; "
          f"|B - B_app| = {res.record.E_sup:.3e}", file=sys.stderr)


def cmd_sweep(args):
    params = load_config(args.model)
    eps = FULL_SWEEP if args.full_sweep else tuple(_vector(args.eps))
    field_eps = tuple(_vector(args.field_eps)) if args.field_eps else ()
    status = 0
    try:
        report = run_convergence_study(params, eps, args.omega1, args.flip_nonlinearity,
                                       _settings(args), args.side, keep_fields=field_eps,
                                       workers=args.workers)
    except PartialReport as exc:
        report, status = exc.report, 1
        print(f"warning: {exc}", file=sys.stderr)
        field_eps = tuple(e for e in field_eps if e in report.fields)
    export(report, args.output, field_eps=field_eps)
    for r in report.records:
        print(f"eps={r.eps:<8g} E={r.E_sup:.6e} iters={r.iterations} im_sup={r.im_part_sup:.3e}")
    if report.slope_defined:
        print(f"slope p={report.slope:.4f}  r^2={report.r_squared:.6f}")
    else:
        print("slope undefined (fewer than two successful runs)")
    return status


def _add_solver_options(p):
    p.add_argument("--omega1", type=float, default=1.0)
    p.add_argument("--flip-nonlinearity", action="store_true",
                   help="negate the cubic coefficients (Gamma -> -Gamma)")
    p.add_argument("--side", choices=("lower", "upper"), default="lower")
    p.add_argument("--n", type=int, default=160)
    p.add_argument("--box-mult", type=float, default=3.0)
    p.add_argument("--relax", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--dealias", action="store_true", help="apply the 2/3 rule to N(B)")


def build_parser():
    parser = argparse.ArgumentParser(prog="gapsol", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    model = sub.add_parser("model", help="model files")
    msub = model.add_subparsers(dest="model_command", required=True)
    p = msub.add_parser("validate")
    p.add_argument("file")
    p.set_defaults(func=cmd_model_validate)
    p = msub.add_parser("example", help="write the symmetric four-mode example")
    p.add_argument("--alpha1", default="2")
    p.add_argument("--alpha2", default="1")
    p.add_argument("--alpha3", default="1")
    p.add_argument("--v", default="0,1")
    p.add_argument("--w", default="1,0")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_model_example)

    p = sub.add_parser("bands", help="sample the dispersion relation to CSV")
    p.add_argument("model")
    p.add_argument("--box", type=float, default=8.0)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bands)

    p = sub.add_parser("edge", help="locate a band edge")
    p.add_argument("model")
    p.add_argument("--side", choices=("lower", "upper"), default="lower")
    p.add_argument("--box", type=float, default=8.0)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_edge)

    p = sub.add_parser("nls", help="effective NLS and envelope from an edge file")
    p.add_argument("edge")
    p.add_argument("--omega1", type=float, default=1.0)
    p.add_argument("--flip-nonlinearity", action="store_true")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_nls)

    p = sub.add_parser("solve", help="Petviashvili solve at one eps")
    p.add_argument("model")
    p.add_argument("--eps", type=float, default=0.05)
    _add_solver_options(p)
    p.add_argument("-o", "--output", default="soliton.csv")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="convergence study over eps")
    p.add_argument("model")
    p.add_argument("--eps", default=",".join(str(e) for e in DEFAULT_SWEEP))
    p.add_argument("--full-sweep", action="store_true", help="use all six eps values")
    p.add_argument("--field-eps", default="", help="comma-separated eps values to dump fields for")
    p.add_argument("--workers", type=int, default=1)
    _add_solver_options(p)
    p.add_argument("-o", "--output", default="report")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        status = args.func(args)
    except GapsolError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
