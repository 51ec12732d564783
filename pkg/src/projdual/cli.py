"""Command-line front end: ``projdual <command> [options]``.

Exit codes: 0 success, 1 domain error, 2 usage error.  Diagnostics go to
stderr, one line each, prefixed with ``error:``.
"""
import argparse
import shlex
import sys

import numpy as np

from . import __version__, checks, cloudio
from .duality import DualCloud, dual_cloud, involution_residuals
from .errors import ProjDualError, ShapeSpecError
from .oracles import distance_to_surface
from .outlines import (EPS_CRIT, canonical_direction, fibonacci_directions, outline, outline_dual,
                       slice_dual)
from .projective import canonicalize_rows, directed_hausdorff, hausdorff
from .reconstruct import (ProjectiveMap, apply_map, assemble_dual_from_outlines, default_k,
                          dual_transform, envelope, random_conditioned)
from .surfaces import TAU_RANK, parse_shape, sample_grid

SHAPE_GRAMMAR = ("shape grammar: circle:r=R | ellipse:a=A,b=B | sphere:r=R | "
                 "ellipsoid:a=A,b=B,c=C | torus:R=R,r=r | plane | graph:cIJ=c,...[,w=W]")
DIR_GRAMMAR = "direction grammar: v=x,y[,z] (normalized on parse) or fibonacci:K"


class UsageError(Exception):
    pass


def _parse_vector(text):
    body = text.split("=", 1)[1] if text.startswith("v=") else text
    try:
        v = np.array([float(x) for x in body.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse direction {text!r}; {DIR_GRAMMAR}") from None
    if not np.linalg.norm(v) > 0:
        raise UsageError(f"direction {text!r} is zero")
    return v / np.linalg.norm(v)


def _directions(args, dim, required=True):
    dirs = [_parse_vector(d) for d in (args.dir or [])]
    if args.dirs:
        kind, _, count = args.dirs.partition(":")
        if kind != "fibonacci" or not count.isdigit() or int(count) < 1:
            raise UsageError(f"cannot parse --dirs {args.dirs!r}; {DIR_GRAMMAR}")
        dirs.extend(fibonacci_directions(int(count), dim))
    for v in dirs:
        if len(v) != dim:
            raise UsageError(f"direction has {len(v)} components, the shape lives in R^{dim}")
    if required and not dirs:
        raise UsageError(f"give at least one --dir or --dirs; {DIR_GRAMMAR}")
    return dirs


def _shape(args):
    try:
        return parse_shape(args.shape)
    except ShapeSpecError as exc:
        raise UsageError(f"{exc}; {SHAPE_GRAMMAR}") from None


def _meta(args, **extra):
    meta = {"shape": getattr(args, "shape", None) or "", "resolution": str(getattr(args, "res", ""))}
    for key in ("tol_crit", "tol_rank", "k_nn", "eps_slice", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            meta[key] = repr(val)
    meta.update({k: str(v) for k, v in extra.items()})
    return meta


def _write(args, cloud, meta, polylines=None):
    cf = cloudio.from_cloud(cloud, args.command_line, meta, timestamp=args.timestamp)
    if args.out:
        cloudio.write_text(args.out, cloudio.to_json(cf))
    if getattr(args, "svg", None):
        text = (cloudio.polylines_to_svg(polylines) if polylines is not None
                else cloudio.to_svg(cf))
        cloudio.write_text(args.svg, text)
    return cf


def _embed(points):
    pts = np.atleast_2d(points)
    return canonicalize_rows(np.concatenate([pts, np.ones((len(pts), 1))], axis=1))


# ---------------------------------------------------------------------------
# commands


def cmd_dual(args):
    s = _shape(args)
    samples = sample_grid(s, args.res, args.tol_rank)
    cloud = dual_cloud(s, samples)
    flagged = int(np.sum(samples.flagged))
    print(f"{s.spec}: {len(cloud)} dual points in P^{cloud.ambient_dim}, {flagged} flagged "
          f"(gauss rank < {s.param_dim})")
    _write(args, cloud, _meta(args))
    return 0


def cmd_outline(args):
    s = _shape(args)
    dirs = _directions(args, s.ambient_dim)
    coords, dir_rows, us, comps, polylines = [], [], [], [], []
    comp_id = 0
    for v in dirs:
        o = outline(s, v, args.res, args.tol_crit)
        pts = o.outline_points
        comp = np.zeros(len(pts), dtype=int)
        for c, closed in zip(o.components, o.closed):
            comp[c] = comp_id
            comp_id += 1
            if pts.shape[1] == 2:
                polylines.append((pts[c], closed))
        print(f"v={','.join(f'{x:.6g}' for x in o.direction.coords)}: {len(o)} outline points, "
              f"{len(o.components)} components, {int(np.sum(~o.admissible_flags))} inadmissible")
        coords.append(_embed(pts))
        dir_rows.append(np.repeat(o.direction.coords[None], len(pts), axis=0))
        us.append(o.critical_params)
        comps.append(comp)
    if args.svg and s.param_dim != 2:
        raise UsageError("--svg needs planar outlines (surfaces in R^3)")
    cloud = DualCloud(np.concatenate(coords), {"u": np.concatenate(us),
                                               "direction": np.concatenate(dir_rows),
                                               "component": np.concatenate(comps)})
    _write(args, cloud, _meta(args, content="outline points in frame coordinates"),
           polylines if s.param_dim == 2 else None)
    return 0


def _default_eps_slice(samples, cloud):
    return checks._dual_lipschitz_step(samples, cloud)


def cmd_slice(args):
    if args.in_path:
        cloud = cloudio.read_cloudfile(args.in_path).to_cloud()
        dirs = _directions(args, cloud.ambient_dim)
        if args.eps_slice is None:
            raise UsageError("--eps-slice is required when slicing a cloud file")
        parts = []
        for v in dirs:
            sl = slice_dual(cloud, v, args.eps_slice)
            print(f"v={','.join(f'{x:.6g}' for x in canonical_direction(v))}: {len(sl)} points "
                  f"within {args.eps_slice:g}")
            parts.append(sl)
        _write(args, DualCloud.concatenate(parts), _meta(args))
        return 0
    s = _shape(args)
    dirs = _directions(args, s.ambient_dim)
    samples = sample_grid(s, args.res, args.tol_rank)
    cloud = dual_cloud(s, samples)
    eps = _default_eps_slice(samples, cloud) if args.eps_slice is None else args.eps_slice
    parts = []
    for v in dirs:
        sl = slice_dual(cloud, v, eps)
        o = outline(s, v, args.res, args.tol_crit)
        exact = checks._exact_slice(o)
        od = outline_dual(o, drop_inadmissible=True)
        h = hausdorff(sl.coords, exact) if len(sl) else float("inf")
        print(f"v={','.join(f'{x:.6g}' for x in o.direction.coords)}: slice {len(sl)} points, "
              f"Hausdorff to dual of critical set {h:.3e}; outline dual one-sided "
              f"{directed_hausdorff(od.coords, exact):.3e}")
        parts.append(sl)
    _write(args, DualCloud.concatenate(parts), _meta(args, eps_slice=repr(eps)))
    return 0


def cmd_reconstruct(args):
    if args.in_path:
        cloud = cloudio.read_cloudfile(args.in_path).to_cloud()
        s = _shape(args) if args.shape else None
    else:
        s = _shape(args)
        dirs = _directions(args, s.ambient_dim)
        outs = [outline(s, v, args.res, args.tol_crit) for v in dirs]
        cloud = assemble_dual_from_outlines(outs)
    k = args.k_nn or default_k(cloud.ambient_dim - 1)
    rep = envelope(cloud, k)
    print(f"recovered {len(rep.recovered_points)} points from {len(cloud)} dual points "
          f"({rep.skipped} skipped, {rep.directions_used} directions)")
    if s is not None:
        d = distance_to_surface(s, rep.recovered_points)
        print(f"distance to {s.spec}: max {d.max():.3e}, median {np.median(d):.3e} "
              f"(diameter {s.diameter:g})")
    _write(args, DualCloud(_embed(rep.recovered_points)), _meta(args))
    return 0


def _parse_matrix(text, dim):
    try:
        rows = [[float(x) for x in r.split(",")] for r in text.split(";")]
        a = np.array(rows)
    except ValueError:
        raise UsageError("matrix grammar: comma-separated rows joined by ';'") from None
    if a.shape != (dim, dim):
        raise UsageError(f"matrix must be {dim}x{dim} for this cloud, got {a.shape}")
    return a


def cmd_transform(args):
    cf = cloudio.read_cloudfile(args.in_path)
    cloud = cf.to_cloud()
    dim = cloud.ambient_dim + 1
    if args.matrix:
        a = _parse_matrix(args.matrix, dim)
    elif args.seed is not None:
        a = random_conditioned(np.random.default_rng(args.seed), dim, 10.0)
    else:
        raise UsageError("give --matrix or --seed for a random condition-10 map")
    alpha = ProjectiveMap(a)
    if args.dual:
        alpha = dual_transform(alpha)
    out = apply_map(alpha, cloud)
    print(f"mapped {len(out)} points{' by the dual map' if args.dual else ''}")
    _write(args, out, dict(cf.meta, matrix=repr(alpha.matrix.tolist())))
    return 0


def cmd_verify(args):
    if args.check == "involution" and args.shape:
        s = _shape(args)
        r = involution_residuals(sample_grid(s, args.res, args.tol_rank))
        rel = r.max_residual / s.diameter
        ok = rel < 1e-7 and not r.singular.any()
        print(f"{s.spec}: max involution residual {r.max_residual:.3e} "
              f"({rel:.3e} of diameter), {int(r.skipped_rank.sum())} rank-deficient samples "
              f"skipped, {int(r.singular.sum())} singular -> {'PASS' if ok else 'FAIL'}")
        return 0 if ok else 1
    if args.check == "all":
        results = checks.run_all(seed=args.seed or 0)
    else:
        number = checks.NAMES[args.check]
        kwargs = {"seed": args.seed or 0} if number in (8, 10) else {}
        results = [checks.run_check(number, **kwargs)]
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def cmd_export(args):
    cf = cloudio.read_cloudfile(args.in_path)
    text = cloudio.export(cf, args.format)
    if args.out:
        cloudio.write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = argparse.ArgumentParser(prog="projdual", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"projdual {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, shape=True, res=64, dirs=False, out=True, svg=False):
        if shape:
            sp.add_argument("--shape", required=shape == "required",
                            help="shape spec, e.g. sphere:r=2 or torus:R=2,r=0.5")
        sp.add_argument("--res", type=int, default=res, help="grid resolution per axis")
        sp.add_argument("--tol-rank", type=float, default=TAU_RANK, help="Gauss rank threshold")
        sp.add_argument("--tol-crit", type=float, default=EPS_CRIT, help="critical-point tolerance")
        if dirs:
            sp.add_argument("--dir", action="append", help="direction v=x,y,z (repeatable)")
            sp.add_argument("--dirs", help="direction family, fibonacci:K")
        if out:
            sp.add_argument("--out", help="output CloudFile (JSON)")
            sp.add_argument("--timestamp", action="store_true", help="add a timestamp to meta")
        if svg:
            sp.add_argument("--svg", help="SVG plot of planar content")
        sp.add_argument("--seed", type=int, default=None, help="seed for randomized steps")

    sp = sub.add_parser("dual", help="dual cloud of a sampled shape")
    common(sp, shape="required", svg=True)
    sp.set_defaults(func=cmd_dual)

    sp = sub.add_parser("outline", help="outlines along directions")
    common(sp, shape="required", res=128, dirs=True, svg=True)
    sp.set_defaults(func=cmd_outline)

    sp = sub.add_parser("slice", help="slice a dual cloud by P([v,0]^perp)")
    common(sp, res=128, dirs=True)
    sp.add_argument("--in", dest="in_path", help="slice this CloudFile instead of a shape")
    sp.add_argument("--eps-slice", type=float, default=None, help="slice band half-width")
    sp.set_defaults(func=cmd_slice)

    sp = sub.add_parser("reconstruct", help="recover a shape from outline duals")
    common(sp, res=128, dirs=True)
    sp.add_argument("--k-nn", type=int, default=None, help="neighbours per tangent estimate")
    sp.add_argument("--in", dest="in_path", help="envelope of this dual CloudFile")
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("transform", help="apply a projective map to a CloudFile")
    sp.add_argument("--in", dest="in_path", required=True)
    sp.add_argument("--matrix", help="rows 'a,b,c;d,e,f;...'")
    sp.add_argument("--dual", action="store_true", help="apply (A^T)^-1 instead of A")
    sp.add_argument("--seed", type=int, default=None, help="random condition-10 map")
    sp.add_argument("--out")
    sp.add_argument("--timestamp", action="store_true")
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("verify", help="run acceptance checks")
    sp.add_argument("check", choices=["all"] + sorted(checks.NAMES))
    common(sp, out=False)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("export", help="convert a CloudFile to json, csv or svg")
    sp.add_argument("--in", dest="in_path", required=True)
    sp.add_argument("--format", choices=cloudio.FORMATS, required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_export)
    return p


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.command_line = "projdual " + " ".join(shlex.quote(a) for a in argv)
    if getattr(args, "svg", None) is None:
        args.svg = None
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ProjDualError, ValueError, OSError) as exc:
        name = type(exc).__name__
        print(f"error: {name}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
