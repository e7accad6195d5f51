"""Command-line front end.

    semijulia lip --spec cantor
    semijulia cloud --spec koch --method backward --samples 20000 --seed 7 -o koch.txt
    semijulia render --spec cantor --window -0.1 1.1 -0.1 0.1 -o cantor.ppm
    semijulia perfectness --spec schottky:4 --floors 1e-2 1e-4
    semijulia selfsim --spec koch --method repelling --max-word-len 5
    semijulia escape --spec example4:18 --r-max 16
    semijulia examples list | dump NAME

``--spec`` takes a built-in example name (optionally ``name:N``) or a path to
a spec JSON file. Exit status: 0 ok, 1 bad input, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import examples as ex
from .perfectness import RoundAnnulus, perfectness_profile, profile_to_json_obj, separates
from .rational import DegreeCapError, RootFindingError, lipschitz_constant
from .semigroup import (
    SemigroupSpec,
    backward_orbit_cloud,
    forward_invariant_escape_region,
    render_cloud,
    repelling_cloud,
    self_similarity_defect,
)
from .sphere import PointCloud, SpherePoint

SUBCOMMANDS = ("lip", "cloud", "render", "perfectness", "selfsim", "escape", "examples")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def load_spec(source: str):
    """Return (SemigroupSpec, ExampleConfig or None)."""
    name, _, arg = source.partition(":")
    if name in ex.NAMES:
        try:
            n = int(arg) if arg else None
        except ValueError:
            raise InputError(f"bad example parameter {arg!r}") from None
        try:
            cfg = ex.get_example(name, n)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        return cfg.spec, cfg
    path = Path(source)
    if not path.is_file():
        raise InputError(f"spec {source!r} is neither an example name ({', '.join(ex.NAMES)}) nor a file")
    try:
        return SemigroupSpec.from_json_obj(json.loads(path.read_text())), None
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid spec file {source}: {exc}") from None


def _complex_arg(text: str) -> SpherePoint:
    try:
        return SpherePoint.of(text) if text.lower() in ("inf", "infinity") else SpherePoint(complex(text.replace(" ", "")))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text, output):
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _emit_bytes(data: bytes, output):
    if output is None or output == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(output).write_bytes(data)


def _add_cloud_flags(p):
    p.add_argument("--spec", help="example name (name or name:N) or spec JSON path")
    p.add_argument("--cloud", help="read the point cloud from a text file instead of computing it")
    p.add_argument("--method", choices=("repelling", "backward"), default="repelling")
    p.add_argument("--max-word-len", type=int, default=6)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--burn-in", type=int, default=30)
    p.add_argument("--seed", type=int, default=0, help="rng seed (default 0)")
    p.add_argument("--seed-point", type=_complex_arg, default=SpherePoint(0.5), help="start of the backward walk")
    p.add_argument("--threads", type=int, default=1)


def _need_spec(args):
    if not args.spec:
        raise InputError("--spec is required")
    return load_spec(args.spec)


def _get_cloud(args) -> PointCloud:
    if args.cloud:
        path = Path(args.cloud)
        if not path.is_file():
            raise InputError(f"cloud file {args.cloud!r} not found")
        try:
            return PointCloud.from_text(path.read_text())
        except ValueError as exc:
            raise InputError(str(exc)) from None
    spec, _ = _need_spec(args)
    return _compute_cloud(spec, args)


def _compute_cloud(spec, args) -> PointCloud:
    if args.method == "repelling":
        if args.max_word_len < 1:
            raise InputError("--max-word-len must be >= 1")
        return repelling_cloud(spec, args.max_word_len, n_jobs=args.threads).cloud
    if args.samples < 1 or args.burn_in < 0:
        raise InputError("--samples must be >= 1 and --burn-in >= 0")
    return backward_orbit_cloud(spec, args.seed_point, args.samples, args.burn_in, args.seed,
                                n_jobs=args.threads).cloud


def cmd_lip(args):
    spec, _ = _need_spec(args)
    rows = []
    for label, g in zip(spec.labels, spec.generators):
        rows.append({"label": label, "lip": lipschitz_constant(g, tol=args.tol)})
    _emit(_dumps({"generators": rows, "sup": max(r["lip"] for r in rows)}), args.output)


def cmd_cloud(args):
    spec, _ = _need_spec(args)
    cloud = _compute_cloud(spec, args)
    _emit(cloud.to_json() + "\n" if args.format == "json" else cloud.to_text(), args.output)


def cmd_render(args):
    cloud = _get_cloud(args)
    try:
        raster = render_cloud(cloud, args.window, args.width, args.height)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit_bytes(raster.to_pgm(), args.output)


def cmd_perfectness(args):
    cloud = _get_cloud(args)
    cfg = load_spec(args.spec)[1] if args.spec and not args.cloud else None
    try:
        profile = perfectness_profile(cloud, args.floors, centers=args.centers)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = {"points": len(cloud), "profile": profile_to_json_obj(profile)}
    if cfg is not None and "annuli" in cfg.expected:
        checks = []
        for rec in cfg.expected["annuli"]:
            a = rec["annulus"]
            ann = RoundAnnulus(complex(*a["center"]), a["r1"], a["r2"])
            checks.append({
                "n": rec["n"],
                "annulus": a,
                "modulus": ann.modulus,
                "closed_form": rec["modulus"],
                "separates": separates(ann.shrunk(args.margin), cloud),
            })
        out["prescribed_annuli"] = checks
    _emit(_dumps(out), args.output)


def cmd_selfsim(args):
    spec, _ = _need_spec(args)
    cloud = _get_cloud(args)
    _emit(_dumps({"defect": self_similarity_defect(spec, cloud), "points": len(cloud)}), args.output)


def cmd_escape(args):
    spec, _ = _need_spec(args)
    if args.r_max <= 1:
        raise InputError("--r-max must exceed 1")
    r = forward_invariant_escape_region(spec, args.r_max)
    _emit(_dumps({"radius": "absent" if r is None else r, "r_max": args.r_max}), args.output)


def cmd_examples(args):
    if args.action == "list":
        _emit("\n".join(ex.NAMES) + "\n", args.output)
        return
    if not args.name:
        raise InputError("examples dump needs a NAME")
    _, cfg = load_spec(args.name)
    _emit(_dumps(cfg.spec.to_json_obj()), args.output)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semijulia", description="Julia sets of rational semigroups and uniform perfectness.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("lip", help="spherical Lipschitz constants of the generators")
    p.add_argument("--spec", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_lip)

    p = sub.add_parser("cloud", help="approximate J(G) by a point cloud")
    _add_cloud_flags(p)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_cloud)

    p = sub.add_parser("render", help="rasterize a cloud to a binary greymap (P5)")
    _add_cloud_flags(p)
    p.add_argument("--window", type=float, nargs=4, metavar=("XMIN", "XMAX", "YMIN", "YMAX"),
                   default=(-2.0, 2.0, -2.0, 2.0))
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("perfectness", help="multi-scale separating-annulus profile")
    _add_cloud_flags(p)
    p.add_argument("--floors", type=float, nargs="+", default=[3.0 ** -k for k in range(4, 9)])
    p.add_argument("--centers", choices=("auto", "exhaustive", "neighbors", "local"), default="auto")
    p.add_argument("--margin", type=float, default=1e-8, help="radial shrink for prescribed annuli")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_perfectness)

    p = sub.add_parser("selfsim", help="backward self-similarity defect of a cloud")
    _add_cloud_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_selfsim)

    p = sub.add_parser("escape", help="certify a forward-invariant neighbourhood of infinity")
    p.add_argument("--spec", required=True)
    p.add_argument("--r-max", type=float, default=16.0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_escape)

    p = sub.add_parser("examples", help="list or dump built-in example specs")
    p.add_argument("action", choices=("list", "dump"))
    p.add_argument("name", nargs="?")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except InputError as exc:
        print(f"semijulia: error: {exc}", file=sys.stderr)
        return 1
    except (RootFindingError, DegreeCapError, ArithmeticError) as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, RootFindingError):
            diag["residual"] = exc.residual
            diag["context"] = {k: repr(v) for k, v in exc.context.items()}
        print(json.dumps(diag, sort_keys=True), file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"semijulia: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
