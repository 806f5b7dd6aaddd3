"""Command-line pipeline: inspect volumes, build phantoms, filter, extract, serve.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable file, bad
header, short payload). Diagnostics go to stderr; results go to the output
file or stdout. Output files are written atomically (temp file + rename),
so a failing run never leaves a partial artifact behind.

The ``SONOVIZ_LOG`` environment variable (debug/info/warning/error)
controls log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile

from .delaunay import stack_slices
from .errors import SonovizError
from .filters import gaussian_filter, median_filter
from .isosurface import extract_isosurface
from .mesh import export_obj, export_vtk_legacy
from .metaimage import ElementType, read_volume, write_volume
from .volume import Axis, ScalarVolume, add_noise, synth_sphere, value_range

log = logging.getLogger("sonoviz")

_DTYPES = {t.name.lower(): t for t in ElementType}


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


class _FilterAction(argparse.Action):
    """Collect --gaussian/--median occurrences in command-line order."""

    def __call__(self, parser, namespace, values, option_string=None):
        chain = list(getattr(namespace, "filter_chain", None) or [])
        kind = "gaussian" if option_string == "--gaussian" else "median"
        chain.append((kind, values))
        namespace.filter_chain = chain


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _add_filter_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--gaussian",
        metavar="SIGMA",
        type=_positive_float,
        action=_FilterAction,
        dest="filter_chain",
        help="apply a Gaussian blur (repeatable; order preserved)",
    )
    parser.add_argument(
        "--median",
        metavar="RADIUS",
        type=_positive_int,
        action=_FilterAction,
        dest="filter_chain",
        help="apply a median filter (repeatable; order preserved)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sonoviz", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_info = sub.add_parser("info", help="print volume metadata")
    p_info.add_argument("path")

    p_synth = sub.add_parser("synth", help="generate a synthetic phantom volume")
    p_synth.add_argument("--sphere", metavar="N", type=_positive_int, required=True,
                         help="cube extent; builds an N^3 ball phantom")
    p_synth.add_argument("--radius", type=_positive_float, required=True)
    p_synth.add_argument("--inside", type=float, default=1.0)
    p_synth.add_argument("--outside", type=float, default=0.0)
    p_synth.add_argument("--noise-sigma", type=float, default=0.0)
    p_synth.add_argument("--impulse-fraction", type=float, default=0.0)
    p_synth.add_argument("--impulse-value", type=float, default=0.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--dtype", choices=sorted(_DTYPES), default="float")
    p_synth.add_argument("-o", "--output", required=True)

    p_filter = sub.add_parser("filter", help="denoise a volume and write it back out")
    p_filter.add_argument("path")
    _add_filter_flags(p_filter)
    p_filter.add_argument("--dtype", choices=sorted(_DTYPES), default="float")
    p_filter.add_argument("--workers", type=_positive_int, default=1)
    p_filter.add_argument("-o", "--output", required=True)

    p_iso = sub.add_parser("isosurface", help="extract a marching-cubes surface")
    p_iso.add_argument("path")
    p_iso.add_argument("--iso", type=float, default=None,
                       help="threshold (default: midpoint of the value range)")
    _add_filter_flags(p_iso)
    p_iso.add_argument("--format", choices=("obj", "vtk"), default="obj")
    p_iso.add_argument("--workers", type=_positive_int, default=1)
    p_iso.add_argument("-o", "--output", required=True)

    p_del = sub.add_parser("delaunay", help="stacked per-slice Delaunay surface")
    p_del.add_argument("path")
    p_del.add_argument("--iso", type=float, default=None)
    _add_filter_flags(p_del)
    p_del.add_argument("--axis", choices=("x", "y", "z"), default="z")
    p_del.add_argument("--slice-step", type=_positive_int, default=1)
    p_del.add_argument("--point-step", type=_positive_int, default=1)
    p_del.add_argument("--max-edge", type=_positive_float, default=4.0)
    p_del.add_argument("--format", choices=("obj", "vtk"), default="obj")
    p_del.add_argument("--workers", type=_positive_int, default=1)
    p_del.add_argument("-o", "--output", required=True)

    p_serve = sub.add_parser("serve", help="run the interactive visualization service")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--data-dir", default="./sonoviz-data")

    return parser


def _write_atomic(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".sonoviz-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _read(path: str):
    with open(path, "rb") as handle:
        return read_volume(handle)


def _apply_chain(volume: ScalarVolume, chain, workers: int) -> ScalarVolume:
    for kind, value in chain or []:
        log.info("applying %s filter (%s)", kind, value)
        if kind == "gaussian":
            volume = gaussian_filter(volume, value, workers=workers)
        else:
            volume = median_filter(volume, value, workers=workers)
    return volume


def _pick_iso(volume: ScalarVolume, iso) -> float:
    if iso is not None:
        return iso
    lo, hi = value_range(volume)
    midpoint = (lo + hi) / 2.0
    log.info("no --iso given; using value-range midpoint %g", midpoint)
    return midpoint


def _export(mesh, fmt: str) -> bytes:
    text = export_obj(mesh) if fmt == "obj" else export_vtk_legacy(mesh)
    return text.encode("ascii")


def _cmd_info(args) -> int:
    header, volume = _read(args.path)
    lo, hi = value_range(volume)
    nx, ny, nz = volume.dims
    print(f"file: {args.path}")
    print(f"dims: {nx} x {ny} x {nz}")
    print(f"element type: {header.element_type.value}")
    print("spacing:", " ".join(str(s) for s in volume.spacing), "mm")
    print("origin:", " ".join(str(o) for o in volume.origin), "mm")
    print(f"value range: {lo:g} .. {hi:g}")
    if header.extra:
        print("extra keys:", ", ".join(key for key, _ in header.extra))
    return 0


def _cmd_synth(args) -> int:
    n = args.sphere
    center = ((n - 1) / 2.0,) * 3
    volume = synth_sphere((n, n, n), center, args.radius, args.inside, args.outside)
    if args.noise_sigma > 0 or args.impulse_fraction > 0:
        volume = add_noise(
            volume,
            seed=args.seed,
            sigma=args.noise_sigma,
            impulse_fraction=args.impulse_fraction,
            impulse_value=args.impulse_value,
        )
    encoded, clamped = write_volume(None, volume, _DTYPES[args.dtype])
    if clamped:
        print(f"warning: {clamped} voxels clamped to {args.dtype} range", file=sys.stderr)
    _write_atomic(args.output, encoded)
    return 0


def _cmd_filter(args) -> int:
    header, volume = _read(args.path)
    volume = _apply_chain(volume, args.filter_chain, args.workers)
    encoded, clamped = write_volume(header, volume, _DTYPES[args.dtype])
    if clamped:
        print(f"warning: {clamped} voxels clamped to {args.dtype} range", file=sys.stderr)
    _write_atomic(args.output, encoded)
    return 0


def _cmd_isosurface(args) -> int:
    _, volume = _read(args.path)
    volume = _apply_chain(volume, args.filter_chain, args.workers)
    mesh = extract_isosurface(volume, _pick_iso(volume, args.iso), workers=args.workers)
    log.info("extracted %d vertices, %d triangles", mesh.vertex_count, mesh.triangle_count)
    _write_atomic(args.output, _export(mesh, args.format))
    return 0


def _cmd_delaunay(args) -> int:
    _, volume = _read(args.path)
    volume = _apply_chain(volume, args.filter_chain, args.workers)
    mesh = stack_slices(
        volume,
        _pick_iso(volume, args.iso),
        Axis.from_name(args.axis),
        slice_step=args.slice_step,
        point_step=args.point_step,
        max_edge=args.max_edge,
        workers=args.workers,
    )
    log.info("stacked %d vertices, %d triangles", mesh.vertex_count, mesh.triangle_count)
    _write_atomic(args.output, _export(mesh, args.format))
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    serve(host=args.host, port=args.port, data_dir=args.data_dir)
    return 0


_COMMANDS = {
    "info": _cmd_info,
    "synth": _cmd_synth,
    "filter": _cmd_filter,
    "isosurface": _cmd_isosurface,
    "delaunay": _cmd_delaunay,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, os.environ.get("SONOVIZ_LOG", "warning").upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (SonovizError, OSError) as exc:
        print(f"sonoviz {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
