"""``plcerf`` command line: synth, cerf, tvecc, dist, distmat, tracks, validate.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 strict-mode
abort on a non-generic family.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cerf import (NonGenericFamily, compute_cerf_diagram, seed_search, tracking_graph,
                   tracking_json)
from .family import (FieldFormatError, TimeVaryingField, circular_path, generate_gaussians,
                     read_csv, read_raw, write_raw)
from .kernels import BACKEND
from .mesh import GridSpec, MeshError, SimplicialComplex, grid_complex, validate_manifold
from .svg import cerf_svg, heatmap_svg, tracks_svg
from .tvecc import UnboundedDistance, distance, distance_matrix, estimate_period, tvecc

log = logging.getLogger("plcerf")


class ConfigError(Exception):
    pass


def _write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class Run:
    """Collects timings and counts; writes ``manifest.json`` next to the outputs."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.timings = {}
        self.counts = {}
        self.inputs = {}
        self.extra = {}

    def stage(self, name):
        run = self

        class _Stage:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                run.timings[name] = round(time.perf_counter() - self.t0, 6)

        return _Stage()

    def add_input(self, path):
        for p in _companions(Path(path)):
            self.inputs[str(p)] = _sha256(p)

    def write(self, name: str, text: str) -> Path:
        path = self.out / name
        _write(path, text)
        return path

    def finish(self):
        config = {k: v for k, v in sorted(vars(self.args).items()) if k != "func"}
        manifest = {"tool": "plcerf", "version": __version__, "kernel_backend": BACKEND,
                    "command": self.args.command, "config": config, "inputs": self.inputs,
                    "timings": self.timings, "counts": self.counts, **self.extra}
        self.write("manifest.json", json.dumps(manifest, indent=1, sort_keys=True, default=str) + "\n")


def _companions(path: Path) -> list:
    if path.suffix in (".raw", ".json") and path.with_suffix(".raw").exists():
        return [path.with_suffix(".raw"), path.with_suffix(".json")]
    return [path]


def _grid_spec(args) -> GridSpec | None:
    if not getattr(args, "grid", None):
        return None
    periodic = args.periodic or [0] * len(args.grid)
    if len(periodic) != len(args.grid):
        raise ConfigError("--periodic needs one flag per grid axis")
    try:
        return GridSpec(tuple(args.grid), tuple(bool(p) for p in periodic))
    except MeshError as exc:
        raise ConfigError(str(exc)) from None


def _load_complex(args) -> SimplicialComplex | None:
    if getattr(args, "complex", None):
        return SimplicialComplex.from_json(Path(args.complex).read_text())
    spec = _grid_spec(args)
    return grid_complex(spec) if spec else None


def load_field(path, args, run: Run | None = None) -> TimeVaryingField:
    path = Path(path)
    if not path.exists() and not path.with_suffix(".raw").exists():
        raise ConfigError(f"input {path} does not exist")
    c = _load_complex(args)
    if path.suffix == ".csv":
        if c is None:
            raise ConfigError("CSV input needs --grid or --complex")
        field = read_csv(path, c)
    else:
        field = read_raw(path, c)
    if run is not None:
        run.add_input(path)
    window = getattr(args, "samples", None)
    if window:
        a, b = window
        if not 0 <= a < b <= field.n_times:
            raise ConfigError(f"--samples {a} {b} outside 0..{field.n_times}")
        field = TimeVaryingField(field.complex, field.values[:, a:b], field.times[a:b])
    return field


# -- commands -------------------------------------------------------------------------

PRESETS = {
    # two bumps orbiting in opposite directions plus a fixed smaller one that
    # breaks the half-period symmetry; 64x64 periodic grid, period 40
    "two-gaussian": dict(grid=[64, 64], periodic=[1, 1], sigma=4.0, timesteps=161, gaussian=[
        "orbit:32.3,31.6,14,40,0,1", "orbit:32.3,31.6,14,40,0,-1", "static:8,52@0.5"]),
}


def _parse_gaussian(text: str):
    """static:x,y[,z][@amp] or orbit:cx,cy,radius,period,phase,direction[@amp].

    ``period`` is in the same time units as ``--dt``.
    """
    kind, _, rest = text.partition(":")
    amp = 1.0
    if "@" in rest:
        rest, a = rest.split("@", 1)
        amp = float(a)
    nums = [float(x) for x in rest.split(",") if x]
    if kind == "static":
        return tuple(nums), amp
    if kind == "orbit" and len(nums) == 6:
        cx, cy, r, period, phase, direction = nums
        # path is evaluated on sample-unit times
        return circular_path((cx, cy), r, 1.0 / period, phase, int(np.sign(direction) or 1)), amp
    raise ValueError(text)


def cmd_synth(args, run: Run):
    if args.preset:
        for k, v in PRESETS[args.preset].items():
            if k in ("grid", "periodic", "gaussian") and getattr(args, k):
                continue
            if k in ("sigma", "timesteps") and getattr(args, k) is not None:
                continue
            setattr(args, k, v)
    args.sigma = 4.0 if args.sigma is None else args.sigma
    args.timesteps = 50 if args.timesteps is None else args.timesteps
    spec = _grid_spec(args)
    if spec is None:
        raise ConfigError("synth needs --grid")
    T = args.timesteps
    paths, amps = [], []
    try:
        for g in args.gaussian or []:
            p, a = _parse_gaussian(g)
            paths.append(p)
            amps.append(a)
    except ValueError as exc:
        raise ConfigError(f"invalid trajectory spec {exc}") from None
    if not paths:
        raise ConfigError("synth needs at least one --gaussian")
    with run.stage("generate"):
        field = generate_gaussians(spec, paths, args.sigma, amps,
                                   times=args.dt * np.arange(T, dtype=float))
        if args.noise > 0:
            rng = np.random.default_rng(args.seed_rng)
            field.values += args.noise * rng.standard_normal(field.values.shape)
    with run.stage("write"):
        raw, side = write_raw(field, run.out / args.name)
    run.counts.update(vertices=spec.vertex_count, timesteps=T)
    print(raw)


def _diagram(args, run):
    field = load_field(args.input, args, run)
    with run.stage("cerf"):
        dg = compute_cerf_diagram(field, strict=args.strict)
    run.counts.update(dg.summary())
    return field, dg


def cmd_cerf(args, run: Run):
    field, dg = _diagram(args, run)
    with run.stage("export"):
        run.write("arcs.csv", dg.arcs_csv(args.index_filter))
        run.write("crossings.csv", dg.crossings_csv())
        g = tracking_graph(dg)
        run.write("tracking.json", tracking_json(g))
        if args.plot:
            sel = None if args.index_filter is None else dg.filter_index(args.index_filter)
            run.write("cerf.svg", cerf_svg(dg, sel))
    run.counts["tracking_edges"] = len(g.edges)


def cmd_tvecc(args, run: Run):
    field, dg = _diagram(args, run)
    with run.stage("surface"):
        surf = tvecc(dg)
        lo, hi = surf.value_range()
        levels = np.linspace(lo, hi, args.s_samples)
        us = np.linspace(0.0, 1.0, args.t_samples)
        rows = ["t," + ",".join(f"s={s!r}" for s in levels.tolist())]
        for u in us.tolist():
            step = surf.at(u)
            rows.append(f"{float(surf.to_time(u))!r}," + ",".join(str(int(x)) for x in step(levels)))
        run.write("tvecc.csv", "\n".join(rows) + "\n")


def cmd_dist(args, run: Run):
    f = load_field(args.input, args, run)
    g = load_field(args.other, args, run)
    with run.stage("cerf"):
        df = compute_cerf_diagram(f, strict=args.strict)
        dg = compute_cerf_diagram(g, strict=args.strict)
    with run.stage("distance"):
        d = distance(df, dg, args.quadrature, args.n_t, args.s_range)
    run.extra["distance"] = d
    print(repr(d))


def cmd_distmat(args, run: Run):
    field, dg = _diagram(args, run)
    with run.stage("distmat"):
        M = distance_matrix(dg, args.window, args.shift, args.start, args.quadrature,
                            args.substeps, args.threads)
    step = float(field.times[1] - field.times[0])
    pe = estimate_period(M, step) if len(M.entries) >= 4 else None
    run.write("distmat.csv", M.to_csv())
    run.write("distmat.svg", heatmap_svg(M, f"window={args.window} shift={args.shift} "
                                            f"start={args.start}"))
    run.extra["period"] = None if pe is None or not pe.found else pe.period
    run.extra["band_profile"] = [] if pe is None else [float(x) for x in pe.profile]
    print("period:", "none" if pe is None or not pe.found else repr(pe.period))


def cmd_tracks(args, run: Run):
    field, dg = _diagram(args, run)
    g = tracking_graph(dg)
    index = dg.d if args.index is None else args.index
    try:
        before = seed_search(g, args.seed, args.radius, args.time, after=False, index=index)
        found = seed_search(g, args.seed, args.radius, args.time,
                            after=args.mode == "after", index=index)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    seen = {tuple(t.nodes) for t in before}
    groups = {"before": [t for t in found if tuple(t.nodes) in seen],
              "after": [t for t in found if tuple(t.nodes) not in seen]}
    grid = field.complex.grid
    rows = ["track,group,t,vertex,position,value"]
    n = 0
    for label in ("before", "after"):
        for tr in groups[label]:
            for t, v, val in tr.points:
                pos = " ".join(str(int(x)) for x in grid.coords(v)) if grid else ""
                rows.append(f"{n},{label},{t!r},{v},{pos},{val!r}")
            n += 1
    run.write("tracks.csv", "\n".join(rows) + "\n")
    run.counts.update(tracks_before=len(groups["before"]), tracks_after=len(groups["after"]))
    if args.plot and grid is not None and len(grid.dims) >= 2:
        run.write("tracks.svg", tracks_svg(field, args.time, {
            "before": ("#c0392b", groups["before"]), "after": ("#1f4e9c", groups["after"])}))
    print(n)


def cmd_validate(args, run: Run):
    c = _load_complex(args)
    if c is None:
        raise ConfigError("validate needs --grid or --complex")
    with run.stage("validate"):
        rep = validate_manifold(c, allow_boundary=not args.closed)
    out = rep.to_json()
    out["euler_characteristic"] = c.euler_characteristic()
    run.write("validation.json", json.dumps(out, indent=1, sort_keys=True) + "\n")
    print("valid" if rep.valid else f"invalid at {len(rep.failures)} vertices")
    return 0 if rep.valid else 3


# -- parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", default=".", help="directory for outputs and manifest")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--strict", action="store_true",
                        help="abort (exit 4) on degenerate states or unclassifiable crossings")
    common.add_argument("--seed-rng", type=int, default=0)
    common.add_argument("--grid", type=int, nargs="+", metavar="N")
    common.add_argument("--periodic", type=int, nargs="+", metavar="0|1")
    common.add_argument("--complex", help="complex JSON {d, vertex_count, maximal_simplices}")
    common.add_argument("-v", "--verbose", action="store_true")

    field_in = argparse.ArgumentParser(add_help=False)
    field_in.add_argument("input", help="field: .raw (with .json sidecar) or .csv")
    field_in.add_argument("--samples", type=int, nargs=2, metavar=("START", "STOP"),
                          help="use time samples START..STOP-1 only")

    p = argparse.ArgumentParser(prog="plcerf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"plcerf {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="write a moving-Gaussians field")
    s.add_argument("--name", default="field")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--timesteps", type=int, help="number of time samples (default 50)")
    s.add_argument("--dt", type=float, default=1.0)
    s.add_argument("--sigma", type=float, help="bump width in grid units (default 4)")
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--gaussian", action="append",
                   help="static:x,y[@amp] or orbit:cx,cy,radius,period,phase,dir[@amp]")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("cerf", parents=[common, field_in], help="Cerf diagram and tracking graph")
    s.add_argument("--plot", action="store_true")
    s.add_argument("--index-filter", type=int, help="export only arcs of this Morse index")
    s.set_defaults(func=cmd_cerf)

    s = sub.add_parser("tvecc", parents=[common, field_in], help="TV-ECC surface on a grid")
    s.add_argument("--s-samples", type=int, default=64)
    s.add_argument("--t-samples", type=int, default=64)
    s.set_defaults(func=cmd_tvecc)

    s = sub.add_parser("dist", parents=[common, field_in], help="distance between two families")
    s.add_argument("other")
    s.add_argument("--quadrature", choices=["exact", "sampled"], default="sampled")
    s.add_argument("--n-t", type=int)
    s.add_argument("--s-range", type=float, nargs=2, metavar=("LO", "HI"))
    s.set_defaults(func=cmd_dist)

    s = sub.add_parser("distmat", parents=[common, field_in], help="sliding-window distances")
    s.add_argument("--window", type=int, required=True)
    s.add_argument("--shift", type=int, default=1)
    s.add_argument("--start", type=int, default=0)
    s.add_argument("--quadrature", choices=["exact", "sampled"], default="sampled")
    s.add_argument("--substeps", type=int, default=8)
    s.set_defaults(func=cmd_distmat)

    s = sub.add_parser("tracks", parents=[common, field_in], help="seeded feature tracks")
    s.add_argument("--seed", type=float, nargs="+", required=True)
    s.add_argument("--radius", type=float, required=True)
    s.add_argument("--time", type=float, required=True)
    s.add_argument("--mode", choices=["before", "after"], default="before")
    s.add_argument("--index", type=int, help="Morse index of tracked features (default: maxima)")
    s.add_argument("--plot", action="store_true")
    s.set_defaults(func=cmd_tracks)

    s = sub.add_parser("validate", parents=[common], help="check a complex is a manifold")
    s.add_argument("--closed", action="store_true", help="reject boundary vertices")
    s.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        run = Run(args)
        code = args.func(args, run) or 0
        run.finish()
        return code
    except ConfigError as exc:
        print(f"plcerf: config error: {exc}", file=sys.stderr)
        return 2
    except NonGenericFamily as exc:
        print(f"plcerf: non-generic input: {exc}", file=sys.stderr)
        return 4
    except UnboundedDistance as exc:
        print(f"plcerf: config error: {exc}", file=sys.stderr)
        return 2
    except (FieldFormatError, MeshError, OSError, ValueError) as exc:
        print(f"plcerf: data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
