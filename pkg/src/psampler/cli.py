"""``psampler`` command line.

Exit codes: 0 success, 1 usage error, 2 bad configuration or scene,
3 missing artifacts (grids or samples not built), 4 bad reference
(unknown or unbuilt camera).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels
from .config import RunConfig, load_config
from .errors import ConfigError, DegenerateDistribution, NoIntersection
from .geometry import compute_bounds
from .gridio import GridFormatError, write_grid_csv, write_heatmap
from .image_grid import interpolate_camera_grid
from .pipeline import (build_grids, camera_dump_name, load_camera_grid, loss_report,
                       read_rays, write_grid_set, write_points, write_samples)
from .sampler import build_tables, sample_rays
from .scene_grid import build_scene_grid
from .testbed import load_scene

EXIT_USAGE, EXIT_CONFIG, EXIT_MISSING, EXIT_REFERENCE = 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="TOML run configuration")
    src.add_argument("--scene", type=Path, help="scene JSON (defaults for everything else)")
    p.add_argument("--cameras", type=Path, help="camera rig JSON, overrides the scene's rig")
    p.add_argument("--out", type=Path, help="artifact directory (default: config output_dir)")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--threads", type=int, help="worker threads (env PS_SAMPLER_THREADS)")
    p.add_argument("--backend", choices=sorted(kernels.BACKENDS), help="kernel backend")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="psampler", description="Occlusion-aware image-space ray sampling.")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    grids = groups.add_parser("grids", help="scene and camera grids").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    b = grids.add_parser("build", parents=[common], help="build and dump all grids")
    b.add_argument("--no-view-dependency", action="store_true", help="skip transmittance weighting")
    b.add_argument("--step", type=int, default=0, help="training step the build belongs to")

    sample = groups.add_parser("sample", help="ray sampling").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    s = sample.add_parser("rays", parents=[common], help="sample a batch of rays from built grids")
    s.add_argument("--step", type=int, default=0)
    s.add_argument("--n-rays", type=int, default=1024)
    s.add_argument("--samples", type=Path, help="output CSV (default: <out>/samples.csv)")
    s.add_argument("--points", type=Path, help="ray point CSV (default: <out>/points.csv)")

    loss = groups.add_parser("loss", help="surface losses").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    e = loss.add_parser("eval", parents=[common], help="evaluate losses on sampled rays")
    e.add_argument("--samples", type=Path)
    e.add_argument("--points", type=Path)
    e.add_argument("--report", type=Path, help="also write the JSON report here")

    bench = groups.add_parser("bench", help="timings").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    bi = bench.add_parser("interp", parents=[common], help="time grid interpolation at F=1,2,4")
    bi.add_argument("--camera", type=int, default=0)
    bi.add_argument("--repeat", type=int, default=3, help="best-of repetitions per entry")
    bi.add_argument("--compare", action="store_true", help="time every available backend")

    export = groups.add_parser("export", help="grid visualizations").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    for kind, what in (("heatmap", "PNG of the (u, v) marginal"), ("csv", "full grid as CSV")):
        x = export.add_parser(kind, parents=[common], help=what)
        x.add_argument("--camera", type=int, required=True)
        x.add_argument("--output", type=Path, help="output file (default: <out>/camera_XXX.<ext>)")
    return parser


def _config(args) -> RunConfig:
    if args.config is not None:
        cfg = load_config(args.config)
    else:
        cfg = RunConfig(scene=args.scene)
    changes = {}
    if args.cameras is not None:
        changes["cameras"] = args.cameras
    if args.out is not None:
        changes["output_dir"] = args.out
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.threads is not None:
        changes["threads"] = args.threads
    if getattr(args, "no_view_dependency", False):
        changes["view_dependency"] = False
    return cfg.replace(**changes) if changes else cfg


def _camera_grids(cfg: RunConfig, n_cameras: int):
    out = cfg.output_dir
    grids = []
    for c in range(n_cameras):
        path = out / camera_dump_name(c)
        if not path.is_file():
            raise CliError(EXIT_MISSING, f"missing grid {path}; run `psampler grids build` first")
        grids.append(load_camera_grid(path, c))
    return grids


def cmd_build(args, cfg: RunConfig) -> int:
    scene = load_scene(cfg.scene, cfg.cameras)
    if scene.sdf is None:
        print("no SDF in scene; initializing from the boundary sphere")
    t0 = time.perf_counter()
    grids = build_grids(scene.sdf_or_init(), scene.boundary, scene.cameras, cfg, backend=args.backend)
    paths = write_grid_set(cfg.output_dir, grids)
    print(f"scene grid {'x'.join(map(str, grids.scene.resolution))}: "
          f"total mass {grids.scene.cell_prob.sum():.6g} -> {paths[0]}")
    for b, path in zip(grids.cameras, paths[1:]):
        print(f"camera {b.grid.camera_id:03d}: raw mass {b.raw_mass:.6g}, "
              f"built in {b.seconds:.3f} s -> {path}")
    print(f"step {args.step}: {len(paths)} grids in {time.perf_counter() - t0:.3f} s")
    return 0


def cmd_sample(args, cfg: RunConfig) -> int:
    if args.n_rays < 1:
        raise CliError(EXIT_USAGE, "--n-rays must be >= 1")
    if args.step < 0:
        raise CliError(EXIT_USAGE, "--step must be >= 0")
    scene = load_scene(cfg.scene, cfg.cameras)
    grids = _camera_grids(cfg, len(scene.cameras))
    tables = [build_tables(g) for g in grids]
    batch = sample_rays(scene.cameras, tables, args.n_rays, args.step, cfg.schedule(), cfg.s,
                        scene.boundary, cfg.seed, cfg.points_per_ray,
                        interpolate=cfg.interpolate_conditionals, backend=args.backend)
    samples = args.samples or cfg.output_dir / "samples.csv"
    points = args.points or cfg.output_dir / "points.csv"
    samples.parent.mkdir(parents=True, exist_ok=True)
    write_samples(samples, batch)
    write_points(points, batch)
    n_uniform = int(np.sum(batch.source == 1))
    print(f"{len(batch)} rays ({len(batch) - n_uniform} guided, {n_uniform} uniform, "
          f"{int(batch.is_background.sum())} background) -> {samples}, {points}")
    return 0


def cmd_loss(args, cfg: RunConfig) -> int:
    samples = args.samples or cfg.output_dir / "samples.csv"
    points = args.points or cfg.output_dir / "points.csv"
    for p in (samples, points):
        if not Path(p).is_file():
            raise CliError(EXIT_MISSING, f"missing {p}; run `psampler sample rays` first")
    scene = load_scene(cfg.scene, cfg.cameras)
    rays = read_rays(samples, points)
    if not len(rays.t):
        raise CliError(EXIT_MISSING, f"{samples} contains no rays")
    report = loss_report(scene.sdf_or_init(), rays, cfg)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.report is not None:
        args.report.write_text(text + "\n")
    print(text)
    return 0


def _best_time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cmd_bench(args, cfg: RunConfig) -> int:
    scene = load_scene(cfg.scene, cfg.cameras)
    if not 0 <= args.camera < len(scene.cameras):
        raise CliError(EXIT_REFERENCE, f"unknown camera id {args.camera}")
    cam = scene.cameras[args.camera]
    scene_grid = build_scene_grid(scene.sdf_or_init(), scene.boundary, cfg.scene_resolution, cfg.s)
    bounds = compute_bounds(cam, scene.boundary)
    backends = sorted(kernels.BACKENDS) if args.compare else [args.backend or kernels.BACKEND]
    report = {"camera": args.camera, "scene_resolution": list(cfg.scene_resolution),
              "camera_resolution": list(cfg.camera_resolution), "repeat": args.repeat, "backends": {}}
    for name in backends:
        times = {}
        for F in (1, 2, 4):
            times[F] = _best_time(lambda: interpolate_camera_grid(
                scene_grid, cam, bounds, cfg.camera_resolution, F, backend=name), args.repeat)
        ratio_42 = times[4] / times[2]
        report["backends"][name] = {
            "seconds": {f"F={F}": t for F, t in times.items()},
            "ratio_F2_F1": times[2] / times[1],
            "ratio_F4_F2": ratio_42,
            "cubic_growth": 4.0 <= ratio_42 <= 16.0,
        }
    print(json.dumps(report, indent=2))
    return 0


def cmd_export(args, cfg: RunConfig) -> int:
    scene = load_scene(cfg.scene, cfg.cameras)
    if not 0 <= args.camera < len(scene.cameras):
        raise CliError(EXIT_REFERENCE, f"unknown camera id {args.camera}")
    path = cfg.output_dir / camera_dump_name(args.camera)
    if not path.is_file():
        raise CliError(EXIT_REFERENCE, f"camera {args.camera} has no built grid at {path}")
    grid = load_camera_grid(path, args.camera)
    ext = "png" if args.action == "heatmap" else "csv"
    out = args.output or cfg.output_dir / f"camera_{args.camera:03d}.{ext}"
    if args.action == "heatmap":
        write_heatmap(out, grid.viewdep_prob)
    else:
        write_grid_csv(out, grid.viewdep_prob)
    print(f"wrote {out}")
    return 0


_COMMANDS = {("grids", "build"): cmd_build, ("sample", "rays"): cmd_sample,
             ("loss", "eval"): cmd_loss, ("bench", "interp"): cmd_bench,
             ("export", "heatmap"): cmd_export, ("export", "csv"): cmd_export}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        return _COMMANDS[(args.group, args.action)](args, cfg)
    except CliError as exc:
        print(f"psampler: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, NoIntersection, DegenerateDistribution, GridFormatError) as exc:
        print(f"psampler: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
