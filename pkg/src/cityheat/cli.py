"""Command-line operator surface.

Subcommands: encode, simulate, chain, diff, validate. Exit codes: 0 success,
1 usage, 2 configuration, 3 compute failure, 4 validation tolerance failure.
Heavy modules are imported after argument parsing so --threads can size the
compute thread pool before the JIT runtime starts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_COMPUTE = 3
EXIT_TOLERANCE = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="cityheat",
                     description="2.5D Monte Carlo urban surface temperatures")
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode GeoJSON footprints into maps")
    enc.add_argument("--geojson", required=True)
    enc.add_argument("--cell-size-m", type=float, required=True)
    enc.add_argument("--width-px", type=int, required=True)
    enc.add_argument("--height-px", type=int, required=True)
    enc.add_argument("--origin-m", type=float, nargs=2, default=(0.0, 0.0))
    enc.add_argument("--materials", help="material database CSV")
    enc.add_argument("--ground", default="Asphalt", help="ground material name")
    enc.add_argument("--initial-k", type=float, default=288.15)
    enc.add_argument("--out", required=True, help="output .hm25 path")
    enc.add_argument("--quiet", action="store_true")

    for name, extra in (("simulate", ()), ("chain", ("timestamps",)),
                        ("diff", ("overrides",))):
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--spp", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--out")
        p.add_argument("--quiet", action="store_true")
        if "timestamps" in extra:
            p.add_argument("--timestamps", required=True,
                           help="comma-separated ISO datetimes (scenario-local)")
        if "overrides" in extra:
            p.add_argument("--override-a", default="",
                           help="e.g. facade_main=Concrete[,roof=Slate]")
            p.add_argument("--override-b", default="",
                           help="e.g. facade_main=Limestone")

    val = sub.add_parser("validate", help="run oracle comparison suites")
    val.add_argument("--suite", required=True,
                     choices=["conduction", "sdf", "solar", "convergence", "null"])
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--threads", type=int)
    val.add_argument("--out")
    val.add_argument("--quiet", action="store_true")
    return parser


def _resolve_threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        return args.threads
    env = os.environ.get("HEATMAT_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            print(f"error: HEATMAT_THREADS={env!r} is not an integer",
                  file=sys.stderr)
            sys.exit(EXIT_CONFIG)
    return 0


def _atomic_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write(path: Path, writer) -> None:
    """Run writer(tmp_path), then atomically move the result into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_inputs(scn, threads: int):
    """MapSet + database from a parsed ScenarioFile."""
    from .encoder import encode_city, load_geojson
    from .geometry import GridSpec
    from .mapset import MapSet
    from .materials import default_database, MaterialDatabase
    from .scenario import ConfigError

    if scn.config.materials_csv:
        database = MaterialDatabase.from_csv(scn.resolve(scn.config.materials_csv))
    else:
        database = default_database()
    scn.config.threads = threads
    if scn.mapset_path:
        mapset = MapSet.load(scn.resolve(scn.mapset_path))
    else:
        footprints, rejected = load_geojson(scn.resolve(scn.geojson_path), database)
        if rejected:
            raise ConfigError([f"building {b}: {why}" for b, why in rejected])
        grid = GridSpec(**scn.grid)
        mapset, _, _ = encode_city(footprints, grid,
                                   ground_material=database.lookup(
                                       scn.config.ground_material).id)
    return mapset, database


def _write_heatmap(out_dir: Path, stem: str, grid, temperature, pgm_range,
                   stats: dict | None = None) -> None:
    import io

    import numpy as np

    from .mapset import write_hm25, write_pgm

    def hm(tmp):
        write_hm25(tmp, grid, {"temperature_K":
                               np.asarray(temperature, dtype=np.float32)})
    _atomic_write(out_dir / f"{stem}.hm25", hm)

    buf = io.StringIO()
    write_pgm_to = out_dir / f"{stem}.pgm"

    def pgm(tmp):
        write_pgm(np.nan_to_num(temperature, nan=pgm_range[0]), tmp, pgm_range)
    _atomic_write(write_pgm_to, pgm)
    _atomic_bytes(out_dir / f"{stem}.pgm.json", json.dumps(
        {"kelvin_window": list(pgm_range),
         "note": "pixel 0 maps to window low, 65535 to window high"},
        indent=2).encode())
    del buf
    if stats is not None:
        _atomic_bytes(out_dir / "stats.json",
                      json.dumps(stats, indent=2, sort_keys=True).encode())


def _write_profile(out_dir: Path, mapset, temperature, line_px) -> None:
    import numpy as np

    x0, y0, x1, y1 = line_px
    n = max(2, int(np.hypot(x1 - x0, y1 - y0)) * 2 + 1)
    ts = np.linspace(0.0, 1.0, n)
    rows = []
    h, w = temperature.shape
    for t in ts:
        px = x0 + (x1 - x0) * t
        py = y0 + (y1 - y0) * t
        c0 = min(max(int(np.floor(px)), 0), w - 1)
        r0 = min(max(int(np.floor(py)), 0), h - 1)
        c1 = min(c0 + 1, w - 1)
        r1 = min(r0 + 1, h - 1)
        fx = min(max(px - c0, 0.0), 1.0)
        fy = min(max(py - r0, 0.0), 1.0)
        v = (temperature[r0, c0] * (1 - fx) * (1 - fy)
             + temperature[r0, c1] * fx * (1 - fy)
             + temperature[r1, c0] * (1 - fx) * fy
             + temperature[r1, c1] * fx * fy)
        x_m = mapset.grid.origin_x + (px + 0.5) * mapset.grid.cell_size
        y_m = mapset.grid.origin_y + (py + 0.5) * mapset.grid.cell_size
        rows.append(f"{px:.3f},{py:.3f},{x_m:.3f},{y_m:.3f},{v:.6f}")
    body = "px,py,x_m,y_m,temperature_k\n" + "\n".join(rows) + "\n"
    _atomic_bytes(out_dir / "profile.csv", body.encode())


def _parse_override(text: str) -> dict:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise ValueError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def cmd_encode(args) -> int:
    from .encoder import EncodingError, encode_city, load_geojson
    from .geometry import GridSpec
    from .materials import MaterialDatabase, default_database

    database = MaterialDatabase.from_csv(args.materials) if args.materials \
        else default_database()
    grid = GridSpec(origin_x=args.origin_m[0], origin_y=args.origin_m[1],
                    cell_size=args.cell_size_m, width=args.width_px,
                    height=args.height_px)
    footprints, rejected = load_geojson(args.geojson, database)
    for fid, why in rejected:
        print(f"rejected building {fid}: {why}", file=sys.stderr)
    try:
        mapset, segments, report = encode_city(
            footprints, grid,
            ground_material=database.lookup(args.ground).id,
            initial_temperature_k=args.initial_k)
    except EncodingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    _atomic_write(Path(args.out), mapset.save)
    if not args.quiet:
        import numpy as np
        ids = mapset.building_id
        print(f"wrote {args.out}: {grid.width}x{grid.height} px at "
              f"{grid.cell_size} m/px")
        print(f"  buildings: {len(footprints)} ({int((ids > 0).sum())} cells), "
              f"facade segments: {len(segments)}")
        print(f"  clipped footprints: {report.clipped_footprints}, "
              f"corner flags: {len(report.flagged_cells)}, "
              f"rejected: {len(rejected)}")
        print(f"  height range: {mapset.height_m.max():.1f} m, "
              f"sdf max: {np.max(mapset.sdf_m):.1f} m")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .scenario import load_scenario
    from .transport import simulate

    scn = load_scenario(args.scenario)
    if args.seed is not None:
        scn.config.seed = args.seed
    if args.spp is not None:
        scn.config.spp = args.spp
    scn.config.validate()
    mapset, database = _load_inputs(scn, _resolve_threads(args))
    out_dir = Path(args.out or scn.output_dir)

    result = simulate(mapset, scn.config, database)
    stats = result.stats()
    stats["seed"] = scn.config.seed
    stats["spp"] = scn.config.spp
    _write_heatmap(out_dir, "heatmap", mapset.grid, result.temperature,
                   scn.pgm_range_k, stats)
    if scn.profile_line_px:
        _write_profile(out_dir, mapset, result.temperature, scn.profile_line_px)
    if not args.quiet:
        for w in result.warnings:
            print(f"warning: {w}", file=sys.stderr)
        print(f"simulated {mapset.grid.width}x{mapset.grid.height} px, "
              f"{scn.config.spp} spp, seed {scn.config.seed}: "
              f"mean {stats['mean_temperature_k']:.2f} K, "
              f"discards {stats['discard_fraction']:.2%}, "
              f"{stats['elapsed_s']:.1f} s")
        print(f"wrote {out_dir}/heatmap.hm25")
    return EXIT_OK


def cmd_chain(args) -> int:
    from datetime import datetime

    from .scenario import load_scenario
    from .transport import chain_simulate

    scn = load_scenario(args.scenario)
    if args.seed is not None:
        scn.config.seed = args.seed
    if args.spp is not None:
        scn.config.spp = args.spp
    scn.config.validate()
    timestamps = [datetime.fromisoformat(t.strip())
                  for t in args.timestamps.split(",") if t.strip()]
    mapset, database = _load_inputs(scn, _resolve_threads(args))
    out_dir = Path(args.out or scn.output_dir)

    labels = []

    def report(i, when, result):
        label = when.strftime("%Y%m%dT%H%M")
        labels.append(label)
        _write_heatmap(out_dir, f"heatmap_{label}", mapset.grid,
                       result.temperature, scn.pgm_range_k)
        if not args.quiet:
            import numpy as np
            print(f"  [{i + 1}/{len(timestamps)}] {when.isoformat()}: "
                  f"mean {np.nanmean(result.temperature):.2f} K")

    results = chain_simulate(mapset, scn.config, timestamps, database,
                             progress=report)
    summary = {
        "timestamps": [t.isoformat() for t in timestamps],
        "files": [f"heatmap_{label}.hm25" for label in labels],
        "mean_temperature_k": [float(__import__("numpy").nanmean(r.temperature))
                               for r in results],
    }
    _atomic_bytes(out_dir / "chain.json",
                  json.dumps(summary, indent=2).encode())
    if not args.quiet:
        print(f"wrote {len(results)} heatmaps to {out_dir}")
    return EXIT_OK


def cmd_diff(args) -> int:
    import numpy as np

    from .encoder import apply_material_override
    from .scenario import load_scenario
    from .transport import simulate

    scn = load_scenario(args.scenario)
    if args.seed is not None:
        scn.config.seed = args.seed
    if args.spp is not None:
        scn.config.spp = args.spp
    scn.config.validate()
    mapset, database = _load_inputs(scn, _resolve_threads(args))
    out_dir = Path(args.out or scn.output_dir)

    override_a = _parse_override(args.override_a) or scn.overrides.get("a", {})
    override_b = _parse_override(args.override_b) or scn.overrides.get("b", {})
    map_a = apply_material_override(mapset, database, override_a)
    map_b = apply_material_override(mapset, database, override_b)

    result_a = simulate(map_a, scn.config, database)
    result_b = simulate(map_b, scn.config, database)
    diff = result_b.temperature - result_a.temperature

    ids = mapset.building_id
    sdf = mapset.sdf_m.astype(np.float64)
    masks = {
        "roofs": ids > 0,
        "ground_far": (ids == 0) & (sdf >= 10.0),
        "ground_between": (ids == 0) & (sdf < 10.0),
    }
    summary = {
        "override_a": override_a,
        "override_b": override_b,
        "seed": scn.config.seed,
        "spp": scn.config.spp,
        "max_diff_k": float(np.nanmax(diff)),
        "min_diff_k": float(np.nanmin(diff)),
        "mean_diff_k": float(np.nanmean(diff)),
        "region_mean_diff_k": {name: float(np.nanmean(diff[mask]))
                               for name, mask in masks.items() if mask.any()},
    }
    span = max(abs(summary["max_diff_k"]), abs(summary["min_diff_k"]), 1e-9)
    _write_heatmap(out_dir, "diff", mapset.grid, diff, (-span, span))
    _atomic_bytes(out_dir / "diff_summary.json",
                  json.dumps(summary, indent=2, sort_keys=True).encode())
    if not args.quiet:
        print(f"diff (b - a): max {summary['max_diff_k']:.3f} K, "
              f"mean {summary['mean_diff_k']:.4f} K")
        for name, value in summary["region_mean_diff_k"].items():
            print(f"  {name}: {value:+.4f} K")
        print(f"wrote {out_dir}/diff.hm25")
    return EXIT_OK


def cmd_validate(args) -> int:
    from . import validation
    suite = validation.run_suite(args.suite, seed=args.seed,
                                 threads=_resolve_threads(args))
    out_dir = Path(args.out) if args.out else None
    lines_csv = ["name,passed,measured,limit,detail"]
    lines_md = [f"# Validation suite: {args.suite}", ""]
    ok = True
    for r in suite:
        ok &= r.passed
        status = "PASS" if r.passed else "FAIL"
        if not args.quiet:
            print(f"[{status}] {r.name}: {r.measured:.6g} "
                  f"(limit {r.limit:.6g}) {r.detail}")
        lines_csv.append(f"{r.name},{r.passed},{r.measured!r},{r.limit!r},"
                         f"\"{r.detail}\"")
        lines_md.append(f"- **{r.name}**: {status}, measured {r.measured:.6g}, "
                        f"limit {r.limit:.6g}. {r.detail}")
    if out_dir:
        _atomic_bytes(out_dir / f"validate_{args.suite}.csv",
                      ("\n".join(lines_csv) + "\n").encode())
        _atomic_bytes(out_dir / f"validate_{args.suite}.md",
                      ("\n".join(lines_md) + "\n").encode())
    return EXIT_OK if ok else EXIT_TOLERANCE


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    threads = _resolve_threads(args)
    if threads > 0 and "numba" not in sys.modules:
        # allow more compute threads than the default pool would start
        os.environ.setdefault("NUMBA_NUM_THREADS", str(max(threads, os.cpu_count())))
    from .encoder import EncodingError
    from .mapset import FormatError
    from .scenario import ConfigError
    try:
        handler = {
            "encode": cmd_encode,
            "simulate": cmd_simulate,
            "chain": cmd_chain,
            "diff": cmd_diff,
            "validate": cmd_validate,
        }[args.command]
        return handler(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, FormatError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EncodingError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
