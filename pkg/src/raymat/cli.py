"""Command-line front end: every subsystem as a subcommand emitting CSV.

Units at the CLI boundary: frequencies in GHz, angles in degrees, thicknesses
in millimeters (meters and radians internally). Grids use start:stop:step with
an inclusive stop. All outputs are UTF-8 CSV with ``#``-prefixed metadata
headers and are byte-identical for identical argv, input files, and seed.

Exit status: 0 on success, 1 on any validation error, 2 when identification
ends in a contradiction or a no-hypothesis outcome.
"""

from __future__ import annotations

import argparse
import math
import os
import random
import sys
from contextlib import contextmanager

import numpy as np

from . import demo as demo_mod
from . import em, identify, rldb, settling
from .materials import PRESETS, MaterialParams, load_material_table
from .scene import load_scene, save_scene
from .tracer import trace

OUTPUT_DIR_ENV = "RAYMAT_OUTPUT_DIR"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; this artifact reserves 2 for
    # contradiction outcomes and uses 1 for every validation error
    def error(self, message):
        raise _UsageError(message)


def _parse_grid(text: str) -> np.ndarray:
    """Inclusive numeric grid from 'start:stop:step', or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("grid step must be > 0")
        if stop < start:
            raise ValueError("grid stop must be >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(count)
    return np.array([float(p) for p in text.split(",")])


def _parse_point(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"point must be x,y,z in meters, got {text!r}")
    return np.array([float(p) for p in parts])


def _material_catalog(table_path: str | None) -> dict[str, MaterialParams]:
    catalog = dict(PRESETS)
    if table_path:
        for mat in load_material_table(table_path):
            catalog[mat.name] = mat
    return catalog


def _resolve_materials(names: str, table_path: str | None) -> list[MaterialParams]:
    catalog = _material_catalog(table_path)
    out = []
    for name in names.split(","):
        name = name.strip()
        if name not in catalog:
            raise ValueError(
                f"unknown material {name!r}; known: {', '.join(sorted(catalog))}"
            )
        out.append(catalog[name])
    return out


def _resolve_one(name: str, table_path: str | None) -> MaterialParams:
    materials = _resolve_materials(name, table_path)
    if len(materials) != 1:
        raise ValueError(f"expected exactly one material, got {name!r}")
    return materials[0]


@contextmanager
def _open_output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
        return
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yield fh


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _cmd_coeff(args) -> int:
    mat = _resolve_one(args.material, args.materials_table)
    grid_m = _parse_grid(args.h_grid) * 1e-3
    rows = settling.thickness_sweep(mat, args.freq, math.radians(args.theta), grid_m)
    eta = em.relative_permittivity(mat, args.freq)
    thick = em.fresnel_thick(eta, math.radians(args.theta))
    with _open_output(args.output) as fh:
        fh.write(f"#material={mat.name}\n#freq_ghz={_fmt(args.freq)}\n")
        fh.write(f"#theta_deg={_fmt(args.theta)}\n")
        fh.write(f"#te_thick_db={_fmt(em.amplitude_db(thick.te))}\n")
        fh.write(f"#tm_thick_db={_fmt(em.amplitude_db(thick.tm))}\n")
        settling.write_sweep_csv(rows, fh)
    return 0


def _cmd_rl(args) -> int:
    mat = _resolve_one(args.material, args.materials_table)
    angles = _parse_grid(args.angles)
    with _open_output(args.output) as fh:
        fh.write(f"#material={mat.name}\n#freq_ghz={_fmt(args.freq)}\n")
        fh.write(f"#kappa={_fmt(args.kappa)}\n")
        fh.write("angle_deg,rl_db\n")
        for angle in angles:
            loss = em.reflection_loss(
                mat, args.freq, math.radians(float(angle)), kappa=args.kappa
            )
            fh.write(f"{_fmt(float(angle))},{_fmt(loss)}\n")
    return 0


def _cmd_settling(args) -> int:
    materials = _resolve_materials(args.material, args.materials_table)
    results = []
    for mat in materials:
        query = settling.SettlingQuery(
            material=mat,
            f_ghz=args.freq,
            theta_i=math.radians(args.theta),
            tol_db=args.tol,
            h_max_m=None if args.h_max is None else args.h_max * 1e-3,
            grid_step_m=None if args.grid_step is None else args.grid_step * 1e-3,
        )
        results.append(
            (mat.name, args.freq, args.theta, args.tol, settling.settling_thickness(query))
        )
    with _open_output(args.output) as fh:
        settling.write_settling_csv(results, fh)
    return 0


def _cmd_rldb(args) -> int:
    if args.action == "build":
        materials = _resolve_materials(args.materials, args.materials_table)
        db = rldb.build(materials, _parse_grid(args.freqs), _parse_grid(args.angles), args.kappa)
        db.save(args.db)
        return 0
    db = rldb.load(args.db)
    with _open_output(args.output) as fh:
        fh.write(f"#version={rldb.FORMAT_VERSION}\n")
        fh.write(f"#kappa={_fmt(db.kappa)}\n")
        fh.write(f"#materials={','.join(db.material_names)}\n")
        fh.write(
            f"#freqs_ghz={_fmt(float(db.freqs_ghz[0]))}..{_fmt(float(db.freqs_ghz[-1]))}"
            f" (n={db.freqs_ghz.size})\n"
        )
        fh.write(
            f"#angles_deg={_fmt(float(db.angles_deg[0]))}..{_fmt(float(db.angles_deg[-1]))}"
            f" (n={db.angles_deg.size})\n"
        )
        fh.write("material,rl_min_db,rl_max_db\n")
        for i, name in enumerate(db.material_names):
            fh.write(f"{name},{_fmt(float(db.rl_db[i].min()))},{_fmt(float(db.rl_db[i].max()))}\n")
    return 0


def _write_trace_csv(fh, labelled_trajectories) -> None:
    fh.write("trajectory_id,bounces,total_length_m,hop,facet_id,x_m,y_m,z_m,theta_deg\n")
    for tid, traj in labelled_trajectories:
        for i, hop in enumerate(traj.hops):
            x, y, z = (float(v) for v in hop.point)
            fh.write(
                f"{tid},{traj.bounces},{_fmt(traj.total_length)},{i},{hop.facet_id},"
                f"{_fmt(x)},{_fmt(y)},{_fmt(z)},{_fmt(math.degrees(hop.theta_i))}\n"
            )


def _pairs(args):
    scene = load_scene(args.scene)
    txs = [_parse_point(p) for p in args.tx]
    rxs = [_parse_point(p) for p in args.rx]
    labelled = []
    pair = 0
    for tx in txs:
        for rx in rxs:
            for ti, traj in enumerate(trace(scene, tx, rx, max_bounces=args.max_bounces)):
                labelled.append((f"p{pair}t{ti}", traj))
            pair += 1
    return scene, txs, rxs, labelled


def _cmd_trace(args) -> int:
    _, _, _, labelled = _pairs(args)
    with _open_output(args.output) as fh:
        fh.write(f"#scene={os.path.basename(args.scene)}\n")
        fh.write(f"#max_bounces={args.max_bounces}\n")
        _write_trace_csv(fh, labelled)
    return 0


def _cmd_simulate(args) -> int:
    scene, _, _, labelled = _pairs(args)
    catalog = _material_catalog(args.materials_table)
    ground_truth = {}
    for facet in scene.facets:
        if facet.material_label in catalog:
            ground_truth[facet.facet_id] = catalog[facet.material_label]
    rng = random.Random(args.seed)
    with _open_output(args.output) as fh:
        fh.write(f"#freq_ghz={_fmt(args.freq)}\n#ptx_dbm={_fmt(args.ptx)}\n")
        fh.write(f"#noise_sigma_db={_fmt(args.noise)}\n#seed={args.seed}\n")
        fh.write("trajectory_id,measured_rl_db,u_db\n")
        for tid, traj in labelled:
            if any(hop.facet_id not in ground_truth for hop in traj.hops):
                continue  # unknown-material hop: no ground truth to simulate
            if any(math.degrees(hop.theta_i) > args.max_angle for hop in traj.hops):
                continue  # outside the RL-database hull
            record = identify.simulate_measurement(
                scene,
                traj,
                ground_truth,
                p_tx_dbm=args.ptx,
                f_ghz=args.freq,
                noise_sigma_db=args.noise,
                rng=rng,
                kappa=args.kappa,
                uncertainty_db=args.u,
                trajectory_id=tid,
            )
            fh.write(
                f"{tid},{_fmt(record.measured_total_rl_db)},{_fmt(record.uncertainty_db)}\n"
            )
    return 0


def _read_measurements(path) -> dict[str, tuple[float, float]]:
    out: dict[str, tuple[float, float]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#") or line.startswith("trajectory_id"):
                continue
            fields = line.split(",")
            if len(fields) != 3:
                raise ValueError(
                    f"{path}:{lineno}: expected trajectory_id,measured_rl_db,u_db"
                )
            out[fields[0]] = (float(fields[1]), float(fields[2]))
    return out


def _cmd_identify(args) -> int:
    scene = load_scene(args.scene)
    palette = _resolve_materials(args.palette, args.materials_table)
    if args.db:
        db = rldb.load(args.db)
    else:
        db = rldb.build(palette, np.array([args.freq]), np.arange(0.0, 86.0), args.kappa)
    measurements = _read_measurements(args.measurements)

    def measure(tid, traj):
        if tid not in measurements:
            return None
        value, u = measurements[tid]
        if args.u is not None:
            u = args.u
        return identify.MeasurementRecord(tid, value, u)

    belief, report = identify.identify_loop(
        scene,
        [_parse_point(p) for p in args.tx],
        [_parse_point(p) for p in args.rx],
        palette,
        db,
        args.freq,
        args.u if args.u is not None else 1.0,
        args.max_bounces,
        measure,
    )
    with _open_output(args.output) as fh:
        fh.write(report.to_text())
    if report.contradictions or report.no_hypothesis:
        return 2
    return 0


def _cmd_demo(args) -> int:
    scene = demo_mod.demo_building()
    os.makedirs(args.outdir, exist_ok=True)
    scene_path = os.path.join(args.outdir, "demo_building.json")
    save_scene(scene, scene_path)
    txs, rxs = demo_mod.demo_positions(scene)
    tx_flags = " ".join(f"--tx {p[0]:g},{p[1]:g},{p[2]:g}" for p in txs)
    rx_flags = " ".join(f"--rx {p[0]:g},{p[1]:g},{p[2]:g}" for p in rxs)
    m_path = os.path.join(args.outdir, "demo_measurements.csv")
    sys.stderr.write(
        f"wrote {scene_path}\n"
        "next:\n"
        f"  raymat simulate --scene {scene_path} {tx_flags} {rx_flags} "
        f"--freq 100 --u 1 --output {m_path}\n"
        f"  raymat identify --scene {scene_path} {tx_flags} {rx_flags} "
        f"--freq 100 --u 1 --measurements {m_path}\n"
    )
    with _open_output(args.output) as fh:
        fh.write("#demo positions (role,x_m,y_m,z_m)\n")
        fh.write("role,x_m,y_m,z_m\n")
        for i, p in enumerate(txs):
            fh.write(f"tx{i + 1},{_fmt(p[0])},{_fmt(p[1])},{_fmt(p[2])}\n")
        for i, p in enumerate(rxs):
            fh.write(f"rx{i + 1},{_fmt(p[0])},{_fmt(p[1])},{_fmt(p[2])}\n")
    return 0


def _add_output(p) -> None:
    p.add_argument("--output", "-o", default=None, help="output path (default stdout)")


def _add_materials_table(p) -> None:
    p.add_argument(
        "--materials-table",
        default=None,
        help="plain-text material table extending the built-in presets",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="raymat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeff", help="slab reflection coefficient vs thickness")
    p.add_argument("--material", required=True)
    p.add_argument("--freq", type=float, required=True, help="GHz")
    p.add_argument("--theta", type=float, default=0.0, help="degrees")
    p.add_argument("--h-grid", required=True, help="thickness grid in mm, start:stop:step")
    _add_materials_table(p)
    _add_output(p)
    p.set_defaults(func=_cmd_coeff)

    p = sub.add_parser("rl", help="reflection loss vs incident angle")
    p.add_argument("--material", required=True)
    p.add_argument("--freq", type=float, required=True, help="GHz")
    p.add_argument("--angles", required=True, help="degrees, start:stop:step")
    p.add_argument("--kappa", type=float, default=0.0, help="roughness coefficient")
    _add_materials_table(p)
    _add_output(p)
    p.set_defaults(func=_cmd_rl)

    p = sub.add_parser("settling", help="settling thickness of a slab")
    p.add_argument("--material", required=True, help="name, or comma list")
    p.add_argument("--freq", type=float, required=True, help="GHz")
    p.add_argument("--tol", type=float, default=0.2, help="band half-width in dB")
    p.add_argument("--theta", type=float, default=0.0, help="degrees")
    p.add_argument("--grid-step", type=float, default=None, help="mm")
    p.add_argument("--h-max", type=float, default=None, help="mm")
    _add_materials_table(p)
    _add_output(p)
    p.set_defaults(func=_cmd_settling)

    p = sub.add_parser("rldb", help="build or inspect a reflection-loss database")
    p.add_argument("action", choices=("build", "show"))
    p.add_argument("--db", required=True, help="database CSV path")
    p.add_argument("--materials", default="wood,plaster,glass")
    p.add_argument("--freqs", default="100", help="GHz grid or comma list")
    p.add_argument("--angles", default="0:85:1", help="degrees grid")
    p.add_argument("--kappa", type=float, default=0.0)
    _add_materials_table(p)
    _add_output(p)
    p.set_defaults(func=_cmd_rldb)

    p = sub.add_parser("trace", help="list specular trajectories")
    p.add_argument("--scene", required=True)
    p.add_argument("--tx", action="append", required=True, help="x,y,z m (repeatable)")
    p.add_argument("--rx", action="append", required=True, help="x,y,z m (repeatable)")
    p.add_argument("--max-bounces", type=int, default=2)
    _add_output(p)
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("simulate", help="synthesize total-RL measurements")
    p.add_argument("--scene", required=True)
    p.add_argument("--tx", action="append", required=True)
    p.add_argument("--rx", action="append", required=True)
    p.add_argument("--max-bounces", type=int, default=2)
    p.add_argument("--freq", type=float, required=True, help="GHz")
    p.add_argument("--ptx", type=float, default=30.0, help="dBm")
    p.add_argument("--noise", type=float, default=0.0, help="gaussian sigma in dB")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--u", type=float, default=1.0, help="uncertainty written per row")
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--max-angle", type=float, default=85.0, help="skip steeper hops")
    _add_materials_table(p)
    _add_output(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("identify", help="run the full identification pipeline")
    p.add_argument("--scene", required=True)
    p.add_argument("--measurements", required=True, help="CSV trajectory_id,measured_rl_db,u_db")
    p.add_argument("--tx", action="append", required=True)
    p.add_argument("--rx", action="append", required=True)
    p.add_argument("--max-bounces", type=int, default=2)
    p.add_argument("--freq", type=float, required=True, help="GHz")
    p.add_argument("--u", type=float, default=None, help="override per-row uncertainty")
    p.add_argument("--palette", default="wood,plaster,glass")
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--db", default=None, help="prebuilt database CSV (else built on the fly)")
    _add_materials_table(p)
    _add_output(p)
    p.set_defaults(func=_cmd_identify)

    p = sub.add_parser("demo", help="write the bundled example scene")
    p.add_argument("--outdir", default=".")
    _add_output(p)
    p.set_defaults(func=_cmd_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as err:
        sys.stderr.write(f"usage error: {err}\n")
        parser.print_usage(sys.stderr)
        return 1
    except (ValueError, KeyError, OSError, settling.NotSettledError) as err:
        sys.stderr.write(f"error: {err}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
