"""Command-line interface: fields, paths, sweeps, and fits as CSV artifacts.

Subcommands: energy-field, friction-field, finger-path, sweep, fit.
Every run writes a manifest (resolved config plus a content hash per file)
into the output directory so identical configs give identical hashes.

Exit codes: 0 on success, 2 on configuration errors, 3 when the numerical
failure fraction exceeds the configured limit.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .elastica import EnergyField, compute_energy_field, solve_min_energy_shape
from .errors import ConfigError, DegenerateFit, FlexFlipError, NoSuccesses
from .finger import nominal_tip_path
from .grasp import Label, feasible_x_interval, fit_affine, sweep

FIELD_COLUMNS = ["px_mm", "pz_mm", "energy", "grad_x", "grad_y", "mu_min", "reachable", "converged"]
PATH_COLUMNS = ["pressure_mpa", "tip_x_mm", "tip_z_mm", "clamped"]
SWEEP_COLUMNS = ["x_mm", "z_mm", "theta_deg", "label", "energy_at_sep", "mu_min_max", "flip_angle_deg"]
SHAPE_COLUMNS = ["shape_id", "px_mm", "pz_mm", "node_index", "x_mm", "z_mm"]


def _fmt(value, precision: int) -> str:
    """Fixed-significant-digit float format; inf sentinel; blank for NaN."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    v = float(value)
    if math.isnan(v):
        return ""
    if math.isinf(v):
        return "inf"
    return f"{v:.{precision}g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, cfg: RunConfig, files: list[Path]) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg.raw,
        "files": {f.name: _sha256(f) for f in files},
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _field_rows(field: EnergyField, precision: int):
    xs = field.grid.x_values()
    zs = field.grid.z_values()
    for iz, pz in enumerate(zs):
        for ix, px in enumerate(xs):
            reachable = bool(field.mask[iz, ix])
            if reachable:
                yield [
                    _fmt(px, precision), _fmt(pz, precision),
                    _fmt(field.energy[iz, ix], precision),
                    _fmt(field.grad[iz, ix, 0], precision),
                    _fmt(field.grad[iz, ix, 1], precision),
                    _fmt(field.mu_min[iz, ix], precision),
                    "1", "1" if field.converged[iz, ix] else "0",
                ]
            else:
                yield [_fmt(px, precision), _fmt(pz, precision), "", "", "", "", "0", "0"]


def _field_failure_fraction(field: EnergyField) -> float:
    n_reach = int(field.mask.sum())
    if n_reach == 0:
        return 0.0
    return 1.0 - int((field.mask & field.converged).sum()) / n_reach


def _export_shapes(path: Path, cfg: RunConfig, field: EnergyField, count: int) -> None:
    """Minimum-energy shapes for a spread of reachable converged cells."""
    xs = field.grid.x_values()
    zs = field.grid.z_values()
    cells = [
        (iz, ix)
        for iz in range(field.grid.nz)
        for ix in range(field.grid.nx)
        if field.mask[iz, ix] and field.converged[iz, ix]
        and math.hypot(xs[ix], zs[iz]) < cfg.rod.length * 0.999
    ]
    if not cells:
        raise FlexFlipError("no converged cells to export shapes from")
    count = min(count, len(cells))
    picks = [cells[(k * (len(cells) - 1)) // max(count - 1, 1)] for k in range(count)]
    rows = []
    for sid, (iz, ix) in enumerate(picks):
        sol = solve_min_energy_shape(cfg.rod, (xs[ix], zs[iz]), cfg.solver)
        for node, (x, z) in enumerate(sol.shape.positions()):
            rows.append([
                str(sid), _fmt(xs[ix], cfg.precision), _fmt(zs[iz], cfg.precision),
                str(node), _fmt(x, cfg.precision), _fmt(z, cfg.precision),
            ])
    _write_csv(path, SHAPE_COLUMNS, rows)


def cmd_field(args, command: str) -> int:
    cfg = load_config(args.config, args.set, args.nondimensional)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    field = compute_energy_field(cfg.rod, cfg.grid, cfg.solver, threads=args.threads)
    name = "energy_field.csv" if command == "energy-field" else "friction_field.csv"
    csv_path = out_dir / name
    _write_csv(csv_path, FIELD_COLUMNS, _field_rows(field, cfg.precision))
    files = [csv_path]
    if command == "energy-field" and args.shapes > 0:
        shapes_path = out_dir / "shapes.csv"
        _export_shapes(shapes_path, cfg, field, args.shapes)
        files.append(shapes_path)
    _write_manifest(out_dir, command, cfg, files)
    frac = _field_failure_fraction(field)
    if frac > cfg.max_failure_fraction:
        print(f"error: {frac:.1%} of reachable cells failed to converge", file=sys.stderr)
        return 3
    print(f"wrote {csv_path}")
    return 0


def cmd_finger_path(args) -> int:
    cfg = load_config(args.config, args.set, args.nondimensional)
    if not (0.0 <= args.theta <= 12.0):
        print(f"warning: theta {args.theta} deg outside the tested 0..12 range",
              file=sys.stderr)
    hand = replace(
        cfg.hand_template, x=float(args.x), z=float(args.z), theta_deg=float(args.theta)
    )
    path = nominal_tip_path(cfg.finger, hand, cfg.ramp, tip=(cfg.rod.length, 0.0))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"finger_path_x{args.x:g}_z{args.z:g}_t{args.theta:g}.csv"
    rows = [
        [_fmt(p, cfg.precision), _fmt(pt[0], cfg.precision), _fmt(pt[1], cfg.precision),
         "1" if c else "0"]
        for p, pt, c in zip(path.pressures, path.points, path.clamped)
    ]
    _write_csv(csv_path, PATH_COLUMNS, rows)
    _write_manifest(out_dir, "finger-path", cfg, [csv_path])
    print(f"wrote {csv_path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, args.set, args.nondimensional)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = sweep(
        cfg.rod, cfg.finger, cfg.lattice, cfg.ramp, cfg.mu_available,
        cfg.thresholds, cfg.solver, hand_template=cfg.hand_template,
        threads=args.threads,
    )
    csv_path = out_dir / "sweep.csv"
    rows = []
    for hand, outcome in zip(result.configs, result.outcomes):
        rows.append([
            _fmt(hand.x, cfg.precision), _fmt(hand.z, cfg.precision),
            _fmt(hand.theta_deg, cfg.precision), outcome.label.value,
            _fmt(outcome.stored_energy if outcome.separation_index >= 0 else math.nan,
                 cfg.precision),
            _fmt(outcome.mu_min_max, cfg.precision),
            _fmt(outcome.flip_angle_deg, cfg.precision),
        ])
    _write_csv(csv_path, SWEEP_COLUMNS, rows)
    fit_path = out_dir / "fit.json"
    _write_fit_report(fit_path, result)
    _write_manifest(out_dir, "sweep", cfg, [csv_path, fit_path])
    n_unconverged = sum(1 for o in result.outcomes if o.label is Label.UNCONVERGED)
    frac = n_unconverged / len(result.outcomes)
    if frac > cfg.max_failure_fraction:
        print(f"error: {frac:.1%} of attempts unconverged", file=sys.stderr)
        return 3
    print(f"wrote {csv_path} ({len(rows)} rows)")
    return 0


def _write_fit_report(path: Path, result) -> None:
    try:
        pts = [(c.z, c.theta_deg) for c, o in zip(result.configs, result.outcomes)
               if o.label is Label.SUCCESS]
        if not pts:
            raise NoSuccesses("no successes")
        fit = fit_affine(pts)
        x_lo, x_hi = feasible_x_interval(result)
        report = {
            "slope_deg_per_mm": fit.slope,
            "intercept_deg": fit.intercept,
            "residual_rms_deg": fit.residual_rms,
            "n_points": fit.n_points,
            "feasible_x_mm": [x_lo, x_hi],
        }
    except (NoSuccesses, DegenerateFit) as exc:
        report = {"status": type(exc).__name__}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_fit(args) -> int:
    src = Path(args.infile)
    if not src.is_file():
        print(f"error: sweep CSV not found: {src}", file=sys.stderr)
        return 2
    pts = []
    with open(src, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(SWEEP_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            print(f"error: sweep CSV missing columns: {sorted(missing)}", file=sys.stderr)
            return 2
        for row in reader:
            if row["label"] == Label.SUCCESS.value:
                pts.append((float(row["z_mm"]), float(row["theta_deg"])))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    fit_path = out_dir / "fit.json"
    try:
        if not pts:
            raise NoSuccesses("no successes")
        fit = fit_affine(pts)
        report = {
            "slope_deg_per_mm": fit.slope,
            "intercept_deg": fit.intercept,
            "residual_rms_deg": fit.residual_rms,
            "n_points": fit.n_points,
        }
    except (NoSuccesses, DegenerateFit) as exc:
        report = {"status": type(exc).__name__}
    with open(fit_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {fit_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flexflip",
        description="Quasistatic flex-and-flip grasp analysis on planar elastic rods",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="TOML config file (defaults used if omitted)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker processes")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry, e.g. rod.segments=48")
        p.add_argument("--nondimensional", action="store_true",
                       help="unit-length, unit-rigidity rod and grid")

    p_energy = sub.add_parser("energy-field", help="minimal-energy field over contact positions")
    common(p_energy)
    p_energy.add_argument("--shapes", type=int, default=0,
                          help="also export this many minimum-energy shapes")

    p_fric = sub.add_parser("friction-field", help="friction lower-bound field")
    common(p_fric)

    p_path = sub.add_parser("finger-path", help="nominal fingertip path for one hand placement")
    common(p_path)
    p_path.add_argument("--x", type=float, required=True, help="horizontal offset from object tip (mm)")
    p_path.add_argument("--z", type=float, required=True, help="vertical offset from object tip (mm)")
    p_path.add_argument("--theta", type=float, default=0.0, help="wrist angle (deg)")

    p_sweep = sub.add_parser("sweep", help="classify attempts over the hand lattice")
    common(p_sweep)

    p_fit = sub.add_parser("fit", help="affine z-theta fit from an existing sweep CSV")
    p_fit.add_argument("--in", dest="infile", required=True, help="sweep CSV path")
    p_fit.add_argument("--out", default="out", help="output directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("energy-field", "friction-field"):
            return cmd_field(args, args.command)
        if args.command == "finger-path":
            return cmd_finger_path(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "fit":
            return cmd_fit(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FlexFlipError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
