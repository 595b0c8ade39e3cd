"""Command line front end.

Subcommands:
  phantom    synthesize a test volume (+ optional truth contours)
  segment    track outer-wall contours from seed contours
  evaluate   compare tracked contours against reference contours
  pipeline   phantom -> segment -> evaluate in one run

All outputs are plain files written with stable formatting; without
--timestamp a rerun with the same inputs produces byte-identical
results.
"""

from __future__ import annotations

import argparse
import datetime
import sys
from pathlib import Path

from .config import ConfigError, load_config, build_params
from .lumen import (LumenNotFoundError, centerline_intensity_stats,
                    load_mask_pgm, save_mask_pgm, segment_lumen)
from .metrics import evaluate_run
from .phantom import generate_phantom, truth_contours
from .tracker import track_all
from .unfold import read_contours, write_contours
from .volume import (build_mpr_planes, load_centerline, load_volume,
                     resample_mpr, save_centerline, save_volume)


def _stamp(path: Path, enabled: bool) -> None:
    """Prepend a generation timestamp comment to a text artifact."""
    if not enabled:
        return
    now = datetime.datetime.now().isoformat(timespec="seconds")
    path.write_text(f"# generated {now}\n" + path.read_text())


def _load_setup(args) -> tuple:
    cfg = load_config(args.config) if args.config else {}
    overrides = {}
    for flag, key in (("seed", "phantom.seed"), ("dx", "track.dx"),
                      ("dy", "track.dy"), ("dp", "track.dp"),
                      ("rays", "track.rays"),
                      ("radial_samples", "track.radial_samples"),
                      ("dr", "track.dr"),
                      ("fixed_thrombus_mean", "track.fixed_thrombus_mean")):
        if hasattr(args, flag):
            overrides[key] = getattr(args, flag)
    if getattr(args, "no_wrap", False):
        overrides["track.wrap"] = False
    return build_params(cfg, overrides)


def _mpr_stack(vol, cl, mpr):
    planes = build_mpr_planes(cl, step_mm=mpr["step_mm"],
                              extent_mm=mpr["extent_mm"],
                              resolution_mm=mpr["resolution_mm"])
    slices = [resample_mpr(vol, p, index=i) for i, p in enumerate(planes)]
    return planes, slices


def _write_lumen_masks(slices, stats, lumen_params, outdir: Path) -> list:
    """Segment and save the lumen of every slice; None where it fails."""
    mask_dir = outdir / "lumen_masks"
    mask_dir.mkdir(parents=True, exist_ok=True)
    masks = []
    for slc in slices:
        try:
            lm = segment_lumen(slc, stats, lumen_params)
        except LumenNotFoundError:
            masks.append(None)
            continue
        save_mask_pgm(lm.mask, mask_dir / f"{slc.index:04d}.pgm")
        masks.append(lm.mask)
    return masks


def _write_diagnostics(result, path: Path) -> None:
    lines = []
    for d in result.diagnostics:
        lines.append(" ".join(f"{k}={v}" for k, v in sorted(d.items())))
    for idx in sorted(result.failures):
        lines.append(f"failure slice={idx} reason={result.failures[idx]}")
    path.write_text("\n".join(lines) + "\n" if lines else "")


def cmd_phantom(args) -> int:
    spec, _, track, mpr = _load_setup(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    vol, cl, gt = generate_phantom(spec)
    save_volume(vol, outdir / "phantom.vvol")
    save_centerline(cl, outdir / "centerline.txt")
    if args.truth:
        planes, _ = _mpr_stack(vol, cl, mpr)
        from .phantom import write_truth_contours
        write_truth_contours(gt, planes, track.rays, track.radial_samples,
                             track.dr, outdir / "truth_outer.txt", "outer")
        write_truth_contours(gt, planes, track.rays, track.radial_samples,
                             track.dr, outdir / "truth_lumen.txt", "lumen")
    print(f"phantom written to {outdir}")
    return 0


def cmd_segment(args) -> int:
    _, lumen_params, track, mpr = _load_setup(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    vol = load_volume(args.volume)
    cl = load_centerline(args.centerline)
    seeds = read_contours(args.seeds)
    _, slices = _mpr_stack(vol, cl, mpr)
    stats = centerline_intensity_stats(vol, cl)

    result = track_all(slices, seeds, stats, track, lumen_params)
    walls = [c for c in result.contours if c is not None]
    walls_path = write_contours(outdir / "walls.txt", walls)
    _stamp(walls_path, args.timestamp)
    _write_lumen_masks(slices, stats, lumen_params, outdir)
    _write_diagnostics(result, outdir / "diagnostics.txt")
    print(f"tracked {result.tracked}/{len(slices)} slices "
          f"({len(result.failures)} failures)")
    return 0 if result.tracked == len(slices) else 1


def _contour_list(contours, n: int) -> list:
    out = [None] * n
    for c in contours:
        if 0 <= c.slice_index < n:
            out[c.slice_index] = c
    return out


def cmd_evaluate(args) -> int:
    auto = read_contours(args.auto)
    ref = read_contours(args.ref)
    n = 1 + max(c.slice_index for c in auto + ref)
    mask_dir = Path(args.lumen_masks)
    masks = []
    shape = None
    for i in range(n):
        p = mask_dir / f"{i:04d}.pgm"
        if p.exists():
            m = load_mask_pgm(p)
            shape = m.shape
            masks.append(m)
        else:
            masks.append(None)
    if shape is None:
        print("no lumen masks found; cannot rasterize", file=sys.stderr)
        return 1
    report = evaluate_run(_contour_list(auto, n), _contour_list(ref, n),
                          masks, shape, args.resolution, args.spacing)
    Path(args.out + ".txt").write_text(report.to_text())
    Path(args.out + ".csv").write_text(report.to_csv())
    print(report.to_text(), end="")
    return 0


def cmd_pipeline(args) -> int:
    spec, lumen_params, track, mpr = _load_setup(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    vol, cl, gt = generate_phantom(spec)
    save_volume(vol, outdir / "phantom.vvol")
    save_centerline(cl, outdir / "centerline.txt")
    planes, slices = _mpr_stack(vol, cl, mpr)
    n = len(slices)

    ref = truth_contours(gt, planes, track.rays, track.radial_samples,
                         track.dr, "outer")
    write_contours(outdir / "truth_outer.txt", ref)
    write_contours(outdir / "truth_lumen.txt",
                   truth_contours(gt, planes, track.rays,
                                  track.radial_samples, track.dr, "lumen"))

    seed_at = sorted({0, n // 2, n - 1})
    seeds = [ref[i] for i in seed_at]
    write_contours(outdir / "seeds.txt", seeds)

    stats = centerline_intensity_stats(vol, cl)
    result = track_all(slices, seeds, stats, track, lumen_params)
    walls_path = write_contours(outdir / "walls.txt",
                                [c for c in result.contours if c is not None])
    _stamp(walls_path, args.timestamp)
    masks = _write_lumen_masks(slices, stats, lumen_params, outdir)
    _write_diagnostics(result, outdir / "diagnostics.txt")

    report = evaluate_run(result.contours, ref, masks,
                          slices[0].pixels.shape, mpr["resolution_mm"],
                          mpr["step_mm"])
    (outdir / "report.txt").write_text(report.to_text())
    (outdir / "report.csv").write_text(report.to_csv())
    print(report.to_text(), end="")
    return 0 if result.tracked == n else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vesselwall",
                                 description="vessel wall tracking toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seg=False):
        p.add_argument("--config", help="key=value settings file")
        p.add_argument("--out", required=True, help="output directory")
        if seg:
            p.add_argument("--dx", type=int, help="ray-to-ray step bound")
            p.add_argument("--dy", type=int, help="slice-to-slice step bound")
            p.add_argument("--dp", type=int, help="outward growth bound")
            p.add_argument("--rays", type=int)
            p.add_argument("--radial-samples", dest="radial_samples", type=int)
            p.add_argument("--dr", type=float, help="radial step, mm")
            p.add_argument("--no-wrap", action="store_true",
                           help="disable angular wraparound smoothness")
            p.add_argument("--fixed-thrombus-mean", type=float,
                           dest="fixed_thrombus_mean")
            p.add_argument("--timestamp", action="store_true",
                           help="stamp generation time into text outputs")

    p = sub.add_parser("phantom", help="generate a synthetic volume")
    common(p)
    p.add_argument("--seed", type=int, help="noise RNG seed")
    p.add_argument("--truth", action="store_true",
                   help="also write truth contours on the MPR grid")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("segment", help="track contours from seeds")
    common(p, seg=True)
    p.add_argument("--volume", required=True)
    p.add_argument("--centerline", required=True)
    p.add_argument("--seeds", required=True, help="seed contour file")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("evaluate", help="score contours against a reference")
    p.add_argument("--auto", required=True, help="tracked contour file")
    p.add_argument("--ref", required=True, help="reference contour file")
    p.add_argument("--lumen-masks", required=True, dest="lumen_masks")
    p.add_argument("--out", required=True, help="report path prefix")
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--spacing", type=float, default=5.0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="phantom + segment + evaluate")
    common(p, seg=True)
    p.add_argument("--seed", type=int, help="noise RNG seed")
    p.set_defaults(func=cmd_pipeline)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:                      # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
