"""Overlap and size metrics for segmented runs.

All areas come from pixel counting on rasterized contours, volumes
from summing slice areas times the slice spacing, and diameters from
exact pairwise distances between contour vertices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .unfold import RadialContour, contour_to_mask, refold_contour


def dsc(a: np.ndarray, b: np.ndarray) -> float:
    """Dice coefficient of two boolean masks; two empty masks score 1."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError("masks must have the same shape")
    total = int(np.count_nonzero(a)) + int(np.count_nonzero(b))
    if total == 0:
        return 1.0
    return 2.0 * np.count_nonzero(a & b) / total


def contour_dsc(auto: RadialContour, ref: RadialContour,
                shape: tuple[int, int], resolution: float = 1.0) -> float:
    return dsc(contour_to_mask(auto, shape, resolution),
               contour_to_mask(ref, shape, resolution))


def clot_area_mm2(contour: RadialContour, lumen_mask: np.ndarray,
                  resolution: float = 1.0) -> float:
    """Area inside the outer contour but outside the lumen."""
    outer = contour_to_mask(contour, lumen_mask.shape, resolution)
    return float(np.count_nonzero(outer & ~lumen_mask)) * resolution ** 2


@dataclass
class ClotVolume:
    volume_mm3: float
    slices_used: int
    slices_skipped: int


def clot_volume(contours, lumen_masks, resolution: float,
                spacing_mm: float) -> ClotVolume:
    """Sum of per-slice clot areas times slice spacing.

    Slices with a missing contour or lumen mask are skipped and
    reported, not silently zeroed.
    """
    if len(contours) != len(lumen_masks):
        raise ValueError("one lumen mask per contour required")
    vol = 0.0
    used = 0
    skipped = 0
    for contour, lumen in zip(contours, lumen_masks):
        if contour is None or lumen is None:
            skipped += 1
            continue
        vol += clot_area_mm2(contour, lumen, resolution) * spacing_mm
        used += 1
    return ClotVolume(volume_mm3=vol, slices_used=used,
                      slices_skipped=skipped)


def max_diameter(contour: RadialContour, resolution: float = 1.0) -> float:
    """Longest chord between contour vertices, in mm (exact, O(rays^2))."""
    poly = refold_contour(contour, resolution)
    d = poly[:, None, :] - poly[None, :, :]
    return float(np.sqrt((d ** 2).sum(axis=2)).max()) * resolution


def run_max_diameter(contours, resolution: float = 1.0) -> tuple[float, int]:
    """(diameter_mm, slice_index) of the widest slice; lower index wins ties."""
    best = -1.0
    best_slice = -1
    for i, contour in enumerate(contours):
        if contour is None:
            continue
        dia = max_diameter(contour, resolution)
        if dia > best:
            best = dia
            best_slice = i
    if best_slice < 0:
        raise ValueError("no contours to measure")
    return best, best_slice


@dataclass
class EvalReport:
    """Per-slice overlap plus aggregate size figures for one run."""

    per_slice: list                  # (slice_index, dsc or None)
    dsc_mean: float
    dsc_std: float
    dsc_min: float
    dsc_max: float
    n_evaluated: int
    n_skipped: int
    auto_clot: ClotVolume
    ref_clot: ClotVolume
    auto_diameter_mm: float
    auto_diameter_slice: int
    ref_diameter_mm: float
    ref_diameter_slice: int

    def to_text(self) -> str:
        lines = [
            f"slices evaluated: {self.n_evaluated} (skipped {self.n_skipped})",
            (f"DSC mean {self.dsc_mean:.4f}  std {self.dsc_std:.4f}  "
             f"min {self.dsc_min:.4f}  max {self.dsc_max:.4f}"),
            (f"clot volume auto {self.auto_clot.volume_mm3:.1f} mm^3  "
             f"ref {self.ref_clot.volume_mm3:.1f} mm^3"),
            (f"max outer diameter auto {self.auto_diameter_mm:.2f} mm "
             f"at slice {self.auto_diameter_slice}  "
             f"ref {self.ref_diameter_mm:.2f} mm "
             f"at slice {self.ref_diameter_slice}"),
        ]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        rows = ["slice,dsc"]
        for idx, val in self.per_slice:
            rows.append(f"{idx}," + (f"{val:.6f}" if val is not None else ""))
        return "\n".join(rows) + "\n"


def evaluate_run(auto_contours, ref_contours, lumen_masks,
                 shape: tuple[int, int], resolution: float,
                 spacing_mm: float) -> EvalReport:
    """Compare tracked contours against reference contours slice by slice."""
    if len(auto_contours) != len(ref_contours):
        raise ValueError("auto and reference runs differ in length")
    per_slice = []
    values = []
    for i, (a, r) in enumerate(zip(auto_contours, ref_contours)):
        if a is None or r is None:
            per_slice.append((i, None))
            continue
        val = contour_dsc(a, r, shape, resolution)
        per_slice.append((i, val))
        values.append(val)
    if not values:
        raise ValueError("no slice has both an auto and a reference contour")
    arr = np.array(values)
    auto_d, auto_s = run_max_diameter(auto_contours, resolution)
    ref_d, ref_s = run_max_diameter(ref_contours, resolution)
    return EvalReport(
        per_slice=per_slice,
        dsc_mean=float(arr.mean()), dsc_std=float(arr.std()),
        dsc_min=float(arr.min()), dsc_max=float(arr.max()),
        n_evaluated=len(values), n_skipped=len(per_slice) - len(values),
        auto_clot=clot_volume(auto_contours, lumen_masks, resolution,
                              spacing_mm),
        ref_clot=clot_volume(ref_contours, lumen_masks, resolution,
                             spacing_mm),
        auto_diameter_mm=auto_d, auto_diameter_slice=auto_s,
        ref_diameter_mm=ref_d, ref_diameter_slice=ref_s)
