"""Bright-lumen segmentation on MPR cross-sections.

The lumen is the contrast-filled region around the centerline pierce
point.  Segmentation runs a fixed pipeline on each slice: Gaussian
smoothing, intensity band threshold (lower bound from centerline sample
statistics, upper bound excluding calcium), morphological opening then
closing, 4-connected labeling, and selection of the component containing
the pierce pixel.  A low ellipticity score flags a probable side-branch
merge and triggers an erode-split-reselect-dilate fallback.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .volume import Centerline, MprSlice, Volume, sample_points

_CROSS4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


class LumenNotFoundError(RuntimeError):
    """No foreground component contains the centerline pierce pixel."""


@dataclass
class LumenParams:
    smooth_sigma_px: float = 1.0
    k_std: float = 3.0
    # The lower threshold is mean - max(k_std*std, floor_frac*mean): on a
    # noiseless slice std collapses to 0 and the bare k*std bound would
    # cut away the partial-volume rim of the lumen.
    threshold_floor_frac: float = 0.5
    morph_radius_px: int = 2
    calcium_factor: float = 2.0
    ellipticity_tolerance: float = 0.15

    def __post_init__(self):
        if self.smooth_sigma_px < 0:
            raise ValueError("smoothing sigma must be >= 0")
        if self.k_std < 0 or self.morph_radius_px < 0:
            raise ValueError("k_std and morph radius must be >= 0")
        if not (0.0 < self.threshold_floor_frac < 1.0):
            raise ValueError("threshold_floor_frac must be in (0, 1)")
        if self.calcium_factor <= 1.0:
            raise ValueError("calcium_factor must exceed 1")
        if not (0.0 < self.ellipticity_tolerance < 1.0):
            raise ValueError("ellipticity_tolerance must be in (0, 1)")


@dataclass
class CenterlineStats:
    """Intensity statistics of centerline samples inside the volume."""

    mean: float
    std: float      # population standard deviation
    n_inside: int


@dataclass
class LumenMask:
    mask: np.ndarray
    component_id: int
    ellipticity: float
    branch_suspected: bool


def centerline_intensity_stats(vol: Volume, cl: Centerline) -> CenterlineStats:
    """Mean and population std of volume samples at the centerline points.

    Points outside the volume are ignored; if every point misses the
    volume there is nothing to calibrate against and a ValueError is
    raised.
    """
    inside = vol.contains(cl.points)
    if not np.any(inside):
        raise ValueError("centerline misses the volume entirely")
    vals = sample_points(vol, cl.points[inside])
    return CenterlineStats(mean=float(vals.mean()),
                           std=float(vals.std()),
                           n_inside=int(inside.sum()))


def _disk(radius: int) -> np.ndarray:
    if radius <= 0:
        return np.ones((1, 1), dtype=bool)
    r = np.arange(-radius, radius + 1)
    return (r[:, None] ** 2 + r[None, :] ** 2) <= radius * radius


def ellipticity(mask: np.ndarray) -> float:
    """Area of a mask over the area of its moment-matched ellipse.

    The second central moments include the 1/12 per-pixel square term so
    rasterized disks score close to 1.  The score is clamped to (0, 1];
    values well below 1 indicate a region that bulges away from any
    single ellipse (e.g. a merged side branch).
    """
    ii, jj = np.nonzero(mask)
    m00 = ii.size
    if m00 == 0:
        raise ValueError("empty mask has no ellipticity")
    x = ii - ii.mean()
    y = jj - jj.mean()
    mu20 = float(np.dot(x, x)) / m00 + 1.0 / 12.0
    mu02 = float(np.dot(y, y)) / m00 + 1.0 / 12.0
    mu11 = float(np.dot(x, y)) / m00
    det = mu20 * mu02 - mu11 * mu11
    if det <= 0:
        return 1e-6
    ellipse_area = 4.0 * np.pi * np.sqrt(det)
    return float(min(max(m00 / ellipse_area, 1e-6), 1.0))


def segment_lumen(slc: MprSlice, stats: CenterlineStats,
                  params: LumenParams | None = None) -> LumenMask:
    """Segment the lumen component around the centerline pierce pixel.

    Raises LumenNotFoundError when the pierce pixel lands on background
    after thresholding and morphology (e.g. a slice of uniform tissue).
    """
    p = params or LumenParams()
    img = slc.pixels.astype(np.float64)
    if p.smooth_sigma_px > 0:
        img = ndimage.gaussian_filter(img, p.smooth_sigma_px, mode="nearest")

    lo = stats.mean - max(p.k_std * stats.std,
                          p.threshold_floor_frac * stats.mean)
    ceiling = p.calcium_factor * stats.mean
    binary = (img >= lo) & (img <= ceiling)

    selem = _disk(p.morph_radius_px)
    binary = ndimage.binary_opening(binary, structure=selem)
    binary = ndimage.binary_closing(binary, structure=selem)

    labels, _ = ndimage.label(binary, structure=_CROSS4)
    cx, cy = slc.center_px
    cxi, cyi = int(round(cx)), int(round(cy))
    comp = labels[cxi, cyi]
    if comp == 0:
        raise LumenNotFoundError(
            f"slice {slc.index}: no lumen component at the centerline pixel")
    mask = labels == comp

    score = ellipticity(mask)
    branch = score < 1.0 - p.ellipticity_tolerance
    if branch:
        mask, score = _split_branch(mask, (cxi, cyi), score, p)
    return LumenMask(mask=mask, component_id=int(comp), ellipticity=score,
                     branch_suspected=branch)


def _split_branch(mask: np.ndarray, center: tuple[int, int], score: float,
                  p: LumenParams, max_iter: int = 8) -> tuple[np.ndarray, float]:
    """Erode until the center component separates from the branch, then
    dilate it back inside the original mask.  Falls back to the input
    mask when erosion swallows the center pixel first."""
    cxi, cyi = center
    selem = _disk(1)
    work = mask
    for it in range(1, max_iter + 1):
        work = ndimage.binary_erosion(work, structure=selem)
        if not work[cxi, cyi]:
            return mask, score
        labels, _ = ndimage.label(work, structure=_CROSS4)
        comp = labels == labels[cxi, cyi]
        if ellipticity(comp) >= 1.0 - p.ellipticity_tolerance:
            grown = comp
            for _ in range(it):
                grown = ndimage.binary_dilation(grown, structure=selem) & mask
            labels, _ = ndimage.label(grown, structure=_CROSS4)
            if labels[cxi, cyi] == 0:
                return mask, score
            out = labels == labels[cxi, cyi]
            return out, ellipticity(out)
        work = comp
    return mask, score


# ---------------------------------------------------------------------------
# PGM mask export (P5, 0/255)


def save_mask_pgm(mask: np.ndarray, path: str | Path) -> Path:
    """Write a boolean mask[i, j] (i along x) as a binary PGM image."""
    path = Path(path)
    w, h = mask.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    payload = (mask.T.astype(np.uint8) * 255).tobytes()
    path.write_bytes(header + payload)
    return path


def load_mask_pgm(path: str | Path) -> np.ndarray:
    path = Path(path)
    blob = path.read_bytes()
    # header: magic, width, height, maxval, single whitespace, then payload
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if blob[pos:pos + 1] == b"#":
            while pos < len(blob) and blob[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        fields.append(blob[start:pos])
    pos += 1  # single whitespace after maxval
    if fields[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM file")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValueError(f"{path}: expected maxval 255")
    data = np.frombuffer(blob, dtype=np.uint8, count=w * h, offset=pos)
    return (data.reshape(h, w).T > 0)
