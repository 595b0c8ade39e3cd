"""Polar unfolding of MPR slices and radial contour handling.

An unfolded slice samples an MPR image along ``rays`` equally spaced
directions from a chosen center; sample z of ray x sits at radius
``(z + 0.5) * dr`` mm along angle ``theta0 + 2*pi*x/rays``.  A radial
contour stores one sample index per ray; its planar polygon places the
vertex of ray x at radius ``(r[x] + 0.5) * dr``.

Radial distances are in mm while image coordinates are in pixels, so
every conversion takes the MPR resolution (mm per pixel) explicitly;
contour files deliberately do not record it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .volume import MprSlice


@dataclass
class UnfoldedSlice:
    """Polar resampling of one MPR slice: samples[x][z] = intensity."""

    samples: np.ndarray      # (rays, radial_samples) float64
    center_px: np.ndarray    # unfold center in pixel coordinates
    dr: float                # radial step, mm
    theta0: float            # angle of ray 0, radians
    resolution: float = 1.0  # source MPR resolution, mm per pixel
    slice_index: int = 0

    @property
    def rays(self) -> int:
        return self.samples.shape[0]

    @property
    def radial_samples(self) -> int:
        return self.samples.shape[1]


@dataclass
class RadialContour:
    """One radial sample index per ray, anchored to an unfold geometry."""

    r: np.ndarray            # (rays,) int
    center_px: np.ndarray    # (2,) float
    dr: float
    theta0: float = 0.0
    slice_index: int = 0

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=np.int64)
        self.center_px = np.asarray(self.center_px, dtype=np.float64)
        if self.r.ndim != 1 or self.r.size < 3:
            raise ValueError("a radial contour needs at least 3 rays")
        if np.any(self.r < 0):
            raise ValueError("radial indices must be non-negative")
        if self.dr <= 0:
            raise ValueError("dr must be positive")

    @property
    def rays(self) -> int:
        return self.r.size

    def angles(self) -> np.ndarray:
        return self.theta0 + 2.0 * np.pi * np.arange(self.rays) / self.rays

    def radii_mm(self) -> np.ndarray:
        return (self.r + 0.5) * self.dr


def ray_angles(rays: int, theta0: float = 0.0) -> np.ndarray:
    return theta0 + 2.0 * np.pi * np.arange(rays) / rays


def bilinear_sample(img: np.ndarray, xs: np.ndarray, ys: np.ndarray,
                    fill: float = 0.0) -> np.ndarray:
    """Bilinear interpolation of img[i, j] at continuous (x, y) coords."""
    w, h = img.shape
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    inside = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)
    out = np.full(xs.shape, float(fill), dtype=np.float64)
    if not np.any(inside):
        return out
    x = xs[inside]
    y = ys[inside]
    x0 = np.minimum(np.floor(x).astype(np.intp), w - 2)
    y0 = np.minimum(np.floor(y).astype(np.intp), h - 2)
    x0 = np.maximum(x0, 0)
    y0 = np.maximum(y0, 0)
    fx = x - x0
    fy = y - y0
    v = (img[x0, y0] * (1 - fx) * (1 - fy)
         + img[x0 + 1, y0] * fx * (1 - fy)
         + img[x0, y0 + 1] * (1 - fx) * fy
         + img[x0 + 1, y0 + 1] * fx * fy)
    out[inside] = v
    return out


def unfold_slice(slc: MprSlice, center_px, rays: int = 72, radial_samples: int = 120,
           dr: float = 0.5, theta0: float = 0.0, fill: float = 0.0) -> UnfoldedSlice:
    """Resample an MPR slice on a polar grid around center_px.

    Positions outside the image contribute the fill value (default 0).
    """
    if rays < 3 or radial_samples < 1:
        raise ValueError("need at least 3 rays and 1 radial sample")
    center = np.asarray(center_px, dtype=np.float64)
    res = slc.plane.resolution
    theta = ray_angles(rays, theta0)
    radii_px = (np.arange(radial_samples) + 0.5) * (dr / res)
    xs = center[0] + radii_px[None, :] * np.cos(theta)[:, None]
    ys = center[1] + radii_px[None, :] * np.sin(theta)[:, None]
    vals = bilinear_sample(slc.pixels, xs.ravel(), ys.ravel(), fill=fill)
    return UnfoldedSlice(samples=vals.reshape(rays, radial_samples),
                         center_px=center, dr=dr, theta0=theta0,
                         resolution=res, slice_index=slc.index)


def refold_contour(contour: RadialContour, resolution: float = 1.0) -> np.ndarray:
    """Closed polygon (rays, 2) in pixel coordinates for a radial contour."""
    theta = contour.angles()
    radii_px = contour.radii_mm() / resolution
    return np.stack([contour.center_px[0] + radii_px * np.cos(theta),
                     contour.center_px[1] + radii_px * np.sin(theta)], axis=1)


def contour_to_mask(contour: RadialContour, shape: tuple[int, int],
                    resolution: float = 1.0) -> np.ndarray:
    """Rasterize a contour polygon to a boolean mask.

    A pixel belongs to the mask when its center is inside the polygon
    under the even-odd rule.
    """
    poly = refold_contour(contour, resolution)
    return polygon_to_mask(poly, shape)


def polygon_to_mask(poly: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Even-odd rasterization of a closed polygon over pixel centers."""
    w, h = shape
    px = np.arange(w, dtype=np.float64)[:, None]
    py = np.arange(h, dtype=np.float64)[None, :]
    inside = np.zeros((w, h), dtype=bool)
    n = poly.shape[0]
    for k in range(n):
        x1, y1 = poly[k]
        x2, y2 = poly[(k + 1) % n]
        if y1 == y2:
            continue
        crosses = (y1 > py) != (y2 > py)
        with np.errstate(invalid="ignore"):
            xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (px < xint)
    return inside


def polygon_to_radial(poly: np.ndarray, center_px, rays: int,
                      radial_samples: int, dr: float,
                      resolution: float = 1.0,
                      theta0: float = 0.0) -> tuple[np.ndarray, bool]:
    """Cast rays from center_px and re-express a polygon as radial indices.

    For every ray the OUTERMOST boundary crossing is kept, so a polygon
    that is not star-shaped about the center collapses to its outer
    envelope.  Returns (indices, star) where star is False when any ray
    crosses the boundary a number of times other than one (including
    rays that miss the polygon entirely; those get index 0).

    The nearest radial sample is chosen; exact half-way ties go outward.
    """
    center = np.asarray(center_px, dtype=np.float64)
    theta = ray_angles(rays, theta0)
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    perp = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
    a = poly
    b = np.roll(poly, -1, axis=0)
    ac = a - center                 # edge start relative to center, (E, 2)
    bc = b - center

    # signed perpendicular distance of both edge ends per (ray, edge);
    # the half-open (>0) straddle rule counts a vertex exactly once
    ya = perp @ ac.T                # (R, E)
    yb = perp @ bc.T
    crossing = (ya > 0.0) != (yb > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(crossing, ya / (ya - yb), 0.0)
    px = ac[None, :, 0] + u * (bc[None, :, 0] - ac[None, :, 0])
    py = ac[None, :, 1] + u * (bc[None, :, 1] - ac[None, :, 1])
    t = px * dirs[:, 0][:, None] + py * dirs[:, 1][:, None]
    valid = crossing & (t > 0)

    t_hit = np.where(valid, t, -np.inf)
    t_max = t_hit.max(axis=1)
    counts = valid.sum(axis=1)
    star = bool(np.all(counts == 1))

    idx = np.zeros(rays, dtype=np.int64)
    hit = counts > 0
    t_mm = t_max[hit] * resolution
    idx[hit] = np.clip(np.floor(t_mm / dr + 1e-9).astype(np.int64),
                       0, radial_samples - 1)
    return idx, star


def mask_to_radial(mask: np.ndarray, center_px, rays: int, radial_samples: int,
                   dr: float, resolution: float = 1.0,
                   theta0: float = 0.0) -> np.ndarray:
    """Outward scan of a boolean mask along rays: last inside sample per ray.

    Sample positions use nearest-pixel lookup.  A ray whose first sample
    already falls outside the mask gets index 0.
    """
    center = np.asarray(center_px, dtype=np.float64)
    w, h = mask.shape
    theta = ray_angles(rays, theta0)
    radii_px = (np.arange(radial_samples) + 0.5) * (dr / resolution)
    xs = np.rint(center[0] + radii_px[None, :] * np.cos(theta)[:, None]).astype(np.intp)
    ys = np.rint(center[1] + radii_px[None, :] * np.sin(theta)[:, None]).astype(np.intp)
    inbounds = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    inside = np.zeros((rays, radial_samples), dtype=bool)
    inside[inbounds] = mask[xs[inbounds], ys[inbounds]]
    first_out = np.argmax(~inside, axis=1)      # 0 when the ray never exits
    all_in = inside.all(axis=1)
    r = np.where(all_in, radial_samples - 1, first_out - 1)
    return np.maximum(r, 0).astype(np.int64)


def write_contours(path: str | Path, contours: list[RadialContour]) -> Path:
    """One line per contour: 'slice X dr theta0 cx cy : r0 r1 ...'."""
    path = Path(path)
    lines = ["# slice_index rays dr theta0 cx cy : radial indices"]
    for c in contours:
        head = (f"{c.slice_index} {c.rays} {repr(float(c.dr))} "
                f"{repr(float(c.theta0))} {repr(float(c.center_px[0]))} "
                f"{repr(float(c.center_px[1]))}")
        lines.append(head + " : " + " ".join(str(int(v)) for v in c.r))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_contours(path: str | Path) -> list[RadialContour]:
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"no such contour file: {path}")
    out = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise ValueError(f"{path}:{lineno}: missing ':' separator")
        head, _, tail = line.partition(":")
        parts = head.split()
        if len(parts) != 6:
            raise ValueError(f"{path}:{lineno}: expected 6 header fields")
        slice_index = int(parts[0])
        rays = int(parts[1])
        dr = float(parts[2])
        theta0 = float(parts[3])
        center = np.array([float(parts[4]), float(parts[5])])
        r = np.array([int(v) for v in tail.split()], dtype=np.int64)
        if r.size != rays:
            raise ValueError(f"{path}:{lineno}: expected {rays} radii, got {r.size}")
        out.append(RadialContour(r=r, center_px=center, dr=dr, theta0=theta0,
                                 slice_index=slice_index))
    return out
