"""Synthetic vessel phantoms with analytic ground-truth surfaces.

A phantom is a tube around an analytic centerline (straight, circular
arc, or helix).  At arc length s the cross-section perpendicular to the
centerline contains

* a lumen: an ellipse centered on the centerline with semi-axes
  a = lumen radius and b = a*sqrt(1 - ecc^2), rotated by the axis angle;
* an outer wall: a circle of radius R(s) whose center is displaced by
  the lumen offset, so the thrombus between lumen and wall can be made
  crescent-shaped.  R(s) = base radius + a Gaussian bulge.

Angles are measured in a minimal-rotation frame transported along the
centerline, so the geometry is well defined for curved shapes.  Voxels
take the class intensity with linear blending within half a voxel of
each surface; calcium specks sit on the lumen rim; Gaussian noise is
added last.  Everything is deterministic in the seed.

The tube extends a few mm beyond s = 0 and s = length so cross-sections
at the ends see a full vessel rather than an end cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .volume import Centerline, MprPlane, Volume, mpr_pixel_positions, transport_frames

_DENSE_STEP = 0.25   # frame sampling along the centerline, mm
_END_MARGIN = 6.0    # tube extension beyond [0, length], mm
_XY_MARGIN = 6.0     # volume padding around the outer surface, mm


@dataclass
class PhantomSpec:
    """Parameters of a synthetic phantom; all lengths in mm."""

    shape: str = "straight"              # straight | arc | helix
    length_mm: float = 200.0
    arc_radius_mm: float = 120.0
    helix_radius_mm: float = 40.0
    helix_pitch_mm: float = 80.0

    lumen_radius_mm: float = 10.0        # semi-major axis of the lumen
    lumen_eccentricity: float = 0.0
    lumen_axis_angle_deg: float = 0.0
    lumen_offset_mm: float = 0.0         # lumen center displacement from wall center

    outer_radius_mm: float = 16.0
    bulge_amplitude_mm: float = 0.0
    bulge_center_mm: float = -1.0        # negative -> mid length
    bulge_width_mm: float = 25.0

    hu_lumen: float = 300.0
    hu_thrombus: float = 40.0
    hu_tissue: float = 28.0
    hu_calcium: float = 900.0
    noise_sigma: float = 10.0
    calcium_count: int = 0
    calcium_radius_mm: float = 1.5

    spacing_mm: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.shape not in ("straight", "arc", "helix"):
            raise ValueError(f"unknown phantom shape {self.shape!r}")
        if self.length_mm <= 0 or self.spacing_mm <= 0:
            raise ValueError("length and spacing must be positive")
        if not (0.0 <= self.lumen_eccentricity < 1.0):
            raise ValueError("lumen eccentricity must be in [0, 1)")
        if self.lumen_radius_mm <= 0 or self.outer_radius_mm <= 0:
            raise ValueError("radii must be positive")
        if self.bulge_center_mm < 0:
            self.bulge_center_mm = 0.5 * self.length_mm

    @property
    def lumen_axes(self) -> tuple[float, float]:
        a = self.lumen_radius_mm
        return a, a * float(np.sqrt(1.0 - self.lumen_eccentricity ** 2))


class _FrameField:
    """Densely sampled centerline with transported frames and a KD-tree."""

    def __init__(self, spec: PhantomSpec):
        self.s = np.arange(-_END_MARGIN, spec.length_mm + _END_MARGIN + 1e-9,
                           _DENSE_STEP)
        self.points = _curve_points(spec, self.s)
        self.tangents = _curve_tangents(spec, self.s)
        # Transport forward from s=0 and mirror backward over the margin so
        # the frame at s=0 does not depend on the margin length.
        k0 = int(np.argmin(np.abs(self.s)))
        a1f, a2f = transport_frames(self.tangents[k0:])
        a1b, a2b = transport_frames(self.tangents[k0::-1], axis1_start=a1f[0])
        self.axis1 = np.vstack([a1b[::-1][:-1], a1f])
        self.axis2 = np.vstack([a2b[::-1][:-1], a2f])
        self.tree = cKDTree(self.points)

    def locate(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """World points (N, 3) -> (s, theta, rho) in the local frames."""
        _, idx = self.tree.query(pts)
        disp = pts - self.points[idx]
        s = self.s[idx] + np.einsum("ij,ij->i", disp, self.tangents[idx])
        u = np.einsum("ij,ij->i", disp, self.axis1[idx])
        v = np.einsum("ij,ij->i", disp, self.axis2[idx])
        return s, np.arctan2(v, u), np.hypot(u, v)

    def frame_at(self, s: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = int(np.argmin(np.abs(self.s - s)))
        return self.points[k], self.axis1[k], self.axis2[k]


def _curve_points(spec: PhantomSpec, s: np.ndarray) -> np.ndarray:
    if spec.shape == "straight":
        return np.stack([np.zeros_like(s), np.zeros_like(s), s], axis=1)
    if spec.shape == "arc":
        R = spec.arc_radius_mm
        return np.stack([R * (1.0 - np.cos(s / R)),
                         np.zeros_like(s),
                         R * np.sin(s / R)], axis=1)
    R = spec.helix_radius_mm
    pitch = spec.helix_pitch_mm / (2.0 * np.pi)
    w = 1.0 / np.hypot(R, pitch)
    return np.stack([R * (np.cos(w * s) - 1.0),
                     R * np.sin(w * s),
                     pitch * w * s], axis=1)


def _curve_tangents(spec: PhantomSpec, s: np.ndarray) -> np.ndarray:
    if spec.shape == "straight":
        t = np.zeros((s.size, 3))
        t[:, 2] = 1.0
        return t
    if spec.shape == "arc":
        R = spec.arc_radius_mm
        return np.stack([np.sin(s / R), np.zeros_like(s), np.cos(s / R)], axis=1)
    R = spec.helix_radius_mm
    pitch = spec.helix_pitch_mm / (2.0 * np.pi)
    w = 1.0 / np.hypot(R, pitch)
    return np.stack([-R * w * np.sin(w * s),
                     R * w * np.cos(w * s),
                     np.full_like(s, pitch * w)], axis=1)


@dataclass
class GroundTruth:
    """Analytic phantom surfaces, queryable per world position or MPR plane."""

    spec: PhantomSpec
    frames: _FrameField = field(repr=False)

    def outer_base_radius(self, s) -> np.ndarray:
        sp = self.spec
        s = np.asarray(s, dtype=np.float64)
        bulge = sp.bulge_amplitude_mm * np.exp(
            -((s - sp.bulge_center_mm) ** 2) / (2.0 * sp.bulge_width_mm ** 2))
        return sp.outer_radius_mm + bulge

    def lumen_radius(self, s, theta) -> np.ndarray:
        """Distance from the centerline to the lumen boundary along theta."""
        a, b = self.spec.lumen_axes
        psi = np.asarray(theta, dtype=np.float64) - np.deg2rad(
            self.spec.lumen_axis_angle_deg)
        return (a * b) / np.hypot(b * np.cos(psi), a * np.sin(psi))

    def outer_radius(self, s, theta) -> np.ndarray:
        """Distance from the centerline to the outer wall along theta.

        The wall circle of radius R(s) is centered at -offset along the
        frame's first axis, so the thrombus is thickest opposite the
        lumen displacement.
        """
        R = self.outer_base_radius(s)
        d = self.spec.lumen_offset_mm
        theta = np.asarray(theta, dtype=np.float64)
        return -d * np.cos(theta) + np.sqrt(R ** 2 - (d * np.sin(theta)) ** 2)

    @property
    def s_range(self) -> tuple[float, float]:
        return float(self.frames.s[0]), float(self.frames.s[-1])

    def masks_for_plane(self, plane: MprPlane) -> tuple[np.ndarray, np.ndarray]:
        """(lumen_mask, wall_mask) rasterized on a plane's pixel grid.

        The wall mask is the full region inside the outer surface (lumen
        included).  Planes beyond the tube's physical extent get empty
        masks.
        """
        pos = mpr_pixel_positions(plane)
        w, h = pos.shape[:2]
        s, theta, rho = self.frames.locate(pos.reshape(-1, 3))
        lo, hi = self.s_range
        in_range = (s >= lo) & (s <= hi)
        lumen = in_range & (rho <= self.lumen_radius(s, theta))
        wall = in_range & (rho <= self.outer_radius(s, theta))
        return lumen.reshape(w, h), wall.reshape(w, h)

    def contour_for_plane(self, plane: MprPlane, rays: int, radial_samples: int,
                          dr: float, which: str = "outer") -> np.ndarray:
        """Radial indices of a truth surface along a plane's polar rays.

        Scans each ray outward from the plane center at dr/4 steps and
        keeps the last position inside the surface, then snaps to the
        enclosing radial sample.
        """
        theta = 2.0 * np.pi * np.arange(rays) / rays
        dirs = (np.cos(theta)[:, None] * plane.axis1[None, :]
                + np.sin(theta)[:, None] * plane.axis2[None, :])
        t = np.arange(dr / 4.0, radial_samples * dr, dr / 4.0)
        pts = plane.center[None, None, :] + t[None, :, None] * dirs[:, None, :]
        s, th, rho = self.frames.locate(pts.reshape(-1, 3))
        bound = (self.outer_radius(s, th) if which == "outer"
                 else self.lumen_radius(s, th))
        lo, hi = self.s_range
        inside = ((rho <= bound) & (s >= lo) & (s <= hi)).reshape(rays, t.size)
        # last inside position per ray; rays that start outside get radius 0
        any_in = inside.any(axis=1)
        last = np.where(any_in, inside.shape[1] - 1 - np.argmax(inside[:, ::-1], axis=1), 0)
        t_mm = np.where(any_in, t[last], 0.0)
        idx = np.clip(np.floor(t_mm / dr + 1e-9).astype(np.int64),
                      0, radial_samples - 1)
        return idx


def _auto_grid(spec: PhantomSpec, frames: _FrameField) -> tuple[np.ndarray, tuple[int, int, int]]:
    """Volume origin and dims covering the tube plus margins."""
    rmax = float(spec.outer_radius_mm + max(spec.bulge_amplitude_mm, 0.0)
                 + abs(spec.lumen_offset_mm))
    pad = rmax + _XY_MARGIN
    lo = frames.points.min(axis=0) - pad
    hi = frames.points.max(axis=0) + pad
    dims = tuple(int(np.ceil((hi[k] - lo[k]) / spec.spacing_mm)) + 1 for k in range(3))
    return lo, dims


def generate_phantom(spec: PhantomSpec) -> tuple[Volume, Centerline, GroundTruth]:
    """Build the phantom volume, its centerline, and the analytic truth.

    Raises ValueError when the requested geometry violates the minimum
    wall margin (outer surface must clear the lumen by 0.5 mm everywhere).
    """
    frames = _FrameField(spec)
    gt = GroundTruth(spec=spec, frames=frames)
    _check_geometry(gt)

    origin, dims = _auto_grid(spec, frames)
    nx, ny, nz = dims
    sp = spec.spacing_mm
    data = np.empty(dims, dtype=np.float32)

    half_blend = 0.5 * sp
    xs = origin[0] + sp * np.arange(nx)
    ys = origin[1] + sp * np.arange(ny)
    lo_s, hi_s = gt.s_range

    # classify in z-chunks to bound memory
    chunk = max(1, int(2e6 // (nx * ny)))
    for k0 in range(0, nz, chunk):
        k1 = min(nz, k0 + chunk)
        zs = origin[2] + sp * np.arange(k0, k1)
        gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
        pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
        s, theta, rho = frames.locate(pts)
        rl = gt.lumen_radius(s, theta)
        ro = gt.outer_radius(s, theta)
        t1 = np.clip((rho - rl) / (2.0 * half_blend) + 0.5, 0.0, 1.0)
        t2 = np.clip((rho - ro) / (2.0 * half_blend) + 0.5, 0.0, 1.0)
        val = (spec.hu_lumen
               + (spec.hu_thrombus - spec.hu_lumen) * t1
               + (spec.hu_tissue - spec.hu_thrombus) * t2)
        val = np.where((s >= lo_s) & (s <= hi_s), val, spec.hu_tissue)
        data[:, :, k0:k1] = val.reshape(nx, ny, k1 - k0).astype(np.float32)

    rng = np.random.default_rng(spec.seed)
    _paint_specks(data, origin, sp, spec, gt, rng)
    if spec.noise_sigma > 0:
        data += rng.normal(0.0, spec.noise_sigma, size=dims).astype(np.float32)

    vol = Volume(data=data, spacing=(sp, sp, sp), origin=origin)
    svals = np.arange(0.0, spec.length_mm + 1e-9, 1.0)
    if svals[-1] < spec.length_mm:
        svals = np.append(svals, spec.length_mm)
    cl = Centerline(points=_curve_points(spec, svals))
    return vol, cl, gt


def _check_geometry(gt: GroundTruth) -> None:
    spec = gt.spec
    if abs(spec.lumen_offset_mm) >= spec.outer_radius_mm:
        raise ValueError("lumen offset must stay below the outer radius")
    s = np.linspace(0.0, spec.length_mm, 101)
    theta = np.linspace(0.0, 2.0 * np.pi, 181)
    ss, tt = np.meshgrid(s, theta, indexing="ij")
    margin = gt.outer_radius(ss, tt) - gt.lumen_radius(ss, tt)
    if float(margin.min()) < 0.5:
        raise ValueError(
            f"outer wall clears the lumen by only {margin.min():.2f} mm; "
            "0.5 mm required")


def _paint_specks(data: np.ndarray, origin: np.ndarray, sp: float,
                  spec: PhantomSpec, gt: GroundTruth,
                  rng: np.random.Generator) -> None:
    """Hard calcium spheres centered on the lumen rim."""
    nx, ny, nz = data.shape
    for _ in range(spec.calcium_count):
        s = rng.uniform(0.0, spec.length_mm)
        theta = rng.uniform(0.0, 2.0 * np.pi)
        p, a1, a2 = gt.frames.frame_at(s)
        rim = p + gt.lumen_radius(s, theta) * (np.cos(theta) * a1 + np.sin(theta) * a2)
        rad = spec.calcium_radius_mm
        lo = np.maximum(np.floor((rim - rad - origin) / sp).astype(int), 0)
        hi = np.minimum(np.ceil((rim + rad - origin) / sp).astype(int) + 1,
                        [nx, ny, nz])
        if np.any(lo >= hi):
            continue
        gx, gy, gz = np.meshgrid(
            origin[0] + sp * np.arange(lo[0], hi[0]),
            origin[1] + sp * np.arange(lo[1], hi[1]),
            origin[2] + sp * np.arange(lo[2], hi[2]), indexing="ij")
        dist2 = (gx - rim[0]) ** 2 + (gy - rim[1]) ** 2 + (gz - rim[2]) ** 2
        region = data[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]]
        region[dist2 <= rad * rad] = spec.hu_calcium


def truth_contours(gt: GroundTruth, planes: list[MprPlane], rays: int,
                   radial_samples: int, dr: float,
                   which: str = "outer") -> list:
    """Per-plane truth contours about each plane's center pixel."""
    from .unfold import RadialContour

    contours = []
    for k, plane in enumerate(planes):
        idx = gt.contour_for_plane(plane, rays, radial_samples, dr, which=which)
        w, h = plane.grid_size
        contours.append(RadialContour(r=idx, center_px=np.array([w / 2.0, h / 2.0]),
                                      dr=dr, theta0=0.0, slice_index=k))
    return contours


def write_truth_contours(gt: GroundTruth, planes: list[MprPlane], rays: int,
                         radial_samples: int, dr: float, path: str | Path,
                         which: str = "outer") -> Path:
    """Export per-plane truth contours in the standard contour format."""
    from .unfold import write_contours

    return write_contours(path, truth_contours(gt, planes, rays,
                                               radial_samples, dr, which))
