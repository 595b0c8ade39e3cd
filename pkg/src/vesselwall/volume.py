"""Volumes, centerlines and curved-planar reformat geometry.

Conventions used throughout the package:

* A volume stores intensities in a float32 array of shape (nx, ny, nz).
  Voxel (i, j, k) is centered at ``origin + (i*sx, j*sy, k*sz)`` in mm.
* On disk a volume is a small text header plus a raw little-endian
  float32 payload with x varying fastest (Fortran ravel of the array).
* An MPR plane is an oriented cross-section of the vessel: ``center`` is
  the centerline intersection, ``tangent`` the plane normal, and
  ``axis1``/``axis2`` span the in-plane pixel grid.  Pixel (i, j) of a
  resampled slice sits at ``center + (i - w/2)*res*axis1 +
  (j - h/2)*res*axis2`` so the centerline pierces pixel (w/2, h/2)
  exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class VolumeFormatError(ValueError):
    """Raised for malformed volume headers or payloads."""


@dataclass
class Volume:
    """A regularly sampled scalar volume.

    Attributes:
        data: float32 intensities, shape (nx, ny, nz).
        spacing: voxel size in mm per axis, all > 0.
        origin: world position of the center of voxel (0, 0, 0), mm.
    """

    data: np.ndarray
    spacing: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 3:
            raise VolumeFormatError("volume data must be 3-D")
        self.spacing = np.asarray(self.spacing, dtype=np.float64)
        self.origin = np.asarray(self.origin, dtype=np.float64)
        if self.spacing.shape != (3,) or self.origin.shape != (3,):
            raise VolumeFormatError("spacing and origin must be 3-vectors")
        if np.any(self.spacing <= 0):
            raise VolumeFormatError("voxel spacing must be positive")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def to_index(self, points: np.ndarray) -> np.ndarray:
        """World positions (N, 3) -> continuous index coordinates."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return (pts - self.origin) / self.spacing

    def contains(self, points: np.ndarray) -> np.ndarray:
        """True where a world position lies inside the voxel-center bounding box."""
        q = self.to_index(points)
        hi = np.array(self.dims, dtype=np.float64) - 1.0
        return np.all((q >= 0.0) & (q <= hi), axis=-1)


def sample_points(vol: Volume, points: np.ndarray, fill: float = 0.0) -> np.ndarray:
    """Trilinear interpolation of a volume at world positions.

    Args:
        vol: the volume to sample.
        points: world coordinates, shape (N, 3) or (3,).
        fill: value returned for positions outside the voxel-center
            bounding box.

    Returns:
        float64 samples, shape (N,) (scalar input -> shape (1,)).
        Exact at voxel centers.
    """
    q = vol.to_index(points)
    nx, ny, nz = vol.dims
    hi = np.array([nx - 1, ny - 1, nz - 1], dtype=np.float64)
    inside = np.all((q >= 0.0) & (q <= hi), axis=1)

    out = np.full(q.shape[0], float(fill), dtype=np.float64)
    if not np.any(inside):
        return out

    qi = q[inside]
    # Lower corner, clamped so q == n-1 uses the last cell with fraction 1.
    i0 = np.minimum(np.floor(qi).astype(np.intp),
                    np.array([nx - 2, ny - 2, nz - 2], dtype=np.intp))
    i0 = np.maximum(i0, 0)
    # Upper corner clamped separately: a size-1 axis keeps i1 == i0 == 0
    # (its fraction is 0 there, so the duplicate corner carries no weight).
    i1 = np.minimum(i0 + 1, np.array([nx - 1, ny - 1, nz - 1], dtype=np.intp))
    f = qi - i0
    x0, y0, z0 = i0[:, 0], i0[:, 1], i0[:, 2]
    x1, y1, z1 = i1[:, 0], i1[:, 1], i1[:, 2]
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]

    d = vol.data
    c000 = d[x0, y0, z0]
    c100 = d[x1, y0, z0]
    c010 = d[x0, y1, z0]
    c110 = d[x1, y1, z0]
    c001 = d[x0, y0, z1]
    c101 = d[x1, y0, z1]
    c011 = d[x0, y1, z1]
    c111 = d[x1, y1, z1]

    c00 = c000 * (1 - fx) + c100 * fx
    c10 = c010 * (1 - fx) + c110 * fx
    c01 = c001 * (1 - fx) + c101 * fx
    c11 = c011 * (1 - fx) + c111 * fx
    c0 = c00 * (1 - fy) + c10 * fy
    c1 = c01 * (1 - fy) + c11 * fy
    out[inside] = c0 * (1 - fz) + c1 * fz
    return out


def trilinear_sample(vol: Volume, point: np.ndarray, fill: float = 0.0) -> float:
    """Scalar convenience wrapper around :func:`sample_points`."""
    return float(sample_points(vol, np.asarray(point, dtype=np.float64), fill)[0])


# ---------------------------------------------------------------------------
# volume file format


_REQUIRED_KEYS = ("magic", "dims", "spacing", "origin", "dtype", "data")


def save_volume(vol: Volume, path: str | Path) -> Path:
    """Write header + raw payload; the payload file sits next to the header."""
    path = Path(path)
    raw_name = path.stem + ".raw"
    nx, ny, nz = vol.dims
    lines = [
        "magic = VVOL1",
        f"dims = {nx} {ny} {nz}",
        "spacing = " + " ".join(repr(float(v)) for v in vol.spacing),
        "origin = " + " ".join(repr(float(v)) for v in vol.origin),
        "dtype = f32le",
        f"data = {raw_name}",
    ]
    path.write_text("\n".join(lines) + "\n")
    payload = vol.data.astype("<f4").ravel(order="F").tobytes()
    (path.parent / raw_name).write_bytes(payload)
    return path


def load_volume(path: str | Path) -> Volume:
    path = Path(path)
    if not path.is_file():
        raise VolumeFormatError(f"no such volume header: {path}")
    fields: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise VolumeFormatError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    missing = [k for k in _REQUIRED_KEYS if k not in fields]
    if missing:
        raise VolumeFormatError(f"{path}: missing header keys {missing}")
    if fields["magic"] != "VVOL1":
        raise VolumeFormatError(f"{path}: bad magic {fields['magic']!r}")
    if fields["dtype"] != "f32le":
        raise VolumeFormatError(f"{path}: unsupported dtype {fields['dtype']!r}")
    try:
        dims = tuple(int(v) for v in fields["dims"].split())
        spacing = tuple(float(v) for v in fields["spacing"].split())
        origin = tuple(float(v) for v in fields["origin"].split())
    except ValueError as exc:
        raise VolumeFormatError(f"{path}: {exc}") from exc
    if len(dims) != 3 or any(d <= 0 for d in dims):
        raise VolumeFormatError(f"{path}: dims must be three positive integers")
    if len(spacing) != 3 or any(s <= 0 for s in spacing):
        raise VolumeFormatError(f"{path}: spacing must be three positive floats")
    if len(origin) != 3:
        raise VolumeFormatError(f"{path}: origin must be a 3-vector")

    raw_path = path.parent / fields["data"]
    if not raw_path.is_file():
        raise VolumeFormatError(f"{path}: payload file {raw_path} not found")
    payload = raw_path.read_bytes()
    expect = dims[0] * dims[1] * dims[2] * 4
    if len(payload) != expect:
        raise VolumeFormatError(
            f"{raw_path}: payload is {len(payload)} bytes, header implies {expect}")
    data = np.frombuffer(payload, dtype="<f4").reshape(dims, order="F")
    return Volume(data=data.copy(), spacing=spacing, origin=origin)


# ---------------------------------------------------------------------------
# centerlines


@dataclass
class Centerline:
    """Ordered polyline of lumen center points (mm).

    Arc length is accumulated along segments; consecutive points must be
    distinct.  Positions and tangents between vertices are linear
    interpolants, which keeps plane spacing along a straight line exact.
    """

    points: np.ndarray
    arc: np.ndarray = field(init=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError("centerline points must have shape (N, 3)")
        if self.points.shape[0] < 2:
            raise ValueError("centerline needs at least 2 points")
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        if np.any(seg <= 0):
            raise ValueError("centerline has coincident consecutive points")
        self.arc = np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def length(self) -> float:
        return float(self.arc[-1])

    def point_at(self, s) -> np.ndarray:
        """Position at arc length s (clamped to [0, length]); s may be an array."""
        s = np.clip(np.asarray(s, dtype=np.float64), 0.0, self.length)
        cols = [np.interp(s, self.arc, self.points[:, k]) for k in range(3)]
        return np.stack(cols, axis=-1)

    def tangent_at(self, s) -> np.ndarray:
        """Unit tangent at arc length s via central differences.

        One-sided differences are used within h of either endpoint, where
        h is half the median segment length.
        """
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        seg = np.diff(self.arc)
        h = 0.5 * float(np.median(seg))
        lo = np.clip(s - h, 0.0, self.length)
        hi = np.clip(s + h, 0.0, self.length)
        d = self.point_at(hi) - self.point_at(lo)
        norms = np.linalg.norm(d, axis=-1, keepdims=True)
        norms[norms == 0] = 1.0
        t = d / norms
        return t[0] if scalar else t


def save_centerline(cl: Centerline, path: str | Path) -> Path:
    path = Path(path)
    lines = ["# centerline points (mm): x y z"]
    for p in cl.points:
        lines.append(" ".join(repr(float(v)) for v in p))
    path.write_text("\n".join(lines) + "\n")
    return path


def load_centerline(path: str | Path) -> Centerline:
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"no such centerline file: {path}")
    pts = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'x y z'")
        pts.append([float(v) for v in parts])
    if len(pts) < 2:
        raise ValueError(f"{path}: centerline needs at least 2 points")
    return Centerline(points=np.array(pts))


# ---------------------------------------------------------------------------
# MPR planes


@dataclass
class MprPlane:
    """Oriented cross-section through the vessel at arc length s."""

    center: np.ndarray
    tangent: np.ndarray
    axis1: np.ndarray
    axis2: np.ndarray
    resolution: float  # mm per pixel
    extent: float      # in-plane half-width, mm
    s: float           # arc length along the centerline, mm

    @property
    def grid_size(self) -> tuple[int, int]:
        n = 2 * int(round(self.extent / self.resolution))
        return n, n


@dataclass
class MprSlice:
    """Pixels resampled on an MPR plane; indexed [i, j] along axis1/axis2."""

    plane: MprPlane
    pixels: np.ndarray
    index: int = 0

    @property
    def center_px(self) -> tuple[float, float]:
        w, h = self.pixels.shape
        return w / 2.0, h / 2.0


def _initial_axis(t0: np.ndarray) -> np.ndarray:
    """Deterministic in-plane axis for the first frame: project the world
    axis least aligned with the tangent (lower index wins ties)."""
    dots = np.abs(np.eye(3) @ t0)
    e = np.eye(3)[int(np.argmin(dots))]
    v = e - np.dot(e, t0) * t0
    return v / np.linalg.norm(v)


def transport_frames(tangents: np.ndarray,
                     axis1_start: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Minimal-rotation transport of an in-plane frame along unit tangents.

    Each axis1 is the previous axis1 with the new tangent component
    projected out; axis2 completes the right-handed triad.  Consecutive
    frames therefore rotate no more than the tangents themselves do.

    Returns:
        (axis1, axis2) arrays, shape (N, 3).
    """
    t = np.asarray(tangents, dtype=np.float64)
    n = t.shape[0]
    a1 = np.empty_like(t)
    a2 = np.empty_like(t)
    prev = _initial_axis(t[0]) if axis1_start is None else np.asarray(axis1_start, float)
    for k in range(n):
        v = prev - np.dot(prev, t[k]) * t[k]
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            # tangent flipped by ~90 degrees within one step; restart
            v = _initial_axis(t[k])
            norm = 1.0
        a1[k] = v / norm
        a2[k] = np.cross(t[k], a1[k])
        prev = a1[k]
    return a1, a2


def build_mpr_planes(cl: Centerline,
                     step_mm: float = 5.0,
                     extent_mm: float = 60.0,
                     resolution_mm: float = 1.0) -> list[MprPlane]:
    """Planes perpendicular to the centerline every step_mm of arc length.

    A step above 5 mm triggers a warning: slice-to-slice tracking assumes
    adjacent cross-sections stay similar.  A step exceeding the total arc
    length yields the single plane at s = 0.
    """
    if step_mm <= 0:
        raise ValueError("step_mm must be positive")
    if resolution_mm <= 0:
        raise ValueError("resolution_mm must be positive")
    if extent_mm < 1.5 * resolution_mm:
        raise ValueError("extent_mm too small for a 3x3 pixel grid")
    if step_mm > 5.0:
        warnings.warn(f"plane step {step_mm} mm exceeds 5 mm; "
                      "tracking assumes closely spaced cross-sections",
                      stacklevel=2)

    length = cl.length
    count = int(np.floor(length / step_mm + 1e-9)) + 1 if step_mm <= length else 1
    svals = np.arange(count) * step_mm
    centers = cl.point_at(svals)
    tangents = np.atleast_2d(cl.tangent_at(svals))
    a1, a2 = transport_frames(tangents)
    return [MprPlane(center=centers[k], tangent=tangents[k], axis1=a1[k],
                     axis2=a2[k], resolution=resolution_mm, extent=extent_mm,
                     s=float(svals[k]))
            for k in range(count)]


def mpr_pixel_positions(plane: MprPlane) -> np.ndarray:
    """World positions of every pixel center of a plane's grid, (w, h, 3)."""
    w, h = plane.grid_size
    oi = (np.arange(w) - w / 2.0) * plane.resolution
    oj = (np.arange(h) - h / 2.0) * plane.resolution
    return (plane.center[None, None, :]
            + oi[:, None, None] * plane.axis1[None, None, :]
            + oj[None, :, None] * plane.axis2[None, None, :])


def resample_mpr(vol: Volume, plane: MprPlane, index: int = 0,
                 fill: float = 0.0) -> MprSlice:
    """Trilinear resampling of a volume on an MPR pixel grid."""
    w, h = plane.grid_size
    if w < 3 or h < 3:
        raise ValueError("MPR grid must be at least 3x3")
    pos = mpr_pixel_positions(plane)
    vals = sample_points(vol, pos.reshape(-1, 3), fill=fill)
    return MprSlice(plane=plane, pixels=vals.reshape(w, h), index=index)
