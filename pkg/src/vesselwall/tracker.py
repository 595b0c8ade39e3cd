"""Slice-to-slice propagation of the outer wall contour.

A handful of seed contours (typically hand-drawn) anchor the run.
Every other slice is assigned to its nearest seed and reached through a
chain of adjacent-slice solves: the already-known contour becomes the
fixed layer of a two-slice graph and the minimum-weight closed set
yields the neighbor's contour, which then seeds the next link.

Each link re-unfolds BOTH slices about a single center on the target
slice.  By default that is the centerline pierce pixel; when the target
lumen is clearly elliptical (eccentricity and fit residual within
bounds) the center moves to the curvature-center candidate whose
neighborhood looks least like blood, which biases rays to leave the
lumen on the thrombus-thick side before hitting the wall.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lumen import (CenterlineStats, LumenNotFoundError, LumenParams,
                    segment_lumen)
from .mincut import (InfeasibleSurfaceError, active_kernel,
                     closure_to_surface, solve_wall_graph)
from .unfold import (RadialContour, mask_to_radial, polygon_to_radial,
                     refold_contour, unfold_slice)
from .volume import MprSlice
from .wallgraph import TrackingParams, build_wall_graph, estimate_thrombus_mean


@dataclass
class EllipseFit:
    """Moment-based ellipse summary of a pixel mask."""

    center: np.ndarray       # (2,) px
    axes: tuple[float, float]    # semi-axes (major, minor), px
    angle: float             # major axis direction, radians
    eccentricity: float
    residual: float          # 1 - IoU between mask and fitted ellipse


def fit_ellipse(mask: np.ndarray) -> EllipseFit:
    """Fit an ellipse to a mask by second-order central moments.

    Semi-axes are 2*sqrt(eigenvalue) with the 1/12 per-pixel variance
    term included, which reproduces a solid ellipse's own dimensions.
    """
    ii, jj = np.nonzero(mask)
    if ii.size == 0:
        raise ValueError("empty mask cannot be fit")
    cx = ii.mean()
    cy = jj.mean()
    x = ii - cx
    y = jj - cy
    n = ii.size
    cov = np.array([[np.dot(x, x) / n + 1.0 / 12.0, np.dot(x, y) / n],
                    [np.dot(x, y) / n, np.dot(y, y) / n + 1.0 / 12.0]])
    evals, evecs = np.linalg.eigh(cov)      # ascending
    b = 2.0 * np.sqrt(max(evals[0], 0.0))
    a = 2.0 * np.sqrt(max(evals[1], 0.0))
    major = evecs[:, 1]
    if major[0] < 0 or (major[0] == 0 and major[1] < 0):
        major = -major          # orientation is mod pi; canonical half-turn
    angle = float(np.arctan2(major[1], major[0]))
    ecc = float(np.sqrt(max(0.0, 1.0 - (b / a) ** 2))) if a > 0 else 0.0

    w, h = mask.shape
    pi = np.arange(w, dtype=np.float64)[:, None] - cx
    pj = np.arange(h, dtype=np.float64)[None, :] - cy
    u = pi * major[0] + pj * major[1]
    v = -pi * major[1] + pj * major[0]
    if a > 0 and b > 0:
        ell = (u / a) ** 2 + (v / b) ** 2 <= 1.0
    else:
        ell = np.zeros_like(mask, dtype=bool)
    union = np.count_nonzero(mask | ell)
    inter = np.count_nonzero(mask & ell)
    residual = 1.0 - (inter / union if union else 0.0)
    return EllipseFit(center=np.array([cx, cy]), axes=(float(a), float(b)),
                      angle=angle, eccentricity=ecc, residual=float(residual))


def curvature_center_candidates(fit: EllipseFit) -> np.ndarray:
    """Centers of curvature at the two major-axis vertices, (2, 2) px."""
    a, b = fit.axes
    d = a - (b * b) / a if a > 0 else 0.0
    u = np.array([np.cos(fit.angle), np.sin(fit.angle)])
    return np.stack([fit.center + d * u, fit.center - d * u])


def choose_center(pixels: np.ndarray, lumen_mask: np.ndarray,
                  candidates: np.ndarray, window_px: int) -> tuple[np.ndarray, np.ndarray]:
    """Pick the candidate whose square window holds more non-lumen mass.

    Lumen pixels count zero, every other pixel its intensity, summed
    over an odd window_px x window_px square clipped to the image; the
    larger total wins.  A thrombus-side candidate scores higher because
    its neighborhood exits the lumen sooner.  Exact ties prefer the
    candidate closer to the lumen centroid, then the lower index.
    """
    t_img = np.where(lumen_mask, 0.0, pixels.astype(np.float64))
    w, h = pixels.shape
    if window_px % 2 == 0:
        window_px += 1
    half = (window_px - 1) // 2
    ii, jj = np.nonzero(lumen_mask)
    centroid = (np.array([ii.mean(), jj.mean()]) if ii.size
                else np.array([w / 2.0, h / 2.0]))

    scores = np.empty(len(candidates))
    for k, c in enumerate(candidates):
        ci = int(round(c[0]))
        cj = int(round(c[1]))
        i0, i1 = max(ci - half, 0), min(ci + half + 1, w)
        j0, j1 = max(cj - half, 0), min(cj + half + 1, h)
        scores[k] = t_img[i0:i1, j0:j1].sum() if i0 < i1 and j0 < j1 else 0.0

    best = np.nonzero(scores == scores.max())[0]
    if best.size > 1:
        dist = np.linalg.norm(candidates[best] - centroid, axis=1)
        best = best[dist == dist.min()]
    k = int(best[0])
    return np.asarray(candidates[k], dtype=np.float64), scores


def plan_tracks(n_slices: int, seed_indices) -> list[tuple[int, int]]:
    """Order of (source, target) solves covering all non-seed slices.

    Every slice belongs to its nearest seed (lower seed wins distance
    ties).  Seeds are visited in ascending order; each first walks its
    backward chain, then its forward chain.
    """
    seeds = sorted(set(int(i) for i in seed_indices))
    if not seeds:
        raise ValueError("at least one seed slice is required")
    if seeds[0] < 0 or seeds[-1] >= n_slices:
        raise ValueError("seed slice index out of range")
    seed_set = set(seeds)
    sarr = np.array(seeds)
    owner = [int(sarr[np.argmin(np.abs(sarr - i))]) for i in range(n_slices)]

    pairs: list[tuple[int, int]] = []
    for s in seeds:
        j = s - 1
        while j >= 0 and j not in seed_set and owner[j] == s:
            pairs.append((j + 1, j))
            j -= 1
        j = s + 1
        while j < n_slices and j not in seed_set and owner[j] == s:
            pairs.append((j - 1, j))
            j += 1
    return pairs


def track_pair(src: MprSlice, src_contour: RadialContour, dst: MprSlice,
               stats: CenterlineStats, params: TrackingParams | None = None,
               lumen_params: LumenParams | None = None) -> tuple[RadialContour, dict]:
    """Propagate the outer contour from one slice to an adjacent one."""
    params = params or TrackingParams()
    lumen_params = lumen_params or LumenParams()

    dst_lumen = segment_lumen(dst, stats, lumen_params)
    center = np.asarray(dst.center_px, dtype=np.float64)
    corrected = False
    fit = None
    if params.center_correction:
        try:
            fit = fit_ellipse(dst_lumen.mask)
        except ValueError:
            fit = None
        if (fit is not None and fit.eccentricity >= params.ecc_min
                and fit.residual <= params.residual_max):
            window = int(round(params.eq_b_mm / dst.plane.resolution))
            center, _ = choose_center(dst.pixels, dst_lumen.mask,
                                      curvature_center_candidates(fit),
                                      max(window, 1))
            corrected = True

    # the known contour, re-cast as radii about the target center
    poly = refold_contour(src_contour, resolution=src.plane.resolution)
    fixed_r, star = polygon_to_radial(poly, center, params.rays,
                                      params.radial_samples, params.dr,
                                      resolution=src.plane.resolution,
                                      theta0=src_contour.theta0)

    u1 = unfold_slice(dst, center, params.rays, params.radial_samples, params.dr,
                theta0=src_contour.theta0)

    used_fallback = False
    if params.thrombus_mode == "ring":
        src_lumen = segment_lumen(src, stats, lumen_params)
        u0 = unfold_slice(src, center, params.rays, params.radial_samples,
                    params.dr, theta0=src_contour.theta0)
        lumen_r = mask_to_radial(src_lumen.mask, center, params.rays,
                                 params.radial_samples, params.dr,
                                 resolution=src.plane.resolution,
                                 theta0=src_contour.theta0)
        thrombus_mean, used_fallback = estimate_thrombus_mean(
            u0, lumen_r, fixed_r,
            calcium_ceiling=lumen_params.calcium_factor * stats.mean,
            fallback=params.fixed_thrombus_mean, margin=params.ring_margin)
    else:
        thrombus_mean = params.fixed_thrombus_mean

    graph, eps = build_wall_graph(u1, fixed_r, thrombus_mean, params)
    closed = solve_wall_graph(graph)
    contour = closure_to_surface(closed, u1)

    diag = {"pair": (src.index, dst.index), "center": (float(center[0]),
            float(center[1])), "corrected": corrected, "star": star,
            "thrombus_mean": float(thrombus_mean),
            "thrombus_fallback": used_fallback, "cost": closed.cost,
            "eps": eps, "kernel": active_kernel(),
            "lumen_ellipticity": dst_lumen.ellipticity,
            "branch_suspected": dst_lumen.branch_suspected}
    return contour, diag


@dataclass
class TrackResult:
    """Contours per slice plus per-link diagnostics and failures."""

    contours: list        # RadialContour or None per slice index
    failures: dict = field(default_factory=dict)    # slice -> reason
    diagnostics: list = field(default_factory=list)  # one dict per link

    @property
    def tracked(self) -> int:
        return sum(1 for c in self.contours if c is not None)


def track_all(slices: list[MprSlice], seeds: list[RadialContour],
              stats: CenterlineStats, params: TrackingParams | None = None,
              lumen_params: LumenParams | None = None) -> TrackResult:
    """Run the full plan; seed contours are kept verbatim.

    A failed link (no lumen, no feasible surface) marks its target
    slice failed; slices further down the same chain inherit the
    failure instead of tracking from a bogus contour.
    """
    params = params or TrackingParams()
    n = len(slices)
    contours: list[RadialContour | None] = [None] * n
    for seed in seeds:
        if not (0 <= seed.slice_index < n):
            raise ValueError(f"seed slice {seed.slice_index} out of range")
        contours[seed.slice_index] = seed
    result = TrackResult(contours=contours)

    for a, b in plan_tracks(n, [seed.slice_index for seed in seeds]):
        if contours[a] is None:
            result.failures[b] = f"upstream slice {a} failed"
            continue
        try:
            contour, diag = track_pair(slices[a], contours[a], slices[b],
                                       stats, params, lumen_params)
        except (LumenNotFoundError, InfeasibleSurfaceError) as exc:
            result.failures[b] = str(exc)
            continue
        contours[b] = contour
        result.diagnostics.append(diag)
    return result
