"""Node-weighted lattice graph coupling two unfolded cross-sections.

The graph has one node per (ray x, layer y, radial sample z) with
y = 0 the slice whose outer contour is already known (the fixed layer)
and y = 1 the slice being solved.  Directed arcs encode, via closure
("every member node drags its successors in"), that

* a column's membership is a radial prefix (A_z arcs),
* neighboring rays differ by at most dx samples, including across the
  x wraparound when enabled (A_xz arcs),
* the two layers differ by at most dy samples (A_yz arcs).

Node weights on y = 1 are radially differenced intensity costs, so the
total weight of a member prefix telescopes to the cost of its top
sample.  The y = 0 layer gets a large negative weight on the fixed
prefix (forcing it into every optimum) and +inf above it; y = 1 samples
more than dp above the fixed contour are +inf (the forbidden zone).
A minimum-weight closed set therefore selects, per ray, the cheapest
surface sample within dy of the fixed contour and within dx of its
neighbors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .unfold import UnfoldedSlice


@dataclass
class TrackingParams:
    """Surface tracking knobs; distances in radial samples unless noted."""

    dx: int = 2                    # max ray-to-ray surface step
    # dy=1 tracks long seedless chains best: the per-slice band stays
    # tight around the known contour, which limits the inward random
    # walk that flat thrombus cost cannot penalize.  Raise to 2 for
    # anatomy whose caliber changes faster than dr per slice step.
    dy: int = 1                    # max slice-to-slice surface step
    dp: int = 4                    # forbidden zone: max outward growth
    rays: int = 72
    radial_samples: int = 120
    dr: float = 0.5                # radial sample spacing, mm
    wrap: bool = True              # smoothness across ray X-1 <-> 0
    thrombus_mode: str = "ring"    # "ring" (estimate) or "fixed"
    fixed_thrombus_mean: float = 40.0
    ring_margin: int = 1           # extra samples skipped above the lumen
    center_correction: bool = True
    # scoring square for the two curvature-center candidates; it must
    # reach past the thin-side wall into background tissue to tell the
    # sides apart, so it should exceed the expected wall thickness plus
    # the lumen vertex curvature radius
    eq_b_mm: float = 14.0
    ecc_min: float = 0.6           # trigger: lumen eccentricity at least this
    residual_max: float = 0.15     # trigger: ellipse fit residual at most this

    def __post_init__(self):
        if not (0 <= self.dy < 5):
            raise ValueError("dy must be in [0, 5) for stable slice coupling")
        if self.dx < 0 or self.dp < 0 or self.ring_margin < 0:
            raise ValueError("dx, dp and ring_margin must be >= 0")
        if self.rays < 3 or self.radial_samples < 2:
            raise ValueError("need >= 3 rays and >= 2 radial samples")
        if self.dr <= 0:
            raise ValueError("dr must be positive")
        if self.thrombus_mode not in ("ring", "fixed"):
            raise ValueError("thrombus_mode must be 'ring' or 'fixed'")


@dataclass
class WallGraph:
    """Node weights plus the arc-generation parameters."""

    weights: np.ndarray   # (X, 2, Z) float64, +inf allowed
    dx: int
    dy: int
    wrap: bool

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 3 or self.weights.shape[1] != 2:
            raise ValueError("weights must have shape (X, 2, Z)")

    @property
    def dims(self) -> tuple[int, int, int]:
        x, y, z = self.weights.shape
        return x, y, z

    @property
    def n_nodes(self) -> int:
        return self.weights.size


def node_id(x: np.ndarray, y, z, X: int, Z: int) -> np.ndarray:
    """Flat node index; lexicographic in (x, y, z)."""
    return (np.asarray(x) * 2 + y) * Z + z


def base_costs(samples: np.ndarray, thrombus_mean: float) -> np.ndarray:
    """Per-sample cost: absolute distance to the expected thrombus level."""
    return np.abs(np.asarray(samples, dtype=np.float64) - float(thrombus_mean))


def differenced_weights(costs: np.ndarray) -> np.ndarray:
    """Radial differencing, so prefix weight sums telescope to c[x][top]."""
    c = np.asarray(costs, dtype=np.float64)
    w = np.empty_like(c)
    w[:, 0] = c[:, 0]
    w[:, 1:] = c[:, 1:] - c[:, :-1]
    return w


def default_eps(w1: np.ndarray) -> float:
    """Weight magnitude that pins the fixed prefix into every optimum.

    Dropping k fixed-prefix nodes costs k*eps while the best possible
    gain on the solved layer is bounded by the total variation of its
    costs, i.e. sum(|w1|); eps above that makes dropping never pay.
    Integer inputs keep eps integral, preserving exact arithmetic.
    """
    return 1.0 + float(np.abs(w1[np.isfinite(w1)]).sum())


def apply_fixed_and_forbidden(w1: np.ndarray, fixed_r: np.ndarray, dp: int,
                              eps: float | None = None) -> np.ndarray:
    """Assemble full (X, 2, Z) weights around a fixed y=0 contour.

    y = 0: -eps up to fixed_r[x], +inf above (the contour is pinned).
    y = 1: w1 as given, +inf for z > fixed_r[x] + dp (forbidden zone).
    """
    w1 = np.asarray(w1, dtype=np.float64)
    X, Z = w1.shape
    fixed_r = np.asarray(fixed_r, dtype=np.int64)
    if fixed_r.shape != (X,):
        raise ValueError("fixed contour must provide one index per ray")
    if np.any(fixed_r < 0) or np.any(fixed_r >= Z):
        raise ValueError("fixed contour indices out of range")
    if dp < 0:
        raise ValueError("dp must be >= 0")
    if eps is None:
        eps = default_eps(w1)

    z = np.arange(Z)
    w = np.empty((X, 2, Z), dtype=np.float64)
    w[:, 0, :] = np.where(z[None, :] <= fixed_r[:, None], -float(eps), np.inf)
    w[:, 1, :] = np.where(z[None, :] <= fixed_r[:, None] + dp, w1, np.inf)
    return w


def build_arcs(X: int, Z: int, dx: int, dy: int,
               wrap: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic arc list (tails, heads) as flat node ids.

    Families in order: radial prefix arcs, ray smoothness arcs (+x
    neighbors, then -x, then the wraparound pair when enabled and X > 2),
    layer coupling arcs (y0->y1 then y1->y0).  Within a family the order
    is lexicographic in (x, y, z).
    """
    tails = []
    heads = []
    z = np.arange(Z)
    zdx = np.maximum(z - dx, 0)
    zdy = np.maximum(z - dy, 0)

    # A_z: (x, y, z) -> (x, y, z-1) for z > 0
    for x in range(X):
        for y in (0, 1):
            tails.append(node_id(x, y, z[1:], X, Z))
            heads.append(node_id(x, y, z[1:] - 1, X, Z))

    # A_xz: +x then -x, then wrap pair
    for x in range(X - 1):
        for y in (0, 1):
            tails.append(node_id(x, y, z, X, Z))
            heads.append(node_id(x + 1, y, zdx, X, Z))
    for x in range(1, X):
        for y in (0, 1):
            tails.append(node_id(x, y, z, X, Z))
            heads.append(node_id(x - 1, y, zdx, X, Z))
    if wrap and X > 2:
        for y in (0, 1):
            tails.append(node_id(X - 1, y, z, X, Z))
            heads.append(node_id(0, y, zdx, X, Z))
        for y in (0, 1):
            tails.append(node_id(0, y, z, X, Z))
            heads.append(node_id(X - 1, y, zdx, X, Z))

    # A_yz: y0 -> y1 then y1 -> y0
    for x in range(X):
        tails.append(node_id(x, 0, z, X, Z))
        heads.append(node_id(x, 1, zdy, X, Z))
    for x in range(X):
        tails.append(node_id(x, 1, z, X, Z))
        heads.append(node_id(x, 0, zdy, X, Z))

    return (np.concatenate(tails).astype(np.int32),
            np.concatenate(heads).astype(np.int32))


def arc_count(X: int, Z: int, wrap: bool = True) -> int:
    n = X * 2 * (Z - 1) + 2 * (X - 1) * 2 * Z + 2 * X * Z
    if wrap and X > 2:
        n += 4 * Z
    return n


def estimate_thrombus_mean(u0: UnfoldedSlice, lumen_r: np.ndarray,
                           fixed_r: np.ndarray,
                           calcium_ceiling: float | None,
                           fallback: float,
                           margin: int = 1) -> tuple[float, bool]:
    """Mean intensity of the thrombus ring on the fixed slice.

    The ring covers lumen_r[x] + 1 + margin <= z <= fixed_r[x] per ray;
    the margin keeps lumen partial-volume samples out of the estimate.
    Samples at or above the calcium ceiling are excluded.  Returns
    (mean, used_fallback); an empty ring falls back to the given value.
    """
    samples = u0.samples
    X, Z = samples.shape
    lumen_r = np.asarray(lumen_r, dtype=np.int64)
    fixed_r = np.asarray(fixed_r, dtype=np.int64)
    z = np.arange(Z)
    ring = ((z[None, :] >= (lumen_r + 1 + margin)[:, None])
            & (z[None, :] <= fixed_r[:, None]))
    if calcium_ceiling is not None:
        ring &= samples < calcium_ceiling
    if not np.any(ring):
        return float(fallback), True
    return float(samples[ring].mean()), False


def build_wall_graph(u1: UnfoldedSlice, fixed_r: np.ndarray,
                     thrombus_mean: float,
                     params: TrackingParams) -> tuple[WallGraph, float]:
    """Costs from the target slice + fixed contour -> solvable WallGraph."""
    c = base_costs(u1.samples, thrombus_mean)
    w1 = differenced_weights(c)
    eps = default_eps(w1)
    weights = apply_fixed_and_forbidden(w1, fixed_r, params.dp, eps=eps)
    return WallGraph(weights=weights, dx=params.dx, dy=params.dy,
                     wrap=params.wrap), eps
