"""Minimum-weight closed set via s-t minimum cut.

A closed set of a directed graph contains, with every member, all
successors of that member.  The minimum-weight closed set reduces to a
minimum cut: source arcs s -> v with capacity -w for negative-weight
nodes, sink arcs v -> t with capacity w for positive-weight nodes
(unbounded for +inf nodes), and unbounded arcs for the structural
edges.  Unbounded means larger than the sum of all finite capacities,
so such arcs never cross a minimum cut.

Among cut ties the *maximal* optimal closed set is reported: the
complement of the nodes that can still reach the sink in the residual
graph.  That choice is unique, is independent of how the maximum flow
was found, and keeps surfaces from drifting inward when many radii tie.

The flow kernel is the compiled extension when available, else the
pure-Python twin; set VESSELWALL_PURE_MAXFLOW=1 to force the fallback.
Both produce bit-identical residuals, so results never depend on which
one ran.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .unfold import RadialContour, UnfoldedSlice
from .wallgraph import WallGraph, build_arcs

if os.environ.get("VESSELWALL_PURE_MAXFLOW"):
    from . import _maxflow_py as _kernel
    _KERNEL_NAME = "python"
else:
    try:
        from . import _maxflow_c as _kernel  # type: ignore[attr-defined]
        _KERNEL_NAME = "compiled"
    except ImportError:
        from . import _maxflow_py as _kernel
        _KERNEL_NAME = "python"


class InfeasibleSurfaceError(RuntimeError):
    """No surface can be extracted from the solved closed set."""


def active_kernel() -> str:
    """Which max-flow kernel is in use: 'compiled' or 'python'."""
    return _KERNEL_NAME


def max_flow(n: int, tails, heads, caps, s: int, t: int):
    """Kernel wrapper; +inf capacities become sum(finite) + 2.

    Returns (flow, side, bound) where side marks the maximal source
    side and any flow >= bound would mean an unbounded arc was cut.
    """
    caps = np.ascontiguousarray(caps, dtype=np.float64)
    if np.any(np.isnan(caps)) or np.any(caps < 0):
        raise ValueError("capacities must be >= 0 (inf allowed)")
    finite = np.isfinite(caps)
    bound = float(caps[finite].sum()) + 2.0
    flow, side = _kernel.solve(
        int(n),
        np.ascontiguousarray(tails, dtype=np.int32),
        np.ascontiguousarray(heads, dtype=np.int32),
        np.where(finite, caps, bound),
        int(s), int(t))
    return flow, side, bound


@dataclass
class ClosedSet:
    """Result of a minimum-weight closed set solve."""

    members: np.ndarray          # sorted node ids
    cost: float                  # sum of member weights
    solved: bool                 # False when short-circuited
    flow: float = 0.0
    note: str = ""
    kernel: str = field(default_factory=active_kernel)


def min_closed_set(weights, tails, heads) -> ClosedSet:
    """Minimum-weight closed set of the graph (tails[i] -> heads[i]).

    weights is one float per node; +inf forbids membership outright.
    With no negative weight the empty set is already optimal and is
    returned without solving (note says so); otherwise the maximal
    optimal set is found via minimum cut.
    """
    w = np.ascontiguousarray(weights, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("weights must be one value per node")
    if np.any(np.isnan(w)) or np.any(np.isneginf(w)):
        raise ValueError("node weights must not be NaN or -inf")
    n = w.size
    tails = np.ascontiguousarray(tails, dtype=np.int64)
    heads = np.ascontiguousarray(heads, dtype=np.int64)
    if tails.shape != heads.shape or tails.ndim != 1:
        raise ValueError("tails and heads must be matching 1-D arrays")
    if tails.size and (tails.min() < 0 or tails.max() >= n
                       or heads.min() < 0 or heads.max() >= n):
        raise ValueError("arc endpoint out of range")

    neg = w < 0
    if not np.any(neg):
        return ClosedSet(members=np.empty(0, dtype=np.int64), cost=0.0,
                         solved=False, flow=0.0,
                         note="no negative weights; empty set is optimal")

    s = n
    t = n + 1
    idx = np.arange(n, dtype=np.int64)
    src = idx[neg]
    snk = idx[w > 0]                      # finite positives and +inf
    all_tails = np.concatenate([tails, np.full(src.size, s, dtype=np.int64),
                                snk])
    all_heads = np.concatenate([heads, src,
                                np.full(snk.size, t, dtype=np.int64)])
    all_caps = np.concatenate([np.full(tails.size, np.inf),
                               -w[src], w[snk]])

    flow, side, bound = max_flow(n + 2, all_tails, all_heads, all_caps, s, t)
    if not flow < bound:
        raise RuntimeError("unbounded arc crossed the cut; "
                           "the reduction is broken")
    members = idx[side[:n] == 1]
    if np.any(np.isposinf(w[members])):
        raise RuntimeError("forbidden (+inf) node selected; "
                           "the reduction is broken")
    return ClosedSet(members=members, cost=float(w[members].sum()),
                     solved=True, flow=float(flow))


def is_closed_set(members, tails, heads, n: int) -> bool:
    """True when every arc out of a member lands on a member."""
    mask = np.zeros(n, dtype=bool)
    mask[np.asarray(members, dtype=np.int64)] = True
    tails = np.asarray(tails, dtype=np.int64)
    heads = np.asarray(heads, dtype=np.int64)
    return bool(np.all(~mask[tails] | mask[heads]))


def solve_wall_graph(g: WallGraph) -> ClosedSet:
    """Flatten a WallGraph and find its minimum-weight closed set."""
    X, _, Z = g.dims
    tails, heads = build_arcs(X, Z, g.dx, g.dy, g.wrap)
    return min_closed_set(g.weights.reshape(-1), tails, heads)


def surface_radii(closed: ClosedSet, X: int, Z: int) -> np.ndarray:
    """Outermost selected sample per ray on the solved (y = 1) layer."""
    if not closed.solved or closed.members.size == 0:
        raise InfeasibleSurfaceError(
            "no surface: " + (closed.note or "closed set is empty"))
    ids = closed.members
    on_y1 = (ids // Z) % 2 == 1
    ids = ids[on_y1]
    x = ids // (2 * Z)
    z = ids % Z
    r = np.full(X, -1, dtype=np.int64)
    np.maximum.at(r, x, z)
    if np.any(r < 0):
        raise InfeasibleSurfaceError("a ray has no selected samples")
    return r


def closure_to_surface(closed: ClosedSet, like: UnfoldedSlice) -> RadialContour:
    """Surface of the solved layer in the target slice's unfold frame."""
    X, Z = like.samples.shape
    return RadialContour(r=surface_radii(closed, X, Z),
                         center_px=like.center_px.copy(),
                         dr=like.dr, theta0=like.theta0,
                         slice_index=like.slice_index)
