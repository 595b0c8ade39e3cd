"""Vessel outer-wall segmentation by graph tracking on unfolded slices.

Workflow: resample a volume into cross-sections along a centerline
(volume), unfold each section into polar rays (unfold), segment the
lumen (lumen), then propagate a few seed outer contours to every other
slice by solving a minimum-weight closed set per slice pair (wallgraph,
mincut, tracker).  phantom builds synthetic ground-truth volumes and
metrics scores the result.
"""

from .lumen import (CenterlineStats, LumenMask, LumenNotFoundError,
                    LumenParams, centerline_intensity_stats, ellipticity,
                    load_mask_pgm, save_mask_pgm, segment_lumen)
from .metrics import (ClotVolume, EvalReport, clot_volume, contour_dsc, dsc,
                      evaluate_run, max_diameter, run_max_diameter)
from .mincut import (ClosedSet, InfeasibleSurfaceError, active_kernel,
                     closure_to_surface, is_closed_set, max_flow,
                     min_closed_set, solve_wall_graph, surface_radii)
from .phantom import (GroundTruth, PhantomSpec, generate_phantom,
                      truth_contours, write_truth_contours)
from .tracker import (EllipseFit, TrackResult, choose_center,
                      curvature_center_candidates, fit_ellipse, plan_tracks,
                      track_all, track_pair)
from .unfold import (RadialContour, UnfoldedSlice, contour_to_mask,
                     mask_to_radial, polygon_to_mask, polygon_to_radial,
                     read_contours, refold_contour, unfold_slice,
                     write_contours)
from .volume import (Centerline, MprPlane, MprSlice, Volume,
                     VolumeFormatError, build_mpr_planes, load_centerline,
                     load_volume, resample_mpr, sample_points,
                     save_centerline, save_volume, transport_frames,
                     trilinear_sample)
from .wallgraph import (TrackingParams, WallGraph, apply_fixed_and_forbidden,
                        base_costs, build_arcs, build_wall_graph,
                        default_eps, differenced_weights,
                        estimate_thrombus_mean, node_id)

__version__ = "0.1.0"

__all__ = [
    "Centerline", "CenterlineStats", "ClosedSet", "ClotVolume",
    "EllipseFit", "EvalReport", "GroundTruth", "InfeasibleSurfaceError",
    "LumenMask", "LumenNotFoundError", "LumenParams", "MprPlane",
    "MprSlice", "PhantomSpec", "RadialContour", "TrackResult",
    "TrackingParams", "UnfoldedSlice", "Volume", "VolumeFormatError",
    "WallGraph", "active_kernel", "apply_fixed_and_forbidden", "base_costs",
    "build_arcs", "build_mpr_planes", "build_wall_graph",
    "centerline_intensity_stats", "choose_center", "closure_to_surface",
    "clot_volume", "contour_dsc", "contour_to_mask",
    "curvature_center_candidates", "default_eps", "differenced_weights",
    "dsc", "ellipticity", "estimate_thrombus_mean", "evaluate_run",
    "fit_ellipse", "generate_phantom", "is_closed_set", "load_centerline",
    "load_mask_pgm", "load_volume", "mask_to_radial", "max_diameter",
    "max_flow", "min_closed_set", "node_id", "plan_tracks",
    "polygon_to_mask", "polygon_to_radial", "read_contours", "refold_contour",
    "resample_mpr", "run_max_diameter", "sample_points", "save_centerline",
    "save_mask_pgm", "save_volume", "segment_lumen", "solve_wall_graph",
    "surface_radii", "track_all", "track_pair", "transport_frames",
    "trilinear_sample", "truth_contours", "unfold_slice", "write_contours",
    "write_truth_contours",
]
