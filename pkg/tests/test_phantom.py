"""Synthetic phantom generation: geometry, intensities, determinism."""

import numpy as np
import pytest

from vesselwall.phantom import GroundTruth, PhantomSpec, generate_phantom, truth_contours
from vesselwall.volume import build_mpr_planes, trilinear_sample


def _small_spec(**kw):
    base = dict(shape="straight", length_mm=40.0, lumen_radius_mm=6.0,
                outer_radius_mm=10.0, noise_sigma=0.0, spacing_mm=1.0)
    base.update(kw)
    return PhantomSpec(**base)


def test_spec_validation():
    with pytest.raises(ValueError):
        PhantomSpec(shape="zigzag")
    with pytest.raises(ValueError):
        PhantomSpec(lumen_eccentricity=1.0)
    with pytest.raises(ValueError):
        PhantomSpec(length_mm=0.0)


def test_lumen_axes_from_eccentricity():
    spec = PhantomSpec(lumen_radius_mm=10.0, lumen_eccentricity=0.6)
    a, b = spec.lumen_axes
    assert a == 10.0
    assert b == pytest.approx(8.0)


def test_geometry_clearance_enforced():
    with pytest.raises(ValueError, match="clears the lumen"):
        generate_phantom(_small_spec(lumen_radius_mm=9.8,
                                     outer_radius_mm=10.0))
    with pytest.raises(ValueError, match="offset"):
        generate_phantom(_small_spec(lumen_offset_mm=11.0))


def test_noiseless_intensity_values():
    vol, cl, gt = generate_phantom(_small_spec())
    mid = cl.point_at(20.0)
    # blood at the center, clot half-way through the wall, tissue outside
    assert trilinear_sample(vol, mid) == pytest.approx(300.0, abs=1.0)
    clot_pt = mid + np.array([0.0, 8.0, 0.0])
    assert trilinear_sample(vol, clot_pt) == pytest.approx(40.0, abs=1.0)
    tissue_pt = mid + np.array([0.0, 14.0, 0.0])
    assert trilinear_sample(vol, tissue_pt) == pytest.approx(28.0, abs=1.0)


def test_same_seed_reproduces_bytes_different_seed_differs():
    spec_a = _small_spec(noise_sigma=10.0, seed=42)
    spec_b = _small_spec(noise_sigma=10.0, seed=42)
    spec_c = _small_spec(noise_sigma=10.0, seed=43)
    va, _, _ = generate_phantom(spec_a)
    vb, _, _ = generate_phantom(spec_b)
    vc, _, _ = generate_phantom(spec_c)
    assert va.data.tobytes() == vb.data.tobytes()
    assert va.data.tobytes() != vc.data.tobytes()


def test_masks_nest_lumen_inside_wall():
    spec = _small_spec(lumen_eccentricity=0.5, lumen_offset_mm=2.0)
    vol, cl, gt = generate_phantom(spec)
    planes = build_mpr_planes(cl, step_mm=5.0, extent_mm=25.0,
                              resolution_mm=1.0)
    for plane in (planes[0], planes[len(planes) // 2], planes[-1]):
        lumen, wall = gt.masks_for_plane(plane)
        assert lumen.any() and wall.any()
        assert not (lumen & ~wall).any(), "lumen must lie inside the wall"
        assert wall.sum() > lumen.sum()


def test_truth_contours_outer_encloses_lumen():
    spec = _small_spec(lumen_eccentricity=0.5, lumen_offset_mm=1.5)
    vol, cl, gt = generate_phantom(spec)
    planes = build_mpr_planes(cl, step_mm=5.0, extent_mm=25.0,
                              resolution_mm=1.0)
    outer = truth_contours(gt, planes, rays=36, radial_samples=80, dr=0.5)
    lumen = truth_contours(gt, planes, rays=36, radial_samples=80, dr=0.5,
                           which="lumen")
    assert len(outer) == len(planes)
    for k, (co, cl_) in enumerate(zip(outer, lumen)):
        assert co.slice_index == k
        assert np.all(co.r >= cl_.r)
        assert np.all(co.r > 0)


def test_truth_contour_radius_matches_analytic():
    spec = _small_spec()
    vol, cl, gt = generate_phantom(spec)
    plane = build_mpr_planes(cl, step_mm=5.0, extent_mm=25.0,
                             resolution_mm=1.0)[4]
    idx = gt.contour_for_plane(plane, rays=24, radial_samples=80, dr=0.5)
    # outer radius 10 mm -> last enclosed sample center: (r+0.5)*0.5 <= 10
    assert np.all(np.abs(idx - 19) <= 1)


def test_bulge_raises_outer_radius_at_center_only():
    spec = _small_spec(length_mm=100.0, bulge_amplitude_mm=4.0,
                       bulge_width_mm=10.0)
    gt = generate_phantom(spec)[2]
    assert gt.outer_base_radius(50.0) == pytest.approx(14.0)
    assert gt.outer_base_radius(0.0) == pytest.approx(10.0, abs=0.01)
    assert gt.outer_base_radius(100.0) == pytest.approx(10.0, abs=0.01)


def test_outer_radius_offset_geometry():
    # wall circle center sits at -offset along the frame's first axis
    spec = _small_spec(lumen_radius_mm=4.0, lumen_offset_mm=2.0)
    gt = generate_phantom(spec)[2]
    assert gt.outer_radius(20.0, 0.0) == pytest.approx(8.0)    # thin side
    assert gt.outer_radius(20.0, np.pi) == pytest.approx(12.0)  # thick side


def test_calcium_specks_on_lumen_rim():
    spec = _small_spec(calcium_count=3, calcium_radius_mm=1.5, seed=5)
    vol, cl, gt = generate_phantom(spec)
    coords = np.argwhere(vol.data >= 890.0)
    assert coords.size > 0, "calcium voxels must exist"
    pts = vol.origin + coords * np.array(vol.spacing)
    s, theta, rho = gt.frames.locate(pts)
    rim = gt.lumen_radius(s, theta)
    # every calcium voxel lies within a speck radius of the lumen surface
    assert np.all(np.abs(rho - rim) <= spec.calcium_radius_mm + spec.spacing_mm)


def test_arc_phantom_centerline_curves():
    spec = _small_spec(shape="arc", length_mm=60.0, arc_radius_mm=100.0)
    vol, cl, gt = generate_phantom(spec)
    assert cl.length == pytest.approx(60.0, abs=0.01)
    t0 = cl.tangent_at(0.0)
    t1 = cl.tangent_at(60.0)
    ang = np.degrees(np.arccos(np.clip(np.dot(t0, t1), -1, 1)))
    # 60 mm along a 100 mm radius arc turns 60/100 rad ~ 34.4 degrees
    assert ang == pytest.approx(np.degrees(0.6), abs=1.5)


def test_helix_phantom_valid():
    spec = _small_spec(shape="helix", length_mm=80.0)
    vol, cl, gt = generate_phantom(spec)
    assert cl.length == pytest.approx(80.0, abs=0.5)
    lumen, wall = gt.masks_for_plane(
        build_mpr_planes(cl, step_mm=5.0, extent_mm=25.0)[3])
    assert lumen.any() and (wall & ~lumen).any()
