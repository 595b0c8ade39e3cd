"""Overlap and size metrics with hand-computable oracle cases."""

import numpy as np
import pytest

from vesselwall.metrics import (ClotVolume, clot_area_mm2, clot_volume,
                                contour_dsc, dsc, evaluate_run, max_diameter,
                                run_max_diameter)
from vesselwall.unfold import RadialContour, contour_to_mask


def _square_mask(shape, x0, y0, side):
    m = np.zeros(shape, dtype=bool)
    m[x0:x0 + side, y0:y0 + side] = True
    return m


def test_dsc_shifted_square_exactly_half():
    # two 20x20 squares overlapping in a 20x10 strip:
    # 2*200 / (400 + 400) = 0.5 exactly
    a = _square_mask((50, 50), 10, 10, 20)
    b = _square_mask((50, 50), 10, 20, 20)
    assert dsc(a, b) == 0.5


def test_dsc_identity_disjoint_empty():
    a = _square_mask((30, 30), 5, 5, 10)
    assert dsc(a, a) == 1.0
    b = _square_mask((30, 30), 20, 20, 5)
    assert dsc(a, b) == 0.0
    empty = np.zeros((30, 30), dtype=bool)
    assert dsc(empty, empty) == 1.0
    assert dsc(a, empty) == 0.0


def test_dsc_validates_shape():
    with pytest.raises(ValueError):
        dsc(np.zeros((3, 3), dtype=bool), np.zeros((4, 3), dtype=bool))


def test_contour_dsc_same_contour_is_one():
    c = RadialContour(r=np.full(36, 20), center_px=np.array([25.0, 25.0]),
                      dr=0.5)
    assert contour_dsc(c, c, (50, 50), resolution=1.0) == 1.0


def test_clot_area_hand_case():
    # outer disk radius (39+0.5)*0.25 mm = 9.875 mm; lumen half-plane
    # removed; clot area = outer area minus overlap, computed on pixels
    outer = RadialContour(r=np.full(72, 39), center_px=np.array([50.0, 50.0]),
                          dr=0.25)
    shape = (100, 100)
    res = 0.25
    outer_mask = contour_to_mask(outer, shape, resolution=res)
    lumen = np.zeros(shape, dtype=bool)
    lumen[:, :50] = True
    got = clot_area_mm2(outer, lumen, resolution=res)
    expected_px = (outer_mask & ~lumen).sum()
    assert got == pytest.approx(expected_px * res * res)
    # roughly half the disk: pi * 9.875^2 / 2 = 153.2 mm^2
    assert got == pytest.approx(np.pi * 9.875 ** 2 / 2.0, rel=0.05)


def test_clot_volume_sums_and_skips():
    outer = RadialContour(r=np.full(36, 19), center_px=np.array([25.0, 25.0]),
                          dr=0.5)
    lumen = np.zeros((50, 50), dtype=bool)
    contours = [outer, None, outer]
    cv = clot_volume(contours, [lumen, lumen, lumen], resolution=1.0,
                     spacing_mm=5.0)
    assert isinstance(cv, ClotVolume)
    assert cv.slices_used == 2
    assert cv.slices_skipped == 1
    per_slice = clot_area_mm2(outer, lumen, resolution=1.0)
    assert cv.volume_mm3 == pytest.approx(2 * per_slice * 5.0)


def test_max_diameter_circle_and_ellipse():
    circle = RadialContour(r=np.full(72, 39), center_px=np.array([50.0, 50.0]),
                           dr=0.25)
    # diameter = 2 * (39+0.5)*0.25 = 19.75 mm
    assert max_diameter(circle, resolution=1.0) == pytest.approx(19.75,
                                                                 abs=1e-9)
    # an off-center blob: farthest pair, not twice the max radius
    r = np.full(8, 10)
    r[0] = 30       # a single long spike to the +x side
    spiky = RadialContour(r=r, center_px=np.zeros(2), dr=0.5)
    # vertices: +x at 15.25 mm, -x at 5.25 mm -> farthest pair 20.5 mm
    assert max_diameter(spiky, resolution=1.0) == pytest.approx(20.5)


def test_max_diameter_scales_with_resolution():
    c = RadialContour(r=np.full(36, 9), center_px=np.zeros(2), dr=0.5)
    d1 = max_diameter(c, resolution=1.0)
    assert max_diameter(c, resolution=2.0) == pytest.approx(d1)


def test_run_max_diameter_tie_takes_lower_slice():
    small = RadialContour(r=np.full(12, 5), center_px=np.zeros(2), dr=0.5)
    big = RadialContour(r=np.full(12, 9), center_px=np.zeros(2), dr=0.5)
    dia, k = run_max_diameter([None, small, big, big, small])
    assert k == 2
    assert dia == pytest.approx(max_diameter(big))
    with pytest.raises(ValueError):
        run_max_diameter([None, None])


def test_evaluate_run_report_contents():
    shape = (60, 60)
    center = np.array([30.0, 30.0])
    ref = [RadialContour(r=np.full(36, 20), center_px=center, dr=0.5,
                         slice_index=k) for k in range(3)]
    auto = [ref[0],
            RadialContour(r=np.full(36, 22), center_px=center, dr=0.5,
                          slice_index=1),
            None]
    lumen = np.zeros(shape, dtype=bool)
    rep = evaluate_run(auto, ref, [lumen] * 3, shape, resolution=1.0,
                       spacing_mm=5.0)
    assert rep.n_evaluated == 2
    assert rep.n_skipped == 1
    assert rep.per_slice[0][1] == 1.0
    assert rep.per_slice[2][1] is None
    assert rep.dsc_max == 1.0
    assert 0.0 < rep.dsc_min < 1.0
    assert rep.dsc_mean == pytest.approx(
        (rep.per_slice[0][1] + rep.per_slice[1][1]) / 2.0)
    # population std of the two values
    vals = [rep.per_slice[0][1], rep.per_slice[1][1]]
    assert rep.dsc_std == pytest.approx(np.std(vals))
    text = rep.to_text()
    assert "slices evaluated: 2 (skipped 1)" in text
    assert "DSC mean" in text
    assert "clot volume" in text and "mm^3" in text
    assert "max outer diameter" in text
    csv = rep.to_csv()
    lines = csv.strip().splitlines()
    assert lines[0] == "slice,dsc"
    assert lines[1] == "0,1.000000"
    assert lines[3] == "2,"      # skipped slice has an empty cell
