"""Acceptance suite: one criterion per test, one summary line per criterion.

Every criterion records PASS/FAIL through the conftest hook so the final
pytest output carries one line per criterion regardless of verbosity.
"""

import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import record_criterion
from oracles import (brute_force_min_closed_set, members_to_mask,
                     random_closure_graph)
from vesselwall.cli import main as cli_main
from vesselwall.lumen import CenterlineStats, centerline_intensity_stats, segment_lumen
from vesselwall.metrics import clot_volume, contour_dsc, dsc, run_max_diameter
from vesselwall.mincut import is_closed_set, min_closed_set, solve_wall_graph, surface_radii
from vesselwall.phantom import PhantomSpec, generate_phantom, truth_contours
from vesselwall.tracker import (choose_center, curvature_center_candidates,
                                fit_ellipse, plan_tracks, track_all)
from vesselwall.unfold import UnfoldedSlice
from vesselwall.volume import build_mpr_planes, resample_mpr
from vesselwall.wallgraph import (TrackingParams, WallGraph,
                                  apply_fixed_and_forbidden, base_costs,
                                  build_wall_graph, differenced_weights)


@contextmanager
def criterion(number: int, description: str):
    passed = False
    try:
        yield
        passed = True
    finally:
        record_criterion(number, description, passed)


# ---------------------------------------------------------------------------
# 1. solver agrees with exhaustive enumeration


def test_criterion_1_solver_vs_brute_force():
    with criterion(1, "min closed set matches brute force on 500 random "
                      "graphs (<=18 nodes, integer costs in [-10, 10]) "
                      "within 60 s"):
        rng = np.random.default_rng(2024)
        start = time.perf_counter()
        for _ in range(500):
            weights, tails, heads = random_closure_graph(rng, max_nodes=18,
                                                         int_costs=True)
            cs = min_closed_set(weights, tails, heads)
            ref_cost, ref_union = brute_force_min_closed_set(weights, tails,
                                                             heads)
            assert cs.cost == pytest.approx(ref_cost, abs=1e-9)
            assert is_closed_set(cs.members, tails, heads, weights.size)
            # maximal tie-break: solver returns the union of all optima
            assert members_to_mask(cs.members) == ref_union
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0, f"brute-force comparison took {elapsed:.1f} s"


# ---------------------------------------------------------------------------
# 2. telescoping identity of the differenced column weights


def test_criterion_2_telescoping_cost_identity():
    with criterion(2, "solved cost minus the fixed-layer term equals the "
                      "sum of per-ray boundary costs (telescoping)"):
        rng = np.random.default_rng(7)
        for _ in range(50):
            X = int(rng.integers(4, 12))
            Z = int(rng.integers(8, 24))
            samples = rng.uniform(0.0, 120.0, size=(X, Z))
            u1 = UnfoldedSlice(samples=samples, center_px=np.zeros(2),
                               dr=0.5, theta0=0.0)
            base = int(rng.integers(1, Z - 6))
            fixed = base + rng.integers(0, 2, size=X)
            mu = float(rng.uniform(20.0, 60.0))
            params = TrackingParams(dx=1, dy=2, dp=4)
            g, eps = build_wall_graph(u1, fixed, mu, params)
            cs = solve_wall_graph(g)
            r = surface_radii(cs, X, Z)

            c = base_costs(samples, mu)
            n_fixed_nodes = int(np.sum(fixed + 1))
            lhs = cs.cost - (-eps * n_fixed_nodes)
            rhs = float(np.sum(c[np.arange(X), r]))
            assert lhs == pytest.approx(rhs, abs=1e-6)


# ---------------------------------------------------------------------------
# 3. structural constraints hold on every random solve


def _lipschitz_fixed(rng, X, Z, dx, margin):
    base = int(rng.integers(0, max(1, Z - margin)))
    return np.minimum(base + rng.integers(0, dx + 1, size=X), Z - 1)


def test_criterion_3_thousand_solves_no_violations():
    with criterion(3, "1000 random wall-graph solves produce zero "
                      "smoothness/prefix/pinning violations"):
        rng = np.random.default_rng(11)
        violations = 0
        for _ in range(1000):
            X = int(rng.integers(4, 11))
            Z = int(rng.integers(6, 17))
            dx = int(rng.integers(1, 3))
            dy = int(rng.integers(0, 3))
            dp = int(rng.integers(2, 6))
            wrap = bool(rng.integers(0, 2))
            w1 = rng.normal(0.0, 5.0, size=(X, Z))
            fixed = _lipschitz_fixed(rng, X, Z, dx, margin=dp + 1)
            weights = apply_fixed_and_forbidden(w1, fixed, dp=dp)
            g = WallGraph(weights=weights, dx=dx, dy=dy, wrap=wrap)
            cs = solve_wall_graph(g)
            member = np.zeros(weights.size, dtype=bool)
            member[cs.members] = True
            member = member.reshape(X, 2, Z)

            ok = True
            for x in range(X):
                for y in (0, 1):
                    col = member[x, y]
                    k = int(col.sum())
                    if not (np.all(col[:k]) and not col[k:].any()):
                        ok = False
                if int(member[x, 0].sum()) != int(fixed[x]) + 1:
                    ok = False
            r = member[:, 1, :].sum(axis=1) - 1
            if np.any(r < 0) or np.any(np.abs(r - fixed) > dy):
                ok = False
            if np.any(r - fixed > dp):
                ok = False
            nbr = range(X - 1) if not wrap else range(X)
            for x in nbr:
                if abs(int(r[x]) - int(r[(x + 1) % X])) > dx:
                    ok = False
            if not ok:
                violations += 1
        assert violations == 0


# ---------------------------------------------------------------------------
# 4. end-to-end tracking accuracy on noisy phantoms


def _tracking_run(shape_name, arc_radius=150.0, seed=0):
    spec = PhantomSpec(shape=shape_name, length_mm=200.0,
                       arc_radius_mm=arc_radius,
                       lumen_radius_mm=10.0, lumen_eccentricity=0.6,
                       lumen_offset_mm=2.5, outer_radius_mm=16.0,
                       bulge_amplitude_mm=5.0, noise_sigma=10.0, seed=seed)
    vol, cl, gt = generate_phantom(spec)
    planes = build_mpr_planes(cl, step_mm=5.0, extent_mm=60.0,
                              resolution_mm=1.0)
    slices = [resample_mpr(vol, p, index=k) for k, p in enumerate(planes)]
    stats = centerline_intensity_stats(vol, cl)
    params = TrackingParams()
    ref = truth_contours(gt, planes, rays=params.rays,
                         radial_samples=params.radial_samples, dr=params.dr)
    n = len(slices)
    seed_at = sorted({0, n // 2, n - 1})
    seeds = [ref[i] for i in seed_at]

    t0 = time.perf_counter()
    result = track_all(slices, seeds, stats, params)
    elapsed = time.perf_counter() - t0

    shape = slices[0].pixels.shape
    scores = [contour_dsc(result.contours[k], ref[k], shape, resolution=1.0)
              for k in range(n)
              if k not in seed_at and result.contours[k] is not None]
    return n, len(scores), float(np.mean(scores)), elapsed, result


def test_criterion_4_phantom_tracking_dsc():
    with criterion(4, "straight and curved noisy phantoms (sigma=10, >=40 "
                      "slices, 3 seed slices) track with mean DSC >= 0.90 "
                      "in <= 30 s each"):
        for shape_name in ("straight", "arc"):
            n, n_scored, mean_dsc, elapsed, result = _tracking_run(shape_name)
            assert n >= 40, f"{shape_name}: only {n} slices"
            assert not result.failures, f"{shape_name}: {result.failures}"
            assert n_scored == n - 3
            assert mean_dsc >= 0.90, (f"{shape_name}: mean DSC {mean_dsc:.4f}"
                                      f" below 0.90")
            assert elapsed <= 30.0, f"{shape_name}: took {elapsed:.1f} s"


# ---------------------------------------------------------------------------
# 5. center correction picks the thrombus side


def test_criterion_5_center_correction_side():
    with criterion(5, "center correction picks the thick (thrombus) side "
                      "on >= 95% of >= 50 triggered slices"):
        spec = PhantomSpec(shape="straight", length_mm=300.0,
                           lumen_radius_mm=10.0, lumen_eccentricity=0.95,
                           lumen_offset_mm=2.7, outer_radius_mm=16.0,
                           noise_sigma=10.0, seed=11)
        vol, cl, gt = generate_phantom(spec)
        planes = build_mpr_planes(cl, step_mm=5.0, extent_mm=60.0,
                                  resolution_mm=1.0)
        stats = centerline_intensity_stats(vol, cl)
        params = TrackingParams()

        triggered = 0
        correct = 0
        for k, plane in enumerate(planes):
            slc = resample_mpr(vol, plane, index=k)
            lumen = segment_lumen(slc, stats)
            fit = fit_ellipse(lumen.mask)
            if fit.eccentricity < params.ecc_min:
                continue
            if fit.residual > params.residual_max:
                continue
            triggered += 1
            cands = curvature_center_candidates(fit)
            window = int(round(params.eq_b_mm / plane.resolution))
            best, _ = choose_center(slc.pixels, lumen.mask, cands, window)
            # the wall circle is displaced toward -axis1, so the thick
            # thrombus side is the lower pixel-row side of the center
            if best[0] < slc.center_px[0]:
                correct += 1
        assert triggered >= 50, f"only {triggered} slices triggered"
        frac = correct / triggered
        assert frac >= 0.95, f"thrombus-side rate {frac:.3f} below 0.95"


# ---------------------------------------------------------------------------
# 6. propagation plan


def test_criterion_6_propagation_plan():
    with criterion(6, "propagation plan reproduces the worked example and "
                      "holds its invariants on 1000 random cases"):
        assert plan_tracks(10, [0, 5, 9]) == [
            (0, 1), (1, 2), (5, 4), (4, 3), (5, 6), (6, 7), (9, 8)]

        rng = np.random.default_rng(3)
        for _ in range(1000):
            n = int(rng.integers(1, 60))
            k = int(rng.integers(1, min(n, 6) + 1))
            seeds = rng.choice(n, size=k, replace=False).tolist()
            pairs = plan_tracks(n, seeds)
            seed_set = set(int(s) for s in seeds)
            known = set(seed_set)
            chain_root = {}
            for a, b in pairs:
                assert abs(a - b) == 1
                assert a in known
                assert b not in known
                known.add(b)
                chain_root[b] = chain_root.get(a, a)
            assert known == set(range(n))
            sarr = np.array(sorted(seed_set))
            for b, root in chain_root.items():
                dist = np.abs(sarr - b)
                assert abs(root - b) == dist.min()
                assert root == int(sarr[np.argmin(dist)])


# ---------------------------------------------------------------------------
# 7. metric sanity


def test_criterion_7_metric_sanity():
    with criterion(7, "metrics pass sanity oracles: shifted-square DSC is "
                      "exactly 0.5, clot volume within 5% of analytic, "
                      "widest slice within 1 of the bulge center"):
        # (a) DSC of two 20x20 squares overlapping on half their area
        a = np.zeros((50, 50), dtype=bool)
        b = np.zeros((50, 50), dtype=bool)
        a[10:30, 10:30] = True
        b[10:30, 20:40] = True
        assert dsc(a, b) == 0.5

        # (b) clot volume of a clean tube vs analytic ring area
        spec = PhantomSpec(shape="straight", length_mm=100.0,
                           lumen_radius_mm=10.0, outer_radius_mm=16.0,
                           noise_sigma=0.0)
        vol, cl, gt = generate_phantom(spec)
        planes = build_mpr_planes(cl, step_mm=5.0, extent_mm=60.0,
                                  resolution_mm=1.0)
        params = TrackingParams()
        outer = truth_contours(gt, planes, params.rays,
                               params.radial_samples, params.dr)
        lumen_masks = [gt.masks_for_plane(p)[0] for p in planes]
        cv = clot_volume(outer, lumen_masks, resolution=1.0, spacing_mm=5.0)
        analytic = (np.pi * (16.0 ** 2 - 10.0 ** 2)) * len(planes) * 5.0
        assert cv.volume_mm3 == pytest.approx(analytic, rel=0.05)

        # (c) the widest tracked slice sits at the bulge
        spec_b = PhantomSpec(shape="straight", length_mm=100.0,
                             lumen_radius_mm=10.0, outer_radius_mm=16.0,
                             bulge_amplitude_mm=5.0, bulge_width_mm=10.0,
                             noise_sigma=0.0)
        vol_b, cl_b, gt_b = generate_phantom(spec_b)
        planes_b = build_mpr_planes(cl_b, step_mm=5.0, extent_mm=60.0,
                                    resolution_mm=1.0)
        outer_b = truth_contours(gt_b, planes_b, params.rays,
                                 params.radial_samples, params.dr)
        dia, at = run_max_diameter(outer_b, resolution=1.0)
        bulge_slice = int(round(spec_b.bulge_center_mm / 5.0))
        assert abs(at - bulge_slice) <= 1
        # vertices snap to radial sample centers: up to dr/2 per radius
        assert dia == pytest.approx(2 * 21.0, abs=2 * 0.5 / 2 + 1e-9)


# ---------------------------------------------------------------------------
# 8. deterministic pipeline output


def test_criterion_8_pipeline_byte_identical(tmp_path):
    with criterion(8, "two pipeline runs with identical inputs produce "
                      "byte-identical output trees (timestamps off)"):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("phantom.length_mm = 40\n"
                       "phantom.lumen_radius_mm = 6\n"
                       "phantom.outer_radius_mm = 10\n"
                       "phantom.noise_sigma = 5\n"
                       "mpr.extent_mm = 20\n")
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            rc = cli_main(["pipeline", "--config", str(cfg),
                           "--out", str(out), "--seed", "9"])
            assert rc == 0
            outs.append(out)

        files_a = sorted(p.relative_to(outs[0])
                         for p in outs[0].rglob("*") if p.is_file())
        files_b = sorted(p.relative_to(outs[1])
                         for p in outs[1].rglob("*") if p.is_file())
        assert files_a == files_b
        assert len(files_a) >= 10
        for rel in files_a:
            ba = (outs[0] / rel).read_bytes()
            bb = (outs[1] / rel).read_bytes()
            assert ba == bb, f"{rel} differs between reruns"
