import math
import pathlib

import numpy as np
import pytest

from claritk.errors import DuplicateId
from claritk.mixer import (
    MixerSpec,
    SourceRegion,
    StructuredGrid,
    contains_point,
    direction_from_angles,
    export_source_dictionary,
    momentum_modulus,
    momentum_source_vector,
    propelled_flow,
    region_for,
    tag_cells,
)

GOLDEN = pathlib.Path(__file__).parent / "golden"

SPEC = MixerSpec(id="mx1", D_b=0.58, F0=935.0, omega0=49.0, omega=49.0, rho=998.0)


def random_unit(rng):
    v = rng.standard_normal(3)
    return tuple(v / np.linalg.norm(v))


def random_rotation(rng):
    # QR of a Gaussian matrix, determinant fixed to +1
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


class TestDirection:
    def test_horizontal_along_x(self):
        assert direction_from_angles(0.0, 0.0) == pytest.approx((1, 0, 0))

    def test_vertical(self):
        for az in (0.0, 37.0, 180.0):
            u = direction_from_angles(90.0, az)
            assert u == pytest.approx((0, 0, 1), abs=1e-15)

    def test_trig_oracle(self):
        u = direction_from_angles(30.0, 45.0)
        phi, theta = math.radians(30.0), math.radians(45.0)
        want = (math.cos(phi) * math.cos(theta),
                math.cos(phi) * math.sin(theta),
                math.sin(phi))
        assert u == pytest.approx(want, abs=1e-15)
        assert np.linalg.norm(u) == pytest.approx(1.0, abs=1e-15)


class TestFlowAndModulus:
    def test_design_speed_cancels_ratio(self):
        q = propelled_flow(SPEC)
        assert q == pytest.approx(0.58 * math.sqrt(935.0 / 998.0), rel=1e-15)

    def test_zero_speed_zero_flow(self):
        spec = MixerSpec("m", 0.58, 935.0, 49.0, 0.0, 998.0)
        assert propelled_flow(spec) == 0.0

    def test_sqrt_omega_scaling(self):
        base = MixerSpec("m", 0.58, 935.0, 49.0, 10.0, 998.0)
        quad = MixerSpec("m", 0.58, 935.0, 49.0, 40.0, 998.0)
        assert propelled_flow(quad) == pytest.approx(2.0 * propelled_flow(base), rel=1e-15)

    def test_doubling_length_halves_modulus(self):
        r1 = region_for(SPEC, (0, 0, 0), 0.0, 0.0)
        r2 = region_for(SPEC, (0, 0, 0), 0.0, 0.0, L=2 * r1.L)
        m1, v1 = momentum_modulus(SPEC, r1)
        m2, v2 = momentum_modulus(SPEC, r2)
        assert v2 == pytest.approx(2 * v1, rel=1e-15)
        assert m2 == pytest.approx(m1 / 2, rel=1e-15)

    def test_mp_vm_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            spec = MixerSpec("m", rng.uniform(0.1, 2.0), rng.uniform(50, 5e3),
                             rng.uniform(5, 160), rng.uniform(0, 160),
                             rng.uniform(900, 1200))
            region = region_for(spec, rng.uniform(-5, 5, 3),
                                rng.uniform(-90, 90), rng.uniform(0, 360),
                                L=rng.uniform(0.05, 1.0))
            m_p, v_m = momentum_modulus(spec, region)
            q = propelled_flow(spec)
            assert m_p * v_m * spec.D_b ** 2 / spec.rho == pytest.approx(
                q ** 2, rel=1e-12)

    def test_full_numeric_chain(self):
        region = region_for(SPEC, (1.0, 2.0, 3.0), 0.0, 0.0)
        q = 0.58 * math.sqrt(935.0 / 998.0)
        v_m = math.pi * 0.29 ** 2 * (0.58 / 5.0)
        m_p = 998.0 / v_m * (q / 0.58) ** 2
        got_mp, got_vm = momentum_modulus(SPEC, region)
        assert got_vm == pytest.approx(v_m, rel=1e-12)
        assert got_mp == pytest.approx(m_p, rel=1e-12)


class TestSourceVector:
    def test_axis_aligned(self):
        region = SourceRegion((0, 0, 0), (0, 0, 1), 0.29, 0.116)
        src = momentum_source_vector(SPEC, region)
        assert src.S_m[0] == 0.0 and src.S_m[1] == 0.0
        assert src.S_m[2] == pytest.approx(src.M_p, rel=1e-15)

    def test_modulus_and_parallelism_random_axes(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            region = SourceRegion((0, 0, 0), random_unit(rng), 0.29, 0.116)
            src = momentum_source_vector(SPEC, region)
            s = np.array(src.S_m)
            assert np.linalg.norm(s) == pytest.approx(src.M_p, rel=1e-12)
            assert float(s @ np.array(region.axis)) == pytest.approx(src.M_p, rel=1e-12)


class TestContainsPoint:
    def test_center_inside(self):
        region = SourceRegion((1, 2, 3), (0, 0, 1), 0.3, 0.1)
        assert contains_point(region, (1, 2, 3))

    def test_just_outside_radius(self):
        region = SourceRegion((1, 2, 3), (0, 0, 1), 0.3, 0.1)
        assert not contains_point(region, (1 + 0.3 + 1e-9, 2, 3))
        assert contains_point(region, (1 + 0.3 - 1e-9, 2, 3))

    def test_just_outside_half_length(self):
        region = SourceRegion((0, 0, 0), (1, 0, 0), 0.3, 0.2)
        assert contains_point(region, (0.1 - 1e-9, 0, 0))
        assert not contains_point(region, (0.1 + 1e-9, 0, 0))

    def test_rigid_motion_invariance(self):
        rng = np.random.default_rng(9)
        for _ in range(1000):
            center = rng.uniform(-3, 3, 3)
            axis = np.array(random_unit(rng))
            region = SourceRegion(tuple(center), tuple(axis),
                                  rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0))
            # points near the region so both outcomes occur
            point = center + rng.uniform(-1.5, 1.5, 3)
            rot = random_rotation(rng)
            shift = rng.uniform(-10, 10, 3)
            moved_axis = rot @ axis
            moved_axis /= np.linalg.norm(moved_axis)
            moved = SourceRegion(tuple(rot @ center + shift), tuple(moved_axis),
                                 region.R, region.L)
            assert contains_point(region, tuple(point)) == \
                contains_point(moved, tuple(rot @ point + shift))


class TestTagCells:
    def test_region_outside_grid(self):
        region = SourceRegion((100, 100, 100), (0, 0, 1), 0.3, 0.1)
        grid = StructuredGrid((0, 0, 0), 0.1, (10, 10, 10))
        with pytest.warns(UserWarning):
            idx, vol = tag_cells(region, grid)
        assert idx.shape[0] == 0 and vol == 0.0

    def test_volume_convergence_at_R_over_40(self):
        region = SourceRegion((0, 0, 0), (0, 0, 1), 0.5, 0.2)
        h = region.R / 40.0
        grid = _covering_grid(region, h)
        _, vol = tag_cells(region, grid)
        assert abs(vol - region.volume) / region.volume < 0.02

    def test_refinement_monotone(self):
        region = SourceRegion((0, 0, 0), (0, 0, 1), 0.5, 0.2)
        errors = []
        for h in (region.R / 10, region.R / 20, region.R / 40):
            _, vol = tag_cells(region, _covering_grid(region, h))
            errors.append(abs(vol - region.volume) / region.volume)
        # halving h should not increase the error (allow one tolerance-level
        # exception per the center-counting lattice wobble)
        violations = sum(1 for a, b in zip(errors, errors[1:]) if b > a + 1e-3)
        assert violations <= 1

    def test_matches_contains_point(self):
        rng = np.random.default_rng(13)
        region = SourceRegion((0.31, -0.17, 0.05),
                              random_unit(rng), 0.23, 0.4)
        grid = StructuredGrid((-1, -1, -1), 0.11, (18, 18, 18))
        idx, _ = tag_cells(region, grid)
        tagged = {tuple(i) for i in idx}
        for i in range(18):
            for j in range(18):
                for k in range(18):
                    center = (-1 + 0.11 * (i + 0.5),
                              -1 + 0.11 * (j + 0.5),
                              -1 + 0.11 * (k + 0.5))
                    assert ((i, j, k) in tagged) == contains_point(region, center)


def _covering_grid(region, h):
    # grid aligned so cell faces land on the cylinder end planes (the region
    # here is axis-aligned with center at the origin)
    half_span = max(region.R * 1.05, region.L / 2.0)
    n = int(math.ceil(2.0 * half_span / h))
    if n % 2:
        n += 1
    origin = (-(n / 2) * h,) * 3
    return StructuredGrid(origin, h, (n, n, n))


class TestExport:
    def test_golden_file(self):
        region = region_for(SPEC, (1.0, 2.0, 3.0), 15.0, 30.0)
        text = export_source_dictionary([(SPEC, region)])
        golden = (GOLDEN / "mixer_single.dict").read_text()
        assert text == golden

    def test_duplicate_id(self):
        region = region_for(SPEC, (0, 0, 0), 0.0, 0.0)
        with pytest.raises(DuplicateId):
            export_source_dictionary([(SPEC, region), (SPEC, region)])

    def test_sorted_by_id(self):
        r = region_for(SPEC, (0, 0, 0), 0.0, 0.0)
        a = MixerSpec("alpha", 0.5, 900.0, 50.0, 50.0, 998.0)
        b = MixerSpec("beta", 0.6, 800.0, 40.0, 40.0, 998.0)
        fwd = export_source_dictionary([(a, r), (b, r)])
        rev = export_source_dictionary([(b, r), (a, r)])
        assert fwd == rev
        assert fwd.index("alpha") < fwd.index("beta")
