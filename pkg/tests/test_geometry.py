import numpy as np
import pytest
from matplotlib.path import Path as MplPath

from mfbend.geometry import (
    CharLine,
    Polygon2D,
    distance_to_polygon,
    line_from_curvature,
    points_in_polygon,
    polygon_sdf,
    read_line_csv,
    read_sdf,
    resample_line,
    rotation_minimizing_frames,
    section_props,
    sweep_voxelize,
    write_line_csv,
    write_sdf,
)
from mfbend.simulator import channel, l_profile, rounded_rectangle

UNIT_SQUARE = Polygon2D([(0, 0), (1, 0), (1, 1), (0, 1)])


def boundary_samples(poly, per_edge=2000):
    """Dense boundary point cloud; independent distance oracle."""
    a = poly.vertices
    b = np.roll(a, -1, axis=0)
    ts = np.linspace(0.0, 1.0, per_edge, endpoint=False)
    return np.concatenate([a[i] + ts[:, None] * (b[i] - a[i]) for i in range(len(a))])


# ---------------------------------------------------------------------------
# polygon_sdf
# ---------------------------------------------------------------------------

def test_sdf_unit_square_center():
    grid = polygon_sdf(UNIT_SQUARE, 9, 9, pad=0.5)
    assert grid.values[4, 4] == pytest.approx(-0.5, abs=1e-12)


def test_sdf_zero_at_vertex_coincident_cell():
    # pad 0.5 with 9 samples puts cell centers exactly on the unit-square corners
    grid = polygon_sdf(UNIT_SQUARE, 9, 9, pad=0.5)
    us = np.linspace(-0.5, 1.5, 9)
    iv = int(np.where(np.isclose(us, 0.0))[0][0])
    cell = 2.0 / 8.0
    assert abs(grid.values[iv, iv]) < 1e-9 * cell


def test_sdf_sign_matches_independent_inside_oracle():
    rng = np.random.default_rng(0)
    for poly in (UNIT_SQUARE, rounded_rectangle(18, 24, 4), l_profile(20, 26, 6), channel(20, 26, 5)):
        grid = polygon_sdf(poly, 48, 48)
        pts = grid.cell_centers()
        oracle = MplPath(poly.vertices).contains_points(pts)
        u0, v0, u1, v1 = grid.bbox
        cell = 0.5 * np.hypot((u1 - u0) / 47, (v1 - v0) / 47)
        sdf = grid.values.ravel()
        mask = np.abs(sdf) > cell  # skip cells straddling the boundary
        assert np.array_equal(sdf[mask] < 0, oracle[mask])
    # and the vectorized inside test itself agrees with the oracle
    pts = rng.uniform(-5, 35, size=(4000, 2))
    poly = channel(20, 26, 5)
    d = distance_to_polygon(pts, poly.vertices)
    keep = d > 1e-6
    assert np.array_equal(points_in_polygon(pts[keep], poly.vertices),
                          MplPath(poly.vertices).contains_points(pts[keep]))


def test_sdf_magnitude_and_eikonal_on_rounded_rectangle():
    rng = np.random.default_rng(3)
    w, h = rng.uniform(16, 28), rng.uniform(18, 30)
    poly = rounded_rectangle(w, h, 0.18 * min(w, h))
    grid = polygon_sdf(poly, 64, 64)

    # magnitude against the brute-force boundary-sample oracle
    bnd = boundary_samples(poly)
    pts = grid.cell_centers()
    from scipy.spatial import cKDTree

    tree = cKDTree(bnd)
    d_oracle, idx = tree.query(pts)
    spacing = np.max(np.linalg.norm(np.diff(bnd[:200], axis=0), axis=1))
    assert np.max(np.abs(np.abs(grid.values.ravel()) - d_oracle)) < 5 * spacing

    # eikonal |grad sdf| = 1 away from the medial axis (>= 2 cells)
    u0, v0, u1, v1 = grid.bbox
    hu = (u1 - u0) / 63
    hv = (v1 - v0) / 63
    gu = (grid.values[:, 2:] - grid.values[:, :-2]) / (2 * hu)
    gv = (grid.values[2:, :] - grid.values[:-2, :]) / (2 * hv)
    gnorm = np.hypot(gu[1:-1, :], gv[:, 1:-1])

    # medial-axis cells: the nearest boundary point jumps between neighbors
    near = bnd[idx].reshape(64, 64, 2)
    jump = np.zeros((64, 64), bool)
    for du, dv in ((0, 1), (1, 0), (1, 1), (1, -1)):
        a = near[max(0, du):64 - max(0, -du) or 64, max(0, dv):64 - max(0, -dv) or 64]
        sl_u = slice(max(0, -du), 64 - max(0, du) or 64)
        sl_v = slice(max(0, -dv), 64 - max(0, dv) or 64)
        b = near[sl_u, sl_v]
        d = np.linalg.norm(a - b, axis=-1)
        jump[max(0, du):64 - max(0, -du) or 64, max(0, dv):64 - max(0, -dv) or 64] |= d > 6 * max(hu, hv)
    from scipy.ndimage import binary_dilation

    excluded = binary_dilation(jump, iterations=2)[1:-1, 1:-1]
    dev = np.abs(gnorm - 1.0)
    assert np.max(dev[~excluded]) < 0.05


def test_sdf_rejects_degenerate_polygon():
    with pytest.raises(ValueError):
        Polygon2D([(0, 0), (1, 0), (2, 0)])  # zero area


def test_sdf_magnitude_bounded_by_bbox_diagonal():
    grid = polygon_sdf(rounded_rectangle(20, 20, 3), 32, 32)
    u0, v0, u1, v1 = grid.bbox
    assert np.max(np.abs(grid.values)) <= np.hypot(u1 - u0, v1 - v0)


def test_sdf_serialization_round_trip(tmp_path):
    grid = polygon_sdf(rounded_rectangle(15, 22, 3), 32, 32)
    path = tmp_path / "section.sdf"
    write_sdf(grid, path)
    back = read_sdf(path)
    assert back.values.shape == grid.values.shape
    assert back.bbox == pytest.approx(grid.bbox)
    assert np.allclose(back.values, grid.values, atol=1e-5)  # float32 payload


# ---------------------------------------------------------------------------
# resample_line
# ---------------------------------------------------------------------------

def test_resample_straight_segment():
    line = CharLine([(0, 0, 0), (10, 0, 0)])
    out = resample_line(line, 3)
    assert np.allclose(out.points, [(0, 0, 0), (5, 0, 0), (10, 0, 0)])


def test_resample_refinement_idempotence():
    t = np.linspace(0, np.pi / 2, 64)
    pts = np.stack([100 * np.sin(t), 0 * t, 100 * (1 - np.cos(t))], axis=1)
    line = CharLine(pts)
    m = 16
    once = resample_line(line, m)
    twice = resample_line(resample_line(line, 2 * m), m)
    assert np.max(np.linalg.norm(once.points - twice.points, axis=1)) < 1e-6 * line.arc_length()


def test_resample_quarter_circle_length():
    t = np.linspace(0, np.pi / 2, 2000)
    pts = np.stack([100 * np.sin(t), 0 * t, 100 * (1 - np.cos(t))], axis=1)
    out = resample_line(CharLine(pts), 288)
    assert out.arc_length() == pytest.approx(50 * np.pi, rel=1e-3)


def test_resample_uniform_spacing():
    t = np.linspace(0, 1.2, 500)
    pts = np.stack([300 * t, 5 * t ** 2, 40 * np.sin(2 * t)], axis=1)
    out = resample_line(CharLine(pts), 96)
    chords = np.linalg.norm(np.diff(out.points, axis=0), axis=1)
    assert chords.max() / chords.min() < 1 + 1e-6


def test_resample_rejects_bad_inputs():
    with pytest.raises(ValueError):
        CharLine([(0, 0, 0), (0, 0, 0)])
    with pytest.raises(ValueError):
        resample_line(CharLine([(0, 0, 0), (1, 0, 0)]), 1)


def test_line_csv_round_trip(tmp_path):
    line = CharLine(np.random.default_rng(1).normal(size=(20, 3)) * 100)
    path = tmp_path / "line.csv"
    write_line_csv(line, path)
    back = read_line_csv(path)
    assert np.allclose(back.points, line.points, rtol=1e-8)


# ---------------------------------------------------------------------------
# line_from_curvature
# ---------------------------------------------------------------------------

def test_curvature_integration_straight():
    out = line_from_curvature(np.zeros(10), np.ones(10))
    assert np.allclose(out.points[-1], (10, 0, 0), atol=1e-12)
    assert out.arc_length() == pytest.approx(10.0, abs=1e-12)


def test_curvature_integration_quarter_circle():
    r = 250.0
    n = 40
    ds = (np.pi * r / 2) / n
    out = line_from_curvature(np.full(n, 1 / r), np.full(n, ds))
    assert np.allclose(out.points[-1], (r, 0, r), atol=1e-9)


def test_curvature_sign_flip_mirrors_z():
    rng = np.random.default_rng(5)
    kappa = rng.normal(scale=3e-3, size=50)
    ds = np.full(50, 4.0)
    a = line_from_curvature(kappa, ds)
    b = line_from_curvature(-kappa, ds)
    mirrored = a.points * np.array([1.0, 1.0, -1.0])
    assert np.allclose(b.points, mirrored, atol=1e-12)


def test_curvature_out_of_plane_offsets():
    y = np.linspace(0.1, 1.0, 10)
    out = line_from_curvature(np.zeros(10), np.ones(10), out_of_plane=y)
    assert np.allclose(out.points[1:, 1], y)
    assert out.points[0, 1] == 0.0


# ---------------------------------------------------------------------------
# section_props
# ---------------------------------------------------------------------------

def test_section_props_rectangle_exact():
    rect = Polygon2D([(0, 0), (10, 0), (10, 20), (0, 20)])
    props = section_props(rect)
    assert props.area == pytest.approx(200.0, rel=1e-12)
    assert props.inertia == pytest.approx(10 * 20 ** 3 / 12, rel=1e-9)
    assert props.c == pytest.approx(10.0, rel=1e-12)


def test_section_props_translation_invariant():
    poly = l_profile(20, 26, 6)
    shifted = Polygon2D(poly.vertices + np.array([13.0, -7.0]))
    a, b = section_props(poly), section_props(shifted)
    assert a.area == pytest.approx(b.area, rel=1e-12)
    assert a.inertia == pytest.approx(b.inertia, rel=1e-9)
    assert a.c == pytest.approx(b.c, rel=1e-12)


def test_section_props_vertex_rotation_invariant():
    poly = channel(20, 26, 5)
    props = section_props(poly)
    for k in (1, 3, 5):
        rolled = Polygon2D(np.roll(poly.vertices, k, axis=0))
        other = section_props(rolled)
        assert other.inertia == pytest.approx(props.inertia, rel=1e-12)
        assert other.area == pytest.approx(props.area, rel=1e-12)


def test_section_props_monte_carlo_oracle():
    rng = np.random.default_rng(11)
    verts = np.array([(0, 0), (24, 0), (30, 10), (18, 26), (4, 22), (-3, 9)], float)
    poly = Polygon2D(verts)
    props = section_props(poly)

    u0, v0, u1, v1 = poly.bbox()
    pts = rng.uniform((u0, v0), (u1, v1), size=(1_000_000, 2))
    inside = MplPath(poly.vertices).contains_points(pts)
    box_area = (u1 - u0) * (v1 - v0)
    mc_area = box_area * inside.mean()
    v_in = pts[inside, 1]
    mc_inertia = box_area * inside.mean() * np.mean((v_in - v_in.mean()) ** 2)
    assert props.area == pytest.approx(mc_area, rel=0.01)
    assert props.inertia == pytest.approx(mc_inertia, rel=0.01)


# ---------------------------------------------------------------------------
# sweep_voxelize
# ---------------------------------------------------------------------------

def square_section(a):
    h = a / 2
    return Polygon2D([(-h, -h), (h, -h), (h, h), (-h, h)])


def test_sweep_straight_volume():
    a, length = 10.0, 100.0
    line = CharLine([(0, 0, 0), (length, 0, 0)])
    grid = sweep_voxelize(square_section(a), line, V=64)
    assert grid.solid_volume() == pytest.approx(a * a * length, rel=0.05)


def test_sweep_deterministic():
    line = resample_line(CharLine([(0, 0, 0), (50, 0, 10), (100, 5, 30)]), 40)
    sec = square_section(8)
    g1 = sweep_voxelize(sec, line, V=32)
    g2 = sweep_voxelize(sec, line, V=32)
    assert np.array_equal(g1.occupancy, g2.occupancy)
    assert g1.occupancy.any()


def test_sweep_rejects_degenerate_inputs():
    with pytest.raises(ValueError):
        Polygon2D(np.zeros((4, 2)))  # section scaled to zero
    with pytest.raises(ValueError):
        sweep_voxelize(square_section(8), CharLine([(0, 0, 0), (0.01, 0, 0)]), V=32)
    with pytest.raises(ValueError):
        sweep_voxelize(square_section(8), CharLine([(0, 0, 0), (100, 0, 0)]), V=8)


def test_rotation_minimizing_frames_are_orthonormal():
    t = np.linspace(0, 1.5, 80)
    pts = np.stack([200 * t, 8 * np.sin(3 * t), 60 * t ** 2], axis=1)
    T, U, V = rotation_minimizing_frames(pts)
    assert np.allclose(np.linalg.norm(T, axis=1), 1, atol=1e-9)
    assert np.allclose(np.linalg.norm(U, axis=1), 1, atol=1e-9)
    assert np.allclose(np.einsum("ij,ij->i", T, U), 0, atol=1e-9)
    assert np.allclose(np.einsum("ij,ij->i", np.cross(T, U), V), 1, atol=1e-9)
    # minimal twist: consecutive U vectors stay close on a smooth curve
    assert np.max(np.linalg.norm(np.diff(U, axis=0), axis=1)) < 0.1
