"""Geometric primitives shared by the simulator, the surrogate model, and the metrics.

Conventions: millimetres everywhere; cross-sections live in a (u, v) plane with
counter-clockwise simple polygons; signed distance fields are negative inside;
characteristic lines are ordered M x 3 point sets (x, y, z), head to tail.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

_AREA_EPS = 1e-9  # mm^2; polygons thinner than this are degenerate


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass
class Polygon2D:
    """Simple counter-clockwise polygon in the section (u, v) plane."""

    vertices: np.ndarray  # (V, 2) float

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise ValueError("polygon vertices must be a (V, 2) array")
        if len(self.vertices) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        d = np.linalg.norm(np.diff(np.vstack([self.vertices, self.vertices[:1]]), axis=0), axis=1)
        if np.any(d < 1e-12):
            raise ValueError("polygon has repeated consecutive vertices")
        if self.signed_area() < _AREA_EPS:
            raise ValueError(
                f"degenerate or clockwise polygon (signed area {self.signed_area():.3e} mm^2)"
            )
        if not _is_simple(self.vertices):
            raise ValueError("polygon is self-intersecting")

    def signed_area(self) -> float:
        u, v = self.vertices[:, 0], self.vertices[:, 1]
        u1, v1 = np.roll(u, -1), np.roll(v, -1)
        return 0.5 * float(np.sum(u * v1 - u1 * v))

    def bbox(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def max_radius(self) -> float:
        """Largest vertex distance from the section origin (swept-solid bound)."""
        return float(np.max(np.linalg.norm(self.vertices, axis=1)))


@dataclass
class SDFGrid:
    """H x W signed Euclidean distance samples over bbox; negative inside."""

    values: np.ndarray  # (H, W) float, row i at v_min + i*dv
    bbox: tuple         # (u_min, v_min, u_max, v_max) in mm

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("SDF values must be 2-D")
        if self.values.shape[0] < 8 or self.values.shape[1] < 8:
            raise ValueError("SDF grid must be at least 8 x 8")

    @property
    def shape(self):
        return self.values.shape

    def cell_centers(self):
        """(H*W, 2) array of sample coordinates, row-major."""
        u_min, v_min, u_max, v_max = self.bbox
        h, w = self.values.shape
        us = np.linspace(u_min, u_max, w)
        vs = np.linspace(v_min, v_max, h)
        uu, vv = np.meshgrid(us, vs)
        return np.stack([uu.ravel(), vv.ravel()], axis=-1)


@dataclass
class CharLine:
    """Ordered 3-D point set along the workpiece (or mold) length."""

    points: np.ndarray  # (M, 3) float, head -> tail

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError("characteristic line must be an (M, 3) array")
        if len(self.points) < 2:
            raise ValueError("characteristic line needs at least 2 points")
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        if np.any(seg < 1e-12):
            raise ValueError("characteristic line has coincident consecutive points")

    def __len__(self):
        return len(self.points)

    def arc_length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


@dataclass(frozen=True)
class SectionProps:
    """Area, centroidal second moment about the bending (u) axis, extreme fiber distance."""

    area: float   # mm^2
    inertia: float  # mm^4
    c: float      # mm

    def __post_init__(self):
        if self.area <= 0 or self.inertia <= 0 or self.c <= 0:
            raise ValueError("section properties must be strictly positive")
        if self.inertia > self.area * self.c ** 2 * (1 + 1e-12):
            raise ValueError("inconsistent section: I exceeds area * c^2")


@dataclass
class VoxelGrid:
    """Boolean V x V x V occupancy over an axis-aligned 3-D box."""

    occupancy: np.ndarray  # (V, V, V) bool, indexed [ix, iy, iz]
    bbox: tuple            # ((x0, y0, z0), (x1, y1, z1)) in mm

    def __post_init__(self):
        self.occupancy = np.asarray(self.occupancy, dtype=bool)
        if self.occupancy.ndim != 3:
            raise ValueError("occupancy must be 3-D")

    def voxel_volume(self) -> float:
        lo, hi = np.asarray(self.bbox[0], float), np.asarray(self.bbox[1], float)
        n = np.asarray(self.occupancy.shape, float)
        return float(np.prod((hi - lo) / n))

    def solid_volume(self) -> float:
        return self.voxel_volume() * int(self.occupancy.sum())


# ---------------------------------------------------------------------------
# low-level helpers
# ---------------------------------------------------------------------------

def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _is_simple(vertices) -> bool:
    n = len(vertices)
    edges = [(vertices[i], vertices[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue  # adjacent through wrap-around
            if _segments_intersect(*edges[i], *edges[j]):
                return False
    return True


def points_in_polygon(points, vertices) -> np.ndarray:
    """Vectorized even-odd (crossing number) inside test for (P, 2) points."""
    points = np.asarray(points, dtype=float)
    vertices = np.asarray(vertices, dtype=float)
    px, py = points[:, 0:1], points[:, 1:2]
    x0, y0 = vertices[:, 0][None, :], vertices[:, 1][None, :]
    x1 = np.roll(vertices[:, 0], -1)[None, :]
    y1 = np.roll(vertices[:, 1], -1)[None, :]
    straddle = (y0 > py) != (y1 > py)
    denom = np.where(y1 != y0, y1 - y0, 1.0)
    xint = x0 + (py - y0) * (x1 - x0) / denom
    crossings = straddle & (px < xint)
    return (np.count_nonzero(crossings, axis=1) % 2) == 1


def distance_to_polygon(points, vertices) -> np.ndarray:
    """Unsigned Euclidean distance from (P, 2) points to the polygon boundary."""
    points = np.asarray(points, dtype=float)
    a = np.asarray(vertices, dtype=float)
    b = np.roll(a, -1, axis=0)
    ab = b - a                                   # (E, 2)
    ap = points[:, None, :] - a[None, :, :]      # (P, E, 2)
    denom = np.maximum(np.einsum("ej,ej->e", ab, ab), 1e-30)
    t = np.clip(np.einsum("pej,ej->pe", ap, ab) / denom, 0.0, 1.0)
    closest = a[None, :, :] + t[..., None] * ab[None, :, :]
    d = np.linalg.norm(points[:, None, :] - closest, axis=-1)
    return d.min(axis=1)


def default_pad(poly: Polygon2D) -> float:
    """10% of the bbox diagonal, so the zero level set stays off the grid edge."""
    u0, v0, u1, v1 = poly.bbox()
    return 0.1 * float(np.hypot(u1 - u0, v1 - v0))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def polygon_sdf(poly: Polygon2D, H: int, W: int, pad: float | None = None) -> SDFGrid:
    """Rasterize the signed distance field of a polygon onto an H x W grid.

    The grid spans the polygon bbox expanded by `pad` on each side; each sample
    holds the signed Euclidean distance to the boundary, negative inside.
    """
    if poly.signed_area() < _AREA_EPS:
        raise ValueError("degenerate polygon rejected for SDF rasterization")
    if pad is None:
        pad = default_pad(poly)
    if pad < 0:
        raise ValueError("pad must be non-negative")
    u0, v0, u1, v1 = poly.bbox()
    bbox = (u0 - pad, v0 - pad, u1 + pad, v1 + pad)
    us = np.linspace(bbox[0], bbox[2], W)
    vs = np.linspace(bbox[1], bbox[3], H)
    uu, vv = np.meshgrid(us, vs)
    pts = np.stack([uu.ravel(), vv.ravel()], axis=-1)
    dist = distance_to_polygon(pts, poly.vertices)
    inside = points_in_polygon(pts, poly.vertices)
    values = np.where(inside, -dist, dist).reshape(H, W)
    return SDFGrid(values=values, bbox=bbox)


def resample_line(polyline: CharLine, M: int) -> CharLine:
    """Resample to M points at uniform arc length (piecewise-linear interpolation)."""
    if M < 2:
        raise ValueError("M must be at least 2")
    pts = polyline.points
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total <= 0:
        raise ValueError("zero-length polyline cannot be resampled")
    targets = np.linspace(0.0, total, M)
    out = np.empty((M, 3))
    for k in range(3):
        out[:, k] = np.interp(targets, s, pts[:, k])
    out[0] = pts[0]
    out[-1] = pts[-1]
    return CharLine(out)


def line_from_curvature(kappa, seg_len, origin=(0.0, 0.0, 0.0), theta0: float = 0.0,
                        out_of_plane=None) -> CharLine:
    """Integrate per-segment curvatures into a 3-D polyline.

    Heading integrates as theta_{i+1} = theta_i + kappa_i * ds_i in the x-z
    plane; each segment advances with the exact circular-arc chord, so constant
    curvature reproduces a circle to machine precision. The y coordinate of
    point i+1 is origin_y + out_of_plane[i].
    """
    kappa = np.asarray(kappa, dtype=float)
    seg_len = np.asarray(seg_len, dtype=float)
    n = len(kappa)
    if n < 1 or len(seg_len) != n:
        raise ValueError("kappa and seg_len must be equal-length, non-empty arrays")
    if np.any(seg_len <= 0):
        raise ValueError("segment lengths must be positive")
    if out_of_plane is None:
        out_of_plane = np.zeros(n)
    out_of_plane = np.asarray(out_of_plane, dtype=float)
    if len(out_of_plane) != n:
        raise ValueError("out_of_plane must have one offset per segment")

    turn = kappa * seg_len
    theta_end = theta0 + np.cumsum(turn)
    theta_start = np.concatenate([[theta0], theta_end[:-1]])

    straight = np.abs(kappa) < 1e-14
    with np.errstate(divide="ignore", invalid="ignore"):
        dx = np.where(straight, seg_len * np.cos(theta_start),
                      (np.sin(theta_end) - np.sin(theta_start)) / np.where(straight, 1.0, kappa))
        dz = np.where(straight, seg_len * np.sin(theta_start),
                      (np.cos(theta_start) - np.cos(theta_end)) / np.where(straight, 1.0, kappa))

    pts = np.empty((n + 1, 3))
    pts[0] = np.asarray(origin, dtype=float)
    pts[1:, 0] = pts[0, 0] + np.cumsum(dx)
    pts[1:, 2] = pts[0, 2] + np.cumsum(dz)
    pts[1:, 1] = pts[0, 1] + out_of_plane
    return CharLine(pts)


def section_props(poly: Polygon2D) -> SectionProps:
    """Exact shoelace-moment area and centroidal second moment about the u-axis.

    Bending happens about the section u-axis (fibers offset along v), so
    I = integral of (v - v_centroid)^2 dA and c is the extreme |v| offset.
    """
    u, v = poly.vertices[:, 0], poly.vertices[:, 1]
    u1, v1 = np.roll(u, -1), np.roll(v, -1)
    cross = u * v1 - u1 * v
    area = 0.5 * float(np.sum(cross))
    if area < _AREA_EPS:
        raise ValueError("degenerate polygon rejected for section properties")
    cv = float(np.sum((v + v1) * cross)) / (6.0 * area)
    i_origin = float(np.sum((v * v + v * v1 + v1 * v1) * cross)) / 12.0
    inertia = i_origin - area * cv * cv
    c = float(np.max(np.abs(v - cv)))
    return SectionProps(area=area, inertia=inertia, c=c)


def rotation_minimizing_frames(points: np.ndarray):
    """Double-reflection rotation-minimizing frames along a polyline.

    Returns (T, U, V): unit tangents, first and second normals, each (n, 3).
    The initial U axis is world +y projected perpendicular to the first
    tangent (falls back to +z), matching the section (u -> y, v -> z)
    convention for an initially straight beam along +x.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    tang = np.empty((n, 3))
    tang[0] = points[1] - points[0]
    tang[-1] = points[-1] - points[-2]
    if n > 2:
        tang[1:-1] = points[2:] - points[:-2]
    tang /= np.linalg.norm(tang, axis=1, keepdims=True)

    u0 = np.array([0.0, 1.0, 0.0])
    u0 = u0 - np.dot(u0, tang[0]) * tang[0]
    if np.linalg.norm(u0) < 1e-9:
        u0 = np.array([0.0, 0.0, 1.0])
        u0 = u0 - np.dot(u0, tang[0]) * tang[0]
    u0 /= np.linalg.norm(u0)

    U = np.empty((n, 3))
    U[0] = u0
    for i in range(n - 1):
        v1 = points[i + 1] - points[i]
        c1 = max(float(np.dot(v1, v1)), 1e-30)
        r_l = U[i] - (2.0 / c1) * np.dot(v1, U[i]) * v1
        t_l = tang[i] - (2.0 / c1) * np.dot(v1, tang[i]) * v1
        v2 = tang[i + 1] - t_l
        c2 = float(np.dot(v2, v2))
        if c2 < 1e-30:
            U[i + 1] = r_l
        else:
            U[i + 1] = r_l - (2.0 / c2) * np.dot(v2, r_l) * v2
        U[i + 1] /= np.linalg.norm(U[i + 1])
    V = np.cross(tang, U)
    return tang, U, V


def sweep_voxelize(section: Polygon2D, line: CharLine, V: int,
                   bbox: tuple | None = None) -> VoxelGrid:
    """Voxelize the solid obtained by sweeping `section` along `line`.

    The section is transported with rotation-minimizing frames; a voxel is
    occupied iff its center, expressed in the nearest frame, falls inside the
    section polygon and within half a sample spacing along the tangent.
    """
    if V < 16:
        raise ValueError("voxel resolution must be at least 16")
    if section.signed_area() < _AREA_EPS:
        raise ValueError("degenerate section rejected for sweeping")
    length = line.arc_length()
    radius = section.max_radius()

    if bbox is None:
        lo = line.points.min(axis=0) - radius * 1.05
        hi = line.points.max(axis=0) + radius * 1.05
        bbox = (tuple(lo), tuple(hi))
    lo = np.asarray(bbox[0], dtype=float)
    hi = np.asarray(bbox[1], dtype=float)
    voxel_diag = float(np.linalg.norm((hi - lo) / V))
    if length < voxel_diag:
        raise ValueError("line shorter than one voxel cannot be swept")

    # sample the line densely enough that nearest-frame lookup is unambiguous
    n_samp = max(8, int(np.ceil(length / (0.25 * voxel_diag))) + 1)
    dense = resample_line(line, n_samp)
    ds = length / (n_samp - 1)
    tang, U, Vax = rotation_minimizing_frames(dense.points)

    axes = [lo[k] + (np.arange(V) + 0.5) * (hi[k] - lo[k]) / V for k in range(3)]
    gx, gy, gz = np.meshgrid(axes[0], axes[1], axes[2], indexing="ij")
    centers = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=-1)

    tree = cKDTree(dense.points)
    dist, idx = tree.query(centers, k=1)
    near = dist <= (radius + ds)  # cheap prefilter
    occ = np.zeros(len(centers), dtype=bool)
    if np.any(near):
        sub = centers[near]
        i = idx[near]
        d = sub - dense.points[i]
        t_off = np.einsum("pj,pj->p", d, tang[i])
        u_off = np.einsum("pj,pj->p", d, U[i])
        v_off = np.einsum("pj,pj->p", d, Vax[i])
        in_slab = np.abs(t_off) <= 0.5 * ds + 1e-12
        uv = np.stack([u_off, v_off], axis=-1)
        occ[near] = in_slab & points_in_polygon(uv, section.vertices)
    grid = VoxelGrid(occupancy=occ.reshape(V, V, V), bbox=(tuple(lo), tuple(hi)))
    if not grid.occupancy.any():
        raise ValueError("sweep produced an empty solid; check bbox and inputs")
    return grid


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

SDF_SIGN_CONVENTION = "negative_inside"


def write_sdf(grid: SDFGrid, path) -> None:
    """JSON header line + row-major little-endian float32 payload."""
    header = {
        "H": int(grid.values.shape[0]),
        "W": int(grid.values.shape[1]),
        "bbox": [float(x) for x in grid.bbox],
        "sign_convention": SDF_SIGN_CONVENTION,
    }
    with open(path, "wb") as f:
        f.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        f.write(grid.values.astype("<f4").tobytes(order="C"))


def read_sdf(path) -> SDFGrid:
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode("utf-8"))
        data = np.frombuffer(f.read(), dtype="<f4")
    h, w = int(header["H"]), int(header["W"])
    if data.size != h * w:
        raise ValueError(f"SDF payload size {data.size} does not match header {h}x{w}")
    if header.get("sign_convention") != SDF_SIGN_CONVENTION:
        raise ValueError(f"unsupported sign convention {header.get('sign_convention')!r}")
    return SDFGrid(values=data.reshape(h, w).astype(float), bbox=tuple(header["bbox"]))


def write_line_csv(line: CharLine, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("x,y,z\n")
        for p in line.points:
            f.write(f"{p[0]:.9g},{p[1]:.9g},{p[2]:.9g}\n")


def read_line_csv(path) -> CharLine:
    pts = np.loadtxt(path, delimiter=",", skiprows=1, dtype=float)
    return CharLine(np.atleast_2d(pts))
