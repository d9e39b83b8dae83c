"""Synthetic multi-fidelity stretch-bending data generator.

An incremental elastoplastic beam model with mold contact and springback.
Loading wraps the workpiece onto the mold over a contact arc driven by the
clamp motion; unloading removes the bending moment elastically. High-fidelity
runs use the exact bilinear moment-curvature law with stretch coupling at a
fine segment count; low-fidelity runs use a coarse segment count and a
constant-factor springback, which injects the systematic bias that makes the
two fidelity tiers genuinely different.

Units: mm, MPa, rad.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .geometry import (
    CharLine,
    Polygon2D,
    SDFGrid,
    SectionProps,
    line_from_curvature,
    polygon_sdf,
    resample_line,
    section_props,
)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Material:
    """Bilinear elastoplastic material (idealized low-carbon-steel-like curve)."""

    E: float        # Young's modulus, MPa
    sigma_y: float  # yield stress, MPa
    eta: float      # hardening ratio (plastic slope / elastic slope), in (0, 1)
    lam: float      # stretch-springback coupling, dimensionless, >= 0

    def __post_init__(self):
        if self.E <= 0 or self.sigma_y <= 0:
            raise ValueError("E and sigma_y must be positive")
        if not (0.0 < self.eta < 1.0):
            raise ValueError("hardening ratio eta must lie in (0, 1)")
        if self.lam < 0:
            raise ValueError("stretch coupling lam must be non-negative")


@dataclass(frozen=True)
class MotionParams:
    """Clamp trajectory summary: (d_x, d_y, d_z) in mm, (theta_x, theta_y, theta_z) in rad."""

    p: tuple

    def __post_init__(self):
        p = tuple(float(x) for x in self.p)
        if len(p) != 6 or not all(math.isfinite(x) for x in p):
            raise ValueError("motion parameters must be 6 finite reals")
        object.__setattr__(self, "p", p)

    @property
    def d_x(self): return self.p[0]

    @property
    def d_y(self): return self.p[1]

    @property
    def d_z(self): return self.p[2]

    @property
    def theta_x(self): return self.p[3]

    @property
    def theta_y(self): return self.p[4]

    @property
    def theta_z(self): return self.p[5]

    def as_array(self):
        return np.asarray(self.p, dtype=float)

    @staticmethod
    def zeros():
        return MotionParams((0.0,) * 6)


@dataclass(frozen=True)
class MoldCurve:
    """Parametric mold curvature kappa(s) = a + b*s + c*sin(omega*s) over [0, length]."""

    a: float
    b: float = 0.0
    c: float = 0.0
    omega: float = 1.0
    length: float = 300.0

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("mold length must be positive")
        if self.c != 0.0 and self.omega == 0.0:
            raise ValueError("omega must be nonzero when the sinusoidal term is used")

    def kappa(self, s):
        s = np.asarray(s, dtype=float)
        return self.a + self.b * s + self.c * np.sin(self.omega * s)

    def kappa_integral(self, s):
        """Exact cumulative integral of kappa from 0 to s."""
        s = np.asarray(s, dtype=float)
        out = self.a * s + 0.5 * self.b * s * s
        if self.c != 0.0:
            out = out + (self.c / self.omega) * (1.0 - np.cos(self.omega * s))
        return out

    def heading_range(self) -> float:
        """Spread of the tangent heading over the mold; < pi guarantees simplicity."""
        s = np.linspace(0.0, self.length, 512)
        theta = self.kappa_integral(s)
        return float(theta.max() - theta.min())

    def line(self, M: int) -> CharLine:
        """Mold characteristic line at M points, planar, from origin along +x."""
        n = max(4 * M, 256)
        s_edges = np.linspace(0.0, self.length, n + 1)
        integ = self.kappa_integral(s_edges)
        ds = np.diff(s_edges)
        kappa_avg = np.diff(integ) / ds
        fine = line_from_curvature(kappa_avg, ds)
        return resample_line(fine, M)


class SampledMold:
    """Curvature profile recovered from a mold characteristic line.

    Used when the mold is defined by points rather than parameters (e.g. after
    displacement compensation). Per-segment curvature comes from heading
    differences in the x-z plane; the cumulative curvature integral is
    piecewise linear between segment midpoints.
    """

    def __init__(self, line: CharLine):
        pts = line.points
        d = np.diff(pts[:, [0, 2]], axis=0)
        seg = np.linalg.norm(d, axis=1)
        if np.any(seg < 1e-12):
            raise ValueError("mold line has degenerate planar segments")
        theta = np.unwrap(np.arctan2(d[:, 1], d[:, 0]))
        s_edges = np.concatenate([[0.0], np.cumsum(seg)])
        mids = 0.5 * (s_edges[:-1] + s_edges[1:])
        self.length = float(s_edges[-1])
        # anchor the integral so that F(mid_0) = 0 relative to the first heading
        self._knots_s = np.concatenate([[0.0], mids, [self.length]])
        rel = theta - theta[0]
        first_kappa = (theta[1] - theta[0]) / (mids[1] - mids[0]) if len(theta) > 1 else 0.0
        last_kappa = (theta[-1] - theta[-2]) / (mids[-1] - mids[-2]) if len(theta) > 1 else 0.0
        head = rel[0] - first_kappa * mids[0]
        tail = rel[-1] + last_kappa * (self.length - mids[-1])
        self._knots_f = np.concatenate([[head], rel, [tail]])
        self._theta = theta
        self._mids = mids

    def kappa_integral(self, s):
        s = np.asarray(s, dtype=float)
        return np.interp(s, self._knots_s, self._knots_f)

    def start_curvature(self) -> float:
        """Osculating curvature at s = 0, estimated from the first headings."""
        if len(self._theta) < 2:
            return 0.0
        n = min(5, len(self._theta))
        dk = np.diff(self._theta[:n]) / np.diff(self._mids[:n])
        return float(np.mean(dk))


@dataclass(frozen=True)
class FidelityLevel:
    """Simulation accuracy tier: segment count and unloading model knobs."""

    n_seg: int
    exact_unloading: bool
    stretch_coupling: bool

    def __post_init__(self):
        if self.n_seg < 4:
            raise ValueError("need at least 4 segments")


HF = FidelityLevel(n_seg=512, exact_unloading=True, stretch_coupling=True)
LF = FidelityLevel(n_seg=32, exact_unloading=False, stretch_coupling=False)


@dataclass(frozen=True)
class SimConstants:
    """Loading/contact/deflection constants, echoed from the generator config."""

    eps0: float = 0.002    # base axial strain at zero pull
    gamma: float = 0.01    # axial strain per unit d_x / L0
    beta1: float = 400.0   # contact arc per rad of clamp rotation, mm/rad
    beta2: float = 2.0     # contact arc per mm of clamp translation
    alpha1: float = 0.05   # out-of-plane deflection per rad of theta_x
    alpha2: float = 0.02   # out-of-plane deflection per mm of d_y
    c0: float = 0.85       # constant-factor springback of the low-fidelity model


@dataclass
class ProblemInstance:
    """One stretch-bending case: section + SDF, initial line, mold, motion, material."""

    section: Polygon2D
    sdf: SDFGrid
    init_line: CharLine
    mold: MoldCurve
    mold_line: CharLine
    motion: MotionParams
    material: Material
    seed: int
    constants: SimConstants = field(default_factory=SimConstants)

    def __post_init__(self):
        pts = self.init_line.points
        chord = pts[-1] - pts[0]
        t = chord / np.linalg.norm(chord)
        offsets = (pts - pts[0]) - np.outer((pts - pts[0]) @ t, t)
        if np.max(np.linalg.norm(offsets, axis=1)) > 1e-9:
            raise ValueError("initial characteristic line must be straight")

    @property
    def length(self) -> float:
        return self.init_line.arc_length()


# ---------------------------------------------------------------------------
# generator configuration
# ---------------------------------------------------------------------------

@dataclass
class GeneratorConfig:
    """Family ranges and physics constants; round-trips through a flat key-value file."""

    points_per_line: int = 288
    sdf_h: int = 64
    sdf_w: int = 64
    beam_length: float = 300.0
    mold_length: float = 300.0

    # material ranges (zero-width by default: one alloy across the corpus, so
    # the input representation fully determines the output)
    e_range: tuple = (68000.0, 68000.0)
    sigma_y_range: tuple = (95.0, 95.0)
    eta_range: tuple = (0.12, 0.12)
    lam_range: tuple = (1.5, 1.5)

    # section families
    section_w_range: tuple = (10.0, 26.0)
    section_h_range: tuple = (12.0, 30.0)
    section_t_frac_range: tuple = (0.18, 0.32)  # wall thickness / min(w, h)
    corner_r_frac_range: tuple = (0.12, 0.25)   # corner radius / min(w, h)

    # mold curvature family
    mold_a_range: tuple = (0.0018, 0.006)
    mold_b_range: tuple = (-5e-6, 5e-6)
    mold_c_range: tuple = (0.0, 8e-4)
    mold_omega_range: tuple = (0.01, 0.04)

    # clamp motion ranges
    dx_range: tuple = (0.0, 30.0)
    dy_range: tuple = (-2.0, 2.0)
    dz_range: tuple = (0.0, 40.0)
    thx_range: tuple = (-0.05, 0.05)
    thy_range: tuple = (0.2, 1.2)
    thz_range: tuple = (-0.05, 0.05)

    # physics constants
    eps0: float = 0.002
    gamma: float = 0.01
    beta1: float = 400.0
    beta2: float = 2.0
    alpha1: float = 0.05
    alpha2: float = 0.02
    c0: float = 0.85

    def constants(self) -> SimConstants:
        return SimConstants(eps0=self.eps0, gamma=self.gamma, beta1=self.beta1,
                            beta2=self.beta2, alpha1=self.alpha1, alpha2=self.alpha2,
                            c0=self.c0)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    @staticmethod
    def from_dict(d: dict) -> "GeneratorConfig":
        cfg = GeneratorConfig()
        for k, v in d.items():
            if not hasattr(cfg, k):
                raise KeyError(f"unknown generator config key {k!r}")
            cur = getattr(cfg, k)
            if isinstance(cur, tuple):
                setattr(cfg, k, tuple(float(x) for x in v))
            elif isinstance(cur, int):
                setattr(cfg, k, int(v))
            else:
                setattr(cfg, k, float(v))
        return cfg

    def to_file(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write("# generator configuration: flat key = value, ranges as two values\n")
            for k, v in asdict(self).items():
                if isinstance(v, tuple):
                    f.write(f"{k} = {v[0]:.12g} {v[1]:.12g}\n")
                else:
                    f.write(f"{k} = {v}\n")

    @staticmethod
    def from_file(path) -> "GeneratorConfig":
        d = {}
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"malformed generator config line: {line!r}")
                key, val = (part.strip() for part in line.split("=", 1))
                parts = val.split()
                d[key] = parts if len(parts) > 1 else parts[0]
        return GeneratorConfig.from_dict(d)


# ---------------------------------------------------------------------------
# section polygon families
# ---------------------------------------------------------------------------

def rounded_rectangle(w: float, h: float, r: float, pts_per_corner: int = 6) -> Polygon2D:
    """Axis-aligned w x h rectangle with radius-r corner arcs, centered at the origin."""
    r = min(r, 0.49 * min(w, h))
    cx, cy = 0.5 * w - r, 0.5 * h - r
    corners = [(cx, cy, 0.0), (-cx, cy, 0.5 * math.pi),
               (-cx, -cy, math.pi), (cx, -cy, 1.5 * math.pi)]
    verts = []
    for ux, uy, phi0 in corners:
        for t in np.linspace(0.0, 0.5 * math.pi, pts_per_corner):
            ang = phi0 + t
            verts.append((ux + r * math.cos(ang), uy + r * math.sin(ang)))
    return Polygon2D(np.asarray(verts))


def l_profile(w: float, h: float, t: float) -> Polygon2D:
    """L-shaped angle section, legs along +u and +v, wall thickness t."""
    t = min(t, 0.45 * min(w, h))
    verts = [(0, 0), (w, 0), (w, t), (t, t), (t, h), (0, h)]
    poly = np.asarray(verts, dtype=float)
    poly -= poly.mean(axis=0)
    return Polygon2D(poly)


def channel(w: float, h: float, t: float) -> Polygon2D:
    """C-shaped channel opening toward +u, wall thickness t."""
    t = min(t, 0.3 * min(w, h))
    verts = [(0, 0), (w, 0), (w, t), (t, t), (t, h - t), (w, h - t), (w, h), (0, h)]
    poly = np.asarray(verts, dtype=float)
    poly -= poly.mean(axis=0)
    return Polygon2D(poly)


SECTION_FAMILIES = ("rounded_rectangle", "l_profile", "channel")


# ---------------------------------------------------------------------------
# instance sampling
# ---------------------------------------------------------------------------

def _uniform(rng, lo_hi) -> float:
    lo, hi = lo_hi
    if hi < lo:
        raise ValueError(f"degenerate range ({lo}, {hi})")
    return float(lo) if hi == lo else float(rng.uniform(lo, hi))


def sample_section(rng, cfg: GeneratorConfig) -> Polygon2D:
    family = SECTION_FAMILIES[int(rng.integers(0, len(SECTION_FAMILIES)))]
    w = _uniform(rng, cfg.section_w_range)
    h = _uniform(rng, cfg.section_h_range)
    if family == "rounded_rectangle":
        r = _uniform(rng, cfg.corner_r_frac_range) * min(w, h)
        return rounded_rectangle(w, h, r)
    t = _uniform(rng, cfg.section_t_frac_range) * min(w, h)
    if family == "l_profile":
        return l_profile(w, h, t)
    return channel(w, h, t)


def sample_instance(seed: int, cfg: GeneratorConfig | None = None) -> ProblemInstance:
    """Deterministic per-seed instance draw from the configured families."""
    cfg = cfg or GeneratorConfig()
    rng = np.random.default_rng(seed)

    section = sample_section(rng, cfg)
    material = Material(
        E=_uniform(rng, cfg.e_range),
        sigma_y=_uniform(rng, cfg.sigma_y_range),
        eta=_uniform(rng, cfg.eta_range),
        lam=_uniform(rng, cfg.lam_range),
    )

    mold = None
    for _ in range(100):
        cand = MoldCurve(
            a=_uniform(rng, cfg.mold_a_range),
            b=_uniform(rng, cfg.mold_b_range),
            c=_uniform(rng, cfg.mold_c_range),
            omega=_uniform(rng, cfg.mold_omega_range),
            length=cfg.mold_length,
        )
        if cand.heading_range() < math.pi - 0.05:
            mold = cand
            break
    if mold is None:
        raise ValueError(f"could not sample a simple mold in 100 tries (seed {seed})")

    motion = MotionParams((
        _uniform(rng, cfg.dx_range),
        _uniform(rng, cfg.dy_range),
        _uniform(rng, cfg.dz_range),
        _uniform(rng, cfg.thx_range),
        _uniform(rng, cfg.thy_range),
        _uniform(rng, cfg.thz_range),
    ))

    m = cfg.points_per_line
    init_pts = np.zeros((m, 3))
    init_pts[:, 0] = np.linspace(0.0, cfg.beam_length, m)
    init_line = CharLine(init_pts)

    sdf = polygon_sdf(section, cfg.sdf_h, cfg.sdf_w)
    return ProblemInstance(
        section=section, sdf=sdf, init_line=init_line, mold=mold,
        mold_line=mold.line(m), motion=motion, material=material,
        seed=int(seed), constants=cfg.constants(),
    )


# ---------------------------------------------------------------------------
# elastoplastic model
# ---------------------------------------------------------------------------

def yield_curvature(material: Material, props: SectionProps) -> float:
    return material.sigma_y / (material.E * props.c)


def bending_moment(kappa, material: Material, props: SectionProps):
    """Bilinear moment-curvature law: elastic slope EI, hardening slope eta*EI."""
    kappa = np.asarray(kappa, dtype=float)
    ei = material.E * props.inertia
    k_y = yield_curvature(material, props)
    ak = np.abs(kappa)
    elastic = ei * ak
    plastic = ei * k_y + material.eta * ei * (ak - k_y)
    return np.sign(kappa) * np.where(ak <= k_y, elastic, plastic)


def loaded_curvature(inst: ProblemInstance, fid: FidelityLevel,
                     mold_profile=None):
    """Per-segment loaded curvature and the axial strain under load.

    The workpiece conforms to the mold over the contact arc s_c; each segment
    stores the exact arc-length average of the mold curvature over its contact
    portion, which keeps coarse and fine discretizations mutually consistent.
    `mold_profile` overrides the instance's parametric mold (compensation use).
    """
    c = inst.constants
    mp = inst.motion
    length = inst.length
    mold = mold_profile if mold_profile is not None else inst.mold

    s_c = c.beta1 * abs(mp.theta_y) + c.beta2 * math.hypot(mp.d_x, mp.d_z)
    s_c = float(np.clip(s_c, 0.0, min(length, mold.length)))

    n = fid.n_seg
    ds = length / n
    edges = np.linspace(0.0, length, n + 1)
    clipped = np.minimum(edges, s_c)
    integ = mold.kappa_integral(clipped)
    kappa_load = np.diff(integ) / ds

    eps = max(0.0, c.eps0 + c.gamma * mp.d_x / length)
    return kappa_load, eps


def springback(kappa_load, material: Material, props: SectionProps, eps: float,
               fid: FidelityLevel, c0: float = 0.85):
    """Residual curvature after elastic unloading.

    Exact unloading recovers Delta kappa = M(kappa)/EI, damped by (1 + lam*eps)
    when stretch coupling is enabled; the low-fidelity shortcut recovers a
    constant fraction c0 of the loaded curvature instead.
    """
    kappa_load = np.asarray(kappa_load, dtype=float)
    if not np.all(np.isfinite(kappa_load)):
        raise ValueError("loaded curvature must be finite")
    if fid.exact_unloading:
        ei = material.E * props.inertia
        recovery = np.abs(bending_moment(kappa_load, material, props)) / ei
        if fid.stretch_coupling:
            recovery = recovery / (1.0 + material.lam * eps)
    else:
        recovery = c0 * np.abs(kappa_load)
    residual = np.maximum(np.abs(kappa_load) - recovery, 0.0)
    return np.sign(kappa_load) * residual


def unload_oracle(kappa_load: float, material: Material, props: SectionProps,
                  steps: int):
    """Brute-force incremental elastic unloading; test oracle for `springback`.

    Removes the loaded moment in `steps` equal decrements, each relaxing the
    curvature along the elastic slope EI. Scalar or array kappa_load.
    """
    if steps < 10:
        raise ValueError("need at least 10 unloading steps")
    kappa_load = np.asarray(kappa_load, dtype=float)
    ei = material.E * props.inertia
    moment = bending_moment(kappa_load, material, props)
    d_kappa = moment / ei / steps
    kappa = kappa_load.copy()
    for _ in range(steps):
        kappa = kappa - d_kappa
    return kappa if kappa.ndim else float(kappa)


def simulate(inst: ProblemInstance, fid: FidelityLevel,
             mold_profile=None) -> CharLine:
    """Full forward pass: load onto the mold, unload, integrate the final line.

    Deterministic in (inst, fid). Returns the final-state characteristic line
    resampled to the instance's M points, head clamped at the initial pose.
    """
    kappa_load, eps = loaded_curvature(inst, fid, mold_profile=mold_profile)
    props = section_props(inst.section)
    kappa_res = springback(kappa_load, inst.material, props, eps, fid,
                           c0=inst.constants.c0)

    eps_p = max(0.0, eps - inst.material.sigma_y / inst.material.E)
    n = fid.n_seg
    length = inst.length
    ds = np.full(n, (length / n) * (1.0 + eps_p))

    xi = np.arange(1, n + 1) / n
    amp = inst.constants.alpha1 * inst.motion.theta_x + inst.constants.alpha2 * inst.motion.d_y
    y_offsets = amp * xi * xi * length

    origin = inst.init_line.points[0]
    line = line_from_curvature(kappa_res, ds, origin=origin, theta0=0.0,
                               out_of_plane=y_offsets)
    return resample_line(line, len(inst.init_line))


# ---------------------------------------------------------------------------
# involute initializer
# ---------------------------------------------------------------------------

def _involute_motion(kappa0: float, unwind_len: float) -> MotionParams:
    # Classical involute of the radius-R osculating circle, expressed relative
    # to the mold start pose (string tangency starts at s = 0, tangent +x):
    # the canonical parametrization x = R(cos t + t sin t), z = R(sin t - t cos t)
    # rotates into d_x = R(sin t - t cos t), d_z = R(1 - cos t - t sin t).
    if abs(kappa0) < 1e-12:
        return MotionParams.zeros()
    r = 1.0 / abs(kappa0)
    t = unwind_len / r
    d_x = r * (math.sin(t) - t * math.cos(t))
    d_z = r * (1.0 - math.cos(t) - t * math.sin(t))
    sign = 1.0 if kappa0 > 0 else -1.0
    return MotionParams((d_x, 0.0, sign * d_z, 0.0, sign * t, 0.0))


def involute_init(mold: MoldCurve, unwind_len: float) -> MotionParams:
    """Clamp motion from the classical involute of the mold's osculating circle.

    The clamp endpoint follows the unwound-string path of the circle with
    radius 1/|kappa(0)|; the in-plane displacement and the y-axis rotation are
    set from the involute pose, the out-of-plane components stay zero. A
    straight mold returns zero motion.
    """
    if unwind_len < 0:
        raise ValueError("unwind length must be non-negative")
    return _involute_motion(float(mold.kappa(0.0)), unwind_len)


def involute_from_line(mold_line: CharLine, unwind_len: float) -> MotionParams:
    """Involute clamp motion for a point-set mold, via its start curvature."""
    return _involute_motion(SampledMold(mold_line).start_curvature(), unwind_len)
