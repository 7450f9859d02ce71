"""Equivalent momentum sources for submersible mixers.

A mixer is replaced by a cylindrical source region co-axial with the
propeller that applies a uniform volumetric momentum source. The propelled
flow follows from the manufacturer thrust/speed data,

    q = D_b * sqrt((omega/omega0) * (F0/rho)),

the source modulus from  M_p = rho/V_M * (q/D_b)^2,  and the source vector
points along the region axis: S_m = M_p * u_C.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DuplicateId


@dataclass(frozen=True)
class MixerSpec:
    """Impeller data as found on a manufacturer datasheet."""

    id: str
    D_b: float      # blade diameter, m
    F0: float       # thrust at design speed, N
    omega0: float   # design rotational speed, rad/s
    omega: float    # actual rotational speed, rad/s
    rho: float      # fluid density, kg/m3

    def __post_init__(self):
        for name in ("D_b", "F0", "omega0", "rho"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.omega < 0:
            raise ValueError("omega must be non-negative")


@dataclass(frozen=True)
class SourceRegion:
    """Cylindrical subvolume that carries the momentum source."""

    center: tuple   # (x, y, z), m
    axis: tuple     # unit vector
    R: float        # m
    L: float        # m

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        u = np.asarray(self.axis, dtype=np.float64)
        if len(c) != 3 or u.shape != (3,):
            raise ValueError("center and axis must be 3-vectors")
        if abs(np.linalg.norm(u) - 1.0) > 1e-12:
            raise ValueError("axis must be a unit vector (|u| = 1 within 1e-12)")
        if not self.R > 0 or not self.L > 0:
            raise ValueError("R and L must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "axis", tuple(float(v) for v in u))

    @property
    def volume(self) -> float:
        """Analytic cylinder volume pi R^2 L (m3)."""
        return math.pi * self.R ** 2 * self.L


@dataclass(frozen=True)
class MomentumSource:
    S_m: tuple    # N/m3 vector along the axis
    M_p: float    # N/m3 modulus
    q: float      # m3/s propelled flow
    V_M: float    # m3 region volume


@dataclass(frozen=True)
class StructuredGrid:
    """Uniform cubic-cell grid used for desk-scale cell tagging."""

    origin: tuple        # (x, y, z) of the low corner, m
    h: float             # cell edge, m
    counts: tuple        # (nx, ny, nz)

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("cell size must be positive")
        if len(self.counts) != 3 or any(int(c) < 1 for c in self.counts):
            raise ValueError("counts must be three integers >= 1")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))


def region_for(spec: MixerSpec, center, vertical_incl_deg: float,
               azimuth_deg: float, L: float | None = None) -> SourceRegion:
    """Source region from datasheet geometry: R = D_b/2, L = D_b/5 unless
    overridden."""
    return SourceRegion(tuple(center),
                        direction_from_angles(vertical_incl_deg, azimuth_deg),
                        spec.D_b / 2.0,
                        L if L is not None else spec.D_b / 5.0)


def mixer_from_text(text: str) -> tuple[MixerSpec, SourceRegion]:
    """Parse one mixer from a key-value document.

    Required keys: id, center (three comma-separated numbers),
    vertical_incl_deg, azimuth_deg, D_b, F0, omega0, omega, rho.
    Optional: L (defaults to D_b/5).
    """
    kv = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, val = line.partition("=")
        kv[key.strip()] = val.strip()
    try:
        spec = MixerSpec(id=kv["id"],
                         D_b=float(kv["D_b"]), F0=float(kv["F0"]),
                         omega0=float(kv["omega0"]), omega=float(kv["omega"]),
                         rho=float(kv["rho"]))
        center = tuple(float(c) for c in kv["center"].split(","))
        region = region_for(spec, center,
                            float(kv["vertical_incl_deg"]),
                            float(kv["azimuth_deg"]),
                            L=float(kv["L"]) if "L" in kv else None)
    except KeyError as exc:
        raise ValueError(f"mixer document lacks {exc}") from None
    return spec, region


def direction_from_angles(vertical_incl_deg: float, azimuth_deg: float) -> tuple:
    """Unit vector from a vertical inclination above the horizontal plane and
    an azimuth measured from +x toward +y."""
    phi = math.radians(vertical_incl_deg)
    theta = math.radians(azimuth_deg)
    return (math.cos(phi) * math.cos(theta),
            math.cos(phi) * math.sin(theta),
            math.sin(phi))


def propelled_flow(spec: MixerSpec) -> float:
    """Flow rate propelled by the impeller, m3/s."""
    return spec.D_b * math.sqrt((spec.omega / spec.omega0) * (spec.F0 / spec.rho))


def momentum_modulus(spec: MixerSpec, region: SourceRegion) -> tuple[float, float]:
    """(M_p, V_M): source modulus in N/m3 and the analytic region volume."""
    q = propelled_flow(spec)
    v_m = region.volume
    m_p = spec.rho / v_m * (q / spec.D_b) ** 2
    return m_p, v_m


def momentum_source_vector(spec: MixerSpec, region: SourceRegion) -> MomentumSource:
    m_p, v_m = momentum_modulus(spec, region)
    u = region.axis
    return MomentumSource(tuple(m_p * c for c in u), m_p, propelled_flow(spec), v_m)


def contains_point(region: SourceRegion, point) -> bool:
    """Inclusive membership test against the cylindrical region.

    The point must lie within ``R`` of the axis (cross-product distance) and
    within ``L/2`` of the mid plane (projection onto the axis).
    """
    r = np.asarray(point, dtype=np.float64) - np.asarray(region.center)
    u = np.asarray(region.axis)
    d_axis = np.linalg.norm(np.cross(r, u))
    d_plane = abs(float(r @ u))
    return bool(d_axis <= region.R and d_plane <= region.L / 2.0)


def tag_cells(region: SourceRegion, grid: StructuredGrid):
    """Cells (by center) inside the region.

    Returns ``(indices, volume)`` where ``indices`` is an (m, 3) int array of
    (i, j, k) cell indices sorted lexicographically and ``volume`` the
    discrete source volume ``m * h^3``. Emits a warning when the selection is
    empty. Center-based tagging converges to the analytic cylinder volume as
    the grid is refined.
    """
    nx, ny, nz = grid.counts
    h = grid.h
    ox, oy, oz = grid.origin
    cx = ox + h * (np.arange(nx) + 0.5) - region.center[0]
    cy = oy + h * (np.arange(ny) + 0.5) - region.center[1]
    cz = oz + h * (np.arange(nz) + 0.5) - region.center[2]
    rx, ry, rz = np.meshgrid(cx, cy, cz, indexing="ij")
    ux, uy, uz = region.axis
    proj = rx * ux + ry * uy + rz * uz
    # |r x u|^2 = |r|^2 - (r.u)^2
    d2 = rx * rx + ry * ry + rz * rz - proj * proj
    inside = (d2 <= region.R ** 2) & (np.abs(proj) <= region.L / 2.0)
    idx = np.argwhere(inside)
    if idx.shape[0] == 0:
        warnings.warn(f"no grid cell center falls inside the source region "
                      f"(R={region.R}, L={region.L})", stacklevel=2)
    return idx, float(idx.shape[0] * h ** 3)


def _fmt(x: float) -> str:
    return repr(float(x))


def _vec(v) -> str:
    return "(" + " ".join(_fmt(c) for c in v) + ")"


def export_source_dictionary(mixers: list[tuple[MixerSpec, SourceRegion]]) -> str:
    """Deterministic dictionary text for the downstream CFD toolchain.

    One block per mixer, sorted by id; byte-stable for identical inputs.
    Raises :class:`DuplicateId` when two mixers share an id. The format is
    documented in docs/mixer-dictionary.md.
    """
    if not mixers:
        raise ValueError("need at least one mixer")
    seen = set()
    for spec, _ in mixers:
        if spec.id in seen:
            raise DuplicateId(f"duplicate mixer id {spec.id!r}")
        seen.add(spec.id)
    buf = io.StringIO()
    buf.write("// momentum source regions for submersible mixers\n")
    buf.write("// units: SI (m, s, kg, N)\n\n")
    for spec, region in sorted(mixers, key=lambda m: m[0].id):
        src = momentum_source_vector(spec, region)
        buf.write(f"{spec.id}\n{{\n")
        buf.write(f"    center          {_vec(region.center)};\n")
        buf.write(f"    axis            {_vec(region.axis)};\n")
        buf.write(f"    radius          {_fmt(region.R)};\n")
        buf.write(f"    length          {_fmt(region.L)};\n")
        buf.write(f"    volume          {_fmt(src.V_M)};\n")
        buf.write(f"    bladeDiameter   {_fmt(spec.D_b)};\n")
        buf.write(f"    density         {_fmt(spec.rho)};\n")
        buf.write(f"    propelledFlow   {_fmt(src.q)};\n")
        buf.write(f"    momentumModulus {_fmt(src.M_p)};\n")
        buf.write(f"    momentumSource  {_vec(src.S_m)};\n")
        buf.write("}\n\n")
    return buf.getvalue()
