"""Export of the scalar-transport configuration consumed by the external
3D CFD toolchain.

Only configuration leaves this package: the thirteen components, their
Schmidt numbers, the molecular diffusivity term and the full kinetic
parameter set, tagged with the hydrodynamic timestep the transport solve
should start from. The naming follows the toolchain's transport-equation
vocabulary; see docs/asm1-transport.md.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .matrix import COMPONENTS
from .params import Asm1Params

DEFAULT_SCHMIDT = 0.7


@dataclass(frozen=True)
class TransportConfig:
    """Transport-side coefficients for the 13 scalars."""

    D_T: float = 1e-9                       # m2/s molecular diffusivity term
    schmidt: dict = field(default_factory=dict)   # per-scalar overrides
    nu_t_field: str = "nut"                 # turbulent viscosity field name
    velocity_field: str = "U"

    def __post_init__(self):
        if self.D_T < 0:
            raise ValueError("D_T must be non-negative")
        for name, value in self.schmidt.items():
            if name not in COMPONENTS:
                raise ValueError(f"unknown scalar {name!r}")
            if not value > 0:
                raise ValueError(f"Schmidt number for {name} must be positive")

    def schmidt_for(self, name: str) -> float:
        return self.schmidt.get(name, DEFAULT_SCHMIDT)


def export_transport_config(p: Asm1Params, tc: TransportConfig,
                            hydrodynamic_step: str | None = None) -> str:
    """Deterministic dictionary text; golden-file tested."""
    label = hydrodynamic_step if hydrodynamic_step else "latest"
    lines = [
        "// ASM1 scalar transport configuration",
        "// generated by claritk",
        "",
        f"hydrodynamicTimestep {label};",
        f"velocityField        {tc.velocity_field};",
        f"turbulentViscosity   {tc.nu_t_field};",
        f"molecularDiffusivity {tc.D_T!r};",
        "",
        "scalars",
        "(",
    ]
    for name in COMPONENTS:
        lines.append(f"    {name:<6} {{ Schmidt {tc.schmidt_for(name)!r}; }}")
    lines.append(");")
    lines.append("")
    lines.append("kinetics")
    lines.append("{")
    for fname in ("Y_H", "Y_A", "f_P", "i_XB", "i_XP", "mu_H", "K_S", "K_OH",
                  "K_NO", "b_H", "eta_g", "eta_h", "k_h", "K_X", "mu_A",
                  "K_NH", "K_OA", "b_A", "k_a"):
        lines.append(f"    {fname:<6} {getattr(p, fname)!r};")
    lines.append("}")
    return "\n".join(lines) + "\n"
