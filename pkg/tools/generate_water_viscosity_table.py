"""Regenerate src/claritk/data/water_viscosity.csv.

Dynamic viscosity of liquid water at atmospheric pressure, 0..100 degC at
1 degC resolution, from the correlation of Kestin, Sokolov & Wakeham (1978),
"Viscosity of liquid water in the range -8 C to 150 C",
J. Phys. Chem. Ref. Data 7(3), 941-948 (their Eq. 9, anchored at
1002.0 uPa.s at 20 C). Stated accuracy is within 0.5 % over this range.

Run from the repository root:  python tools/generate_water_viscosity_table.py
"""

import pathlib

ANCHOR_20C = 1002.0e-6  # Pa.s


def mu_water(t_c: float) -> float:
    d = 20.0 - t_c
    log10_ratio = (d / (t_c + 96.0)) * (
        1.2378 - 1.303e-3 * d + 3.06e-6 * d * d + 2.55e-8 * d * d * d
    )
    return ANCHOR_20C * 10.0 ** log10_ratio


def main():
    out = pathlib.Path(__file__).resolve().parents[1] / "src/claritk/data/water_viscosity.csv"
    lines = [
        "# Dynamic viscosity of liquid water at atmospheric pressure.",
        "# Source: Kestin, Sokolov & Wakeham (1978), J. Phys. Chem. Ref. Data 7(3),",
        "# 941-948, Eq. 9 anchored at 1002.0 uPa.s at 20 C (accuracy ~0.5 %).",
        "# Generated by tools/generate_water_viscosity_table.py; do not edit by hand.",
        "temperature_C,mu_Pa_s",
    ]
    for t in range(0, 101):
        lines.append(f"{t},{mu_water(float(t)):.6e}")
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
