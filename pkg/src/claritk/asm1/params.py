"""ASM1 parameter set: validation and key-value file loading.

Parameters keep the reference units (rates per day, concentrations g/m3);
the reactor integrators convert to per-second when assembling source terms.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, fields, replace

from ..errors import MissingField, OutOfRange

# half-saturation constants sit in denominators and must stay positive;
# rate constants may legitimately be zeroed (e.g. to switch kinetics off)
_STRICTLY_POSITIVE = {"K_S", "K_OH", "K_NO", "K_X", "K_NH", "K_OA"}
_FRACTION_OPEN = {"Y_H", "Y_A"}        # must lie strictly inside (0, 1)


@dataclass(frozen=True)
class Asm1Params:
    """Stoichiometric and kinetic constants of ASM1 (reference units)."""

    # stoichiometry
    Y_H: float
    Y_A: float
    f_P: float
    i_XB: float
    i_XP: float
    # kinetics
    mu_H: float
    K_S: float
    K_OH: float
    K_NO: float
    b_H: float
    eta_g: float
    eta_h: float
    k_h: float
    K_X: float
    mu_A: float
    K_NH: float
    K_OA: float
    b_A: float
    k_a: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in _FRACTION_OPEN:
                if not 0.0 < v < 1.0:
                    raise OutOfRange(f"{f.name}={v} must be in (0, 1)")
            elif f.name == "f_P":
                if not 0.0 <= v < 1.0:
                    raise OutOfRange(f"f_P={v} must be in [0, 1)")
            elif f.name in _STRICTLY_POSITIVE:
                if not v > 0:
                    raise OutOfRange(f"{f.name}={v} must be positive")
            else:
                if v < 0:
                    raise OutOfRange(f"{f.name}={v} must be non-negative")


def _parse_kv(text: str) -> dict:
    values = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"expected 'key = value', got {line!r}")
        key, _, val = line.partition("=")
        values[key.strip()] = float(val.strip())
    return values


def _shipped_defaults() -> dict:
    text = importlib.resources.files("claritk.data").joinpath(
        "asm1_params_default.txt").read_text()
    return _parse_kv(text)


def load_params(path=None) -> Asm1Params:
    """Shipped 20 degC defaults, optionally overridden by a key-value file.

    The override file may be partial; unknown keys are rejected. See
    data/asm1_params_default.txt for the provenance of the defaults.
    """
    values = _shipped_defaults()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            overrides = _parse_kv(fh.read())
        known = {f.name for f in fields(Asm1Params)}
        for key in overrides:
            if key not in known:
                raise MissingField(f"unknown ASM1 parameter {key!r}")
        values.update(overrides)
    missing = {f.name for f in fields(Asm1Params)} - values.keys()
    if missing:
        raise MissingField(f"parameter file lacks {sorted(missing)}")
    return Asm1Params(**values)


def override(params: Asm1Params, **kwargs) -> Asm1Params:
    return replace(params, **kwargs)
