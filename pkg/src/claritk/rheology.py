"""Non-Newtonian viscosity models and rheogram calibration.

Supports the Bingham-plastic, power-law and Herschel-Bulkley constitutive
laws plus a Newtonian water default. Yield-stress models are regularized by
capping the shear rate in the denominator at ``gamma_reg``, which keeps the
apparent viscosity finite and continuous down to zero shear.
"""

from __future__ import annotations

import csv
import enum
import importlib.resources
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InsufficientPoints, OutOfRange
from .fitting import least_squares, ols_line


class RheologyKind(enum.Enum):
    NEWTONIAN = "newtonian"
    BINGHAM = "bingham"
    POWER_LAW = "powerlaw"
    HERSCHEL_BULKLEY = "herschelbulkley"


@dataclass(frozen=True)
class RheologyModel:
    """Constitutive-law parameters; unused fields stay at their defaults.

    tau_y [Pa], mu_p [Pa.s], K [Pa.s^n], n [-], mu [Pa.s],
    gamma_reg [1/s] regularization shear rate.
    """

    kind: RheologyKind
    mu: float = 0.0
    tau_y: float = 0.0
    mu_p: float = 0.0
    K: float = 0.0
    n: float = 1.0
    gamma_reg: float = 1e-3
    residual: float = 0.0
    converged: bool = True
    tau_y_clamped: bool = False

    def __post_init__(self):
        for name in ("mu", "tau_y", "mu_p", "K"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.n > 0:
            raise ValueError("flow index n must be positive")
        if not self.gamma_reg > 0:
            raise ValueError("gamma_reg must be positive")


@dataclass(frozen=True)
class Rheogram:
    """Measured shear stress vs shear rate samples."""

    gamma_dot: np.ndarray  # 1/s
    tau: np.ndarray        # Pa

    def __post_init__(self):
        g = np.asarray(self.gamma_dot, dtype=np.float64)
        t = np.asarray(self.tau, dtype=np.float64)
        if g.size != t.size or g.size < 1:
            raise ValueError("gamma_dot and tau must be equally long, non-empty")
        if np.any(g <= 0):
            raise ValueError("shear rates must be positive")
        if np.any(t < 0):
            raise ValueError("shear stresses must be non-negative")
        if g.size > 1 and not np.all(np.diff(g) > 0):
            raise ValueError("shear rates must be strictly increasing")
        object.__setattr__(self, "gamma_dot", g)
        object.__setattr__(self, "tau", t)

    def __len__(self):
        return self.gamma_dot.size


def rheogram_from_csv(data: bytes) -> Rheogram:
    """Parse a rheogram CSV with columns ``gamma_dot_1_s, tau_Pa``."""
    text = data.decode("utf-8-sig")
    rows = list(csv.reader(l for l in text.splitlines()
                           if l.strip() and not l.startswith("#")))
    header = [h.strip() for h in rows[0]]
    ig, it = header.index("gamma_dot_1_s"), header.index("tau_Pa")
    g = np.array([float(r[ig]) for r in rows[1:]])
    tau = np.array([float(r[it]) for r in rows[1:]])
    return Rheogram(g, tau)


def shear_stress(model: RheologyModel, gamma_dot):
    """Constitutive shear stress tau(gamma_dot), unregularized."""
    g = np.asarray(gamma_dot, dtype=np.float64)
    k = model.kind
    if k is RheologyKind.NEWTONIAN:
        tau = model.mu * g
    elif k is RheologyKind.POWER_LAW:
        tau = model.K * g ** model.n
    elif k is RheologyKind.BINGHAM:
        tau = model.tau_y + model.mu_p * g
    else:
        tau = model.tau_y + model.K * g ** model.n
    return tau if tau.ndim else float(tau)


def apparent_viscosity(model: RheologyModel, gamma_dot):
    """Apparent viscosity tau/gamma_dot with the low-shear cap applied."""
    g = np.asarray(gamma_dot, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("shear rate must be non-negative")
    greg = np.maximum(g, model.gamma_reg)
    k = model.kind
    if k is RheologyKind.NEWTONIAN:
        mu = np.broadcast_to(np.float64(model.mu), g.shape).copy() if g.ndim else np.float64(model.mu)
    elif k is RheologyKind.POWER_LAW:
        mu = model.K * g ** (model.n - 1.0)
    elif k is RheologyKind.BINGHAM:
        mu = model.mu_p + model.tau_y / greg
    else:
        mu = (model.tau_y + model.K * greg ** model.n) / greg
    mu = np.asarray(mu)
    return mu if mu.ndim else float(mu)


def fit_rheology(kind: RheologyKind, data: Rheogram,
                 gamma_reg: float = 1e-3) -> RheologyModel:
    """Least-squares calibration in stress space.

    Bingham: linear OLS on tau = tau_y + mu_p*gamma_dot (a negative fitted
    intercept is clamped to zero and flagged). Power law: OLS on
    ln tau = ln K + n ln gamma_dot. Herschel-Bulkley: damped Gauss-Newton
    over (ln tau_y, ln K, ln n) started from the power-law fit.
    """
    needed = {RheologyKind.BINGHAM: 2, RheologyKind.POWER_LAW: 2,
              RheologyKind.HERSCHEL_BULKLEY: 3}
    if kind is RheologyKind.NEWTONIAN:
        if len(data) < 1:
            raise InsufficientPoints("need at least 1 sample")
        mu = float(np.sum(data.tau * data.gamma_dot) / np.sum(data.gamma_dot ** 2))
        resid = data.tau - mu * data.gamma_dot
        return RheologyModel(RheologyKind.NEWTONIAN, mu=max(mu, 0.0),
                             gamma_reg=gamma_reg,
                             residual=float(np.linalg.norm(resid)))
    if len(data) < needed[kind]:
        raise InsufficientPoints(f"{kind.value} fit needs >= {needed[kind]} samples")
    g, tau = data.gamma_dot, data.tau

    if kind is RheologyKind.BINGHAM:
        a, b, _, ss_res = ols_line(g, tau)
        clamped = a < 0
        if clamped:
            # refit slope with the intercept pinned at zero
            b = float(np.sum(tau * g) / np.sum(g * g))
            a = 0.0
            ss_res = float(np.sum((tau - b * g) ** 2))
        return RheologyModel(kind, tau_y=max(a, 0.0), mu_p=max(b, 0.0),
                             gamma_reg=gamma_reg, residual=float(np.sqrt(ss_res)),
                             tau_y_clamped=bool(clamped))

    if kind is RheologyKind.POWER_LAW:
        if np.any(tau <= 0):
            raise ValueError("power-law fit requires positive stresses")
        a, b, _, _ = ols_line(np.log(g), np.log(tau))
        K, n = float(np.exp(a)), float(b)
        resid = tau - K * g ** n
        return RheologyModel(kind, K=K, n=n, gamma_reg=gamma_reg,
                             residual=float(np.linalg.norm(resid)))

    # Herschel-Bulkley
    if np.any(tau <= 0):
        raise ValueError("Herschel-Bulkley fit requires positive stresses")
    a, b, _, _ = ols_line(np.log(g), np.log(tau))
    k0, n0 = float(np.exp(a)), float(max(b, 1e-3))
    ty0 = max(float(tau.min()) * 0.1, 1e-8)

    def unpack(theta):
        return np.exp(theta[0]), np.exp(theta[1]), np.exp(theta[2])

    def residuals(theta):
        ty, K, n = unpack(theta)
        return ty + K * g ** n - tau

    def jacobian(theta):
        ty, K, n = unpack(theta)
        gn = g ** n
        return np.column_stack([np.full_like(g, ty), K * gn, K * gn * np.log(g) * n])

    res = least_squares(residuals, np.log([ty0, k0, n0]), jac=jacobian)
    ty, K, n = unpack(res.theta)
    return RheologyModel(kind, tau_y=float(ty), K=float(K), n=float(n),
                         gamma_reg=gamma_reg, residual=res.residual_norm,
                         converged=res.converged)


@lru_cache(maxsize=1)
def _water_table():
    text = importlib.resources.files("claritk.data").joinpath(
        "water_viscosity.csv").read_text()
    temps, mus = [], []
    for row in csv.reader(l for l in text.splitlines()
                          if l.strip() and not l.startswith("#")):
        if row[0] == "temperature_C":
            continue
        temps.append(float(row[0]))
        mus.append(float(row[1]))
    return np.array(temps), np.array(mus)


def newtonian_defaults(temperature_C: float, gamma_reg: float = 1e-3) -> RheologyModel:
    """Newtonian water model from the shipped viscosity table.

    The table has 1 degC resolution; intermediate temperatures are linearly
    interpolated. See data/water_viscosity.csv for provenance.
    """
    if not 0.0 < temperature_C < 100.0:
        raise OutOfRange("temperature must be within (0, 100) degC")
    temps, mus = _water_table()
    mu = float(np.interp(temperature_C, temps, mus))
    return RheologyModel(RheologyKind.NEWTONIAN, mu=mu, gamma_reg=gamma_reg)


def export_transport_properties(model: RheologyModel) -> str:
    """Key-value export using the transport-properties vocabulary of the
    downstream CFD toolchain."""
    lines = [f"transportModel {model.kind.value};"]
    k = model.kind
    if k is RheologyKind.NEWTONIAN:
        lines.append(f"mu {model.mu!r};")
    elif k is RheologyKind.BINGHAM:
        lines.append(f"tau_y {model.tau_y!r};")
        lines.append(f"mu_p {model.mu_p!r};")
    elif k is RheologyKind.POWER_LAW:
        lines.append(f"K {model.K!r};")
        lines.append(f"n {model.n!r};")
    else:
        lines.append(f"tau_y {model.tau_y!r};")
        lines.append(f"K {model.K!r};")
        lines.append(f"n {model.n!r};")
    lines.append(f"gamma_reg {model.gamma_reg!r};")
    return "\n".join(lines) + "\n"
