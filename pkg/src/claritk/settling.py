"""Zone-settling velocity models and their calibration from batch tests.

Two hindered-settling laws are supported: the single-exponential law
``V0*exp(-r_h*X)`` and the double-exponential law
``V0*(exp(-r_h*X) - exp(-r_p*X))``. Calibration is a two-stage procedure:
the descending linear region of each batch interface-height curve gives one
(X, Vs) point, and the model parameters are fitted across those points.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDesign,
    InsufficientPoints,
    NoDescendingRegion,
    NonPositiveSlopeFit,
    NonPositiveVelocity,
)
from .fitting import least_squares, ols_line


class SettlingKind(enum.Enum):
    VESILIND = "vesilind"
    TAKACS = "takacs"


@dataclass(frozen=True)
class SettlingModel:
    """Calibrated settling-velocity law.

    Parameters
    ----------
    V0 : float
        Settling velocity in the limit of vanishing solids concentration, m/s.
    r_h : float
        Hindered-settling coefficient, m3/kg.
    r_p : float or None
        Low-concentration coefficient of the double-exponential law, m3/kg;
        must exceed ``r_h`` so the velocity stays non-negative.
    residual : float
        Norm of the fit residuals (0 for hand-built models).
    converged : bool
        False when the nonlinear fit stopped at the iteration cap.
    """

    kind: SettlingKind
    V0: float
    r_h: float
    r_p: float | None = None
    residual: float = 0.0
    converged: bool = True

    def __post_init__(self):
        if not self.V0 > 0:
            raise ValueError("V0 must be positive")
        if not self.r_h > 0:
            raise ValueError("r_h must be positive")
        if self.kind is SettlingKind.TAKACS:
            if self.r_p is None or not self.r_p > self.r_h:
                raise ValueError("double-exponential law requires r_p > r_h")


@dataclass(frozen=True)
class VelocityPoint:
    """One hindered-settling velocity measurement at concentration X."""

    X: float
    Vs: float
    fit_r2: float = 1.0

    def __post_init__(self):
        if not self.X > 0:
            raise ValueError("X must be positive")
        if self.Vs < 0:
            raise ValueError("Vs must be non-negative")


@dataclass(frozen=True)
class BatchSettlingTest:
    """Interface height vs time record of one batch settling test."""

    concentration: float  # kg/m3
    times: np.ndarray     # s
    heights: np.ndarray   # m

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        h = np.asarray(self.heights, dtype=np.float64)
        if not self.concentration > 0:
            raise ValueError("concentration must be positive")
        if t.size != h.size or t.size < 2:
            raise ValueError("need at least 2 (time, height) samples")
        if not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        if np.any(h < 0):
            raise ValueError("heights must be non-negative")
        rises = np.diff(h) > 1e-3 * max(h.max(), 1e-12)
        if np.any(rises[1:]):
            warnings.warn("interface height rises after the initial sample",
                          stacklevel=2)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "heights", h)


def fit_linear_region(test: BatchSettlingTest,
                      region: tuple[int, int] | None = None) -> VelocityPoint:
    """Fit the descending linear part of the settling curve.

    ``region`` is a half-open index range ``(start, stop)``; when omitted the
    contiguous window of length >= 3 that maximizes R^2 among windows with
    negative slope is selected (ties: longer window, then earlier start).
    The settling velocity is the negated slope.
    """
    t, h = test.times, test.heights
    if region is not None:
        lo, hi = region
        if hi - lo < 2 or lo < 0 or hi > t.size:
            raise ValueError("region must contain at least 2 samples")
        _, slope, r2, _ = ols_line(t[lo:hi], h[lo:hi])
        if slope >= 0:
            raise NoDescendingRegion("selected region has non-negative slope")
        return VelocityPoint(test.concentration, -slope, r2)
    if t.size < 3:
        raise ValueError("auto selection needs at least 3 samples")
    best = None  # (r2, length, -start, slope)
    for w in range(3, t.size + 1):
        for s in range(0, t.size - w + 1):
            try:
                _, slope, r2, _ = ols_line(t[s:s + w], h[s:s + w])
            except ZeroDivisionError:
                continue
            if slope >= 0:
                continue
            key = (round(r2, 12), w, -s)
            if best is None or key > best[0]:
                best = (key, slope, r2)
    if best is None:
        raise NoDescendingRegion("no contiguous window has negative slope")
    return VelocityPoint(test.concentration, -best[1], best[2])


def fit_vesilind(points: list[VelocityPoint]) -> SettlingModel:
    """Log-linear least squares for the single-exponential law.

    ``ln Vs = ln V0 - r_h X``; the residual is the L2 norm in log space.
    """
    if len(points) < 2:
        raise InsufficientPoints("need at least 2 velocity points")
    X = np.array([p.X for p in points])
    Vs = np.array([p.Vs for p in points])
    if np.any(Vs <= 0):
        raise NonPositiveVelocity("all velocities must be positive for the log fit")
    if np.all(X == X[0]):
        raise DegenerateDesign("all concentrations identical")
    try:
        a, b, _, ss_res = ols_line(X, np.log(Vs))
    except ZeroDivisionError:
        raise DegenerateDesign("all concentrations identical") from None
    r_h = -b
    if r_h <= 0:
        raise NonPositiveSlopeFit("fitted r_h is not positive")
    return SettlingModel(SettlingKind.VESILIND, float(np.exp(a)), float(r_h),
                         residual=float(np.sqrt(ss_res)))


def fit_takacs(points: list[VelocityPoint],
               init: SettlingModel | None = None) -> SettlingModel:
    """Nonlinear least squares for the double-exponential law.

    Parameters are optimized in a positivity-enforcing space
    ``(ln V0, ln r_h, ln(r_p - r_h))`` with damped Gauss-Newton steps; the
    initial guess comes from the single-exponential fit with
    ``r_p = 10 r_h`` unless ``init`` is given. Non-convergence is reported
    via the ``converged`` flag on the returned model, not an exception.
    """
    if len(points) < 3:
        raise InsufficientPoints("need at least 3 velocity points")
    X = np.array([p.X for p in points])
    Vs = np.array([p.Vs for p in points])
    if init is None:
        try:
            ves = fit_vesilind(points)
            v0_0, rh_0 = ves.V0, ves.r_h
        except (NonPositiveVelocity, NonPositiveSlopeFit, DegenerateDesign):
            v0_0, rh_0 = max(Vs.max(), 1e-6) * 2.0, 1.0 / max(X.mean(), 1e-6)
        # the r_p direction flattens out super-exponentially, so a single
        # start can stall when the data carries no low-concentration bend;
        # run from two starts and keep the lower-cost fit
        rp_starts = [10.0 * rh_0, 100.0 * rh_0]
    else:
        v0_0, rh_0 = init.V0, init.r_h
        rp_starts = [init.r_p if init.r_p is not None else 10.0 * init.r_h]

    def unpack(theta):
        v0 = np.exp(theta[0])
        rh = np.exp(theta[1])
        rp = rh + np.exp(theta[2])
        return v0, rh, rp

    def residuals(theta):
        v0, rh, rp = unpack(theta)
        return v0 * (np.exp(-rh * X) - np.exp(-rp * X)) - Vs

    def jacobian(theta):
        # rp = rh + exp(theta2), so d rp/d theta1 = rh and the theta1 column
        # carries the rp dependence as well
        v0, rh, rp = unpack(theta)
        eh = np.exp(-rh * X)
        ep = np.exp(-rp * X)
        d_theta0 = v0 * (eh - ep)
        d_theta1 = v0 * X * (ep - eh) * rh
        d_theta2 = v0 * X * ep * (rp - rh)
        return np.column_stack([d_theta0, d_theta1, d_theta2])

    res = None
    for rp_0 in rp_starts:
        theta0 = np.array([np.log(v0_0), np.log(rh_0),
                           np.log(max(rp_0 - rh_0, 1e-9))])
        cand = least_squares(residuals, theta0, jac=jacobian)
        if res is None or cand.residual_norm < res.residual_norm:
            res = cand
    v0, rh, rp = unpack(res.theta)
    return SettlingModel(SettlingKind.TAKACS, float(v0), float(rh), float(rp),
                         residual=res.residual_norm, converged=res.converged)


def model_to_text(model: SettlingModel) -> str:
    """Serialize a calibrated model as a small key-value document."""
    lines = [f"kind = {model.kind.value}",
             f"V0 = {model.V0!r}",
             f"r_h = {model.r_h!r}"]
    if model.r_p is not None:
        lines.append(f"r_p = {model.r_p!r}")
    lines.append(f"residual = {model.residual!r}")
    lines.append(f"converged = {str(model.converged).lower()}")
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> SettlingModel:
    kv = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, val = line.partition("=")
        kv[key.strip()] = val.strip()
    try:
        kind = SettlingKind(kv["kind"])
        return SettlingModel(
            kind, float(kv["V0"]), float(kv["r_h"]),
            float(kv["r_p"]) if "r_p" in kv else None,
            residual=float(kv.get("residual", 0.0)),
            converged=kv.get("converged", "true") == "true")
    except KeyError as exc:
        raise ValueError(f"settling model document lacks {exc}") from None


def batch_test_from_csv(data: bytes) -> BatchSettlingTest:
    """Parse a batch-test CSV: columns ``time_s, height_m`` and the tested
    concentration on a ``# X_kg_m3:`` comment line."""
    import csv as _csv

    text = data.decode("utf-8-sig")
    conc = None
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if body.lower().startswith("x_kg_m3"):
                conc = float(body.partition(":")[2])
            continue
        if line.strip():
            rows.append(line)
    if conc is None:
        raise ValueError("batch test CSV needs a '# X_kg_m3:' comment line")
    parsed = list(_csv.reader(rows))
    header = [h.strip() for h in parsed[0]]
    it, ih = header.index("time_s"), header.index("height_m")
    times = [float(r[it]) for r in parsed[1:]]
    heights = [float(r[ih]) for r in parsed[1:]]
    return BatchSettlingTest(conc, np.array(times), np.array(heights))


def settling_velocity(model: SettlingModel, X):
    """Hindered settling velocity at concentration ``X`` (scalar or array)."""
    X = np.asarray(X, dtype=np.float64)
    if np.any(X < 0):
        raise ValueError("X must be non-negative")
    if model.kind is SettlingKind.VESILIND:
        v = model.V0 * np.exp(-model.r_h * X)
    else:
        v = model.V0 * (np.exp(-model.r_h * X) - np.exp(-model.r_p * X))
        v = np.maximum(v, 0.0)
    return v if v.ndim else float(v)


def flux_curve(model: SettlingModel, X_grid):
    """Gravity solids flux ``G(X) = X * Vs(X)`` on the given grid."""
    X = np.asarray(X_grid, dtype=np.float64)
    if X.size > 1 and not np.all(np.diff(X) > 0):
        raise ValueError("X grid must be increasing")
    return X * settling_velocity(model, X)
