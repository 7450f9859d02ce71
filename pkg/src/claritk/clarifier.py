"""1D secondary-settling-tank screening: design rules, state-point analysis,
and a dynamic ten-layer solids-flux model.

The state point sits at the intersection of the overflow line
``y = (Q_i/A) X`` and the underflow line through ``(X_u, 0)`` with slope
``-Q_r/A``; its position relative to the gravity-flux curve classifies the
loading condition. The ten-layer model discretizes the tank into ten
horizontal layers with the usual min-of-adjacent-fluxes limiter.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass

import numpy as np

from . import kernels, units
from .errors import (
    Infeasible,
    ModelMissing,
    NonPositiveFeed,
    UnknownQuantity,
    UnstableStep,
)
from .settling import SettlingKind, SettlingModel, settling_velocity
from .timeseries import TimeSeries, resample

N_LAYERS = 10
CRITICAL_REL_TOL = 1e-3
DEFAULT_X_THRESHOLD = 0.1  # kg/m3, flux-limiter threshold


@dataclass(frozen=True)
class ClarifierGeometry:
    """Dimensions of one (or several identical) circular clarifiers."""

    diameter: float            # m
    side_water_depth: float    # m
    feedwell_diameter: float   # m
    feedwell_depth: float      # m
    weir_length: float         # m
    n_tanks: int = 1

    def __post_init__(self):
        for name in ("diameter", "side_water_depth", "feedwell_diameter",
                     "feedwell_depth", "weir_length"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.feedwell_diameter >= self.diameter:
            raise ValueError("feedwell must be smaller than the tank")
        if self.n_tanks < 1:
            raise ValueError("n_tanks must be >= 1")

    @property
    def area(self) -> float:
        """Total settling surface, all tanks combined (m2)."""
        return self.n_tanks * math.pi * self.diameter ** 2 / 4.0


@dataclass(frozen=True)
class OperatingPoint:
    """Plant influent flow, external recycle flow and feed solids."""

    Q_i: float  # m3/s
    Q_r: float  # m3/s
    X_f: float  # kg/m3

    def __post_init__(self):
        if not self.Q_i > 0:
            raise ValueError("Q_i must be positive")
        if not self.Q_r > 0:
            raise ValueError("Q_r must be positive")
        if self.X_f < 0:
            raise ValueError("X_f must be non-negative")


def _parse_kv_document(text: str) -> dict:
    kv = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, val = line.partition("=")
        kv[key.strip()] = val.strip()
    return kv


def geometry_to_text(geom: ClarifierGeometry) -> str:
    return "".join(f"{name} = {getattr(geom, name)!r}\n"
                   for name in ("diameter", "side_water_depth",
                                "feedwell_diameter", "feedwell_depth",
                                "weir_length", "n_tanks"))


def geometry_from_text(text: str) -> ClarifierGeometry:
    kv = _parse_kv_document(text)
    try:
        return ClarifierGeometry(
            diameter=float(kv["diameter"]),
            side_water_depth=float(kv["side_water_depth"]),
            feedwell_diameter=float(kv["feedwell_diameter"]),
            feedwell_depth=float(kv["feedwell_depth"]),
            weir_length=float(kv["weir_length"]),
            n_tanks=int(kv.get("n_tanks", 1)))
    except KeyError as exc:
        raise ValueError(f"geometry document lacks {exc}") from None


# --- design rule screening ----------------------------------------------------


class Quantity(enum.Enum):
    OVERFLOW_RATE = "overflow_rate"       # Q_i / A
    DEPTH_RANGE = "depth_range"           # side water depth
    WEIR_LOADING = "weir_loading"         # Q_i / weir length
    FEEDWELL_RATIO = "feedwell_ratio"     # feedwell diameter / tank diameter
    SOLIDS_LOADING = "solids_loading"     # (Q_i + Q_r) X_f / A


_QUANTITY_DIMENSION = {
    Quantity.OVERFLOW_RATE: "velocity",
    Quantity.DEPTH_RANGE: "length",
    Quantity.WEIR_LOADING: "weir_loading",
    Quantity.FEEDWELL_RATIO: "dimensionless",
    Quantity.SOLIDS_LOADING: "mass_flux",
}


@dataclass(frozen=True)
class DesignRule:
    """One bibliographic recommendation: a bound on a derived quantity."""

    id: str
    quantity: Quantity
    low: float | None
    high: float | None
    unit: str
    reference: str

    def __post_init__(self):
        if self.low is None and self.high is None:
            raise ValueError("rule needs at least one bound")
        if self.low is not None and self.high is not None and self.low > self.high:
            raise ValueError("low bound exceeds high bound")


@dataclass(frozen=True)
class RuleCheck:
    rule_id: str
    quantity: str
    computed: float
    unit: str
    low: float | None
    high: float | None
    passed: bool
    reference: str


@dataclass(frozen=True)
class CheckReport:
    entries: tuple
    passed: bool


def _computed_quantity(q: Quantity, geom: ClarifierGeometry, op: OperatingPoint) -> float:
    a = geom.area
    if q is Quantity.OVERFLOW_RATE:
        return op.Q_i / a
    if q is Quantity.DEPTH_RANGE:
        return geom.side_water_depth
    if q is Quantity.WEIR_LOADING:
        return op.Q_i / (geom.n_tanks * geom.weir_length)
    if q is Quantity.FEEDWELL_RATIO:
        return geom.feedwell_diameter / geom.diameter
    if q is Quantity.SOLIDS_LOADING:
        return (op.Q_i + op.Q_r) * op.X_f / a
    raise UnknownQuantity(str(q))


def check_design(geom: ClarifierGeometry, op: OperatingPoint,
                 rules: list[DesignRule]) -> CheckReport:
    """Evaluate every rule; bounds are inclusive. Overall pass iff all pass."""
    entries = []
    for rule in rules:
        value = _computed_quantity(rule.quantity, geom, op)
        if units.dimension(rule.unit) != _QUANTITY_DIMENSION[rule.quantity]:
            raise UnknownQuantity(
                f"rule {rule.id!r}: unit {rule.unit!r} incompatible with "
                f"{rule.quantity.value}")
        value_in_rule_unit = units.from_canonical(value, rule.unit)
        ok = True
        if rule.low is not None and value_in_rule_unit < rule.low:
            ok = False
        if rule.high is not None and value_in_rule_unit > rule.high:
            ok = False
        entries.append(RuleCheck(rule.id, rule.quantity.value, value_in_rule_unit,
                                 rule.unit, rule.low, rule.high, ok, rule.reference))
    return CheckReport(tuple(entries), all(e.passed for e in entries))


def load_rules(text: str) -> list[DesignRule]:
    """Parse a rules file: ``id, quantity, low, high, unit, reference`` rows,
    '#' comments allowed, empty low/high for one-sided bounds."""
    rules = []
    for row in csv.reader(l for l in text.splitlines()
                          if l.strip() and not l.lstrip().startswith("#")):
        if [c.strip().lower() for c in row[:2]] == ["id", "quantity"]:
            continue
        if len(row) != 6:
            raise ValueError(f"rules row needs 6 fields: {row!r}")
        rid, quantity, low, high, unit, ref = (c.strip() for c in row)
        try:
            q = Quantity(quantity)
        except ValueError:
            raise UnknownQuantity(f"unknown design quantity {quantity!r}") from None
        rules.append(DesignRule(rid, q,
                                float(low) if low else None,
                                float(high) if high else None,
                                unit, ref))
    return rules


# --- state point ---------------------------------------------------------------


class Loading(enum.Enum):
    UNDERLOADED = "underloaded"
    CRITICAL = "critical"
    OVERLOADED = "overloaded"


@dataclass(frozen=True)
class StatePointResult:
    state_point: tuple          # (X_f, overflow flux at X_f)
    overflow_slope: float       # Q_i / A, m/s
    underflow_slope: float      # Q_r / A, m/s (magnitude of the negative slope)
    X_u: float                  # underflow concentration, kg/m3
    classification: Loading
    limiting_flux: float        # min over [X_f, X_u] of G(X) + (Q_r/A) X
    applied_flux: float         # (Q_i + Q_r) X_f / A


def _loading_margin(model, v_o, v_u, x_f, x_u, n_grid=4001):
    """Closest approach of the gravity-flux curve above the underflow line.

    Returns (margin, G_at_argmin, limiting_flux). The underflow line is
    L(X) = v_u (X_u - X); equivalently the total-flux function
    F(X) = G(X) + v_u X is compared against the applied flux v_u X_u.
    The minimum over [X_f, X_u] is located on a dense grid and refined by
    golden-section search.
    """
    applied = v_u * x_u
    xs = np.linspace(x_f, x_u, n_grid)
    f = xs * settling_velocity(model, xs) + v_u * xs
    i = int(np.argmin(f))
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, n_grid - 1)]
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)

    def fun(x):
        return x * settling_velocity(model, x) + v_u * x

    fc, fd = fun(c), fun(d)
    for _ in range(80):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fun(d)
    x_min = (a + b) / 2.0
    limiting = min(float(f[i]), fun(x_min))
    g_at_min = x_min * settling_velocity(model, x_min)
    return limiting - applied, g_at_min, limiting


def classify(margin: float, g_ref: float) -> Loading:
    rel = margin / max(g_ref, 1e-300)
    if rel > CRITICAL_REL_TOL:
        return Loading.UNDERLOADED
    if rel < -CRITICAL_REL_TOL:
        return Loading.OVERLOADED
    return Loading.CRITICAL


def state_point(model: SettlingModel, geom: ClarifierGeometry,
                op: OperatingPoint) -> StatePointResult:
    """Operating lines, their intersection and the loading classification.

    ``X_f == 0`` degenerates to the origin and is always underloaded.
    """
    if model is None:
        raise ModelMissing("state point needs a calibrated settling model")
    if op.X_f < 0:
        raise NonPositiveFeed("feed concentration must be non-negative")
    a = geom.area
    v_o = op.Q_i / a
    v_u = op.Q_r / a
    if op.X_f == 0:
        return StatePointResult((0.0, 0.0), v_o, v_u, 0.0,
                                Loading.UNDERLOADED, 0.0, 0.0)
    x_u = (op.Q_i + op.Q_r) * op.X_f / op.Q_r
    margin, g_ref, limiting = _loading_margin(model, v_o, v_u, op.X_f, x_u)
    return StatePointResult(
        (op.X_f, v_o * op.X_f), v_o, v_u, x_u,
        classify(margin, g_ref), limiting, v_u * x_u)


def critical_recycle(model: SettlingModel, geom: ClarifierGeometry,
                     op: OperatingPoint, rel_tol: float = 1e-6):
    """Minimal recycle flow whose classification is not overloaded.

    Bisection over ``Q_r`` in ``[1e-6 Q_i, 100 Q_i]`` to ``rel_tol`` relative
    width. Returns ``(q_r_crit, bracket)`` where ``bracket`` is the final
    (overloaded, not-overloaded) pair, or ``(lo, lo)`` when even the smallest
    recycle is not overloaded.
    """
    def cls(qr):
        return state_point(model, geom,
                           OperatingPoint(op.Q_i, qr, op.X_f)).classification

    lo = 1e-6 * op.Q_i
    hi = 100.0 * op.Q_i
    if cls(hi) is Loading.OVERLOADED:
        raise Infeasible("overloaded across the whole recycle search range "
                         "(overflow-line violation is independent of Q_r)")
    if cls(lo) is not Loading.OVERLOADED:
        return lo, (lo, lo)
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if cls(mid) is Loading.OVERLOADED:
            lo = mid
        else:
            hi = mid
    return hi, (lo, hi)


# --- ten-layer dynamic model ---------------------------------------------------


@dataclass(frozen=True)
class TenLayerState:
    """Layer concentrations (index 0 = top layer) of the discretized tank."""

    X: np.ndarray        # kg/m3, length 10
    layer_height: float  # m
    feed_layer: int      # 1-based, 1 = top

    def __post_init__(self):
        x = np.asarray(self.X, dtype=np.float64)
        if x.shape != (N_LAYERS,):
            raise ValueError(f"X must have exactly {N_LAYERS} layers")
        if np.any(x < 0) or not np.all(np.isfinite(x)):
            raise ValueError("layer concentrations must be finite and >= 0")
        if not self.layer_height > 0:
            raise ValueError("layer_height must be positive")
        if not 1 <= self.feed_layer <= N_LAYERS:
            raise ValueError("feed_layer must be in 1..10")
        x.flags.writeable = False
        object.__setattr__(self, "X", x)

    def inventory(self, area: float) -> float:
        """Total solids mass in the tank (kg)."""
        return float(self.X.sum() * self.layer_height * area)


def default_feed_layer(geom: ClarifierGeometry) -> int:
    """Layer containing the feedwell depth; clamped to 1..10."""
    h = geom.side_water_depth / N_LAYERS
    return min(max(int(math.ceil(geom.feedwell_depth / h)), 1), N_LAYERS)


def initial_state(geom: ClarifierGeometry, blanket_height: float = 0.0,
                  blanket_concentration: float = 0.0,
                  feed_layer: int | None = None) -> TenLayerState:
    """Start-of-run state with a uniform sludge blanket of the given height
    and concentration resting on the tank floor."""
    h = geom.side_water_depth / N_LAYERS
    x = np.zeros(N_LAYERS)
    n_blanket = min(int(round(blanket_height / h)), N_LAYERS)
    if n_blanket > 0:
        x[N_LAYERS - n_blanket:] = blanket_concentration
    return TenLayerState(x, h, feed_layer or default_feed_layer(geom))


def _model_args(model: SettlingModel):
    if model.kind is SettlingKind.TAKACS:
        return 1, model.V0, model.r_h, model.r_p
    return 0, model.V0, model.r_h, 0.0


def stable_dt(model: SettlingModel, geom: ClarifierGeometry,
              op: OperatingPoint, q_i_max: float | None = None) -> float:
    """Largest stable explicit-Euler step: 0.5 h / (v_up + v_dn + V0).

    ``V0`` bounds the settling velocity of both model kinds, which makes the
    bound sufficient for layer non-negativity.
    """
    h = geom.side_water_depth / N_LAYERS
    v_up = (q_i_max if q_i_max is not None else op.Q_i) / geom.area
    v_dn = op.Q_r / geom.area
    return 0.5 * h / (v_up + v_dn + model.V0)


def ten_layer_step(state: TenLayerState, model: SettlingModel,
                   geom: ClarifierGeometry, op: OperatingPoint, dt: float,
                   x_threshold: float = DEFAULT_X_THRESHOLD) -> TenLayerState:
    """One explicit-Euler step of the layered mass balance.

    Above the feed layer solids are carried upward with the effluent bulk
    flow, below it downward with the underflow; the gravity flux between
    adjacent layers is limited to ``min(G(X_j), G(X_j+1))`` whenever the
    lower layer exceeds ``x_threshold``.
    """
    h = geom.side_water_depth / N_LAYERS
    if not math.isclose(state.layer_height, h, rel_tol=1e-9):
        raise ValueError("state layer height inconsistent with geometry")
    if dt > stable_dt(model, geom, op) * (1 + 1e-12):
        raise UnstableStep(f"dt={dt} exceeds the stability bound "
                           f"{stable_dt(model, geom, op):.6g}", last_state=state)
    is_tak, v0, r_h, r_p = _model_args(model)
    saved, _ = kernels.tenlayer_integrate(
        state.X, np.array([op.Q_i / geom.area]), op.Q_r / geom.area,
        np.array([op.X_f]), state.feed_layer - 1, dt, h,
        is_tak, v0, r_h, r_p, x_threshold, 1, 1)
    return TenLayerState(saved[0], h, state.feed_layer)


@dataclass(frozen=True)
class TenLayerTrajectory:
    times: np.ndarray    # s, includes t=0
    states: np.ndarray   # (len(times), 10)
    layer_height: float
    feed_layer: int
    steady: bool
    final_dxdt_max: float


def ten_layer_simulate(init: TenLayerState, model: SettlingModel,
                       geom: ClarifierGeometry, op: OperatingPoint,
                       duration: float, dt: float,
                       save_interval: float | None = None,
                       inflow: TimeSeries | None = None,
                       x_threshold: float = DEFAULT_X_THRESHOLD,
                       steady_tol: float = 1e-9) -> TenLayerTrajectory:
    """Run the ten-layer model for ``duration`` seconds.

    ``inflow`` optionally replaces ``op.Q_i`` with a transient influent-flow
    series (m3/s); it is resampled to the solver step. The steady flag is set
    when the final step's max |dX/dt| falls below ``steady_tol`` kg/(m3 s).
    """
    if duration <= 0 or dt <= 0:
        raise ValueError("duration and dt must be positive")
    n_steps = max(1, int(round(duration / dt)))
    a = geom.area
    if inflow is not None:
        rs = resample(inflow, dt)
        q_series = np.interp(np.arange(n_steps) * dt, rs.times - rs.times[0], rs.values)
        v_up = q_series / a
        q_max = float(q_series.max())
    else:
        v_up = np.full(n_steps, op.Q_i / a)
        q_max = op.Q_i
    bound = stable_dt(model, geom, op, q_i_max=q_max)
    if dt > bound * (1 + 1e-12):
        raise UnstableStep(f"dt={dt} exceeds the stability bound {bound:.6g}",
                           last_state=init)
    stride = max(1, int(round((save_interval or dt) / dt)))
    is_tak, v0, r_h, r_p = _model_args(model)
    saved, last_dxdt = kernels.tenlayer_integrate(
        init.X, v_up, op.Q_r / a, np.full(n_steps, op.X_f),
        init.feed_layer - 1, dt, geom.side_water_depth / N_LAYERS,
        is_tak, v0, r_h, r_p, x_threshold, n_steps, stride)
    save_steps = [s for s in range(stride, n_steps + 1, stride)]
    if not save_steps or save_steps[-1] != n_steps:
        save_steps.append(n_steps)
    times = np.concatenate([[0.0], np.array(save_steps, dtype=np.float64) * dt])
    states = np.vstack([init.X[None, :], saved])
    return TenLayerTrajectory(times, states, init.layer_height,
                              init.feed_layer, bool(last_dxdt < steady_tol),
                              float(last_dxdt))


def sludge_blanket_height(state: TenLayerState, geom: ClarifierGeometry,
                          x_threshold: float) -> float:
    """Height above the floor of the top interface of the topmost layer at or
    above the threshold concentration; 0 when no layer qualifies."""
    if not x_threshold > 0:
        raise ValueError("threshold must be positive")
    above = np.nonzero(state.X >= x_threshold)[0]
    if above.size == 0:
        return 0.0
    return float((N_LAYERS - above[0]) * state.layer_height)


def export_trajectory_csv(traj: TenLayerTrajectory, geom: ClarifierGeometry,
                          sbh_threshold: float = 2.5) -> bytes:
    """Wide-format CSV: t, X1..X10 (top to bottom), SBH."""
    buf = io.StringIO()
    buf.write("t," + ",".join(f"X{j}" for j in range(1, N_LAYERS + 1)) + ",SBH\n")
    for t, row in zip(traj.times, traj.states):
        st = TenLayerState(row, traj.layer_height, traj.feed_layer)
        sbh = sludge_blanket_height(st, geom, sbh_threshold)
        buf.write(",".join(repr(float(v)) for v in (t, *row, sbh)) + "\n")
    return buf.getvalue().encode()
