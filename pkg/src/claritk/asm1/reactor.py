"""Idealized ASM1 reactors: a single CSTR and a tanks-in-series chain.

The 3D scalar-transport equation reduces in a completely mixed volume to

    d phi/dt = (Q/V) (phi_in - phi) + S(phi)

which is integrated with a fixed-step classical RK4. Components are clamped
at zero after every step (alkalinity excepted, which may legitimately go
negative); clamp events are counted and reported.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..errors import UnstableStep
from ..timeseries import TimeSeries
from .matrix import ALK_INDEX, COMPONENTS, IDX, N_COMPONENTS, source_terms
from .params import Asm1Params

DEFAULT_DT_MAX = 60.0  # s; documented stiffness guard for plant-typical rates


@dataclass(frozen=True)
class Asm1State:
    """Concentrations of the 13 ASM1 components, g/m3 (component units)."""

    S_I: float = 0.0
    S_S: float = 0.0
    X_I: float = 0.0
    X_S: float = 0.0
    X_BH: float = 0.0
    X_BA: float = 0.0
    X_P: float = 0.0
    S_O: float = 0.0
    S_NO: float = 0.0
    S_NH: float = 0.0
    S_ND: float = 0.0
    X_ND: float = 0.0
    S_ALK: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v):
                raise ValueError(f"{f.name} must be finite")
            if f.name != "S_ALK" and v < 0:
                raise ValueError(f"{f.name} must be non-negative")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in COMPONENTS])

    @classmethod
    def from_array(cls, arr) -> "Asm1State":
        arr = np.asarray(arr, dtype=np.float64)
        return cls(**{name: float(arr[i]) for i, name in enumerate(COMPONENTS)})


@dataclass(frozen=True)
class ReactorTrajectory:
    times: np.ndarray     # s
    states: np.ndarray    # (len(times), 13) single tank or (len, n, 13) chain
    clamp_events: int
    steady: bool


def _inflow_function(inflow):
    """Return phi_in(t) as an array-valued callable.

    TimeSeries inflow components are taken relative to their first sample
    time and held at the boundary values outside the covered span.
    """
    if isinstance(inflow, Asm1State):
        const = inflow.as_array()
        return lambda t: const
    if isinstance(inflow, dict):
        base = np.zeros(N_COMPONENTS)
        series = {}
        for name, value in inflow.items():
            if name not in IDX:
                raise ValueError(f"unknown ASM1 component {name!r}")
            if isinstance(value, TimeSeries):
                series[IDX[name]] = value
            else:
                base[IDX[name]] = float(value)

        def fun(t):
            phi = base.copy()
            for idx, ts in series.items():
                phi[idx] = np.interp(t, ts.times - ts.times[0], ts.values)
            return phi

        return fun
    raise TypeError("inflow must be an Asm1State or a component->value/TimeSeries dict")


def _rk4_run(p, phi0, phi_in, q, v, n_steps, dt, hold_so, save_stride):
    """Shared fixed-step integrator; ``phi0`` is (13,) or (n_tanks, 13)."""
    phi = phi0.copy()
    dil = q / v  # scalar or (n_tanks,) broadcast against rows
    clamps = 0
    saved = [phi.copy()]
    deriv_norm = np.inf

    def rhs(t, y):
        if y.ndim == 1:
            s = source_terms(y, p)
            adv = dil * (phi_in(t) - y)
        else:
            s = np.stack([source_terms(row, p) for row in y])
            adv = (dil[:, None]) * (phi_in(t, y) - y)
        if hold_so is not None:
            if y.ndim == 1:
                s = s.copy()
                s[IDX["S_O"]] = 0.0
                adv = adv.copy()
                adv[IDX["S_O"]] = 0.0
            else:
                s[:, IDX["S_O"]] = 0.0
                adv[:, IDX["S_O"]] = 0.0
        return adv + s

    for step in range(n_steps):
        t = step * dt
        k1 = rhs(t, phi)
        k2 = rhs(t + dt / 2.0, phi + dt / 2.0 * k1)
        k3 = rhs(t + dt / 2.0, phi + dt / 2.0 * k2)
        k4 = rhs(t + dt, phi + dt * k3)
        incr = (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        phi = phi + incr
        if not np.all(np.isfinite(phi)):
            raise UnstableStep(
                f"NaN/Inf at t={t + dt:.6g} s; aborting",
                last_state=saved[-1],
                trajectory=np.array(saved))
        neg = phi < 0.0
        if phi.ndim == 1:
            neg[ALK_INDEX] = False
        else:
            neg[:, ALK_INDEX] = False
        if np.any(neg):
            clamps += int(np.count_nonzero(neg))
            phi = np.where(neg, 0.0, phi)
        if (step + 1) % save_stride == 0 or step == n_steps - 1:
            saved.append(phi.copy())
        if step == n_steps - 1:
            deriv_norm = float(np.max(np.abs(incr))) / dt
    return np.array(saved), clamps, deriv_norm


def cstr_simulate(p: Asm1Params, inflow, q: float, v: float, init: Asm1State,
                  duration: float, dt: float, hold_so: float | None = None,
                  save_interval: float | None = None,
                  dt_max: float = DEFAULT_DT_MAX,
                  steady_tol: float = 1e-9) -> ReactorTrajectory:
    """Integrate one completely mixed reactor.

    ``inflow`` is a constant :class:`Asm1State` or a dict mapping component
    names to constants or :class:`TimeSeries` (seconds, g/m3).
    ``hold_so`` pins dissolved oxygen at the initial value (the usual rig for
    aerated test cases); default off. ``dt`` must not exceed the hydraulic
    residence time ``V/Q`` nor ``dt_max``.
    """
    if q <= 0 or v <= 0:
        raise ValueError("Q and V must be positive")
    if dt <= 0 or duration <= 0:
        raise ValueError("dt and duration must be positive")
    if dt > min(v / q, dt_max) * (1 + 1e-12):
        raise UnstableStep(f"dt={dt} exceeds min(V/Q={v / q:.6g}, dt_max={dt_max})")
    n_steps = max(1, int(round(duration / dt)))
    stride = max(1, int(round((save_interval or dt) / dt)))
    phi0 = init.as_array()
    if hold_so is not None:
        phi0[IDX["S_O"]] = hold_so
    phi_in = _inflow_function(inflow)
    states, clamps, deriv = _rk4_run(p, phi0, phi_in, q, v, n_steps, dt,
                                     hold_so, stride)
    times = _saved_times(n_steps, dt, stride)
    return ReactorTrajectory(times, states, clamps, bool(deriv < steady_tol))


def _saved_times(n_steps, dt, stride):
    steps = list(range(stride, n_steps + 1, stride))
    if not steps or steps[-1] != n_steps:
        steps.append(n_steps)
    return np.concatenate([[0.0], np.array(steps, dtype=np.float64) * dt])


def tanks_in_series_simulate(p: Asm1Params, n_tanks: int, volumes, q: float,
                             recycle: float, inflow, init, duration: float,
                             dt: float, hold_so: float | None = None,
                             save_interval: float | None = None,
                             dt_max: float = DEFAULT_DT_MAX,
                             steady_tol: float = 1e-9) -> ReactorTrajectory:
    """Chain of CSTRs with optional internal recycle from the last tank back
    to the first (recycle flow = ``recycle * q``).

    ``volumes`` is one volume per tank; ``init`` a list of per-tank states.
    Returned ``states`` has shape (n_saves, n_tanks, 13).
    """
    if n_tanks < 1:
        raise ValueError("n_tanks must be >= 1")
    if recycle < 0:
        raise ValueError("recycle fraction must be non-negative")
    vols = np.asarray(volumes, dtype=np.float64)
    if vols.shape != (n_tanks,) or np.any(vols <= 0):
        raise ValueError("need one positive volume per tank")
    if q <= 0:
        raise ValueError("Q must be positive")
    states0 = [s if isinstance(s, Asm1State) else Asm1State.from_array(s)
               for s in init]
    if len(states0) != n_tanks:
        raise ValueError("need one initial state per tank")
    q_through = q * (1.0 + recycle)
    if dt <= 0 or duration <= 0:
        raise ValueError("dt and duration must be positive")
    tau_min = float(np.min(vols) / q_through)
    if dt > min(tau_min, dt_max) * (1 + 1e-12):
        raise UnstableStep(f"dt={dt} exceeds min(V/Q={tau_min:.6g}, dt_max={dt_max})")
    n_steps = max(1, int(round(duration / dt)))
    stride = max(1, int(round((save_interval or dt) / dt)))
    phi0 = np.vstack([s.as_array() for s in states0])
    if hold_so is not None:
        phi0[:, IDX["S_O"]] = hold_so
    ext_in = _inflow_function(inflow)

    def chain_inflow(t, y):
        # tank 0 blends fresh feed with the internal recycle; the rest see
        # the tank upstream
        mixed = np.empty_like(y)
        mixed[0] = (q * ext_in(t) + recycle * q * y[-1]) / q_through
        mixed[1:] = y[:-1]
        return mixed

    states, clamps, deriv = _rk4_run(p, phi0, chain_inflow,
                                     q_through * np.ones(n_tanks), vols,
                                     n_steps, dt, hold_so, stride)
    times = _saved_times(n_steps, dt, stride)
    return ReactorTrajectory(times, states, clamps, bool(deriv < steady_tol))


def export_trajectory_csv(traj: ReactorTrajectory, tank: int | None = None) -> bytes:
    """CSV with ``t`` plus the 13 component columns (one tank at a time)."""
    states = traj.states
    if states.ndim == 3:
        states = states[:, tank if tank is not None else 0, :]
    lines = ["t," + ",".join(COMPONENTS)]
    for t, row in zip(traj.times, states):
        lines.append(",".join(repr(float(v)) for v in (t, *row)))
    return ("\n".join(lines) + "\n").encode()
