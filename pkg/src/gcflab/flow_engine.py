"""Time stepping for the Gauss curvature flow and its two reformulations.

Three pointwise evolution laws are integrated on a fixed sphere grid:

``primal``
    support function of K_t, ds/dt = -1/sigma.
``radial``
    radial function of K_t, dr/dt = -(sqrt(r^2 + |grad r|^2) / r) K, with
    the Gauss curvature K taken from the radial description directly.
``dual``
    support function of the polar body, ds*/dt = s*^{n+2} sigma* /
    (s*^2 + |grad s*|^2)^{n/2}.

The driver composes classical RK4 stages with an adaptive step bounded by
both the relative motion of the body and the explicit stability limit of
the diffusion the curvature term carries.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import convex_body as cb
from . import monitors
from . import sphere_grid as sg

logger = logging.getLogger(__name__)

FLOW_KINDS = ("primal", "radial", "dual")
UNIT_BALL_VOLUME = {2: np.pi, 3: 4.0 * np.pi / 3.0}


@dataclass
class FlowConfig:
    n: int
    resolution: list
    flow: str = "primal"
    initial: dict = field(default_factory=lambda: {"kind": "ball", "radius": 1.0})
    cfl_factor: float = 0.25
    eps_stop: float = 0.05
    snapshot_every: int = 50
    recentre: bool = True
    normalize: bool = False
    t_end: float | None = None
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError(f"n: unsupported dimension {self.n}")
        if self.flow not in FLOW_KINDS:
            raise ValueError(f"flow: expected one of {FLOW_KINDS}, got {self.flow!r}")
        if not 0 < self.cfl_factor <= 1:
            raise ValueError(f"cfl_factor: must lie in (0, 1], got {self.cfl_factor}")
        if not 0 < self.eps_stop < 0.5:
            raise ValueError(f"eps_stop: must lie in (0, 0.5), got {self.eps_stop}")
        if int(self.snapshot_every) < 1:
            raise ValueError("snapshot_every: must be a positive integer")
        if self.t_end is not None and self.t_end < 0:
            raise ValueError("t_end: must be non-negative")
        self.resolution = [int(v) for v in np.atleast_1d(self.resolution)]


@dataclass(frozen=True)
class FlowState:
    t: float
    body: object
    step: int = 0


@dataclass
class Trajectory:
    config: FlowConfig
    snapshots: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    T_hat: float | None = None
    T_uncertainty: float | None = None
    termination: str = "running"
    message: str = ""

    @property
    def n(self):
        return self.config.n

    @property
    def kind(self):
        return self.config.flow

    @property
    def times(self):
        return np.array([s.t for s in self.snapshots])

    @property
    def final(self):
        return self.snapshots[-1]


# -- right-hand sides ------------------------------------------------------------


def _primal_terms(body):
    rho = cb.check_convex(body)
    sigma = sg.det_over_metric(body.grid, body.curvature_form)
    speed = -1.0 / sigma
    diffusivity = float(np.max(1.0 / (sigma * rho)))
    return speed, diffusivity


def _dual_terms(body):
    rho = cb.check_convex(body)
    speed = cb.dual_speed(body)
    diffusivity = float(np.max(speed / rho))
    return speed, diffusivity


def _radial_terms(rad):
    geo = cb.geometry_from_radial(rad)
    kappa = cb.principal_curvatures(rad, geo)
    tol = cb.EPS_CONVEX / float(np.max(rad.values))
    if not np.all(kappa[..., 0] > tol):
        node = np.unravel_index(int(np.argmin(kappa[..., 0])), rad.grid.shape)
        raise cb.ConvexityLost(tuple(int(i) for i in node), float(kappa[..., 0].min()))
    r = rad.values
    speed = -(geo.slope / r) * geo.gauss_curvature
    diffusivity = float(np.max(geo.gauss_curvature / kappa[..., 0] / r**2))
    return speed, diffusivity


_TERMS = {"primal": _primal_terms, "dual": _dual_terms, "radial": _radial_terms}


def flow_speed(kind, body):
    """Pointwise time derivative of the stored function for flow ``kind``."""
    speed, _ = _TERMS[kind](body)
    return sg.polar_filter(body.grid, speed)


def _dt_from_terms(body, speed, diffusivity, cfl_factor):
    motion = float(np.min(np.abs(body.values)) / (body.n * np.max(np.abs(speed))))
    lam = sg.laplacian_spectral_radius(body.grid)
    stability = sg.RK4_REAL_STABILITY / (diffusivity * lam)
    return cfl_factor * min(motion, stability)


def stable_dt(kind, body, cfl_factor=0.25):
    """c * min(relative-motion bound, explicit stability bound).

    The motion bound is min|f| / (n max|df/dt|), which for the primal flow
    is min(sigma) min(s) / n. The stability bound keeps RK4 inside its real
    stability interval for the linearized curvature diffusion.
    """
    speed, diffusivity = _TERMS[kind](body)
    return _dt_from_terms(body, speed, diffusivity, cfl_factor)


def _speed_and_dt(kind, body, cfl_factor):
    speed, diffusivity = _TERMS[kind](body)
    dt = _dt_from_terms(body, speed, diffusivity, cfl_factor)
    return sg.polar_filter(body.grid, speed), dt


def _euler(state, dt, kind):
    if dt == 0:
        return state
    body = state.body
    new = body.with_values(body.values + dt * flow_speed(kind, body))
    return FlowState(state.t + dt, new, state.step + 1)


def step_primal(state, dt):
    """Forward Euler substep of ds/dt = -1/sigma."""
    return _euler(state, dt, "primal")


def step_radial(state, dt):
    """Forward Euler substep of dr/dt = -(sqrt(r^2+|grad r|^2)/r) K."""
    return _euler(state, dt, "radial")


def step_dual(state, dt):
    """Forward Euler substep of the polar flow (expansion)."""
    return _euler(state, dt, "dual")


def rk4_step(state, dt, kind, k1=None):
    """One classical RK4 step of flow ``kind``; ``k1`` may be passed in when
    the speed at ``state`` is already known."""
    if dt == 0:
        return state
    body = state.body
    y = body.values
    F = lambda v: flow_speed(kind, body.with_values(v))  # noqa: E731
    if k1 is None:
        k1 = F(y)
    k2 = F(y + 0.5 * dt * k1)
    k3 = F(y + 0.5 * dt * k2)
    k4 = F(y + dt * k3)
    new = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return FlowState(state.t + dt, body.with_values(new), state.step + 1)


def integrate_to(state, t_end, kind, dt_max=None, cfl_factor=0.25):
    """Integrate with RK4 from ``state.t`` to exactly ``t_end``."""
    while state.t < t_end:
        k1, dt = _speed_and_dt(kind, state.body, cfl_factor)
        if dt_max is not None:
            dt = min(dt, dt_max)
        dt = min(dt, t_end - state.t)
        state = rk4_step(state, dt, kind, k1)
        if t_end - state.t < 1e-14 * max(1.0, t_end):
            state = FlowState(t_end, state.body, state.step)
    return state


# -- normalization and extinction -------------------------------------------------


def normalize(state):
    """Rescale to the volume of the unit ball."""
    body = state.body if isinstance(state, FlowState) else state
    support = cb.support_from_radial(body) if isinstance(body, cb.RadialField) else body
    factor = (UNIT_BALL_VOLUME[body.n] / cb.volume(support)) ** (1.0 / body.n)
    scaled = body.with_values(body.values * factor)
    if isinstance(state, FlowState):
        return replace(state, body=scaled)
    return scaled


def estimate_extinction(traj):
    """Extinction time from the volume decay, cross-checked by the size decay.

    The volume of ``K_t`` decreases at the constant rate |S^{n-1}|, so a
    least-squares line through (t, V) meets zero at the estimate. The
    second estimate extrapolates (min s)^n, which is asymptotically linear
    in t, from the last quarter of the snapshots. The uncertainty is their
    disagreement.
    """
    rows = traj.diagnostics
    if len(rows) < 3:
        raise ValueError("need at least 3 snapshots to estimate the extinction time")
    n = traj.n
    t = np.array([d.t for d in rows])
    V = np.array([d.primal_volume for d in rows])
    slope, icpt = np.polyfit(t, V, 1)
    T_volume = -icpt / slope
    tail = max(3, len(rows) // 4)
    size = np.array([d.primal_min_s for d in rows[-tail:]]) ** n
    slope_s, icpt_s = np.polyfit(t[-tail:], size, 1)
    T_size = -icpt_s / slope_s if slope_s < 0 else np.inf
    return float(T_volume), float(abs(T_volume - T_size))


# -- driver ---------------------------------------------------------------------------


def _size(kind, body):
    if kind == "dual":
        return 1.0 / float(np.max(body.values))
    return float(np.min(body.values))


def initial_field(kind, support):
    """State body for ``kind`` from the support field of the initial K."""
    if kind == "dual":
        return cb.polar(support)
    if kind == "radial":
        return cb.radial_from_support(support)
    return support


def run_flow(config, initial):
    """Integrate ``config.flow`` from the support field ``initial`` of K_0.

    Stops when the body has shrunk below ``eps_stop`` of its initial size,
    at ``t_end`` if given, or when strict convexity is lost (the trajectory
    is returned and flagged in that case).
    """
    kind = config.flow
    cb._require_origin_inside(initial)
    if kind == "primal" and config.recentre:
        initial = cb.recentre(initial)
    body = initial_field(kind, initial)
    traj = Trajectory(config)
    tracker = monitors.ChiTracker(config.n)
    state = FlowState(0.0, body, 0)
    size0 = _size(kind, body)

    def record(st):
        traj.snapshots.append(st)
        traj.diagnostics.append(monitors.diagnose(st.t, kind, st.body, tracker))

    record(state)
    t_end = config.t_end
    if t_end is not None and t_end <= 0:
        traj.termination = "t_end"
    while traj.termination == "running":
        try:
            k1, dt = _speed_and_dt(kind, state.body, config.cfl_factor)
            if t_end is not None:
                dt = min(dt, t_end - state.t)
            if dt < 1e-14 * max(1.0, state.t):
                traj.termination = "dt_underflow"
                break
            state = rk4_step(state, dt, kind, k1)
            if t_end is not None and t_end - state.t < 1e-14 * max(1.0, t_end):
                state = FlowState(t_end, state.body, state.step)
            stop = _size(kind, state.body) < config.eps_stop * size0
            reached = t_end is not None and state.t >= t_end
            exhausted = state.step >= config.max_steps
            if stop or reached or exhausted or state.step % config.snapshot_every == 0:
                if kind == "primal" and config.recentre:
                    state = replace(state, body=cb.recentre(state.body))
                record(state)
            if stop:
                traj.termination = "stop_rule"
            elif reached:
                traj.termination = "t_end"
            elif exhausted:
                traj.termination = "max_steps"
        except cb.ConvexityLost as exc:
            logger.warning("run halted at t=%.6g: %s", state.t, exc)
            traj.termination = "convexity_lost"
            traj.message = str(exc)
    if len(traj.diagnostics) >= 3:
        traj.T_hat, traj.T_uncertainty = estimate_extinction(traj)
    return traj
