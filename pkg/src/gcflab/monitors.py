"""Diagnostics for the primal/polar pair along a Gauss curvature flow.

Notation: ``K`` is the evolving body, ``K*`` its polar, ``phi*`` the boundary
point of ``K*`` with normal ``u``. In support form ``<phi*, nu*> = s*`` and
``|phi*|^2 = s*^2 + |grad s*|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from . import convex_body as cb
from . import sphere_grid as sg

BAND_WINDOW = 0.95


@dataclass
class DiagnosticsRecord:
    """One row of the diagnostics time series.

    ``volume``, ``min_s``/``max_s`` and ``min_K``/``max_K`` describe the body
    whose support function is integrated (``K*`` for the dual flow, ``K``
    otherwise). The remaining fields always refer to the pair ``(K, K*)``.
    """

    t: float
    volume: float
    min_s: float
    max_s: float
    min_K: float
    max_K: float
    gamma: float
    lam: float
    chi_max: float
    roundness: float
    s_star_min: float
    s_star_max: float
    Kstar_max: float
    K_min: float
    primal_volume: float
    primal_min_s: float


@dataclass(frozen=True)
class DualityReport:
    max_deviation: float
    mean_deviation: float
    worst_node: tuple
    worst_direction: np.ndarray


@dataclass
class BoundTracks:
    """Scaled curvature and support tracks against an extinction time."""

    t: np.ndarray
    T_hat: float
    s_star_min: np.ndarray
    s_star_max: np.ndarray
    Kstar_max: np.ndarray
    K_min: np.ndarray
    valid: np.ndarray

    @property
    def s_star_ratio(self):
        v = self.valid
        return float(np.max(self.s_star_max[v]) / np.min(self.s_star_min[v]))

    @property
    def K_floor(self):
        return float(np.min(self.K_min[self.valid]))

    @property
    def Kstar_ceiling(self):
        return float(np.max(self.Kstar_max[self.valid]))


@dataclass
class ChiTracker:
    """Running state for the chi monitor: the smallest gamma seen so far
    and the coefficient that makes chi negative at the first snapshot."""

    n: int
    gamma_min: float = 1.0
    lambda_zero: float | None = None
    history: list = field(default_factory=list)

    def update(self, polar_body):
        gamma = gamma_of(polar_body)
        self.gamma_min = min(self.gamma_min, gamma)
        if self.lambda_zero is None:
            self.lambda_zero = chi_balance(polar_body)
        lam = max(lambda_threshold(self.n, self.gamma_min), 1.05 * self.lambda_zero)
        self.history.append((gamma, lam))
        return gamma, lam


# -- pointwise monitors ------------------------------------------------------


DUALITY_OVERSAMPLE = {2: 4, 3: 1}


def duality_report(body, oversample=None):
    """Check (K/s^{n+1})(x) * (K*/s*^{n+1})(x*) = 1 at paired boundary points.

    For the node ``u`` the primal point is ``x = phi(u)`` and its partner
    on the polar boundary is ``x* = u / s(u)``, so that ``<x, x*> = 1``.
    The normal of ``K*`` at ``x*`` is ``phi(u)/|phi(u)|``; the polar factor
    is read off the polar body at that direction by interpolation.

    The polar body is built on a grid ``oversample`` times finer: where
    ``K`` is sharply curved, ``s*`` varies on a much shorter angular scale
    than ``s``.
    """
    n = body.n
    m = DUALITY_OVERSAMPLE[n] if oversample is None else int(oversample)
    geo = cb.geometry(body)
    star = cb.polar(cb.upsample(body, m))
    sigma_star = cb.sigma_from_support(star)
    w = geo.points / geo.point_norm[..., None]
    sig_w = sg.resample(star.grid, sigma_star, w)
    s_w = sg.resample(star.grid, star.values, w)
    primal = 1.0 / (geo.sigma * body.values ** (n + 1))
    dual = 1.0 / (sig_w * s_w ** (n + 1))
    dev = np.abs(primal * dual - 1.0)
    worst = np.unravel_index(int(np.argmax(dev)), dev.shape)
    return DualityReport(
        max_deviation=float(dev.max()),
        mean_deviation=float(dev.mean()),
        worst_node=tuple(int(i) for i in worst),
        worst_direction=body.grid.nodes[worst],
    )


GAMMA_REFINE = 8


def gamma_of(polar_body):
    """Largest gamma with gamma |phi*| <= <phi*, nu*> on the polar boundary.

    The ratio s*/sqrt(s*^2 + |grad s*|^2) is minimized over the nodes and,
    on the circle, also over a finer sampling of the trigonometric
    interpolant, since the minimum generally falls between nodes.
    """
    ratio = polar_body.values / np.sqrt(cb.point_norm_sq(polar_body))
    gamma = float(ratio.min())
    grid = polar_body.grid
    if grid.n == 2:
        N = grid.shape[0] * GAMMA_REFINE
        theta = np.arange(N) * (2 * np.pi / N)
        f, ft, _ = sg.SphereInterpolant(grid, polar_body.values).partials(theta[:, None])
        gamma = min(gamma, float(np.min(f / np.sqrt(f * f + ft * ft))))
    return min(1.0, gamma)


def lambda_threshold(n, gamma):
    """((2n^2+5n+2) / ((n-1) gamma^((4n+8)/(n-1) + 2n + 4)))^(n-1)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    expo = (4 * n + 8) / (n - 1) + 2 * n + 4
    return ((2 * n * n + 5 * n + 2) / ((n - 1) * gamma**expo)) ** (n - 1)


def chi_field(polar_body, lam):
    """chi = |phi*|^{n+1} - lam * (dual speed); returns ``(chi, chi.max())``."""
    n = polar_body.n
    norm = np.sqrt(cb.point_norm_sq(polar_body))
    chi = norm ** (n + 1) - lam * cb.dual_speed(polar_body)
    return chi, float(chi.max())


def chi_balance(polar_body):
    """Smallest coefficient for which chi <= 0 everywhere."""
    n = polar_body.n
    norm = np.sqrt(cb.point_norm_sq(polar_body))
    return float(np.max(norm ** (n + 1) / cb.dual_speed(polar_body)))


def curvature_bound_holds(polar_body, lam):
    """Pointwise |phi*|^{n-1} <= lam / K*, the conclusion chi < 0 implies."""
    n = polar_body.n
    norm = np.sqrt(cb.point_norm_sq(polar_body))
    return norm ** (n - 1) <= lam * cb.sigma_from_support(polar_body)


def roundness(state):
    """max/min of the recentred (and volume-normalized) support function."""
    body = getattr(state, "body", state)
    if isinstance(body, cb.RadialField):
        body = cb.support_from_radial(body)
    body = cb.recentre(body)
    return float(body.values.max() / body.values.min())


def polar_hessian_check(body):
    """Worst relative mismatch between det(Hess s* + s* g)/det g on the polar
    support field and ((w / r^3)^{n-1}) det h / det g assembled from the
    radial function r = 1/s* of ``body`` (w = sqrt(r^2 + |grad r|^2))."""
    n = body.n
    star = cb.polar(body)
    lhs = cb.sigma_from_support(star)
    rad = cb.radial_from_support(body)
    geo = cb.geometry_from_radial(rad)
    r = rad.values
    rhs = (geo.slope / r**3) ** (n - 1) * sg.det_over_metric(body.grid, geo.second_form)
    return float(np.max(np.abs(lhs - rhs) / np.abs(lhs)))


# -- per-snapshot assembly ----------------------------------------------------


def body_pair(kind, field):
    """``(K, K*)`` as support fields for a flow state's body."""
    if kind == "dual":
        return cb.polar(field), field
    if kind == "radial":
        K = cb.support_from_radial(field)
        return K, cb.polar(K)
    return field, cb.polar(field)


def diagnose(t, kind, field, tracker):
    K, star = body_pair(kind, field)
    gK = cb.geometry(K)
    gS = cb.geometry(star)
    evolved, ge = (star, gS) if kind == "dual" else (K, gK)
    gamma, lam = tracker.update(star)
    _, chi_max = chi_field(star, lam)
    return DiagnosticsRecord(
        t=float(t),
        volume=ge.volume,
        min_s=float(evolved.values.min()),
        max_s=float(evolved.values.max()),
        min_K=float(ge.gauss_curvature.min()),
        max_K=float(ge.gauss_curvature.max()),
        gamma=gamma,
        lam=lam,
        chi_max=chi_max,
        roundness=roundness(K),
        s_star_min=float(star.values.min()),
        s_star_max=float(star.values.max()),
        Kstar_max=float(gS.gauss_curvature.max()),
        K_min=float(gK.gauss_curvature.min()),
        primal_volume=gK.volume,
        primal_min_s=float(K.values.min()),
    )


def bound_tracks(traj, T_hat=None):
    """Scaled observables s*(T-t)^{1/n}, K*(T-t)^{-(n-1)/n} and
    K(T-t)^{(n-1)/n} per snapshot, flagged valid for t <= 0.95 T."""
    T_hat = traj.T_hat if T_hat is None else T_hat
    rows = traj.diagnostics
    t = np.array([d.t for d in rows])
    if T_hat is None or not T_hat > t[-1]:
        raise ValueError("extinction estimate must exceed the last snapshot time")
    n = traj.n
    tau = T_hat - t
    return BoundTracks(
        t=t,
        T_hat=float(T_hat),
        s_star_min=np.array([d.s_star_min for d in rows]) * tau ** (1 / n),
        s_star_max=np.array([d.s_star_max for d in rows]) * tau ** (1 / n),
        Kstar_max=np.array([d.Kstar_max for d in rows]) * tau ** (-(n - 1) / n),
        K_min=np.array([d.K_min for d in rows]) * tau ** ((n - 1) / n),
        valid=t <= BAND_WINDOW * T_hat,
    )


def record_names():
    return [f.name for f in fields(DiagnosticsRecord)]
